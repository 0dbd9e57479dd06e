"""Command line entry point: ``rgbd-facekit {synth,enroll,recognize,evaluate,bench}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal consistency
failure (serial/parallel equivalence gate).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager

from . import features
from .classify import ModelFormatError, TrainConfig, load_model
from .pipeline import DataError, RunConfig, run_bench, run_enroll, run_evaluate, run_recognize, write_eval_csv
from .synthdata import SceneError, generate, load_scene
from .tracking import TrackerConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _grid(text: str) -> tuple[int, int]:
    try:
        kx, ky = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 2x2, got {text!r}") from None
    if kx < 1 or ky < 1:
        raise argparse.ArgumentTypeError("grid dimensions must be >= 1")
    return kx, ky


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--source", choices=("depth", "gray"), default="depth")
    p.add_argument("--roi-size", type=int, default=200)
    p.add_argument("--grid", type=_grid, default=(1, 1), help="LBP block grid, e.g. 2x2")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--tracked", dest="tracked", action="store_true", default=True)
    mode.add_argument("--single-frame", dest="tracked", action="store_false")
    p.add_argument("--lambda", dest="lam", type=float, default=TrainConfig.lam)
    p.add_argument("--epochs", type=_positive_int, default=TrainConfig.epochs)
    p.add_argument("--seed", type=int, default=TrainConfig.seed)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--max-distance", type=float, default=TrackerConfig.max_distance)
    p.add_argument("--max-missed", type=int, default=TrackerConfig.max_missed)
    p.add_argument("--max-samples", type=_positive_int, default=TrackerConfig.max_samples)


def _run_config(a) -> RunConfig:
    return RunConfig(source=a.source, roi_size=a.roi_size, grid=a.grid, tracked=a.tracked,
                     workers=a.workers,
                     tracker=TrackerConfig(a.max_distance, a.max_missed, a.max_samples),
                     train=TrainConfig(a.lam, a.epochs, a.seed))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rgbd-facekit", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic RGB-D dataset from a scene file")
    p.add_argument("scene")
    p.add_argument("--out", required=True)

    p = sub.add_parser("enroll", help="track faces, build the database and train a model")
    p.add_argument("dataset")
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--out", help="track event log (JSON lines)")
    _run_options(p)

    p = sub.add_parser("recognize", help="label every detected face with a trained model")
    p.add_argument("dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="JSON-lines output (default stdout)")
    p.add_argument("--reject-threshold", type=float, default=float("-inf"))
    _run_options(p)

    p = sub.add_parser("evaluate", help="accuracy for depth/gray x tracked/single-frame")
    p.add_argument("train")
    p.add_argument("test")
    p.add_argument("--out", help="CSV report (default stdout)")
    _run_options(p)

    p = sub.add_parser("bench", help="time serial vs parallel feature extraction")
    p.add_argument("--sizes", type=_int_list, default=[100, 200, 400])
    p.add_argument("--workers", type=_int_list, default=[1, 2, 4, 8])
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--backend", choices=sorted(features.BACKENDS), default=None)
    p.add_argument("--out", help="CSV report (default stdout)")
    return ap


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _cmd_synth(a):
    generate(load_scene(a.scene), a.out)


def _cmd_enroll(a):
    res = run_enroll(a.dataset, _run_config(a), a.model)
    if a.out:
        with _output(a.out) as fh:
            for rec in res.track_log:
                fh.write(json.dumps(rec) + "\n")
    for lab in res.model.labels:
        print(f"{lab}: {len(res.database[lab])} samples", file=sys.stderr)


def _cmd_recognize(a):
    model = load_model(a.model)
    with _output(a.out) as fh:
        for rec in run_recognize(a.dataset, model, _run_config(a), a.reject_threshold):
            fh.write(json.dumps(rec) + "\n")


def _cmd_evaluate(a):
    reports = run_evaluate(a.train, a.test, _run_config(a))
    with _output(a.out) as fh:
        write_eval_csv(reports, fh)


def _cmd_bench(a):
    if a.repetitions < 3:
        raise ValueError("--repetitions must be >= 3")
    report = run_bench(a.sizes, a.workers, a.repetitions, backend=a.backend)
    with _output(a.out) as fh:
        features.write_bench_csv(report, fh)


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = globals()[f"_cmd_{a.command}"]
    try:
        handler(a)
    except features.EquivalenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (DataError, SceneError, ModelFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
