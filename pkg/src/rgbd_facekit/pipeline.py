"""Dataset ingestion, enrollment, recognition, evaluation and benchmarking."""
from __future__ import annotations

import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from . import features
from .classify import UNKNOWN, OvrModel, TrainConfig, predict, save_model, train_ovr
from .detection import AnnotationSet, Detection, detect, load_annotations
from .features import LbpParams
from .imaging import crop, load_color, load_depth, resize, to_gray
from .registration import CalibrationPair, NoDepthSupport, face_depth_roi, load_calibration
from .tracking import TrackerConfig, TrackerState, step

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Malformed or unusable dataset / model combination."""


@dataclass(frozen=True)
class RunConfig:
    source: str = "depth"          # depth | gray
    roi_size: int = 200
    grid: tuple[int, int] = (1, 1)
    tracked: bool = True
    workers: int = 1
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.source not in ("depth", "gray"):
            raise ValueError(f"source must be 'depth' or 'gray', got {self.source!r}")
        if self.roi_size < 3:
            raise ValueError("roi_size must be >= 3")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def params(self) -> LbpParams:
        return LbpParams(grid=tuple(self.grid))


@dataclass
class Dataset:
    root: Path
    n_frames: int
    calibration: CalibrationPair
    annotations: AnnotationSet

    def color(self, i: int) -> np.ndarray:
        return load_color(self.root / f"color_{i:04d}.ppm")

    def depth(self, i: int) -> np.ndarray:
        return load_depth(self.root / f"depth_{i:04d}.pgm")

    def labels(self) -> list[str]:
        return self.annotations.labels()


def open_dataset(root) -> Dataset:
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"{root} is not a directory")
    colors = sorted(p.name for p in root.glob("color_*.ppm"))
    depths = sorted(p.name for p in root.glob("depth_*.pgm"))
    if not colors:
        raise DataError(f"{root}: no color_####.ppm frames")
    if len(colors) != len(depths):
        raise DataError(f"{root}: {len(colors)} color frames but {len(depths)} depth frames")
    n = len(colors)
    for i in range(n):
        if colors[i] != f"color_{i:04d}.ppm" or depths[i] != f"depth_{i:04d}.pgm":
            raise DataError(f"{root}: frame files are not contiguous from 0 (at {i})")
    try:
        cal = load_calibration(root / "calib.txt")
        anns = load_annotations(root / "annotations.csv")
    except (OSError, ValueError) as exc:
        raise DataError(f"{root}: {exc}") from exc
    return Dataset(root, n, cal, anns)


@dataclass
class FaceObservation:
    detection: Detection
    feature: np.ndarray


def frame_observations(ds: Dataset, i: int, cfg: RunConfig,
                       timing: dict | None = None) -> list[FaceObservation]:
    """Detect, register, crop, resize and extract features for one frame."""
    t0 = time.perf_counter()
    color = ds.color(i)
    dets = detect(i, color, ds.annotations)
    t1 = time.perf_counter()
    out = []
    if cfg.source == "depth":
        depth = ds.depth(i)
        ch, cw = color.shape[:2]
    else:
        gray = to_gray(color)
    t_reg = t_feat = 0.0
    for d in dets:
        ta = time.perf_counter()
        if cfg.source == "depth":
            try:
                r = face_depth_roi(d.rect, (cw, ch), depth, ds.calibration)
            except NoDepthSupport:
                log.warning("frame %d: no depth support under %s, detection skipped", i, tuple(d.rect))
                continue
            roi = crop(depth, r)
        else:
            roi = crop(gray, d.rect)
        roi = resize(roi, cfg.roi_size, cfg.roi_size)
        tb = time.perf_counter()
        engine = "parallel" if cfg.workers > 1 else "serial"
        feat = features.extract(roi, cfg.params, engine=engine, workers=cfg.workers)
        tc = time.perf_counter()
        t_reg += tb - ta
        t_feat += tc - tb
        out.append(FaceObservation(d, feat))
    if timing is not None:
        timing["detect"] = timing.get("detect", 0.0) + (t1 - t0)
        timing["registration"] = timing.get("registration", 0.0) + t_reg
        timing["features"] = timing.get("features", 0.0) + t_feat
    return out


@dataclass
class EnrollResult:
    model: OvrModel
    database: dict[str, list]
    track_log: list[dict]


def build_database(ds: Dataset, cfg: RunConfig, timing: dict | None = None):
    """Run detection + tracking over the dataset; returns ``(database, track_log)``."""
    state = TrackerState(cfg.tracker)
    track_log: list[dict] = []
    first: dict[str, np.ndarray] = {}
    for i in range(ds.n_frames):
        obs = frame_observations(ds, i, cfg, timing)
        dets = [o.detection for o in obs]
        feats = [o.feature for o in obs]
        _, events = step(state, i, dets, feats)
        track_log.extend(e.as_dict() for e in events)
        for o in obs:
            if o.detection.label is not None:
                first.setdefault(o.detection.label, o.feature)
    if cfg.tracked:
        return state.database(), track_log
    # "without tracking": one enrollment sample per identity
    db = {lab: [f] for lab, f in first.items()}
    if not db:
        db = {lab: s[:1] for lab, s in state.database().items() if s}
    return db, track_log


def run_enroll(dataset, cfg: RunConfig, model_out=None) -> EnrollResult:
    ds = dataset if isinstance(dataset, Dataset) else open_dataset(dataset)
    if len(ds.labels()) == 1:
        raise DataError(f"need at least 2 labeled identities, found {ds.labels()}")
    db, track_log = build_database(ds, cfg)
    db = {k: v for k, v in db.items() if v}
    if len(db) < 2:
        raise DataError(f"need at least 2 identities with samples, got {sorted(db)}")
    model = train_ovr(db, cfg.train)
    model.grid = tuple(cfg.grid)
    if model_out is not None:
        save_model(model, model_out)
    return EnrollResult(model, db, track_log)


def check_model(model: OvrModel, cfg: RunConfig) -> None:
    if model.feature_length != cfg.params.feature_length or tuple(model.grid) != tuple(cfg.grid):
        raise DataError(f"model grid {model.grid[0]}x{model.grid[1]} "
                        f"({model.feature_length} features) does not match "
                        f"config grid {cfg.grid[0]}x{cfg.grid[1]}")


def run_recognize(dataset, model: OvrModel, cfg: RunConfig,
                  reject_threshold: float = -np.inf, timing: dict | None = None) -> Iterator[dict]:
    """Yield one ``{frame, x, y, w, h, label, score}`` record per recognised face."""
    check_model(model, cfg)
    ds = dataset if isinstance(dataset, Dataset) else open_dataset(dataset)
    for i in range(ds.n_frames):
        for o in frame_observations(ds, i, cfg, timing):
            p = predict(model, o.feature, reject_threshold)
            r = o.detection.rect
            yield dict(frame=i, x=r.x, y=r.y, w=r.w, h=r.h, label=p.label, score=p.score)


@dataclass
class EvalReport:
    source: str
    enrollment: str
    accuracy: float
    correct: int
    total: int
    frames: int
    confusion: dict[str, dict[str, int]]
    timing: dict[str, float]


def evaluate_cell(train: Dataset, test: Dataset, cfg: RunConfig) -> EvalReport:
    timing: dict[str, float] = {}
    t0 = time.perf_counter()
    model = run_enroll(train, cfg).model
    timing["enroll"] = time.perf_counter() - t0
    # ground truth per (frame, rect); skipped detections count as misses
    h, w = test.color(0).shape[:2]
    truth = {}
    for f, rows in test.annotations.items():
        for a in rows:
            r = a.rect.clamp(w, h)
            if a.label is not None and r is not None and f < test.n_frames:
                truth[(f, tuple(r))] = a.label
    predicted = {(r["frame"], (r["x"], r["y"], r["w"], r["h"])): r["label"]
                 for r in run_recognize(test, model, cfg, timing=timing)}
    confusion: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
    correct = 0
    for key, lab in truth.items():
        got = predicted.get(key, UNKNOWN)
        confusion[lab][got] += 1
        correct += got == lab
    total = len(truth)
    return EvalReport(cfg.source, "tracked" if cfg.tracked else "single-frame",
                      correct / total if total else 0.0, correct, total, test.n_frames,
                      {k: dict(v) for k, v in confusion.items()}, timing)


def run_evaluate(train, test, cfg: RunConfig,
                 sources=("depth", "gray"), modes=(True, False)) -> list[EvalReport]:
    """Accuracy for every (feature source, enrollment mode) cell."""
    tr = train if isinstance(train, Dataset) else open_dataset(train)
    te = test if isinstance(test, Dataset) else open_dataset(test)
    if set(tr.labels()) != set(te.labels()):
        raise DataError(f"train labels {tr.labels()} != test labels {te.labels()}")
    reports = []
    for src in sources:
        for tracked in modes:
            cell = RunConfig(source=src, roi_size=cfg.roi_size, grid=cfg.grid, tracked=tracked,
                             workers=cfg.workers, tracker=cfg.tracker, train=cfg.train)
            reports.append(evaluate_cell(tr, te, cell))
    return reports


EVAL_FIELDS = ("source", "enrollment", "accuracy", "correct", "total", "frames")


def write_eval_csv(reports: list[EvalReport], fh) -> None:
    import csv

    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(EVAL_FIELDS)
    for r in reports:
        wr.writerow([r.source, r.enrollment, f"{r.accuracy:.4f}", r.correct, r.total, r.frames])


def run_bench(sizes=(100, 200, 400), worker_counts=(1, 2, 4, 8), repetitions: int = 5,
              backend: str | None = None, **kw):
    return features.bench_extract(sizes, repetitions, worker_counts, backend=backend, **kw)
