"""Serial vs parallel timing of feature extraction, gated on bit-equality."""
from __future__ import annotations

import csv
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

CSV_FIELDS = ("size", "engine", "workers", "median_ms", "speedup_vs_serial")


class EquivalenceError(RuntimeError):
    """Parallel output differed from serial; no timings are reported."""


@dataclass
class BenchReport:
    rows: list[dict] = field(default_factory=list)
    equivalent: bool = True
    backend: str = ""


def _time(fn, repetitions: int) -> float:
    samples = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples) * 1e3


def bench_extract(sizes=(100, 200, 400), repetitions: int = 5, worker_counts=(1, 2, 4, 8),
                  *, backend: str | None = None, extractor=None, seed: int = 0,
                  params=None) -> BenchReport:
    """Median extraction time per (size, engine, workers) on random square ROIs.

    Every parallel configuration is checked against the serial result before
    anything is timed; a mismatch raises :class:`EquivalenceError`.
    """
    from . import BACKEND, extract

    if repetitions < 3:
        raise ValueError("repetitions must be >= 3")
    if extractor is None:
        def extractor(roi, engine="serial", workers=1):
            return extract(roi, params, engine=engine, workers=workers, backend=backend)

    rng = np.random.default_rng(seed)
    rois = {n: rng.integers(0, 256, size=(n, n), dtype=np.uint8) for n in sizes}

    for n, roi in rois.items():
        ref = extractor(roi, engine="serial", workers=1)
        for k in worker_counts:
            got = extractor(roi, engine="parallel", workers=k)
            if not np.array_equal(ref, got):
                raise EquivalenceError(f"parallel({k}) != serial on {n}x{n} ROI")

    report = BenchReport(backend=backend or BACKEND)
    for n, roi in rois.items():
        serial_ms = _time(lambda: extractor(roi, engine="serial", workers=1), repetitions)
        report.rows.append(dict(size=f"{n}x{n}", engine="serial", workers=1,
                                median_ms=serial_ms, speedup_vs_serial=1.0))
        for k in worker_counts:
            ms = _time(lambda: extractor(roi, engine="parallel", workers=k), repetitions)
            report.rows.append(dict(size=f"{n}x{n}", engine="parallel", workers=k,
                                    median_ms=ms, speedup_vs_serial=serial_ms / ms))
    return report


def write_bench_csv(report: BenchReport, fh) -> None:
    wr = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    wr.writeheader()
    for row in report.rows:
        wr.writerow({**row, "median_ms": f"{row['median_ms']:.4f}",
                     "speedup_vs_serial": f"{row['speedup_vs_serial']:.3f}"})
