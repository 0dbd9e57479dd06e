"""3x3 local binary pattern codes and block histogram features.

Two kernel backends provide the inner loops: the compiled ``_lbp_core``
extension and a numpy fallback (``_lbp_py``).  The compiled one is used when
it imports; set ``RGBD_FACEKIT_BACKEND=python`` to force the fallback.  Both
produce identical integers, so the choice only affects speed.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _lbp_py

try:
    from . import _lbp_core
except ImportError:  # extension not built
    _lbp_core = None

BACKENDS = {"python": _lbp_py}
if _lbp_core is not None:
    BACKENDS["compiled"] = _lbp_core


def _default_backend() -> str:
    want = os.environ.get("RGBD_FACEKIT_BACKEND", "").strip().lower()
    if want:
        if want not in BACKENDS:
            raise ImportError(f"RGBD_FACEKIT_BACKEND={want!r} not available "
                              f"(have: {', '.join(sorted(BACKENDS))})")
        return want
    return "compiled" if "compiled" in BACKENDS else "python"


BACKEND = _default_backend()

# weights of the 3x3 window, row-major, centre unused
WEIGHTS = np.array([[1, 2, 4], [128, 0, 8], [64, 32, 16]], dtype=np.int64)
N_BINS = 256


@dataclass(frozen=True)
class LbpParams:
    grid: tuple[int, int] = (1, 1)  # (Kx, Ky)
    P: int = 8
    R: int = 1

    def __post_init__(self):
        if self.P != 8 or self.R != 1:
            raise ValueError("only the 3x3 operator (P=8, R=1) is supported")
        kx, ky = self.grid
        if kx < 1 or ky < 1:
            raise ValueError("grid dimensions must be >= 1")

    @property
    def feature_length(self) -> int:
        return self.grid[0] * self.grid[1] * N_BINS


def lbp_code(window) -> int:
    """LBP code of a 3x3 window; a neighbour equal to the centre sets its bit."""
    w = np.asarray(window, dtype=np.int64).reshape(3, 3)
    return int(((w >= w[1, 1]) * WEIGHTS).sum())


def _prepare(roi) -> np.ndarray:
    roi = np.asarray(roi)
    if roi.ndim != 2:
        raise ValueError("ROI must be a 2-D gray or depth raster")
    if roi.dtype not in (np.uint8, np.uint16):
        raise TypeError(f"ROI dtype must be uint8 or uint16, got {roi.dtype}")
    if roi.shape[0] < 3 or roi.shape[1] < 3:
        raise ValueError(f"ROI {roi.shape[1]}x{roi.shape[0]} smaller than 3x3")
    return np.ascontiguousarray(roi, dtype=np.uint16)


def _kernels(backend):
    return BACKENDS[backend or BACKEND]


def lbp_map(roi, params: LbpParams | None = None, *, backend: str | None = None) -> np.ndarray:
    """Code map of the interior pixels, shape ``(h-2, w-2)``, dtype uint8."""
    return _kernels(backend).lbp_map(_prepare(roi))


def block_edges(n: int, k: int) -> np.ndarray:
    return (np.arange(k + 1, dtype=np.int64) * n) // k


def _block_index(n: int, k: int) -> np.ndarray:
    # block number of each of the n positions: edges are floor(b*n/k)
    idx = np.empty(n, dtype=np.intp)
    edges = block_edges(n, k)
    for b in range(k):
        idx[edges[b]:edges[b + 1]] = b
    return idx


def _check_grid(h: int, w: int, grid) -> tuple[int, int]:
    kx, ky = grid
    if kx < 1 or ky < 1:
        raise ValueError("grid dimensions must be >= 1")
    if kx > w or ky > h:
        raise ValueError(f"grid {kx}x{ky} larger than {w}x{h} code map")
    return kx, ky


def histogram(codes: np.ndarray, grid=(1, 1)) -> np.ndarray:
    """Concatenated 256-bin counts of each block, blocks in row-major order."""
    codes = np.asarray(codes)
    h, w = codes.shape
    kx, ky = _check_grid(h, w, grid)
    blocks = _block_index(h, ky)[:, None] * kx + _block_index(w, kx)[None, :]
    flat = (blocks * N_BINS + codes.astype(np.intp)).ravel()
    return np.bincount(flat, minlength=kx * ky * N_BINS).astype(np.int64)


def normalize(hist: np.ndarray) -> np.ndarray:
    """Divide every 256-bin block by its own total; empty blocks stay zero."""
    blocks = np.asarray(hist, dtype=np.float64).reshape(-1, N_BINS)
    sums = blocks.sum(axis=1, keepdims=True)
    out = np.divide(blocks, sums, out=np.zeros_like(blocks), where=sums > 0)
    return out.ravel()


@lru_cache(maxsize=None)
def _pool(workers: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=workers, thread_name_prefix="lbp")


def band_bounds(n_rows: int, workers: int) -> list[tuple[int, int]]:
    """Contiguous, near-equal row bands; empty bands are dropped."""
    edges = block_edges(n_rows, workers)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def block_histogram(roi, params: LbpParams | None = None, *, engine: str = "serial",
                    workers: int = 1, backend: str | None = None) -> np.ndarray:
    """Integer block histogram of ``roi``, computed without materialising the code map."""
    params = params or LbpParams()
    img = _prepare(roi)
    kern = _kernels(backend)
    h, w = img.shape[0] - 2, img.shape[1] - 2
    kx, ky = _check_grid(h, w, params.grid)
    row_block = _block_index(h, ky) * kx
    col_block = _block_index(w, kx)

    if engine == "serial":
        counts = np.zeros((kx * ky, N_BINS), dtype=np.int64)
        kern.hist_band(img, 0, h, row_block, col_block, counts)
        return counts.ravel()
    if engine != "parallel":
        raise ValueError(f"unknown engine {engine!r}")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    def run(band):
        # private accumulator per band: no shared writes between workers
        part = np.zeros((kx * ky, N_BINS), dtype=np.int64)
        kern.hist_band(img, band[0], band[1], row_block, col_block, part)
        return part

    parts = list(_pool(workers).map(run, band_bounds(h, workers)))
    return np.sum(parts, axis=0, dtype=np.int64).ravel()


def extract(roi, params: LbpParams | None = None, *, engine: str = "serial",
            workers: int = 1, backend: str | None = None) -> np.ndarray:
    """Normalised LBP feature vector of ``roi`` (length ``Kx*Ky*256``)."""
    return normalize(block_histogram(roi, params, engine=engine, workers=workers,
                                     backend=backend))


from .bench import EquivalenceError, bench_extract, write_bench_csv  # noqa: E402

__all__ = [
    "BACKEND", "BACKENDS", "LbpParams", "lbp_code", "lbp_map", "histogram",
    "normalize", "block_histogram", "extract", "band_bounds",
    "bench_extract", "write_bench_csv", "EquivalenceError",
]
