"""Depth <-> color registration with a translation-only pinhole model.

A face found in the color image is turned into a binary mask, every valid
depth pixel is projected into the color camera, and the depth pixels that
land on the mask form the depth-space face region.  Its bounding box is the
rectangular ROI used for feature extraction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imaging import Rect


_EIGHT = np.ones((3, 3), dtype=bool)


class RegistrationError(ValueError):
    pass


class NoDepthSupport(RegistrationError):
    """The face rectangle has no valid depth samples behind it."""


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")


@dataclass(frozen=True)
class CalibrationPair:
    depth: Intrinsics
    color: Intrinsics
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @classmethod
    def identity(cls, fx: float = 525.0, fy: float = 525.0,
                 cx: float = 160.0, cy: float = 120.0) -> "CalibrationPair":
        k = Intrinsics(fx, fy, cx, cy)
        return cls(k, k, (0.0, 0.0, 0.0))


@dataclass(frozen=True)
class AffineMap2D:
    u: tuple[float, float]
    v: tuple[float, float]
    t: tuple[float, float]

    def __post_init__(self):
        if abs(self.u[0] * self.v[1] - self.u[1] * self.v[0]) <= 1e-9:
            raise ValueError("basis vectors u and v are linearly dependent")


def apply_affine(m: AffineMap2D, p: tuple[float, float]) -> tuple[float, float]:
    x, y = p
    return (x * m.u[0] + y * m.v[0] + m.t[0],
            x * m.u[1] + y * m.v[1] + m.t[1])


def round_half_up(a):
    return np.floor(np.asarray(a, dtype=np.float64) + 0.5).astype(np.int64)


def depth_to_color(p_depth: tuple[float, float], z: float,
                   cal: CalibrationPair) -> tuple[float, float]:
    """Continuous color-camera pixel coordinates of depth pixel ``p_depth`` at ``z`` mm."""
    if not z > 0:
        raise RegistrationError(f"invalid depth {z}")
    u, v = p_depth
    d, c = cal.depth, cal.color
    tx, ty, tz = cal.translation
    X = (u - d.cx) * z / d.fx + tx
    Y = (v - d.cy) * z / d.fy + ty
    Z = z + tz
    if Z <= 0:
        raise RegistrationError(f"point behind color camera (Z'={Z})")
    return (c.fx * X / Z + c.cx, c.fy * Y / Z + c.cy)


def _depth_to_color_grid(depth: np.ndarray, cal: CalibrationPair):
    """Vectorised depth_to_color over a whole frame; invalid pixels give NaN."""
    h, w = depth.shape
    d, c = cal.depth, cal.color
    tx, ty, tz = cal.translation
    z = depth.astype(np.float64)
    vv, uu = np.mgrid[0:h, 0:w].astype(np.float64)
    X = (uu - d.cx) * z / d.fx + tx
    Y = (vv - d.cy) * z / d.fy + ty
    Z = z + tz
    ok = (depth > 0) & (Z > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        uc = np.where(ok, c.fx * X / Z + c.cx, np.nan)
        vc = np.where(ok, c.fy * Y / Z + c.cy, np.nan)
    return uc, vc, ok


def reproject_mask(color_mask: np.ndarray, depth: np.ndarray,
                   cal: CalibrationPair) -> np.ndarray:
    """Depth-space mask of depth pixels that project onto the color-space mask."""
    if color_mask.ndim != 2 or depth.ndim != 2:
        raise RegistrationError("mask and depth must be 2-D")
    ch, cw = color_mask.shape
    uc, vc, ok = _depth_to_color_grid(depth, cal)
    x = np.zeros(depth.shape, dtype=np.int64)
    y = np.zeros(depth.shape, dtype=np.int64)
    x[ok] = round_half_up(uc[ok])
    y[ok] = round_half_up(vc[ok])
    # strict lower bound: row and column 0 of the color image are never hit
    inside = ok & (x > 0) & (y > 0) & (x < cw) & (y < ch)
    out = np.zeros(depth.shape, dtype=np.uint8)
    hit = np.zeros(depth.shape, dtype=bool)
    hit[inside] = color_mask[y[inside], x[inside]] == 255
    out[hit] = 255
    return out


def rect_mask(r: Rect, width: int, height: int) -> np.ndarray:
    m = np.zeros((height, width), dtype=np.uint8)
    c = Rect(*r).clamp(width, height)
    if c is not None:
        m[c.y:c.y + c.h, c.x:c.x + c.w] = 255
    return m


def largest_component(mask: np.ndarray) -> list[tuple[int, int]]:
    """Pixels ``(x, y)`` of the largest 8-connected component of 255s, row-major.

    Ties go to the component whose first pixel in row-major order comes first.
    """
    labels, n = ndimage.label(mask == 255, structure=_EIGHT)
    if n == 0:
        return []
    # labels are numbered in raster order of each component's first pixel,
    # so argmax (first maximum) implements the top-left tie rule
    sizes = np.bincount(labels.ravel())[1:]
    ys, xs = np.nonzero(labels == int(np.argmax(sizes)) + 1)
    return list(zip(xs.tolist(), ys.tolist()))


def bounding_rect(points) -> Rect:
    pts = np.asarray(list(points), dtype=np.int64)
    if pts.size == 0:
        raise ValueError("bounding_rect of an empty point set")
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    return Rect(int(x0), int(y0), int(x1 - x0 + 1), int(y1 - y0 + 1))


def face_depth_roi(color_rect: Rect, color_dims: tuple[int, int],
                   depth: np.ndarray, cal: CalibrationPair) -> Rect:
    """Rectangular depth-space ROI for a color-space face rectangle.

    ``color_dims`` is ``(width, height)`` of the color frame.
    """
    cw, ch = color_dims
    mask = reproject_mask(rect_mask(color_rect, cw, ch), depth, cal)
    comp = largest_component(mask)
    if not comp:
        raise NoDepthSupport(f"no valid depth behind color rect {tuple(color_rect)}")
    return bounding_rect(comp)


_CALIB_KEYS = ("depth.fx", "depth.fy", "depth.cx", "depth.cy",
               "color.fx", "color.fy", "color.cx", "color.cy",
               "t.x", "t.y", "t.z")


def parse_calibration(text: str) -> CalibrationPair:
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep:
            raise ValueError(f"calibration line {lineno}: expected 'key = value'")
        if key not in _CALIB_KEYS:
            raise ValueError(f"calibration line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"calibration line {lineno}: duplicate key {key!r}")
        try:
            values[key] = float(val)
        except ValueError:
            raise ValueError(f"calibration line {lineno}: bad number {val.strip()!r}") from None
    missing = [k for k in _CALIB_KEYS if k not in values]
    if missing:
        raise ValueError(f"calibration missing keys: {', '.join(missing)}")
    v = values
    return CalibrationPair(
        Intrinsics(v["depth.fx"], v["depth.fy"], v["depth.cx"], v["depth.cy"]),
        Intrinsics(v["color.fx"], v["color.fy"], v["color.cx"], v["color.cy"]),
        (v["t.x"], v["t.y"], v["t.z"]),
    )


def format_calibration(cal: CalibrationPair) -> str:
    d, c, t = cal.depth, cal.color, cal.translation
    vals = (d.fx, d.fy, d.cx, d.cy, c.fx, c.fy, c.cx, c.cy, t[0], t[1], t[2])
    return "".join(f"{k} = {v!r}\n" for k, v in zip(_CALIB_KEYS, vals))


def load_calibration(path) -> CalibrationPair:
    with open(path, encoding="utf-8") as fh:
        return parse_calibration(fh.read())


def save_calibration(cal: CalibrationPair, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_calibration(cal))
