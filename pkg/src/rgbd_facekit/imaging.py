"""Raster I/O and basic image operations.

Frames are plain numpy arrays; the dtype and rank tell the kinds apart:

* color: ``(h, w, 3)`` uint8, RGB
* gray:  ``(h, w)`` uint8
* depth: ``(h, w)`` uint16, millimetres, 0 = no reading

Color frames are stored as binary PPM (P6, maxval 255) and depth frames as
16-bit binary PGM (P5, maxval 65535, big-endian samples).
"""
from __future__ import annotations

import os
from typing import NamedTuple

import numpy as np


class ImageFormatError(ValueError):
    """Raised for malformed, truncated or unsupported netpbm files."""


class Rect(NamedTuple):
    x: int
    y: int
    w: int
    h: int

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def clamp(self, width: int, height: int) -> "Rect | None":
        """Intersection with a ``width`` x ``height`` frame, or None if empty."""
        x0 = max(self.x, 0)
        y0 = max(self.y, 0)
        x1 = min(self.x + self.w, width)
        y1 = min(self.y + self.h, height)
        if x1 <= x0 or y1 <= y0:
            return None
        return Rect(x0, y0, x1 - x0, y1 - y0)


def _check_frame(frame: np.ndarray, dtype, ndim: int, what: str) -> None:
    if not isinstance(frame, np.ndarray) or frame.dtype != dtype or frame.ndim != ndim:
        raise TypeError(f"expected {what} frame ({np.dtype(dtype).name}, {ndim}-D), "
                        f"got {getattr(frame, 'dtype', type(frame))}")
    if ndim == 3 and frame.shape[2] != 3:
        raise TypeError("color frame must have 3 channels")
    if frame.shape[0] < 1 or frame.shape[1] < 1:
        raise ValueError("frame dimensions must be >= 1")


# -- netpbm ------------------------------------------------------------------

def _read_header(buf: bytes, magic: bytes) -> tuple[int, int, int, int]:
    """Parse ``magic width height maxval`` and return them with the payload offset."""
    if buf[:2] != magic:
        raise ImageFormatError(f"bad magic {buf[:2]!r}, expected {magic!r}")
    pos = 2
    fields = []
    n = len(buf)
    while len(fields) < 3:
        # whitespace and comments
        while pos < n and (buf[pos:pos + 1].isspace() or buf[pos:pos + 1] == b"#"):
            if buf[pos:pos + 1] == b"#":
                while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < n and buf[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise ImageFormatError("malformed header")
        fields.append(int(buf[start:pos]))
    if pos >= n or not buf[pos:pos + 1].isspace():
        raise ImageFormatError("malformed header: missing separator before payload")
    pos += 1
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ImageFormatError(f"malformed header: zero dimension {width}x{height}")
    return width, height, maxval, pos


def _read_file(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def load_color(path) -> np.ndarray:
    buf = _read_file(path)
    width, height, maxval, off = _read_header(buf, b"P6")
    if maxval != 255:
        raise ImageFormatError(f"unsupported maxval {maxval} (need 255)")
    need = width * height * 3
    if len(buf) - off < need:
        raise ImageFormatError(f"truncated pixel data: {len(buf) - off} of {need} bytes")
    data = np.frombuffer(buf, dtype=np.uint8, count=need, offset=off)
    return data.reshape(height, width, 3).copy()


def load_depth(path) -> np.ndarray:
    buf = _read_file(path)
    width, height, maxval, off = _read_header(buf, b"P5")
    if maxval != 65535:
        raise ImageFormatError(f"unsupported maxval {maxval} (need 65535)")
    need = width * height * 2
    if len(buf) - off < need:
        raise ImageFormatError(f"truncated pixel data: {len(buf) - off} of {need} bytes")
    data = np.frombuffer(buf, dtype=">u2", count=width * height, offset=off)
    return data.reshape(height, width).astype(np.uint16)


def _write(path, header: bytes, payload: bytes) -> None:
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    os.replace(tmp, path)


def save_color(frame: np.ndarray, path) -> None:
    _check_frame(frame, np.uint8, 3, "color")
    h, w = frame.shape[:2]
    _write(path, b"P6\n%d %d\n255\n" % (w, h), np.ascontiguousarray(frame).tobytes())


def save_depth(frame: np.ndarray, path) -> None:
    _check_frame(frame, np.uint16, 2, "depth")
    h, w = frame.shape
    _write(path, b"P5\n%d %d\n65535\n" % (w, h), frame.astype(">u2").tobytes())


# -- pixel operations ----------------------------------------------------------

def to_gray(frame: np.ndarray) -> np.ndarray:
    """Integer BT.601 luma, ``round((299 R + 587 G + 114 B) / 1000)`` half-up."""
    _check_frame(frame, np.uint8, 3, "color")
    rgb = frame.astype(np.uint32)
    acc = 299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2]
    return ((acc + 500) // 1000).astype(np.uint8)


def crop(frame: np.ndarray, r: Rect) -> np.ndarray:
    """Sub-raster of ``frame`` covered by ``r`` after clamping to the frame."""
    h, w = frame.shape[:2]
    c = Rect(*r).clamp(w, h)
    if c is None:
        raise ValueError(f"rect {tuple(r)} does not intersect {w}x{h} frame")
    return frame[c.y:c.y + c.h, c.x:c.x + c.w].copy()


def _bilinear_taps(n_in: int, n_out: int):
    # half-pixel centres, edge samples replicated
    pos = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0.0, n_in - 1)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, pos - lo


def _nearest_index(n_in: int, n_out: int) -> np.ndarray:
    # centre s = ((2i+1) n_in - n_out) / (2 n_out); nearest with ties down = ceil(s - 1/2)
    i = np.arange(n_out, dtype=np.int64)
    num = (2 * i + 1) * n_in - 2 * n_out
    den = 2 * n_out
    idx = -((-num) // den)
    return np.clip(idx, 0, n_in - 1).astype(np.intp)


def resize(frame: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Resize a gray (bilinear) or depth (nearest-neighbour) frame.

    Depth never goes through interpolation so the 0 "no reading" sentinel is
    never blended into a fabricated distance.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError("output dimensions must be >= 1")
    if frame.ndim != 2:
        raise TypeError("resize expects a gray or depth frame")
    h, w = frame.shape
    if frame.dtype == np.uint16:
        return frame[np.ix_(_nearest_index(h, out_h), _nearest_index(w, out_w))].copy()
    if frame.dtype != np.uint8:
        raise TypeError(f"unsupported frame dtype {frame.dtype}")
    y0, y1, fy = _bilinear_taps(h, out_h)
    x0, x1, fx = _bilinear_taps(w, out_w)
    img = frame.astype(np.float64)
    top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
    bot = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
    out = top * (1 - fy)[:, None] + bot * fy[:, None]
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
