"""Deterministic synthetic RGB-D sequences with ground-truth face boxes.

Each subject is a square patch carrying a procedural gray texture in the
color image and a procedural relief in the depth image.  The relief moves
rigidly with the subject, while the optional illumination ramp only touches
the color texture, so depth features are unaffected by lighting by design.

All noise comes from an integer hash, so outputs are identical across
platforms.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .detection import Annotation, AnnotationSet, save_annotations
from .imaging import Rect, save_color, save_depth
from .registration import CalibrationPair, parse_calibration, save_calibration


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class SubjectSpec:
    label: str
    texture_seed: int
    relief_seed: int
    size: int = 64
    depth: int = 1000            # mm, base distance of the patch
    relief_amplitude: int = 60   # mm
    start: tuple[float, float] = (0.0, 0.0)     # patch centre, color pixels
    velocity: tuple[float, float] = (0.0, 0.0)  # pixels per frame

    def center(self, frame: int) -> tuple[int, int]:
        return (int(np.floor(self.start[0] + self.velocity[0] * frame + 0.5)),
                int(np.floor(self.start[1] + self.velocity[1] * frame + 0.5)))

    def rect(self, frame: int) -> Rect:
        cx, cy = self.center(frame)
        return Rect(cx - self.size // 2, cy - self.size // 2, self.size, self.size)


@dataclass(frozen=True)
class SceneSpec:
    frames: int = 30
    color_size: tuple[int, int] = (320, 240)
    depth_size: tuple[int, int] = (320, 240)
    background_depth: int = 2500
    depth_jitter: int = 0
    illumination: bool = False
    illumination_slope: float = 2.0   # gray levels per pixel across the patch
    seed: int = 0
    calibration: CalibrationPair | None = None
    subjects: tuple[SubjectSpec, ...] = field(default_factory=tuple)

    @property
    def calib(self) -> CalibrationPair:
        if self.calibration is not None:
            return self.calibration
        w, h = self.depth_size
        return CalibrationPair.identity(cx=w / 2.0, cy=h / 2.0)


# -- integer noise ---------------------------------------------------------------

_M32 = np.uint64(0xFFFFFFFF)


def _hash(x, y, seed: int) -> np.ndarray:
    """32-bit integer hash of lattice coordinates (lowbias32-style mixing)."""
    x = np.asarray(x, dtype=np.uint64)
    y = np.asarray(y, dtype=np.uint64)
    h = (x * np.uint64(0x8DA6B343) + y * np.uint64(0xD8163841)
         + np.uint64(seed & 0xFFFFFFFF) * np.uint64(0xCB1AB31F)) & _M32
    h ^= h >> np.uint64(16)
    h = (h * np.uint64(0x7FEB352D)) & _M32
    h ^= h >> np.uint64(15)
    h = (h * np.uint64(0x846CA68B)) & _M32
    h ^= h >> np.uint64(16)
    return h


def value_noise(size: int, seed: int, cells=(16, 8, 4, 2)) -> np.ndarray:
    """Multi-octave value noise on a ``size`` x ``size`` grid, int64 in [0, 255]."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.int64)
    total = np.zeros((size, size), dtype=np.int64)
    weight_sum = 0
    for octave, c in enumerate(cells):
        wgt = 1 << (len(cells) - 1 - octave)
        gx, fx = xx // c, xx % c
        gy, fy = yy // c, yy % c
        s = seed * 31 + octave

        def lat(ox, oy):
            return (_hash(gx + ox, gy + oy, s) & np.uint64(255)).astype(np.int64)

        v = ((c - fx) * (c - fy) * lat(0, 0) + fx * (c - fy) * lat(1, 0)
             + (c - fx) * fy * lat(0, 1) + fx * fy * lat(1, 1)) // (c * c)
        total += wgt * v
        weight_sum += wgt
    return total // weight_sum


def subject_texture(s: SubjectSpec) -> np.ndarray:
    n = value_noise(s.size, s.texture_seed)
    return 40 + (n * 160) // 255      # [40, 200]


def subject_relief(s: SubjectSpec) -> np.ndarray:
    n = value_noise(s.size, s.relief_seed)
    return (n * s.relief_amplitude) // 255


# -- rendering ---------------------------------------------------------------

def _depth_position(s: SubjectSpec, frame: int, cal: CalibrationPair) -> tuple[int, int]:
    """Top-left of the patch in the depth image (inverse of the color mapping at the base depth)."""
    r = s.rect(frame)
    d, c = cal.depth, cal.color
    tx, ty, tz = cal.translation
    z = float(s.depth)
    u = d.cx + d.fx * ((r.x - c.cx) * (z + tz) / c.fx - tx) / z
    v = d.cy + d.fy * ((r.y - c.cy) * (z + tz) / c.fy - ty) / z
    return int(np.floor(u + 0.5)), int(np.floor(v + 0.5))


def validate(scene: SceneSpec) -> None:
    if scene.frames < 1:
        raise SceneError("frames must be >= 1")
    if scene.background_depth <= 0:
        raise SceneError("background_depth must be > 0")
    labels = [s.label for s in scene.subjects]
    if len(set(labels)) != len(labels):
        raise SceneError("subject labels must be distinct")
    seeds = [(s.texture_seed, s.relief_seed) for s in scene.subjects]
    if len(set(seeds)) != len(seeds):
        raise SceneError("subjects must have distinct seeds")
    cw, ch = scene.color_size
    dw, dh = scene.depth_size
    cal = scene.calib
    for s in scene.subjects:
        if s.size < 16:
            raise SceneError(f"subject {s.label}: size must be >= 16")
        if s.depth <= 0 or s.depth + s.relief_amplitude > 65535:
            raise SceneError(f"subject {s.label}: depth out of range")
        for f in range(scene.frames):
            r = s.rect(f)
            # registration never maps onto color row/column 0
            if r.x < 1 or r.y < 1 or r.x + r.w > cw or r.y + r.h > ch:
                raise SceneError(f"subject {s.label}: path leaves the color frame at frame {f}")
            u, v = _depth_position(s, f, cal)
            if u < 0 or v < 0 or u + s.size > dw or v + s.size > dh:
                raise SceneError(f"subject {s.label}: path leaves the depth frame at frame {f}")


def render_frame(scene: SceneSpec, frame: int):
    """Return ``(color, depth, annotations)`` for one frame."""
    cw, ch = scene.color_size
    dw, dh = scene.depth_size
    bg = value_noise(max(cw, ch), scene.seed ^ 0x5EED, cells=(32, 16))[:ch, :cw]
    gray = (20 + bg * 40 // 255).astype(np.int64)
    depth = np.full((dh, dw), scene.background_depth, dtype=np.int64)
    anns = []
    for s in scene.subjects:
        r = s.rect(frame)
        tex = subject_texture(s)
        if scene.illumination:
            ramp = np.floor(scene.illumination_slope * (np.arange(s.size) - s.size / 2.0))
            tex = tex + ramp.astype(np.int64)[None, :]
        gray[r.y:r.y + r.h, r.x:r.x + r.w] = tex
        u, v = _depth_position(s, frame, scene.calib)
        depth[v:v + s.size, u:u + s.size] = s.depth + subject_relief(s)
        anns.append(Annotation(r, s.label))
    if scene.depth_jitter:
        j = scene.depth_jitter
        noise = _hash(np.arange(dw)[None, :], np.arange(dh)[:, None],
                      scene.seed * 100003 + frame).astype(np.int64) % (2 * j + 1) - j
        depth = depth + noise
    g = np.clip(gray, 0, 255).astype(np.uint8)
    color = np.repeat(g[:, :, None], 3, axis=2)
    return color, np.clip(depth, 1, 65535).astype(np.uint16), anns


def generate(scene: SceneSpec, out_dir) -> Path:
    validate(scene)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise SceneError(f"cannot create {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise SceneError(f"{out} is not writable")
    anns = AnnotationSet()
    for f in range(scene.frames):
        color, depth, rows = render_frame(scene, f)
        save_color(color, out / f"color_{f:04d}.ppm")
        save_depth(depth, out / f"depth_{f:04d}.pgm")
        anns[f] = rows
    save_calibration(scene.calib, out / "calib.txt")
    save_annotations(anns, out / "annotations.csv")
    return out


# -- scene files -------------------------------------------------------------

_SUBJECT_KEYS = {"label", "texture_seed", "relief_seed", "size", "depth",
                 "relief_amplitude", "start", "velocity"}


def _pair(text: str, conv=float):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise SceneError(f"expected 'a,b', got {text!r}")
    return conv(parts[0]), conv(parts[1])


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise SceneError(f"expected on/off, got {text!r}")


def parse_scene(text: str) -> SceneSpec:
    """Parse a ``key = value`` scene description (see the bundled example)."""
    top: dict = {}
    subjects: dict[int, dict] = {}
    calib_lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = (p.strip() for p in line.partition("="))
        if not sep or not val:
            raise SceneError(f"line {lineno}: expected 'key = value'")
        try:
            if key.startswith("calib."):
                calib_lines.append(f"{key[6:]} = {val}")
            elif key.startswith("subject."):
                _, idx, name = key.split(".", 2)
                if name not in _SUBJECT_KEYS:
                    raise SceneError(f"unknown subject key {name!r}")
                subjects.setdefault(int(idx), {})[name] = val
            elif key == "frames":
                top["frames"] = int(val)
            elif key in ("color_size", "depth_size"):
                top[key] = _pair(val, int)
            elif key in ("background_depth", "depth_jitter", "seed"):
                top[key] = int(val)
            elif key == "illumination":
                top[key] = _bool(val)
            elif key == "illumination_slope":
                top[key] = float(val)
            else:
                raise SceneError(f"unknown key {key!r}")
        except (ValueError, SceneError) as exc:
            raise SceneError(f"line {lineno}: {exc}") from None

    subs = []
    for idx in sorted(subjects):
        d = subjects[idx]
        if "label" not in d:
            raise SceneError(f"subject {idx}: label is required")
        try:
            subs.append(SubjectSpec(
                label=d["label"],
                texture_seed=int(d.get("texture_seed", 1000 + 2 * idx)),
                relief_seed=int(d.get("relief_seed", 1001 + 2 * idx)),
                size=int(d.get("size", 64)),
                depth=int(d.get("depth", 1000)),
                relief_amplitude=int(d.get("relief_amplitude", 60)),
                start=_pair(d.get("start", "0,0")),
                velocity=_pair(d.get("velocity", "0,0")),
            ))
        except ValueError as exc:
            raise SceneError(f"subject {idx}: {exc}") from None
    if calib_lines:
        try:
            top["calibration"] = parse_calibration("\n".join(calib_lines))
        except ValueError as exc:
            raise SceneError(str(exc)) from None
    scene = SceneSpec(subjects=tuple(subs), **top)
    validate(scene)
    return scene


def load_scene(path) -> SceneSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_scene(fh.read())


def two_subject_scene(frames: int = 60, *, illumination: bool = False, seed: int = 0,
                      depth_jitter: int = 0, step: float = 2.0,
                      calibration: CalibrationPair | None = None) -> SceneSpec:
    """Two subjects drifting in opposite directions on separate rows of a 320x240 frame."""
    a = SubjectSpec("alice", texture_seed=11, relief_seed=12,
                    start=(50.0, 60.0), velocity=(step, 0.0))
    b = SubjectSpec("bob", texture_seed=21, relief_seed=22, depth=1100,
                    start=(270.0, 180.0), velocity=(-step, 0.0))
    return SceneSpec(frames=frames, illumination=illumination, seed=seed,
                     depth_jitter=depth_jitter, calibration=calibration, subjects=(a, b))


__all__ = ["SubjectSpec", "SceneSpec", "SceneError", "generate", "render_frame",
           "parse_scene", "load_scene", "two_subject_scene", "value_noise"]
