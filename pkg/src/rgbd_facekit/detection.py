"""Face detection contract and the annotation-backed detector."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from .imaging import Rect

HEADER = ("frame", "x", "y", "w", "h", "label")


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class Detection:
    rect: Rect
    frame_index: int
    score: float = 1.0
    label: Optional[str] = None


@dataclass(frozen=True)
class Annotation:
    rect: Rect
    label: Optional[str] = None


class AnnotationSet(dict):
    """``frame index -> list[Annotation]``, in file order."""

    def labels(self) -> list[str]:
        return sorted({a.label for rows in self.values() for a in rows if a.label is not None})

    def n_rows(self) -> int:
        return sum(len(rows) for rows in self.values())


class Detector(Protocol):
    def __call__(self, frame_index: int, frame: np.ndarray) -> list[Detection]: ...


def detect(frame_index: int, frame: np.ndarray, source: AnnotationSet) -> list[Detection]:
    h, w = frame.shape[:2]
    out = []
    for ann in source.get(frame_index, ()):
        r = ann.rect.clamp(w, h)
        if r is not None:
            out.append(Detection(r, frame_index, 1.0, ann.label))
    return out


class AnnotationDetector:
    """Detector that replays ground-truth rectangles."""

    def __init__(self, annotations: AnnotationSet):
        self.annotations = annotations

    def __call__(self, frame_index, frame):
        return detect(frame_index, frame, self.annotations)


def _parse_row(row: list[str], lineno: int) -> tuple[int, Annotation]:
    if len(row) not in (5, 6):
        raise AnnotationError(f"line {lineno}: expected 5 or 6 columns, got {len(row)}")
    try:
        frame, x, y, w, h = (int(v.strip()) for v in row[:5])
    except ValueError:
        raise AnnotationError(f"line {lineno}: non-integer field in {row!r}") from None
    if frame < 0:
        raise AnnotationError(f"line {lineno}: negative frame index")
    if w <= 0 or h <= 0:
        raise AnnotationError(f"line {lineno}: negative or zero dimension {w}x{h}")
    label = row[5].strip() if len(row) == 6 and row[5].strip() else None
    return frame, Annotation(Rect(x, y, w, h), label)


def parse_annotations(lines) -> AnnotationSet:
    out = AnnotationSet()
    last = None
    for lineno, row in enumerate(csv.reader(lines), 1):
        if not row or all(not c.strip() for c in row):
            continue
        if lineno == 1 and tuple(c.strip() for c in row) in (HEADER, HEADER[:5]):
            continue
        frame, ann = _parse_row(row, lineno)
        if frame in out and frame != last:
            raise AnnotationError(f"line {lineno}: rows for frame {frame} are not contiguous")
        out.setdefault(frame, []).append(ann)
        last = frame
    return out


def load_annotations(path) -> AnnotationSet:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_annotations(fh)


def save_annotations(annotations: AnnotationSet, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(HEADER)
        for frame in sorted(annotations):
            for a in annotations[frame]:
                wr.writerow([frame, *a.rect, a.label or ""])
