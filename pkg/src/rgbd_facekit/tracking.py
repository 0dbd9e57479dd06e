"""Nearest-centre multi-face tracker that builds the per-identity sample database."""
from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from typing import Optional

from .detection import Detection


@dataclass(frozen=True)
class TrackerConfig:
    max_distance: float = 80.0
    max_missed: int = 10
    max_samples: int = 50

    def __post_init__(self):
        if not self.max_distance > 0:
            raise ValueError("max_distance must be > 0")
        if self.max_missed < 0:
            raise ValueError("max_missed must be >= 0")
        if self.max_samples < 1:
            raise ValueError("max_samples must be >= 1")


@dataclass
class FaceTrack:
    track_id: int
    label: str
    last_center: tuple[float, float]
    last_seen: int
    rect: tuple[int, int, int, int]
    missed: int = 0
    samples: list = field(default_factory=list)


@dataclass
class TrackEvent:
    frame: int
    track_id: int
    label: str
    x: int
    y: int
    w: int
    h: int
    event: str  # created | updated | terminated

    def as_dict(self) -> dict:
        return dict(frame=self.frame, track_id=self.track_id, label=self.label,
                    x=self.x, y=self.y, w=self.w, h=self.h, event=self.event)


@dataclass
class TrackerState:
    config: TrackerConfig = field(default_factory=TrackerConfig)
    tracks: list[FaceTrack] = field(default_factory=list)
    retired: list[FaceTrack] = field(default_factory=list)
    next_id: int = 0
    next_auto: int = 0

    def database(self) -> dict[str, list]:
        """Samples per identity label, from live and terminated tracks."""
        db: dict[str, list] = {}
        for t in sorted(self.retired + self.tracks, key=lambda t: t.track_id):
            db.setdefault(t.label, []).extend(t.samples)
        return db


def auto_label(n: int) -> str:
    """``personA`` .. ``personZ``, ``personAA``, ... for the n-th auto-labelled track."""
    letters = ""
    n += 1
    while n:
        n, rem = divmod(n - 1, 26)
        letters = string.ascii_uppercase[rem] + letters
    return "person" + letters


def associate(tracks: list[FaceTrack], detections: list[Detection], cfg: TrackerConfig):
    """Greedy globally-nearest one-to-one matching of tracks to detections.

    Returns ``(pairs, unmatched_detections, unmatched_tracks)`` where ``pairs``
    maps track_id to detection index.
    """
    cands = []
    for t in tracks:
        cx, cy = t.last_center
        for j, d in enumerate(detections):
            dx, dy = d.rect.center
            dist = math.hypot(dx - cx, dy - cy)
            if dist <= cfg.max_distance:
                # detection index is the last tie-break; the rect itself comes first
                # so that reordering the detections cannot change the result
                cands.append((dist, t.track_id, tuple(d.rect), j))
    cands.sort()
    pairs: dict[int, int] = {}
    used = set()
    for _, tid, _, j in cands:
        if tid in pairs or j in used:
            continue
        pairs[tid] = j
        used.add(j)
    unmatched_d = [j for j in range(len(detections)) if j not in used]
    unmatched_t = [t.track_id for t in tracks if t.track_id not in pairs]
    return pairs, unmatched_d, unmatched_t


def step(state: TrackerState, frame_index: int, detections: list[Detection],
         features: Optional[list] = None):
    """Advance the tracker by one frame.

    Returns ``(assignments, events)``: the track_id given to each detection, in
    detection order, and the created/updated/terminated events of this frame.
    """
    if features is None:
        features = [None] * len(detections)
    if len(features) != len(detections):
        raise ValueError(f"{len(features)} feature vectors for {len(detections)} detections")
    cfg = state.config
    pairs, unmatched_d, unmatched_t = associate(state.tracks, detections, cfg)
    by_id = {t.track_id: t for t in state.tracks}
    assignments: list[int] = [-1] * len(detections)
    events: list[TrackEvent] = []

    def _take(t: FaceTrack, j: int):
        d = detections[j]
        t.last_center = d.rect.center
        t.rect = tuple(d.rect)
        t.last_seen = frame_index
        t.missed = 0
        if features[j] is not None and len(t.samples) < cfg.max_samples:
            t.samples.append(features[j])
        assignments[j] = t.track_id

    for tid, j in sorted(pairs.items()):
        _take(by_id[tid], j)
        events.append(TrackEvent(frame_index, tid, by_id[tid].label, *detections[j].rect, "updated"))

    for j in unmatched_d:
        d = detections[j]
        if d.label is not None:
            label = d.label
        else:
            label = auto_label(state.next_auto)
            state.next_auto += 1
        t = FaceTrack(state.next_id, label, d.rect.center, frame_index, tuple(d.rect))
        state.next_id += 1
        _take(t, j)
        state.tracks.append(t)
        events.append(TrackEvent(frame_index, t.track_id, label, *d.rect, "created"))

    for tid in unmatched_t:
        t = by_id[tid]
        t.missed += 1
        if t.missed > cfg.max_missed:
            state.tracks.remove(t)
            state.retired.append(t)
            events.append(TrackEvent(frame_index, tid, t.label, *t.rect, "terminated"))
    return assignments, events
