"""Linear SVMs trained by stochastic subgradient descent, combined one-vs-rest."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

MAGIC = "rgbd-facekit-model"
VERSION = "v1"
UNKNOWN = "unknown"


class ModelFormatError(ValueError):
    pass


class CorruptModel(ModelFormatError):
    pass


class VersionMismatch(ModelFormatError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 1e-4
    epochs: int = 200
    seed: int = 42

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class LinearSvm:
    w: np.ndarray
    b: float
    lam: float

    def decision(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.w + self.b


def _stack(samples, what: str) -> np.ndarray:
    X = np.asarray([np.asarray(s, dtype=np.float64).ravel() for s in samples])
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"{what}: need at least one sample")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{what}: non-finite feature values")
    return X


def objective(svm: LinearSvm, X, y) -> float:
    """``lam/2 * |w|^2`` plus the mean hinge loss over ``(X, y)``."""
    margins = np.asarray(y) * svm.decision(X)
    hinge = np.maximum(0.0, 1.0 - margins).mean()
    return 0.5 * svm.lam * (svm.w @ svm.w) + hinge


def train_binary(positives, negatives, cfg: TrainConfig | None = None) -> LinearSvm:
    """Pegasos-style primal subgradient training with step ``1/(lam*t)``.

    Samples are visited once per epoch in an order shuffled by ``cfg.seed``,
    so the result is reproducible bit for bit.

    Training runs on features centred at the sample mean, with the bias
    shrunk alongside ``w``; the offset is folded back into ``b`` at the end.
    LBP histograms share a large common component (flat regions all vote
    for code 255), and without centring the bias has to cancel it through
    the slowly decaying ``1/(lam*t)`` steps.
    """
    cfg = cfg or TrainConfig()
    P = _stack(positives, "positives")
    N = _stack(negatives, "negatives")
    if P.shape[1] != N.shape[1]:
        raise ValueError(f"dimension mismatch: {P.shape[1]} vs {N.shape[1]}")
    X = np.vstack([P, N])
    y = np.concatenate([np.ones(len(P)), -np.ones(len(N))])
    mu = X.mean(axis=0)
    X = X - mu
    n, d = X.shape
    lam = cfg.lam
    rng = np.random.default_rng(cfg.seed)
    w = np.zeros(d)
    b = 0.0
    t = 0
    for _ in range(cfg.epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            xi, yi = X[i], y[i]
            violated = yi * (xi @ w + b) < 1.0
            shrink = 1.0 - eta * lam
            w *= shrink
            b *= shrink
            if violated:
                w += (eta * yi) * xi
                b += eta * yi
    return LinearSvm(w, float(b - w @ mu), lam)


@dataclass
class OvrModel:
    labels: list[str]
    machines: list[LinearSvm]
    feature_length: int
    grid: tuple[int, int] = (1, 1)
    lam: float = field(default=TrainConfig.lam)

    def scores(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.shape[0] != self.feature_length:
            raise ValueError(f"feature length {x.shape[0]} != model {self.feature_length}")
        return np.array([m.w @ x + m.b for m in self.machines])


def train_ovr(database: dict, cfg: TrainConfig | None = None) -> OvrModel:
    """One binary machine per label: that label's samples against all others."""
    cfg = cfg or TrainConfig()
    labels = sorted(database)
    if len(labels) < 2:
        raise ValueError(f"need at least 2 labels, got {len(labels)}")
    for lab in labels:
        if len(database[lab]) == 0:
            raise ValueError(f"label {lab!r} has no samples")
    machines = []
    for lab in labels:
        neg = [s for other in labels if other != lab for s in database[other]]
        machines.append(train_binary(database[lab], neg, cfg))
    d = machines[0].w.shape[0]
    return OvrModel(labels, machines, d, lam=cfg.lam)


class Prediction(NamedTuple):
    label: str
    score: float


def predict(model: OvrModel, x, reject_threshold: float = -np.inf) -> Prediction:
    s = model.scores(x)
    # labels are sorted, so argmax's first-maximum rule breaks ties lexicographically
    k = int(np.argmax(s))
    best = float(s[k])
    if best < reject_threshold:
        return Prediction(UNKNOWN, best)
    return Prediction(model.labels[k], best)


# -- persistence -----------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def dumps_model(model: OvrModel) -> str:
    lines = [f"{MAGIC} {VERSION}",
             f"grid {model.grid[0]}x{model.grid[1]}",
             f"feature_length {model.feature_length}",
             f"lambda {_fmt(model.lam)}",
             f"labels {len(model.labels)}"]
    for lab, m in zip(model.labels, model.machines):
        lines.append(f"label {lab}")
        lines.append(f"bias {_fmt(m.b)}")
        lines.append(" ".join(_fmt(v) for v in m.w))
    return "\n".join(lines) + "\n"


def _field(line: str, key: str) -> str:
    head, _, rest = line.partition(" ")
    if head != key or not rest:
        raise CorruptModel(f"expected '{key} ...', got {line[:40]!r}")
    return rest


def loads_model(text: str) -> OvrModel:
    lines = text.split("\n")
    if not lines or not lines[0].startswith(MAGIC + " "):
        raise CorruptModel("missing model header")
    if lines[0] != f"{MAGIC} {VERSION}":
        raise VersionMismatch(f"unsupported model version {lines[0][len(MAGIC) + 1:]!r}")
    try:
        gx, gy = _field(lines[1], "grid").split("x")
        grid = (int(gx), int(gy))
        d = int(_field(lines[2], "feature_length"))
        lam = float(_field(lines[3], "lambda"))
        n = int(_field(lines[4], "labels"))
        labels, machines = [], []
        for k in range(n):
            base = 5 + 3 * k
            lab = _field(lines[base], "label")
            b = float(_field(lines[base + 1], "bias"))
            w = np.array([float(v) for v in lines[base + 2].split()])
            if w.shape[0] != d:
                raise CorruptModel(f"label {lab!r}: {w.shape[0]} weights, expected {d}")
            labels.append(lab)
            machines.append(LinearSvm(w, b, lam))
        rest = lines[5 + 3 * n:]
    except (IndexError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise CorruptModel(f"corrupted model payload: {exc}") from None
    if any(r.strip() for r in rest) or rest != [""]:
        raise CorruptModel("trailing data or missing final newline")
    if len(set(labels)) != len(labels):
        raise CorruptModel("duplicate labels")
    return OvrModel(labels, machines, d, grid, lam)


def save_model(model: OvrModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> OvrModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())
