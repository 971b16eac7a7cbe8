"""Signature comparison and word decision.

Per-feature distances between two signatures (DTW or Euclidean after linear
interpolation), weighted score-level fusion, plain and distance-weighted
k-nearest-neighbour decisions, and recognition-rate-driven weight learning.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import COLUMNS, FeatureMatrix

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a normal dependency
    _HAVE_NUMBA = False


def _dtw_core(a, b):
    n, m = len(a), len(b)
    inf = np.inf
    d = np.empty((n + 1, m + 1))
    d[0, 0] = 0.0
    for j in range(1, m + 1):
        d[0, j] = inf
    for i in range(1, n + 1):
        d[i, 0] = inf
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            best = d[i - 1, j - 1]
            if d[i - 1, j] < best:
                best = d[i - 1, j]
            if d[i, j - 1] < best:
                best = d[i, j - 1]
            d[i, j] = abs(a[i - 1] - b[j - 1]) + best
    return d[n, m]


if _HAVE_NUMBA:
    _dtw_core = njit(cache=True)(_dtw_core)


def dtw(a, b) -> float:
    """Dynamic-time-warping distance with |x - y| cell cost.

    Unconstrained left/up/diagonal steps; the alignment runs from the first
    cell pair to the last, so dtw([0], [5]) = 5 and dtw(s, s) = 0.
    """
    av = np.asarray(a, dtype=np.float64).ravel()
    bv = np.asarray(b, dtype=np.float64).ravel()
    if av.size == 0 or bv.size == 0:
        raise ValueError("dtw needs non-empty sequences")
    return float(_dtw_core(av, bv))


def resample(s, target_len: int):
    """Piecewise-linear resampling preserving endpoints."""
    sv = np.asarray(s, dtype=np.float64).ravel()
    if sv.size < 1 or target_len < 1:
        raise ValueError("resample needs non-empty input and target_len >= 1")
    if sv.size == 1:
        return np.full(target_len, sv[0])
    return np.interp(np.linspace(0.0, sv.size - 1, target_len), np.arange(sv.size), sv)


@dataclass(frozen=True)
class FeatureWeights:
    """Eight non-negative fusion weights summing to 1."""

    w: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.w, dtype=np.float64).ravel()
        if v.shape != (8,):
            raise ValueError(f"need 8 weights, got shape {v.shape}")
        if (v < 0).any():
            raise ValueError("weights must be non-negative")
        if abs(v.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {v.sum()!r}")
        object.__setattr__(self, "w", v)

    # The published integer percentages sum to 101% (SD) and 99% (SI) from
    # rounding; they are renormalized so the ratios survive and the sum is 1.
    @classmethod
    def sd(cls) -> "FeatureWeights":
        return learn_weights([15, 12, 9, 10, 6, 15, 16, 18])

    @classmethod
    def si(cls) -> "FeatureWeights":
        return learn_weights([15, 14, 9, 10, 7, 9, 12, 23])

    @classmethod
    def uniform(cls) -> "FeatureWeights":
        return cls(np.full(8, 1.0 / 8.0))


def learn_weights(per_feature_wrr) -> FeatureWeights:
    """Relative weighting: each weight is its recognition rate over the total."""
    r = np.asarray(per_feature_wrr, dtype=np.float64).ravel()
    if r.shape != (8,):
        raise ValueError(f"need 8 recognition rates, got shape {r.shape}")
    if (r < 0).any():
        raise ValueError("recognition rates must be non-negative")
    total = r.sum()
    if total == 0:
        raise ValueError("cannot learn weights from all-zero rates")
    return FeatureWeights(r / total)


def write_weights(weights: FeatureWeights, path) -> None:
    lines = [f"{name}={v:.9f}" for name, v in zip(COLUMNS, weights.w)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_weights(path) -> FeatureWeights:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected name=value")
        name, _, val = line.partition("=")
        values[name.strip()] = float(val)
    missing = [c for c in COLUMNS if c not in values]
    if missing:
        raise ValueError(f"{path}: missing weights for {missing}")
    w = np.array([values[c] for c in COLUMNS])
    if abs(w.sum() - 1.0) > 1e-6:
        raise ValueError(f"{path}: weights sum to {w.sum()}, expected 1")
    return FeatureWeights(w / w.sum())


def fuse(distances, weights: FeatureWeights) -> float:
    """Weighted average of the eight per-feature distances (over 8 as written)."""
    d = np.asarray(distances, dtype=np.float64).ravel()
    if d.shape != (8,):
        raise ValueError(f"need 8 distances, got shape {d.shape}")
    return float((weights.w * d).sum() / 8.0)


def feature_distances(a: FeatureMatrix, b: FeatureMatrix, mode: str = "dtw") -> np.ndarray:
    """Per-feature column distances between two signatures."""
    out = np.empty(8)
    for k in range(8):
        ca, cb = a.values[:, k], b.values[:, k]
        if mode == "dtw":
            out[k] = dtw(ca, cb)
        elif mode == "euclid_interp":
            if ca.size < cb.size:
                ca = resample(ca, cb.size)
            elif cb.size < ca.size:
                cb = resample(cb, ca.size)
            out[k] = float(np.sqrt(((ca - cb) ** 2).sum()))
        else:
            raise ValueError(f"mode must be 'dtw' or 'euclid_interp', got {mode!r}")
    return out


@dataclass
class TrainingSet:
    """Labelled signature collection; labels ride on the FeatureMatrix entries."""

    entries: list[FeatureMatrix] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.entries]

    @property
    def vocabulary(self) -> list[str]:
        return sorted(set(self.labels))

    def subjects(self) -> list[str]:
        return sorted(set(e.speaker for e in self.entries))


def fused_scores(
    test: FeatureMatrix,
    train: TrainingSet,
    weights: FeatureWeights | None = None,
    mode: str = "dtw",
) -> np.ndarray:
    """Fused distance of the test signature to every training entry."""
    if not train.entries:
        raise ValueError("empty training set")
    w = weights or FeatureWeights.sd()
    return np.array([fuse(feature_distances(test, e, mode), w) for e in train.entries])


def decide_knn(scores: np.ndarray, labels: list[str], k: int) -> str:
    """Majority label among the k smallest scores.

    Ties break by the smaller per-class minimum distance, then training order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    order = np.argsort(scores, kind="stable")[: min(k, len(labels))]
    stats: dict[str, list] = {}
    for idx in order:
        rec = stats.setdefault(labels[idx], [0, float(scores[idx]), int(idx)])
        rec[0] += 1
    return min(stats.items(), key=lambda kv: (-kv[1][0], kv[1][1], kv[1][2]))[0]


def decide_wknn(scores: np.ndarray, labels: list[str], k: int) -> str:
    """Distance-weighted decision: per class, nearest distance over class count
    within the k nearest; the smallest class weight wins."""
    if k < 1:
        raise ValueError("k must be >= 1")
    order = np.argsort(scores, kind="stable")[: min(k, len(labels))]
    stats: dict[str, list] = {}
    for idx in order:
        rec = stats.setdefault(labels[idx], [0, float(scores[idx]), int(idx)])
        rec[0] += 1
    return min(stats.items(), key=lambda kv: (kv[1][1] / kv[1][0], kv[1][1], kv[1][2]))[0]


def knn(
    test: FeatureMatrix,
    train: TrainingSet,
    k: int = 1,
    weights: FeatureWeights | None = None,
    mode: str = "dtw",
) -> str:
    return decide_knn(fused_scores(test, train, weights, mode), train.labels, k)


def wknn(
    test: FeatureMatrix,
    train: TrainingSet,
    k: int = 1,
    weights: FeatureWeights | None = None,
    mode: str = "dtw",
) -> str:
    return decide_wknn(fused_scores(test, train, weights, mode), train.labels, k)


def rank_labels(scores: np.ndarray, labels: list[str], first: str | None = None) -> list[str]:
    """All labels ordered by their nearest score; optionally force the head."""
    order = np.argsort(scores, kind="stable")
    ranking: list[str] = [] if first is None else [first]
    for idx in order:
        if labels[idx] not in ranking:
            ranking.append(labels[idx])
    return ranking
