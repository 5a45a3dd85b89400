"""Classifiers for points that no hyperblock contains.

The default is k-NN over Explainable Threshold Similarity (ETS): the
similarity of two points is the number of attributes on which they differ
by at most a per-attribute threshold.  Block-distance and Euclidean k-NN
variants are kept for comparison runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import Dataset, attribute_std_devs
from .errors import ConfigError, DataError
from .hyperblock import Hyperblock

METHODS = ("ets", "nearest-hb", "knn-hb", "knn-euclidean")
METRICS = ("manhattan", "euclidean")


@dataclass(frozen=True)
class ETSConfig:
    thresholds: tuple[float, ...]
    k: int = 5
    threshold_fraction: float = 0.25

    def __post_init__(self):
        t = tuple(float(v) for v in self.thresholds)
        if any(v < 0 for v in t):
            raise ConfigError("ETS thresholds must be non-negative")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        object.__setattr__(self, "thresholds", t)

    @classmethod
    def from_data(cls, data: Dataset, fraction: float = 0.25, k: int = 5) -> "ETSConfig":
        return cls(tuple(derive_thresholds(data, fraction)), k, fraction)


@dataclass(frozen=True)
class FallbackConfig:
    """Which fallback to use and its parameters.

    ``thresholds`` overrides the std-derived ETS thresholds when given.
    ``method=None`` disables the fallback so uncovered points abstain.
    """
    method: str | None = "ets"
    k: int = 5
    threshold_fraction: float = 0.25
    thresholds: tuple[float, ...] | None = None
    metric: str = "manhattan"

    def __post_init__(self):
        if self.method is not None and self.method not in METHODS:
            raise ConfigError(f"unknown fallback {self.method!r}; choose from {', '.join(METHODS)}")
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.threshold_fraction < 0:
            raise ConfigError("threshold_fraction must be >= 0")
        if self.thresholds is not None:
            object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))

    def ets(self, data: Dataset) -> ETSConfig:
        if self.thresholds is not None:
            if len(self.thresholds) != data.n_attributes:
                raise ConfigError(f"{len(self.thresholds)} thresholds given for {data.n_attributes} attributes")
            return ETSConfig(self.thresholds, self.k, self.threshold_fraction)
        return ETSConfig.from_data(data, self.threshold_fraction, self.k)


def derive_thresholds(data: Dataset, fraction: float) -> np.ndarray:
    if fraction < 0:
        raise ConfigError("threshold fraction must be >= 0")
    return fraction * attribute_std_devs(data)


def ets_similarity(x, y, T) -> int:
    x, y, T = (np.asarray(v, dtype=float) for v in (x, y, T))
    if not (x.shape == y.shape == T.shape):
        raise DataError("dimension mismatch in similarity")
    return int(np.count_nonzero(np.abs(x - y) <= T))


def _vote(classes: np.ndarray, evidence: np.ndarray, higher_is_better: bool) -> int:
    """Majority class; ties by summed evidence, then lowest class index."""
    best = None
    for c in np.unique(classes):
        sel = classes == c
        ev = evidence[sel].sum()
        key = (int(sel.sum()), ev if higher_is_better else -ev, -int(c))
        if best is None or key > best[0]:
            best = (key, int(c))
    return best[1]


def ets_neighbors(x, data: Dataset, cfg: ETSConfig):
    """Row indices and similarities of the k most similar training points."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != data.n_attributes:
        raise DataError("dimension mismatch")
    if len(data) == 0:
        raise DataError("ETS k-NN needs training points")
    sims = np.count_nonzero(np.abs(data.points - x) <= np.asarray(cfg.thresholds), axis=1)
    # stable sort on -similarity keeps lowest row index first among equals
    idx = np.argsort(-sims, kind="stable")[:cfg.k]
    return idx, sims[idx]


def ets_knn_classify(x, data: Dataset, cfg: ETSConfig) -> int:
    idx, sims = ets_neighbors(x, data, cfg)
    return _vote(data.labels[idx], sims.astype(float), higher_is_better=True)


def hb_attribute_distance(x, hb: Hyperblock, metric: str = "manhattan") -> float:
    """Distance from x to the block, summed (or root-summed) over per-attribute gaps."""
    if metric not in METRICS:
        raise ConfigError(f"unknown metric {metric!r}")
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != hb.n_attributes:
        raise DataError("dimension mismatch")
    gaps = np.empty(hb.n_attributes)
    for i, (xi, c) in enumerate(zip(x, hb.constraints)):
        g = np.inf
        for lo, hi in c:
            if lo <= xi <= hi:
                g = 0.0
                break
            g = min(g, lo - xi if xi < lo else xi - hi)
        gaps[i] = g
    if metric == "manhattan":
        return float(gaps.sum())
    top = gaps.max()
    if top == 0.0:
        return 0.0
    # scaled so tiny gaps do not underflow to a zero distance
    return float(top * np.sqrt(((gaps / top) ** 2).sum()))


def _block_distances(x, blocks: Sequence[Hyperblock], metric: str) -> np.ndarray:
    if not blocks:
        raise DataError("model has no blocks")
    return np.array([hb_attribute_distance(x, b, metric) for b in blocks])


def nearest_hb_classify(x, blocks: Sequence[Hyperblock], metric: str = "manhattan") -> int:
    """Label of the closest block (ties: lowest id).  Accepts a model or a block list."""
    blocks = list(getattr(blocks, "blocks", blocks))
    d = _block_distances(x, blocks, metric)
    ids = np.array([b.id for b in blocks])
    best = np.lexsort((ids, d))[0]
    return blocks[best].label


def knn_hb_classify(x, blocks: Sequence[Hyperblock], metric: str = "manhattan", k: int = 5) -> int:
    blocks = list(getattr(blocks, "blocks", blocks))
    d = _block_distances(x, blocks, metric)
    ids = np.array([b.id for b in blocks])
    near = np.lexsort((ids, d))[:k]
    labels = np.array([blocks[i].label for i in near])
    return _vote(labels, d[near], higher_is_better=False)


def knn_euclidean_neighbors(x, data: Dataset, k: int):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != data.n_attributes:
        raise DataError("dimension mismatch")
    if not 1 <= k <= len(data):
        raise ConfigError(f"k={k} must be between 1 and the training size {len(data)}")
    d = np.sqrt(((data.points - x) ** 2).sum(axis=1))
    idx = np.argsort(d, kind="stable")[:k]
    return idx, d[idx]


def knn_euclidean_classify(x, data: Dataset, k: int = 5) -> int:
    idx, d = knn_euclidean_neighbors(x, data, k)
    return _vote(data.labels[idx], d, higher_is_better=False)
