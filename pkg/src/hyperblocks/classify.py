"""Point classification: normalized block vote, fallback when uncovered."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import fallback as fb_mod
from .dataset import Dataset, apply_normalization
from .errors import ConfigError, DataError
from .fallback import FallbackConfig
from .hyperblock import HBModel, membership_matrix

HB_VOTE = "hb_vote"
FALLBACK = "fallback"
ABSTAIN = "abstain"


@dataclass(frozen=True)
class ClassificationOutcome:
    predicted: int | None
    route: str
    scores: tuple[float, ...]
    contributing_blocks: tuple[int, ...]
    fallback_detail: dict | None = None

    @property
    def top_score(self) -> float:
        return max(self.scores) if self.scores else 0.0


class HBClassifier:
    """Bundles a model, a fallback choice and (for point-based fallbacks) training data.

    ``train`` must be the normalized training set when the fallback is
    ``ets`` or ``knn-euclidean``.
    """

    def __init__(self, model: HBModel, fb: FallbackConfig | None = None, train: Dataset | None = None):
        if not model.blocks and (fb is None or fb.method in (None, "nearest-hb", "knn-hb")):
            raise DataError("model has no blocks")
        self.model = model
        self.fb = fb if fb is not None else FallbackConfig()
        self.train = train
        self._counts = np.array(model.class_hb_counts, dtype=float)
        self._labels = np.array([b.label for b in model.blocks], dtype=int)
        self._ids = np.array([b.id for b in model.blocks], dtype=int)
        self._ets = None
        if self.fb.method in ("ets", "knn-euclidean"):
            if train is None:
                raise ConfigError(f"fallback {self.fb.method!r} needs the training data")
            if train.n_attributes != model.n_attributes:
                raise DataError("training data and model differ in attribute count")
            if self.fb.method == "ets":
                self._ets = self.fb.ets(train)

    def _prepare(self, points, raw: bool) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.model.n_attributes:
            raise DataError(f"expected {self.model.n_attributes} attributes, got {pts.shape[1]}")
        return apply_normalization(self.model.norm, pts) if raw else pts

    def _vote(self, inside_row: np.ndarray) -> ClassificationOutcome:
        K = len(self.model.class_names)
        hits = np.bincount(self._labels[inside_row], minlength=K).astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            scores = np.where(self._counts > 0, hits / np.where(self._counts > 0, self._counts, 1), 0.0)
        pred = int(np.argmax(scores))  # first maximum = lowest class index
        return ClassificationOutcome(pred, HB_VOTE, tuple(float(s) for s in scores),
                                     tuple(int(i) for i in self._ids[inside_row]))

    def _fallback(self, x: np.ndarray) -> ClassificationOutcome:
        K = len(self.model.class_names)
        m = self.fb.method
        if m is None:
            return ClassificationOutcome(None, ABSTAIN, tuple([0.0] * K), ())
        if m == "ets":
            idx, sims = fb_mod.ets_neighbors(x, self.train, self._ets)
            pred = fb_mod.ets_knn_classify(x, self.train, self._ets)
            labels = self.train.labels[idx]
            detail = {"neighbors": [int(i) for i in idx], "similarities": [int(s) for s in sims]}
        elif m == "knn-euclidean":
            idx, d = fb_mod.knn_euclidean_neighbors(x, self.train, self.fb.k)
            pred = fb_mod.knn_euclidean_classify(x, self.train, self.fb.k)
            labels = self.train.labels[idx]
            detail = {"neighbors": [int(i) for i in idx], "distances": [float(v) for v in d]}
        else:
            blocks = self.model.blocks
            d = np.array([fb_mod.hb_attribute_distance(x, b, self.fb.metric) for b in blocks])
            k = 1 if m == "nearest-hb" else self.fb.k
            near = np.lexsort((self._ids, d))[:k]
            labels = self._labels[near]
            if m == "nearest-hb":
                pred = fb_mod.nearest_hb_classify(x, blocks, self.fb.metric)
            else:
                pred = fb_mod.knn_hb_classify(x, blocks, self.fb.metric, self.fb.k)
            detail = {"blocks": [int(self._ids[i]) for i in near], "distances": [float(d[i]) for i in near]}
        votes = np.bincount(labels, minlength=K) / len(labels)
        return ClassificationOutcome(int(pred), FALLBACK, tuple(float(v) for v in votes), (), detail)

    def classify_point(self, x, raw: bool = False) -> ClassificationOutcome:
        pts = self._prepare(x, raw)
        if pts.shape[0] != 1:
            raise DataError("classify_point takes a single point")
        return self.classify_batch(pts)[0][0]

    def classify_batch(self, points, raw: bool = False):
        """Outcomes for every row plus the fraction routed through the block vote.

        The fraction is ``None`` for an empty input.
        """
        pts = self._prepare(points, raw) if len(points) else np.empty((0, self.model.n_attributes))
        inside = membership_matrix(self.model.blocks, pts) if self.model.blocks else \
            np.zeros((len(pts), 0), dtype=bool)
        out = []
        for i in range(len(pts)):
            if inside[i].any():
                out.append(self._vote(inside[i]))
            else:
                out.append(self._fallback(pts[i]))
        coverage = None if not out else sum(o.route == HB_VOTE for o in out) / len(out)
        return out, coverage


def classify_point(model: HBModel, x, fb: FallbackConfig | None = None,
                   train: Dataset | None = None, raw: bool = False) -> ClassificationOutcome:
    return HBClassifier(model, fb, train).classify_point(x, raw=raw)


def classify_batch(model: HBModel, points: Sequence, fb: FallbackConfig | None = None,
                   train: Dataset | None = None, raw: bool = False):
    return HBClassifier(model, fb, train).classify_batch(points, raw=raw)
