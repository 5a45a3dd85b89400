"""Hyperblock data model.

A hyperblock is one constraint per attribute plus a class label.  Each
constraint is a sorted tuple of disjoint closed intervals ``(lo, hi)``; the
usual case is a single interval, several intervals form a disjunctive
(OR) constraint.  ``(0.0, 1.0)`` alone is the trivial constraint and
costs no clause.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dataset import Dataset, NormalizationParams
from .errors import DataError, ModelFormatError

FORMAT_VERSION = 1

Interval = tuple[float, float]
Constraint = tuple[Interval, ...]
TRIVIAL: Constraint = ((0.0, 1.0),)


def coalesce(intervals) -> Constraint:
    """Sort intervals and fuse the ones that touch or overlap."""
    ivs = sorted((float(lo), float(hi)) for lo, hi in intervals)
    if not ivs:
        raise ValueError("a constraint needs at least one interval")
    out = [list(ivs[0])]
    for lo, hi in ivs[1:]:
        if lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return tuple((lo, hi) for lo, hi in out)


def is_trivial(c: Constraint) -> bool:
    return len(c) == 1 and c[0][0] <= 0.0 and c[0][1] >= 1.0


@dataclass(frozen=True)
class Hyperblock:
    constraints: tuple[Constraint, ...]
    label: int
    coverage: int = 0
    id: int = 0

    @classmethod
    def from_bounds(cls, lo, hi, label: int, coverage: int = 0, id: int = 0) -> "Hyperblock":
        cons = tuple(((float(a), float(b)),) for a, b in zip(lo, hi))
        return cls(cons, int(label), int(coverage), int(id))

    @property
    def n_attributes(self) -> int:
        return len(self.constraints)

    @property
    def is_simple(self) -> bool:
        return all(len(c) == 1 for c in self.constraints)

    @property
    def is_degenerate(self) -> bool:
        return all(len(c) == 1 and c[0][0] == c[0][1] for c in self.constraints)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """(lo, hi) arrays; only meaningful for simple blocks."""
        if not self.is_simple:
            raise ValueError(f"block {self.id} is disjunctive and has no simple bounds")
        lo = np.array([c[0][0] for c in self.constraints])
        hi = np.array([c[0][1] for c in self.constraints])
        return lo, hi

    def with_constraint(self, attr: int, c: Constraint) -> "Hyperblock":
        cons = list(self.constraints)
        cons[attr] = c
        return replace(self, constraints=tuple(cons))


@dataclass(frozen=True)
class HBModel:
    blocks: tuple[Hyperblock, ...]
    class_names: tuple[str, ...]
    attribute_names: tuple[str, ...]
    norm: NormalizationParams
    config_snapshot: dict = field(default_factory=dict)

    @property
    def class_hb_counts(self) -> tuple[int, ...]:
        counts = [0] * len(self.class_names)
        for b in self.blocks:
            counts[b.label] += 1
        return tuple(counts)

    @property
    def n_attributes(self) -> int:
        return len(self.attribute_names)

    def total_clauses(self) -> int:
        return sum(clause_count(b) for b in self.blocks)

    def with_blocks(self, blocks, **snapshot) -> "HBModel":
        """Copy with new blocks; keyword args are merged into the config snapshot."""
        snap = dict(self.config_snapshot)
        snap.update(_jsonable(snapshot))
        return replace(self, blocks=tuple(blocks), config_snapshot=snap)


# -- membership -------------------------------------------------------------

def _check_dim(hb: Hyperblock, n: int):
    if hb.n_attributes != n:
        raise DataError(f"block {hb.id} has {hb.n_attributes} attributes, point has {n}")


def contains(hb: Hyperblock, x) -> bool:
    x = np.asarray(x, dtype=float)
    _check_dim(hb, x.shape[-1])
    for xi, c in zip(x, hb.constraints):
        if not any(lo <= xi <= hi for lo, hi in c):
            return False
    return True


def constraint_mask(c: Constraint, values: np.ndarray) -> np.ndarray:
    lo, hi = c[0]
    m = (values >= lo) & (values <= hi)
    for lo, hi in c[1:]:
        m |= (values >= lo) & (values <= hi)
    return m


def members(hb: Hyperblock, points: np.ndarray) -> np.ndarray:
    """Boolean mask of the rows of ``points`` inside ``hb``."""
    points = np.atleast_2d(points)
    _check_dim(hb, points.shape[1])
    if hb.is_simple:
        lo, hi = hb.bounds()
        return np.all((points >= lo) & (points <= hi), axis=1)
    mask = np.ones(points.shape[0], dtype=bool)
    for i, c in enumerate(hb.constraints):
        if is_trivial(c):
            continue
        mask &= constraint_mask(c, points[:, i])
    return mask


def membership_matrix(blocks: Sequence[Hyperblock], points: np.ndarray) -> np.ndarray:
    """(n_points, n_blocks) boolean matrix."""
    points = np.atleast_2d(points)
    out = np.zeros((points.shape[0], len(blocks)), dtype=bool)
    for j, b in enumerate(blocks):
        out[:, j] = members(b, points)
    return out


def envelope(b1: Hyperblock, b2: Hyperblock) -> list[Interval]:
    """Per-attribute [min lo, max hi] of two simple blocks."""
    if not (b1.is_simple and b2.is_simple):
        raise ValueError("envelope is only defined for simple blocks")
    if b1.label != b2.label:
        raise ValueError(f"cannot envelope blocks of classes {b1.label} and {b2.label}")
    if b1.n_attributes != b2.n_attributes:
        raise DataError("blocks differ in dimension")
    return [(min(c1[0][0], c2[0][0]), max(c1[0][1], c2[0][1]))
            for c1, c2 in zip(b1.constraints, b2.constraints)]


def any_inside(lo: np.ndarray, hi: np.ndarray, points: np.ndarray, workers: int = 1) -> bool:
    """True if any row of ``points`` lies in the closed box [lo, hi].

    With ``workers > 1`` the rows are split into chunks scanned on a thread
    pool and OR-reduced; the answer never depends on the split.
    """
    if points.shape[0] == 0:
        return False
    if workers <= 1 or points.shape[0] < 2 * workers:
        return bool(np.any(np.all((points >= lo) & (points <= hi), axis=1)))
    chunks = np.array_split(points, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        hits = pool.map(lambda p: bool(np.any(np.all((p >= lo) & (p <= hi), axis=1))), chunks)
        return any(hits)


def purity_check(bounds, data: Dataset, label: int) -> bool:
    """True iff no training point of another class lies in the candidate region.

    ``bounds`` may be a Hyperblock, a sequence of constraints (tuples of
    intervals) or a sequence of simple ``(lo, hi)`` pairs.
    """
    if isinstance(bounds, Hyperblock):
        hb = bounds
    else:
        cons = []
        for c in bounds:
            c = tuple(c)
            cons.append(c if isinstance(c[0], (tuple, list)) else (tuple(c),))
        hb = Hyperblock(tuple(tuple(tuple(iv) for iv in c) for c in cons), label)
    _check_dim(hb, data.n_attributes)
    opp = data.points[data.labels != label]
    return not bool(members(hb, opp).any()) if len(opp) else True


def clause_count(hb: Hyperblock) -> int:
    return sum(len(c) for c in hb.constraints if not is_trivial(c))


# -- rule text ------------------------------------------------------------------

def _fmt(v: float, digits: int) -> str:
    return f"{v:.{digits}f}"


def to_rule_text(hb: Hyperblock, names: Sequence[str], class_names: Sequence[str],
                 digits: int = 2) -> str:
    if len(names) != hb.n_attributes:
        raise DataError("attribute names do not match block dimension")
    preds = []
    for name, c in zip(names, hb.constraints):
        if is_trivial(c):
            continue
        parts = [f"{_fmt(lo, digits)} ≤ {name} ≤ {_fmt(hi, digits)}" for lo, hi in c]
        preds.append(parts[0] if len(parts) == 1 else "(" + " or ".join(parts) + ")")
    body = " and ".join(preds) if preds else "always"
    return f"if {body} then {class_names[hb.label]}"


# -- serialization ----------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def serialize(model: HBModel) -> str:
    """Model document as JSON text; floats use shortest round-trip repr."""
    doc = {
        "version": FORMAT_VERSION,
        "class_names": list(model.class_names),
        "attribute_names": list(model.attribute_names),
        "normalization": {"mins": model.norm.mins.tolist(), "maxs": model.norm.maxs.tolist()},
        "class_hb_counts": list(model.class_hb_counts),
        "config": _jsonable(model.config_snapshot),
        "blocks": [
            {
                "id": b.id,
                "label": b.label,
                "coverage": b.coverage,
                "constraints": [[[lo, hi] for lo, hi in c] for c in b.constraints],
            }
            for b in model.blocks
        ],
    }
    return json.dumps(doc, indent=1, sort_keys=False, allow_nan=False) + "\n"


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ModelFormatError(f"{where}: expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ModelFormatError(f"{where}: non-finite value")
    return v


def deserialize(text: str) -> HBModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    for key in ("version", "class_names", "attribute_names", "normalization", "blocks"):
        if key not in doc:
            raise ModelFormatError(f"model document missing {key!r}")
    if doc["version"] != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {doc['version']!r} (expected {FORMAT_VERSION})")

    class_names = tuple(str(c) for c in doc["class_names"])
    names = tuple(str(a) for a in doc["attribute_names"])
    n = len(names)
    try:
        mins = [_num(v, "normalization.mins") for v in doc["normalization"]["mins"]]
        maxs = [_num(v, "normalization.maxs") for v in doc["normalization"]["maxs"]]
        norm = NormalizationParams(np.array(mins), np.array(maxs))
    except (KeyError, TypeError, DataError) as exc:
        raise ModelFormatError(f"bad normalization section: {exc}") from exc
    if norm.mins.shape[0] != n:
        raise ModelFormatError("normalization length does not match attribute count")

    blocks = []
    seen_ids = set()
    for pos, bd in enumerate(doc["blocks"]):
        try:
            bid, label, cov, raw_cons = bd["id"], bd["label"], bd["coverage"], bd["constraints"]
        except (KeyError, TypeError):
            raise ModelFormatError(f"block #{pos}: missing id/label/coverage/constraints") from None
        if not isinstance(bid, int) or bid in seen_ids:
            raise ModelFormatError(f"block #{pos}: id must be a unique integer")
        seen_ids.add(bid)
        if not isinstance(label, int) or not 0 <= label < len(class_names):
            raise ModelFormatError(f"block {bid}: label {label!r} out of range")
        if not isinstance(cov, int) or cov < 0:
            raise ModelFormatError(f"block {bid}: coverage must be a non-negative integer")
        if not isinstance(raw_cons, list) or len(raw_cons) != n:
            raise ModelFormatError(f"block {bid}: expected {n} constraints")
        cons = []
        for a, c in enumerate(raw_cons):
            where = f"block {bid}, attribute {a} ({names[a]})"
            if not isinstance(c, list) or not c:
                raise ModelFormatError(f"{where}: constraint must be a non-empty list of intervals")
            ivs = []
            for iv in c:
                if not isinstance(iv, list) or len(iv) != 2:
                    raise ModelFormatError(f"{where}: interval must be [lo, hi]")
                lo, hi = _num(iv[0], where), _num(iv[1], where)
                if lo > hi:
                    raise ModelFormatError(f"{where}: lo {lo} > hi {hi}")
                if lo < 0.0 or hi > 1.0:
                    raise ModelFormatError(f"{where}: interval outside [0, 1]")
                if ivs and lo <= ivs[-1][1]:
                    raise ModelFormatError(f"{where}: intervals overlap or are unsorted")
                ivs.append((lo, hi))
            cons.append(tuple(ivs))
        blocks.append(Hyperblock(tuple(cons), label, cov, bid))

    snapshot = doc.get("config", {})
    if not isinstance(snapshot, dict):
        raise ModelFormatError("config must be an object")
    model = HBModel(tuple(blocks), class_names, names, norm, snapshot)
    if "class_hb_counts" in doc and list(model.class_hb_counts) != doc["class_hb_counts"]:
        raise ModelFormatError("class_hb_counts disagrees with the block list")
    return model

