"""Model simplification: attribute generalization (R2A), redundant-block
removal (R2B) and disjunctive merging.  Every step keeps blocks pure on the
training data it is given."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .errors import ConfigError
from .hyperblock import (TRIVIAL, HBModel, Hyperblock, clause_count, coalesce,
                         constraint_mask, is_trivial, members, membership_matrix)

ORDER_POLICIES = ("fisher", "natural")
STAGES = ("r2a", "r2b", "disjunctive")


@dataclass(frozen=True)
class SimplifyConfig:
    removal_threshold: int = 1
    attribute_order: str | tuple[int, ...] = "fisher"
    max_disjunctions: int = 1
    stages: tuple[str, ...] = STAGES

    def __post_init__(self):
        if self.removal_threshold < 0:
            raise ConfigError("removal_threshold must be >= 0")
        if self.max_disjunctions < 0:
            raise ConfigError("max_disjunctions must be >= 0")
        if isinstance(self.attribute_order, str):
            if self.attribute_order not in ORDER_POLICIES:
                raise ConfigError(f"unknown attribute order policy {self.attribute_order!r}")
        else:
            object.__setattr__(self, "attribute_order", tuple(int(a) for a in self.attribute_order))
        object.__setattr__(self, "stages", tuple(self.stages))
        for s in self.stages:
            if s not in STAGES:
                raise ConfigError(f"unknown simplification stage {s!r}")


def fisher_ratios(data: Dataset) -> np.ndarray:
    """Per-attribute ratio of between-class to within-class variance.

    Both variances weight classes by their share of the rows.  A zero
    within-class variance gives ``inf`` when the class means differ and 0
    when they do not.
    """
    pts, lab = data.points, data.labels
    classes = np.unique(lab)
    w = np.array([np.mean(lab == c) for c in classes])
    means = np.array([pts[lab == c].mean(axis=0) for c in classes])
    varis = np.array([pts[lab == c].var(axis=0) for c in classes])
    overall = w @ means
    between = w @ (means - overall) ** 2
    within = w @ varis
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(within > 0, between / np.where(within > 0, within, 1.0),
                         np.where(between > 1e-15, np.inf, 0.0))
    return ratio


def attribute_order(data: Dataset, policy: str = "fisher") -> list[int]:
    """Order in which R2A tries to drop attributes (least discriminative first)."""
    n = data.n_attributes
    if policy == "natural":
        return list(range(n))
    if policy == "fisher":
        ratio = fisher_ratios(data)
        return sorted(range(n), key=lambda a: (ratio[a], a))
    raise ConfigError(f"unknown attribute order policy {policy!r}")


def _resolve_order(data: Dataset, order) -> list[int]:
    if isinstance(order, str):
        return attribute_order(data, order)
    order = [int(a) for a in order]
    if sorted(order) != list(range(data.n_attributes)):
        raise ConfigError(f"attribute order {order} is not a permutation of 0..{data.n_attributes - 1}")
    return order


def _r2a_block(hb: Hyperblock, opp: np.ndarray, order: Sequence[int]) -> Hyperblock:
    if len(opp) == 0:
        return replace(hb, constraints=tuple(TRIVIAL for _ in hb.constraints))
    inside = np.column_stack([
        np.ones(len(opp), dtype=bool) if is_trivial(c) else constraint_mask(c, opp[:, a])
        for a, c in enumerate(hb.constraints)
    ])
    cons = list(hb.constraints)
    for a in order:
        if is_trivial(cons[a]):
            continue
        trial = inside.copy()
        trial[:, a] = True
        if not trial.all(axis=1).any():
            inside = trial
            cons[a] = TRIVIAL
    return replace(hb, constraints=tuple(cons))


def r2a(model: HBModel, data: Dataset, order="fisher") -> HBModel:
    """Widen each block's attribute intervals to [0, 1] wherever purity survives."""
    perm = _resolve_order(data, order)
    blocks = []
    for b in model.blocks:
        nb = _r2a_block(b, data.points[data.labels != b.label], perm)
        cov = int(members(nb, data.points[data.labels == b.label]).sum())
        blocks.append(replace(nb, coverage=cov))
    return model.with_blocks(blocks)


def r2b_counts(model: HBModel, data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Step-2 and step-4 point counts per block (in model order)."""
    B = len(model.blocks)
    if B == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    inside = membership_matrix(model.blocks, data.points)
    covered = inside.any(axis=1)
    first = np.argmax(inside, axis=1)
    step2 = np.bincount(first[covered], minlength=B)
    # largest step-2 count wins; equal counts go to the lower block id
    ids = np.array([b.id for b in model.blocks])
    rank = np.lexsort((ids, -step2))  # best block first
    pos = np.empty(B, dtype=int)
    pos[rank] = np.arange(B)
    score = np.where(inside, pos[None, :], B)
    best = np.argmin(score, axis=1)
    step4 = np.bincount(best[covered], minlength=B)
    return step2, step4


def r2b(model: HBModel, data: Dataset, removal_threshold: int = 1) -> HBModel:
    """Reassign points to their largest containing block and drop small blocks."""
    _, step4 = r2b_counts(model, data)
    blocks = [replace(b, coverage=int(c)) for b, c in zip(model.blocks, step4)
              if c >= removal_threshold]
    return model.with_blocks(blocks)


def _differing(b1: Hyperblock, b2: Hyperblock) -> list[int]:
    return [a for a, (c1, c2) in enumerate(zip(b1.constraints, b2.constraints)) if c1 != c2]


def disjunctive_candidate(b1: Hyperblock, b2: Hyperblock, max_disjunctions: int):
    """Merged block for a pair differing on at most ``max_disjunctions`` attributes, else None."""
    if b1.label != b2.label:
        return None
    diff = _differing(b1, b2)
    if len(diff) > max_disjunctions:
        return None
    cons = list(b1.constraints)
    for a in diff:
        cons[a] = coalesce(b1.constraints[a] + b2.constraints[a])
    return replace(b1, constraints=tuple(cons), id=min(b1.id, b2.id))


def disjunctive_merge(model: HBModel, data: Dataset, max_disjunctions: int = 1) -> HBModel:
    """Greedily fuse same-class pairs into blocks with OR constraints.

    Pairs are scanned in ascending id order; an accepted merge keeps the
    smaller id and the scan restarts, until a full pass merges nothing.
    """
    blocks = list(model.blocks)
    changed = True
    while changed:
        changed = False
        order = sorted(range(len(blocks)), key=lambda i: blocks[i].id)
        for x, i in enumerate(order):
            for j in order[x + 1:]:
                cand = disjunctive_candidate(blocks[i], blocks[j], max_disjunctions)
                if cand is None:
                    continue
                if members(cand, data.points[data.labels != cand.label]).any():
                    continue
                cov = int(members(cand, data.points[data.labels == cand.label]).sum())
                keep, drop = (i, j) if blocks[i].id < blocks[j].id else (j, i)
                blocks[keep] = replace(cand, coverage=cov)
                del blocks[drop]
                changed = True
                break
            if changed:
                break
    return model.with_blocks(blocks)


def _stage_record(stage: str, model: HBModel) -> dict:
    return {"stage": stage, "block_count": len(model.blocks), "clause_count": model.total_clauses()}


def simplify_pipeline(model: HBModel, data: Dataset, cfg: SimplifyConfig | None = None) -> HBModel:
    """Run the configured stages in order, logging block/clause counts after each."""
    cfg = cfg or SimplifyConfig()
    stages = list(model.config_snapshot.get("stages", []))
    if not stages:
        stages.append(_stage_record("input", model))
    order = _resolve_order(data, cfg.attribute_order)
    for stage in cfg.stages:
        if stage == "r2a":
            model = r2a(model, data, order)
        elif stage == "r2b":
            model = r2b(model, data, cfg.removal_threshold)
        else:
            model = disjunctive_merge(model, data, cfg.max_disjunctions)
        stages.append(_stage_record(stage, model))
    snap = {
        "removal_threshold": cfg.removal_threshold,
        "attribute_order": cfg.attribute_order if isinstance(cfg.attribute_order, str) else list(cfg.attribute_order),
        "resolved_attribute_order": order,
        "max_disjunctions": cfg.max_disjunctions,
        "stages": list(cfg.stages),
    }
    return model.with_blocks(model.blocks, simplify=snap, stages=stages)
