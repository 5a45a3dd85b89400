"""Initial block construction (IntervalHyper) and greedy same-class merging (CMH)."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, DataError
from .hyperblock import HBModel, Hyperblock, clause_count, members

TIE_BREAKS = ("lowest-attribute",)
QUEUE_POLICIES = ("coverage-ascending",)

# candidates evaluated per vectorized purity pass in the merge loop
_CHUNK = 32


@dataclass(frozen=True)
class GenerationConfig:
    tie_break: str = "lowest-attribute"
    queue_policy: str = "coverage-ascending"
    workers: int = 1

    def __post_init__(self):
        if self.tie_break not in TIE_BREAKS:
            raise ConfigError(f"unknown tie-break policy {self.tie_break!r}")
        if self.queue_policy not in QUEUE_POLICIES:
            raise ConfigError(f"unknown queue policy {self.queue_policy!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


def _pure_runs(data: Dataset):
    """All maximal pure 1-D intervals, ordered by attribute then lower bound.

    A value is pure for class c when every training point taking that value
    on the attribute has class c; a run is a maximal stretch of consecutive
    distinct values pure for the same class.

    Returns (attr, lo, hi, cls, starts, rows) where the rows of run r are
    ``rows[starts[r]:starts[r + 1]]``.
    """
    pts, lab = data.points, data.labels
    attrs, los, his, classes, row_chunks = [], [], [], [], []
    for a in range(pts.shape[1]):
        order = np.argsort(pts[:, a], kind="stable")
        vals = pts[order, a]
        cls = lab[order]
        cut = np.flatnonzero(np.diff(vals) != 0) + 1
        g_start = np.concatenate(([0], cut))
        g_end = np.concatenate((cut, [len(vals)]))
        g_min = np.minimum.reduceat(cls, g_start)
        g_max = np.maximum.reduceat(cls, g_start)
        g_cls = np.where(g_min == g_max, g_min, -1)
        g = 0
        while g < len(g_start):
            c = g_cls[g]
            if c < 0:
                g += 1
                continue
            h = g
            while h + 1 < len(g_start) and g_cls[h + 1] == c:
                h += 1
            attrs.append(a)
            los.append(vals[g_start[g]])
            his.append(vals[g_end[h] - 1])
            classes.append(int(c))
            row_chunks.append(order[g_start[g]:g_end[h]])
            g = h + 1
    sizes = np.array([len(r) for r in row_chunks], dtype=int)
    starts = np.concatenate(([0], np.cumsum(sizes)))
    rows = np.concatenate(row_chunks) if row_chunks else np.empty(0, dtype=int)
    return (np.array(attrs, dtype=int), np.array(los), np.array(his),
            np.array(classes, dtype=int), starts, rows)


def interval_hyper(data: Dataset) -> list[Hyperblock]:
    """Seed blocks from pure single-attribute intervals.

    Greedy: take the pure interval holding the most not-yet-covered points
    (ties: lowest attribute, then lowest lower bound), bound the other
    attributes by the envelope of the interval's points, mark them covered.
    Once no interval covers two uncovered points, each remaining point gets
    a degenerate single-point block.  Points whose exact coordinates are
    shared with another class cannot sit in any pure block and get none.
    """
    if len(data) == 0:
        raise DataError("cannot build hyperblocks from an empty dataset")
    pts, lab = data.points, data.labels
    attrs, los, his, classes, starts, rows = _pure_runs(data)
    run_of = np.repeat(np.arange(len(attrs)), np.diff(starts))
    covered = np.zeros(len(data), dtype=bool)
    blocks: list[Hyperblock] = []

    while len(attrs) and not covered.all():
        counts = np.bincount(run_of, weights=~covered[rows], minlength=len(attrs))
        best = int(np.argmax(counts))
        if counts[best] < 2:
            break
        r = rows[starts[best]:starts[best + 1]]
        lo = pts[r].min(axis=0)
        hi = pts[r].max(axis=0)
        a = attrs[best]
        lo[a], hi[a] = los[best], his[best]
        blocks.append(Hyperblock.from_bounds(lo, hi, classes[best], len(r), len(blocks)))
        covered[r] = True

    for i in np.flatnonzero(~covered):
        if covered[i]:
            continue
        same = np.all(pts == pts[i], axis=1)
        if np.any(lab[same] != lab[i]):
            continue  # conflicting duplicate, left to the fallback
        blocks.append(Hyperblock.from_bounds(pts[i], pts[i], lab[i], int(same.sum()), len(blocks)))
        covered[same] = True
    return blocks


def _inside_any(env_lo, env_hi, opp, workers):
    """Per candidate row: does some opposing point fall in its box?"""
    def scan(p):
        return np.any(np.all((p[None, :, :] >= env_lo[:, None, :]) &
                             (p[None, :, :] <= env_hi[:, None, :]), axis=2), axis=1)
    if workers <= 1 or len(opp) < 2 * workers:
        return scan(opp)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(scan, np.array_split(opp, workers)))
    return np.logical_or.reduce(parts)


def _first_pure(cur_lo, cur_hi, cand_lo, cand_hi, opp, workers=1) -> int:
    """Index of the first candidate whose envelope with the current box is pure, or -1."""
    if len(opp) == 0:
        return 0 if len(cand_lo) else -1
    for s in range(0, len(cand_lo), _CHUNK):
        env_lo = np.minimum(cur_lo, cand_lo[s:s + _CHUNK])
        env_hi = np.maximum(cur_hi, cand_hi[s:s + _CHUNK])
        hit = _inside_any(env_lo, env_hi, opp, workers)
        ok = np.flatnonzero(~hit)
        if len(ok):
            return s + int(ok[0])
    return -1


def cmh_merge(blocks: list[Hyperblock], data: Dataset, workers: int = 1) -> list[Hyperblock]:
    """Merge same-class blocks whenever their envelope stays pure.

    Seeds are taken from a queue ordered by ascending coverage.  A seed is
    compared with every other block in queue order; the first pure
    envelope absorbs the seed into that partner, and the enlarged partner
    keeps trying to absorb the partners that follow.  After the turn the
    surviving partner moves to the back of the queue so it can grow
    further before its own seed turn.  Blocks already used as seeds never
    seed again.  Returned blocks are in final queue order.
    """
    if not blocks:
        return []
    label = blocks[0].label
    if any(b.label != label for b in blocks):
        raise ValueError("cmh_merge works on one class at a time")
    lo = np.array([b.bounds()[0] for b in blocks])
    hi = np.array([b.bounds()[1] for b in blocks])
    opp = data.points[data.labels != label]
    own = data.points[data.labels == label]
    for i in range(len(blocks)):
        assert not np.any(np.all((opp >= lo[i]) & (opp <= hi[i]), axis=1)), \
            f"block {blocks[i].id} is impure"

    queue = sorted(range(len(blocks)), key=lambda i: (blocks[i].coverage, blocks[i].id))
    seeded = np.zeros(len(blocks), dtype=bool)

    while True:
        seed = next((q for q in queue if not seeded[q]), None)
        if seed is None:
            break
        seeded[seed] = True
        partners = np.array([q for q in queue if q != seed], dtype=int)
        cur_lo, cur_hi = lo[seed].copy(), hi[seed].copy()
        survivor = None
        absorbed = []
        start = 0
        while start < len(partners):
            rest = partners[start:]
            j = _first_pure(cur_lo, cur_hi, lo[rest], hi[rest], opp, workers)
            if j < 0:
                break
            p = int(rest[j])
            np.minimum(cur_lo, lo[p], out=cur_lo)
            np.maximum(cur_hi, hi[p], out=cur_hi)
            if survivor is None:
                survivor = p
            else:
                absorbed.append(p)
            start += j + 1
        if survivor is None:
            continue
        lo[survivor], hi[survivor] = cur_lo, cur_hi
        gone = set(absorbed) | {seed, survivor}
        queue = [q for q in queue if q not in gone] + [survivor]

    out = []
    for q in queue:
        cov = int(np.all((own >= lo[q]) & (own <= hi[q]), axis=1).sum())
        out.append(Hyperblock.from_bounds(lo[q], hi[q], label, cov, blocks[q].id))
    return out


def generate(data: Dataset, cfg: GenerationConfig | None = None) -> HBModel:
    """IntervalHyper, then CMH per class, then drop unmerged single-point blocks.

    Blocks are ordered by class, then by descending coverage, and renumbered
    from 0 in that order.
    """
    cfg = cfg or GenerationConfig()
    seeds = interval_hyper(data)
    merged: list[Hyperblock] = []
    for c in range(data.n_classes):
        merged.extend(cmh_merge([b for b in seeds if b.label == c], data, cfg.workers))

    kept = []
    for b in merged:
        cov = int(members(b, data.points[data.labels == b.label]).sum())
        if b.is_degenerate and cov == 1:
            continue
        kept.append((b, cov))
    kept.sort(key=lambda bc: (bc[0].label, -bc[1], bc[0].id))
    blocks = [Hyperblock(b.constraints, b.label, cov, i) for i, (b, cov) in enumerate(kept)]
    snapshot = {
        # workers is left out: it never changes the result
        "generation": {"tie_break": cfg.tie_break, "queue_policy": cfg.queue_policy},
        "stages": [{"stage": "generate", "block_count": len(blocks),
                    "clause_count": sum(clause_count(b) for b in blocks),
                    "seed_blocks": len(seeds), "merged_blocks": len(merged)}],
    }
    return HBModel(tuple(blocks), data.class_names, data.attribute_names, data.norm, snapshot)

