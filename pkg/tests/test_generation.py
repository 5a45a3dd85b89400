import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperblocks.errors import ConfigError, DataError
from hyperblocks.generation import GenerationConfig, cmh_merge, generate, interval_hyper
from hyperblocks.hyperblock import Hyperblock, members, purity_check

from conftest import make_dataset, random_dataset
import oracles


def covered_mask(blocks, points):
    m = np.zeros(len(points), dtype=bool)
    for b in blocks:
        m |= members(b, points)
    return m


def assert_pure(blocks, data):
    for b in blocks:
        assert purity_check(b, data, b.label), f"block {b.id} admits an opposing point"


# -- interval_hyper ---------------------------------------------------------------

def test_single_point():
    blocks = interval_hyper(make_dataset([[0.3, 0.7]], [0]))
    assert len(blocks) == 1
    assert blocks[0].coverage == 1 and blocks[0].is_degenerate


def test_checkerboard_gives_single_point_blocks():
    pts = [[0, 0], [0, 1], [1, 0], [1, 1]]
    lab = [0, 1, 1, 0]
    assert oracles.pure_intervals_1d(pts, lab) == []
    blocks = interval_hyper(make_dataset(pts, lab))
    assert len(blocks) == 4
    assert all(b.is_degenerate and b.coverage == 1 for b in blocks)


def test_empty_dataset():
    with pytest.raises(DataError):
        interval_hyper(make_dataset(np.empty((0, 2)), np.empty(0, dtype=int)))


def test_iris_setosa_interval(iris):
    blocks = interval_hyper(iris)
    setosa = iris.class_names.index("setosa")
    best = max((b for b in blocks if b.label == setosa), key=lambda b: b.coverage)
    inside = members(best, iris.points)
    assert inside[iris.labels == setosa].all()
    assert best.coverage == 50


def test_conflicting_duplicates_left_uncovered(synthetic):
    d = synthetic["conflict"]
    blocks = interval_hyper(d)
    cov = covered_mask(blocks, d.points)
    assert not cov[4] and not cov[5]
    assert cov[:4].all()
    assert_pure(blocks, d)


@pytest.mark.parametrize("seed", range(25))
def test_first_round_is_largest_pure_interval(seed):
    d = random_dataset(np.random.default_rng(seed), n_points=int(12 + seed), n_attributes=3, grid=6)
    pts, lab = d.points.tolist(), d.labels.tolist()
    cands = oracles.pure_intervals_1d(pts, lab)
    blocks = interval_hyper(d)
    if not cands:
        assert all(b.is_degenerate for b in blocks)
        return
    def count(c):
        a, lo, hi = c
        return sum(lo <= p[a] <= hi for p in pts)
    best = max(cands, key=lambda c: (count(c), -c[0], -c[1]))
    first = blocks[0]
    a = best[0]
    assert first.coverage == count(best)
    assert first.constraints[a] == ((best[1], best[2]),)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([None, 4, 10]))
def test_interval_hyper_pure_and_covering(seed, grid):
    d = random_dataset(np.random.default_rng(seed), grid=grid)
    blocks = interval_hyper(d)
    assert_pure(blocks, d)
    cov = covered_mask(blocks, d.points)
    for i in np.flatnonzero(~cov):
        same = np.all(d.points == d.points[i], axis=1)
        assert len(set(d.labels[same].tolist())) > 1, "only conflicting duplicates may stay uncovered"


# -- cmh_merge --------------------------------------------------------------------

def test_valid_merge():
    d = make_dataset([[0.1, 0.1], [0.2, 0.2], [0.3, 0.3], [0.35, 0.4], [0.9, 0.9]], [0, 0, 0, 0, 1])
    b1 = Hyperblock.from_bounds([0.1, 0.1], [0.2, 0.2], 0, 2, 0)
    b2 = Hyperblock.from_bounds([0.3, 0.3], [0.35, 0.4], 0, 2, 1)
    out = cmh_merge([b1, b2], d)
    assert len(out) == 1
    assert out[0].bounds()[0].tolist() == [0.1, 0.1] and out[0].bounds()[1].tolist() == [0.35, 0.4]
    assert out[0].coverage == 4


def test_invalid_merge():
    d = make_dataset([[0.1, 0.1], [0.2, 0.2], [0.5, 0.5], [0.8, 0.8], [0.9, 0.9]], [0, 0, 1, 0, 0])
    b1 = Hyperblock.from_bounds([0.1, 0.1], [0.2, 0.2], 0, 2, 0)
    b2 = Hyperblock.from_bounds([0.8, 0.8], [0.9, 0.9], 0, 2, 1)
    out = cmh_merge([b1, b2], d)
    assert sorted(b.constraints for b in out) == sorted([b1.constraints, b2.constraints])


def test_single_block_unchanged():
    d = make_dataset([[0.1], [0.2], [0.8]], [0, 0, 1])
    b = Hyperblock.from_bounds([0.1], [0.2], 0, 2, 3)
    out = cmh_merge([b], d)
    assert len(out) == 1 and out[0].constraints == b.constraints and out[0].id == 3


def test_impure_input_asserts():
    d = make_dataset([[0.1], [0.2], [0.15]], [0, 0, 1])
    with pytest.raises(AssertionError):
        cmh_merge([Hyperblock.from_bounds([0.1], [0.2], 0)], d)


def seeds_by_class(d):
    seeds = interval_hyper(d)
    return {c: [b for b in seeds if b.label == c] for c in range(d.n_classes)}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([None, 5]))
def test_cmh_properties(seed, grid):
    d = random_dataset(np.random.default_rng(seed), grid=grid)
    for c, blocks in seeds_by_class(d).items():
        if not blocks:
            continue
        out = cmh_merge(blocks, d)
        assert_pure(out, d)
        # coverage never shrinks
        before = covered_mask(blocks, d.points)
        after = covered_mask(out, d.points)
        assert not (before & ~after).any()
        # surviving blocks are pairwise unmergeable
        pts, lab = d.points.tolist(), d.labels.tolist()
        for i in range(len(out)):
            for j in range(i + 1, len(out)):
                lo = np.minimum(out[i].bounds()[0], out[j].bounds()[0])
                hi = np.maximum(out[i].bounds()[1], out[j].bounds()[1])
                assert not oracles.box_pure(lo.tolist(), hi.tolist(), pts, lab, c)
        # running again changes nothing
        again = cmh_merge(out, d)
        assert sorted(b.constraints for b in again) == sorted(b.constraints for b in out)


@pytest.mark.parametrize("seed", range(5))
def test_workers_do_not_change_result(seed):
    d = random_dataset(np.random.default_rng(100 + seed), n_points=200, n_attributes=5)
    one = generate(d, GenerationConfig(workers=1))
    four = generate(d, GenerationConfig(workers=4))
    assert one == four


def test_tight_clusters_one_block_per_class(synthetic):
    d = synthetic["clusters"]
    pts, lab = d.points.tolist(), d.labels.tolist()
    # brute force: every pair of same-class seeds has a pure envelope
    for c, blocks in seeds_by_class(d).items():
        for b1 in blocks:
            for b2 in blocks:
                lo = np.minimum(b1.bounds()[0], b2.bounds()[0]).tolist()
                hi = np.maximum(b1.bounds()[1], b2.bounds()[1]).tolist()
                assert oracles.box_pure(lo, hi, pts, lab, c)
    m = generate(d)
    assert m.class_hb_counts == (1, 1)
    assert [b.coverage for b in m.blocks] == [30, 30]


# -- generate ---------------------------------------------------------------------

def test_iris_setosa_block(iris):
    m = generate(iris)
    setosa = iris.class_names.index("setosa")
    assert any(b.label == setosa and b.coverage == 50 for b in m.blocks)


def test_wbc_generate_pure_and_covering(wbc):
    m = generate(wbc)
    assert_pure(m.blocks, wbc)
    seeds = interval_hyper(wbc)
    removed = []
    for c, blocks in seeds_by_class(wbc).items():
        for b in cmh_merge(blocks, wbc):
            if b.is_degenerate and b.coverage == 1:
                removed.append(b)
    lost = covered_mask(removed, wbc.points)
    kept_cov = covered_mask(m.blocks, wbc.points)
    assert (covered_mask(seeds, wbc.points) & ~lost & ~kept_cov).sum() == 0
    for b in m.blocks:
        assert b.coverage == int(members(b, wbc.points[wbc.labels == b.label]).sum())


def test_generate_order_and_ids(wbc):
    m = generate(wbc)
    assert [b.id for b in m.blocks] == list(range(len(m.blocks)))
    keys = [(b.label, -b.coverage) for b in m.blocks]
    assert keys == sorted(keys)
    assert not any(b.is_degenerate and b.coverage == 1 for b in m.blocks)
    stage = m.config_snapshot["stages"][0]
    assert stage["block_count"] == len(m.blocks) and stage["clause_count"] == m.total_clauses()


def test_generate_deterministic(iris):
    assert generate(iris) == generate(iris)


def test_config_validation():
    with pytest.raises(ConfigError):
        GenerationConfig(tie_break="random")
    with pytest.raises(ConfigError):
        GenerationConfig(queue_policy="lifo")
    with pytest.raises(ConfigError):
        GenerationConfig(workers=0)
