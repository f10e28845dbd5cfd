"""Embedding routes: domination, isometry, non-expansiveness, decomposition."""

import math

import numpy as np
import pytest

from divcut.core import Hypergraph, iter_subsets, mask_of, members_of
from divcut.diversity import (
    Metric,
    diameter_oracle,
    k_diameter_oracle,
    l1_oracle,
    steiner_oracle,
)
from divcut.embed import (
    CutDecomposition,
    DistortionReport,
    Embedding,
    WeightedTree,
    diam_to_l1,
    frechet_embed,
    frt_embed,
    identity_embed,
    kdiam_route,
    l1_to_cuts,
    measure_distortion,
    naive_embed,
    steiner_to_l1,
    tree_diversity_oracle,
    tree_to_l1,
)


def _path_tree() -> WeightedTree:
    return WeightedTree((-1, 0, 1), (0.0, 1.0, 1.0), (0, 1, 2))


def _random_metric(rng, n: int) -> Metric:
    pts = rng.random((n, 3)) * 4
    d = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)
    return Metric(d)


def _random_tree(rng, size: int) -> WeightedTree:
    parent = (-1,) + tuple(int(rng.integers(0, v)) for v in range(1, size))
    weight = (0.0,) + tuple(float(w) for w in rng.random(size - 1) * 3)
    point_node = tuple(int(v) for v in rng.integers(0, size, size=size))
    return WeightedTree(parent, weight, point_node)


def _straddle_weight(t: WeightedTree, members) -> float:
    # independent reference: an edge is spanned iff the points below it
    # are split from the rest
    below = [set() for _ in range(t.size)]
    for x in range(t.n):
        v = t.point_node[x]
        while v != 0:
            below[v].add(x)
            v = t.parent[v]
    chosen = set(members)
    return sum(t.weight[v] for v in range(1, t.size)
               if (chosen & below[v]) and (chosen - below[v]))


# ---- trees ----

def test_tree_distance_on_a_path():
    t = _path_tree()
    assert t.distance(0, 2) == 2.0
    assert t.distance(1, 2) == 1.0
    assert t.distance(0, 0) == 0.0


def test_tree_validation():
    with pytest.raises(ValueError, match="precede"):
        WeightedTree((-1, 2, 0), (0.0, 1.0, 1.0), (0, 1, 2))
    with pytest.raises(ValueError, match="root"):
        WeightedTree((-1, 0), (1.0, 1.0), (0, 1))
    with pytest.raises(ValueError, match="outside"):
        WeightedTree((-1, 0), (0.0, 1.0), (0, 5))


def test_tree_to_l1_path_coordinates():
    emb = tree_to_l1(_path_tree())
    assert emb.coords.tolist() == [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]
    assert emb.l1_diversity({0, 1, 2}) == 2.0
    assert emb.l1_diversity({0}) == 0.0
    assert emb.tag == "frt-tree"


def test_tree_to_l1_single_edge():
    t = WeightedTree((-1, 0), (0.0, 5.0), (0, 1))
    assert tree_to_l1(t).l1_diversity({0, 1}) == 5.0


def test_tree_diversity_oracle_path_values():
    div = tree_diversity_oracle(_path_tree())
    assert div.value({0, 2}) == 2.0
    assert div.value({0, 1}) == 1.0
    assert div.value({0, 1, 2}) == 2.0


def test_tree_isometry_on_random_trees():
    rng = np.random.default_rng(5)
    for _ in range(12):
        size = int(rng.integers(2, 9))
        t = _random_tree(rng, size)
        div = tree_diversity_oracle(t)
        emb = tree_to_l1(t)
        ev = l1_oracle(emb.coords)
        for mask in iter_subsets(t.n, t.n, min_size=2):
            want = _straddle_weight(t, members_of(mask))
            assert div.value(mask) == pytest.approx(want, rel=1e-9, abs=1e-12)
            assert ev.value(mask) == pytest.approx(want, rel=1e-9, abs=1e-12)


# ---- FRT ----

def test_frt_dominates_on_every_draw():
    rng = np.random.default_rng(2)
    m = _random_metric(rng, 7)
    for _ in range(50):
        t = frt_embed(m, rng)
        for u in range(m.n):
            for v in range(u + 1, m.n):
                assert t.distance(u, v) >= m.d[u, v] * (1 - 1e-9)


def test_frt_merges_zero_distance_points():
    d = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
    t = frt_embed(Metric(d), np.random.default_rng(0))
    assert t.distance(0, 1) == 0.0
    assert t.point_node[0] == t.point_node[1]
    assert t.distance(0, 2) >= 1.0


def test_frt_two_points():
    m = Metric([[0.0, 1.0], [1.0, 0.0]])
    for seed in range(20):
        t = frt_embed(m, np.random.default_rng(seed))
        assert t.distance(0, 1) >= 1.0


def test_frt_expected_stretch_on_the_uniform_metric():
    n = 8
    m = Metric(np.ones((n, n)) - np.eye(n))
    rng = np.random.default_rng(9)
    total = np.zeros((n, n))
    draws = 2000
    for _ in range(draws):
        t = frt_embed(m, rng)
        for u in range(n):
            for v in range(u + 1, n):
                total[u, v] += t.distance(u, v)
    assert (total[np.triu_indices(n, 1)] / draws).max() <= 4 * math.log(n)


def test_frt_is_deterministic_per_seed():
    m = _random_metric(np.random.default_rng(1), 6)
    a = frt_embed(m, np.random.default_rng(33))
    b = frt_embed(m, np.random.default_rng(33))
    assert a == b


def test_frt_single_point():
    t = frt_embed(Metric([[0.0]]), np.random.default_rng(0))
    assert t.size == 1 and t.point_node == (0,)


# ---- steiner route ----

def test_steiner_route_dominates_pairs():
    m = Metric([[0.0, 1.0], [1.0, 0.0]])
    emb = steiner_to_l1(m, np.random.default_rng(4), trials=4)
    assert emb.l1_diversity({0, 1}) >= 1.0 - 1e-9


def test_steiner_route_is_deterministic_and_measured():
    rng = np.random.default_rng(8)
    m = _random_metric(rng, 8)
    emb1 = steiner_to_l1(m, np.random.default_rng(8), trials=6)
    emb2 = steiner_to_l1(m, np.random.default_rng(8), trials=6)
    assert np.array_equal(emb1.coords, emb2.coords)
    report = measure_distortion(diameter_oracle(m), emb1, size_cap=4)
    assert math.isfinite(report.c2)


# ---- Frechet ----

def test_frechet_equalizes_zero_distance_points():
    d = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
    emb = frechet_embed(Metric(d), np.random.default_rng(0))
    assert np.array_equal(emb.coords[0], emb.coords[1])


def test_frechet_is_nonexpansive_and_below_diameter():
    rng = np.random.default_rng(3)
    m = _random_metric(rng, 16)
    emb = frechet_embed(m, np.random.default_rng(3))
    assert emb.tag == "frechet"
    coords = emb.coords
    for u in range(m.n):
        for v in range(u + 1, m.n):
            gap = float(np.abs(coords[u] - coords[v]).sum())
            assert gap <= m.d[u, v] * (1 + 1e-9)
    diam = diameter_oracle(m)
    ev = l1_oracle(coords)
    check = list(iter_subsets(m.n, 2, min_size=2))
    check += [int(x) for x in rng.integers(1, 2**m.n, size=200)]
    for mask in check:
        assert ev.value(mask) <= diam.value(mask) * (1 + 1e-9) + 1e-12


def test_frechet_needs_two_points_and_is_seeded():
    with pytest.raises(ValueError, match="two points"):
        frechet_embed(Metric([[0.0]]), np.random.default_rng(0))
    m = Metric([[0.0, 2.0], [2.0, 0.0]])
    a = frechet_embed(m, np.random.default_rng(5))
    b = frechet_embed(m, np.random.default_rng(5))
    assert np.array_equal(a.coords, b.coords)


def test_diam_route_upper_bound_on_equilateral_points():
    m = Metric(np.ones((3, 3)) - np.eye(3))
    emb = diam_to_l1(m, np.random.default_rng(1))
    assert emb.l1_diversity({0, 1, 2}) <= 1.0 + 1e-9
    assert emb.l1_diversity({1}) == 0.0


def test_kdiam_route_certificates():
    points = [[0.0], [1.0], [3.0]]
    two, report = kdiam_route(k_diameter_oracle(l1_oracle(points), 2), 2)
    assert report.c1 == pytest.approx(1.0)
    assert report.c2 == pytest.approx(1.0)

    star = Hypergraph.from_edges(4, [({0, 3}, 1.0), ({1, 3}, 1.0), ({2, 3}, 1.0)])
    div = k_diameter_oracle(steiner_oracle(star), 3)
    diam, report = kdiam_route(div, 3)
    assert report.c1 <= 3.0 + 1e-9
    assert diam.value({0, 1, 2}) == 2.0
    assert div.value({0, 1, 2}) == 3.0


# ---- naive and identity ----

def test_naive_embed_two_points():
    emb = naive_embed(Metric([[0.0, 1.0], [1.0, 0.0]]))
    assert emb.coords.tolist() == [[0.0, 1.0], [1.0, 0.0]]
    assert emb.l1_diversity({0, 1}) == 2.0


def test_naive_embed_equilateral():
    emb = naive_embed(Metric(np.ones((3, 3)) - np.eye(3)))
    assert emb.l1_diversity({0, 1, 2}) == 3.0


def test_naive_embed_sandwich():
    m = _random_metric(np.random.default_rng(6), 5)
    div = diameter_oracle(m)
    ev = l1_oracle(naive_embed(m).coords)
    for mask in iter_subsets(5, 5, min_size=2):
        val = div.value(mask)
        assert val * (1 - 1e-9) <= ev.value(mask) <= 5 * val * (1 + 1e-9)


# ---- decomposition ----

def test_threshold_cuts_on_a_line():
    dec = l1_to_cuts(identity_embed([[0.0], [1.0], [3.0]]))
    assert dec.cuts == ((mask_of([0]), 1.0), (mask_of([0, 1]), 2.0))
    assert dec.value({0, 1, 2}) == 3.0
    assert dec.value({0, 1}) == 1.0


def test_threshold_cuts_collapse_to_empty():
    dec = l1_to_cuts(identity_embed([[2.0], [2.0], [2.0]]))
    assert dec.cuts == ()
    assert dec.value({0, 1, 2}) == 0.0


def test_threshold_cuts_in_the_plane():
    dec = l1_to_cuts(identity_embed([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]))
    assert len(dec.cuts) == 2
    assert sorted(alpha for _, alpha in dec.cuts) == [1.0, 1.0]


def test_cut_reconstruction_matches_l1_everywhere():
    rng = np.random.default_rng(12)
    for _ in range(10):
        n, m = int(rng.integers(2, 7)), int(rng.integers(1, 4))
        emb = identity_embed(rng.random((n, m)) * 5)
        dec = l1_to_cuts(emb)
        assert len(dec.cuts) <= (n - 1) * m
        ev = l1_oracle(emb.coords)
        for mask in iter_subsets(n, n, min_size=2):
            want = ev.value(mask)
            assert dec.value(mask) == pytest.approx(want, rel=1e-9, abs=1e-12)


# ---- distortion measurement ----

def test_identity_distortion_is_one():
    pts = [[0.0, 2.0], [1.0, 0.0], [3.0, 1.0]]
    report = measure_distortion(l1_oracle(pts), identity_embed(pts))
    assert report.c1 == pytest.approx(1.0)
    assert report.c2 == pytest.approx(1.0)
    assert report.c == pytest.approx(1.0)


def test_tree_route_distortion_is_one():
    t = _random_tree(np.random.default_rng(7), 7)
    report = measure_distortion(tree_diversity_oracle(t), tree_to_l1(t))
    assert report.c == pytest.approx(1.0, abs=1e-9)


def test_naive_distortion_at_most_n():
    m = _random_metric(np.random.default_rng(10), 5)
    report = measure_distortion(diameter_oracle(m), naive_embed(m))
    assert report.c1 <= 1.0 + 1e-9  # the image never shrinks below the source
    assert report.c2 <= 5 * (1 + 1e-9)
    assert report.c <= 5 * (1 + 1e-9)


def test_collapsed_embedding_reports_infinity():
    div = l1_oracle([[0.0], [1.0], [2.0]])
    flat = Embedding(np.zeros((3, 1)), "identity")
    report = measure_distortion(div, flat)
    assert math.isinf(report.c1)
    assert report.witness_c1 != 0


def test_sampled_policy_smoke():
    m = _random_metric(np.random.default_rng(13), 8)
    report = measure_distortion(diameter_oracle(m), naive_embed(m),
                                samples=64, rng=np.random.default_rng(1))
    assert report.policy == "sampled:64"
    assert report.c <= 8 * (1 + 1e-9)
