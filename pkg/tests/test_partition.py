"""Pipeline-mode partitioning, profiling and representative selection."""

import math

import numpy as np
import pytest

from pragmadse.errors import TooManyPartitionsError
from pragmadse.kernel import KernelModel, LoopNode, generate_design_space
from pragmadse.partition import (
    PartitionProfile,
    enumerate_partitions,
    kmeans,
    minimized_config,
    partitionable_loops,
    profile_partition,
    select_representatives,
)
from pragmadse.space import enumerate_valid, validate

from fixtures import big_budget, evaluator_for, nest_kernel, quirk_kernel, single_loop_kernel


def chain_kernel(depth):
    """depth non-innermost loops above one innermost leaf."""
    node = LoopNode("leaf", 20, 1)
    for i in range(depth):
        node = LoopNode(f"n{depth - 1 - i}", 4, 1, children=[node])
    return KernelModel("chain", node, big_budget(), 64, 10**9)


def test_partition_counts():
    for m in (0, 1, 3):
        if m == 0:
            k = single_loop_kernel(tc=100)  # innermost only: no cg anywhere
        else:
            k = chain_kernel(m)
        ds = generate_design_space(k)
        parts = enumerate_partitions(ds)
        assert len(parts) == 2 ** m
        assert len(partitionable_loops(ds)) == m


def test_partition_cap():
    ds = generate_design_space(chain_kernel(3))
    with pytest.raises(TooManyPartitionsError):
        enumerate_partitions(ds, cap=4)


def test_partition_restricts_pipeline_domains():
    ds = generate_design_space(nest_kernel())  # one non-innermost loop
    parts = enumerate_partitions(ds)
    assert len(parts) == 2
    off_cg, fg = parts
    assert off_cg.mode_split == {"outer": "OFF_CG"}
    assert fg.mode_split == {"outer": "FG"}
    assert off_cg.space.params["PIPELINE__outer"].base_options() == ["off", "cg"]
    assert fg.space.params["PIPELINE__outer"].base_options() == ["fg"]
    assert fg.space.params["PIPELINE__outer"].default == "fg"
    # untouched parameters keep their full lists
    assert off_cg.space.params["PARALLEL__outer"].comp == ds.params["PARALLEL__outer"].comp


def test_partitions_tile_the_valid_space():
    ds = generate_design_space(chain_kernel(2))
    parts = enumerate_partitions(ds)
    for cfg in enumerate_valid(ds, limit=10**5, exhaustive=True):
        homes = [
            p.id for p in parts
            if all(
                (cfg[f"PIPELINE__{loop}"] == "fg") == (half == "FG")
                for loop, half in p.mode_split.items()
            )
        ]
        assert len(homes) == 1


def test_minimized_config_and_profile():
    k = nest_kernel()
    space, ev = evaluator_for(k)
    parts = enumerate_partitions(space)
    cfg = minimized_config(parts[0].space)
    assert cfg["PIPELINE__outer"] == "off" and cfg["PARALLEL__outer"] == 1
    assert validate(space, cfg).ok
    profile = profile_partition(parts[0], ev)
    # the off/cg half's minimized point is the all-defaults design
    assert profile.cycles == ev.evaluate(space.default_config()).cycles
    assert profile.feasible

    fg_cfg = minimized_config(parts[1].space)
    assert fg_cfg["PIPELINE__outer"] == "fg"


def test_infeasible_profile_kept():
    k = single_loop_kernel(tc=100, compute=50, budget={"lut": 10, "ff": 10, "dsp": 10, "bram": 10})
    space, ev = evaluator_for(k)
    parts = enumerate_partitions(space)
    prof = profile_partition(parts[0], ev)
    assert not prof.feasible and math.isinf(prof.cycles)


# ---------------------------------------------------------------------------
# kmeans

def brute_force_two_clustering(points):
    best = (math.inf, None)
    n = len(points)
    pts = np.asarray(points, dtype=float)
    mean, std = pts.mean(axis=0), pts.std(axis=0)
    std[std == 0] = 1.0
    norm = (pts - mean) / std
    for mask in range(1, 2 ** (n - 1)):
        a = [i for i in range(n) if (mask >> i) & 1]
        b = [i for i in range(n) if not (mask >> i) & 1]
        wcss = sum(
            float(((norm[idx] - norm[idx].mean(axis=0)) ** 2).sum())
            for idx in (a, b)
            if idx
        )
        if wcss < best[0]:
            best = (wcss, frozenset(frozenset(x) for x in (a, b)))
    return best[1]


def test_kmeans_degenerate_cases():
    res = kmeans([(1.0, 2.0), (3.0, 4.0), (5.0, 0.0)], k=1, seed=0)
    assert res.labels == [0, 0, 0]
    assert np.allclose(res.centroids[0], [3.0, 2.0])
    res = kmeans([(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)], k=3, seed=0)
    assert sorted(res.labels) == [0, 1, 2]


def test_kmeans_clamps_k_to_distinct_points():
    res = kmeans([(1.0, 1.0)] * 4, k=3, seed=0)
    assert len(res.norm_centroids) == 1


def test_kmeans_matches_brute_force_on_planted_pairs():
    points = [(10.0, 1.0), (11.0, 1.1), (100.0, 9.0), (101.0, 9.2)]
    res = kmeans(points, k=2, seed=4)
    grouping = frozenset(
        frozenset(i for i, lbl in enumerate(res.labels) if lbl == c)
        for c in set(res.labels)
    )
    assert grouping == brute_force_two_clustering(points)


def test_kmeans_deterministic():
    points = [(float(i % 5), float(i % 3)) for i in range(20)]
    a = kmeans(points, k=3, seed=9)
    b = kmeans(points, k=3, seed=9)
    assert a.labels == b.labels
    assert np.array_equal(a.centroids, b.centroids)


def test_kmeans_wcss_never_increases():
    # re-run Lloyd's manually and check the objective is monotone
    import random as _random
    rng = _random.Random(11)
    points = [(rng.uniform(0, 100), rng.uniform(0, 10)) for _ in range(30)]
    pts = np.asarray(points)
    mean, std = pts.mean(axis=0), pts.std(axis=0)
    norm = (pts - mean) / std
    centers = norm[[0, 7, 19]].copy()
    prev = math.inf
    for _ in range(12):
        d = np.linalg.norm(norm[:, None, :] - centers[None, :, :], axis=2)
        labels = d.argmin(axis=1)
        wcss = float(((norm - centers[labels]) ** 2).sum())
        assert wcss <= prev + 1e-9
        prev = wcss
        for c in range(3):
            members = norm[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)


# ---------------------------------------------------------------------------
# representative selection

def profiles_from(points, feasible=None):
    return [
        PartitionProfile(i, x, y, True if feasible is None else feasible[i])
        for i, (x, y) in enumerate(points)
    ]


def test_select_all_when_t_large():
    profs = profiles_from([(10.0, 1.0), (20.0, 2.0), (30.0, 3.0)])
    assert select_representatives(profs, t=5, seed=0) == [0, 1, 2]


def test_select_one_per_planted_cluster():
    points = [(10.0, 1.0), (11.0, 1.2), (12.0, 0.9), (200.0, 9.0), (210.0, 9.5), (190.0, 8.8)]
    chosen = select_representatives(profiles_from(points), t=2, seed=3)
    assert len(chosen) == 2
    assert any(c in (0, 1, 2) for c in chosen)
    assert any(c in (3, 4, 5) for c in chosen)


def test_select_deterministic_across_runs():
    points = [(float(10 * i + (i % 3)), float(i % 4)) for i in range(9)]
    first = select_representatives(profiles_from(points), t=3, seed=42)
    for _ in range(9):
        assert select_representatives(profiles_from(points), t=3, seed=42) == first


def test_select_skips_infeasible():
    points = [(10.0, 1.0), (20.0, 2.0), (math.inf, math.inf)]
    profs = profiles_from(points, feasible=[True, True, False])
    chosen = select_representatives(profs, t=3, seed=0)
    assert 2 not in chosen
    none_ok = profiles_from(points, feasible=[False, False, False])
    assert select_representatives(none_ok, t=2, seed=0) == [0, 1]


def test_quirk_kernel_partitions_profile():
    k = quirk_kernel()
    space, ev = evaluator_for(k)
    parts = enumerate_partitions(space)
    assert len(parts) == 2  # only the root is a partitionable nest
    profs = [profile_partition(p, ev) for p in parts]
    assert profs[0].feasible
    assert not profs[1].feasible  # root fg fully unrolls: times out
