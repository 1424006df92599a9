"""Design-space partitioning by pipeline mode.

Every loop whose pipeline can run both coarse- and fine-grained splits the
space in two: the {fg} half and the {off, cg} half. With m such loops this
yields 2^m sub-spaces that tile the full space. Each partition is profiled
with one evaluation at minimized parameter values, and K-means over the
(cycles, penalty) features picks a handful of representatives to explore.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import TooManyPartitionsError
from .quality import util_penalty
from .space import Config, DesignSpace, ParamKind, ParamSpec

FG_HALF = "FG"
OFF_CG_HALF = "OFF_CG"

DEFAULT_PARTITION_CAP = 4096


def partitionable_loops(ds: DesignSpace) -> list[tuple[str, str]]:
    """(loop id, pipeline parameter) pairs whose mode domain spans both
    halves; innermost loops never offer cg, so only loop nests qualify."""
    out = []
    for name, spec in ds.params.items():
        if spec.kind is ParamKind.PIPELINE:
            options = set(spec.base_options())
            if "fg" in options and "cg" in options:
                out.append((spec.scope, name))
    return out


def _restrict_pipeline(spec: ParamSpec, half: str) -> ParamSpec:
    if half == FG_HALF:
        source = tuple(v for v in spec.comp.source if v == "fg") or ("fg",)
        default = "fg"
    else:
        source = tuple(v for v in spec.comp.source if v != "fg")
        default = "off" if "off" in source else source[0]
    return replace(spec, comp=replace(spec.comp, source=source), default=default)


@dataclass
class Partition:
    """One sub-space: each split loop's pipeline confined to one half."""

    id: int
    mode_split: dict[str, str]  # loop id -> FG | OFF_CG
    space: DesignSpace


def enumerate_partitions(ds: DesignSpace, cap: int = DEFAULT_PARTITION_CAP) -> list[Partition]:
    """All 2^m partitions; bit i of the id selects loop i's half."""
    loops = partitionable_loops(ds)
    m = len(loops)
    if 2 ** m > cap:
        raise TooManyPartitionsError(f"2^{m} partitions exceed the cap of {cap}")
    partitions = []
    for pid in range(2 ** m):
        split = {}
        overrides = {}
        for i, (loop_id, pipe_name) in enumerate(loops):
            half = FG_HALF if (pid >> i) & 1 else OFF_CG_HALF
            split[loop_id] = half
            overrides[pipe_name] = _restrict_pipeline(ds.params[pipe_name], half)
        partitions.append(Partition(pid, split, ds.restrict(overrides)))
    return partitions


@dataclass
class PartitionProfile:
    partition_id: int
    cycles: float
    penalty: float
    feasible: bool


def minimized_config(space: DesignSpace) -> Config:
    """Every factor at its minimum option, every pipeline at its half's
    first mode (the partition default)."""
    values = {}
    for name, spec in space.params.items():
        if spec.kind is ParamKind.PIPELINE:
            values[name] = spec.default
        else:
            values[name] = min(spec.base_options())
    return Config.of(values)


def profile_partition(partition: Partition, evaluator) -> PartitionProfile:
    result = evaluator.evaluate(minimized_config(partition.space))
    if result.ok:
        return PartitionProfile(partition.id, result.cycles, util_penalty(result.util), True)
    return PartitionProfile(partition.id, math.inf, math.inf, False)


# ---------------------------------------------------------------------------
# K-means over profile features

@dataclass
class KMeansResult:
    labels: list[int]
    centroids: np.ndarray       # original feature space
    norm_points: np.ndarray     # z-scored features used for distances
    norm_centroids: np.ndarray


def kmeans(points: list[tuple[float, float]], k: int, seed: int,
           max_iter: int = 100) -> KMeansResult:
    """Lloyd's iteration on z-scored features with k-means++ seeding.

    Deterministic under ``seed``; k is clamped to the number of distinct
    points; converges when assignments stop changing.
    """
    data = np.asarray(points, dtype=float)
    mean = data.mean(axis=0)
    std = data.std(axis=0)
    std[std == 0.0] = 1.0
    norm = (data - mean) / std

    k = min(k, len({tuple(p) for p in points}))
    rng = np.random.RandomState(seed)

    # k-means++ seeding
    centroids = [norm[rng.randint(len(norm))]]
    while len(centroids) < k:
        d2 = np.min([np.sum((norm - c) ** 2, axis=1) for c in centroids], axis=0)
        total = d2.sum()
        if total == 0.0:
            centroids.append(norm[rng.randint(len(norm))])
            continue
        r = rng.rand() * total
        centroids.append(norm[np.searchsorted(np.cumsum(d2), r)])
    centers = np.array(centroids)

    labels = None
    for _ in range(max_iter):
        dists = np.linalg.norm(norm[:, None, :] - centers[None, :, :], axis=2)
        new_labels = dists.argmin(axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = norm[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)

    return KMeansResult(
        labels=labels.tolist(),
        centroids=centers * std + mean,
        norm_points=norm,
        norm_centroids=centers,
    )


def select_representatives(profiles: list[PartitionProfile], t: int, seed: int) -> list[int]:
    """At most t partition ids, one per feature cluster, nearest-centroid
    first. Infeasible partitions are only eligible when nothing is feasible."""
    if t < 1:
        raise ValueError("t must be >= 1")
    feasible = [p for p in profiles if p.feasible]
    if not feasible:
        ids = sorted(p.partition_id for p in profiles)
        return ids[:t]
    if len(feasible) <= t:
        return sorted(p.partition_id for p in feasible)
    km = kmeans([(p.cycles, p.penalty) for p in feasible], k=t, seed=seed)
    chosen = []
    for c in range(len(km.norm_centroids)):
        members = [
            (float(np.linalg.norm(km.norm_points[i] - km.norm_centroids[c])), p.partition_id)
            for i, p in enumerate(feasible) if km.labels[i] == c
        ]
        if members:
            chosen.append(min(members)[1])
    return sorted(set(chosen))
