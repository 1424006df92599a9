"""Bottleneck analysis over the hierarchical cycle report.

Turns a cycle report plus the statement-to-parameter map into an ordered
list of untuned parameters worth touching next: hottest path first, innermost
statement first, and within a statement an order chosen by whether that
statement is compute- or memory-bound. Nothing is pruned; lower-priority
parameters are appended so the full space stays reachable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .evaluate import Bottleneck, HierarchyNode
from .space import DesignSpace, ParamKind, ParamSpec


@dataclass(frozen=True)
class CriticalPath:
    """Root-to-leaf statement chain; latency/kind are the leaf's."""

    nodes: tuple[str, ...]
    latency: float
    bottleneck: Bottleneck


def build_paths(report: HierarchyNode) -> list[CriticalPath]:
    """All root-to-leaf paths, children visited in descending latency.

    Depth-first with hotter children first, so the first emitted path ends
    at the highest-latency innermost statement. Latency ties break by
    statement id.
    """
    paths: list[CriticalPath] = []

    def dfs(node: HierarchyNode, trail: list[HierarchyNode]):
        trail = trail + [node]
        if not node.children:
            paths.append(CriticalPath(
                nodes=tuple(n.stmt_id for n in trail),
                latency=node.latency,
                bottleneck=node.bottleneck,
            ))
            return
        for child in sorted(node.children, key=lambda c: (-c.latency, c.stmt_id)):
            dfs(child, trail)

    dfs(report, [])
    return paths


def stmt_param_map(ds: DesignSpace) -> dict[str, list[str]]:
    """Statement id to the parameters scoped there, in declaration order."""
    out: dict[str, list[str]] = {}
    for name, spec in ds.params.items():
        out.setdefault(spec.scope, []).append(name)
    return out


def _has_mode(spec: ParamSpec, mode: str) -> bool:
    return spec.kind is ParamKind.PIPELINE and mode in spec.base_options()


def order_for_type(kind: Bottleneck, specs: list[ParamSpec]) -> list[str]:
    """Priority order for one statement's parameters given its bottleneck.

    Compute-bound: pipelines able to run fine-grained, then parallelization,
    then pipelines able to run coarse-grained. Memory-bound: coarse-grained
    pipelines, then tiling. The pipeline parameter can appear under both of
    its modes; callers de-duplicate on first occurrence. Parameters matching
    no bucket are appended, never dropped.
    """
    if kind is Bottleneck.COMPUTE:
        buckets = [
            [s.name for s in specs if _has_mode(s, "fg")],
            [s.name for s in specs if s.kind is ParamKind.PARALLEL],
            [s.name for s in specs if _has_mode(s, "cg")],
        ]
    else:
        buckets = [
            [s.name for s in specs if _has_mode(s, "cg")],
            [s.name for s in specs if s.kind is ParamKind.TILING],
        ]
    order = [name for bucket in buckets for name in bucket]
    order += [s.name for s in specs if s.name not in order]
    return order


def analyze(report: HierarchyNode, ds: DesignSpace, tuned: set[str]) -> list[str]:
    """Untuned parameters ordered by expected impact, best first.

    Walks the critical paths in order; within a path starts at the innermost
    statement and moves outward; per statement orders parameters by the
    statement's own bottleneck kind. An empty result means this point has
    nothing left to tune.
    """
    pmap = stmt_param_map(ds)
    nodes = {node.stmt_id: node for node in report.walk()}
    seen = set(tuned)
    order: list[str] = []
    for path in build_paths(report):
        for stmt in reversed(path.nodes):
            pending = [ds.params[p] for p in pmap.get(stmt, ()) if p not in seen]
            if not pending:
                continue
            for name in order_for_type(nodes[stmt].bottleneck, pending):
                if name not in seen:
                    seen.add(name)
                    order.append(name)
    return order
