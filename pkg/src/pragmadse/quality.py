"""Scalar quality of a design point.

Three targets: raw cycle count, penalized resource utilization, and the
finite-difference coordinate value between two evaluations,

    g = (cycles_cand - cycles_curr) / (penalty_cand - penalty_curr)

where the penalty sums 2^(1/(1-u)) over the per-resource utilization
fractions. The exponential blows up near full utilization, so a candidate
that buys few cycles with a lot of area ranks behind one that trades more
efficiently even when its absolute cycle count is lower.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError, TargetMismatchError, ZeroDenominatorError


class Target(enum.Enum):
    PERFORMANCE = "performance"
    RESOURCE = "resource"
    FINITE_DIFFERENCE = "finite_difference"


# ordering ranks for finite-difference qualities; lower ranks first
_PURE_GAIN = 0   # cycles dropped with no penalty change: beats any trade-off
_FINITE = 1
_PURE_LOSS = 2   # no penalty change and no cycle gain
_INFEASIBLE = 3


def util_penalty(util: dict[str, float]) -> float:
    """Sum of 2^(1/(1-u)) over all resource kinds. Undefined at u >= 1."""
    total = 0.0
    for kind, u in util.items():
        if u >= 1.0:
            raise DomainError(f"utilization {kind}={u} is not below 1")
        total += 2.0 ** (1.0 / (1.0 - u))
    return total


def finite_difference(curr, cand) -> float:
    """Coordinate value of moving from ``curr`` to ``cand`` (both OK results)."""
    if not (curr.ok and cand.ok):
        raise ValueError("finite difference requires two OK evaluations")
    d_pen = util_penalty(cand.util) - util_penalty(curr.util)
    if d_pen == 0.0:
        raise ZeroDenominatorError("candidate changed cycles without changing utilization")
    return (cand.cycles - curr.cycles) / d_pen


@dataclass(frozen=True)
class Quality:
    """Comparable quality value; lower sort key means better."""

    target: Target
    value: float
    cycles: float
    config_key: str
    rank: int = _FINITE

    def sort_key(self):
        if self.target is Target.FINITE_DIFFERENCE:
            return (self.rank, self.value, self.cycles, self.config_key)
        if self.target is Target.PERFORMANCE:
            return (self.cycles, self.config_key)
        return (self.value, self.config_key)


def fd_quality(curr, cand, config_key: str) -> Quality:
    """Finite-difference quality of ``cand`` relative to ``curr``.

    A zero penalty delta collapses to a sentinel: a free cycle win ranks
    ahead of every finite trade-off, anything else ranks behind them.
    """
    try:
        g = finite_difference(curr, cand)
        return Quality(Target.FINITE_DIFFERENCE, g, cand.cycles, config_key)
    except ZeroDenominatorError:
        rank = _PURE_GAIN if cand.cycles < curr.cycles else _PURE_LOSS
        return Quality(Target.FINITE_DIFFERENCE, 0.0, cand.cycles, config_key, rank=rank)


def pure_gain_quality(cycles: float, config_key: str) -> Quality:
    """Best-ranked quality; used for the root point, which has no parent."""
    return Quality(Target.FINITE_DIFFERENCE, 0.0, cycles, config_key, rank=_PURE_GAIN)


def infeasible_quality(config_key: str) -> Quality:
    return Quality(Target.FINITE_DIFFERENCE, math.inf, math.inf, config_key, rank=_INFEASIBLE)


def performance_quality(cycles: float, config_key: str) -> Quality:
    return Quality(Target.PERFORMANCE, cycles, cycles, config_key)


def resource_quality(penalty: float, cycles: float, config_key: str) -> Quality:
    return Quality(Target.RESOURCE, penalty, cycles, config_key)


def compare(a: Quality, b: Quality) -> int:
    """-1 when ``a`` ranks first, 1 when ``b`` does, 0 on full ties."""
    if a.target is not b.target:
        raise TargetMismatchError(f"{a.target} vs {b.target}")
    ka, kb = a.sort_key(), b.sort_key()
    return -1 if ka < kb else (1 if ka > kb else 0)
