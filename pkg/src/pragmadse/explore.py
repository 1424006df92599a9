"""Search strategies over a design space.

``explore_bottleneck`` is the main optimizer: a best-first search over
per-depth heaps of design points, where each expansion focuses the single
parameter the bottleneck analyzer ranks highest and sweeps its whole
conditional option list. ``explore_coordinate_descent`` is the plain
one-step-per-parameter baseline, ``explore_exhaustive`` the ground-truth
oracle and ``explore_random`` the seeded stochastic baseline.

Budget accounting: every evaluator call counts against the budget, cache
hit or not, so a warm cache replays a run through identical decisions.
Backend invocations are deduplicated by the evaluation cache.
"""

from __future__ import annotations

import heapq
import math
import random
import threading
import time
from dataclasses import dataclass, field

from .bottleneck import analyze
from .errors import NoFeasiblePointError, SpaceTooLargeError
from .evaluate import EvalResult
from .quality import Quality, fd_quality, pure_gain_quality
from .space import (
    EXHAUSTED,
    Config,
    DesignSpace,
    OptionValue,
    enumerate_valid,
    eval_options,
    next_value,
    validate,
)

TRACE_FILE_HEADER = "autodse-trace v1"


class Budget:
    """Evaluation-count and wall-clock limits plus an external stop flag.

    The clock check happens before each evaluation, so overshoot past the
    deadline is bounded by a single evaluation's duration.
    """

    def __init__(self, max_evals: int | None = None, max_seconds: float | None = None,
                 stop: threading.Event | None = None):
        self.max_evals = max_evals
        self.deadline = None if max_seconds is None else time.monotonic() + max_seconds
        self.stop = stop
        self.used = 0

    def exhausted(self) -> bool:
        if self.stop is not None and self.stop.is_set():
            return True
        if self.max_evals is not None and self.used >= self.max_evals:
            return True
        if self.deadline is not None and time.monotonic() >= self.deadline:
            return True
        return False

    def charge(self) -> None:
        self.used += 1


@dataclass(frozen=True)
class TraceEntry:
    index: int
    config_key: str
    status: str
    cycles: float
    best_cycles: float
    elapsed: float  # simulated seconds, cumulative over eval_seconds


class ExploreTrace:
    def __init__(self):
        self.entries: list[TraceEntry] = []

    def append(self, entry: TraceEntry) -> None:
        self.entries.append(entry)

    def __len__(self) -> int:
        return len(self.entries)

    def signature(self):
        """Deterministic content, for equality checks across runs."""
        return tuple(
            (e.index, e.config_key, e.status, e.cycles, e.best_cycles)
            for e in self.entries
        )

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(TRACE_FILE_HEADER + "\n")
            for e in self.entries:
                fh.write("{}\t{}\t{}\t{}\t{}\t{}\n".format(
                    e.index, e.config_key, e.status,
                    _num(e.cycles), _num(e.best_cycles), repr(e.elapsed),
                ))

    @staticmethod
    def read(path: str) -> "ExploreTrace":
        trace = ExploreTrace()
        with open(path, encoding="utf-8") as fh:
            if fh.readline().strip() != TRACE_FILE_HEADER:
                raise ValueError(f"{path!r} is not a trace file")
            for line in fh:
                idx, key, status, cycles, best, elapsed = line.rstrip("\n").split("\t")
                trace.append(TraceEntry(
                    int(idx), key, status, _unnum(cycles), _unnum(best), float(elapsed),
                ))
        return trace


def _num(x: float) -> str:
    return "inf" if math.isinf(x) else repr(x)


def _unnum(s: str) -> float:
    return math.inf if s == "inf" else float(s)


@dataclass(frozen=True)
class SweepRecord:
    """One focused-parameter sweep: which options ran under which context."""

    parameter: str
    context_key: str
    options: tuple[OptionValue, ...]


@dataclass
class ExploreOutcome:
    best_config: Config
    best_result: EvalResult | None
    feasible: bool
    trace: ExploreTrace
    evaluations: int
    sweeps: list[SweepRecord] = field(default_factory=list)

    @property
    def best_cycles(self) -> float:
        return self.best_result.cycles if self.best_result is not None else math.inf


@dataclass
class DesignPoint:
    """A partially tuned configuration pending further exploration."""

    config: Config
    tuned: tuple[tuple[str, OptionValue], ...]
    result: EvalResult
    quality: Quality
    # candidate stack, least important at the bottom so pop() yields the
    # parameter with the most promising impact
    children: list[tuple[Config, str]]

    @property
    def level(self) -> int:
        return len(self.tuned)


class LevelHeap:
    """Per-depth priority heaps of pending design points, best-first."""

    def __init__(self):
        self._heaps: list[list] = []
        self._seq = 0

    def push(self, level: int, point: DesignPoint) -> None:
        if point.level != level:
            raise RuntimeError(f"point with {point.level} tuned params pushed at level {level}")
        while len(self._heaps) <= level:
            self._heaps.append([])
        heapq.heappush(self._heaps[level], (point.quality.sort_key(), self._seq, point))
        self._seq += 1

    def deepest_nonempty(self) -> int | None:
        for level in range(len(self._heaps) - 1, -1, -1):
            if self._heaps[level]:
                return level
        return None

    def peek(self, level: int) -> DesignPoint:
        return self._heaps[level][0][2]

    def pop(self, level: int) -> DesignPoint:
        return heapq.heappop(self._heaps[level])[2]

    def levels(self) -> list[list[DesignPoint]]:
        return [[item[2] for item in heap] for heap in self._heaps]


class _Session:
    """Shared bookkeeping for one exploration run."""

    def __init__(self, evaluator, budget: Budget, trace_hook=None):
        self.evaluator = evaluator
        self.budget = budget
        self.trace = ExploreTrace()
        self.sim_clock = 0.0
        self.best_cycles = math.inf
        self.best_key = ""
        self.best_config: Config | None = None
        self.best_result: EvalResult | None = None
        self.trace_hook = trace_hook

    def evaluate(self, cfg: Config) -> EvalResult | None:
        """Charge the budget and evaluate; None when the budget is spent."""
        if self.budget.exhausted():
            return None
        self.budget.charge()
        result = self.evaluator.evaluate(cfg)
        self.sim_clock += result.eval_seconds
        if result.ok and (result.cycles, cfg.key) < (self.best_cycles, self.best_key):
            self.best_cycles = result.cycles
            self.best_key = cfg.key
            self.best_config = cfg
            self.best_result = result
        entry = TraceEntry(
            index=len(self.trace),
            config_key=cfg.key,
            status=result.status.value,
            cycles=result.cycles,
            best_cycles=self.best_cycles,
            elapsed=self.sim_clock,
        )
        self.trace.append(entry)
        if self.trace_hook is not None:
            self.trace_hook(entry)
        return result

    def outcome(self, default: Config, sweeps=None) -> ExploreOutcome:
        feasible = self.best_config is not None
        return ExploreOutcome(
            best_config=self.best_config if feasible else default,
            best_result=self.best_result,
            feasible=feasible,
            trace=self.trace,
            evaluations=self.budget.used,
            sweeps=sweeps or [],
        )


def explore_bottleneck(space: DesignSpace, evaluator, budget: Budget,
                       trace_hook=None) -> ExploreOutcome:
    """Bottleneck-guided coordinate search.

    Seeds with the space's default point, then repeatedly takes the best
    pending point at the deepest level, pops its most promising child
    (candidate config plus focused parameter), sweeps every option of the
    focused parameter, scores each sweep result by finite difference
    against the parent, and pushes surviving results one level deeper with
    a fresh bottleneck ordering. The returned best is the feasible
    configuration with minimum cycles seen anywhere during the run.
    """
    session = _Session(evaluator, budget, trace_hook)
    heap = LevelHeap()
    sweeps: list[SweepRecord] = []

    default = space.default_config()
    seed = session.evaluate(default)
    if seed is not None and seed.ok:
        order = analyze(seed.report, space, set())
        if order:
            children = [(default, p) for p in reversed(order)]
            root = DesignPoint(default, (), seed, pure_gain_quality(seed.cycles, default.key), children)
            heap.push(0, root)

    while not session.budget.exhausted():
        level = heap.deepest_nonempty()
        if level is None:
            break
        point = heap.peek(level)
        if not point.children:
            heap.pop(level)
            continue
        candidate_cfg, focused = point.children.pop()
        tuned_names = {name for name, _ in point.tuned}
        swept: list[OptionValue] = []
        for option in eval_options(space, focused, candidate_cfg):
            new_cfg = candidate_cfg.replace(focused, option)
            result = session.evaluate(new_cfg)
            if result is None:
                break
            swept.append(option)
            if not result.ok:
                continue
            new_tuned = point.tuned + ((focused, option),)
            order = analyze(result.report, space, tuned_names | {focused})
            if order:
                children = [(new_cfg, p) for p in reversed(order)]
                heap.push(level + 1, DesignPoint(
                    new_cfg, new_tuned, result,
                    fd_quality(point.result, result, new_cfg.key), children,
                ))
        sweeps.append(SweepRecord(focused, candidate_cfg.key, tuple(swept)))
        if not point.children:
            heap.pop(level)

    return session.outcome(default, sweeps)


def explore_coordinate_descent(space: DesignSpace, evaluator, budget: Budget,
                               trace_hook=None) -> ExploreOutcome:
    """One-step coordinate descent with finite-difference selection.

    Each iteration advances every parameter one step to build up to K
    candidates, skips exhausted or invalid ones, and moves to the candidate
    with the best finite-difference value among those that reduce cycles.
    Stops when no candidate improves or the budget runs out.
    """
    session = _Session(evaluator, budget, trace_hook)
    default = space.default_config()
    current_cfg = default
    current = session.evaluate(current_cfg)
    if current is None or not current.ok:
        return session.outcome(default)

    while not session.budget.exhausted():
        best_q: Quality | None = None
        best_cand: tuple[Config, EvalResult] | None = None
        stopped = False
        for name in space.eval_order:
            step = next_value(space, current_cfg, name)
            if step is EXHAUSTED:
                continue
            cand_cfg = current_cfg.replace(name, step)
            if not validate(space, cand_cfg).ok:
                continue
            result = session.evaluate(cand_cfg)
            if result is None:
                stopped = True
                break
            if not result.ok or result.cycles >= current.cycles:
                continue
            q = fd_quality(current, result, cand_cfg.key)
            if best_q is None or q.sort_key() < best_q.sort_key():
                best_q = q
                best_cand = (cand_cfg, result)
        if stopped or best_cand is None:
            break
        current_cfg, current = best_cand

    return session.outcome(default)


def explore_exhaustive(space: DesignSpace, evaluator, cap: int) -> Config:
    """Evaluate every valid config; the ground-truth oracle for small spaces."""
    best: tuple[float, str, Config] | None = None
    count = 0
    for cfg in enumerate_valid(space, limit=cap + 1):
        count += 1
        if count > cap:
            raise SpaceTooLargeError(f"more than {cap} valid points")
        result = evaluator.evaluate(cfg)
        if result.ok and (best is None or (result.cycles, cfg.key) < best[:2]):
            best = (result.cycles, cfg.key, cfg)
    if best is None:
        raise NoFeasiblePointError("no feasible point in the space")
    return best[2]


def explore_random(space: DesignSpace, evaluator, budget_evals: int, seed: int,
                   trace_hook=None) -> ExploreOutcome:
    """Uniform rejection sampling from the grid, deduplicated per run.

    Each distinct valid config evaluated counts once against the budget;
    invalid grid points are rejected without an evaluator call.
    """
    session = _Session(evaluator, Budget(max_evals=budget_evals), trace_hook)
    rng = random.Random(seed)
    axes = [(name, space.params[name].base_options()) for name in space.eval_order]
    seen: set[str] = set()
    default = space.default_config()
    attempts = 0
    max_attempts = 200 * budget_evals + 1000
    while session.budget.used < budget_evals and attempts < max_attempts:
        attempts += 1
        cfg = Config.of({name: rng.choice(options) for name, options in axes})
        if cfg.key in seen or not validate(space, cfg).ok:
            continue
        seen.add(cfg.key)
        if session.evaluate(cfg) is None:
            break
    return session.outcome(default)
