"""Run coordination: partition the space, schedule explorers over a worker
pool, track the global best, and write resumable run artifacts.

Everything an exploration decides on is deterministic for the mock backend
(simulated evaluation time included), so two serialized runs with the same
seed produce byte-identical reports, and a killed run resumed over its
evaluation cache replays into the same final answer.
"""

from __future__ import annotations

import json
import math
import os
import queue
import signal
import threading
import time
from dataclasses import dataclass, field

from . import __version__
from .errors import ConfigError, NotFoundError
from .evaluate import DEFAULT_TU, CachingEvaluator, EvalCache, MockHlsEvaluator, ResultsLog
from .explore import Budget, ExploreTrace, explore_bottleneck
from .kernel import generate_design_space, parse_kernel_model, space_size
from .partition import Partition, enumerate_partitions, profile_partition, select_representatives
from .space import Config, DesignSpace, ParamKind, parse_design_space, serialize_design_space

RUN_FILE = "run.json"
CACHE_FILE = "cache.jsonl"
RESULTS_FILE = "results.log"
PARTITIONS_FILE = "partitions.json"
REPORT_FILE = "report.json"
BEST_CONFIG_FILE = "best_config.dsl"
SUMMARY_FILE = "summary.txt"
CHECKPOINT_DIR = "checkpoints"

REPORT_VERSION = "autodse-report v1"


@dataclass
class RunConfig:
    model_path: str
    space_path: str | None = None
    evaluator: str = "mock"
    threads: int = 1
    dse_timeout: float = 3600.0
    tu: float = DEFAULT_TU
    seed: int = 0
    out_dir: str = "dse_out"
    resume: bool = False
    serial: bool = False
    max_evals: int | None = None
    representatives: int | None = None  # defaults to the thread count

    def check(self) -> None:
        if self.threads < 1:
            raise ConfigError("thread count must be >= 1")
        if self.dse_timeout <= 0:
            raise ConfigError("dse_timeout must be positive")
        if not (0.0 < self.tu < 1.0):
            raise ConfigError("tu must be strictly between 0 and 1")
        if self.evaluator != "mock":
            raise ConfigError(f"unknown evaluator {self.evaluator!r} (only 'mock' ships)")
        if self.max_evals is not None and self.max_evals < 0:
            raise ConfigError("max_evals must be >= 0")
        if self.representatives is not None and self.representatives < 1:
            raise ConfigError("representatives must be >= 1")


@dataclass
class PartitionResult:
    partition_id: int
    best_config: Config | None
    best_cycles: float
    feasible: bool
    evaluations: int
    trace: ExploreTrace = field(default_factory=ExploreTrace)


@dataclass
class RunReport:
    no_feasible_point: bool
    best_config: Config | None
    best_cycles: float
    best_util: dict[str, float]
    partition_results: list[PartitionResult]
    totals: dict
    space_summary: dict


def _trace_path(out_dir: str, pid: int) -> str:
    return os.path.join(out_dir, f"trace_partition_{pid}.log")


def _checkpoint_path(out_dir: str, pid: int) -> str:
    return os.path.join(out_dir, CHECKPOINT_DIR, f"partition_{pid}.json")


def _write_json(path: str, payload: dict) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def run(rc: RunConfig) -> RunReport:
    """Full pipeline: space generation, partition profiling, representative
    selection and budgeted exploration across a worker pool."""
    rc.check()
    try:
        with open(rc.model_path, encoding="utf-8") as fh:
            kernel = parse_kernel_model(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read kernel model: {e}") from None

    os.makedirs(os.path.join(rc.out_dir, CHECKPOINT_DIR), exist_ok=True)
    if rc.space_path is not None:
        try:
            with open(rc.space_path, encoding="utf-8") as fh:
                space = parse_design_space(fh.read(), loop_tree=kernel)
        except OSError as e:
            raise ConfigError(f"cannot read design space: {e}") from None
    else:
        space = generate_design_space(kernel)
        with open(os.path.join(rc.out_dir, "design_space.dsl"), "w", encoding="utf-8") as fh:
            fh.write(serialize_design_space(space))

    _write_json(os.path.join(rc.out_dir, RUN_FILE), {
        "version": f"autodse-run v1 (pragmadse {__version__})",
        "model": rc.model_path,
        "seed": rc.seed,
        "threads": rc.threads,
        "tu": rc.tu,
        "dse_timeout": rc.dse_timeout,
        "max_evals": rc.max_evals,
    })

    cache = EvalCache(os.path.join(rc.out_dir, CACHE_FILE))
    evaluator = CachingEvaluator(
        MockHlsEvaluator(kernel, space, tu=rc.tu),
        cache=cache,
        results_log=ResultsLog(os.path.join(rc.out_dir, RESULTS_FILE)),
    )

    started = time.monotonic()
    partitions = enumerate_partitions(space)
    by_id = {p.id: p for p in partitions}
    selected = _load_or_select_partitions(rc, partitions, evaluator)

    stop = threading.Event()
    previous_handlers = []
    try:
        for sig in (signal.SIGINT, signal.SIGTERM):
            previous_handlers.append((sig, signal.signal(sig, lambda *_: stop.set())))
    except ValueError:
        previous_handlers = []  # not on the main thread; budgets still apply
    deadline = started + rc.dse_timeout
    consumed_lock = threading.Lock()
    consumed = {"evals": 0}
    results: dict[int, PartitionResult] = {}

    # completed partitions from a previous run are reused as-is
    pending: list[int] = []
    for pid in selected:
        ckpt = _load_checkpoint(rc.out_dir, pid) if rc.resume else None
        if ckpt is not None:
            results[pid] = ckpt
            consumed["evals"] += ckpt.evaluations
        else:
            pending.append(pid)

    work: queue.Queue[int] = queue.Queue()
    for pid in pending:
        work.put(pid)
    remaining = {"n": len(pending)}

    def pull_budget() -> Budget:
        with consumed_lock:
            share = None
            if rc.max_evals is not None:
                left = max(rc.max_evals - consumed["evals"], 0)
                share = math.ceil(left / max(remaining["n"], 1))
            remaining["n"] -= 1
        seconds = deadline - time.monotonic()
        return Budget(max_evals=share, max_seconds=max(seconds, 0.0), stop=stop)

    def explore_one(pid: int) -> None:
        partition = by_id[pid]
        outcome = explore_bottleneck(partition.space, evaluator, pull_budget())
        with consumed_lock:
            consumed["evals"] += outcome.evaluations
        result = PartitionResult(
            partition_id=pid,
            best_config=outcome.best_config if outcome.feasible else None,
            best_cycles=outcome.best_cycles,
            feasible=outcome.feasible,
            evaluations=outcome.evaluations,
            trace=outcome.trace,
        )
        results[pid] = result
        outcome.trace.write(_trace_path(rc.out_dir, pid))
        _write_json(_checkpoint_path(rc.out_dir, pid), {
            "partition_id": pid,
            "feasible": result.feasible,
            "best_config": result.best_config.as_dict() if result.best_config else None,
            "best_cycles": None if math.isinf(result.best_cycles) else result.best_cycles,
            "evaluations": result.evaluations,
        })

    worker_errors: list[BaseException] = []

    def worker() -> None:
        while True:
            try:
                pid = work.get_nowait()
            except queue.Empty:
                return
            try:
                explore_one(pid)
            except BaseException as e:  # surfaced after join
                worker_errors.append(e)
                return
            finally:
                work.task_done()

    try:
        if rc.serial or rc.threads == 1:
            worker()
        else:
            threads = [threading.Thread(target=worker, name=f"dse-worker-{i}") for i in range(rc.threads)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        if worker_errors:
            raise worker_errors[0]

        wall = time.monotonic() - started
        report = _assemble_report(rc, space, evaluator,
                                  [results[pid] for pid in selected if pid in results], wall)
        _write_report_files(rc.out_dir, space, report)
        return report
    finally:
        for sig, handler in previous_handlers:
            signal.signal(sig, handler)
        evaluator.results_log.close()
        cache.close()


def _load_or_select_partitions(rc: RunConfig, partitions: list[Partition], evaluator) -> list[int]:
    manifest_path = os.path.join(rc.out_dir, PARTITIONS_FILE)
    if rc.resume and os.path.exists(manifest_path):
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
        return [p["id"] for p in manifest["partitions"] if p["selected"]]

    profiles = [profile_partition(p, evaluator) for p in partitions]
    reps = rc.representatives if rc.representatives is not None else rc.threads
    selected = select_representatives(profiles, reps, rc.seed)
    _write_json(manifest_path, {
        "version": "autodse-partitions v1",
        "partitions": [
            {
                "id": p.id,
                "mode_split": p.mode_split,
                "cycles": None if math.isinf(prof.cycles) else prof.cycles,
                "penalty": None if math.isinf(prof.penalty) else prof.penalty,
                "feasible": prof.feasible,
                "selected": p.id in selected,
            }
            for p, prof in zip(partitions, profiles)
        ],
    })
    return selected


def _load_checkpoint(out_dir: str, pid: int) -> PartitionResult | None:
    path = _checkpoint_path(out_dir, pid)
    if not os.path.exists(path):
        return None
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    best = Config.of(d["best_config"]) if d["best_config"] else None
    result = PartitionResult(
        partition_id=pid,
        best_config=best,
        best_cycles=math.inf if d["best_cycles"] is None else d["best_cycles"],
        feasible=d["feasible"],
        evaluations=d["evaluations"],
    )
    trace_path = _trace_path(out_dir, pid)
    if os.path.exists(trace_path):
        result.trace = ExploreTrace.read(trace_path)
    return result


def _assemble_report(rc: RunConfig, space: DesignSpace, evaluator, partition_results, wall_seconds) -> RunReport:
    best: PartitionResult | None = None
    for r in partition_results:
        if not r.feasible:
            continue
        if best is None or (r.best_cycles, r.best_config.key) < (best.best_cycles, best.best_config.key):
            best = r
    best_util = {}
    if best is not None:
        best_util = evaluator.evaluate(best.best_config).util  # cache hit
    size = space_size(space)
    return RunReport(
        no_feasible_point=best is None,
        best_config=best.best_config if best else None,
        best_cycles=best.best_cycles if best else math.inf,
        best_util=best_util,
        partition_results=partition_results,
        totals={
            "evaluations": sum(r.evaluations for r in partition_results),
            "backend_calls": evaluator.backend_calls,
            "cache_hits": evaluator.cache_hits,
            "wall_seconds": wall_seconds,
        },
        space_summary={
            "parameters": space.k,
            "grid_points": size.grid_points,
            "valid_points": size.valid_points,
            "exact": size.exact,
        },
    )


def _write_report_files(out_dir: str, space: DesignSpace, report: RunReport) -> None:
    payload = {
        "version": REPORT_VERSION,
        "no_feasible_point": report.no_feasible_point,
        "best": {
            "config": report.best_config.as_dict() if report.best_config else None,
            "cycles": None if math.isinf(report.best_cycles) else report.best_cycles,
            "util": report.best_util,
        },
        "partitions": [
            {
                "id": r.partition_id,
                "feasible": r.feasible,
                "cycles": None if math.isinf(r.best_cycles) else r.best_cycles,
                "config": r.best_config.as_dict() if r.best_config else None,
                "evaluations": r.evaluations,
            }
            for r in report.partition_results
        ],
        "space": report.space_summary,
        "evaluations": report.totals["evaluations"],
    }
    _write_json(os.path.join(out_dir, REPORT_FILE), payload)
    if report.best_config is not None:
        with open(os.path.join(out_dir, BEST_CONFIG_FILE), "w", encoding="utf-8") as fh:
            fh.write(pinned_pragma_text(space, report.best_config))


def pinned_pragma_text(space: DesignSpace, cfg: Config) -> str:
    """The chosen configuration as concrete pragma assignments, one loop
    attachment line per parameter; parses back as a fully pinned space."""
    lines = ["# autodse-design-space v1 (pinned)"]
    for name, spec in space.params.items():
        value = cfg[name]
        attr = "mode" if spec.kind is ParamKind.PIPELINE else "factor"
        lines.append(f"loop: {spec.scope}")
        lines.append(f"#pragma ACCEL {spec.kind.value} {attr}={value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Report rendering

def render_report(out_dir: str) -> str:
    """Render summary.txt and per-partition trace CSVs from a finished or
    checkpointed run directory; returns the summary text."""
    report_path = os.path.join(out_dir, REPORT_FILE)
    if not os.path.exists(report_path):
        raise NotFoundError(f"no {REPORT_FILE} under {out_dir!r}")
    with open(report_path, encoding="utf-8") as fh:
        payload = json.load(fh)

    lines = ["design space exploration summary", "=" * 34]
    size = payload["space"]
    lines.append(f"parameters: {size['parameters']}  grid: {size['grid_points']}  "
                 f"valid: {size['valid_points']}{'' if size['exact'] else ' (estimated)'}")
    lines.append(f"evaluations: {payload['evaluations']}")
    if payload["no_feasible_point"]:
        lines.append("result: NO FEASIBLE POINT (default configuration returned)")
    else:
        lines.append(f"best cycles: {payload['best']['cycles']}")
        util = ", ".join(f"{k}={v:.3f}" for k, v in sorted(payload["best"]["util"].items()))
        lines.append(f"best utilization: {util}")
        lines.append("best configuration:")
        for k, v in sorted(payload["best"]["config"].items()):
            lines.append(f"  {k} = {v}")
    lines.append("")
    lines.append("per-partition bests:")
    for part in payload["partitions"]:
        mark = f"{part['cycles']}" if part["feasible"] else "infeasible"
        lines.append(f"  partition {part['id']}: {mark}  ({part['evaluations']} evaluations)")

    for part in payload["partitions"]:
        pid = part["id"]
        trace_path = _trace_path(out_dir, pid)
        if not os.path.exists(trace_path):
            continue
        trace = ExploreTrace.read(trace_path)
        csv_path = os.path.join(out_dir, f"trace_partition_{pid}.csv")
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write("eval_index,elapsed_seconds,cycles,best_so_far\n")
            for e in trace.entries:
                fh.write(f"{e.index},{e.elapsed:.6f},{_csv_num(e.cycles)},{_csv_num(e.best_cycles)}\n")

    summary = "\n".join(lines) + "\n"
    with open(os.path.join(out_dir, SUMMARY_FILE), "w", encoding="utf-8") as fh:
        fh.write(summary)
    return summary


def _csv_num(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:g}"
