"""Black-box evaluation: result types, the deterministic mock backend and
the persistent result cache.

The mock backend prices a configuration bottom-up over the loop tree:

* ``off``  - iterations run back to back: ceil(TC/PF) * body latency.
* ``fg``   - sub-loops are fully unrolled into a pipeline of depth equal to
  the unrolled body; total is depth + (iters - 1) * II, where II comes from
  the loop's quirk table (II is not monotone in the parallel factor, which
  is exactly what makes greedy tuners stumble).
* ``cg``   - double buffering over ceil(TC/TF) tiles: one prologue transfer
  plus per-tile max(transfer, compute).

lut/ff/dsp demand scales linearly with the replication of each loop body;
block-RAM demand counts the tile buffers of cg loops. A configuration whose
fully-unrolled statement count exceeds the kernel's effort limit times out
instead of returning numbers, mirroring how a real synthesis run behaves.
"""

from __future__ import annotations

import enum
import json
import logging
import math
import threading
import time
from dataclasses import dataclass, field

from .errors import ModelError, StorageError
from .kernel import KernelModel, LoopNode, RESOURCE_KINDS
from .space import Config, DesignSpace, ParamKind, validate

log = logging.getLogger(__name__)

DEFAULT_TU = 0.8

#: usable bytes per block RAM
BRAM_BYTES = 2048

#: lut/ff/dsp demand per replicated body cycle
RESOURCE_WEIGHT = {"lut": 8, "ff": 4, "dsp": 1}

CACHE_FILE_HEADER = "autodse-eval-cache v1"
RESULTS_LOG_HEADER = "autodse-results v1"


class Status(enum.Enum):
    OK = "OK"
    TIMEOUT = "TIMEOUT"
    OVER_UTIL = "OVER_UTIL"
    INVALID = "INVALID"


class Bottleneck(enum.Enum):
    COMPUTE = "COMPUTE"
    MEMORY = "MEMORY"


@dataclass
class HierarchyNode:
    """Per-statement cycle report mapped back onto the loop tree."""

    stmt_id: str
    latency: float
    bottleneck: Bottleneck
    children: list["HierarchyNode"] = field(default_factory=list)

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def to_dict(self) -> dict:
        return {
            "stmt_id": self.stmt_id,
            "latency": self.latency,
            "bottleneck": self.bottleneck.value,
            "children": [c.to_dict() for c in self.children],
        }

    @staticmethod
    def from_dict(d: dict) -> "HierarchyNode":
        return HierarchyNode(
            stmt_id=d["stmt_id"],
            latency=d["latency"],
            bottleneck=Bottleneck(d["bottleneck"]),
            children=[HierarchyNode.from_dict(c) for c in d["children"]],
        )


@dataclass
class EvalResult:
    status: Status
    cycles: float  # inf unless status is OK
    util: dict[str, float]
    report: HierarchyNode | None
    eval_seconds: float

    @property
    def ok(self) -> bool:
        return self.status is Status.OK

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "cycles": None if math.isinf(self.cycles) else self.cycles,
            "util": self.util,
            "report": self.report.to_dict() if self.report else None,
            "eval_seconds": self.eval_seconds,
        }

    @staticmethod
    def from_dict(d: dict) -> "EvalResult":
        return EvalResult(
            status=Status(d["status"]),
            cycles=math.inf if d["cycles"] is None else d["cycles"],
            util=dict(d["util"]),
            report=HierarchyNode.from_dict(d["report"]) if d["report"] else None,
            eval_seconds=d["eval_seconds"],
        )


def _zero_util() -> dict[str, float]:
    return {kind: 0.0 for kind in RESOURCE_KINDS}


# ---------------------------------------------------------------------------
# Mock backend

@dataclass(frozen=True)
class _LoopSetting:
    pf: int = 1
    tf: int = 1
    mode: str = "off"


class MockHlsEvaluator:
    """Deterministic analytical stand-in for a synthesis backend."""

    def __init__(self, kernel: KernelModel, space: DesignSpace, tu: float = DEFAULT_TU):
        self.kernel = kernel
        self.space = space
        self.tu = tu
        self._loops = {node.id: node for node in kernel.top.walk()}
        for spec in space.params.values():
            if spec.scope not in self._loops:
                raise ModelError(f"parameter {spec.name!r} is scoped to unknown loop {spec.scope!r}")

    def evaluate(self, cfg: Config) -> EvalResult:
        if not validate(self.space, cfg).ok:
            return EvalResult(Status.INVALID, math.inf, _zero_util(), None, 0.0)

        settings = self._settings(cfg)
        volume = {"n": 0}
        demand = {kind: 0 for kind in RESOURCE_KINDS}

        def bytes_per_iter(node: LoopNode) -> int:
            total = sum(s.bytes_per_iter for s in node.mem_streams)
            return total + sum(c.trip_count * bytes_per_iter(c) for c in node.children)

        def array_bytes_per_iter(node: LoopNode) -> dict[str, int]:
            per: dict[str, int] = {}
            for s in node.mem_streams:
                per[s.array_id] = per.get(s.array_id, 0) + s.bytes_per_iter
            for c in node.children:
                for arr, b in array_bytes_per_iter(c).items():
                    per[arr] = per.get(arr, 0) + c.trip_count * b
            return per

        def unrolled_lat(node: LoopNode) -> int:
            return node.compute_cycles + sum(unrolled_lat(c) for c in node.children)

        def build(node: LoopNode, unrolled: bool, copies: int) -> HierarchyNode:
            s = settings.get(node.id, _LoopSetting())
            my_copies = copies * (node.trip_count if unrolled else s.pf)
            volume["n"] += max(node.compute_cycles, 1) * my_copies
            work = node.compute_cycles * my_copies
            for kind, w in RESOURCE_WEIGHT.items():
                demand[kind] += work * w

            inner_unrolled = unrolled or (s.mode == "fg")
            children = [build(c, inner_unrolled, my_copies) for c in node.children]
            body = node.compute_cycles + sum(c.latency for c in children)

            if unrolled:
                latency = body
                transfer = math.ceil(node.trip_count * bytes_per_iter(node) / self.kernel.bus_bytes_per_cycle)
                kind = Bottleneck.MEMORY if transfer > latency else Bottleneck.COMPUTE
                return HierarchyNode(node.id, latency, kind, children)

            iters = math.ceil(node.trip_count / s.pf)
            if s.mode == "off":
                latency = iters * body
                transfer = math.ceil(node.trip_count * bytes_per_iter(node) / self.kernel.bus_bytes_per_cycle)
                kind = Bottleneck.MEMORY if transfer > latency else Bottleneck.COMPUTE
            elif s.mode == "fg":
                depth = body  # children were built unrolled
                ii = node.quirks.get(s.pf, 1)
                latency = depth + (iters - 1) * ii
                transfer = math.ceil(node.trip_count * bytes_per_iter(node) / self.kernel.bus_bytes_per_cycle)
                kind = Bottleneck.MEMORY if transfer > latency else Bottleneck.COMPUTE
            elif s.mode == "cg":
                tiles = math.ceil(node.trip_count / s.tf)
                tile_bytes = s.tf * bytes_per_iter(node)
                t_m = math.ceil(tile_bytes / self.kernel.bus_bytes_per_cycle)
                tile_compute = math.ceil(s.tf / s.pf) * body
                latency = t_m + tiles * max(t_m, tile_compute)
                kind = Bottleneck.MEMORY if t_m > tile_compute else Bottleneck.COMPUTE
                for arr, b in array_bytes_per_iter(node).items():
                    demand["bram"] += math.ceil(s.tf * b / BRAM_BYTES) * my_copies
            else:
                raise ModelError(f"bad pipeline mode {s.mode!r} on loop {node.id!r}")
            return HierarchyNode(node.id, latency, kind, children)

        report = build(self.kernel.top, unrolled=False, copies=1)
        # simulated backend runtime, scaled so a run at the effort limit
        # takes exactly the 60-minute budget
        eval_seconds = 3600.0 * volume["n"] / self.kernel.hls_effort_limit

        if volume["n"] > self.kernel.hls_effort_limit:
            return EvalResult(Status.TIMEOUT, math.inf, _zero_util(), None, eval_seconds)
        util = {
            kind: demand[kind] / self.kernel.resource_budget[kind]
            for kind in RESOURCE_KINDS
        }
        if any(u >= self.tu for u in util.values()):
            return EvalResult(Status.OVER_UTIL, math.inf, util, None, eval_seconds)
        return EvalResult(Status.OK, float(report.latency), util, report, eval_seconds)

    def _settings(self, cfg: Config) -> dict[str, _LoopSetting]:
        per_loop: dict[str, dict[str, object]] = {}
        for name, value in cfg.items:
            spec = self.space.params.get(name)
            if spec is None:
                continue
            slot = per_loop.setdefault(spec.scope, {})
            if spec.kind is ParamKind.PIPELINE:
                if not isinstance(value, str):
                    raise ModelError(f"pipeline parameter {name!r} holds non-mode value {value!r}")
                slot["mode"] = value
            elif spec.kind is ParamKind.PARALLEL:
                slot["pf"] = int(value)
            else:
                slot["tf"] = int(value)
        return {
            loop_id: _LoopSetting(
                pf=slot.get("pf", 1), tf=slot.get("tf", 1), mode=slot.get("mode", "off")
            )
            for loop_id, slot in per_loop.items()
        }


# ---------------------------------------------------------------------------
# Cache and results log

class EvalCache:
    """Append-only persistent result store keyed by canonical config key.

    First write wins; a corrupt trailing record is truncated with a warning
    on load. Safe for concurrent use from multiple worker threads.
    """

    def __init__(self, path: str | None = None):
        self.path = path
        self._lock = threading.Lock()
        self._records: dict[str, EvalResult] = {}
        self._fh = None
        if path is not None:
            self._load()

    def _load(self) -> None:
        try:
            fh = open(self.path, "a+", encoding="utf-8")
        except OSError as e:
            raise StorageError(f"cannot open cache {self.path!r}: {e}") from None
        fh.seek(0)
        text = fh.read()
        if text:
            lines = text.split("\n")
            if lines[0] != CACHE_FILE_HEADER:
                fh.close()
                raise StorageError(f"{self.path!r} is not a result cache")
            good = len(lines[0]) + 1
            for line in lines[1:]:
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    self._records[rec["key"]] = EvalResult.from_dict(rec["result"])
                except (ValueError, KeyError, TypeError):
                    log.warning("truncating corrupt record at byte %d of %s", good, self.path)
                    fh.truncate(good)
                    break
                good += len(line) + 1
        else:
            fh.write(CACHE_FILE_HEADER + "\n")
            fh.flush()
        self._fh = fh

    def get(self, key: str) -> EvalResult | None:
        with self._lock:
            return self._records.get(key)

    def put(self, key: str, result: EvalResult) -> None:
        with self._lock:
            if key in self._records:
                return  # first write wins
            self._records[key] = result
            if self._fh is not None:
                rec = {"key": key, "result": result.to_dict(), "ts": time.time()}
                self._fh.write(json.dumps(rec) + "\n")
                self._fh.flush()

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None


class ResultsLog:
    """Line-delimited external log of every backend evaluation."""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        try:
            new = True
            try:
                with open(path, "r", encoding="utf-8") as fh:
                    new = not fh.readline().strip()
            except FileNotFoundError:
                pass
            self._fh = open(path, "a", encoding="utf-8")
            if new:
                self._fh.write(RESULTS_LOG_HEADER + "\n")
                self._fh.flush()
        except OSError as e:
            raise StorageError(f"cannot open results log {path!r}: {e}") from None

    def append(self, key: str, cfg: Config, result: EvalResult) -> None:
        rec = {
            "key": key,
            "config": {k: v for k, v in cfg.items},
            "status": result.status.value,
            "cycles": None if math.isinf(result.cycles) else result.cycles,
            "util": result.util,
            "eval_seconds": result.eval_seconds,
            "ts": time.time(),
        }
        with self._lock:
            self._fh.write(json.dumps(rec) + "\n")
            self._fh.flush()

    def close(self) -> None:
        with self._lock:
            self._fh.close()


class CachingEvaluator:
    """Evaluator front door: cache lookup, single-flight backend calls,
    call counting and result logging."""

    def __init__(self, backend, cache: EvalCache | None = None, results_log: ResultsLog | None = None):
        self.backend = backend
        self.cache = cache if cache is not None else EvalCache()
        self.results_log = results_log
        self.calls = 0
        self.backend_calls = 0
        self.cache_hits = 0
        self._lock = threading.Lock()
        self._inflight: dict[str, threading.Event] = {}

    def evaluate(self, cfg: Config) -> EvalResult:
        key = cfg.key
        with self._lock:
            self.calls += 1
        while True:
            with self._lock:
                cached = self.cache.get(key)
                if cached is not None:
                    self.cache_hits += 1
                    return cached
                event = self._inflight.get(key)
                if event is None:
                    self._inflight[key] = threading.Event()
                    break
            event.wait()
        try:
            result = self.backend.evaluate(cfg)
            self.cache.put(key, result)
            if self.results_log is not None:
                self.results_log.append(key, cfg, result)
            with self._lock:
                self.backend_calls += 1
            return result
        finally:
            with self._lock:
                self._inflight.pop(key).set()
