"""Kernel loop-hierarchy model and the automatic design-space generator.

The kernel arrives as a loop tree (trip counts, straight-line body cycles,
memory streams, optional II quirks), not as C source. From it we emit one
pipeline/parallel/tiling parameter set per loop following the pruning
rules: innermost loops with small trip counts are skipped, factors divide
the trip count, parallel factors are capped at 128 (plus the trip count
itself on non-innermost loops), and cross-parameter exclusions are encoded
as option-list conditions so that validity has a single source of truth.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import dsl
from .dsl import Comprehension, OptionValue
from .errors import ModelError
from .space import Config, DesignSpace, ParamKind, ParamSpec, enumerate_valid, grid_size, validate
from .space import _build_space

KERNEL_FILE_HEADER = "autodse-kernel-model v1"

#: innermost loops at or below this trip count get no parameters; the
#: backend schedules them well on its own
SMALL_LOOP_TC = 16

#: parallel factors beyond this make the backend crawl; only the trip
#: count itself may exceed it
MAX_PARALLEL = 128

RESOURCE_KINDS = ("lut", "ff", "dsp", "bram")


@dataclass
class MemStream:
    """Bytes one loop iteration moves to or from DRAM for one array."""

    array_id: str
    direction: str  # load | store
    bytes_per_iter: int

    def __post_init__(self):
        if self.direction not in ("load", "store"):
            raise ModelError(f"bad stream direction {self.direction!r}")
        if self.bytes_per_iter < 1:
            raise ModelError("bytes_per_iter must be >= 1")


@dataclass
class LoopNode:
    id: str
    trip_count: int
    compute_cycles: int = 0
    children: list["LoopNode"] = field(default_factory=list)
    mem_streams: list[MemStream] = field(default_factory=list)
    quirks: dict[int, int] = field(default_factory=dict)  # parallel factor -> II

    @property
    def innermost(self) -> bool:
        return not self.children

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class KernelModel:
    name: str
    top: LoopNode
    resource_budget: dict[str, int]
    bus_bytes_per_cycle: int = 64
    hls_effort_limit: int = 1_000_000

    def __post_init__(self):
        for kind in RESOURCE_KINDS:
            if self.resource_budget.get(kind, 0) <= 0:
                raise ModelError(f"resource budget for {kind!r} must be positive")
        if self.bus_bytes_per_cycle < 1:
            raise ModelError("bus_bytes_per_cycle must be >= 1")
        seen = set()
        for node in self.top.walk():
            if node.trip_count < 1:
                raise ModelError(f"loop {node.id!r} has trip count {node.trip_count}")
            if node.id in seen:
                raise ModelError(f"duplicate loop id {node.id!r}")
            seen.add(node.id)

    def loop(self, loop_id: str) -> LoopNode:
        for node in self.top.walk():
            if node.id == loop_id:
                return node
        raise ModelError(f"no loop {loop_id!r} in kernel {self.name!r}")

    def ancestors(self, loop_id: str) -> list[LoopNode]:
        """Strict ancestors of a loop, outermost first."""
        path: list[LoopNode] = []

        def dfs(node, trail):
            if node.id == loop_id:
                path.extend(trail)
                return True
            return any(dfs(c, trail + [node]) for c in node.children)

        dfs(self.top, [])
        return path


# ---------------------------------------------------------------------------
# Design-space generation

def param_name(kind: ParamKind, loop_id: str) -> str:
    return f"{kind.value}__{loop_id}"


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def _comp(source: list[OptionValue], cond_text: str | None) -> Comprehension:
    cond = None
    if cond_text:
        ts = dsl.TokenStream(dsl.Lexer(cond_text).tokens())
        cond = dsl.parse_expr(ts)
    return Comprehension(head=dsl.Ref("x"), var="x", source=tuple(source), cond=cond)


def generate_design_space(k: KernelModel) -> DesignSpace:
    """Emit parameters per loop with exclusion conditions.

    Conditions encode three rules: parallelization is disabled on a loop
    whose own pipeline runs in cg mode; every parameter defaults when any
    ancestor pipeline runs in fg mode (fg fully unrolls the subtree); and
    tiling times parallelization may not exceed the trip count.
    """
    specs: list[ParamSpec] = []
    for node in k.top.walk():
        anc_pipes = [
            param_name(ParamKind.PIPELINE, a.id)
            for a in k.ancestors(node.id)
            if not a.innermost
        ]
        not_in_fg = " and ".join(f"{p} != fg" for p in anc_pipes)
        tc = node.trip_count
        if node.innermost:
            if tc <= SMALL_LOOP_TC:
                continue
            pipe_options: list[OptionValue] = ["off", "fg"]
            par_options: list[OptionValue] = [d for d in _divisors(tc) if d < tc and d <= MAX_PARALLEL]
            til_options = None
        else:
            pipe_options = ["off", "cg", "fg"]
            par_options = [d for d in _divisors(tc) if d <= MAX_PARALLEL]
            if tc not in par_options:
                par_options.append(tc)
            til_options = [1] + [d for d in _divisors(tc) if 1 < d < tc]

        pipe = param_name(ParamKind.PIPELINE, node.id)
        par = param_name(ParamKind.PARALLEL, node.id)
        specs.append(ParamSpec(pipe, ParamKind.PIPELINE, node.id, _comp(pipe_options, not_in_fg), "off"))

        par_conds = []
        if not node.innermost:
            par_conds.append(f"{pipe} != cg")
        if not_in_fg:
            par_conds.append(not_in_fg)
        specs.append(ParamSpec(par, ParamKind.PARALLEL, node.id, _comp(par_options, " and ".join(par_conds)), 1))

        if til_options is not None:
            til_conds = [f"x * {par} <= {tc}"]
            if not_in_fg:
                til_conds.append(not_in_fg)
            specs.append(ParamSpec(
                param_name(ParamKind.TILING, node.id), ParamKind.TILING, node.id,
                _comp(til_options, " and ".join(til_conds)), 1,
            ))
    ds = _build_space(specs, loop_tree=k)
    return ds


@dataclass(frozen=True)
class SpaceSize:
    grid_points: int
    valid_points: int
    exact: bool  # False means a sampled estimate


def space_size(ds: DesignSpace, cap: int = 100_000, sample: int = 2000, seed: int = 0) -> SpaceSize:
    """Grid size and valid-point count (exact under ``cap``, else estimated
    from ``sample`` uniform grid draws)."""
    grid = grid_size(ds)
    if grid <= cap:
        valid = sum(1 for _ in enumerate_valid(ds, limit=grid, exhaustive=True))
        return SpaceSize(grid, valid, exact=True)
    rng = random.Random(seed)
    axes = {name: spec.base_options() for name, spec in ds.params.items()}
    hits = 0
    for _ in range(sample):
        cfg = Config.of({name: rng.choice(options) for name, options in axes.items()})
        if validate(ds, cfg).ok:
            hits += 1
    return SpaceSize(grid, round(grid * hits / sample), exact=False)


# ---------------------------------------------------------------------------
# Kernel model file format (indentation-nested key/value blocks)

def serialize_kernel_model(k: KernelModel) -> str:
    lines = [KERNEL_FILE_HEADER, f"name: {k.name}"]
    budget = " ".join(f"{kind}={k.resource_budget[kind]}" for kind in RESOURCE_KINDS)
    lines.append(f"budget: {budget}")
    lines.append(f"bus_bytes_per_cycle: {k.bus_bytes_per_cycle}")
    lines.append(f"hls_effort_limit: {k.hls_effort_limit}")

    def emit(node: LoopNode, depth: int):
        pad = "  " * depth
        lines.append(f"{pad}loop: {node.id}")
        lines.append(f"{pad}  tc: {node.trip_count}")
        if node.compute_cycles:
            lines.append(f"{pad}  compute: {node.compute_cycles}")
        for s in node.mem_streams:
            lines.append(f"{pad}  mem: {s.array_id} {s.direction} {s.bytes_per_iter}")
        for pf in sorted(node.quirks):
            lines.append(f"{pad}  quirk: {pf} {node.quirks[pf]}")
        for child in node.children:
            emit(child, depth + 1)

    emit(k.top, 0)
    return "\n".join(lines) + "\n"


def parse_kernel_model(text: str) -> KernelModel:
    raw = [ln for ln in text.splitlines()]
    lines = [(i + 1, ln) for i, ln in enumerate(raw) if ln.strip() and not ln.strip().startswith("#")]
    if not lines or lines[0][1].strip() != KERNEL_FILE_HEADER:
        raise ModelError(f"missing header line {KERNEL_FILE_HEADER!r}")
    lines = lines[1:]

    fields: dict[str, str] = {}
    i = 0
    while i < len(lines):
        lineno, ln = lines[i]
        if ln.strip().startswith("loop:"):
            break
        if ":" not in ln:
            raise ModelError(f"line {lineno}: expected 'key: value'")
        key, _, value = ln.partition(":")
        fields[key.strip()] = value.strip()
        i += 1
    if i == len(lines):
        raise ModelError("kernel model has no top loop")

    def indent_of(s: str) -> int:
        return len(s) - len(s.lstrip(" "))

    def parse_loop(start: int, indent: int) -> tuple[LoopNode, int]:
        lineno, ln = lines[start]
        node = LoopNode(id=ln.strip()[len("loop:"):].strip(), trip_count=0)
        if not node.id:
            raise ModelError(f"line {lineno}: loop without an id")
        j = start + 1
        while j < len(lines):
            lineno, ln = lines[j]
            if indent_of(ln) <= indent:
                break
            stripped = ln.strip()
            if stripped.startswith("loop:"):
                child, j = parse_loop(j, indent_of(ln))
                node.children.append(child)
                continue
            key, _, value = stripped.partition(":")
            key, value = key.strip(), value.strip()
            try:
                if key == "tc":
                    node.trip_count = int(value)
                elif key == "compute":
                    node.compute_cycles = int(value)
                elif key == "mem":
                    array_id, direction, nbytes = value.split()
                    node.mem_streams.append(MemStream(array_id, direction, int(nbytes)))
                elif key == "quirk":
                    pf, ii = value.split()
                    node.quirks[int(pf)] = int(ii)
                else:
                    raise ModelError(f"line {lineno}: unknown loop key {key!r}")
            except (ValueError, TypeError):
                raise ModelError(f"line {lineno}: bad value for {key!r}: {value!r}") from None
            j += 1
        return node, j

    top, end = parse_loop(i, indent_of(lines[i][1]))
    if end != len(lines):
        raise ModelError(f"line {lines[end][0]}: trailing content after the top loop")

    budget: dict[str, int] = {}
    for part in fields.get("budget", "").split():
        kind, _, amount = part.partition("=")
        budget[kind] = int(amount)
    try:
        return KernelModel(
            name=fields.get("name", "kernel"),
            top=top,
            resource_budget=budget,
            bus_bytes_per_cycle=int(fields.get("bus_bytes_per_cycle", "64")),
            hls_effort_limit=int(fields.get("hls_effort_limit", "1000000")),
        )
    except ValueError:
        raise ModelError("bad numeric field in kernel model") from None
