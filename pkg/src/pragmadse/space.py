"""Design-space model: parameters, configurations, validity and enumeration.

A design space is a set of named tuning parameters, each attached to a loop
and carrying a conditional option list. Conditions may reference other
parameters, which induces a dependency DAG; option lists are evaluated under
the current values of those parameters, so infeasible grid points are simply
not members of their option lists.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping

from . import dsl
from .dsl import Comprehension, OptionValue, TokenStream
from .errors import (
    CyclicDependencyError,
    DslSyntaxError,
    InvalidConfigError,
    SpaceTooLargeError,
    UnknownIdentifierError,
)

SPACE_FILE_HEADER = "# autodse-design-space v1"


class ParamKind(enum.Enum):
    PIPELINE = "PIPELINE"
    PARALLEL = "PARALLEL"
    TILING = "TILING"


#: attribute keyword used in the pragma form of each parameter kind
_ATTR = {ParamKind.PIPELINE: "mode", ParamKind.PARALLEL: "factor", ParamKind.TILING: "factor"}


@dataclass(frozen=True)
class ParamSpec:
    """One tuning parameter: an option comprehension scoped to a loop."""

    name: str
    kind: ParamKind
    scope: str
    comp: Comprehension
    default: OptionValue
    deps: frozenset[str] = field(default_factory=frozenset)

    def base_options(self) -> list[OptionValue]:
        """Option list with the filter ignored (the unconditioned grid axis)."""
        values = list(self.comp.source)
        if self.default not in values:
            values.append(self.default)
        return values


class EXHAUSTED:
    """Sentinel: a parameter has no next option in its current list."""

    def __repr__(self):  # pragma: no cover
        return "EXHAUSTED"


EXHAUSTED = EXHAUSTED()


@dataclass(frozen=True)
class Config:
    """A total assignment of one option per parameter (a value object)."""

    items: tuple[tuple[str, OptionValue], ...]

    @staticmethod
    def of(values: Mapping[str, OptionValue]) -> "Config":
        return Config(tuple(sorted(values.items())))

    def __getitem__(self, name: str) -> OptionValue:
        for k, v in self.items:
            if k == name:
                return v
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(k == name for k, _ in self.items)

    def as_dict(self) -> dict[str, OptionValue]:
        return dict(self.items)

    def replace(self, name: str, value: OptionValue) -> "Config":
        values = self.as_dict()
        values[name] = value
        return Config.of(values)

    @property
    def key(self) -> str:
        """Canonical key: parameter names sorted, injective over assignments."""
        return "|".join(f"{k}={dsl.format_value(v)}" for k, v in self.items)

    @staticmethod
    def from_key(key: str) -> "Config":
        values = {}
        for part in key.split("|"):
            name, _, raw = part.partition("=")
            values[name] = dsl.parse_value_token(raw)
        return Config.of(values)


@dataclass
class DesignSpace:
    """All parameters plus their dependency-respecting evaluation order."""

    params: dict[str, ParamSpec]
    eval_order: list[str]
    loop_tree: object | None = None  # KernelModel root when generated

    @property
    def k(self) -> int:
        return len(self.params)

    def default_config(self) -> Config:
        return Config.of({name: spec.default for name, spec in self.params.items()})

    def restrict(self, overrides: Mapping[str, "ParamSpec"]) -> "DesignSpace":
        """A view with some parameters replaced (used by partitioning)."""
        params = dict(self.params)
        params.update(overrides)
        return DesignSpace(params=params, eval_order=list(self.eval_order), loop_tree=self.loop_tree)


# ---------------------------------------------------------------------------
# Operations

def eval_options(ds: DesignSpace, name: str, ctx: Config | Mapping[str, OptionValue]) -> list[OptionValue]:
    """Conditionally evaluated option list for one parameter.

    ``ctx`` must assign every parameter the condition references. The
    parameter's default is appended whenever the filter removed it, so the
    list is never empty and the off state stays reachable.
    """
    spec = ds.params[name]
    env = ctx.as_dict() if isinstance(ctx, Config) else dict(ctx)
    env.pop(name, None)
    values = dsl.eval_comprehension(spec.comp, env)
    if spec.default not in values:
        values.append(spec.default)
    return values


def next_value(ds: DesignSpace, cfg: Config, name: str) -> OptionValue | type(EXHAUSTED):
    """The option after cfg[name] in its current conditional list."""
    options = eval_options(ds, name, cfg)
    current = cfg[name]
    try:
        i = options.index(current)
    except ValueError:
        raise InvalidConfigError(
            f"{name}={dsl.format_value(current)} is not in its option list {options}"
        ) from None
    if i + 1 >= len(options):
        return EXHAUSTED
    return options[i + 1]


@dataclass(frozen=True)
class Verdict:
    ok: bool
    violations: tuple[str, ...] = ()


def validate(ds: DesignSpace, cfg: Config) -> Verdict:
    """VALID iff every parameter's value is a member of its conditional list."""
    bad = []
    for name in ds.eval_order:
        if name not in cfg:
            bad.append(name)
            continue
        if cfg[name] not in eval_options(ds, name, cfg):
            bad.append(name)
    return Verdict(ok=not bad, violations=tuple(bad))


def grid_size(ds: DesignSpace) -> int:
    """Product of unconditioned option-list lengths."""
    n = 1
    for spec in ds.params.values():
        n *= len(spec.base_options())
    return n


def enumerate_valid(ds: DesignSpace, limit: int, exhaustive: bool = False) -> Iterator[Config]:
    """Yield valid configs in eval_order-lexicographic order, up to ``limit``.

    Enumeration assigns parameters in dependency order and draws each from
    its conditional option list, so only valid configs are visited. With
    ``exhaustive`` the caller wants the whole space; the call is rejected
    when the unpruned grid already exceeds ``limit``.
    """
    if limit <= 0:
        raise ValueError("limit must be positive")
    if exhaustive and grid_size(ds) > limit:
        raise SpaceTooLargeError(f"grid has {grid_size(ds)} points, limit is {limit}")
    order = ds.eval_order
    emitted = 0

    def rec(i: int, env: dict[str, OptionValue]) -> Iterator[Config]:
        nonlocal emitted
        if i == len(order):
            emitted += 1
            yield Config.of(env)
            return
        for v in eval_options(ds, order[i], env):
            if emitted >= limit:
                return
            env[order[i]] = v
            yield from rec(i + 1, env)
            del env[order[i]]

    yield from rec(0, {})


# ---------------------------------------------------------------------------
# File format

def parse_design_space(text: str, loop_tree: object | None = None) -> DesignSpace:
    """Parse the pragma-embedded design-space format.

    Each parameter is a ``#pragma ACCEL`` line carrying an ``auto{...}``
    block (or a pinned concrete value) and is attached to the most recent
    ``loop:`` line.
    """
    ts = TokenStream(dsl.Lexer(text).tokens())
    specs: list[ParamSpec] = []
    names: set[str] = set()
    scope: str | None = None
    while ts.peek().kind != "EOF":
        tok = ts.peek()
        if tok.kind == "IDENT" and tok.text == "loop":
            ts.next()
            ts.expect("SYM", ":")
            scope = ts.expect("IDENT").text
        elif tok.kind == "PRAGMA":
            if scope is None:
                raise DslSyntaxError("pragma before any 'loop:' line", tok.line, tok.col)
            spec = _parse_pragma(ts, scope)
            if spec.name in names:
                raise DslSyntaxError(f"duplicate parameter name {spec.name!r}", tok.line, tok.col)
            names.add(spec.name)
            specs.append(spec)
        else:
            ts.error("expected 'loop:' or '#pragma'")
    return _build_space(specs, loop_tree)


def _parse_pragma(ts: TokenStream, scope: str) -> ParamSpec:
    ts.expect("PRAGMA")
    ts.expect("IDENT", "ACCEL")
    kind_tok = ts.expect("IDENT")
    try:
        kind = ParamKind(kind_tok.text)
    except ValueError:
        raise DslSyntaxError(
            f"unknown pragma kind {kind_tok.text!r}", kind_tok.line, kind_tok.col
        ) from None
    attr_tok = ts.expect("IDENT")
    if attr_tok.text != _ATTR[kind]:
        raise DslSyntaxError(
            f"{kind.value} takes {_ATTR[kind]!r}, not {attr_tok.text!r}",
            attr_tok.line, attr_tok.col,
        )
    ts.expect("SYM", "=")
    if ts.accept("IDENT", "auto"):
        ts.expect("SYM", "{")
        ts.expect("IDENT", "options")
        ts.expect("SYM", ":")
        name = ts.expect("IDENT").text
        ts.expect("SYM", "=")
        comp = dsl.parse_comprehension(ts)
        ts.expect("SYM", ";")
        ts.expect("IDENT", "default")
        ts.expect("SYM", ":")
        default = dsl.parse_value_token(_expect_value(ts))
        ts.expect("SYM", "}")
        return ParamSpec(name, kind, scope, comp, default)
    # pinned form: a concrete value, parsed as a one-option space
    value = dsl.parse_value_token(_expect_value(ts))
    comp = Comprehension(head=dsl.Ref("x"), var="x", source=(value,), cond=None)
    return ParamSpec(f"{kind.value}__{scope}", kind, scope, comp, value)


def _expect_value(ts: TokenStream) -> str:
    tok = ts.peek()
    if tok.kind == "INT" or (tok.kind == "IDENT" and tok.text in dsl.MODES):
        ts.next()
        return tok.text
    ts.error("expected an integer or mode token")


def _build_space(specs: Iterable[ParamSpec], loop_tree: object | None) -> DesignSpace:
    params: dict[str, ParamSpec] = {}
    for spec in specs:
        if spec.name in params:
            raise DslSyntaxError(f"duplicate parameter name {spec.name!r}", 0, 0)
        params[spec.name] = spec
    resolved: dict[str, ParamSpec] = {}
    for name, spec in params.items():
        refs = spec.comp.idents()
        unknown = refs - params.keys()
        if unknown:
            raise UnknownIdentifierError(
                f"parameter {name!r} references unknown name(s): {', '.join(sorted(unknown))}"
            )
        resolved[name] = replace(spec, deps=frozenset(refs))
    order = _topo_order(resolved)
    return DesignSpace(params=resolved, eval_order=order, loop_tree=loop_tree)


def _topo_order(params: dict[str, ParamSpec]) -> list[str]:
    """Kahn's algorithm, stable in declaration order; cycles are reported."""
    pending = {name: set(spec.deps) for name, spec in params.items()}
    order = []
    while pending:
        ready = [name for name, deps in pending.items() if not deps]
        if not ready:
            raise CyclicDependencyError(_find_cycle(params, set(pending)))
        for name in ready:
            order.append(name)
            del pending[name]
        for deps in pending.values():
            deps.difference_update(ready)
    return order


def _find_cycle(params: dict[str, ParamSpec], names: set[str]) -> list[str]:
    # walk dependency edges inside the stuck set until a node repeats
    start = sorted(names)[0]
    seen: list[str] = []
    node = start
    while node not in seen:
        seen.append(node)
        node = sorted(d for d in params[node].deps if d in names)[0]
    return seen[seen.index(node):] + [node]


def serialize_design_space(ds: DesignSpace) -> str:
    """Emit the pragma-embedded text form; parse() round-trips it."""
    lines = [SPACE_FILE_HEADER]
    for spec in ds.params.values():
        lines.append(f"loop: {spec.scope}")
        lines.append(
            "#pragma ACCEL {} {}=auto{{ options: {}={}; default: {} }}".format(
                spec.kind.value,
                _ATTR[spec.kind],
                spec.name,
                dsl.format_comprehension(spec.comp),
                dsl.format_value(spec.default),
            )
        )
    return "\n".join(lines) + "\n"


def spaces_equal(a: DesignSpace, b: DesignSpace) -> bool:
    """Structural equality: same params, options, conditions and defaults."""
    if list(a.params) != list(b.params) or a.eval_order != b.eval_order:
        return False
    for name in a.params:
        sa, sb = a.params[name], b.params[name]
        if (sa.kind, sa.scope, sa.default, sa.deps) != (sb.kind, sb.scope, sb.default, sb.deps):
            return False
        if sa.comp != sb.comp:
            return False
    return True
