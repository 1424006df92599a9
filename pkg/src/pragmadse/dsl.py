"""Tokenizer, expression AST and evaluator for the design-space DSL.

Option lists are written as restricted list comprehensions:

    [x for x in [1, 2, 4, 8] if OTHER != cg and x * OTHER2 <= 32]

The expression language is deliberately small: integer and mode literals
(off/cg/fg), the bound variable, other parameter names, comparisons,
``and``/``or``, and integer arithmetic (+ - * / %, with / truncating).
Modes and integers
are distinct sorts; mixing them in a comparison or using a mode in
arithmetic raises :class:`EvalError` rather than silently comparing false.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DslSyntaxError, EvalError

MODES = ("off", "cg", "fg")

#: An option value is a factor >= 1 or one of the pipeline mode tokens.
OptionValue = int | str


def format_value(v: OptionValue) -> str:
    return str(v)


def parse_value_token(text: str) -> OptionValue:
    if text in MODES:
        return text
    return int(text)


# ---------------------------------------------------------------------------
# Lexer

_SYMBOLS = (
    "==", "!=", "<=", ">=",
    "<", ">", "=", "+", "-", "*", "/", "%",
    "[", "]", "{", "}", "(", ")", ",", ";", ":",
)


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, INT, SYM, PRAGMA, EOF
    text: str
    line: int
    col: int


class Lexer:
    """Whole-file tokenizer with 1-based positions.

    ``#`` starts a comment unless it introduces ``#pragma``; ``//`` always
    starts a comment. Quotes around mode tokens ('off') are tolerated.
    """

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def _advance(self, n: int) -> None:
        for ch in self.text[self.pos:self.pos + n]:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += n

    def _skip_space_and_comments(self) -> None:
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch.isspace():
                self._advance(1)
            elif ch == "#" and not self.text.startswith("#pragma", self.pos):
                end = self.text.find("\n", self.pos)
                self._advance((end if end != -1 else len(self.text)) - self.pos)
            elif self.text.startswith("//", self.pos):
                end = self.text.find("\n", self.pos)
                self._advance((end if end != -1 else len(self.text)) - self.pos)
            else:
                return

    def tokens(self) -> list[Token]:
        out = []
        while True:
            tok = self._next()
            out.append(tok)
            if tok.kind == "EOF":
                return out

    def _next(self) -> Token:
        self._skip_space_and_comments()
        if self.pos >= len(self.text):
            return Token("EOF", "", self.line, self.col)
        line, col = self.line, self.col
        ch = self.text[self.pos]
        if self.text.startswith("#pragma", self.pos):
            self._advance(len("#pragma"))
            return Token("PRAGMA", "#pragma", line, col)
        if ch == "'":
            # quoted mode token, e.g. 'off'
            end = self.text.find("'", self.pos + 1)
            if end == -1:
                raise DslSyntaxError("unterminated quote", line, col)
            word = self.text[self.pos + 1:end]
            if word not in MODES:
                raise DslSyntaxError(f"quoted token {word!r} is not a mode", line, col)
            self._advance(end + 1 - self.pos)
            return Token("IDENT", word, line, col)
        if ch.isdigit():
            n = self.pos
            while n < len(self.text) and self.text[n].isdigit():
                n += 1
            word = self.text[self.pos:n]
            self._advance(n - self.pos)
            return Token("INT", word, line, col)
        if ch.isalpha() or ch == "_":
            n = self.pos
            while n < len(self.text) and (self.text[n].isalnum() or self.text[n] == "_"):
                n += 1
            word = self.text[self.pos:n]
            self._advance(n - self.pos)
            return Token("IDENT", word, line, col)
        for sym in _SYMBOLS:
            if self.text.startswith(sym, self.pos):
                self._advance(len(sym))
                return Token("SYM", sym, line, col)
        raise DslSyntaxError(f"unexpected character {ch!r}", line, col)


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._i = 0

    def peek(self) -> Token:
        return self._tokens[self._i]

    def next(self) -> Token:
        tok = self._tokens[self._i]
        if tok.kind != "EOF":
            self._i += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise DslSyntaxError(f"expected {want!r}, found {tok.text!r}", tok.line, tok.col)
        return self.next()

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        tok = self.peek()
        if tok.kind == kind and (text is None or tok.text == text):
            return self.next()
        return None

    def error(self, message: str):
        tok = self.peek()
        raise DslSyntaxError(message, tok.line, tok.col)


# ---------------------------------------------------------------------------
# Expressions

@dataclass(frozen=True)
class Lit:
    value: OptionValue


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Lit | Ref | BinOp

_CMP_OPS = ("==", "!=", "<=", ">=", "<", ">")
_ADD_OPS = ("+", "-")
_MUL_OPS = ("*", "/", "%")


def parse_expr(ts: TokenStream) -> Expr:
    return _parse_or(ts)


def _parse_or(ts: TokenStream) -> Expr:
    node = _parse_and(ts)
    while ts.accept("IDENT", "or"):
        node = BinOp("or", node, _parse_and(ts))
    return node


def _parse_and(ts: TokenStream) -> Expr:
    node = _parse_cmp(ts)
    while ts.accept("IDENT", "and"):
        node = BinOp("and", node, _parse_cmp(ts))
    return node


def _parse_cmp(ts: TokenStream) -> Expr:
    node = _parse_arith(ts)
    tok = ts.peek()
    if tok.kind == "SYM" and tok.text in _CMP_OPS:
        ts.next()
        node = BinOp(tok.text, node, _parse_arith(ts))
    return node


def _parse_arith(ts: TokenStream) -> Expr:
    node = _parse_term(ts)
    while True:
        tok = ts.peek()
        if tok.kind == "SYM" and tok.text in _ADD_OPS:
            ts.next()
            node = BinOp(tok.text, node, _parse_term(ts))
        else:
            return node


def _parse_term(ts: TokenStream) -> Expr:
    node = _parse_atom(ts)
    while True:
        tok = ts.peek()
        if tok.kind == "SYM" and tok.text in _MUL_OPS:
            ts.next()
            node = BinOp(tok.text, node, _parse_atom(ts))
        else:
            return node


def _parse_atom(ts: TokenStream) -> Expr:
    tok = ts.peek()
    if tok.kind == "INT":
        ts.next()
        return Lit(int(tok.text))
    if tok.kind == "IDENT":
        ts.next()
        if tok.text in MODES:
            return Lit(tok.text)
        return Ref(tok.text)
    if ts.accept("SYM", "("):
        node = parse_expr(ts)
        ts.expect("SYM", ")")
        return node
    ts.error("expected a literal, name or '('")


def expr_idents(node: Expr) -> set[str]:
    """Names referenced by an expression (mode literals excluded)."""
    if isinstance(node, Lit):
        return set()
    if isinstance(node, Ref):
        return {node.name}
    return expr_idents(node.left) | expr_idents(node.right)


def eval_expr(node: Expr, env: dict[str, OptionValue]):
    if isinstance(node, Lit):
        return node.value
    if isinstance(node, Ref):
        try:
            return env[node.name]
        except KeyError:
            raise EvalError(f"unbound name {node.name!r}") from None
    lhs = eval_expr(node.left, env)
    op = node.op
    if op in ("and", "or"):
        if not isinstance(lhs, bool):
            raise EvalError(f"{op!r} requires boolean operands")
        if op == "and" and not lhs:
            return False
        if op == "or" and lhs:
            return True
        rhs = eval_expr(node.right, env)
        if not isinstance(rhs, bool):
            raise EvalError(f"{op!r} requires boolean operands")
        return rhs
    rhs = eval_expr(node.right, env)
    if op in ("==", "!="):
        if _sort(lhs) != _sort(rhs):
            raise EvalError(f"cannot compare {lhs!r} with {rhs!r}")
        return (lhs == rhs) if op == "==" else (lhs != rhs)
    # remaining operators are integer-only
    if _sort(lhs) != "int" or _sort(rhs) != "int":
        raise EvalError(f"operator {op!r} requires integers, got {lhs!r} and {rhs!r}")
    if op == "<":
        return lhs < rhs
    if op == "<=":
        return lhs <= rhs
    if op == ">":
        return lhs > rhs
    if op == ">=":
        return lhs >= rhs
    if op == "+":
        return lhs + rhs
    if op == "-":
        return lhs - rhs
    if op == "*":
        return lhs * rhs
    if op in ("/", "%"):
        if rhs == 0:
            raise EvalError("division by zero")
        return lhs // rhs if op == "/" else lhs % rhs
    raise EvalError(f"operator {op!r} is outside the grammar")


def _sort(v) -> str:
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    return "mode"


_PRECEDENCE = {"or": 1, "and": 2}
_PRECEDENCE.update({op: 3 for op in _CMP_OPS})
_PRECEDENCE.update({op: 4 for op in _ADD_OPS})
_PRECEDENCE.update({op: 5 for op in _MUL_OPS})


def format_expr(node: Expr, parent_prec: int = 0) -> str:
    if isinstance(node, Lit):
        return format_value(node.value)
    if isinstance(node, Ref):
        return node.name
    prec = _PRECEDENCE[node.op]
    text = "{} {} {}".format(
        format_expr(node.left, prec),
        node.op,
        format_expr(node.right, prec + 1),
    )
    if prec < parent_prec:
        return f"({text})"
    return text


# ---------------------------------------------------------------------------
# Comprehensions

@dataclass(frozen=True)
class Comprehension:
    head: Expr
    var: str
    source: tuple[OptionValue, ...]
    cond: Expr | None

    def idents(self) -> set[str]:
        """External names (the bound variable is not external)."""
        names = expr_idents(self.head)
        if self.cond is not None:
            names |= expr_idents(self.cond)
        return names - {self.var}


def parse_comprehension(ts: TokenStream) -> Comprehension:
    ts.expect("SYM", "[")
    head = parse_expr(ts)
    ts.expect("IDENT", "for")
    var = ts.expect("IDENT").text
    if var in MODES:
        ts.error(f"{var!r} is a reserved mode token")
    ts.expect("IDENT", "in")
    ts.expect("SYM", "[")
    source = [_parse_value(ts)]
    while ts.accept("SYM", ","):
        source.append(_parse_value(ts))
    ts.expect("SYM", "]")
    cond = None
    if ts.accept("IDENT", "if"):
        cond = parse_expr(ts)
    ts.expect("SYM", "]")
    return Comprehension(head, var, tuple(source), cond)


def _parse_value(ts: TokenStream) -> OptionValue:
    tok = ts.peek()
    if tok.kind == "INT":
        ts.next()
        return int(tok.text)
    if tok.kind == "IDENT" and tok.text in MODES:
        ts.next()
        return tok.text
    ts.error("expected an integer or mode token")


def eval_comprehension(comp: Comprehension, env: dict[str, OptionValue]) -> list[OptionValue]:
    """Evaluate the filtered option list under an assignment of the
    referenced parameters. The condition must evaluate to a boolean."""
    out = []
    for v in comp.source:
        scope = dict(env)
        scope[comp.var] = v
        if comp.cond is not None:
            keep = eval_expr(comp.cond, scope)
            if not isinstance(keep, bool):
                raise EvalError("condition did not evaluate to a boolean")
            if not keep:
                continue
        out.append(eval_expr(comp.head, scope))
    return out


def format_comprehension(comp: Comprehension) -> str:
    body = "[{} for {} in [{}]".format(
        format_expr(comp.head),
        comp.var,
        ", ".join(format_value(v) for v in comp.source),
    )
    if comp.cond is not None:
        body += " if " + format_expr(comp.cond)
    return body + "]"
