"""Tokenizer, expression and design-space file grammar."""

import random

import pytest

from pragmadse import dsl
from pragmadse.dsl import Lexer, TokenStream
from pragmadse.errors import (
    CyclicDependencyError,
    DslSyntaxError,
    EvalError,
    UnknownIdentifierError,
)
from pragmadse.space import (
    ParamKind,
    parse_design_space,
    serialize_design_space,
    spaces_equal,
)

from fixtures import FIG5_TEXT


def parse_expr_text(text):
    return dsl.parse_expr(TokenStream(Lexer(text).tokens()))


def test_lexer_positions():
    toks = Lexer("loop: j\n#pragma ACCEL").tokens()
    assert [(t.kind, t.text) for t in toks[:3]] == [("IDENT", "loop"), ("SYM", ":"), ("IDENT", "j")]
    assert (toks[3].kind, toks[3].line, toks[3].col) == ("PRAGMA", 2, 1)


def test_lexer_comments_and_quotes():
    toks = Lexer("# a comment\n// c comment\n'off' 12").tokens()
    assert [(t.kind, t.text) for t in toks[:-1]] == [("IDENT", "off"), ("INT", "12")]
    with pytest.raises(DslSyntaxError):
        Lexer("'pip'").tokens()  # only mode tokens may be quoted


def test_expr_precedence_and_eval():
    e = parse_expr_text("1 + 2 * 3 == 7 and P != cg")
    assert dsl.eval_expr(e, {"P": "off"}) is True
    assert dsl.eval_expr(e, {"P": "cg"}) is False
    e = parse_expr_text("(2 + 4) * 2")
    assert dsl.eval_expr(e, {}) == 12
    assert dsl.eval_expr(parse_expr_text("7 / 2 + 7 % 2"), {}) == 4


def test_expr_sort_errors():
    with pytest.raises(EvalError):
        dsl.eval_expr(parse_expr_text("P == 1"), {"P": "cg"})
    with pytest.raises(EvalError):
        dsl.eval_expr(parse_expr_text("P < fg"), {"P": "cg"})
    with pytest.raises(EvalError):
        dsl.eval_expr(parse_expr_text("P + 1"), {"P": "off"})
    with pytest.raises(EvalError):
        dsl.eval_expr(parse_expr_text("4 / P"), {"P": 0})
    with pytest.raises(EvalError):
        dsl.eval_expr(parse_expr_text("1 and 2"), {})


def test_expr_format_round_trip():
    for text in ["a or b and c", "(a or b) and c", "x * (y + 1) <= 32", "a != cg and b == 4"]:
        e = parse_expr_text(text)
        assert parse_expr_text(dsl.format_expr(e)) == e


def test_comprehension_eval():
    comp = dsl.parse_comprehension(TokenStream(Lexer("[x for x in [1, 2, 4] if P1 != cg]").tokens()))
    assert comp.idents() == {"P1"}
    assert dsl.eval_comprehension(comp, {"P1": "fg"}) == [1, 2, 4]
    assert dsl.eval_comprehension(comp, {"P1": "cg"}) == []
    doubled = dsl.parse_comprehension(TokenStream(Lexer("[x * 2 for x in [1, 2]]").tokens()))
    assert dsl.eval_comprehension(doubled, {}) == [2, 4]


def test_parse_design_space_fig5():
    ds = parse_design_space(FIG5_TEXT)
    assert list(ds.params) == ["P1", "P2"]
    assert ds.params["P2"].deps == {"P1"}
    assert ds.params["P1"].deps == set()
    assert ds.params["P1"].kind is ParamKind.PIPELINE
    assert ds.params["P2"].default == 1
    assert ds.params["P1"].base_options() == ["off", "cg", "fg"]
    assert ds.eval_order == ["P1", "P2"]


def test_grouped_pragmas_share_a_loop_line():
    text = (
        "loop: j\n"
        "#pragma ACCEL PIPELINE mode=auto{ options: A=[x for x in [off, fg]]; default: off }\n"
        "#pragma ACCEL PARALLEL factor=auto{ options: B=[x for x in [1, 2]]; default: 1 }\n"
    )
    ds = parse_design_space(text)
    assert ds.params["A"].scope == ds.params["B"].scope == "j"


def test_parse_pinned_form():
    ds = parse_design_space("loop: j\n#pragma ACCEL PARALLEL factor=4\n"
                            "loop: j\n#pragma ACCEL PIPELINE mode=fg\n")
    assert ds.params["PARALLEL__j"].base_options() == [4]
    assert ds.params["PARALLEL__j"].default == 4
    assert ds.params["PIPELINE__j"].default == "fg"


def test_parse_errors_carry_positions():
    cases = [
        ("loop j\n", 1, 6),                      # missing colon
        ("loop: j\n#pragma ACCEL NOPE factor=4", 2, 15),  # unknown kind
        ("loop: j\n#pragma ACCEL PIPELINE factor=4", 2, 24),  # wrong attribute
        ("loop: j\n#pragma ACCEL PARALLEL factor=auto{ options: P=[x for x in [1,]; default: 1 }", 2, 63),
        ("#pragma ACCEL PARALLEL factor=4", 1, 1),  # pragma before loop line
    ]
    for text, line, col in cases:
        with pytest.raises(DslSyntaxError) as exc:
            parse_design_space(text)
        assert exc.value.line == line, text
        assert exc.value.col == col, text


def test_malformed_inputs_rejected():
    bad = [
        "loop: j\n#pragma ACCEL PARALLEL factor=auto{ options: P=[x for x in []]; default: 1 }",
        "loop: j\n#pragma ACCEL PARALLEL factor=auto{ options: P=[x for x in [1] }",
        "loop: j\n#pragma ACCEL PARALLEL factor=auto{ default: 1 }",
        "loop: j\n#pragma PARALLEL factor=4",
        "loop: j\n#pragma ACCEL PARALLEL factor=auto{ options: P=[x for off in [1]]; default: 1 }",
        "loop: j\n#pragma ACCEL PARALLEL factor=auto{ options: P=[x for x in [1] if x ** 2]; default: 1 }",
        "loop: j\n#pragma ACCEL PIPELINE mode=auto{ options: P=[x for x in [off]]; default: off",
    ]
    for text in bad:
        with pytest.raises(DslSyntaxError):
            parse_design_space(text)


def test_duplicate_parameter_rejected():
    text = FIG5_TEXT + "loop: k\n#pragma ACCEL TILING factor=auto{ options: P1=[x for x in [1]]; default: 1 }"
    with pytest.raises(DslSyntaxError, match="duplicate"):
        parse_design_space(text)


def test_unknown_identifier():
    text = "loop: j\n#pragma ACCEL PARALLEL factor=auto{ options: P=[x for x in [1, 2] if Q != 1]; default: 1 }"
    with pytest.raises(UnknownIdentifierError, match="Q"):
        parse_design_space(text)


def test_self_reference_is_a_cycle():
    text = "loop: j\n#pragma ACCEL PARALLEL factor=auto{ options: P2=[x for x in [1, 2] if P2 != 1]; default: 1 }"
    with pytest.raises(CyclicDependencyError) as exc:
        parse_design_space(text)
    assert exc.value.cycle == ["P2", "P2"]


def test_two_cycle_reported():
    text = (
        "loop: j\n#pragma ACCEL PARALLEL factor=auto{ options: A=[x for x in [1, 2] if B == 1]; default: 1 }\n"
        "loop: j\n#pragma ACCEL TILING factor=auto{ options: B=[x for x in [1, 2] if A == 1]; default: 1 }\n"
    )
    with pytest.raises(CyclicDependencyError) as exc:
        parse_design_space(text)
    assert set(exc.value.cycle) == {"A", "B"}


def test_serialize_round_trip_fig5():
    ds = parse_design_space(FIG5_TEXT)
    again = parse_design_space(serialize_design_space(ds))
    assert spaces_equal(ds, again)


# ---------------------------------------------------------------------------
# Randomized grammar fuzz (the acceptance suite runs the large campaign)

MODE_SETS = [["off", "cg", "fg"], ["off", "fg"], ["off", "cg"]]


def random_space_text(rng, messy=False):
    n = rng.randint(1, 6)
    lines = []
    names = []
    for i in range(n):
        name = f"P{i}"
        kind = rng.choice(["PIPELINE", "PARALLEL", "TILING"])
        loop = f"L{rng.randint(0, 2)}"
        if kind == "PIPELINE":
            options = rng.choice(MODE_SETS)
            default = options[0]
        else:
            count = rng.randint(1, 6)
            options = sorted(rng.sample([1, 2, 3, 4, 5, 6, 8, 12, 16, 32, 64], count))
            if 1 not in options:
                options = [1] + options
            options = [str(v) for v in options]
            default = options[0]
        cond = ""
        if names and rng.random() < 0.6:
            dep, dep_kind = rng.choice(names)
            if dep_kind == "PIPELINE":
                cond = f" if {dep} != {rng.choice(['off', 'cg', 'fg'])}"
            else:
                clause = rng.choice([
                    f"{dep} <= {rng.randint(1, 64)}",
                    f"x * {dep} <= {rng.randint(1, 64)}",
                    f"{dep} % 2 == 0 or x == {options[0]}",
                ])
                cond = f" if {clause}"
        names.append((name, kind))
        attr = "mode" if kind == "PIPELINE" else "factor"
        lines.append(f"loop: {loop}")
        lines.append(
            f"#pragma ACCEL {kind} {attr}=auto{{ options: {name}=[x for x in "
            f"[{', '.join(options)}]{cond}]; default: {default} }}"
        )
    if messy:
        decorated = ["# header comment"]
        for line in lines:
            if rng.random() < 0.3:
                decorated.append("// noise")
            decorated.append(" " * rng.randint(0, 4) + line)
        lines = decorated
    return "\n".join(lines) + "\n"


def test_fuzz_round_trip_small():
    rng = random.Random(20)
    for _ in range(300):
        text = random_space_text(rng)
        ds = parse_design_space(text)
        again = parse_design_space(serialize_design_space(ds))
        assert spaces_equal(ds, again)


def test_fuzz_messy_inputs_parse():
    rng = random.Random(21)
    for _ in range(200):
        parse_design_space(random_space_text(rng, messy=True))
