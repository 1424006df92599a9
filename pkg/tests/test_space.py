"""Option evaluation, stepping, validity and enumeration semantics."""

import pytest

from pragmadse.errors import InvalidConfigError, SpaceTooLargeError
from pragmadse.space import (
    EXHAUSTED,
    Config,
    enumerate_valid,
    eval_options,
    grid_size,
    next_value,
    parse_design_space,
    validate,
)

from fixtures import FIG5_TEXT


@pytest.fixture
def fig5():
    return parse_design_space(FIG5_TEXT)


def cfg(**kv):
    return Config.of(kv)


def test_eval_options_filter(fig5):
    assert eval_options(fig5, "P2", cfg(P1="cg", P2=1)) == [1]
    assert eval_options(fig5, "P2", cfg(P1="fg", P2=1)) == [1, 2]
    assert eval_options(fig5, "P1", cfg(P1="off", P2=2)) == ["off", "cg", "fg"]


def test_default_injected_when_filtered_out():
    ds = parse_design_space(
        "loop: j\n#pragma ACCEL PARALLEL factor=auto{ options: P=[x for x in [2, 4] if x > 8]; default: 1 }"
    )
    assert eval_options(ds, "P", {}) == [1]


def test_next_value_chain(fig5):
    c = fig5.default_config()
    seen = []
    while True:
        step = next_value(fig5, c, "P1")
        if step is EXHAUSTED:
            break
        seen.append(step)
        c = c.replace("P1", step)
    assert seen == ["cg", "fg"]


def test_next_value_rejects_foreign_value(fig5):
    with pytest.raises(InvalidConfigError):
        next_value(fig5, cfg(P1="cg", P2=2), "P2")  # 2 is not in [1] under cg


def test_validate_examples(fig5):
    assert validate(fig5, cfg(P1="cg", P2=2)) .violations == ("P2",)
    assert validate(fig5, cfg(P1="cg", P2=1)).ok
    assert validate(fig5, fig5.default_config()).ok


def test_validate_flags_missing_parameter(fig5):
    verdict = validate(fig5, Config.of({"P1": "off"}))
    assert not verdict.ok and "P2" in verdict.violations


def test_enumerate_valid_fig5(fig5):
    configs = list(enumerate_valid(fig5, limit=100, exhaustive=True))
    assert len(configs) == 5
    assert grid_size(fig5) == 6
    assert all(validate(fig5, c).ok for c in configs)
    # lexicographic in eval order, and the first config is all-defaults
    assert configs[0] == fig5.default_config()
    keys = [c.key for c in configs]
    assert keys == sorted(set(keys), key=keys.index)  # no duplicates


def test_enumerate_limit(fig5):
    assert len(list(enumerate_valid(fig5, limit=3))) == 3
    only = list(enumerate_valid(fig5, limit=1))
    assert only == [fig5.default_config()]


def test_enumerate_exhaustive_cap(fig5):
    with pytest.raises(SpaceTooLargeError):
        list(enumerate_valid(fig5, limit=5, exhaustive=True))  # grid is 6


def test_enumerate_deterministic(fig5):
    a = [c.key for c in enumerate_valid(fig5, limit=10)]
    b = [c.key for c in enumerate_valid(fig5, limit=10)]
    assert a == b


def _depends_transitively(ds, name, on):
    seen = set()
    stack = [name]
    while stack:
        cur = stack.pop()
        for dep in ds.params[cur].deps:
            if dep == on:
                return True
            if dep not in seen:
                seen.add(dep)
                stack.append(dep)
    return False


def test_grid_internally_consistent(fig5):
    # substituting any member of a parameter's current option list keeps that
    # parameter valid; fallout is confined to parameters depending on it
    for base in enumerate_valid(fig5, limit=100):
        for name in fig5.params:
            for value in eval_options(fig5, name, base):
                verdict = validate(fig5, base.replace(name, value))
                assert all(
                    v != name and _depends_transitively(fig5, v, name)
                    for v in verdict.violations
                )


def test_config_value_object():
    a = cfg(P1="off", P2=1)
    b = cfg(P2=1, P1="off")
    assert a == b and a.key == b.key == "P1=off|P2=1"
    replaced = a.replace("P2", 2)
    assert replaced["P2"] == 2 and a["P2"] == 1
    assert "P1" in a and "Q" not in a
