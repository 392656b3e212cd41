import pytest
from hypothesis import given, settings, strategies as st

from flexrepair.frontend import parse
from flexrepair.interp import TestCase as Case, run
from flexrepair.model import (COND, Const, LoweringError, ModelOptions, Op, Var, build_model,
                              hoist_side_effecting_calls, parse_expr, pretty_print, read_model)

from conftest import GOLDEN, model_of, sample

FOR_RANGE = "a = 3\nb = a + 1\nfor x in range(0, 2):\n    b += x\nb += a\n"


def test_golden_sample_model():
    text = pretty_print(model_of(sample("sample.ml")))
    assert text == (GOLDEN / "sample_model.txt").read_text()


def test_sample_model_shape():
    f = model_of(sample("sample.ml")).functions["main"]
    assert list(f.locations) == [1, 2, 3, 4]
    assert str(f.locations[1].get("b")) == "AssAdd(AssAdd(GetElement(a', 0), 1), c')"
    loc2 = f.locations[2]
    assert loc2.bindings == ((COND, parse_expr("Lt(ind#0, len(iter#0))")),)
    assert (loc2.true_next, loc2.false_next) == (4, 3)
    assert "True -> 2, False -> None" in pretty_print(model_of(sample("sample.ml")))


def test_single_assignment():
    f = model_of("a = 1\n").functions["main"]
    assert len(f.locations) == 1
    loc = f.locations[1]
    assert loc.bindings == (("a", Const("1")),)
    assert loc.true_next is None and loc.false_next is None


def test_for_range_lowering():
    f = model_of(FOR_RANGE).functions["main"]
    assert len(f.locations) == 4
    assert str(f.locations[3].get("b")) == "AssAdd(b, a)"
    assert str(f.locations[1].get("b")) == "Add(a', 1)"
    assert str(f.locations[4].get("b")) == "AssAdd(b, x')"
    assert f.locations[4].true_next == 2


def test_while_loop_guard_holds_only_cond():
    f = model_of("x = 0\nwhile x < 3:\n    x += 1\nprint(x)\n").functions["main"]
    guard = f.locations[2]
    assert guard.bound() == [COND]
    assert len(f.locations) == 4


def test_input_split_is_hoisted_once():
    f = model_of("a, b, c = input().split()\n").functions["main"]
    loc = f.locations[1]
    assert loc.bound() == ["input_val#0", "a", "b", "c"]
    assert str(loc.get("input_val#0")) == "input()"
    assert str(loc.get("b")) == "GetElement(split(input_val#0'), 1)"


def test_two_inputs_get_distinct_variables():
    m = model_of("x = input()\ny = input()\nprint(y + x)\n")
    names = [v for v in m.functions["main"].locations[1].bound() if v.startswith("input_val")]
    assert names == ["input_val#0", "input_val#1"]
    assert run(m, Case("t", ("p", "q"))).stdout == ["qp"]
    assert run(m, Case("t", ("q", "p"))).stdout == ["pq"]


def test_hoisting_without_calls_is_identity():
    m = model_of("a = 1\nb = a + 2\n")
    assert hoist_side_effecting_calls(m, {"input"}) == m


def test_ternary_optimization_folds_loop_free_if():
    src = "x = int(input())\nif x > 0:\n    y = 1\nelse:\n    y = 2\nprint(y)\n"
    plain = model_of(src).functions["main"]
    folded = build_model(parse(src), ModelOptions(ternary_optimization=True)).functions["main"]
    assert len(folded.locations) < len(plain.locations)
    assert any(isinstance(e, Op) and e.name == "ite" for _, e in folded.locations[1].bindings)
    for stdin, out in (("3", ["1"]), ("-3", ["2"])):
        assert run(build_model(parse(src), ModelOptions(True)), Case("t", (stdin,))).stdout == out


def test_break_outside_loop():
    with pytest.raises(LoweringError):
        model_of("break\n")


def test_pretty_print_round_trip():
    for text in (sample("sample.ml"), FOR_RANGE, sample("extra_if_correct.ml")):
        m = model_of(text)
        assert read_model(pretty_print(m), m.imports) == m


def test_user_main_is_kept_apart_from_top_level():
    m = model_of("def main():\n    print(1)\n\n\nmain()\n")
    assert set(m.functions) == {"main", "$main"}
    assert m.entry == "$main"
    assert run(m, Case("t")).stdout == ["1"]


def _check_invariants(m):
    for f in m.functions.values():
        assert f.entry in f.locations
        for loc in f.locations.values():
            names = loc.bound()
            assert len(names) == len(set(names))
            for t in (loc.true_next, loc.false_next):
                assert t is None or t in f.locations
            if not loc.conditional:
                assert loc.false_next is None


# straight-line programs for the nesting property
_names = st.sampled_from(["a", "b", "c"])
_ops = st.sampled_from(["+", "-", "*"])


@st.composite
def straight_line(draw):
    lines = ["a = 1", "b = 2", "c = 3"]
    for _ in range(draw(st.integers(1, 8))):
        t, l, r, op = draw(_names), draw(_names), draw(_names), draw(_ops)
        kind = draw(st.integers(0, 2))
        if kind == 0:
            lines.append(f"{t} = {l} {op} {r}")
        elif kind == 1:
            lines.append(f"{t} {op}= {draw(st.integers(-3, 3))}")
        else:
            lines.append(f"{t}, {l} = {r}, {t} {op} {l}" if t != l else f"{t} = {r}")
    lines.append("print(a, b, c)")
    return "\n".join(lines) + "\n"


@settings(max_examples=1000)
@given(straight_line())
def test_nesting_matches_sequential_execution(src):
    m = model_of(src)
    _check_invariants(m)
    assert len(m.functions["main"].locations) == 1
    env = {"print": lambda *xs: captured.append(" ".join(str(x) for x in xs))}
    captured = []
    exec(compile(src, "<oracle>", "exec"), env)
    assert run(m, Case("t")).stdout == captured
