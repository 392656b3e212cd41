import json

import pytest
from hypothesis import given, settings, strategies as st

from flexrepair.frontend import ImportBinding, ImportTable
from flexrepair.interp import (FAIL, OK, PASS, RUNTIME_ERROR, STEP_LIMIT, StepLimits, TestCase as Case,
                               UnknownFunction, call_builtin, load_tests, normalize_output, run, verdict)

from conftest import model_of, sample
from test_model import FOR_RANGE, straight_line


def test_sample_final_environment():
    tr = run(model_of(sample("sample.ml")), Case("t"))
    assert tr.status == OK
    env = tr.steps[-1].post
    assert (env["b"], env["c"], env["a"]) == (12, 17, [5, 6])


def test_print_expression():
    tr = run(model_of("print(1 + 1)\n"), Case("t"))
    assert tr.stdout == ["2"]


def test_for_range_visits_guard_three_times():
    tr = run(model_of(FOR_RANGE), Case("t"))
    assert [s.location for s in tr.steps].count(2) == 3
    assert tr.steps[-1].post["b"] == 4 + 0 + 1 + 3


def test_call_builtin():
    assert call_builtin("len", [[1, 2, 3]]) == 3
    imports = ImportTable((ImportBinding("sq", "sqrt", "math"),))
    assert call_builtin("sq", [9], imports) == 3.0
    assert call_builtin("math.floor", [2.5]) == 2
    with pytest.raises(UnknownFunction):
        call_builtin("frobnicate", [1])


def test_imported_call_in_program():
    m = model_of("from math import sqrt as sq\nprint(int(sq(16)))\n")
    assert run(m, Case("t")).stdout == ["4"]


def test_division_semantics():
    tr = run(model_of("print(7 / 2)\nprint(7 // 2)\nprint(2 ** 70)\n"), Case("t"))
    assert tr.stdout == ["3.5", "3", str(2 ** 70)]


def test_runtime_error_and_step_limit():
    assert run(model_of("x = 1 // 0\n"), Case("t")).status == RUNTIME_ERROR
    tr = run(model_of("while True:\n    pass\n"), Case("t"), StepLimits(max_steps=50))
    assert tr.status == STEP_LIMIT


def test_input_exhaustion_is_runtime_error():
    tr = run(model_of("x = input()\ny = input()\n"), Case("t", ("1",)))
    assert tr.status == RUNTIME_ERROR
    assert tr.inputs_consumed == 1


def test_verdicts_and_normalisation():
    m = model_of("print(input() + '  ')\n")
    assert verdict(run(m, Case("t", ("a",))), Case("t", ("a",), ("a", ""))) == PASS
    assert verdict(run(m, Case("t", ("a",))), Case("t", ("a",), ("b",))) == FAIL
    assert normalize_output(["x  ", "", ""]) == ["x"]


def test_load_tests(tmp_path):
    (tmp_path / "t1.json").write_text(json.dumps({"id": "one", "stdin": ["1 2"], "stdout": ["3"]}))
    (tmp_path / "t2.json").write_text(json.dumps({"stdin": "4\n", "stdout": "4\n"}))
    tests = load_tests(tmp_path)
    assert [t.id for t in tests] == ["one", "t2"]
    assert tests[1].stdin == ("4",)


def test_user_function_and_recursion():
    src = "def fact(n):\n    if n < 2:\n        return 1\n    return n * fact(n - 1)\n\n\nprint(fact(10))\n"
    assert run(model_of(src), Case("t")).stdout == ["3628800"]


def _consistent(model, tr):
    by_frame = {}
    for s in tr.steps:
        by_frame.setdefault(s.frame, []).append(s)
    for steps in by_frame.values():
        for a, b in zip(steps, steps[1:]):
            loc = model.functions[a.function].locations[a.location]
            assert b.location in (loc.true_next, loc.false_next)


_loop_programs = st.builds(
    lambda n, k, step: (f"n = int(input())\ns = 0\ni = 0\nwhile i < n:\n"
                        f"    if i % {k} == 0:\n        s += i\n    else:\n        s -= {step}\n"
                        f"    i += 1\nfor j in range(0, n):\n    s += j\nprint(s)\n", n),
    st.integers(0, 12), st.integers(1, 4), st.integers(0, 5))


@settings(max_examples=1000)
@given(_loop_programs)
def test_trace_transition_consistency_and_determinism(prog):
    src, n = prog
    m = model_of(src)
    t = Case("t", (str(n),))
    a, b = run(m, t), run(m, t)
    assert a.status == OK
    assert [(s.location, s.post) for s in a.steps] == [(s.location, s.post) for s in b.steps]
    assert a.stdout == b.stdout
    _consistent(m, a)
    env = {"input": lambda: str(n), "print": lambda *xs: out.append(" ".join(map(str, xs)))}
    out = []
    exec(src, env)
    assert a.stdout == out
    assert a.inputs_consumed == 1


@settings(max_examples=1000)
@given(straight_line())
def test_final_environment_matches_reference(src):
    env = {"print": lambda *xs: None}
    exec(src, env)
    tr = run(model_of(src), Case("t"))
    post = tr.steps[-1].post
    assert all(post[v] == env[v] for v in "abc")
