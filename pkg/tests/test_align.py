import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from flexrepair.align import (PROCEED, REJECT, AlignConfig, AlignerMode, AlignmentResult, Mismatch,
                              flex_align, gate, recreate_function, rigid_align)
from flexrepair.cfg import SINK, build_cfg, make_cfg
from flexrepair.interp import TestCase as Case, run

from conftest import model_of, sample
from oracles import exhaustive_best, random_cfg

UNBOUNDED = AlignConfig(max_permutations=None)


def extra_if_cfgs():
    mc = model_of(sample("extra_if_correct.ml"))
    mi = model_of(sample("extra_if_incorrect.ml"))
    return mc, mi, build_cfg(mc.functions["f"]), build_cfg(mi.functions["f"])


def test_rigid_identity():
    g = build_cfg(model_of(sample("extra_if_correct.ml")).functions["f"])
    res = rigid_align(g, g)
    assert res.mapping == {u: u for u in g.nodes}
    assert res.normalized == 1.0


def test_rigid_single_location():
    g = build_cfg(model_of("a = 1\n").functions["main"])
    h = build_cfg(model_of("b = 2\n").functions["main"])
    assert rigid_align(g, h).mapping == {1: 1, SINK: SINK}


def test_rigid_mismatch_on_extra_if_pair():
    _, _, gc, gi = extra_if_cfgs()
    assert isinstance(rigid_align(gc, gi), Mismatch)
    assert gate(rigid_align(gc, gi)) == REJECT


def test_flex_extra_if_pair_leaves_second_if_unmapped():
    _, _, gc, gi = extra_if_cfgs()
    res = flex_align(gc, gi, AlignConfig(), AlignerMode.FLEX_LABEL_EDGE)
    assert res.unmapped_incorrect(gi) == [8, 9, 10]
    assert res.mapping == {1: 1, 2: 2, 3: 3, 4: 4, 5: 5, 6: 6, 7: 7, SINK: SINK}
    assert 0.6 <= res.normalized < 0.95
    assert gate(res) == PROCEED
    sarf = flex_align(gc, gi, AlignConfig(), AlignerMode.SARFGEN)
    assert gate(sarf) == REJECT


def test_flex_identical_graphs():
    g = build_cfg(model_of(sample("sample.ml")).functions["main"])
    res = flex_align(g, g)
    assert res.normalized == 1.0
    assert res.mapping == {u: u for u in g.nodes}
    first = flex_align(g, g, AlignConfig(max_permutations=1))
    assert first.explored == 1 and first.normalized == 1.0


@pytest.mark.parametrize("score,mode,expected", [
    (1.0, AlignerMode.SARFGEN, PROCEED),
    (1.0, AlignerMode.FLEX_LABEL, PROCEED),
    (0.74, AlignerMode.SARFGEN, REJECT),
    (0.58, AlignerMode.FLEX_LABEL_EDGE, REJECT),
    (0.6, AlignerMode.FLEX_LABEL_EDGE, PROCEED),
])
def test_gate_examples(score, mode, expected):
    assert gate(AlignmentResult({SINK: SINK}, normalized=score, mode=mode)) == expected


def test_config_validation():
    with pytest.raises(ValueError):
        AlignConfig(proceed_threshold=1.5)
    with pytest.raises(ValueError):
        AlignConfig(max_permutations=0)


def test_recreate_identity():
    m = model_of(sample("extra_if_correct.ml"))
    g = build_cfg(m.functions["f"])
    fn, phi, warnings = recreate_function(g, g, rigid_align(g, g), m.functions["f"], m.functions["f"])
    assert fn == m.functions["f"] and not warnings


def test_recreate_extra_if_drops_extra_locations():
    mc, mi, gc, gi = extra_if_cfgs()
    res = flex_align(gc, gi)
    fn, phi, warnings = recreate_function(gc, gi, res, mc.functions["f"], mi.functions["f"])
    assert sorted(fn.locations) == [1, 2, 3, 4, 5, 6, 7]
    assert fn.locations[7].true_next == 2
    assert not warnings
    rebuilt = mi.with_function(fn)
    assert run(rebuilt, Case("t", ("3 4 5",))).stdout == ["12,101"]


def test_recreate_adds_empty_location():
    mc = model_of("x = int(input())\nif x > 0:\n    x = 1\nelse:\n    x = 2\nprint(x)\n")
    mi = model_of("x = int(input())\nif x > 0:\n    x = 1\nprint(x)\n")
    gc, gi = build_cfg(mc.functions["main"]), build_cfg(mi.functions["main"])
    res = flex_align(gc, gi)
    fn, phi, _ = recreate_function(gc, gi, res, mc.functions["main"], mi.functions["main"])
    new = [i for i in fn.locations if i not in mi.functions["main"].locations]
    assert len(new) == 1 and fn.locations[new[0]].bindings == ()
    assert len(fn.locations) == len(gc.inner)
    inv = {v: u for u, v in phi.items()}
    for v, loc in fn.locations.items():
        assert loc.true_next == (None if gc.true_succ[inv[v]] is None else phi[gc.true_succ[inv[v]]])


def test_recreate_warns_on_lost_definition():
    mc = model_of("x = int(input())\nprint(x)\n")
    mi = model_of("x = int(input())\nif x > 0:\n    y = 1\nprint(y)\n")
    gc, gi = build_cfg(mc.functions["main"]), build_cfg(mi.functions["main"])
    _, _, warnings = recreate_function(gc, gi, flex_align(gc, gi), mc.functions["main"],
                                       mi.functions["main"])
    assert any("'y'" in w for w in warnings)


def test_flex_matches_exhaustive_oracle():
    rng = random.Random(7)
    for _ in range(200):
        gc, gi = random_cfg(rng, rng.randint(1, 6)), random_cfg(rng, rng.randint(1, 6))
        edges = rng.random() < 0.7
        mode = AlignerMode.FLEX_LABEL_EDGE if edges else AlignerMode.FLEX_LABEL
        res = flex_align(gc, gi, UNBOUNDED, mode)
        assert res.raw_score == pytest.approx(exhaustive_best(gc, gi, edges), abs=1e-9)


_graphs = st.builds(lambda seed, n: random_cfg(random.Random(seed), n),
                    st.integers(0, 10**9), st.integers(1, 6))


@settings(max_examples=1000)
@given(_graphs, _graphs, st.sampled_from(list(AlignerMode)[1:]))
def test_alignment_invariants(gc, gi, mode):
    res = flex_align(gc, gi, AlignConfig(max_permutations=20), mode)
    vals = [v for u, v in res.mapping.items() if u is not SINK]
    assert len(vals) == len(set(vals))
    assert SINK not in vals and res.mapping[SINK] is SINK
    assert len(vals) == min(len(gc.inner), len(gi.inner))
    assert all(0.0 <= s <= 1.0 for s in res.pair_scores.values())
    assert 0.0 <= res.normalized <= 1.0


@settings(max_examples=1000)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_gate_is_monotone(score, t, t2):
    lo, hi = sorted((t, t2))
    res = AlignmentResult({SINK: SINK}, normalized=score, mode=AlignerMode.FLEX_LABEL)
    if gate(res, AlignConfig(proceed_threshold=lo)) == REJECT:
        assert gate(res, AlignConfig(proceed_threshold=hi)) == REJECT


@settings(max_examples=1000)
@given(st.integers(0, 10**9), st.integers(1, 5), st.integers(1, 5))
def test_label_only_score_ignores_edges(seed, n, m):
    rng = random.Random(seed)
    gc, gi = random_cfg(rng, n), random_cfg(rng, m)
    rewired = make_cfg({u: list(gi.nodes[u].labels.elements()) for u in gi.inner},
                       {u: rng.choice(gi.inner + [None]) for u in gi.inner}, {})
    a = flex_align(gc, gi, UNBOUNDED, AlignerMode.FLEX_LABEL)
    b = flex_align(gc, rewired, UNBOUNDED, AlignerMode.FLEX_LABEL)
    assert a.raw_score == pytest.approx(b.raw_score)


@settings(max_examples=1000)
@given(_graphs)
def test_self_alignment_is_perfect(g):
    res = flex_align(g, g, AlignConfig(max_permutations=1))
    assert res.normalized == pytest.approx(1.0)
    assert res.mapping == {u: u for u in g.nodes}
