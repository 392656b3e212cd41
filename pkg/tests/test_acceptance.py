"""One test per acceptance criterion; each prints a PASS/FAIL line."""
import random
import time
from collections import Counter

import pytest

from flexrepair.align import AlignConfig, AlignerMode, Mismatch, flex_align, gate, jaccard, rigid_align
from flexrepair.batch import Corpus, run_batch
from flexrepair.cfg import build_cfg
from flexrepair.model import pretty_print
from flexrepair.pdg import Pdg, orbit_signatures, pdg_align
from flexrepair.repair import CHANGE, generate_repairs, solve_matching

import test_align
import test_cfg
import test_interp
import test_model
import test_pdg
import test_repair
from conftest import CORPUS, GOLDEN, model_of, sample
from oracles import exhaustive_best, random_cfg


@pytest.fixture
def verdict_line(capsys):
    def check(number, title, fn):
        start = time.monotonic()
        try:
            fn()
        except BaseException:
            with capsys.disabled():
                print(f"\nFAIL criterion {number}: {title} ({time.monotonic() - start:.2f}s)")
            raise
        with capsys.disabled():
            print(f"\nPASS criterion {number}: {title} ({time.monotonic() - start:.2f}s)")
    return check


def test_criterion_1_jaccard_table(verdict_line):
    def body():
        got = [jaccard(Counter(u), Counter(v)) for u, v, _ in test_cfg.JACCARD_ROWS]
        assert got == pytest.approx([0.667, 1, 0.25, 0.2], abs=1e-3)
    verdict_line(1, "label Jaccard table", body)


def test_criterion_2_worked_repair(verdict_line):
    def body():
        _, _, fc, fi, table = test_repair.worked_table()
        m = solve_matching(table)
        assert m.mapping == {"a": "x", "b": "y", "c": "z"} and m.cost == 1
        plan = generate_repairs(m, table, fc, fi)
        assert len(plan.edits) == 1 and plan.edits[0].kind == CHANGE
        e = plan.edits[0]
        assert (e.variable, str(e.old_expr), str(e.new_expr), e.cost) == \
            ("z", "Add(y', 1)", "Add(x', 1)", 1.0)
    verdict_line(2, "worked variable matching and repair", body)


def test_criterion_3_golden_model(verdict_line):
    def body():
        m = model_of(sample("sample.ml"))
        assert pretty_print(m) == (GOLDEN / "sample_model.txt").read_bytes().decode()
        assert len(m.functions["main"].locations) == 4
    verdict_line(3, "golden model", body)


def test_criterion_4_extra_if_alignment(verdict_line):
    def body():
        start = time.monotonic()
        _, _, gc, gi = test_align.extra_if_cfgs()
        res = flex_align(gc, gi, AlignConfig(), AlignerMode.FLEX_LABEL_EDGE)
        assert res.unmapped_incorrect(gi) == [8, 9, 10]
        assert isinstance(rigid_align(gc, gi), Mismatch)
        assert gate(flex_align(gc, gi, AlignConfig(), AlignerMode.SARFGEN)) == "Reject"
        assert time.monotonic() - start < 5
    verdict_line(4, "extra-if alignment", body)


def test_criterion_5_oracle_equivalence(verdict_line):
    def body():
        start = time.monotonic()
        rng = random.Random(2024)
        for _ in range(200):
            gc, gi = random_cfg(rng, rng.randint(1, 6)), random_cfg(rng, rng.randint(1, 6))
            res = flex_align(gc, gi, AlignConfig(max_permutations=None))
            assert res.raw_score == pytest.approx(exhaustive_best(gc, gi), abs=1e-9)
        for _ in range(200):
            table = test_repair.random_table(rng)
            assert solve_matching(table).cost == pytest.approx(test_repair.brute_force(table))
        for _ in range(100):
            nodes, edges = test_pdg.random_digraph(rng, rng.randint(1, 6))
            g = Pdg.from_spec({v: [] for v in nodes}, [(a, b, "Data") for a, b in edges])
            assert orbit_signatures(g) == test_pdg.brute_orbits(nodes, edges)
        assert time.monotonic() - start < 60
    verdict_line(5, "oracle equivalence (align, matching, orbits)", body)


def test_criterion_6_pdg_suggestions(verdict_line, extra_if_pdg):
    def body():
        gc, gi = test_pdg.fixture_graphs(extra_if_pdg)
        sim = {(u, v): s for u, v, s in extra_if_pdg["similarity"]}
        res = pdg_align(gc, gi, k=1.5, similarity=sim)
        assert res.mean == pytest.approx(0.89, abs=0.005) and res.std == pytest.approx(0.04, abs=0.005)
        assert res.replacements == [("u5", "v4")]
        assert set(res.removals) == {"v8", "v9"}
    verdict_line(6, "PDG replacement and removal suggestions", body)


def test_criterion_7_corpus(verdict_line):
    def body():
        start = time.monotonic()
        report = run_batch(Corpus.load(CORPUS), ["rigid", "flex-label-edge"])
        assert all(r.sound for r in report.records)
        t = report.techniques
        assert t["flex-label-edge"]["fullyRepaired"] > t["rigid"]["fullyRepaired"]
        assert time.monotonic() - start < 300
    verdict_line(7, "corpus soundness and flexible > rigid", body)


PROPERTY_SUITES = [
    ("injectivity and score bounds", test_align.test_alignment_invariants),
    ("gate monotonicity", test_align.test_gate_is_monotone),
    ("label-only score ignores edges", test_align.test_label_only_score_ignores_edges),
    ("per-location single assignment and nesting", test_model.test_nesting_matches_sequential_execution),
    ("trace/transition consistency", test_interp.test_trace_transition_consistency_and_determinism),
    ("label soundness under renaming", test_cfg.test_label_soundness_under_renaming),
    ("repair invariants", test_repair.test_repair_invariants),
]


def test_criterion_8_property_suites(verdict_line):
    def body():
        for _, suite in PROPERTY_SUITES:
            assert suite._hypothesis_internal_use_settings.max_examples >= 1000
            suite()
    verdict_line(8, "property suites (" + ", ".join(n for n, _ in PROPERTY_SUITES) + ")", body)
