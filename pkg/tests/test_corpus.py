import pytest

from flexrepair.batch import Corpus, run_batch, summarize
from flexrepair.interp import PASS, run, verdict
from flexrepair.frontend import parse
from flexrepair.model import build_model

from conftest import CORPUS


@pytest.fixture(scope="module")
def corpus():
    return Corpus.load(CORPUS)


@pytest.fixture(scope="module")
def report(corpus):
    return run_batch(corpus, ["rigid", "flex-label-edge"])


def test_corpus_shape(corpus):
    assert len(corpus.problems) >= 4
    assert len(corpus.pairs()) == 20 and corpus.num_incorrect == 20


def test_references_pass_and_incorrect_fail(corpus):
    for p in corpus.problems.values():
        for src in p.correct.values():
            m = build_model(parse(src))
            assert all(verdict(run(m, t), t) == PASS for t in p.tests)
        for name, src in p.incorrect.items():
            m = build_model(parse(src))
            assert any(verdict(run(m, t), t) != PASS for t in p.tests), (p.id, name)


def test_soundness(report):
    assert all(r.sound for r in report.records)


def test_flexible_beats_rigid(report):
    t = report.techniques
    assert t["flex-label-edge"]["fullyRepaired"] > t["rigid"]["fullyRepaired"]
    assert 0.0 <= t["rigid"]["successRate"] <= 1.0


def test_record_count_and_determinism(corpus, report):
    assert len(report.records) == 2 * 20
    again = run_batch(corpus, ["rigid", "flex-label-edge"])
    key = lambda r: (r.problem, r.incorrect, r.mode, r.status, r.num_repairs, tuple(r.edits))
    assert [key(r) for r in again.records] == [key(r) for r in report.records]


def test_summarize_keeps_best_per_program(report):
    s = summarize(report.records, 20)
    assert s["fullyRepaired"] <= 20
    with pytest.raises(ValueError):
        run_batch(Corpus.load(CORPUS), [])
