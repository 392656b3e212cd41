"""Corpus loading and batch evaluation of aligners."""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .align import AlignerMode
from .interp import load_tests, run, verdict
from .repair import FULLY, REJECTED, TIMEOUT, RepairConfig, repair_and_verify


@dataclass
class Problem:
    id: str
    correct: dict           # name -> source text
    incorrect: dict
    tests: list


@dataclass
class Corpus:
    problems: dict

    @classmethod
    def load(cls, root) -> "Corpus":
        root = Path(root)
        base = root / "problems" if (root / "problems").is_dir() else root
        problems = {}
        for d in sorted(p for p in base.iterdir() if p.is_dir()):
            read = lambda sub: {f.stem: f.read_text(encoding="utf-8")
                                for f in sorted((d / sub).glob("*.ml"))} if (d / sub).is_dir() else {}
            prob = Problem(d.name, read("correct"), read("incorrect"),
                           load_tests(d / "tests") if (d / "tests").is_dir() else [])
            if not prob.correct or not prob.tests:
                raise ValueError(f"problem {d.name} needs a correct program and a test case")
            problems[d.name] = prob
        if not problems:
            raise ValueError(f"no problems under {base}")
        return cls(problems)

    def pairs(self) -> list:
        return [(p.id, c, i) for p in self.problems.values()
                for i in p.incorrect for c in p.correct]

    @property
    def num_incorrect(self) -> int:
        return sum(len(p.incorrect) for p in self.problems.values())


@dataclass
class PairRecord:
    problem: str
    correct: str
    incorrect: str
    mode: str
    score: object
    status: str
    num_repairs: int
    change_percentage: float
    sound: bool
    edits: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    structural: list = field(default_factory=list)
    message: str = ""
    elapsed: float = 0.0

    def to_json(self) -> dict:
        return {"problem": self.problem, "correct": self.correct, "incorrect": self.incorrect,
                "mode": self.mode, "score": self.score, "status": self.status,
                "numRepairs": self.num_repairs, "changePercentage": self.change_percentage,
                "sound": self.sound, "edits": self.edits, "warnings": self.warnings,
                "structuralChanges": self.structural,
                "message": self.message, "elapsed": round(self.elapsed, 3)}


def _run_pair(args) -> PairRecord:
    prob, cname, iname, config = args
    out = repair_and_verify(prob.correct[cname], prob.incorrect[iname], prob.tests, config)
    sound = True
    if out.status == FULLY:
        # independent re-check of the repaired model on every test
        sound = all(verdict(run(out.repaired, t, config.limits, record=False), t) == "Pass"
                    for t in prob.tests)
    return PairRecord(prob.id, cname, iname, config.mode.value, out.score, out.status,
                      out.num_repairs, out.change_percentage, sound,
                      [e.describe() for e in out.edits], out.warnings, out.structural, out.message,
                      out.elapsed)


@dataclass
class BatchReport:
    techniques: dict                 # mode -> aggregate dict
    records: list
    partial: bool = False

    def to_json(self) -> dict:
        return {"techniques": self.techniques, "partial": self.partial,
                "pairs": len(self.records)}


def summarize(records: list, total_incorrect: int) -> dict:
    best: dict = {}
    for r in records:
        if r.status == FULLY:
            key = (r.problem, r.incorrect)
            if key not in best or r.num_repairs < best[key].num_repairs:
                best[key] = r
    n = len(best)
    return {
        "successRate": n / total_incorrect if total_incorrect else 0.0,
        "fullyRepaired": n,
        "totalIncorrect": total_incorrect,
        "meanNumRepairs": sum(r.num_repairs for r in best.values()) / n if n else 0.0,
        "meanChangePercentage": sum(r.change_percentage for r in best.values()) / n if n else 0.0,
        "timeoutCount": sum(r.status == TIMEOUT for r in records),
        "rejectedCount": sum(r.status == REJECTED for r in records),
        "unsound": sum(not r.sound for r in records),
        "statuses": {s: sum(r.status == s for r in records)
                     for s in sorted({r.status for r in records})},
    }


def run_batch(corpus: Corpus, modes: list, config: RepairConfig = RepairConfig(),
              jobs: int = 1, overall_timeout: float = float("inf")) -> BatchReport:
    if not modes:
        raise ValueError("at least one technique is required")
    tasks = []
    for mode in modes:
        cfg = RepairConfig(AlignerMode(mode), config.align, config.side_effecting, config.limits)
        tasks += [(corpus.problems[p], c, i, cfg) for p, c, i in corpus.pairs()]
    start = time.monotonic()
    records, partial = [], False
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_pair, tasks))
    else:
        for t in tasks:
            if time.monotonic() - start > overall_timeout:
                partial = True
                break
            records.append(_run_pair(t))
    techniques = {}
    for mode in modes:
        mode = AlignerMode(mode).value
        techniques[mode] = summarize([r for r in records if r.mode == mode], corpus.num_incorrect)
    return BatchReport(techniques, records, partial)
