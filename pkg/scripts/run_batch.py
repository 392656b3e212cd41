#!/usr/bin/env python3
"""Run every technique over the bundled corpus and print a comparison table.

    python3 scripts/run_batch.py [--corpus corpus] [--jobs 1] [--out results.jsonl]
"""
import argparse
import json
from pathlib import Path

from flexrepair.batch import Corpus, run_batch

TECHNIQUES = ["rigid", "sarfgen-sim", "flex-label", "flex-label-edge"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", default=str(Path(__file__).resolve().parent.parent / "corpus"))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", help="write one JSON line per pair")
    args = ap.parse_args()

    corpus = Corpus.load(args.corpus)
    report = run_batch(corpus, TECHNIQUES, jobs=args.jobs)
    print(f"{'technique':<17}{'repaired':>9}{'rate':>7}{'rejected':>10}{'edits':>7}{'change%':>9}{'unsound':>9}")
    for name, t in report.techniques.items():
        print(f"{name:<17}{t['fullyRepaired']:>5}/{t['totalIncorrect']:<3}{t['successRate']:>7.2f}"
              f"{t['rejectedCount']:>10}{t['meanNumRepairs']:>7.2f}{t['meanChangePercentage']:>9.1f}"
              f"{t['unsound']:>9}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for r in report.records:
                fh.write(json.dumps(r.to_json(), default=str) + "\n")


if __name__ == "__main__":
    main()
