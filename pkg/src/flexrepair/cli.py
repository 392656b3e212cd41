"""Command line interface: parse, model, align, repair, verify, batch."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import align as al
from .batch import Corpus, run_batch
from .cfg import build_cfg
from .frontend import MiniLangSyntaxError, SourceProgram, UnsupportedConstruct, dump, parse
from .interp import PASS, StepLimits, load_tests, run, verdict
from .model import LoweringError, ModelOptions, build_model, pretty_print
from .pdg import build_pdg, pdg_align
from .repair import FULLY, RepairConfig, repair_and_verify

ALIGNERS = [m.value for m in al.AlignerMode] + ["pdg"]
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path) -> SourceProgram:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    return SourceProgram(p.read_text(encoding="utf-8"), str(p))


def _names(text: str) -> frozenset:
    return frozenset(x.strip() for x in text.split(",") if x.strip())


def _options(args) -> ModelOptions:
    return ModelOptions(getattr(args, "ternary", False),
                        _names(args.side_effecting) | {"input"})


def _align_config(args) -> al.AlignConfig:
    try:
        return al.AlignConfig(max_permutations=args.max_perms,
                              per_align_timeout=args.align_timeout,
                              overall_timeout=args.overall_timeout,
                              proceed_threshold=args.proceed_threshold)
    except ValueError as ex:
        raise UsageError(str(ex)) from None


def _repair_config(args, mode=None) -> RepairConfig:
    return RepairConfig(al.AlignerMode(mode or args.aligner), _align_config(args),
                        _names(args.side_effecting) | {"input"},
                        StepLimits(args.max_steps))


def _emit(obj, args) -> None:
    text = json.dumps(obj, indent=None if getattr(args, "compact", False) else 2, default=str)
    print(text)
    out = getattr(args, "json", None)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")


def _tests(args, positional=None) -> list:
    d = positional or args.tests
    if not d:
        raise UsageError("a test directory is required (--tests DIR)")
    if not Path(d).is_dir():
        raise UsageError(f"no such test directory: {d}")
    tests = load_tests(d)
    if not tests:
        raise UsageError(f"no test cases in {d}")
    return tests


def cmd_parse(args) -> int:
    print(dump(parse(_read(args.file))), end="")
    return EXIT_OK


def cmd_model(args) -> int:
    print(pretty_print(build_model(parse(_read(args.file)), _options(args))), end="")
    return EXIT_OK


def _pdg_report(args, mc, mi) -> dict:
    res = pdg_align(build_pdg(mc), build_pdg(mi), alpha=args.alpha, k=args.k)
    return res.to_json()


def cmd_align(args) -> int:
    opts = ModelOptions(False, _names(args.side_effecting) | {"input"})
    mc = build_model(parse(_read(args.correct)), opts)
    mi = build_model(parse(_read(args.incorrect)), opts)
    if args.aligner == "pdg":
        _emit({"mode": "pdg", **_pdg_report(args, mc, mi)}, args)
        return EXIT_OK
    mode = al.AlignerMode(args.aligner)
    cfg = _align_config(args)
    report, ok, scores = {"mode": mode.value, "functions": {}}, True, []
    for name, fc in mc.functions.items():
        fi = mi.functions.get(name)
        if fi is None:
            report["functions"][name] = "missing"
            ok = False
            continue
        res = al.align(build_cfg(fc), build_cfg(fi), mode, cfg)
        if isinstance(res, al.Mismatch):
            report["functions"][name] = "Mismatch"
            ok = False
            continue
        scores.append(res.normalized)
        verdict_ = al.gate(res, cfg)
        ok = ok and verdict_ == al.PROCEED
        report["functions"][name] = {**res.to_json(), "gate": verdict_}
    extra = sorted(set(mi.functions) - set(mc.functions))
    if extra:
        report["unmatchedIncorrect"] = extra
        ok = False
    report["score"] = min(scores) if scores else None
    report["gate"] = al.PROCEED if ok else al.REJECT
    _emit(report, args)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_repair(args) -> int:
    tests = _tests(args, args.tests_dir)
    pc, pi = _read(args.correct), _read(args.incorrect)
    if args.aligner == "pdg":
        opts = ModelOptions(False, _names(args.side_effecting) | {"input"})
        rep = _pdg_report(args, build_model(parse(pc), opts), build_model(parse(pi), opts))
        _emit({"correct": args.correct, "incorrect": args.incorrect, "mode": "pdg", **rep}, args)
        return EXIT_OK
    out = repair_and_verify(pc, pi, tests, _repair_config(args))
    _emit({"correct": args.correct, "incorrect": args.incorrect, "mode": args.aligner,
           **out.to_json()}, args)
    return EXIT_OK if out.status == FULLY else EXIT_FAIL


def cmd_verify(args) -> int:
    tests = _tests(args, args.tests_dir)
    model = build_model(parse(_read(args.file)), _options(args))
    limits = StepLimits(args.max_steps)
    results = {}
    for t in tests:
        tr = run(model, t, limits, record=False)
        results[t.id] = {"verdict": verdict(tr, t), "status": tr.status, "message": tr.message}
    _emit({"file": args.file, "verdicts": results}, args)
    return EXIT_OK if all(r["verdict"] == PASS for r in results.values()) else EXIT_FAIL


def cmd_batch(args) -> int:
    modes = [m.strip() for m in args.techniques.split(",") if m.strip()]
    if not modes:
        raise UsageError("empty technique list")
    for m in modes:
        if m not in ALIGNERS or m == "pdg":
            raise UsageError(f"unknown technique '{m}'")
    if not Path(args.corpus).is_dir():
        raise UsageError(f"no such corpus directory: {args.corpus}")
    corpus = Corpus.load(args.corpus)
    report = run_batch(corpus, modes, _repair_config(args, modes[0]), jobs=args.jobs,
                       overall_timeout=args.batch_timeout)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            for r in report.records:
                fh.write(json.dumps(r.to_json(), default=str) + "\n")
    print(json.dumps(report.to_json(), indent=2))
    unsound = sum(t["unsound"] for t in report.techniques.values())
    return EXIT_FAIL if unsound or report.partial else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flexrepair",
                                description="Align and repair small programs against a reference.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, aligner=False):
        sp.add_argument("--side-effecting", default="", metavar="NAMES",
                        help="comma separated calls to hoist (input is always included)")
        sp.add_argument("--max-steps", type=int, default=100_000)
        sp.add_argument("--json", metavar="OUT", help="also write the report to OUT")
        if aligner:
            sp.add_argument("--aligner", choices=ALIGNERS, default="flex-label-edge")
            sp.add_argument("--max-perms", type=int, default=1000)
            sp.add_argument("--align-timeout", type=float, default=60.0)
            sp.add_argument("--overall-timeout", type=float, default=300.0)
            sp.add_argument("--proceed-threshold", type=float, default=0.6)
            sp.add_argument("--alpha", type=float, default=0.5)
            sp.add_argument("--k", type=float, default=1.5)

    sp = sub.add_parser("parse", help="print the syntax tree")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("model", help="print the program model")
    sp.add_argument("file")
    sp.add_argument("--ternary", action="store_true", help="fold loop-free ifs into ite")
    common(sp)
    sp.set_defaults(func=cmd_model)

    sp = sub.add_parser("align", help="align two programs")
    sp.add_argument("correct")
    sp.add_argument("incorrect")
    common(sp, aligner=True)
    sp.set_defaults(func=cmd_align)

    sp = sub.add_parser("repair", help="repair and verify an incorrect program")
    sp.add_argument("correct")
    sp.add_argument("incorrect")
    sp.add_argument("tests_dir", nargs="?")
    sp.add_argument("--tests", metavar="DIR")
    common(sp, aligner=True)
    sp.set_defaults(func=cmd_repair)

    sp = sub.add_parser("verify", help="run a program on test cases")
    sp.add_argument("file")
    sp.add_argument("tests_dir", nargs="?")
    sp.add_argument("--tests", metavar="DIR")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("batch", help="evaluate techniques over a corpus")
    sp.add_argument("corpus")
    sp.add_argument("--techniques", default="rigid,sarfgen-sim,flex-label,flex-label-edge")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--batch-timeout", type=float, default=float("inf"))
    common(sp, aligner=True)
    sp.set_defaults(func=cmd_batch)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return EXIT_USAGE if ex.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as ex:
        print(f"usage error: {ex}", file=sys.stderr)
        return EXIT_USAGE
    except (MiniLangSyntaxError, UnsupportedConstruct, LoweringError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as ex:
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
