"""Command-line interface.

Subcommands:

* ``test-known-n`` / ``test-unknown-n``: run a tester on a function file.
* ``oracle <op>``: exact ground-truth computations (rationals print as p/q).
* ``gen <unate|far|yes|no>``: emit corpora as JSON lines.
* ``campaign <spec.json>``: run a trial campaign, write CSV + summary.
* ``audit <trace.jsonl>``: adaptivity audit of an exported query log.

Exit codes: 0 success / campaign gate passed, 1 gate violated,
2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import ground_truth as gt
from .corpus import generate_far_corpus, generate_unate_corpus
from .functions import function_from_json, function_to_json, rel_dist
from .harness import (
    PROFILES,
    load_campaign,
    run_campaign,
    summarize,
    write_csv,
)
from .hypercube import BitPoint
from .lowerbound import draw_no, draw_yes
from .oracle import LogEntry, adaptivity_audit
from .testers import run_tester


def _load_function(path: str):
    with open(path) as fp:
        return function_from_json(json.load(fp))


def _cmd_test(args, tester: str) -> int:
    f = _load_function(args.function)
    constants = PROFILES[args.profile]
    reports = []
    for t in range(args.trials):
        report = run_tester(f, args.seed + t, tester, args.epsilon,
                            delta=args.delta, N=args.n_ones, mode=args.mode,
                            constants=constants)
        reports.append(report.to_json())
    if args.format == "csv":
        lines = ["seed,verdict,mq,samp"] + [
            f"{r['seed']},{r['verdict']},{r['mq']},{r['samp']}"
            for r in reports]
        text = "\n".join(lines)
        if args.out:
            with open(args.out, "w") as fp:
                fp.write(text + "\n")
        else:
            print(text)
        return 0
    out = reports[0] if args.trials == 1 else {
        "trials": args.trials,
        "rejects": sum(1 for r in reports if r["verdict"] == "reject"),
        "reports": reports,
    }
    _emit(out, args.out)
    return 0


def _cmd_oracle(args) -> int:
    f = _load_function(args.function)
    op = args.op
    if op == "reldist":
        g = _load_function(args.function2)
        print(str(rel_dist(f, g)))
    elif op == "rel-dist-to-unate":
        print(str(gt.rel_dist_to_unate(f)))
    elif op == "dist-to-unate":
        print(gt.distance_to_unate(f))
    elif op == "oriented-distance":
        d = BitPoint.from01(args.orientation).bits
        print(gt.distance_to_oriented_monotone(f, d))
    elif op == "verify-unate":
        ok, witness = gt.verify_unate(f)
        _emit({"unate": ok,
               "witness": witness.to_json() if witness else None}, args.out)
    elif op == "census":
        census = gt.violation_census(f)
        _emit({"edge0": list(census.edge0), "edge1": list(census.edge1)},
              args.out)
    elif op == "diameter":
        ok, pair = gt.check_diameter(f)
        _emit({"pass": ok,
               "counterexample": [p.to01() for p in pair] if pair else None},
              args.out)
    elif op == "cs16":
        _emit({"pass": gt.check_cs16(f)}, args.out)
    else:
        raise SystemExit(2)
    return 0


def _cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    entries = []
    if args.what == "unate":
        for e in generate_unate_corpus(args.count, args.n, rng):
            entries.append({"id": e.id, "meta": e.meta,
                            "function": function_to_json(e.function)})
    elif args.what == "far":
        for e in generate_far_corpus(args.count, args.n, args.eps_min, rng):
            entries.append({"id": e.id, "meta": e.meta,
                            "function": function_to_json(e.function)})
    else:
        draw = draw_yes if args.what == "yes" else draw_no
        for idx in range(args.count):
            f = draw(args.n, rng)
            meta = f.metadata() | {"seed": args.seed, "kind": args.what}
            entries.append({"id": f"{args.what}-n{args.n}-{idx:03d}",
                            "meta": meta,
                            "function": function_to_json(f)})
    lines = "\n".join(json.dumps(e) for e in entries)
    if args.out:
        with open(args.out, "w") as fp:
            fp.write(lines + "\n")
    else:
        print(lines)
    return 0


def _cmd_campaign(args) -> int:
    campaign = load_campaign(args.spec)
    records = run_campaign(campaign, workers=args.workers)
    summary = summarize(records)
    out = args.out or "campaign"
    write_csv(records, out + ".csv")
    with open(out + ".summary.json", "w") as fp:
        json.dump(summary, fp, indent=2, sort_keys=True)
    print(json.dumps(summary["total"]))
    with open(args.spec) as fp:
        spec = json.load(fp)
    gate = spec.get("gate", {})
    ok = True
    if gate.get("zero_rejections"):
        ok &= summary["total"]["rejects"] == 0
    if "min_reject_wilson_lb" in gate:
        bound = float(gate["min_reject_wilson_lb"])
        ok &= all(v["reject_wilson_lb"] >= bound
                  for v in summary["per_function"].values())
    return 0 if ok else 1


def _cmd_audit(args) -> int:
    log = []
    with open(args.trace) as fp:
        for line in fp:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            log.append(LogEntry(rec["k"], rec["r"], rec.get("count", 1)))
    report = adaptivity_audit(log)
    _emit({"pass": report.passed,
           "violation_index": report.violation_index,
           "reason": report.reason}, args.out)
    return 0 if report.passed else 1


def _emit(obj, out_path):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w") as fp:
            fp.write(text + "\n")
    else:
        print(text)


def _add_common(p, *, epsilon=False, delta=False):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "json"], default="json")
    if epsilon:
        p.add_argument("--epsilon", default="0.1")
    if delta:
        p.add_argument("--delta", default="0.1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unatelab")
    sub = parser.add_subparsers(dest="cmd", required=True)

    for name in ("test-known-n", "test-unknown-n"):
        p = sub.add_parser(name)
        p.add_argument("--function", required=True)
        p.add_argument("--trials", type=int, default=1)
        p.add_argument("--mode", choices=["adaptive", "nonadaptive"],
                       default="adaptive")
        p.add_argument("--profile", choices=list(PROFILES), default="full")
        p.add_argument("--n-ones", type=int, default=None,
                       help="N for the known-N tester (defaults to the truth)")
        _add_common(p, epsilon=True, delta=True)

    p = sub.add_parser("oracle")
    p.add_argument("op", choices=["reldist", "rel-dist-to-unate",
                                  "dist-to-unate", "oriented-distance",
                                  "verify-unate", "census", "diameter",
                                  "cs16"])
    p.add_argument("--function", required=True)
    p.add_argument("--function2")
    p.add_argument("--orientation")
    _add_common(p)

    p = sub.add_parser("gen")
    p.add_argument("what", choices=["unate", "far", "yes", "no"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--eps-min", default="0.2")
    _add_common(p)

    p = sub.add_parser("campaign")
    p.add_argument("spec")
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("audit")
    p.add_argument("trace")
    _add_common(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "test-known-n":
            return _cmd_test(args, "known")
        if args.cmd == "test-unknown-n":
            return _cmd_test(args, "unknown")
        if args.cmd == "oracle":
            return _cmd_oracle(args)
        if args.cmd == "gen":
            return _cmd_gen(args)
        if args.cmd == "campaign":
            return _cmd_campaign(args)
        if args.cmd == "audit":
            return _cmd_audit(args)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
