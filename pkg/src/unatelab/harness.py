"""Campaign runner: many seeded trials over a corpus, CSV + JSON out.

Trial seeds derive deterministically from (base seed, function id,
trial index) through SHA-256, so any subset of a campaign can be
reproduced in isolation and two runs of the same spec are byte-identical
(wall-clock times are recorded as 0 unless explicitly enabled, keeping
the determinism contract).

Workers own their sessions; records are collected order-stably (sorted
by function id and trial index) regardless of completion order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .config import FAST, FULL, Constants
from .corpus import CorpusEntry
from .exactmath import wilson_lower_bound
from .functions import function_from_json, function_to_json
from .testers import run_tester

CSV_HEADER = ("function_id,seed,verdict,mq,samp,wall_us,"
              "phase0_mq,phase0_samp,phase1_mq,phase1_samp,"
              "phase2_mq,phase2_samp,phase3_mq,phase3_samp")

PROFILES = {"full": FULL, "fast": FAST}


@dataclass
class Campaign:
    functions: list[CorpusEntry]
    tester: str               # "known" | "unknown"
    epsilon: str
    delta: Optional[str] = None
    mode: str = "adaptive"
    trials: int = 100
    base_seed: int = 0
    profile: str = "full"
    record_wall_time: bool = False

    def constants(self) -> Constants:
        return PROFILES[self.profile]


@dataclass
class TrialRecord:
    function_id: str
    trial_index: int
    seed: int
    verdict: str
    mq: int
    samp: int
    wall_us: int
    phase_mq: tuple[int, int, int, int]
    phase_samp: tuple[int, int, int, int]
    witness_verified: Optional[bool] = None

    def csv_row(self) -> list:
        row = [self.function_id, self.seed, self.verdict, self.mq, self.samp,
               self.wall_us]
        for i in range(4):
            row += [self.phase_mq[i], self.phase_samp[i]]
        return row


def trial_seed(base_seed: int, function_id: str, trial_index: int) -> int:
    digest = hashlib.sha256(
        f"{base_seed}|{function_id}|{trial_index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _run_one(entry: CorpusEntry, trial_index: int,
             campaign: Campaign) -> TrialRecord:
    seed = trial_seed(campaign.base_seed, entry.id, trial_index)
    t0 = time.perf_counter_ns()
    report = run_tester(
        entry.function, seed, campaign.tester, campaign.epsilon,
        delta=campaign.delta, mode=campaign.mode,
        constants=campaign.constants())
    wall_us = (time.perf_counter_ns() - t0) // 1000 \
        if campaign.record_wall_time else 0
    verified = None
    if report.witness is not None:
        verified = report.witness.verify(entry.function)
        if not verified:
            raise RuntimeError(
                f"unsound rejection witness for {entry.id} seed {seed}")
    phases = ["phase0", "phase1", "phase2", "phase3"]
    pm = tuple(report.phase_counts.get(p, {}).get("mq", 0) for p in phases)
    ps = tuple(report.phase_counts.get(p, {}).get("samp", 0) for p in phases)
    return TrialRecord(entry.id, trial_index, seed, report.verdict,
                       report.mq, report.samp, wall_us, pm, ps, verified)


def _run_block(args) -> list[TrialRecord]:
    entry_json, meta_id, lo, hi, campaign_fields = args
    campaign = Campaign(functions=[], **campaign_fields)
    entry = CorpusEntry(meta_id, function_from_json(entry_json))
    return [_run_one(entry, t, campaign) for t in range(lo, hi)]


def run_campaign(campaign: Campaign, workers: int = 1) -> list[TrialRecord]:
    if workers <= 1:
        records = []
        for entry in campaign.functions:
            for t in range(campaign.trials):
                records.append(_run_one(entry, t, campaign))
        return records

    fields = {k: getattr(campaign, k) for k in
              ("tester", "epsilon", "delta", "mode", "trials", "base_seed",
               "profile", "record_wall_time")}
    # keep tasks coarse: per-task pickling/JSON overhead dominates tiny blocks
    block = max(1, -(-campaign.trials // (2 * workers)))
    tasks = []
    for entry in campaign.functions:
        fjson = function_to_json(entry.function)
        for lo in range(0, campaign.trials, block):
            tasks.append((fjson, entry.id, lo,
                          min(campaign.trials, lo + block), fields))
    records: list[TrialRecord] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for chunk in pool.map(_run_block, tasks):
            records.extend(chunk)
    records.sort(key=lambda r: (r.function_id, r.trial_index))
    return records


def write_csv(records: list[TrialRecord], path: str):
    with open(path, "w", newline="") as fp:
        fp.write(CSV_HEADER + "\n")
        writer = csv.writer(fp)
        for rec in records:
            writer.writerow(rec.csv_row())


def _quartiles(values: list[int]) -> list[float]:
    if not values:
        return [0.0, 0.0, 0.0]
    vs = sorted(values)
    def q(p):
        idx = p * (len(vs) - 1)
        lo = int(idx)
        hi = min(lo + 1, len(vs) - 1)
        return vs[lo] + (vs[hi] - vs[lo]) * (idx - lo)
    return [q(0.25), q(0.5), q(0.75)]


def summarize(records: list[TrialRecord]) -> dict:
    per: dict[str, dict] = {}
    for rec in records:
        agg = per.setdefault(rec.function_id, {
            "trials": 0, "rejects": 0, "mq": [], "samp": []})
        agg["trials"] += 1
        agg["rejects"] += 1 if rec.verdict == "reject" else 0
        agg["mq"].append(rec.mq)
        agg["samp"].append(rec.samp)
    out = {"per_function": {}, "total": {"trials": 0, "rejects": 0}}
    for fid, agg in sorted(per.items()):
        t, r = agg["trials"], agg["rejects"]
        out["per_function"][fid] = {
            "trials": t,
            "rejects": r,
            "reject_rate": r / t if t else 0.0,
            "reject_wilson_lb": wilson_lower_bound(r, t),
            "accept_wilson_lb": wilson_lower_bound(t - r, t),
            "mq_quartiles": _quartiles(agg["mq"]),
            "samp_quartiles": _quartiles(agg["samp"]),
        }
        out["total"]["trials"] += t
        out["total"]["rejects"] += r
    return out


def summary_from_csv(path: str) -> dict:
    """Recompute the summary rates from a written CSV (cross-check path)."""
    records = []
    with open(path) as fp:
        header = fp.readline().strip()
        if header != CSV_HEADER:
            raise ValueError("unexpected CSV header")
        for row in csv.reader(fp):
            records.append(TrialRecord(
                row[0], -1, int(row[1]), row[2], int(row[3]), int(row[4]),
                int(row[5]),
                (int(row[6]), int(row[8]), int(row[10]), int(row[12])),
                (int(row[7]), int(row[9]), int(row[11]), int(row[13]))))
    return summarize(records)


# ---- campaign spec files ---------------------------------------------------


def campaign_to_spec(campaign: Campaign) -> dict:
    return {
        "tester": campaign.tester,
        "epsilon": str(campaign.epsilon),
        "delta": None if campaign.delta is None else str(campaign.delta),
        "mode": campaign.mode,
        "trials": campaign.trials,
        "base_seed": campaign.base_seed,
        "profile": campaign.profile,
        "record_wall_time": campaign.record_wall_time,
        "functions": [
            {"id": e.id, "meta": e.meta,
             "function": function_to_json(e.function)}
            for e in campaign.functions],
    }


def campaign_from_spec(spec: dict) -> Campaign:
    functions = [CorpusEntry(item["id"],
                             function_from_json(item["function"]),
                             item.get("meta", {}))
                 for item in spec["functions"]]
    return Campaign(
        functions=functions,
        tester=spec["tester"],
        epsilon=spec["epsilon"],
        delta=spec.get("delta"),
        mode=spec.get("mode", "adaptive"),
        trials=int(spec.get("trials", 100)),
        base_seed=int(spec.get("base_seed", 0)),
        profile=spec.get("profile", "full"),
        record_wall_time=bool(spec.get("record_wall_time", False)),
    )


def load_campaign(path: str) -> Campaign:
    with open(path) as fp:
        return campaign_from_spec(json.load(fp))
