"""Instrumented MQ/SAMP oracle sessions.

An ``OracleSession`` is the only path by which a testing algorithm may
touch the function under test.  It owns a seeded counter-based RNG
(numpy Philox, recorded as ``philox4x64`` in metadata), per-kind call
counters, and a query log kept as run-length encoded records
``(kind, round_tag, count)`` so that multi-million-query runs stay
cheap.  ``payloads=True`` additionally records each query point and
answer, which is what the JSONL export serializes.

Round tags are assigned by callers.  Non-adaptive algorithms tag every
membership query with round 1; adaptive ones use ``fresh_round()``
(recorded per batch).  The special tag ``ADAPTIVE_TAG`` marks batches
whose calls are each conceptually their own round.

Batched kernels evaluate a chunk of oracle calls at once and then, if
the sequential algorithm would have halted inside the chunk, give back
the unused tail with ``retract``; counters therefore always equal the
number of calls the sequential algorithm would have made.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .functions import BooleanFunction, EmptyFunctionError
from .hypercube import MAX_DENSE_N, BitPoint

RNG_ALGORITHM = "philox4x64"
ADAPTIVE_TAG = -1


@dataclass
class LogEntry:
    kind: str          # "mq" | "samp"
    round_tag: int
    count: int
    points: Optional[list] = None   # payload mode only
    answers: Optional[list] = None  # payload mode only (mq)


class OracleSession:
    """Single-owner instrumented session against one Boolean function."""

    def __init__(self, target: BooleanFunction, seed: int, payloads: bool = False):
        self.target = target
        self.seed = int(seed)
        self.rng = np.random.Generator(np.random.Philox(self.seed))
        self.mq_count = 0
        self.samp_count = 0
        self.payloads = payloads
        self.log: list[LogEntry] = []
        self._round = 0
        self.n = target.n
        self._ones: Optional[np.ndarray] = None
        self._n_ones: Optional[int] = None
        self._table: Optional[np.ndarray] = None

    # -- setup helpers -------------------------------------------------

    def _ensure_support(self):
        if self._ones is None:
            self._ones = self.target.ones_array()
            self._n_ones = len(self._ones)
        if self._n_ones == 0:
            raise EmptyFunctionError("SAMP oracle over the constant-0 function")

    def _eval(self, pts: np.ndarray) -> np.ndarray:
        if self._table is None and self.n <= MAX_DENSE_N \
                and self.target.is_enumerable:
            self._table = self.target.dense_table()
        if self._table is not None:
            return self._table[pts]
        return self.target.eval_batch(pts)

    def fresh_round(self) -> int:
        self._round += 1
        return self._round

    # -- logging -------------------------------------------------------

    def _append(self, kind: str, round_tag: int, count: int,
                points=None, answers=None):
        if count <= 0:
            return
        if self.payloads:
            self.log.append(LogEntry(kind, round_tag, count,
                                     list(points) if points is not None else None,
                                     list(answers) if answers is not None else None))
            return
        if self.log and self.log[-1].kind == kind \
                and self.log[-1].round_tag == round_tag:
            self.log[-1].count += count
        else:
            self.log.append(LogEntry(kind, round_tag, count))

    def retract(self, samp: int = 0, mq: int = 0):
        """Remove the most recent ``samp``/``mq`` calls from the accounting.

        Used by chunked executors after an early halt: the chunk was
        evaluated in one batch, but the sequential algorithm would have
        stopped mid-chunk, so the unused tail is handed back.
        """
        self.samp_count -= samp
        self.mq_count -= mq
        pending = {"samp": samp, "mq": mq}
        idx = len(self.log) - 1
        while idx >= 0 and (pending["samp"] > 0 or pending["mq"] > 0):
            entry = self.log[idx]
            take = min(entry.count, pending[entry.kind])
            if take:
                entry.count -= take
                pending[entry.kind] -= take
                if entry.points is not None:
                    del entry.points[len(entry.points) - take:]
                if entry.answers is not None:
                    del entry.answers[len(entry.answers) - take:]
                if entry.count == 0:
                    del self.log[idx]
            idx -= 1
        if pending["samp"] or pending["mq"]:
            raise ValueError("retract exceeded the logged history")

    # -- SAMP ----------------------------------------------------------

    def samp_batch(self, k: int) -> np.ndarray:
        """k i.i.d. uniform draws from f^{-1}(1), as an int64 array."""
        self._ensure_support()
        idx = self.rng.integers(0, self._n_ones, size=k)
        pts = self._ones[idx]
        self.samp_count += k
        self._append("samp", 0, k, points=pts if self.payloads else None)
        return pts

    def samp_bits(self) -> int:
        return int(self.samp_batch(1)[0])

    def samp(self) -> BitPoint:
        return BitPoint(self.n, self.samp_bits())

    # -- MQ ------------------------------------------------------------

    def mq_batch(self, pts: np.ndarray, round_tag: int) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.int64)
        vals = self._eval(pts)
        k = len(pts)
        self.mq_count += k
        self._append("mq", round_tag, k,
                     points=pts if self.payloads else None,
                     answers=vals if self.payloads else None)
        return vals

    def mq_bits(self, bits: int, round_tag: int) -> int:
        return int(self.mq_batch(np.array([bits], dtype=np.int64), round_tag)[0])

    def mq(self, x: Union[BitPoint, int], round_tag: Optional[int] = None) -> int:
        if round_tag is None:
            round_tag = self.fresh_round()
        if isinstance(x, BitPoint):
            if x.n != self.n:
                raise ValueError(f"point n={x.n} vs target n={self.n}")
            x = x.bits
        return self.mq_bits(int(x), round_tag)

    # -- introspection ---------------------------------------------------

    def counts(self) -> tuple[int, int]:
        return self.mq_count, self.samp_count

    def metadata(self) -> dict:
        return {"seed": self.seed, "rng": RNG_ALGORITHM,
                "mq": self.mq_count, "samp": self.samp_count}


@dataclass(frozen=True)
class AuditReport:
    passed: bool
    violation_index: Optional[int] = None  # 1-indexed over individual calls
    reason: str = ""


def adaptivity_audit(session_or_log) -> AuditReport:
    """Check that a trace is one block of samples then one MQ round.

    Passes iff the log is all SAMP entries followed by MQ entries that
    share a single round tag.  On failure reports the position (1-based,
    counting individual oracle calls) of the first offending call.
    """
    log = session_or_log.log if isinstance(session_or_log, OracleSession) \
        else session_or_log
    pos = 0
    seen_mq = False
    mq_round: Optional[int] = None
    for entry in log:
        if entry.kind == "samp":
            if seen_mq:
                return AuditReport(False, pos + 1, "sample after query round")
            pos += entry.count
            continue
        # mq entry
        if entry.round_tag == ADAPTIVE_TAG and entry.count > 1:
            # per-call fresh rounds: the second call already breaks the
            # single-round requirement
            first_bad = pos + 2 if not seen_mq else pos + 1
            return AuditReport(False, first_bad, "multiple query rounds")
        if not seen_mq:
            seen_mq = True
            mq_round = entry.round_tag
            pos += entry.count
            continue
        if entry.round_tag != mq_round or entry.round_tag == ADAPTIVE_TAG:
            return AuditReport(False, pos + 1, "multiple query rounds")
        pos += entry.count
    return AuditReport(True)


def export_query_log(session: OracleSession) -> list[dict]:
    """One record per oracle call: {"k", "r", "x"?, "y"?}."""
    records = []
    for entry in session.log:
        for j in range(entry.count):
            rec: dict = {"k": entry.kind, "r": entry.round_tag}
            if entry.points is not None:
                rec["x"] = BitPoint(session.n, int(entry.points[j])).to01()
            if entry.answers is not None:
                rec["y"] = int(entry.answers[j])
            records.append(rec)
    return records


def write_query_log_jsonl(session: OracleSession, path: str):
    with open(path, "w") as fp:
        for rec in export_query_log(session):
            fp.write(json.dumps(rec) + "\n")
