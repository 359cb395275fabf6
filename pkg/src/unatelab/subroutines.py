"""The six sampling/query subroutines behind the unateness testers.

Each subroutine touches the function only through an ``OracleSession``.
Outcomes are ``Returned`` (possibly with a payload), ``Accepted``, or
``Rejected`` carrying a witness that re-verifies under direct
evaluation: either a coordinate with one strictly-0-monotone and one
strictly-1-monotone edge, or a pair of 1-points too far apart for the
claimed sparsity.

The hot loops run in chunks of numpy batches.  Whenever a chunk halts
early, the unused tail is handed back to the session (``retract``), so
query counters always equal what the sequential loop would have spent.
The chunked execution changes the order in which raw RNG draws are
consumed relative to a scalar loop, but every draw is i.i.d., so the
outcome distribution is unchanged and runs stay reproducible per seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .config import FULL, Constants
from .exactmath import as_fraction, ceil_frac, ceil_log2_frac, ceil_mul_log2
from .hypercube import (
    BitPoint,
    Edge,
    EdgeClass,
    PartialVector,
    bit_reverse,
    classify_edge,
    popcount_array,
    random_set_bit,
)
from .oracle import ADAPTIVE_TAG, OracleSession

# ---------------------------------------------------------------------------
# verdicts and witnesses


@dataclass(frozen=True)
class EdgeWitness:
    """A coordinate with edges of both strict orientations: not unate."""

    i: int
    edge0: Edge  # strictly 0-monotone in f
    edge1: Edge  # strictly 1-monotone in f

    def verify(self, f) -> bool:
        return (
            self.edge0.i == self.i == self.edge1.i
            and classify_edge(f, self.edge0) is EdgeClass.STRICTLY_0_MONOTONE
            and classify_edge(f, self.edge1) is EdgeClass.STRICTLY_1_MONOTONE
        )

    def to_json(self) -> dict:
        return {"type": "edge", "i": self.i,
                "edge0_lower": self.edge0.lower.to01(),
                "edge1_lower": self.edge1.lower.to01()}


@dataclass(frozen=True)
class FarPairWitness:
    """Two 1-points at distance > 2 log2(N): impossible for unate f with
    |f^{-1}(1)| = N."""

    x: BitPoint
    y: BitPoint
    claimed_ones: int

    def verify(self, f) -> bool:
        d = (self.x.bits ^ self.y.bits).bit_count()
        return (f.evaluate(self.x.bits) == 1 and f.evaluate(self.y.bits) == 1
                and (1 << d) > self.claimed_ones**2)

    def to_json(self) -> dict:
        return {"type": "far-pair", "x": self.x.to01(), "y": self.y.to01(),
                "claimed_ones": self.claimed_ones}


Witness = Union[EdgeWitness, FarPairWitness]


@dataclass(frozen=True)
class Returned:
    payload: object = None


@dataclass(frozen=True)
class Accepted:
    pass


@dataclass(frozen=True)
class Rejected:
    witness: Witness


SubVerdict = Union[Returned, Accepted, Rejected]


def edge_witness_from_samples(n: int, i: int, bits_a: int, bits_b: int) -> EdgeWitness:
    """Witness from two 1-points whose flips at i are both 0-valued.

    The two points must disagree at coordinate i; the one with bit 0
    yields the strictly-0-monotone edge, the other the strictly-1 one.
    """
    if ((bits_a ^ bits_b) >> i) & 1 == 0:
        raise ValueError("sample points must disagree at coordinate i")
    if (bits_a >> i) & 1:
        bits_a, bits_b = bits_b, bits_a
    edge0 = Edge(i, BitPoint(n, bits_a))
    edge1 = Edge(i, BitPoint(n, bits_b & ~(1 << i)))
    return EdgeWitness(i, edge0, edge1)


def outcome_to_json(outcome: SubVerdict) -> dict:
    if isinstance(outcome, Returned):
        payload = outcome.payload
        if isinstance(payload, PartialVector):
            payload = payload.to01star()
        return {"verdict": "returned", "payload": payload}
    if isinstance(outcome, Accepted):
        return {"verdict": "accepted"}
    return {"verdict": "rejected", "witness": outcome.witness.to_json()}


def run_traced(session: OracleSession, subroutine, *args, **kwargs):
    """Run a subroutine and also build its structured trace record.

    The record carries the verdict, the witness if any, and oracle
    counts; multi-phase subroutines (iterative_bias, preprocessing)
    additionally fill per-phase counts when given a ``meter`` dict, which
    this wrapper supplies.
    """
    import inspect

    start_mq, start_samp = session.mq_count, session.samp_count
    meter: dict = {}
    if "meter" in inspect.signature(subroutine).parameters:
        kwargs.setdefault("meter", meter)
    outcome = subroutine(session, *args, **kwargs)
    record = outcome_to_json(outcome)
    record["oracle"] = {"mq": session.mq_count - start_mq,
                        "samp": session.samp_count - start_samp}
    if meter:
        record["phases"] = meter
    return outcome, record


class _SubMeter:
    """Phase-count collector for multi-phase subroutines."""

    def __init__(self, session: OracleSession, sink):
        self.session = session
        self.sink = sink if sink is not None else {}
        self._last = (session.mq_count, session.samp_count)

    def mark(self, phase: str):
        mq, samp = self.session.mq_count, self.session.samp_count
        self.sink[phase] = {"mq": mq - self._last[0],
                            "samp": samp - self._last[1]}
        self._last = (mq, samp)


# ---------------------------------------------------------------------------
# small helpers


def _rand_set_bit(mask: int, rng: np.random.Generator) -> int:
    """Uniformly random index among the set bits of a nonzero mask."""
    k = int(rng.integers(mask.bit_count()))
    i = 0
    while True:
        if (mask >> i) & 1:
            if k == 0:
                return i
            k -= 1
        i += 1


def _lex_min(points: Sequence[int], n: int) -> int:
    return min(points, key=lambda p: bit_reverse(int(p), n))


def _chunk_rows(remaining: int, elems_per_round: int, size_hint: int,
                budget: int = 1 << 19) -> int:
    cap = max(1, budget // max(1, elems_per_round))
    return max(1, min(remaining, size_hint, cap))


# ---------------------------------------------------------------------------
# ConfirmDirection


def confirm_direction(session: OracleSession, i: int, b: int,
                      constants: Constants = FULL) -> Optional[Edge]:
    """Look for an edge of orientation b in direction i via sampling.

    Runs a fixed number of rounds, each drawing z ~ SAMP and querying the
    flip of z at i; answers Yes exactly when some drawn z has z_i = b and
    f(z^(i)) = 0, i.e. when a strictly b-monotone edge was actually found.
    Returns that edge, or None.
    """
    rounds = constants.confirm_direction_rounds
    zs = session.samp_batch(rounds)
    vals = session.mq_batch(zs ^ np.int64(1 << i), ADAPTIVE_TAG)
    hit = (((zs >> np.int64(i)) & 1) == b) & (vals == 0)
    idx = np.flatnonzero(hit)
    if len(idx) == 0:
        return None
    t = int(idx[0])
    session.retract(samp=rounds - 1 - t, mq=rounds - 1 - t)
    z = int(zs[t])
    return Edge(i, BitPoint(session.n, z & ~(1 << i)))


# ---------------------------------------------------------------------------
# CheckSamples


def check_samples(session: OracleSession, a_bits: int,
                  sample_bits: Sequence[int], delta_prime,
                  constants: Constants = FULL) -> SubVerdict:
    """Probe the farthest received sample for evidence of non-unateness.

    Picks z in the sample multiset maximizing the Hamming distance to a
    (ties broken toward the lexicographically smallest point), then for
    ceil(log2(1/delta')) rounds draws a coordinate i where a and z
    disagree and queries both flips; rejects on a double zero, which
    pins down edges of both orientations at i.  Never rejects a unate
    function.
    """
    if len(sample_bits) == 0:
        return Returned()
    delta_prime = as_fraction(delta_prime)
    n = session.n
    if n <= 63:
        arr = np.asarray(sample_bits, dtype=np.int64)
        dist = popcount_array(arr ^ np.int64(a_bits))
        best = int(dist.max())
        ties = arr[dist == best]
    else:
        dist = [(int(z) ^ a_bits).bit_count() for z in sample_bits]
        best = max(dist)
        ties = [int(z) for z, d in zip(sample_bits, dist) if d == best]
    z_bits = _lex_min([int(z) for z in ties], n)
    diff = a_bits ^ z_bits
    if diff == 0:
        return Returned()
    rounds = max(0, ceil_log2_frac(1 / delta_prime))
    for _ in range(rounds):
        i = _rand_set_bit(diff, session.rng)
        va = session.mq_bits(a_bits ^ (1 << i), ADAPTIVE_TAG)
        vz = session.mq_bits(z_bits ^ (1 << i), ADAPTIVE_TAG)
        if va == 0 and vz == 0:
            return Rejected(edge_witness_from_samples(n, i, a_bits, z_bits))
    return Returned()


# ---------------------------------------------------------------------------
# BiasedTest


def biased_test(session: OracleSession, M, eps_prime, dtilde: PartialVector,
                constants: Constants = FULL, mode: str = "adaptive") -> SubVerdict:
    """Edge tester along the fixed coordinates of dtilde.

    Each round samples z, picks a uniformly random fixed coordinate where
    z disagrees with dtilde, and probes the corresponding edge; a
    0-valued probe exposes an edge against the proposed orientation, and
    ConfirmDirection is then asked to exhibit an edge *with* the
    orientation.  Rejects only when both are in hand.

    Round budget: biased_round_factor * ceil(M / eps').  In
    ``nonadaptive`` mode ConfirmDirection runs for every probed round and
    all membership queries form a single parallel round.
    """
    if dtilde.fixed_mask == 0:
        return Returned()
    if mode == "nonadaptive":
        plan = biased_plan(session, M, eps_prime, dtilde, constants)
        vals = session.mq_batch(plan.mq_points, 1) if len(plan.mq_points) \
            else np.zeros(0, dtype=np.uint8)
        witness = biased_eval(plan, vals, dtilde, session.n)
        return Rejected(witness) if witness else Returned()

    eps_prime = as_fraction(eps_prime)
    total = constants.biased_round_factor * ceil_frac(as_fraction(M) / eps_prime)
    n = session.n
    dbits, dmask = np.int64(dtilde.bits), np.int64(dtilde.fixed_mask)
    done = 0
    size_hint = 16
    while done < total:
        rows = _chunk_rows(total - done, 2, size_hint)
        size_hint *= 8
        zs = session.samp_batch(rows)
        diff = (zs ^ dbits) & dmask
        cnt = popcount_array(diff).astype(np.int64)
        valid = cnt > 0
        ii = random_set_bit(diff, cnt, n, session.rng)
        vidx = np.flatnonzero(valid)
        if len(vidx):
            probes = zs[vidx] ^ (np.int64(1) << ii[vidx])
            vals = session.mq_batch(probes, ADAPTIVE_TAG)
            fires = vidx[vals == 0]
        else:
            fires = vidx
        if len(fires):
            t = int(fires[0])
            # hand back everything after round t before running the
            # confirmation, as the sequential loop would not have drawn it
            session.retract(samp=rows - 1 - t,
                            mq=int(np.count_nonzero(valid[t + 1:])))
            i = int(ii[t])
            cd_edge = confirm_direction(session, i, dtilde.value(i), constants)
            if cd_edge is not None:
                z = int(zs[t])
                return Rejected(
                    edge_witness_from_samples(n, i, z, int(cd_edge.lower.bits)
                                              if dtilde.value(i) == 0
                                              else int(cd_edge.upper.bits)))
            done += t + 1
            size_hint = 16
            continue
        done += rows
    return Returned()


@dataclass
class BiasedPlan:
    """Pre-drawn sampling material for the non-adaptive compilation."""

    rows: int
    zs: np.ndarray
    ii: np.ndarray
    valid_idx: np.ndarray
    cd_samples: np.ndarray   # shape (len(valid_idx), confirm_rounds)
    mq_points: np.ndarray    # probe points then flattened CD probe points


def biased_plan(session: OracleSession, M_budget, eps_prime,
                dtilde: PartialVector, constants: Constants = FULL) -> BiasedPlan:
    """Draw every sample the always-confirm variant will need.

    Consumes only the sampling oracle; the returned plan lists the
    membership-query points so the caller can issue them in one round.
    """
    eps_prime = as_fraction(eps_prime)
    total = constants.biased_round_factor * ceil_frac(as_fraction(M_budget) / eps_prime)
    n = session.n
    if dtilde.fixed_mask == 0 or total == 0:
        empty = np.zeros(0, dtype=np.int64)
        return BiasedPlan(0, empty, empty, empty,
                          empty.reshape(0, 0), empty)
    zs = session.samp_batch(total)
    diff = (zs ^ np.int64(dtilde.bits)) & np.int64(dtilde.fixed_mask)
    cnt = popcount_array(diff).astype(np.int64)
    ii = random_set_bit(diff, cnt, n, session.rng)
    valid_idx = np.flatnonzero(cnt > 0)
    nv = len(valid_idx)
    r = constants.confirm_direction_rounds
    cd = session.samp_batch(nv * r).reshape(nv, r) if nv else \
        np.zeros((0, r), dtype=np.int64)
    probes = zs[valid_idx] ^ (np.int64(1) << ii[valid_idx])
    cd_probes = cd ^ (np.int64(1) << ii[valid_idx])[:, None]
    mq_points = np.concatenate([probes, cd_probes.ravel()])
    return BiasedPlan(total, zs, ii, valid_idx, cd, mq_points)


def biased_eval(plan: BiasedPlan, vals: np.ndarray, dtilde: PartialVector,
                n: int) -> Optional[EdgeWitness]:
    """Apply the rejection rule to the answers of a biased plan."""
    nv = len(plan.valid_idx)
    if nv == 0:
        return None
    probe_vals = vals[:nv]
    cd_vals = vals[nv:].reshape(nv, -1)
    ii = plan.ii[plan.valid_idx]
    dvals = (np.int64(dtilde.bits) >> ii) & 1
    cd_bits = (plan.cd_samples >> ii[:, None]) & 1
    cd_hit = (cd_bits == dvals[:, None]) & (cd_vals == 0)
    reject = (probe_vals == 0) & cd_hit.any(axis=1)
    ts = np.flatnonzero(reject)
    if len(ts) == 0:
        return None
    t = int(ts[0])
    col = int(np.flatnonzero(cd_hit[t])[0])
    z = int(plan.zs[plan.valid_idx[t]])
    return edge_witness_from_samples(n, int(ii[t]), z,
                                     int(plan.cd_samples[t, col]))


# ---------------------------------------------------------------------------
# UnbiasedTest


def unbiased_test(session: OracleSession, eps_prime, dtilde: PartialVector,
                  constants: Constants = FULL, mode: str = "adaptive",
                  budget_unfixed=None) -> SubVerdict:
    """Edge tester along the unfixed coordinates of dtilde.

    Work-investment schedule: level r checks fewer coordinates but more
    edges per coordinate.  A level-r round samples one unfixed
    coordinate i and 3*2^r points, probes each flipped at i, and rejects
    as soon as some coordinate shows bichromatic edges of both
    orientations.

    ``budget_unfixed`` (used by the non-adaptive compilation) bounds the
    round counts in place of |Unfixed(dtilde)|; coordinates are always
    drawn from the real unfixed set.
    """
    if dtilde.num_unfixed() == 0:
        return Returned()
    if mode == "nonadaptive":
        plan = unbiased_plan(session, eps_prime, dtilde,
                             budget_unfixed, constants)
        vals = session.mq_batch(plan.mq_points, 1) if len(plan.mq_points) \
            else np.zeros(0, dtype=np.uint8)
        witness = unbiased_eval(plan, vals, session.n)
        return Rejected(witness) if witness else Returned()

    eps_prime = as_fraction(eps_prime)
    unfixed = np.array(dtilde.unfixed(), dtype=np.int64)
    budget = as_fraction(budget_unfixed) if budget_unfixed is not None \
        else Fraction(len(unfixed))
    levels = ceil_log2_frac(budget / eps_prime) + 2
    n = session.n
    for r in range(1, levels + 1):
        s_r = ceil_frac(constants.unbiased_round_factor * budget
                        / (eps_prime * (1 << r)))
        m = 3 * (1 << r)
        done = 0
        size_hint = 4
        while done < s_r:
            rows = _chunk_rows(s_r - done, 2 * m, size_hint)
            size_hint *= 8
            ii = unfixed[session.rng.integers(0, len(unfixed), size=rows)]
            pts = session.samp_batch(rows * m).reshape(rows, m)
            flips = pts ^ (np.int64(1) << ii)[:, None]
            vals = session.mq_batch(flips.ravel(), ADAPTIVE_TAG).reshape(rows, m)
            bits = (pts >> ii[:, None]) & 1
            lo = (vals == 0) & (bits == 0)
            hi = (vals == 0) & (bits == 1)
            reject = lo.any(axis=1) & hi.any(axis=1)
            ts = np.flatnonzero(reject)
            if len(ts):
                t = int(ts[0])
                tail = rows - 1 - t
                session.retract(samp=tail * m, mq=tail * m)
                x = int(pts[t, int(np.flatnonzero(lo[t])[0])])
                y = int(pts[t, int(np.flatnonzero(hi[t])[0])])
                return Rejected(edge_witness_from_samples(n, int(ii[t]), x, y))
            done += rows
    return Returned()


@dataclass
class UnbiasedPlan:
    levels: list  # (r, ii array, pts 2d array)
    mq_points: np.ndarray


def unbiased_plan(session: OracleSession, eps_prime, dtilde: PartialVector,
                  budget_unfixed=None, constants: Constants = FULL) -> UnbiasedPlan:
    """Pre-draw all level/round material for the non-adaptive compilation."""
    if dtilde.num_unfixed() == 0:
        return UnbiasedPlan([], np.zeros(0, dtype=np.int64))
    eps_prime = as_fraction(eps_prime)
    unfixed = np.array(dtilde.unfixed(), dtype=np.int64)
    budget = as_fraction(budget_unfixed) if budget_unfixed is not None \
        else Fraction(len(unfixed))
    levels = ceil_log2_frac(budget / eps_prime) + 2
    out = []
    chunks = []
    for r in range(1, levels + 1):
        s_r = ceil_frac(constants.unbiased_round_factor * budget
                        / (eps_prime * (1 << r)))
        m = 3 * (1 << r)
        ii = unfixed[session.rng.integers(0, len(unfixed), size=s_r)]
        pts = session.samp_batch(s_r * m).reshape(s_r, m)
        out.append((r, ii, pts))
        chunks.append((pts ^ (np.int64(1) << ii)[:, None]).ravel())
    return UnbiasedPlan(out, np.concatenate(chunks) if chunks
                        else np.zeros(0, dtype=np.int64))


def unbiased_eval(plan: UnbiasedPlan, vals: np.ndarray,
                  n: int) -> Optional[EdgeWitness]:
    off = 0
    for r, ii, pts in plan.levels:
        rows, m = pts.shape
        v = vals[off: off + rows * m].reshape(rows, m)
        off += rows * m
        bits = (pts >> ii[:, None]) & 1
        lo = (v == 0) & (bits == 0)
        hi = (v == 0) & (bits == 1)
        reject = lo.any(axis=1) & hi.any(axis=1)
        ts = np.flatnonzero(reject)
        if len(ts):
            t = int(ts[0])
            x = int(pts[t, int(np.flatnonzero(lo[t])[0])])
            y = int(pts[t, int(np.flatnonzero(hi[t])[0])])
            return edge_witness_from_samples(n, int(ii[t]), x, y)
    return None


# ---------------------------------------------------------------------------
# IterativeBias


def build_estimate_vector(counts: np.ndarray, k: int, n: int,
                          constants: Constants = FULL) -> PartialVector:
    """Bias vector from empirical counts: fixed outside (lo, hi), star inside."""
    lo, hi = constants.estimate_lo, constants.estimate_hi
    fixed = 0
    bits = 0
    for i in range(n):
        c = int(counts[i])
        if c * hi.denominator > hi.numerator * k:
            fixed |= 1 << i
            bits |= 1 << i
        elif c * lo.denominator < lo.numerator * k:
            fixed |= 1 << i
    return PartialVector(n, fixed, bits)


def _coordinate_counts(pts: np.ndarray, n: int) -> np.ndarray:
    counts = np.empty(n, dtype=np.int64)
    for i in range(n):
        counts[i] = int(((pts >> np.int64(i)) & 1).sum())
    return counts


def bidirectional_scan(session: OracleSession, dtilde: PartialVector, delta,
                       constants: Constants = FULL) -> SubVerdict:
    """Rejection scan over the unfixed coordinates (IterativeBias phase 2).

    Each round draws an unfixed coordinate i and two samples; if they
    disagree at i and both flips at i are 0-valued, edges of both
    orientations are in hand and the scan rejects.  An empty unfixed set
    skips the scan: there is no probability mass to sample.
    """
    unfixed = np.array(dtilde.unfixed(), dtype=np.int64)
    if len(unfixed) == 0:
        return Returned(dtilde)
    delta = as_fraction(delta)
    total = constants.ib_reject_round_factor * max(0, ceil_log2_frac(1 / delta))
    n = session.n
    done = 0
    size_hint = 64
    while done < total:
        rows = _chunk_rows(total - done, 4, size_hint)
        size_hint *= 8
        ii = unfixed[session.rng.integers(0, len(unfixed), size=rows)]
        xs = session.samp_batch(rows)
        ys = session.samp_batch(rows)
        differ = ((xs ^ ys) >> ii) & 1 == 1
        didx = np.flatnonzero(differ)
        if len(didx):
            probes = np.empty(2 * len(didx), dtype=np.int64)
            probes[0::2] = xs[didx] ^ (np.int64(1) << ii[didx])
            probes[1::2] = ys[didx] ^ (np.int64(1) << ii[didx])
            vals = session.mq_batch(probes, ADAPTIVE_TAG)
            both_zero = (vals[0::2] == 0) & (vals[1::2] == 0)
            hits = np.flatnonzero(both_zero)
        else:
            hits = didx
        if len(hits):
            h = int(hits[0])
            t = int(didx[h])
            session.retract(samp=2 * (rows - 1 - t),
                            mq=2 * int(np.count_nonzero(differ[t + 1:])))
            return Rejected(edge_witness_from_samples(
                n, int(ii[t]), int(xs[t]), int(ys[t])))
        done += rows
    return Returned(dtilde)


def iterative_bias(session: OracleSession, a_bits: int, delta,
                   constants: Constants = FULL, meter=None) -> SubVerdict:
    """Estimate coordinate biases with doubling sample sizes, then scan.

    Phase 1 draws two independent sample multisets per round and keeps
    doubling ell until the two empirical bias vectors agree to within
    the convergence gap on every coordinate; each round also re-checks
    the samples against the anchor a.  If the capped final round
    (ell = ceil(10 log2 n), run exactly) still fails the gap, the whole
    test accepts.  Phase 2 thresholds the estimates into a bias vector
    and hunts briefly for coordinates violating both orientations.
    """
    delta = as_fraction(delta)
    n = session.n
    sub_meter = _SubMeter(session, meter)
    cap = max(1, ceil_mul_log2(constants.ib_cap_log_factor, n))
    ells = []
    ell = 1
    while ell < cap:
        ells.append(ell)
        ell *= 2
    ells.append(cap)
    logd = max(0, ceil_log2_frac(1 / delta))
    gap = constants.convergence_gap

    counts = None
    k = 0
    converged = False
    for ell in ells:
        k = constants.ib_sample_factor * (2 * ell + logd)
        s_pts = session.samp_batch(k)
        t_pts = session.samp_batch(k)
        counts = _coordinate_counts(s_pts, n)
        counts_t = _coordinate_counts(t_pts, n)
        cs = check_samples(session, a_bits,
                           np.concatenate([s_pts, t_pts]),
                           delta / (48 * ell), constants)
        if isinstance(cs, Rejected):
            sub_meter.mark("estimate")
            return cs
        diff = np.abs(counts - counts_t)
        if int(diff.max()) * gap.denominator <= gap.numerator * k:
            converged = True
            break
        if ell == ells[-1]:
            sub_meter.mark("estimate")
            return Accepted()
    assert converged
    sub_meter.mark("estimate")
    dtilde = build_estimate_vector(counts, k, n, constants)
    out = bidirectional_scan(session, dtilde, delta, constants)
    sub_meter.mark("scan")
    return out


# ---------------------------------------------------------------------------
# Preprocessing


def binary_search_violation(session: OracleSession, u_bits: int, v_bits: int,
                            dtilde: PartialVector) -> tuple[int, int]:
    """Walk the path from a 1-point u to a 0-point v to a falling edge.

    u and v may differ only on fixed coordinates of dtilde where u
    disagrees with dtilde.  Returns (i, w) with w on the path,
    w_i != dtilde_i, f(w) = 1 and f(w^(i)) = 0, probing at most
    ceil(log2 |u delta v|) + 1 midpoints; f(u) and f(v) are trusted, not
    re-queried.
    """
    diff = u_bits ^ v_bits
    if diff == 0:
        raise ValueError("endpoints are equal")
    u_against = (u_bits ^ dtilde.bits) & dtilde.fixed_mask
    if diff & ~u_against:
        raise ValueError("endpoints differ outside the descent coordinates")
    order = [i for i in range(session.n) if (diff >> i) & 1]
    m = len(order)
    prefix = [0] * (m + 1)
    for t, i in enumerate(order):
        prefix[t + 1] = prefix[t] | (1 << i)
    lo, hi = 0, m
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if session.mq_bits(u_bits ^ prefix[mid], ADAPTIVE_TAG) == 1:
            lo = mid
        else:
            hi = mid
    return order[lo], u_bits ^ prefix[lo]


def preprocessing(session: OracleSession, dtilde: PartialVector, eps, delta,
                  constants: Constants = FULL, meter=None) -> SubVerdict:
    """Pick a truncation radius M and vet it against the bias vector.

    Phase 1 takes M as the largest sample-to-dtilde distance seen over
    30*ceil(1/eps) samples (argmax point z*, ties to the
    lexicographically smallest).  Phase 2 probes edges from z* against
    the fixed orientations; phase 3 draws points above z* in the
    dtilde-order and binary-searches any 0-valued one for a violating
    edge.  Rejections always carry confirmed two-sided edge witnesses,
    so unate functions are never rejected.
    """
    eps, delta = as_fraction(eps), as_fraction(delta)
    n = session.n
    sub_meter = _SubMeter(session, meter)
    k1 = constants.prep_sample_factor * ceil_frac(1 / eps)
    pts = session.samp_batch(k1)
    dist = popcount_array((pts ^ np.int64(dtilde.bits))
                          & np.int64(dtilde.fixed_mask)).astype(np.int64)
    m_val = int(dist.max())
    z_star = _lex_min([int(p) for p in pts[dist == m_val]], n)
    logd = max(0, ceil_log2_frac(1 / delta))
    sub_meter.mark("sample-radius")

    # Phase 2: edges from z* against the fixed orientations
    dz = (z_star ^ dtilde.bits) & dtilde.fixed_mask
    if dz:
        for _ in range(constants.prep_confirm_round_factor * logd):
            j = _rand_set_bit(dz, session.rng)
            if session.mq_bits(z_star ^ (1 << j), ADAPTIVE_TAG) == 0:
                cd_edge = confirm_direction(session, j, dtilde.value(j), constants)
                if cd_edge is not None:
                    other = cd_edge.lower.bits if dtilde.value(j) == 0 \
                        else cd_edge.upper.bits
                    sub_meter.mark("confirm-fixed")
                    return Rejected(edge_witness_from_samples(
                        n, j, z_star, int(other)))
    sub_meter.mark("confirm-fixed")

    # Phase 3: points above z* in the dtilde-order; all free coordinates
    # (exactly z* delta dtilde) are resampled uniformly
    draws = constants.prep_upward_round_factor * logd
    free = [i for i in range(n) if (dz >> i) & 1]
    ys = np.full(draws, z_star & ~dz, dtype=np.int64)
    if free and draws:
        rand_bits = session.rng.integers(0, 2, size=(draws, len(free)))
        for c, i in enumerate(free):
            ys |= rand_bits[:, c].astype(np.int64) << np.int64(i)
    if draws:
        yvals = session.mq_batch(ys, ADAPTIVE_TAG)
    else:
        yvals = np.zeros(0, dtype=np.uint8)
    zeros = np.flatnonzero(yvals == 0)
    if len(zeros) == 0:
        sub_meter.mark("upward-probe")
        return Returned(m_val)
    y_star = int(ys[int(zeros[0])])
    i, w = binary_search_violation(session, z_star, y_star, dtilde)
    out: SubVerdict = Returned(m_val)
    for _ in range(constants.prep_upward_round_factor * logd):
        cd_edge = confirm_direction(session, i, dtilde.value(i), constants)
        if cd_edge is not None:
            other = cd_edge.lower.bits if dtilde.value(i) == 0 \
                else cd_edge.upper.bits
            out = Rejected(edge_witness_from_samples(n, i, w, int(other)))
            break
    sub_meter.mark("upward-probe")
    return out
