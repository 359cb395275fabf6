"""Repetition constants and thresholds used by the subroutines and testers.

``FULL`` is the default profile; every probabilistic guarantee is
stated for these values.  ``FAST`` shrinks only outer repetition
counts; it exists for bulk structural sweeps (one-sidedness,
trace-shape audits) whose checked property does not depend on
repetition counts, and for quick CLI experiments.  Formulas, ceilings,
and thresholds are identical in both.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class Constants:
    # ConfirmDirection: number of sample/probe rounds
    confirm_direction_rounds: int = 25
    # BiasedTest: rounds = biased_round_factor * ceil(M / eps')
    biased_round_factor: int = 10
    # UnbiasedTest: s_r = ceil(unbiased_round_factor * u / (eps' * 2^r))
    unbiased_round_factor: int = 50
    # IterativeBias phase 1: k = ib_sample_factor * (2*ell + ceil(log2(1/delta)))
    ib_sample_factor: int = 4000
    # IterativeBias phase 2: rounds = ib_reject_round_factor * ceil(log2(1/delta))
    ib_reject_round_factor: int = 4000
    # IterativeBias: ell caps at ceil(ib_cap_log_factor * log2 n)
    ib_cap_log_factor: int = 10
    # Preprocessing phase 1: samples = prep_sample_factor * ceil(1/eps)
    prep_sample_factor: int = 30
    # Preprocessing phase 2: rounds = prep_confirm_round_factor * ceil(log2(1/delta))
    prep_confirm_round_factor: int = 10
    # Preprocessing phase 3: draws = prep_upward_round_factor * ceil(log2(1/delta))
    prep_upward_round_factor: int = 5
    # Known-N tester: |S| = ceil(known_phase1_factor * log2 N)
    known_phase1_factor: int = 400
    # Known-N tester: |T| = ceil(known_phase2_factor / eps)
    known_phase2_factor: int = 30
    # Unknown-N tester phase 0: |S| = unknown_phase0_factor * ceil(log2(1/delta))
    unknown_phase0_factor: int = 100
    # IterativeBias convergence: max_i |p_i - p'_i| <= convergence_gap
    convergence_gap: Fraction = Fraction(1, 20)
    # Empirical bias vector thresholds (strict inequalities)
    estimate_lo: Fraction = Fraction(1, 4)
    estimate_hi: Fraction = Fraction(3, 4)
    # Phase 3 of both testers runs the edge testers at eps' = eps / 64
    phase3_eps_divisor: int = 64


FULL = Constants()

# Frozen budget constant for the unknown-N tester's probabilistic query
# bound  B(N, eps, delta) = c * log2(N) * (log2(log2 N) + log2(1/eps)) / eps
#                           + c * log2(1/delta).
# Calibrated once on a 60-run pilot per N in {2^4, 2^6, 2^8} at n = 16,
# eps = 0.5, delta = 0.1 (p90/F came to 65.6k / 62.2k / 56.4k); frozen
# with ~20% headroom.
UNKNOWN_N_BUDGET_C = 80_000


def unknown_n_query_budget(n_ones: int, eps: float, delta: float,
                           c: int = UNKNOWN_N_BUDGET_C) -> float:
    """The frozen high-probability query budget for the unknown-N tester."""
    import math
    log_n = math.log2(max(2, n_ones))
    return c * log_n * (math.log2(max(2.0, log_n)) + math.log2(1 / eps)) / eps \
        + c * math.log2(1 / delta)

FAST = Constants(
    confirm_direction_rounds=6,
    biased_round_factor=1,
    unbiased_round_factor=1,
    ib_sample_factor=40,
    ib_reject_round_factor=100,
    prep_sample_factor=10,
    prep_confirm_round_factor=3,
    prep_upward_round_factor=3,
    known_phase1_factor=50,
    known_phase2_factor=15,
    unknown_phase0_factor=15,
)
