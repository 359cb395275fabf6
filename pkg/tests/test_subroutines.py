from fractions import Fraction

import numpy as np
import pytest

from unatelab.config import FULL, Constants
from unatelab.exactmath import ceil_frac
from unatelab.functions import (
    CallableFunction,
    SparseFunction,
    conjunction,
    dictator,
    indicator,
    xor_function,
)
from unatelab.ground_truth import verify_unate
from unatelab.hypercube import BitPoint, EdgeClass, PartialVector, classify_edge
from unatelab.oracle import OracleSession, adaptivity_audit
from unatelab.subroutines import (
    Accepted,
    Rejected,
    Returned,
    bidirectional_scan,
    biased_test,
    binary_search_violation,
    check_samples,
    confirm_direction,
    iterative_bias,
    preprocessing,
    unbiased_test,
)
from unatelab.corpus import generate_unate_corpus


class TestConfirmDirection:
    def test_dictator_right_direction_always_yes(self):
        f = dictator(3, 0)
        for seed in range(50):
            edge = confirm_direction(OracleSession(f, seed), 0, 1)
            assert edge is not None
            assert classify_edge(f, edge) is EdgeClass.STRICTLY_1_MONOTONE

    def test_dictator_wrong_orientation_always_no(self):
        f = dictator(3, 0)
        for seed in range(50):
            assert confirm_direction(OracleSession(f, seed), 0, 0) is None

    def test_irrelevant_coordinate_always_no(self):
        f = dictator(3, 0)
        for seed in range(50):
            assert confirm_direction(OracleSession(f, seed), 1, 1) is None

    def test_query_accounting(self):
        f = dictator(3, 0)
        s = OracleSession(f, 1)
        confirm_direction(s, 1, 1)  # No: full budget spent
        assert (s.mq_count, s.samp_count) == (25, 25)
        s2 = OracleSession(f, 1)
        confirm_direction(s2, 0, 1)  # Yes on the first round
        assert (s2.mq_count, s2.samp_count) == (1, 1)

    def test_never_yes_without_edge(self):
        # mixed function: yes answers must carry a genuine edge
        rng = np.random.default_rng(0)
        for seed in range(40):
            n = 5
            pts = rng.choice(1 << n, size=10, replace=False)
            f = SparseFunction(n, pts.tolist())
            i = int(rng.integers(0, n))
            b = int(rng.integers(0, 2))
            edge = confirm_direction(OracleSession(f, seed), i, b)
            if edge is not None:
                want = EdgeClass.STRICTLY_1_MONOTONE if b else \
                    EdgeClass.STRICTLY_0_MONOTONE
                assert classify_edge(f, edge) is want


class TestEmpiricalEdgeMass:
    def test_sampled_fraction_matches_exact_bound(self):
        # for fixed bias-vector coordinates, the fraction of samples whose
        # edge at i is strictly d_i-monotone is at least 1/5 - 0.02 at
        # 10,000 draws (the exact census ratio is at least 1/5)
        from unatelab.functions import bias_profile
        from unatelab.ground_truth import violation_census
        rng = np.random.default_rng(123)
        checked = 0
        attempts = 0
        while checked < 5 and attempts < 200:
            attempts += 1
            n = int(rng.integers(3, 8))
            size = int(rng.integers(3, 1 << (n - 1)))
            f = SparseFunction(n, rng.choice(1 << n, size=size,
                                             replace=False).tolist())
            prof = bias_profile(f)
            fixed = [i for i in range(n) if prof.d.value(i) is not None]
            if not fixed:
                continue
            census = violation_census(f)
            n_ones = f.ones_count()
            i = fixed[0]
            b = prof.d.value(i)
            exact = census.edge1[i] if b == 1 else census.edge0[i]
            assert 5 * exact >= n_ones
            s = OracleSession(f, 1000 + attempts)
            zs = s.samp_batch(10_000)
            vals = s.mq_batch(zs ^ np.int64(1 << i), 1)
            hits = int((((zs >> np.int64(i)) & 1 == b) & (vals == 0)).sum())
            assert hits / 10_000 >= 0.2 - 0.02
            checked += 1
        assert checked == 5


class TestCheckSamples:
    def test_far_pair_always_rejects(self):
        # both flips of every disagreeing coordinate are 0-valued
        n = 10
        f = indicator(n, [0, (1 << n) - 1])
        for seed in range(100):
            s = OracleSession(f, seed)
            out = check_samples(s, 0, [(1 << n) - 1], Fraction(1, 16))
            assert isinstance(out, Rejected)
            assert out.witness.verify(f)

    def test_sample_equal_to_anchor_returns(self):
        f = dictator(4, 0)
        s = OracleSession(f, 3)
        a = s.samp_bits()
        assert isinstance(check_samples(s, a, [a], Fraction(1, 8)), Returned)

    def test_empty_sample_list_returns(self):
        f = dictator(4, 0)
        s = OracleSession(f, 3)
        assert isinstance(check_samples(s, s.samp_bits(), [], "0.1"), Returned)

    def test_unate_never_rejects(self):
        rng = np.random.default_rng(1)
        corpus = generate_unate_corpus(10, 8, rng)
        for entry in corpus:
            for seed in range(10):
                s = OracleSession(entry.function, seed)
                a = s.samp_bits()
                batch = s.samp_batch(30)
                out = check_samples(s, a, batch, Fraction(1, 64))
                assert isinstance(out, Returned)


def derived_biased_instance():
    # 1-set {100, 101, 110, 011} as text points; p_1 = 3/4 so "1**" is
    # consistent with the bias vector; both edge orientations exist at
    # coordinate 0
    ones = [BitPoint.from01(t).bits for t in ("100", "101", "110", "011")]
    return SparseFunction(3, ones)


class TestBiasedTest:
    def test_no_fixed_coordinates_returns_without_queries(self):
        f = xor_function(3)
        s = OracleSession(f, 0)
        out = biased_test(s, 5, "0.1", PartialVector.all_star(3))
        assert isinstance(out, Returned)
        assert (s.mq_count, s.samp_count) == (0, 0)

    def test_zero_radius_budget_returns(self):
        f = dictator(3, 0)
        s = OracleSession(f, 0)
        out = biased_test(s, 0, "0.1", PartialVector.from01star("1**"))
        assert isinstance(out, Returned)
        assert (s.mq_count, s.samp_count) == (0, 0)

    def test_unate_never_rejects(self):
        f = conjunction(6, [0, 2], [4])
        dtilde = PartialVector.from01star("1*1*0*")
        for seed in range(30):
            out = biased_test(OracleSession(f, seed), 6, "0.2", dtilde)
            assert isinstance(out, Returned)

    def test_derived_instance_rejects(self):
        f = derived_biased_instance()
        dtilde = PartialVector.from01star("1**")
        rejects = 0
        for seed in range(300):
            out = biased_test(OracleSession(f, seed), 2, "0.05", dtilde)
            if isinstance(out, Rejected):
                rejects += 1
                assert out.witness.verify(f)
                assert out.witness.i == 0
        assert rejects >= 295

    def test_budget_cap(self):
        f = conjunction(6, [0, 2], [4])
        dtilde = PartialVector.from01star("1*1*0*")
        s = OracleSession(f, 5)
        biased_test(s, 6, "0.2", dtilde)
        cap = FULL.biased_round_factor * ceil_frac(Fraction(6) / Fraction("0.2"))
        assert s.mq_count + s.samp_count <= cap * (2 + 2 * FULL.confirm_direction_rounds)

    def test_nonadaptive_mode_rejects_and_audits(self):
        f = derived_biased_instance()
        dtilde = PartialVector.from01star("1**")
        rejects = 0
        for seed in range(100):
            s = OracleSession(f, seed)
            out = biased_test(s, 2, "0.05", dtilde, mode="nonadaptive")
            assert adaptivity_audit(s).passed
            if isinstance(out, Rejected):
                rejects += 1
                assert out.witness.verify(f)
        assert rejects >= 97


class TestUnbiasedTest:
    def test_no_unfixed_coordinates_returns_without_queries(self):
        f = dictator(3, 0)
        s = OracleSession(f, 0)
        out = unbiased_test(s, "0.5", PartialVector.from01star("101"))
        assert isinstance(out, Returned)
        assert (s.mq_count, s.samp_count) == (0, 0)

    def test_unate_never_rejects(self):
        f = conjunction(5, [0], [3])
        for seed in range(30):
            out = unbiased_test(OracleSession(f, seed), "0.3",
                                PartialVector.all_star(5))
            assert isinstance(out, Returned)

    def test_xor_n2_rejects(self):
        f = xor_function(2)
        rejects = 0
        for seed in range(300):
            out = unbiased_test(OracleSession(f, seed), "0.5",
                                PartialVector.all_star(2))
            if isinstance(out, Rejected):
                rejects += 1
                assert out.witness.verify(f)
        assert rejects >= 297

    def test_budget_cap(self):
        f = conjunction(5, [0], [3])
        dtilde = PartialVector.all_star(5)
        s = OracleSession(f, 2)
        unbiased_test(s, "0.3", dtilde)
        eps = Fraction("0.3")
        u = 5
        levels = 0
        total = 0
        from unatelab.exactmath import ceil_log2_frac
        levels = ceil_log2_frac(Fraction(u) / eps) + 2
        for r in range(1, levels + 1):
            s_r = ceil_frac(FULL.unbiased_round_factor * u / (eps * (1 << r)))
            total += s_r * 6 * (1 << r)
        assert s.mq_count + s.samp_count <= total

    def test_nonadaptive_single_round(self):
        f = xor_function(2)
        s = OracleSession(f, 9)
        out = unbiased_test(s, "0.5", PartialVector.all_star(2),
                            mode="nonadaptive")
        assert adaptivity_audit(s).passed
        assert isinstance(out, Rejected)
        assert out.witness.verify(f)


class TestIterativeBias:
    def test_dictator_returns_fixed_one(self):
        f = dictator(8, 0)
        top = (1 << 8) - 1
        for seed in range(25):
            out = iterative_bias(OracleSession(f, seed), top, "0.1")
            assert isinstance(out, Returned)
            assert out.payload.value(0) == 1

    def test_unate_never_rejects(self):
        rng = np.random.default_rng(2)
        for entry in generate_unate_corpus(6, 8, rng):
            s = OracleSession(entry.function, 11)
            a = s.samp_bits()
            out = iterative_bias(s, a, "0.2")
            assert not isinstance(out, Rejected)

    def test_phase2_scan_rejects_xor(self):
        # drive the rejection scan directly with an all-star vector
        f = xor_function(4)
        rejects = 0
        for seed in range(100):
            out = bidirectional_scan(OracleSession(f, seed),
                                     PartialVector.all_star(4), "0.1")
            if isinstance(out, Rejected):
                rejects += 1
                assert out.witness.verify(f)
        assert rejects >= 99

    def test_phase2_scan_empty_unfixed_skips(self):
        f = dictator(3, 0)
        s = OracleSession(f, 1)
        out = bidirectional_scan(s, PartialVector.from01star("111"), "0.1")
        assert isinstance(out, Returned)
        assert (s.mq_count, s.samp_count) == (0, 0)


class TestPreprocessing:
    def test_dictator_returns_zero_radius(self):
        # every sample agrees with the single fixed coordinate
        f = dictator(8, 0)
        dtilde = PartialVector.from01star("1*******")
        for seed in range(20):
            out = preprocessing(OracleSession(f, seed), dtilde, "0.1", "0.1")
            assert isinstance(out, Returned)
            assert out.payload == 0

    def test_inconsistent_vector_single_point(self):
        # f = indicator of the all-zeros point, dtilde deliberately the
        # all-ones vector: no confirmation can ever succeed, so the radius
        # n comes back even though it exceeds 2 log2 N = 0
        n = 10
        f = indicator(n, [0])
        dtilde = PartialVector.from01star("1" * n)
        for seed in range(20):
            out = preprocessing(OracleSession(f, seed), dtilde, "0.1", "0.1")
            assert isinstance(out, Returned)
            assert out.payload == n

    def test_unate_never_rejects(self):
        rng = np.random.default_rng(3)
        for entry in generate_unate_corpus(6, 8, rng):
            from unatelab.functions import bias_profile
            dtilde = bias_profile(entry.function).d
            for seed in range(5):
                out = preprocessing(OracleSession(entry.function, seed),
                                    dtilde, "0.2", "0.1")
                assert isinstance(out, Returned)


class TestBinarySearchViolation:
    def test_single_differing_coordinate(self):
        # the 1-point must disagree with dtilde on the differing coordinate
        f = conjunction(2, [0, 1])
        s = OracleSession(f, 0)
        i, w = binary_search_violation(s, 0b11, 0b01, PartialVector.from01star("10"))
        assert (i, w) == (1, 0b11)
        assert s.mq_count == 0

    def test_and_from_top_to_bottom(self):
        f = conjunction(2, [0, 1])
        s = OracleSession(f, 0)
        i, w = binary_search_violation(s, 0b11, 0b00, PartialVector.from01star("00"))
        assert w == 0b11 and i in (0, 1)
        assert f.evaluate(w) == 1 and f.evaluate(w ^ (1 << i)) == 0
        assert (w >> i) & 1 != 0  # against the proposed orientation

    def test_precondition_violation(self):
        # u agrees with dtilde on the differing coordinate: invalid call
        f = conjunction(2, [0, 1])
        s = OracleSession(f, 0)
        with pytest.raises(ValueError):
            binary_search_violation(s, 0b11, 0b01, PartialVector.from01star("11"))

    def test_probe_budget_random_instances(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            n = int(rng.integers(2, 17))
            u = int(rng.integers(0, 1 << n))
            width = int(rng.integers(1, n + 1))
            dmask = 0
            while dmask.bit_count() < width:
                dmask |= 1 << int(rng.integers(0, n))
            sub = 0
            while sub == 0:
                sub = dmask & int(rng.integers(0, 1 << n))
            v = u ^ sub
            dtilde = PartialVector(n, (1 << n) - 1, u ^ dmask)
            marked = {u}
            f = CallableFunction(n, lambda p, good=marked: int(p in good))
            s = OracleSession(f, 0)
            i, w = binary_search_violation(s, u, v, dtilde)
            m = sub.bit_count()
            assert s.mq_count <= max(0, (m - 1).bit_length()) + 1
            assert (sub >> i) & 1
            assert f.evaluate(w) == 1 and f.evaluate(w ^ (1 << i)) == 0
            assert (w >> i) & 1 != dtilde.value(i)

    def test_traced_runs_report_phases_and_counts(self):
        from unatelab.subroutines import run_traced
        f = dictator(8, 0)
        s = OracleSession(f, 4)
        out, record = run_traced(s, preprocessing,
                                 PartialVector.from01star("1*******"),
                                 "0.1", "0.1")
        assert isinstance(out, Returned)
        assert record["verdict"] == "returned" and record["payload"] == 0
        assert record["oracle"]["mq"] + record["oracle"]["samp"] > 0
        assert set(record["phases"]) == {"sample-radius", "confirm-fixed",
                                         "upward-probe"}
        total = sum(p["mq"] + p["samp"] for p in record["phases"].values())
        assert total == record["oracle"]["mq"] + record["oracle"]["samp"]

        s2 = OracleSession(xor_function(2), 5)
        out2, record2 = run_traced(s2, unbiased_test, "0.5",
                                   PartialVector.all_star(2))
        assert record2["verdict"] == "rejected"
        assert record2["witness"]["type"] == "edge"

    def test_witness_soundness_of_all_rejections(self):
        # sweep a far function through every subroutine; each rejection
        # must re-verify
        f = xor_function(4)
        dtilde_all = PartialVector.all_star(4)
        for seed in range(40):
            out = unbiased_test(OracleSession(f, seed), "0.4", dtilde_all)
            if isinstance(out, Rejected):
                assert out.witness.verify(f)
        half = PartialVector.from01star("11**")
        for seed in range(40):
            out = biased_test(OracleSession(f, seed), 4, "0.1", half)
            if isinstance(out, Rejected):
                assert out.witness.verify(f)
