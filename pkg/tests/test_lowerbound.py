from math import comb

import numpy as np
import pytest

from unatelab.functions import pointwise_equal
from unatelab.ground_truth import distance_to_oriented_monotone, verify_unate
from unatelab.hypercube import BitPoint, mask_of, popcount_array
from unatelab.lowerbound import (
    ALL_ZERO,
    DICTATOR,
    ONE_STAR,
    ZERO_STAR,
    MultiplexedFunction,
    ScaffoldHoleError,
    TermTuple,
    draw_no,
    draw_term_tuple,
    draw_yes,
    gamma,
    term_count,
    two_layer_scaffold,
)


class TestTermCount:
    def test_values(self):
        assert term_count(8) == 10
        assert term_count(12) == 32
        assert term_count(16) == 100


class TestGamma:
    def test_all_zeros_satisfies_nothing(self):
        T = draw_term_tuple(8, np.random.default_rng(0))
        assert gamma(T, 0) == ZERO_STAR

    def test_all_ones_satisfies_everything(self):
        T = draw_term_tuple(8, np.random.default_rng(0))
        assert T.L >= 2
        assert gamma(T, mask_of(8)) == ONE_STAR

    def test_unique_term(self):
        # term 0 reads coordinate 0 only, term 1 reads coordinate 1 only
        T = TermTuple(4, ((0,) * 4, (1,) * 4))
        x = BitPoint.from01("1000").bits
        assert gamma(T, x) == 0

    def test_deterministic_given_tuple(self):
        T = draw_term_tuple(8, np.random.default_rng(1))
        for x in (0, 17, 255, mask_of(8)):
            assert gamma(T, x) == gamma(T, x)


class TestMultiplexedFunction:
    def test_two_layer_shell(self):
        f = draw_no(8, np.random.default_rng(2))
        assert f.evaluate(mask_of(8)) == 1
        assert f.evaluate(0) == 0
        scaffold = two_layer_scaffold(8)
        assert scaffold.matches(f)

    def test_star_branches_on_middle_layers(self):
        rng = np.random.default_rng(3)
        f = draw_no(8, rng)
        pts = np.arange(1 << 8, dtype=np.int64)
        w = popcount_array(pts)
        for x in pts[(w == 6) | (w == 7)]:
            g = gamma(f.T, int(x))
            if g == ZERO_STAR:
                assert f.evaluate(int(x)) == 0
            elif g == ONE_STAR:
                assert f.evaluate(int(x)) == 1

    def test_eval_batch_matches_scalar(self):
        f = draw_yes(8, np.random.default_rng(4))
        pts = np.arange(1 << 8, dtype=np.int64)
        batch = f.eval_batch(pts)
        assert all(int(batch[p]) == f.evaluate(int(p)) for p in range(1 << 8))

    def test_forced_all_zero_cells_is_threshold(self):
        T = draw_term_tuple(8, np.random.default_rng(5))
        f = MultiplexedFunction(T, [(ALL_ZERO, None)] * T.L)
        # gamma may hand some points to 1* (two satisfied terms), which
        # still reads 1; all uniquely assigned points read 0
        pts = np.arange(1 << 8, dtype=np.int64)
        w = popcount_array(pts)
        for x in pts[w > 7]:
            assert f.evaluate(int(x)) == 1
        for x in pts[w < 6]:
            assert f.evaluate(int(x)) == 0
        assert distance_to_oriented_monotone(f, mask_of(8)) == 0

    def test_cell_count_must_match(self):
        T = draw_term_tuple(8, np.random.default_rng(6))
        with pytest.raises(ValueError):
            MultiplexedFunction(T, [(DICTATOR, 0)])

    def test_dimension_validation(self):
        with pytest.raises(ValueError):
            draw_yes(10, np.random.default_rng(0))
        with pytest.raises(ValueError):
            draw_no(20, np.random.default_rng(0))


class TestDrawYes:
    def test_every_draw_is_monotone(self):
        rng = np.random.default_rng(7)
        for _ in range(15):
            f = draw_yes(8, rng)
            assert distance_to_oriented_monotone(f, mask_of(8)) == 0
            assert verify_unate(f)[0]

    def test_determinism(self):
        a = draw_yes(8, np.random.default_rng(11))
        b = draw_yes(8, np.random.default_rng(11))
        assert pointwise_equal(a, b)


class TestDrawNo:
    def test_violation_fraction_grows_with_n(self):
        # measured pilot floors (400/200/60 draws): 0.07 / 0.50 / 0.97;
        # the asymptotic guarantee is only a constant fraction, and the
        # constant is genuinely small at n = 8
        rng = np.random.default_rng(8)
        bad12 = sum(0 if verify_unate(draw_no(12, rng))[0] else 1
                    for _ in range(60))
        assert bad12 >= 21  # >= 0.35 of 60

    def test_some_n8_draws_are_not_unate(self):
        rng = np.random.default_rng(2024)
        bad = sum(0 if verify_unate(draw_no(8, rng))[0] else 1
                  for _ in range(200))
        assert bad >= 4  # measured 7% over a 400-draw pilot

    def test_nonempty_and_two_layer(self):
        rng = np.random.default_rng(9)
        scaffold = two_layer_scaffold(8)
        for _ in range(10):
            f = draw_no(8, rng)
            assert f.ones_count() > 0
            assert scaffold.matches(f)


class TestScaffold:
    def test_endpoints(self):
        s = two_layer_scaffold(8)
        assert s.evaluate(mask_of(8)) == 1
        assert s.evaluate(0) == 0

    def test_holes_raise(self):
        s = two_layer_scaffold(8)
        x6 = BitPoint.from01("11111100").bits
        with pytest.raises(ScaffoldHoleError):
            s.evaluate(x6)

    def test_hole_sizes_n8(self):
        assert two_layer_scaffold(8).hole_sizes() == (comb(8, 6), comb(8, 7))
