import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracpath.bv import (
    MixedFn,
    PiecewiseLinearFn,
    StepFn,
    ac_check,
    jordan_decompose,
    jump_gaps,
    ls_measure,
    random_jump_fn,
    random_pl,
    record_integral,
    record_integral_step,
    record_set,
    record_tolerance,
    running_max,
    total_variation,
)
from fracpath.fbm import SampledPath

KNOTS = (0.0, 1.0, 2.0, 3.0)
VALUES = (0.0, 1.0, 0.5, 2.0)
# 0.5 + 1.5 (t - 2) = 1  =>  t = 7/3
CROSSING = 2.0 + 1.0 / 3.0


@pytest.fixture
def f_example():
    return PiecewiseLinearFn(KNOTS, VALUES)


def pl_values(min_size=2, max_size=30):
    return st.lists(st.floats(-1, 1, allow_nan=False), min_size=min_size, max_size=max_size)


def pl_from(values):
    return PiecewiseLinearFn(np.linspace(0.0, 1.0, len(values)), values)


class TestTypes:
    def test_pl_validation(self):
        with pytest.raises(ValueError):
            PiecewiseLinearFn([0.0, 0.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            PiecewiseLinearFn([0.5, 1.0], [1.0, 2.0])

    def test_step_validation(self):
        with pytest.raises(ValueError):
            StepFn(0.0, ((0.5, 0.0),))
        with pytest.raises(ValueError):
            StepFn(0.0, ((0.5, 1.0), (0.4, 1.0)))
        with pytest.raises(ValueError):
            StepFn(0.0, ((0.0, 1.0),))

    def test_step_right_continuous(self):
        s = StepFn(1.0, ((0.5, 2.0),))
        assert s(0.5) == 3.0 and s.left_limit(0.5) == 1.0 and s(0.49) == 1.0


class TestRunningMax:
    def test_example_inserts_crossing(self, f_example):
        m = running_max(f_example)
        # original knots are kept; exactly one knot is inserted
        np.testing.assert_allclose(m.knots, [0, 1, 2, CROSSING, 3])
        np.testing.assert_allclose(m.values, [0, 1, 1, 1, 2])
        np.testing.assert_allclose(m(np.array([1.5, 2.0, 2.2])), 1.0)

    def test_nondecreasing_is_fixed_point(self):
        f = PiecewiseLinearFn([0, 1, 2], [0, 0, 3])
        m = running_max(f)
        np.testing.assert_array_equal(m.values, f.values)

    def test_decreasing_is_constant(self):
        m = running_max(PiecewiseLinearFn([0, 1, 2], [2, 1, -5]))
        np.testing.assert_array_equal(m.values, 2.0)

    def test_sampled_path(self):
        p = running_max(SampledPath([0, 1, 2], [0, -1, 3]))
        np.testing.assert_array_equal(p.values, [0, 0, 3])

    def test_step(self):
        m = running_max(StepFn(0.0, ((0.2, 1.0), (0.4, -2.0), (0.6, 1.5), (0.8, 1.0))))
        assert m.jumps == ((0.2, 1.0), (0.8, 0.5))

    @settings(max_examples=200)
    @given(pl_values())
    def test_dominates_and_nondecreasing(self, values):
        f = pl_from(values)
        m = running_max(f)
        assert np.all(np.diff(m.values) >= 0)
        grid = np.linspace(0, 1, 257)
        assert np.all(m(grid) >= f(grid) - 1e-12)


class TestVariation:
    def test_example(self, f_example):
        assert total_variation(f_example) == 3.0

    def test_monotone(self):
        assert total_variation(PiecewiseLinearFn([0, 1, 3], [1, 2, 4])) == 3.0

    def test_constant(self):
        assert total_variation(PiecewiseLinearFn.constant(2.0, 1.0)) == 0.0

    def test_step(self):
        assert total_variation(StepFn(3.0, ((0.5, -2.0), (0.7, 1.0)))) == 3.0

    def test_jordan_example(self, f_example):
        jp = jordan_decompose(f_example)
        assert jp.positive_variation.values[-1] == 2.5
        assert jp.negative_variation.values[-1] == 0.5
        assert jp.positive_variation.values[-1] - jp.negative_variation.values[-1] == 2.0

    def test_jordan_nondecreasing_input(self):
        jp = jordan_decompose(PiecewiseLinearFn([0, 1, 2], [0, 1, 1]))
        assert np.all(jp.negative_variation.values == 0.0)

    @settings(max_examples=200)
    @given(pl_values())
    def test_jordan_identities(self, values):
        f = pl_from(values)
        jp = jordan_decompose(f)
        v, w = jp.positive_variation.values, jp.negative_variation.values
        assert np.all(np.diff(v) >= 0) and np.all(np.diff(w) >= 0)
        tv = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(f.values)))])
        np.testing.assert_allclose(v - w, f.values - f.values[0], atol=1e-12)
        np.testing.assert_allclose(v + w, tv, atol=1e-12)


class TestMeasure:
    def test_pl_half_open(self, f_example):
        assert ls_measure(f_example, 0.5, 2.5) == pytest.approx(f_example(2.5) - f_example(0.5))

    def test_atom(self):
        s = StepFn(0.0, ((0.4, 3.0),))
        assert ls_measure(s, 0.4, 0.4, left_open=False, right_open=False) == 3.0
        assert ls_measure(s, 0.1, 0.4, right_open=True) == 0.0
        assert ls_measure(s, 0.4, 0.9) == 0.0
        assert ls_measure(s, 0.4, 0.9, left_open=False) == 3.0

    @pytest.mark.parametrize(
        "f",
        [PiecewiseLinearFn(KNOTS, VALUES), StepFn(-1.0, ((0.3, 2.0), (1.0, -0.5)))],
    )
    def test_whole_interval(self, f):
        assert ls_measure(f, 0.0, f.horizon) == pytest.approx(f(f.horizon) - f(0.0))

    def test_out_of_range(self, f_example):
        with pytest.raises(ValueError):
            ls_measure(f_example, -0.1, 1.0)
        with pytest.raises(ValueError):
            ls_measure(f_example, 1.0, 4.0)


class TestRecordSet:
    def test_example(self, f_example):
        segs = record_set(f_example).segments
        assert len(segs) == 2
        assert segs[0] == (0.0, 1.0)
        assert segs[1][0] == pytest.approx(CROSSING, abs=1e-15) and segs[1][1] == 3.0

    def test_nondecreasing(self):
        assert record_set(PiecewiseLinearFn([0, 1, 2], [0, 0, 1])).segments == ((0.0, 2.0),)

    def test_decreasing_is_point(self):
        assert record_set(PiecewiseLinearFn([0, 1, 2], [1, 0, -1])).segments == ((0.0, 0.0),)

    @settings(max_examples=200)
    @given(pl_values())
    def test_closed_ordered_and_gaps_flat(self, values):
        f = pl_from(values)
        segs = record_set(f).segments
        m = running_max(f)
        tol = record_tolerance(f.values) * 10
        flat = [a <= b for a, b in segs]
        assert all(flat)
        for a, b in segs:
            # closed: endpoints are records
            assert abs(m(a) - f(a)) <= tol and abs(m(b) - f(b)) <= tol
        for (_, b), (a, _) in zip(segs, segs[1:]):
            assert b < a
            # mu_{f*} vanishes on the complement: f* is flat across each gap
            assert abs(m(a) - m(b)) <= tol


class TestRecordIntegral:
    def test_example(self, f_example):
        assert record_integral(f_example) == pytest.approx(2.0, abs=1e-15)
        assert running_max(f_example).values[-1] - f_example.values[0] == 2.0

    def test_constant(self):
        assert record_integral(PiecewiseLinearFn.constant(1.0, 2.0)) == 0.0

    def test_decreasing(self):
        assert record_integral(PiecewiseLinearFn([0, 1], [1, -1])) == 0.0

    def test_ac_example(self, f_example):
        # 1 * 1 on [0, 1] plus 1.5 * (3 - 7/3) on the second segment
        assert ac_check(f_example) == pytest.approx(2.0, abs=1e-14)

    def test_ac_nondecreasing(self):
        f = PiecewiseLinearFn([0, 1, 2], [0, 2, 3])
        assert ac_check(f) == pytest.approx(3.0)

    def test_ac_constant(self):
        assert ac_check(PiecewiseLinearFn.constant(4.0, 1.0)) == 0.0

    @settings(max_examples=300)
    @given(pl_values())
    def test_identity(self, values):
        f = pl_from(values)
        tol = 1e-12 * (1 + total_variation(f))
        top = running_max(f).values[-1]
        assert abs(top - f.values[0] - record_integral(f)) <= tol
        assert abs(ac_check(f) - record_integral(f)) <= tol

    def test_random_corpus(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            f = random_pl(rng)
            assert 2 <= f.knots.size <= 50
            tol = 1e-12 * (1 + total_variation(f))
            assert abs(running_max(f).values[-1] - f.values[0] - record_integral(f)) <= tol


class TestJumps:
    def test_mixed_counterexample(self):
        f = MixedFn(PiecewiseLinearFn(KNOTS, (0.0, 1.0, 0.0, 0.0)), StepFn(0.0, ((2.0, 3.0),), 3.0))
        assert f(2.0) == 3.0 and f.left_limit(2.0) == 0.0
        integral, residual = record_integral_step(f)
        assert integral == 4.0
        assert residual == -1.0
        assert jump_gaps(f) == [(2.0, 1.0)]

    def test_jumps_from_maximum_have_zero_residual(self):
        f = StepFn(0.0, ((0.2, 1.0), (0.4, 2.0), (0.6, -1.0)))
        assert record_integral_step(f) == (3.0, 0.0)

    def test_degenerate_step_overlay(self, f_example):
        integral, residual = record_integral_step(f_example)
        assert integral == pytest.approx(2.0) and residual == pytest.approx(0.0, abs=1e-15)
        mixed = MixedFn(f_example, StepFn(0.0, (), 3.0))
        assert record_integral_step(mixed)[1] == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("continuous", [False, True])
    def test_residual_is_minus_gaps(self, continuous):
        rng = np.random.default_rng(7)
        for _ in range(200):
            f = random_jump_fn(rng, continuous=continuous)
            _, residual = record_integral_step(f)
            gaps = math.fsum(g for _, g in jump_gaps(f))
            assert gaps > 0
            assert residual != 0.0
            assert abs(residual + gaps) <= 1e-12 * (1 + total_variation(f))

    def test_running_max_of_mixed_refused(self, f_example):
        with pytest.raises(TypeError):
            running_max(MixedFn(f_example, StepFn(0.0, (), 3.0)))
