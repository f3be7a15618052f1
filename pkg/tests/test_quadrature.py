"""
Tests comparing the numerically integrated corrections with the closed forms.
"""

import numpy as np
import pytest

from src.models.core import PotentialParams, QuantumState
from src.models.perturbation import energy_shifts, superpotential_terms
from src.models.quadrature import (
    W1_CHECK_SCALES,
    QuadratureConfig,
    coulomb_moment,
    compare_with_closed_forms,
    correction_integrals,
    e1_quadrature,
    e2_e3_quadrature,
    moment_quadrature,
    normalization_quadrature,
    orthogonality_quadrature,
    w1_quadrature,
    w2_quadrature,
)
from src.utils.errors import ParameterError

B_VALUES = (-10.0, -2.0, -1.0, 1.0)
DELTA_VALUES = (0.001, 0.01, 0.05)


def _within(numeric, closed, rel=1e-6, abs_tol=1e-10):
    return abs(numeric - closed) <= max(abs_tol, rel * abs(closed))


class TestWavefunctionInvariants:
    def test_normalization(self, strong_screening, normalization_states):
        assert len(normalization_states) == 28
        for state in normalization_states:
            assert normalization_quadrature(strong_screening, state) == pytest.approx(1.0, abs=1e-8), state.label

    @pytest.mark.parametrize("first, second", [("1s", "2s"), ("2s", "3s"), ("1s", "4s"), ("2p", "3p"), ("3d", "4d")])
    def test_orthogonality(self, strong_screening, first, second):
        overlap = orthogonality_quadrature(strong_screening, QuantumState.parse(first), QuantumState.parse(second))
        assert abs(overlap) < 1e-7

    @pytest.mark.parametrize("label", ["1s", "2s", "2p", "3d", "4f", "5s"])
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_moments(self, strong_screening, label, k):
        state = QuantumState.parse(label)
        closed = coulomb_moment(strong_screening, state, k)
        assert moment_quadrature(strong_screening, state, k) == pytest.approx(closed, rel=1e-8)

    def test_mean_radius_identity(self, strong_screening):
        # <r> = (3N^2 - L) / (2 N beta)
        state = QuantumState.parse("3p")
        beta = 0.5 * 12.0 / 3
        assert coulomb_moment(strong_screening, state, 1) == pytest.approx((27 - 2) / (2 * 3 * beta))

    def test_moment_order(self, strong_screening):
        with pytest.raises(ParameterError):
            coulomb_moment(strong_screening, QuantumState.parse("1s"), 4)


class TestCorrections:
    def test_zero_yukawa(self):
        params = PotentialParams(a=2.0, b=0.0, delta=0.1)
        state = QuantumState.parse("2s")
        assert e1_quadrature(params, state) == 0.0
        assert e2_e3_quadrature(params, state) == (0.0, 0.0)
        w1 = w1_quadrature(params, state, np.linspace(0.5, 5.0, 10))
        assert np.all(w1.values == 0.0)

    def test_first_order_example(self, weak_screening):
        assert e1_quadrature(weak_screening, QuantumState.parse("1s")) == pytest.approx(-5.0e-5, rel=1e-6)

    def test_second_order_example(self, strong_screening):
        e2, _ = e2_e3_quadrature(strong_screening, QuantumState.parse("1s"))
        assert e2 == pytest.approx(1.37442130e-4, rel=1e-6)

    def test_weak_screening_2p(self, weak_screening):
        state = QuantumState.parse("2p")
        _, e2, e3 = energy_shifts(weak_screening, state)
        e2_num, e3_num = e2_e3_quadrature(weak_screening, state)
        assert _within(e2_num, e2)
        assert _within(e3_num, e3)

    def test_first_and_second_order_all_states(self, quadrature_states):
        for b in B_VALUES:
            for delta in DELTA_VALUES:
                params = PotentialParams(a=2.0, b=b, delta=delta)
                for state in quadrature_states:
                    e1, e2, _ = energy_shifts(params, state)
                    assert _within(e1_quadrature(params, state), e1), (state.label, b, delta)
                    assert _within(e2_e3_quadrature(params, state)[0], e2), (state.label, b, delta)

    def test_third_order_nodeless_states(self, quadrature_states):
        for b in B_VALUES:
            for delta in DELTA_VALUES:
                params = PotentialParams(a=2.0, b=b, delta=delta)
                for state in (s for s in quadrature_states if s.n == 0):
                    _, _, e3 = energy_shifts(params, state)
                    assert _within(e2_e3_quadrature(params, state)[1], e3), (state.label, b, delta)

    def test_literal_cross_term_differs(self, strong_screening):
        state = QuantumState.parse("1s")
        _, _, e3 = energy_shifts(strong_screening, state)
        _, e3_literal = e2_e3_quadrature(strong_screening, state, cross_term_factor=1)
        assert not _within(e3_literal, e3)

    def test_bad_cross_term_factor(self, strong_screening):
        with pytest.raises(ParameterError):
            e2_e3_quadrature(strong_screening, QuantumState.parse("1s"), cross_term_factor=3)

    def test_numeric_w2_moment(self, weak_screening):
        state = QuantumState.parse("1s")
        _, _, e3 = energy_shifts(weak_screening, state)
        _, e3_num = e2_e3_quadrature(weak_screening, state, numeric_w2=True)
        assert e3_num == pytest.approx(e3, rel=1e-5)


class TestSuperpotentials:
    def test_w1_is_linear_for_nodeless_states(self, strong_screening):
        state = QuantumState.parse("1s")
        grid = np.linspace(0.05, 1.5, 12)
        samples = w1_quadrature(strong_screening, state, grid)
        slope = superpotential_terms(strong_screening, state).w1_linear
        assert samples.excluded == ()
        assert np.allclose(samples.values, slope * grid, rtol=1e-6, atol=1e-12)

    def test_w1_excludes_nodes(self, strong_screening):
        state = QuantumState.parse("2s")
        # the 2s node of the Coulomb function sits at 1 / beta with beta = 3
        grid = np.array([0.2, 1.0 / 3.0, 1.2])
        samples = w1_quadrature(strong_screening, state, grid)
        assert samples.excluded == pytest.approx((1.0 / 3.0,))
        assert list(samples.r) == [0.2, 1.2]

    def test_w1_shares_the_shell_slope_for_nodeless_states(self, strong_screening):
        state = QuantumState.parse("2p")
        grid = np.array([0.05, 0.1, 0.2, 0.5, 0.8])
        samples = w1_quadrature(strong_screening, state, grid)
        assert np.allclose(samples.values / grid, -1.0 / 120.0, rtol=1e-6)

    def test_w1_is_not_linear_for_excited_states(self, strong_screening):
        state = QuantumState.parse("2s")
        grid = np.array([0.05, 0.1, 0.2, 0.5, 0.8])
        samples = w1_quadrature(strong_screening, state, grid)
        ratios = samples.values / grid
        # same shell as 2p, but W1 / r drifts and grows towards the node at 1/3
        assert ratios == pytest.approx([-0.0190023, -0.0227891, -0.0447917, -0.0166667, -0.00748299], rel=1e-5)
        assert np.ptp(ratios) > 0.1 * abs(superpotential_terms(strong_screening, state).w1_linear)

    def test_w2_mixed_reading_excludes_nodes(self, strong_screening):
        state = QuantumState.parse("2s")
        grid = np.array([0.2, 1.0 / 3.0 * (1 + 1e-5), 1.2])
        samples = w2_quadrature(strong_screening, state, grid, reading="mixed")
        assert samples.excluded == pytest.approx((1.0 / 3.0 * (1 + 1e-5),))
        assert list(samples.r) == [0.2, 1.2]
        assert np.all(np.isfinite(samples.values))

    def test_w2_derived_reading(self, weak_screening):
        state = QuantumState.parse("1s")
        terms = superpotential_terms(weak_screening, state)
        grid = np.linspace(0.1, 2.0, 8)
        samples = w2_quadrature(weak_screening, state, grid)
        assert np.allclose(samples.values, terms.w2(grid), rtol=1e-5, atol=1e-14)

    def test_w2_readings_differ(self, strong_screening):
        state = QuantumState.parse("1s")
        grid = np.array([0.5, 1.0])
        derived = w2_quadrature(strong_screening, state, grid)
        mixed = w2_quadrature(strong_screening, state, grid, reading="mixed")
        assert not np.allclose(derived.values, mixed.values, rtol=1e-3)

    def test_unknown_reading(self, strong_screening):
        with pytest.raises(ParameterError):
            w2_quadrature(strong_screening, QuantumState.parse("1s"), [1.0], reading="printed")

    def test_correction_integrals(self, strong_screening):
        state = QuantumState.parse("2p")
        result = correction_integrals(strong_screening, state, r_grid=np.linspace(0.2, 2.0, 5))
        e1, e2, e3 = energy_shifts(strong_screening, state)
        assert _within(result.e1_num, e1) and _within(result.e2_num, e2) and _within(result.e3_num, e3)
        assert len(result.w1_samples.r) == 5


class TestComparison:
    def test_nodeless_state_matches(self, strong_screening):
        comparison = compare_with_closed_forms(strong_screening, QuantumState.parse("3d"))
        assert comparison.status == ["match", "match", "match"]
        assert comparison.w1_status == "match"
        assert comparison.w1_deviation() < 1e-6
        assert not comparison.breached

    def test_excited_state_third_order_is_a_finding(self, strong_screening):
        comparison = compare_with_closed_forms(strong_screening, QuantumState.parse("2s"))
        assert comparison.status == ["match", "match", "finding"]
        assert not comparison.breached
        assert set(comparison.to_dict()) >= {"closed", "numeric", "rel_deviation", "status", "w1_slopes", "w1_status"}

    def test_excited_state_w1_is_a_finding(self, strong_screening):
        comparison = compare_with_closed_forms(strong_screening, QuantumState.parse("2s"))
        assert comparison.w1_status == "finding"
        assert comparison.w1_slope == pytest.approx(-1.0 / 120.0)
        assert len(comparison.w1_radii) == len(W1_CHECK_SCALES)
        assert comparison.w1_deviation() > 0.1

    @pytest.mark.parametrize("label", ["1s", "2p", "4f"])
    def test_nodeless_w1_matches(self, weak_screening, label):
        comparison = compare_with_closed_forms(weak_screening, QuantumState.parse(label))
        assert comparison.w1_status == "match"

    def test_zero_yukawa_w1_matches(self):
        comparison = compare_with_closed_forms(PotentialParams(a=2.0, b=0.0, delta=0.1), QuantumState.parse("3s"))
        assert comparison.w1_status == "match"
        assert comparison.w1_slopes == (0.0,) * len(W1_CHECK_SCALES)

    def test_tight_tolerance_config(self, strong_screening):
        config = QuadratureConfig(abs_tol=1e-12, rel_tol=1e-11)
        comparison = compare_with_closed_forms(strong_screening, QuantumState.parse("1s"), config=config)
        assert max(comparison.relative_deviations()) < 1e-8


class TestCutoffInvariance:
    @pytest.mark.parametrize("label", ["1s", "2s", "3p", "4f"])
    def test_corrections_ignore_outer_cutoff(self, strong_screening, label):
        state = QuantumState.parse(label)
        near = correction_integrals(strong_screening, state, config=QuadratureConfig(r_max_scale=60.0))
        far = correction_integrals(strong_screening, state, config=QuadratureConfig(r_max_scale=80.0))
        for first, second in [(near.e1_num, far.e1_num), (near.e2_num, far.e2_num), (near.e3_num, far.e3_num)]:
            assert abs(first - second) < 1e-10
