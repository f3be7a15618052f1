"""
Tests for the closed-form energies, superpotentials, moderated wavefunction and trust report.
"""

import logging
import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from src.models.core import CoulombWavefunction, PotentialParams, QuantumState, states_up_to
from src.models.perturbation import (
    SPECIALIZED_SHIFTS,
    convergence_report,
    energy_shifts,
    ground_state_moderator,
    ground_state_wavefunction,
    moderating_factor,
    superpotential_terms,
    total_energy,
    validity_radius,
    zeroth_order_energy,
)
from src.utils.errors import NoBoundStateError, SingularDenominatorError, UnsupportedStateError


class TestZerothOrder:
    @pytest.mark.parametrize("label, expected", [("1s", -1.0), ("2s", -0.25), ("2p", -0.25), ("3s", -1.0 / 9.0), ("3d", -1.0 / 9.0)])
    def test_coulomb_limit(self, label, expected):
        params = PotentialParams(a=2.0, b=0.0, delta=0.01)
        breakdown = total_energy(params, QuantumState.parse(label))
        assert breakdown.total == pytest.approx(expected, rel=1e-15)
        assert (breakdown.e1, breakdown.e2, breakdown.e3) == (0.0, 0.0, 0.0)

    def test_strong_yukawa(self):
        assert zeroth_order_energy(PotentialParams(a=2.0, b=-10.0, delta=0.1), QuantumState.parse("1s")) == -36.0

    def test_singular(self):
        with pytest.raises(SingularDenominatorError):
            zeroth_order_energy(PotentialParams(a=2.0, b=2.0, delta=0.01), QuantumState.parse("1s"))

    def test_unbound(self):
        with pytest.raises(NoBoundStateError):
            zeroth_order_energy(PotentialParams(a=2.0, b=3.0, delta=0.01), QuantumState.parse("1s"))


class TestShifts:
    def test_first_order_weak(self, weak_screening):
        e1, _, _ = energy_shifts(weak_screening, QuantumState.parse("1s"))
        assert e1 == pytest.approx(-5.0e-5, rel=1e-12)

    def test_strong_screening_ground_state(self, strong_screening):
        e1, e2, e3 = energy_shifts(strong_screening, QuantumState.parse("1s"))
        assert e1 == pytest.approx(-0.0125, rel=1e-12)
        assert e2 == pytest.approx(1.37442130e-4, rel=1e-8)
        assert e3 == pytest.approx(-1.37517482e-6, rel=1e-8)
        assert -total_energy(strong_screening, QuantumState.parse("1s")).total == pytest.approx(35.0124, abs=5e-5)

    @pytest.mark.parametrize("label", ["1s", "3d", "5g", "7i"])
    def test_zero_yukawa(self, label):
        assert energy_shifts(PotentialParams(a=2.0, b=0.0, delta=0.3), QuantumState.parse(label)) == (0.0, 0.0, 0.0)

    @pytest.mark.parametrize("n", [0, 1, 2])
    @pytest.mark.parametrize("l", range(7))
    def test_specializations_agree_with_general_form(self, strong_screening, n, l):
        general = energy_shifts(strong_screening, QuantumState(n=n, l=l))
        assert SPECIALIZED_SHIFTS[n](strong_screening, l) == general

    def test_scaling_law(self):
        k = 2.0
        for state in states_up_to(3):
            for b, delta in [(-10.0, 0.01), (-1.0, 0.1), (1.0, 0.05)]:
                base = total_energy(PotentialParams(a=2.0, b=b, delta=delta), state)
                scaled = total_energy(PotentialParams(a=k * 2.0, b=k * b, delta=delta), state)
                assert scaled.e0 == pytest.approx(k ** 2 * base.e0, rel=1e-14)
                # e1 depends on b / (a - b) only
                assert scaled.e1 == pytest.approx(base.e1, rel=1e-14)


class TestTotals:
    @pytest.mark.parametrize("b, delta, label, binding, tolerance", [
        (-10.0, 0.001, "1s", 35.99, 5e-3),
        (-1.0, 0.01, "1s", 2.24005, 5e-6),
        (-10.0, 0.01, "3d", 3.90087, 5e-6),
        (-10.0, 0.05, "2p", 8.51025, 5e-6),
        (-20.0, 0.01, "3d", 13.2454, 5e-5),
        (-10.0, 0.01, "7i", 0.638942, 5e-7),
        (-50.0, 0.1, "6h", 14.1351, 5e-5),
        (-10.0, 0.2, "4f", 0.757901, 5e-7),
    ])
    def test_published_values(self, b, delta, label, binding, tolerance):
        breakdown = total_energy(PotentialParams(a=2.0, b=b, delta=delta), QuantumState.parse(label))
        assert breakdown.binding == pytest.approx(binding, abs=tolerance)

    def test_summation_order(self, strong_screening):
        breakdown = total_energy(strong_screening, QuantumState.parse("2p"))
        assert breakdown.total == ((((breakdown.e0 + breakdown.const_shift) + breakdown.e1) + breakdown.e2) + breakdown.e3)
        assert breakdown.const_shift == pytest.approx(1.0)

    def test_units_enter_closed_forms(self, atomic_units):
        # hbar = m = 1: e0 = -(a - b)^2 / (2 N^2)
        params = PotentialParams(a=2.0, b=-1.0, delta=0.0)
        assert total_energy(params, QuantumState.parse("2p"), atomic_units).total == pytest.approx(-9.0 / 8.0)


class TestSuperpotential:
    def test_zero_yukawa(self):
        terms = superpotential_terms(PotentialParams(a=2.0, b=0.0, delta=0.1), QuantumState.parse("2s"))
        assert (terms.w1_linear, terms.w2_quadratic, terms.w2_linear) == (0.0, 0.0, 0.0)

    def test_first_correction_slope(self, strong_screening):
        terms = superpotential_terms(strong_screening, QuantumState.parse("1s"))
        assert terms.w1_linear == pytest.approx(-0.1 / 24.0, rel=1e-12)
        assert terms.w1(2.0) == pytest.approx(2.0 * terms.w1_linear)

    def test_coulomb_part(self, strong_screening):
        terms = superpotential_terms(strong_screening, QuantumState.parse("1s"))
        # W_0 = -hbar (l + 1) / (sqrt(2m) r) + sqrt(m/2) (a - b) / (N hbar)
        assert terms.w0_inv_r == pytest.approx(-1.0)
        assert terms.w0_const == pytest.approx(6.0)


class TestModeratedWavefunction:
    def test_no_screening_reduces_to_coulomb(self):
        params = PotentialParams(a=2.0, b=-10.0, delta=0.0)
        r = np.linspace(0.0, 5.0, 101)
        chi = CoulombWavefunction.from_params(params, QuantumState(0, 1))(r)
        assert np.array_equal(ground_state_wavefunction(params, 1, r), chi)

    def test_no_yukawa_reduces_to_coulomb(self):
        params = PotentialParams(a=2.0, b=0.0, delta=0.1)
        moderator = ground_state_moderator(params, 0)
        assert (moderator.p2, moderator.p3) == (0.0, 0.0)
        r = np.linspace(0.0, 20.0, 101)
        chi = CoulombWavefunction.from_params(params, QuantumState(0, 0))(r)
        assert np.array_equal(ground_state_wavefunction(params, 0, r), chi)

    def test_decays_for_weak_screening(self, weak_screening):
        moderator = ground_state_moderator(weak_screening, 0)
        assert moderator.p3 < 0
        assert ground_state_wavefunction(weak_screening, 0, 0.0) == 0.0
        r = np.linspace(0.0, 60.0, 601)
        psi = ground_state_wavefunction(weak_screening, 0, r)
        assert psi[-1] < 1e-30
        assert np.all(np.isfinite(psi))

    def test_moderating_factor_range(self, weak_screening):
        moderator = ground_state_moderator(weak_screening, 0)
        u = moderating_factor(moderator, np.linspace(1e-3, 40.0, 400))
        assert np.all((u >= 0.9) & (u <= 1.1))

    def test_decaying_exponent_has_no_validity_radius(self, weak_screening):
        assert validity_radius(ground_state_moderator(weak_screening, 0), beta=1.5) is None

    def test_validity_radius(self):
        # repulsive Yukawa: p3 > 0, so the exponent eventually grows
        params = PotentialParams(a=2.0, b=1.0, delta=0.1)
        moderator = ground_state_moderator(params, 0)
        assert moderator.p3 > 0
        radius = validity_radius(moderator, beta=0.5)
        assert radius is not None and radius > 0
        derivative = -0.5 + 2.0 * moderator.p2 * radius + 3.0 * moderator.p3 * radius ** 2
        assert derivative == pytest.approx(0.0, abs=1e-9)
        assert ground_state_wavefunction(params, 0, 2.0 * radius) > ground_state_wavefunction(params, 0, 1.5 * radius)

    def test_flags_samples_past_validity_radius(self, caplog):
        params = PotentialParams(a=2.0, b=1.0, delta=0.1)
        r = np.array([1.0, 50.0, 100.0, 300.0])
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            with caplog.at_level(logging.WARNING, logger="src.models.perturbation"):
                psi, valid = ground_state_wavefunction(params, 0, r, with_mask=True)
        assert list(valid) == [True, True, False, False]
        assert np.isfinite(psi[:3]).all()
        assert psi[3] == np.inf
        assert "2 samples lie beyond the validity radius" in caplog.text

    def test_mask_within_validity_radius(self, weak_screening, caplog):
        with caplog.at_level(logging.WARNING, logger="src.models.perturbation"):
            psi, valid = ground_state_wavefunction(weak_screening, 0, 1.0, with_mask=True)
        assert valid is True
        assert psi > 0
        assert caplog.text == ""

    def test_validity_radius_without_moderation(self):
        moderator = ground_state_moderator(PotentialParams(a=2.0, b=0.0, delta=0.1), 0)
        assert validity_radius(moderator, beta=1.0) is None

    def test_normalized(self, strong_screening):
        beta = 6.0
        psi = lambda r: ground_state_wavefunction(strong_screening, 0, r, normalize=True)
        norm, _ = quad(lambda r: psi(r) ** 2, 0.0, 60.0 / beta, limit=200)
        assert norm == pytest.approx(1.0, rel=1e-8)

    def test_excited_states_unsupported(self, weak_screening):
        with pytest.raises(UnsupportedStateError):
            ground_state_wavefunction(weak_screening, 0, 1.0, n=1)


class TestConvergenceReport:
    def test_no_yukawa(self):
        report = convergence_report(PotentialParams(a=2.0, b=0.0, delta=0.1), QuantumState.parse("3p"))
        assert all(ratio == 0.0 for ratio in report.ratios.values())
        assert report.trusted and report.high_confidence

    def test_weak_screening_trusted(self):
        report = convergence_report(PotentialParams(a=2.0, b=-10.0, delta=0.001), QuantumState.parse("1s"))
        assert report.trusted and report.high_confidence
        assert report.e1_ratio == pytest.approx(1.25e-6 / 36.0, rel=1e-10)

    def test_strong_screening_flags_outer_shell(self, shell4_states):
        params = PotentialParams(a=2.0, b=-10.0, delta=0.3)
        flagged = [state.label for state in shell4_states if not convergence_report(params, state).trusted]
        assert flagged == ["4s", "4p", "4d", "4f"]

    def test_shift_ratio(self):
        report = convergence_report(PotentialParams(a=2.0, b=-10.0, delta=0.3), QuantumState.parse("4s"))
        assert report.shift_ratio == pytest.approx(4.0 / 3.0)
        assert set(report.ratios) == {"shift/e0", "e1/e0", "e2/e1", "e3/e2"}

    def test_report_carries_breakdown(self, strong_screening):
        state = QuantumState.parse("2s")
        assert convergence_report(strong_screening, state).breakdown == total_energy(strong_screening, state)

    def test_ratio_definition(self):
        report = convergence_report(PotentialParams(a=2.0, b=-10.0, delta=0.3), QuantumState.parse("1s"))
        breakdown = report.breakdown
        assert report.e2_ratio == pytest.approx(abs(breakdown.e2 / breakdown.e1))
        assert report.e3_ratio == pytest.approx(abs(breakdown.e3 / breakdown.e2))
        assert not math.isinf(report.e3_ratio)
