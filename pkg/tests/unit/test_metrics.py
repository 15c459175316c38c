"""
Unit tests for fidelity, cloning and signal-to-noise metrics.

Tests cover:
- Coherent-state fidelity at unity and non-unity gain
- Classical and cloning boundaries
- Closed-form cloning fidelities against the circuit
- First-principles channel SNR and the reference closed form
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.core.exceptions import DomainError, PhysicalityError
from app.models.schemas import ProtocolParams
from app.services.metrics import (
    asymmetric_clone_fidelities,
    channel_snr,
    channel_snr_closed_form,
    clone_bound,
    clone_fidelities,
    clone_fidelity_closed,
    clone_mode_noise,
    clone_out1_fidelity,
    fidelity_bound_transfer,
    fidelity_coherent,
    gaussian_overlap_fidelity,
    output_fidelities,
    reference_snr_formula,
    protocol_snr,
    transfer_fidelity,
)
from app.services.protocol import build_transfer

THREE_DB = math.log(2) / 2


# ============================================================================
# FIDELITY TESTS
# ============================================================================

class TestFidelityCoherent:
    """Tests for fidelity_coherent and gaussian_overlap_fidelity."""

    def test_identity_channel(self, epr_registry, epr_exprs):
        """The input mode itself has fidelity 1."""
        _, state = epr_registry
        report = fidelity_coherent(epr_exprs["a"], state)
        assert report.F == pytest.approx(1.0)
        assert report.unity_gain
        assert not report.extended_formula

    def test_overlap_formula(self):
        """F = 2/sqrt((1+VX)(1+VY)) without offset."""
        assert gaussian_overlap_fidelity(np.diag([2.0, 3.0]), (0.0, 0.0)) == pytest.approx(2 / math.sqrt(12))

    def test_offset_lowers_fidelity(self):
        """A mean mismatch multiplies by exp(-d^2/(2(1+V)))."""
        F = gaussian_overlap_fidelity(np.eye(2), (1.0, 0.0))
        assert F == pytest.approx(math.exp(-0.25))

    @pytest.mark.parametrize("R", [0.0, 0.1, 0.5, 0.9, 0.99])
    def test_boundary_reached_without_squeezing(self, transfer_factory, R):
        """At r=0, F(out1) equals 1/(R+1)."""
        outputs = transfer_factory(R=R, r=0.0)
        report = output_fidelities(outputs)["out1"]
        assert report.F == pytest.approx(1 / (R + 1), abs=1e-12)
        assert not report.beats_boundary

    def test_three_db_at_half_reflectivity(self, transfer_factory):
        """R=0.5 with e^{-2r}=0.5 gives F = 0.8, above the no-cloning limit."""
        report = output_fidelities(transfer_factory(R=0.5, r=THREE_DB))["out1"]
        assert report.F == pytest.approx(0.8, abs=1e-12)
        assert report.beats_no_cloning
        assert report.beats_boundary

    def test_two_thirds_is_not_beating_no_cloning(self, transfer_factory):
        """F = 2/3 exactly does not count as beating 2/3."""
        report = output_fidelities(transfer_factory(R=0.5, r=0.0))["out1"]
        assert report.F == pytest.approx(2 / 3, abs=1e-12)
        assert report.beats_classical
        assert not report.beats_no_cloning

    def test_non_unity_gain_uses_extended_formula(self, transfer_factory):
        """With g=0 the output mean is off and the mismatch factor applies."""
        outputs = transfer_factory(R=0.5, gain=0.0, input_mean=(2.0, 0.0))
        report = output_fidelities(outputs)["out1"]
        assert not report.unity_gain
        assert report.extended_formula
        assert report.gain_x == pytest.approx(0.5)
        # VX = VY = 0.25 + 0.25 + 0.5 = 1, offset 1
        assert report.F == pytest.approx(math.exp(-0.25), abs=1e-12)

    def test_non_physical_expression_rejected(self, epr_registry, epr_exprs):
        """A non-canonical expression should raise PhysicalityError."""
        _, state = epr_registry
        with pytest.raises(PhysicalityError):
            fidelity_coherent(2.0 * epr_exprs["a"], state)

    @settings(max_examples=25, deadline=None)
    @given(
        R1=st.floats(min_value=0.0, max_value=0.95),
        dR=st.floats(min_value=0.01, max_value=0.04),
        r=st.floats(min_value=0.0, max_value=1.5),
    )
    def test_decreasing_in_reflectivity(self, R1, dR, r):
        """F(out1) decreases with R at fixed r."""
        f = [
            output_fidelities(build_transfer(ProtocolParams(R=R, r=r)))["out1"].F
            for R in (R1, R1 + dR)
        ]
        assert f[0] > f[1]

    @pytest.mark.parametrize("R", [0.2, 0.6])
    def test_increasing_in_squeezing(self, transfer_factory, R):
        """F(out1) increases with r at fixed R > 0."""
        values = [output_fidelities(transfer_factory(R=R, r=r))["out1"].F for r in (0.0, 0.3, 0.9)]
        assert values == sorted(values)
        assert values[0] < values[-1]

    @pytest.mark.parametrize("R", [0.1, 0.5, 0.9])
    @pytest.mark.parametrize("r", [0.1, 0.34657, 1.0])
    def test_quantum_fidelity_formula(self, transfer_factory, R, r):
        """F(out1) = 1/(1 + R e^{-2r})."""
        report = output_fidelities(transfer_factory(R=R, r=r))["out1"]
        assert report.F == pytest.approx(transfer_fidelity(R, r), abs=1e-12)
        assert report.beats_boundary


# ============================================================================
# BOUNDARY TESTS
# ============================================================================

class TestBoundaries:
    """Tests for classical boundaries."""

    @pytest.mark.parametrize("R, expected", [(0.0, 1.0), (1.0, 0.5), (0.5, 2 / 3)])
    def test_transfer_boundary(self, R, expected):
        """fidelity_bound_transfer returns 1/(R+1)."""
        assert fidelity_bound_transfer(R) == pytest.approx(expected)

    def test_transfer_boundary_domain(self):
        """R outside [0, 1] should raise DomainError."""
        with pytest.raises(DomainError):
            fidelity_bound_transfer(1.5)

    @pytest.mark.parametrize("M", range(2, 12))
    def test_clone_bound_range(self, M):
        """M/(2M-1) lies between 1/2 and 2/3."""
        assert 0.5 < clone_bound(M) <= 2 / 3 + 1e-15

    def test_clone_bound_domain(self):
        """M < 2 is not a cloning machine."""
        with pytest.raises(DomainError):
            clone_bound(1)


# ============================================================================
# CLONING TESTS
# ============================================================================

class TestCloneFidelities:
    """Tests for cloning closed forms and circuit agreement."""

    def test_symmetric_two_clones(self):
        """M=2, r=0 gives 2/3 for both outputs."""
        result = clone_fidelities(2, 0.0)
        assert result.F_out1_circuit == pytest.approx(2 / 3, abs=1e-12)
        assert result.F_clones_circuit == pytest.approx([2 / 3], abs=1e-12)

    def test_five_clones(self):
        """M=5, r=0 gives 5/9 per clone."""
        result = clone_fidelities(5, 0.0)
        assert result.F_clones_circuit == pytest.approx([5 / 9] * 4, abs=1e-12)

    def test_asymmetric_pair(self):
        """M=2 with squeezing gives 2/(2+e^{-2r}) and 2/(2+e^{2r})."""
        result = clone_fidelities(2, 0.5)
        f1, f2 = asymmetric_clone_fidelities(0.5)
        assert result.F_out1_circuit == pytest.approx(f1, abs=1e-12)
        assert result.F_clones_circuit[0] == pytest.approx(f2, abs=1e-12)

    def test_out1_closed_form(self):
        """M=3, r=0.5 gives F_out1 = 3/(3 + 2e^{-1})."""
        assert clone_out1_fidelity(3, 0.5) == pytest.approx(3 / (3 + 2 * math.exp(-1)))
        assert clone_fidelities(3, 0.5).F_out1_circuit == pytest.approx(3 / (3 + 2 * math.exp(-1)), abs=1e-12)

    @pytest.mark.parametrize("M", range(2, 9))
    @pytest.mark.parametrize("r", [0.0, 0.1, 0.3466, 1.0])
    def test_circuit_matches_closed_forms(self, M, r):
        """Every circuit fidelity equals its closed form within 1e-12."""
        assert clone_fidelities(M, r).max_abs_difference <= 1e-12

    @pytest.mark.parametrize("M", range(2, 9))
    def test_clone_noise_reductions(self, M):
        """At r=0 the clone closed form reduces to M/(2M-1)."""
        assert clone_fidelity_closed(M, 0.0) == pytest.approx(clone_bound(M))

    def test_clone_noise_for_two_outputs(self):
        """At M=2 the clone noise is e^{2r}."""
        assert clone_mode_noise(2, 0.7) == pytest.approx(math.exp(1.4))


# ============================================================================
# SNR TESTS
# ============================================================================

class TestChannelSnr:
    """Tests for the first-principles eavesdropper SNR."""

    def test_direct_transmission(self):
        """R=0, r=0 with V_in=4 gives SNR 4."""
        report = protocol_snr(ProtocolParams(R=0.0, r=0.0), (4.0, 4.0))
        assert report.snr_x == pytest.approx(4.0, abs=1e-12)
        assert report.snr_y == pytest.approx(4.0, abs=1e-12)
        assert report.noise_referred_to_input == pytest.approx((1.0, 1.0))

    @pytest.mark.parametrize("R", [0.0, 0.3, 0.7, 0.99])
    def test_reference_formula_agrees_without_squeezing(self, R):
        """At r=0 both values equal V_in."""
        report = protocol_snr(ProtocolParams(R=R, r=0.0), (1.0, 1.0))
        assert report.snr_x == pytest.approx(reference_snr_formula(R, 0.0, 1.0), abs=1e-12)
        assert report.agrees_with_reference_formula

    @pytest.mark.parametrize("R", [0.2, 0.5, 0.8])
    def test_closed_form_with_squeezing(self, R):
        """SNR = V_in / (1 + R(cosh 2r - 1))."""
        report = protocol_snr(ProtocolParams(R=R, r=1.0), (2.0, 2.0))
        assert report.snr_x == pytest.approx(channel_snr_closed_form(R, 1.0, 2.0), rel=1e-12)
        assert report.snr_y == pytest.approx(report.snr_x, rel=1e-12)

    def test_reference_formula_disagrees_with_squeezing(self):
        """At r=1, R=0.5 the reference denominator is negative; agreement is reported false."""
        report = protocol_snr(ProtocolParams(R=0.5, r=1.0), (1.0, 1.0))
        assert report.reference_formula_value[0] < 0
        assert report.agrees_with_reference_formula is False
        assert report.snr_x > 0

    def test_strictly_decreasing_in_reflectivity(self):
        """More destroyed information means less leaked information."""
        values = [protocol_snr(ProtocolParams(R=R, r=1.0), (1.0, 1.0)).snr_x for R in (0.0, 0.2, 0.5, 0.8)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_reference_formula_at_full_reflection(self):
        """The reference form is undefined at R=1."""
        assert math.isnan(reference_snr_formula(1.0, 0.5, 1.0))

    def test_channel_snr_without_parameters(self, transfer_factory):
        """Without R and r no reference value is attached."""
        outputs = transfer_factory(R=0.4, r=0.5)
        report = channel_snr(outputs.channel, outputs.state, (1.0, 1.0))
        assert report.reference_formula_value is None
        assert report.agrees_with_reference_formula is None
        assert report.snr_x == pytest.approx(channel_snr_closed_form(0.4, 0.5, 1.0), rel=1e-12)
