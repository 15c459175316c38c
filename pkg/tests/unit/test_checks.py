"""
Unit tests for the invariant suite behind the ``check`` command.

Tests cover:
- CheckResult bookkeeping
- Randomized parameter generation
- Each analytic check passing on the current engine
- Monte-Carlo concordance of moments and SNR
- The full suite at reduced Monte-Carlo size
"""
import numpy as np
import pytest

from app.models.schemas import ProtocolParams
from app.services.checks import (
    CheckResult,
    check_boundary_curve,
    check_clone_table,
    check_commutator_suite,
    check_loss_coefficients,
    check_mc_concordance,
    check_mc_snr_concordance,
    check_no_cloning_threshold,
    check_quantum_fidelity_grid,
    check_snr_identities,
    random_params,
    run_invariant_suite,
)


# ============================================================================
# CHECK RESULT TESTS
# ============================================================================

class TestCheckResult:
    """Tests for CheckResult."""

    def test_close_values_pass(self):
        result = CheckResult("demo")
        result.expect_close("F", 0.8 + 1e-14, 0.8)
        assert result.passed
        assert result.checked == 1

    def test_violation_recorded(self):
        """A miss is recorded with both values."""
        result = CheckResult("demo")
        result.expect_close("F", 0.7, 0.8)
        result.expect("flag", False)
        assert not result.passed
        assert result.checked == 2
        assert result.violations[0].startswith("F: got 0.7")
        assert result.violations[1] == "flag"

    def test_nan_is_a_violation(self):
        result = CheckResult("demo")
        result.expect_close("F", float("nan"), 0.8)
        assert not result.passed


class TestRandomParams:
    """Tests for random_params."""

    def test_draws_are_valid_and_varied(self):
        """Draws cover plain, lossy and cloning configurations."""
        rng = np.random.default_rng(0)
        draws = [random_params(rng) for _ in range(200)]
        assert all(isinstance(p, ProtocolParams) for p in draws)
        assert any(p.M is not None for p in draws)
        assert any(p.eta < 1.0 for p in draws)
        assert any(p.swap_epr_halves for p in draws)

    def test_reproducible(self):
        a = [random_params(np.random.default_rng(5)) for _ in range(3)]
        b = [random_params(np.random.default_rng(5)) for _ in range(3)]
        assert a == b


# ============================================================================
# ANALYTIC CHECK TESTS
# ============================================================================

class TestAnalyticChecks:
    """Each analytic check passes on the current engine."""

    @pytest.mark.parametrize("check", [
        check_boundary_curve,
        check_quantum_fidelity_grid,
        check_clone_table,
        check_no_cloning_threshold,
        check_loss_coefficients,
        check_snr_identities,
    ])
    def test_check_passes(self, check):
        result = check()
        assert result.passed, result.violations
        assert result.checked > 0

    def test_commutator_suite(self):
        """Randomized circuits keep canonical commutators."""
        result = check_commutator_suite(100, seed=1)
        assert result.passed, result.violations
        assert result.checked == 100

    def test_clone_table_covers_squeezed_out1(self):
        """out1 is compared with its closed form at r=0 and r=0.5 for every M."""
        result = check_clone_table()
        assert result.passed, result.violations
        assert result.checked == 81


# ============================================================================
# MONTE-CARLO CHECK TESTS
# ============================================================================

class TestMonteCarloChecks:
    """Monte-Carlo checks at a reduced shot count."""

    def test_concordance_covers_quantum_grid(self):
        """27 grid points, 6 lossy cases and one cloner, plus the rerun comparison."""
        result = check_mc_concordance(40_000, seed=3, sigmas=5.0)
        assert result.passed, result.violations
        assert result.checked == 33 * 10 + 20 + 1

    def test_snr_concordance(self):
        """Sampled SNR matches the analytic value at r=0 and r=1."""
        result = check_mc_snr_concordance(40_000, seed=3, sigmas=5.0)
        assert result.passed, result.violations
        assert result.checked == 2 * 9 * 2


# ============================================================================
# FULL SUITE TESTS
# ============================================================================

class TestInvariantSuite:
    """Tests for run_invariant_suite."""

    def test_suite_passes(self, small_check_settings):
        """Every check passes with a reduced shot count."""
        results = run_invariant_suite(small_check_settings)
        assert len(results) == 9
        failed = {r.name: r.violations for r in results if not r.passed}
        assert not failed
