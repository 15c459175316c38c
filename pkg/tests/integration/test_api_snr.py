"""
Integration tests for the snr command.

Tests cover:
- sqt snr: first-principles SNR and comparison with the reference closed form
- Optional Monte-Carlo estimate
- Usage errors
"""


class TestSnrCommand:
    """Tests for `sqt snr`."""

    def test_direct_transmission(self, cli):
        """R=0, r=0 leaks the full input variance."""
        result = cli("snr", "--R", "0", "--r", "0", "--vin", "4,4")
        assert result.code == 0
        assert "X = 4.000000   Y = 4.000000" in result.out

    def test_agrees_without_squeezing(self, cli):
        result = cli("snr", "--R", "0.3", "--r", "0")
        assert result.code == 0
        assert "agrees with the reference closed form" in result.out

    def test_divergence_is_reported(self, cli):
        """R=0.5, r=1 makes the reference denominator negative."""
        result = cli("snr", "--R", "0.5", "--r", "1")
        assert result.code == 0
        assert "note: reference closed form diverges" in result.out
        assert "non-positive denominator" in result.out

    def test_monte_carlo_estimate(self, cli):
        """--shots adds a Monte-Carlo line with standard errors."""
        result = cli("snr", "--R", "0.5", "--r", "0.5", "--shots", "20000", "--seed", "3")
        assert result.code == 0
        assert "SNR (analytic)" in result.out
        assert "SNR (monte-carlo)" in result.out
        assert "stderr" in result.out

    def test_seed_out_of_range(self, cli):
        assert cli("snr", "--R", "0.5", "--shots", "100", "--seed", str(2**130)).code == 2

    def test_non_positive_variance(self, cli):
        assert cli("snr", "--R", "0.5", "--vin", "0,1").code == 2

    def test_full_reflection(self, cli):
        assert cli("snr", "--R", "1").code == 3
