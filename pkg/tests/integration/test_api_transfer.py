"""
Integration tests for the transfer and sweep commands.

Tests cover:
- sqt transfer: fidelity report, circuit listing, CSV table, exit codes
- sqt sweep: CSV grid over R and r, exit codes
"""
import pytest

from app.api.transfer import SWEEP_COLUMNS, TRANSFER_COLUMNS
from app.core.patterns.adapter_facade import read_csv_table


# ============================================================================
# TRANSFER TESTS
# ============================================================================

class TestTransferCommand:
    """Tests for `sqt transfer`."""

    @pytest.mark.parametrize("argv, expected", [
        (["--R", "0.5", "--r", "0"], "out1: F = 0.666667"),
        (["--R", "0", "--r", "0"], "out1: F = 1.000000"),
        (["--R", "0.5", "--sq-db", "3.0103"], "out1: F = 0.800000"),
    ])
    def test_reported_fidelity(self, cli, argv, expected):
        """Known operating points print their closed-form fidelity."""
        result = cli("transfer", *argv)
        assert result.code == 0
        assert expected in result.out

    def test_report_flags(self, cli):
        """The 3 dB point beats both the boundary and 2/3."""
        result = cli("transfer", "--R", "0.5", "--sq-db", "3.0103")
        assert "beats boundary: yes" in result.out
        assert "beats no-cloning: yes" in result.out
        assert "unity gain: yes" in result.out

    def test_manual_gain_uses_extended_formula(self, cli):
        result = cli("transfer", "--R", "0.5", "--gain", "0", "--mean", "2,0")
        assert result.code == 0
        assert "unity gain: no" in result.out
        assert "extended formula" in result.out

    def test_show_circuit(self, cli):
        """--show-circuit lists the elements of the built circuit."""
        result = cli("transfer", "--R", "0.5", "--eta", "0.9", "--show-circuit")
        assert result.code == 0
        assert "Circuit: partially disembodied transfer (4 elements)" in result.out
        assert "loss" in result.out

    def test_csv_table(self, cli, tmp_path):
        path = tmp_path / "transfer.csv"
        result = cli("transfer", "--R", "0.5", "--csv", str(path))
        assert result.code == 0
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(TRANSFER_COLUMNS)
        assert [line.split(",")[0] for line in lines[1:]] == ["out1", "out2"]

    def test_full_reflection_is_domain_error(self, cli):
        """R=1 with the cancellation gain exits 3 and points to the limit."""
        result = cli("transfer", "--R", "1", "--r", "0.5")
        assert result.code == 3
        assert "teleportation" in result.err

    @pytest.mark.parametrize("argv", [
        ["--R", "0.5", "--bogus"],
        ["--R", "1.5"],
        ["--r", "0.2"],
        ["--R", "0.5", "--r", "0.1", "--sq-db", "3"],
        ["--R", "0.5", "--gain", "high"],
        ["--R", "0.5", "--mean", "1"],
    ])
    def test_usage_errors(self, cli, argv):
        """Invalid or missing flags exit 2."""
        assert cli("transfer", *argv).code == 2

    def test_no_command(self, cli):
        assert cli().code == 2


# ============================================================================
# SWEEP TESTS
# ============================================================================

class TestSweepCommand:
    """Tests for `sqt sweep`."""

    def test_boundary_grid(self, cli, tmp_path):
        """At r=0 every row sits on the boundary 1/(R+1)."""
        path = tmp_path / "sweep.csv"
        result = cli("sweep", "--R-grid", "0:0.9:10", "--r-list", "0", "--csv", str(path))
        assert result.code == 0
        assert f"Wrote 10 rows to {path}" in result.out

        header, rows = read_csv_table(str(path))
        assert header == SWEEP_COLUMNS
        for row in rows:
            assert row["F_out1"] == pytest.approx(1 / (row["R"] + 1), abs=1e-12)
            assert row["F_boundary"] == pytest.approx(1 / (row["R"] + 1), abs=1e-12)

    def test_grid_times_squeezing_list(self, cli, tmp_path):
        """Rows cover every (R, r) combination, grouped by r."""
        path = tmp_path / "sweep.csv"
        result = cli("sweep", "--R-grid", "0.1:0.5:5", "--r-list", "0,0.5", "--csv", str(path))
        assert result.code == 0
        _, rows = read_csv_table(str(path))
        assert len(rows) == 10
        assert [row["r"] for row in rows] == [0.0] * 5 + [0.5] * 5
        assert all(row["F_out1"] > row["F_boundary"] for row in rows[5:])

    def test_loss_column(self, cli, tmp_path):
        path = tmp_path / "sweep.csv"
        cli("sweep", "--R-grid", "0.2:0.8:3", "--eta", "0.8", "--gain", "loss-comp", "--csv", str(path))
        _, rows = read_csv_table(str(path))
        assert {row["eta"] for row in rows} == {0.8}

    def test_unwritable_destination(self, cli, tmp_path):
        """A CSV path in a missing directory exits 4."""
        result = cli("sweep", "--R-grid", "0:0.5:3", "--csv", str(tmp_path / "missing" / "s.csv"))
        assert result.code == 4

    def test_csv_required(self, cli):
        assert cli("sweep", "--R-grid", "0:0.5:3").code == 2

    def test_grid_reaching_one(self, cli, tmp_path):
        """R=1 in the grid has no cancellation gain."""
        result = cli("sweep", "--R-grid", "0.5:1:2", "--csv", str(tmp_path / "s.csv"))
        assert result.code == 3
