"""Unit tests for the exact mass laws and the reference-constant workflow."""

import math

import pytest

from src.exceptions import ConfigurationError, DomainError, OutputError
from src.services.oracles import (
    DRIFT_TOLERANCE,
    MIN_FINE_CELLS,
    ReferenceConstant,
    compute_reference_constants,
    exact_v_mass_bound,
    exact_w_mass,
    exact_w_mass_bound,
    fine_quadrature,
    load_reference_constants,
    reference_drift,
)


class TestMassLaws:
    """Test the closed-form mass evolution."""

    def test_w_mass_at_zero(self):
        """Test the law starts at int w0."""
        assert exact_w_mass(0.0, 3.0, 1.0) == 1.0

    def test_w_mass_relaxes_to_u_mass(self):
        """Test int w approaches int u0."""
        assert exact_w_mass(50.0, 3.0, 1.0) == pytest.approx(3.0, rel=1e-15)

    def test_w_mass_midway(self):
        """Test e^-t w0 + (1 - e^-t) u0 at t = 1."""
        expected = math.exp(-1.0) * 1.0 + (1.0 - math.exp(-1.0)) * 3.0
        assert exact_w_mass(1.0, 3.0, 1.0) == pytest.approx(expected, rel=1e-15)

    def test_negative_time(self):
        """Test t < 0 is outside the domain."""
        with pytest.raises(DomainError):
            exact_w_mass(-0.1, 1.0, 1.0)

    def test_bounds(self):
        """Test the envelopes take the maximum."""
        assert exact_v_mass_bound((1.0, 4.0, 2.0)) == 4.0
        assert exact_w_mass_bound(1.0, 2.0) == 2.0


class TestFineQuadrature:
    """Test the independent midpoint quadrature."""

    def test_refuses_coarse_grid(self):
        """Test fewer than 2^16 cells is refused."""
        with pytest.raises(ConfigurationError):
            fine_quadrature(lambda r: r, 5, cells=MIN_FINE_CELLS - 1)

    def test_ball_volume(self):
        """Test |B_1| in R^5."""
        value = fine_quadrature(lambda r: r * 0.0 + 1.0, 5)
        assert value == pytest.approx(8.0 * math.pi ** 2 / 15.0, rel=1e-9)

    def test_r_squared(self):
        """Test int r^2 = omega_5 / 7."""
        omega = 8.0 * math.pi ** 2 / 3.0
        assert fine_quadrature(lambda r: r ** 2, 5) == pytest.approx(omega / 7.0, rel=1e-9)


class TestReferenceConstants:
    """Test the checked-in constants file."""

    def test_load(self):
        """Test the file parses and carries provenance."""
        constants = load_reference_constants()

        assert constants["omega_5"].value == pytest.approx(8.0 * math.pi ** 2 / 3.0, rel=1e-13)
        assert constants["ball_volume_5"].provenance.startswith("fine_quadrature")

    def test_no_drift(self):
        """Test recomputed constants match the file."""
        stored = load_reference_constants()
        drift = reference_drift(stored, compute_reference_constants(5))

        assert set(drift) == set(stored)
        assert max(drift.values()) <= DRIFT_TOLERANCE

    def test_missing_name_reports_infinite_drift(self):
        """Test names absent from the recomputation drift by inf."""
        stored = {"x": ReferenceConstant("x", 1.0, "test")}
        assert reference_drift(stored, {})["x"] == math.inf

    def test_round_trip_line(self, tmp_path):
        """Test a written record loads back."""
        path = tmp_path / "constants.txt"
        record = ReferenceConstant("phi_l2sq_5", 0.5, "fine_quadrature(cells=65536)")
        path.write_text("# header\n\n" + record.to_line() + "\n", encoding="utf-8")

        assert load_reference_constants(path)["phi_l2sq_5"] == record

    def test_malformed_record(self, tmp_path):
        """Test a record without provenance is refused."""
        path = tmp_path / "constants.txt"
        path.write_text("omega_5 26.3\n", encoding="utf-8")

        with pytest.raises(OutputError) as exc_info:
            load_reference_constants(path)
        assert exc_info.value.details["line"] == 1

    def test_non_numeric_value(self, tmp_path):
        """Test a non-numeric value is refused."""
        path = tmp_path / "constants.txt"
        path.write_text("omega_5 abc closed_form\n", encoding="utf-8")

        with pytest.raises(OutputError):
            load_reference_constants(path)

    def test_missing_file(self, tmp_path):
        """Test an unreadable path is an output error."""
        with pytest.raises(OutputError):
            load_reference_constants(tmp_path / "absent.txt")
