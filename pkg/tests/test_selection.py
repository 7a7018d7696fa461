"""
Tests for mortality models, the normalized selection M and assumption checks.
"""
import numpy as np
import pytest

from infsim.core.grid import make_grid
from infsim.core.profiles import evolve_reference
from infsim.core.selection import (
    SelectionKind,
    SelectionModel,
    check_assumptions,
    convexity_onset,
    critical_points,
    eval_dM,
    eval_M,
    eval_m,
    excess,
    stationary_q_star,
    taylor_coefficients,
)
from infsim.errors import ConfigurationError, UnsupportedOrderError


@pytest.mark.unit
class TestModels:
    """Construction of the built-in families."""

    def test_quadratic(self):
        model = SelectionModel.quadratic(2.0, z0=1.0, m_min=0.5)
        assert model.kind is SelectionKind.QUADRATIC
        assert eval_m(model, 1.0) == pytest.approx(0.5)
        assert eval_m(model, 3.0) == pytest.approx(4.5)
        assert eval_m(model, 3.0, 1) == pytest.approx(4.0)
        assert eval_m(model, 3.0, 2) == pytest.approx(2.0)
        assert eval_m(model, 3.0, 3) == 0.0

    def test_double_well(self):
        model = SelectionModel.double_well(1.0, 0.5, 0.2)
        assert eval_m(model, 1.0) == pytest.approx(0.7)
        assert eval_m(model, -1.0) == pytest.approx(-0.3)
        assert eval_m(model, 0.0) == pytest.approx(1.2)

    def test_polynomial_ascending(self):
        model = SelectionModel.polynomial([1.0, 0.0, 2.0])
        assert eval_m(model, 2.0) == pytest.approx(9.0)
        assert model.degree == 2

    def test_constant_polynomial(self):
        model = SelectionModel.polynomial([1.0])
        assert eval_m(model, np.array([-3.0, 0.0, 3.0])) == pytest.approx([1.0, 1.0, 1.0])

    def test_kind_from_string(self):
        model = SelectionModel("quadratic", (1.0,))
        assert model.kind is SelectionKind.QUADRATIC
        assert "quadratic" in model.description

    @pytest.mark.parametrize(
        "kind, coeffs",
        [
            ("quadratic", (0.0,)),
            ("quadratic", (1.0, 2.0, 3.0)),
            ("double_well", (0.0, 1.0, 0.0)),
            ("double_well", (1.0, 1.0)),
            ("polynomial", (0.0, 1.0)),
            ("polynomial", (1.0, 0.0, -1.0)),
            ("polynomial", (1.0,) + (0.0,) * 9 + (1.0,)),
        ],
    )
    def test_invalid(self, kind, coeffs):
        with pytest.raises(ConfigurationError):
            SelectionModel(kind, coeffs)

    def test_derivative_order_limit(self):
        with pytest.raises(UnsupportedOrderError):
            eval_m(SelectionModel.quadratic(), 0.0, 6)

    def test_shifted_and_translated(self):
        model = SelectionModel.quadratic(1.0)
        assert eval_m(model.shifted(0.5), 0.0) == pytest.approx(0.5)
        assert eval_m(model.translated(1.0), 1.0) == pytest.approx(0.0)
        assert eval_m(model.translated(1.0), 0.0) == pytest.approx(0.5)


@pytest.mark.unit
class TestNormalizedSelection:
    """M = 1 + m - m(z*) - m'(z*)(z - z*)."""

    def test_unit_at_center(self):
        model = SelectionModel.double_well(1.0, 0.3)
        for zs in (-0.7, 0.0, 1.2):
            assert eval_M(model, zs, zs) == pytest.approx(1.0, abs=1e-14)
            assert eval_dM(model, zs, zs, 1) == pytest.approx(0.0, abs=1e-14)

    def test_quadratic_closed_form(self):
        model = SelectionModel.quadratic(1.0)
        z = np.linspace(-3.0, 3.0, 7)
        assert np.allclose(eval_M(model, 0.5, z), 1.0 + (z - 0.5) ** 2 / 2.0)

    def test_taylor_coefficients(self):
        coef = taylor_coefficients(SelectionModel.quadratic(1.0), 1.0)
        assert np.allclose(coef, [0.5, 1.0, 0.5])

    def test_excess_small_argument(self):
        """Tiny offsets keep full relative precision."""
        value = excess(SelectionModel.quadratic(1.0), 1.0, 1e-10)
        assert value == pytest.approx(5e-21, rel=1e-12)

    def test_higher_derivatives_of_M(self):
        model = SelectionModel.double_well(1.0, 0.0)
        assert eval_dM(model, 0.3, 0.8, 2) == pytest.approx(eval_m(model, 0.8, 2))


@pytest.mark.unit
class TestCriticalPoints:
    """Minima and maxima of m."""

    def test_symmetric_double_well(self):
        crit = critical_points(SelectionModel.double_well(1.0, 0.0), -2.0, 2.0)
        assert crit["minima"] == pytest.approx([-1.0, 1.0], abs=1e-9)
        assert crit["maxima"] == pytest.approx([0.0], abs=1e-9)

    def test_window_filters(self):
        crit = critical_points(SelectionModel.double_well(1.0, 0.0), 0.5, 2.0)
        assert crit["minima"] == pytest.approx([1.0], abs=1e-9)
        assert crit["maxima"] == []

    def test_stationary_q_star(self):
        """m'''/(2 m'') at the right well of (z^2 - 1)^2 is 24 / 16."""
        assert stationary_q_star(SelectionModel.double_well(1.0, 0.0), 1.0) == pytest.approx(1.5)


@pytest.mark.unit
class TestAssumptions:
    """Runtime checks of the structural assumptions."""

    def test_quadratic_passes(self):
        model = SelectionModel.quadratic(1.0)
        traj = evolve_reference(model, 1.0, t_end=2.0)
        report = check_assumptions(model, traj, make_grid(-6.0, 6.0, 1024), 0.4)
        assert report.all_passed
        assert report.inf_M == pytest.approx(1.0, abs=1e-4)
        assert report.a_estimate < 0.5
        assert all(np.isfinite(v) for v in report.weighted_ratio_sup.values())
        assert any("derivative ratio" in n for n in report.notes)

    def test_deep_double_well_fails_positivity(self):
        """A deeper well on the far side makes M negative; the check reports it without raising."""
        model = SelectionModel.double_well(2.0, 1.0, 0.0)
        traj = evolve_reference(model, 1.0, t_end=2.0)
        report = check_assumptions(model, traj, make_grid(-3.0, 3.0, 1024), 0.4)
        assert not report.passed["cond_gamma"]
        assert not report.passed["decay_gamma"]
        assert report.inf_M < 0
        assert "cond_gamma: FAILED" in report.summary_lines()

    def test_rejects_alpha(self):
        model = SelectionModel.quadratic(1.0)
        traj = evolve_reference(model, 0.0, t_end=0.1)
        with pytest.raises(ConfigurationError):
            check_assumptions(model, traj, make_grid(-4.0, 4.0, 256), 0.5)

    def test_convexity_onset(self):
        model = SelectionModel.quadratic(1.0)
        traj = evolve_reference(model, 1.0, t_end=1.0)
        assert convexity_onset(model, traj) == (0.0, 0.5)

    def test_convexity_onset_on_a_maximum(self):
        """Sitting on the barrier of a symmetric double well gives no onset."""
        model = SelectionModel.double_well(1.0, 0.0)
        traj = evolve_reference(model, 0.0, t_end=1.0)
        assert convexity_onset(model, traj) is None
