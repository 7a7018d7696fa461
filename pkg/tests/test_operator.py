"""
Tests for the mixing operator, I_eps and the linearized operator T.
"""
import math

import numpy as np
import pytest

from infsim.core.grid import make_grid
from infsim.core.operator import (
    Backend,
    apply_B,
    apply_B_direct,
    apply_B_fft,
    apply_T,
    check_pinned,
    diff_D,
    diff_D_star,
    eval_I_eps,
    spectral_check_T,
)
from infsim.core.profiles import v_star_field
from infsim.core.quadrature import make_rule
from infsim.core.selection import SelectionModel, eval_M
from infsim.errors import (
    ConfigurationError,
    DegenerateDensityError,
    PinningViolationError,
    WindowOverflowError,
)
from infsim.models.grid import Field

EPS = 0.1


def fine_grid(n: int = 1024, eps: float = EPS):
    """Centred grid with h = eps/16."""
    half_width = 0.5 * (n - 1) * eps / 16.0
    return make_grid(-half_width, half_width, n)


def gaussian(g, mu: float, var: float) -> Field:
    return Field(g, np.exp(-((g.points - mu) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var))


def l1(g, a, b) -> float:
    return g.h * float(np.sum(np.abs(a - b)))


def bimodal(g) -> Field:
    """Unequal, unequally wide bumps at -0.5 and 0.4."""
    z = g.points
    return Field(g, 0.3 * np.exp(-((z + 0.5) ** 2) / (2 * EPS**2)) + np.exp(-((z - 0.4) ** 2) / (8 * EPS**2)))


@pytest.mark.unit
class TestMixingOperator:
    """B_eps on the half lattice."""

    @pytest.mark.parametrize("backend", [apply_B_direct, apply_B_fft])
    def test_gaussian_fixed_point(self, backend):
        """N(0, eps^2) is invariant."""
        g = fine_grid()
        f = gaussian(g, 0.0, EPS**2)
        assert l1(g, backend(f, EPS).values, f.values) <= 1e-6

    @pytest.mark.parametrize("backend", [apply_B_direct, apply_B_fft])
    def test_off_centre_fixed_point(self, backend):
        """The fixed point moves with its centre, also off the lattice."""
        g = fine_grid()
        f = gaussian(g, 0.3217, EPS**2)
        assert l1(g, backend(f, EPS).values, f.values) <= 1e-6

    def test_backends_agree(self):
        g = fine_grid()
        z = g.points
        f = Field(g, 0.3 * np.exp(-((z + 0.5) ** 2) / (2 * EPS**2)) + np.exp(-((z - 0.4) ** 2) / (8 * EPS**2)))
        a = apply_B_direct(f, EPS).values
        b = apply_B_fft(f, EPS).values
        assert float(np.max(np.abs(a - b)) / np.max(np.abs(a))) <= 1e-8

    def test_variance_halves_plus_kernel(self):
        """Var B(f) = Var f / 2 + eps^2 / 2 and the mean is kept."""
        g = fine_grid()
        f = gaussian(g, 0.2, 4.0 * EPS**2)
        out = apply_B_fft(f, EPS).values
        mass = g.h * float(np.sum(out))
        mean = g.h * float(np.sum(g.points * out)) / mass
        var = g.h * float(np.sum((g.points - mean) ** 2 * out)) / mass
        assert mass == pytest.approx(1.0, abs=1e-10)
        assert mean == pytest.approx(0.2, abs=1e-10)
        assert var == pytest.approx(2.5 * EPS**2, rel=1e-8)

    @pytest.mark.parametrize("backend", [apply_B_direct, apply_B_fft])
    def test_one_cell_translation(self, backend):
        g = fine_grid()
        f = bimodal(g)
        shifted = f.with_values(np.roll(f.values, 1))
        expected = np.roll(backend(f, EPS).values, 1)
        out = backend(shifted, EPS).values
        assert np.allclose(out[2:-2], expected[2:-2], rtol=0.0, atol=1e-12 * np.max(expected))

    @pytest.mark.parametrize("backend", [apply_B_direct, apply_B_fft])
    def test_bimodal_mass_and_variance_excess(self, backend):
        """Mass is kept and the variance excess over eps^2 halves, for skewed input too."""
        g = fine_grid()
        f = bimodal(g)
        out = backend(f, EPS).values

        def moments(values):
            mass = g.h * float(np.sum(values))
            mean = g.h * float(np.sum(g.points * values)) / mass
            var = g.h * float(np.sum((g.points - mean) ** 2 * values)) / mass
            return mass, mean, var

        mass_in, mean_in, var_in = moments(f.values)
        mass_out, mean_out, var_out = moments(out)
        assert mass_out == pytest.approx(mass_in, rel=1e-10)
        assert mean_out == pytest.approx(mean_in, abs=1e-10)
        assert (var_out - EPS**2) / (var_in - EPS**2) == pytest.approx(0.5, rel=1e-7)


    def test_homogeneous_of_degree_one(self):
        g = fine_grid()
        f = gaussian(g, 0.0, 2.0 * EPS**2)
        assert np.allclose(apply_B_fft(f.scaled(3.0), EPS).values, 3.0 * apply_B_fft(f, EPS).values)

    def test_dispatch(self):
        g = fine_grid(256)
        f = gaussian(g, 0.0, EPS**2)
        assert np.allclose(apply_B(f, EPS, "direct").values, apply_B_direct(f, EPS).values)
        assert np.allclose(apply_B(f, EPS, Backend.FFT).values, apply_B_fft(f, EPS).values)

    def test_under_resolved_note(self):
        """A coarse grid is still evaluated but the result carries a note."""
        g = make_grid(-2.0, 2.0, 64)
        out = apply_B_fft(gaussian(g, 0.0, 0.04), EPS)
        assert any(note.startswith("under-resolved") for note in out.notes)
        again = apply_B_fft(out, EPS)
        assert sum(note.startswith("under-resolved") for note in again.notes) == 1

    def test_degenerate_density(self):
        g = fine_grid(256)
        with pytest.raises(DegenerateDensityError):
            apply_B_fft(Field(g, np.zeros(g.n)), EPS)

    def test_rejects_nonpositive_eps(self):
        g = fine_grid(256)
        with pytest.raises(ConfigurationError):
            apply_B_direct(gaussian(g, 0.0, EPS**2), 0.0)


@pytest.mark.unit
class TestDifferenceOperators:
    """D_eps and D*_eps on affine functions."""

    def test_affine_D(self):
        def V(x):
            return 2.0 * np.asarray(x) + 1.0

        value = diff_D(V, 0.1, 0.4, 0.2, 0.5, -1.5)
        assert value == pytest.approx(0.1)

    def test_affine_D_star(self):
        def V(x):
            return 2.0 * np.asarray(x) + 1.0

        assert diff_D_star(V, 0.1, 0.3, 0.5) == pytest.approx(-0.1)


@pytest.mark.unit
class TestResidualFunctional:
    """I_eps identities."""

    @pytest.fixture
    def zero(self):
        g = make_grid(-8.0, 8.0, 4096)
        return Field(g, np.zeros(g.n))

    @pytest.mark.parametrize("eps", [0.5, 0.1, 0.01])
    def test_trivial_value(self, zero, eps):
        assert eval_I_eps(0.0, zero, eps, 0.0, 0.3, make_rule(40)) == pytest.approx(1.0, abs=1e-10)

    def test_linear_tilt_cancels(self, zero):
        """With V = 0 the q-tilts of numerator and denominator are both exp(eps^2 q^2 / 2)."""
        assert eval_I_eps(0.8, zero, 0.2, 0.0, -0.4) == pytest.approx(1.0, abs=1e-12)

    def test_constant_shift(self):
        model = SelectionModel.quadratic(1.0)
        g = make_grid(-8.0, 8.0, 4096)
        V = v_star_field(model, 0.0, g)
        base = eval_I_eps(0.25, V, 0.1, 0.0, 0.5)
        shifted = eval_I_eps(0.25, V.with_values(V.values + 5.0), 0.1, 0.0, 0.5, check_pinning=False)
        assert shifted == pytest.approx(base, abs=1e-12)

    def test_unpinned_field_rejected(self):
        g = make_grid(-8.0, 8.0, 4096)
        V = Field(g, g.points**2 + 0.01 * g.points)
        with pytest.raises(PinningViolationError):
            eval_I_eps(0.0, V, 0.1, 0.0, 0.5)

    def test_window_overflow(self):
        g = make_grid(-1.0, 1.0, 256)
        with pytest.raises(WindowOverflowError):
            eval_I_eps(0.0, Field(g, np.zeros(g.n)), 2.0, 0.0, 0.5)


@pytest.mark.unit
class TestPinning:
    def test_pinned_parabola(self):
        g = make_grid(-1.0, 1.0, 256)
        check_pinned(Field(g, g.points**2), 0.0)

    def test_value_offset(self):
        g = make_grid(-1.0, 1.0, 256)
        with pytest.raises(PinningViolationError) as exc:
            check_pinned(Field(g, g.points**2 + 1e-3), 0.0)
        assert exc.value.value == pytest.approx(1e-3)


@pytest.mark.unit
class TestLinearizedOperator:
    """T(R) = M (2 R(zbar) - R - R(z*))."""

    @pytest.mark.parametrize(
        "model, z_star",
        [
            (SelectionModel.quadratic(1.0), 0.3),
            (SelectionModel.double_well(1.0, 0.2), 0.5),
            (SelectionModel.polynomial([1.0, 0.3, 0.5, 0.0, 0.1]), -0.4),
        ],
    )
    def test_eigenvalues(self, model, z_star):
        for k, target in ((0, 0.0), (1, 0.0), (2, -0.5), (3, -0.75)):
            assert spectral_check_T(model, z_star, k) == pytest.approx(target, abs=1e-6)

    def test_order_out_of_range(self):
        with pytest.raises(ConfigurationError):
            spectral_check_T(SelectionModel.quadratic(), 0.0, 4)

    def test_constants_in_kernel(self):
        g = make_grid(-2.0, 2.0, 256)
        out = apply_T(Field(g, np.full(g.n, 3.0)), SelectionModel.quadratic(), 0.2)
        assert np.allclose(out.values, 0.0, atol=1e-12)

    def test_quadratic_field(self):
        model = SelectionModel.quadratic(1.0)
        g = make_grid(-2.0, 2.0, 256)
        R = Field(g, (g.points - 0.2) ** 2)
        out = apply_T(R, model, 0.2)
        x = g.points - 0.2
        assert np.allclose(out.values, -0.5 * eval_M(model, 0.2, g.points) * x**2, atol=1e-10)
