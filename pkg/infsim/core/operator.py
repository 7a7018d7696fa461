"""
The infinitesimal mixing operator B_eps, the residual functional I_eps, the
difference operators D_eps / D*_eps and the linearized operator T.

B_eps(f)(z) = iint G_eps(z - (z1+z2)/2) f(z1) f(z2) / |f|_1 dz1 dz2 reduces to
G_{eps/sqrt2} * h with h(u) = 2 (f*f)(2u) / |f|_1. The self-convolution lives
on the half lattice u_k = z_min + k*h/2, k = 0..2n-2, and the output is read
back at the even half-lattice points u_{2i} = z_i.
"""

import math
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import fft as sp_fft

from infsim.core.grid import interpolate, point_derivative
from infsim.core.quadrature import (
    QuadratureRule1D,
    QuadratureRule2D,
    make_rule,
    make_rule_1d,
)
from infsim.core.selection import SelectionModel, eval_M
from infsim.errors import ConfigurationError, DegenerateDensityError, PinningViolationError
from infsim.models.grid import Field
from infsim.observability.logging import get_logger

logger = get_logger(__name__)

# Coarsest spacing (in units of eps) for which B_eps is considered resolved.
RESOLUTION_RATIO = 0.25

PIN_TOLERANCE = 1e-6


class Backend(str, Enum):
    DIRECT = "direct"
    FFT = "fft"


def _prepare(f: Field, eps: float):
    if not eps > 0:
        raise ConfigurationError(f"eps must be positive, got {eps}", config_key="epsilon")
    values = np.nan_to_num(f.values, nan=0.0)
    h = f.grid.h
    mass = float(h * np.sum(values))
    if not mass > 0 or not math.isfinite(mass):
        raise DegenerateDensityError(mass)
    return values, h, mass


def _finish(f: Field, out: np.ndarray, eps: float) -> Field:
    result = Field(f.grid, out, notes=f.notes)
    note = f"under-resolved: h={f.grid.h:.3g} > eps/4={eps / 4:.3g}"
    if f.grid.h > RESOLUTION_RATIO * eps and note not in result.notes:
        logger.debug("Mixing operator under-resolved", h=f.grid.h, eps=eps)
        result = result.with_note(note)
    return result


def apply_B_direct(f: Field, eps: float) -> Field:
    """B_eps(f) by direct summation on the half lattice."""
    values, h, mass = _prepare(f, eps)
    n = values.size
    c = h * np.convolve(values, values)

    # Kernel G_{eps/sqrt2} sampled at half-lattice offsets d*h/2, |d| <= 2n-2.
    d = np.arange(-(2 * n - 2), 2 * n - 1)
    x = d * (h / 2.0)
    kernel = np.exp(-(x**2) / eps**2) / (eps * math.sqrt(math.pi))

    full = np.convolve(c, kernel)
    out = full[2 * np.arange(n) + 2 * n - 2] * h / mass
    return _finish(f, out, eps)


@lru_cache(maxsize=64)
def _gaussian_symbol(size: int, spacing: float, eps: float) -> np.ndarray:
    omega = 2.0 * math.pi * sp_fft.rfftfreq(size, d=spacing)
    symbol = np.exp(-(eps**2) * omega**2 / 4.0) / spacing
    symbol.setflags(write=False)
    return symbol


def apply_B_fft(f: Field, eps: float) -> Field:
    """
    B_eps(f) through the Fourier symbol exp(-eps^2 xi^2 / 4) of G_{eps/sqrt2}.

    The self-convolution is zero-padded to 2n and the half-lattice signal to 4n,
    which keeps the circular wrap far outside the grid window.
    """
    values, h, mass = _prepare(f, eps)
    n = values.size
    spec = sp_fft.rfft(values, 2 * n)
    c = h * sp_fft.irfft(spec * spec, 2 * n)[: 2 * n - 1]

    size = 4 * n
    spacing = h / 2.0
    smoothed = sp_fft.irfft(
        sp_fft.rfft(c * h / mass, size) * _gaussian_symbol(size, spacing, float(eps)), size
    )
    return _finish(f, smoothed[0 : 2 * n : 2], eps)


def apply_B(f: Field, eps: float, backend: str = Backend.FFT) -> Field:
    if Backend(backend) is Backend.DIRECT:
        return apply_B_direct(f, eps)
    return apply_B_fft(f, eps)


def diff_D(V: Callable, eps: float, z, z_star: float, y1, y2):
    """D_eps(V) = V(zbar) - V(zbar + eps y1)/2 - V(zbar + eps y2)/2."""
    zbar = 0.5 * (np.asarray(z, dtype=float) + z_star)
    return V(zbar) - 0.5 * V(zbar + eps * np.asarray(y1)) - 0.5 * V(zbar + eps * np.asarray(y2))


def diff_D_star(V: Callable, eps: float, z_star: float, y):
    """D*_eps(V) = V(z*) - V(z* + eps y)."""
    return V(z_star) - V(z_star + eps * np.asarray(y))


def check_pinned(V: Field, z_star: float, tolerance: float = PIN_TOLERANCE):
    """Raise PinningViolationError unless V(z*) and V'(z*) vanish."""
    h = V.grid.h
    offsets = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    samples = interpolate(V, z_star + offsets * h)
    value = float(samples[2])
    slope = float(np.dot([1.0, -8.0, 0.0, 8.0, -1.0], samples) / (12.0 * h))
    if abs(value) > tolerance or abs(slope) > tolerance:
        raise PinningViolationError(value, slope, tolerance)


def eval_I_eps(
    q: float,
    V: Field,
    eps: float,
    z_star: float,
    z: float,
    rule: Optional[QuadratureRule2D] = None,
    rule_1d: Optional[QuadratureRule1D] = None,
    check_pinning: bool = True,
) -> float:
    """
    I_eps(q, V) at trait z: ratio of the exp(-Q)-weighted mean of
    exp(-eps q (y1+y2) + 2 D_eps(V)) to the normal mean of
    exp(-eps q y + D*_eps(V)). Off-lattice values of V are interpolated.
    """
    rule = rule or make_rule()
    rule_1d = rule_1d or make_rule_1d(rule.order)
    if check_pinning:
        check_pinned(V, z_star)

    def sample(x):
        return interpolate(V, x)

    num_exponent = -eps * q * (rule.y1 + rule.y2) + 2.0 * diff_D(
        sample, eps, z, z_star, rule.y1, rule.y2
    )
    den_exponent = -eps * q * rule_1d.nodes + diff_D_star(sample, eps, z_star, rule_1d.nodes)
    return rule.integrate(np.exp(num_exponent)) / rule_1d.integrate(np.exp(den_exponent))


def apply_T(R: Field, model: SelectionModel, z_star: float) -> Field:
    """T(R)(z) = M(z) (2 R(zbar) - R(z) - R(z*)) on the support of R."""
    z = R.defined_points
    zbar = 0.5 * (z + z_star)
    r_star = float(interpolate(R, np.array([z_star]))[0])
    values = np.full(R.grid.n, np.nan)
    i0, i1 = R.support
    values[i0:i1] = eval_M(model, z_star, z) * (2.0 * interpolate(R, zbar) - R.defined - r_star)
    return R.with_values(values)


def apply_T_callable(R: Callable, model: SelectionModel, z_star: float) -> Callable:
    """T applied to an analytic function; returns a callable."""

    def transformed(z):
        z = np.asarray(z, dtype=float)
        return eval_M(model, z_star, z) * (2.0 * R(0.5 * (z + z_star)) - R(z) - R(z_star))

    return transformed


def spectral_check_T(model: SelectionModel, z_star: float, k: int, step: float = 1e-3) -> float:
    """
    k-th derivative at z* of T((z - z*)^k), divided by k!. For the dual basis
    this is the eigenvalue 2^(1-k) - 1 (and 0 for k = 0).
    """
    if not 0 <= k <= 3:
        raise ConfigurationError(f"spectral check order must be in 0..3, got {k}")

    def monomial(z):
        return (np.asarray(z, dtype=float) - z_star) ** k

    transformed = apply_T_callable(monomial, model, z_star)
    return point_derivative(transformed, z_star, k, step=step) / math.factorial(k)
