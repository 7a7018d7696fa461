"""
Trait-space discretization: grid construction, finite-difference derivatives,
cubic interpolation at off-lattice points and the weight phi_alpha.
"""

import math
from typing import Sequence

import numpy as np

from infsim.errors import ConfigurationError, UnsupportedOrderError, WindowOverflowError
from infsim.models.grid import Field, Grid

# Upper bound on the weight exponent of the F-space norm.
ALPHA_MAX = 2.0 - math.log(3.0) / math.log(2.0)

# Forward one-sided stencils of second-order accuracy, indexed by derivative order.
_FORWARD = {
    1: np.array([-3.0, 4.0, -1.0]) / 2.0,
    2: np.array([2.0, -5.0, 4.0, -1.0]),
    3: np.array([-5.0, 18.0, -24.0, 14.0, -3.0]) / 2.0,
}

# Points taken by the one-sided stencil at each end.
_EDGE = {1: 1, 2: 1, 3: 2}


def make_grid(z_min: float, z_max: float, n: int) -> Grid:
    """Build a uniform grid; raises ConfigurationError on invalid bounds or size."""
    return Grid(float(z_min), float(z_max), int(n))


def derivative(f: Field, k: int) -> Field:
    """
    k-th derivative (k in 1..3) by second-order central differences, with
    one-sided stencils of the same order at the ends of the field's support.
    """
    if k not in _FORWARD:
        raise UnsupportedOrderError(k, "1, 2, 3")
    h = f.grid.h
    v = f.defined
    if v.size < len(_FORWARD[k]) + 1:
        raise ConfigurationError(
            f"Support of {v.size} points is too short for a derivative of order {k}"
        )

    out = np.empty_like(v)
    if k == 1:
        out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    elif k == 2:
        out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
    else:
        out[2:-2] = (-v[:-4] + 2.0 * v[1:-3] - 2.0 * v[3:-1] + v[4:]) / (2.0 * h**3)

    w = _FORWARD[k]
    width = len(w)
    sign = (-1.0) ** k
    for i in range(_EDGE[k]):
        out[i] = np.dot(w, v[i : i + width]) / h**k
        j = v.size - 1 - i
        out[j] = sign * np.dot(w, v[j - width + 1 : j + 1][::-1]) / h**k

    values = np.full(f.grid.n, np.nan)
    i0, i1 = f.support
    values[i0:i1] = out
    return f.with_values(values)


def _lagrange_weights(t: np.ndarray) -> np.ndarray:
    # nodes at 0, 1, 2, 3
    return np.stack(
        [
            -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
            t * (t - 2.0) * (t - 3.0) / 2.0,
            -t * (t - 1.0) * (t - 3.0) / 2.0,
            t * (t - 1.0) * (t - 2.0) / 6.0,
        ]
    )


def interpolate(f: Field, x) -> np.ndarray:
    """
    Evaluate f at arbitrary points by 4-point Lagrange (cubic) interpolation.

    Points must lie inside the field's support; otherwise WindowOverflowError
    reports how far the window has to be extended.
    """
    x = np.asarray(x, dtype=float)
    g = f.grid
    i0, i1 = f.support
    if i1 - i0 < 4:
        raise ConfigurationError("Interpolation needs at least 4 defined points")
    lo, hi = g.points[i0], g.points[i1 - 1]
    slack = 1e-9 * g.h
    below = lo - np.min(x) if x.size else 0.0
    above = np.max(x) - hi if x.size else 0.0
    if below > slack or above > slack:
        raise WindowOverflowError(max(below, above), lo, hi)

    s = (x - g.z_min) / g.h
    base = np.clip(np.floor(s).astype(int) - 1, i0, i1 - 4)
    w = _lagrange_weights(s - base)
    v = f.values
    return w[0] * v[base] + w[1] * v[base + 1] + w[2] * v[base + 2] + w[3] * v[base + 3]


def fd_weights(offsets: Sequence[float], k: int) -> np.ndarray:
    """
    Finite-difference weights for the k-th derivative on the given offsets
    (in units of the step), exact for polynomials up to degree len(offsets)-1.
    """
    offsets = np.asarray(offsets, dtype=float)
    n = offsets.size
    if k >= n:
        raise UnsupportedOrderError(k, f"< {n} for a {n}-point stencil")
    powers = np.arange(n)
    factorials = np.array([math.factorial(j) for j in powers], dtype=float)
    A = offsets[None, :] ** powers[:, None] / factorials[:, None]
    b = np.zeros(n)
    b[k] = 1.0
    return np.linalg.solve(A, b)


def point_derivative(fn, z0: float, k: int, step: float = 1e-3, half_width: int = 4) -> float:
    """k-th derivative of a callable at z0 with a centered high-order stencil."""
    offsets = np.arange(-half_width, half_width + 1, dtype=float)
    weights = fd_weights(offsets, k)
    samples = np.asarray(fn(z0 + offsets * step), dtype=float)
    return float(np.dot(weights, samples) / step**k)


def check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < ALPHA_MAX:
        raise ConfigurationError(
            f"alpha={alpha} outside the admissible range (0, {ALPHA_MAX:.5f})",
            config_key="alpha",
        )
    return float(alpha)


def weight_phi(g: Grid, z_star: float, alpha: float) -> Field:
    """The weight (1 + |z - z*|)^alpha sampled on g."""
    check_alpha(alpha)
    return Field(g, (1.0 + np.abs(g.points - z_star)) ** alpha)
