"""Weighted derivative norm of the F space for corrector fields."""

from typing import Dict

import numpy as np

from infsim.core.grid import check_alpha, derivative, interpolate
from infsim.core.operator import check_pinned
from infsim.errors import InsufficientSupportError
from infsim.models.grid import Field

PIN_TOLERANCE = 1e-6
EDGE_EXCLUDE = 3
MIN_SIDE_POINTS = 10
REFINEMENT_TOLERANCE = 0.1

# Central stencils with step 2h, as offsets in units of h.
_COARSE = {
    2: (np.array([-2, 0, 2]), np.array([1.0, -2.0, 1.0]) / 4.0),
    3: (np.array([-4, -2, 2, 4]), np.array([-1.0, 2.0, -2.0, 1.0]) / 16.0),
}


def _coarse_derivative(values: np.ndarray, h: float, k: int) -> np.ndarray:
    """k-th central derivative with step 2h; NaN where the stencil does not fit."""
    offsets, weights = _COARSE[k]
    reach = int(offsets.max())
    out = np.full(values.size, np.nan)
    n = values.size
    acc = np.zeros(n - 2 * reach)
    for off, w in zip(offsets, weights):
        acc += w * values[reach + off : n - reach + off]
    out[reach : n - reach] = acc / h**k
    return out


def _refined(W: Field, k: int, j0: int, j1: int) -> np.ndarray:
    """
    |W^(k)| on [j0, j1) where the h and 2h stencils agree to within
    REFINEMENT_TOLERANCE, and 0 elsewhere.
    """
    i0, i1 = W.support
    fine = derivative(W, k).values[j0:j1]
    coarse = _coarse_derivative(np.nan_to_num(W.values, nan=0.0), W.grid.h, k)
    reach = int(_COARSE[k][0].max())
    coarse[: i0 + reach] = np.nan
    coarse[max(i1 - reach, 0) :] = np.nan
    coarse = coarse[j0:j1]
    agree = np.abs(fine - coarse) <= REFINEMENT_TOLERANCE * np.maximum(np.abs(fine), np.abs(coarse))
    return np.where(agree, np.abs(fine), 0.0)


def f_norm_components(
    W: Field, z_star: float, alpha: float, margin: int = EDGE_EXCLUDE
) -> Dict[str, float]:
    """
    The five sups of the F norm, each over the support of W minus `margin`
    points at both ends:

    - d1:   sup |W'|
    - d2:   sup phi |W''|, over points where the h and 2h stencils agree to 10%
    - d3:   sup phi |W'''|, same refinement filter
    - xi:   sup |2 W(zbar) - W(z)|
    - dmid: sup phi |W'(zbar) - W'(z)|

    Pass W restricted to where it is trusted; the filters only reject
    isolated stencil noise.
    """
    check_alpha(alpha)
    g = W.grid
    i0, i1 = W.support
    center = g.nearest_index(z_star)
    if center - i0 < MIN_SIDE_POINTS or i1 - 1 - center < MIN_SIDE_POINTS:
        raise InsufficientSupportError(
            f"W needs {MIN_SIDE_POINTS} points on each side of z*", support=(i0, i1)
        )
    check_pinned(W, z_star, PIN_TOLERANCE)

    j0, j1 = i0 + margin, i1 - margin
    z = g.points[j0:j1]
    zbar = 0.5 * (z + z_star)
    phi = (1.0 + np.abs(z - z_star)) ** alpha

    d1 = derivative(W, 1)
    w = W.values[j0:j1]
    w1 = d1.values[j0:j1]
    return {
        "d1": float(np.max(np.abs(w1))),
        "d2": float(np.max(phi * _refined(W, 2, j0, j1))),
        "d3": float(np.max(phi * _refined(W, 3, j0, j1))),
        "xi": float(np.max(np.abs(2.0 * interpolate(W, zbar) - w))),
        "dmid": float(np.max(phi * np.abs(interpolate(d1, zbar) - w1))),
    }


def f_norm(W: Field, z_star: float, alpha: float, margin: int = EDGE_EXCLUDE) -> float:
    """F-space norm of a corrector field; raises PinningViolationError on affine contamination."""
    return max(f_norm_components(W, z_star, alpha, margin).values())
