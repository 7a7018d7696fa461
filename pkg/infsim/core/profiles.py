"""
Reference asymptotic objects: the trajectory (z*, lambda, q*, p*), the dyadic
series V*, the assembled profile U* and residual checks of the limit problem.
"""

import math
from typing import Optional, Tuple

import numpy as np

from infsim.core.grid import point_derivative
from infsim.core.selection import SelectionModel, convexity_onset, eval_M, eval_m, excess
from infsim.errors import ConfigurationError, DivergenceError, VStarDomainError, VStarSeriesError
from infsim.models.grid import Field, Grid
from infsim.models.trajectory import ReferenceTrajectory

VSTAR_TOL = 1e-12
VSTAR_MIN_TERMS = 8
VSTAR_MAX_TERMS = 60
# terms shrinking by 2/3 or faster leave a tail below twice the last term kept
VSTAR_RATIO_LIMIT = 2.0 / 3.0

__all__ = [
    "reference_rhs",
    "evolve_reference",
    "v_star",
    "v_star_field",
    "positive_support",
    "check_vstar_identities",
    "limit_residual",
    "u_star",
    "convexity_onset",
]


def reference_rhs(model: SelectionModel, state: np.ndarray, p_curvature_weight: float = 1.0):
    """Time derivative of (z*, lambda, q*, p*)."""
    z, _, q, _ = state
    m0 = eval_m(model, z, 0)
    m1 = eval_m(model, z, 1)
    m2 = eval_m(model, z, 2)
    m3 = eval_m(model, z, 3)
    return np.array(
        [
            -m1,
            1.0 - m0,
            -m2 * q + 0.5 * m3 - 2.0 * m2 * m1,
            -m1 * q + p_curvature_weight * m2,
        ]
    )


def evolve_reference(
    model: SelectionModel,
    z0: float,
    q0: float = 0.0,
    p0: float = 0.0,
    lambda0: float = 0.0,
    t_end: float = 5.0,
    dt: float = 1e-3,
    p_curvature_weight: float = 1.0,
) -> ReferenceTrajectory:
    """
    Integrate the reference system with classical RK4:

        z*' = -m'(z*)                      lambda' = 1 - m(z*)
        q*' = -m'' q* + m'''/2 - 2 m'' m'  p*'     = -m' q* + w m''

    with w = p_curvature_weight. The step is shrunk so that it divides t_end.
    """
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}", config_key="time.reference_dt")
    if not t_end >= dt:
        raise ConfigurationError(
            f"t_end={t_end} shorter than one step dt={dt}", config_key="time.t_end"
        )
    steps = int(math.ceil(t_end / dt - 1e-9))
    h = t_end / steps

    def rhs(y):
        return reference_rhs(model, y, p_curvature_weight)

    states = np.empty((steps + 1, 4))
    rates = np.empty((steps + 1, 4))
    states[0] = (z0, lambda0, q0, p0)
    rates[0] = rhs(states[0])
    for i in range(steps):
        y = states[i]
        k1 = rates[i]
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        nxt = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(nxt)):
            raise DivergenceError("reference trajectory", last_valid_time=i * h)
        with np.errstate(over="ignore", invalid="ignore"):
            rate = rhs(nxt)
        if not np.all(np.isfinite(rate)):
            raise DivergenceError("reference trajectory", last_valid_time=i * h)
        states[i + 1] = nxt
        rates[i + 1] = rate

    times = h * np.arange(steps + 1)
    return ReferenceTrajectory(
        times=times,
        z_star=states[:, 0],
        lam=states[:, 1],
        q_star=states[:, 2],
        p_star=states[:, 3],
        rates=rates,
        dt=h,
    )


def v_star(
    model: SelectionModel,
    z_star: float,
    z,
    tol: float = VSTAR_TOL,
    min_terms: int = VSTAR_MIN_TERMS,
    max_terms: int = VSTAR_MAX_TERMS,
):
    """
    Partial sum of V*(z) = sum_k 2^k log M(z* + 2^-k (z - z*)).

    Terms are log1p of the Taylor excess of m, so the 2^k factor does not
    amplify cancellation. Summation stops once every term is below `tol` and at
    least `min_terms` terms are in. Works on scalars and arrays.

    Past `min_terms` every term above `tol` must shrink by VSTAR_RATIO_LIMIT
    or better, which bounds the dropped tail by 2 |last term|; a faster-than-
    geometric blow-up or an exhausted term budget raises VStarSeriesError.
    """
    x = np.asarray(z, dtype=float) - z_star
    total = np.zeros_like(x)
    prev = None
    for k in range(max_terms):
        xk = x * 2.0**-k
        e = excess(model, z_star, xk)
        bad = e <= -1.0
        if np.any(bad):
            idx = np.flatnonzero(np.atleast_1d(bad))[0]
            point = float(np.atleast_1d(xk)[idx] + z_star)
            raise VStarDomainError(point, float(1.0 + np.atleast_1d(e)[idx]))
        term = 2.0**k * np.log1p(e)
        total = total + term
        if k >= min_terms and prev is not None:
            big = np.abs(prev) >= tol
            slow = big & (np.abs(term) > VSTAR_RATIO_LIMIT * np.abs(prev))
            if np.any(slow):
                idx = np.flatnonzero(np.atleast_1d(slow))[0]
                raise VStarSeriesError(
                    "terms shrink slower than geometric ratio "
                    f"{VSTAR_RATIO_LIMIT:.3g}",
                    float(np.atleast_1d(x)[idx] + z_star),
                    k + 1,
                )
        if k + 1 >= min_terms and np.max(np.abs(term), initial=0.0) < tol:
            break
        prev = term
    else:
        idx = int(np.argmax(np.abs(np.atleast_1d(term))))
        raise VStarSeriesError(
            f"last term still above tol={tol:g}", float(np.atleast_1d(x)[idx] + z_star), max_terms
        )
    return float(total) if np.ndim(total) == 0 else total



def v_star_field(
    model: SelectionModel, z_star: float, g: Grid, support: Optional[Tuple[int, int]] = None
) -> Field:
    """V* sampled on g (restricted to `support` when given)."""
    i0, i1 = support or (0, g.n)
    values = np.full(g.n, np.nan)
    values[i0:i1] = v_star(model, z_star, g.points[i0:i1])
    return Field(g, values, support=(i0, i1))


def positive_support(model: SelectionModel, z_star: float, g: Grid) -> Tuple[int, int]:
    """Largest index range around z* on which M > 0, where V* is defined."""
    positive = eval_M(model, z_star, g.points) > 0
    c = g.nearest_index(z_star)
    if not positive[c]:
        raise VStarDomainError(float(g.points[c]), float(eval_M(model, z_star, g.points[c])))
    lo = c
    while lo > 0 and positive[lo - 1]:
        lo -= 1
    hi = c + 1
    while hi < g.n and positive[hi]:
        hi += 1
    return lo, hi


def check_vstar_identities(
    model: SelectionModel, z_star: float, h: float = 1e-3
) -> Tuple[float, float]:
    """
    Errors of the finite-difference second and third derivatives of V* at z*
    against 2 m''(z*) and (4/3) m'''(z*): relative, or absolute when the target
    vanishes.
    """

    def series(z):
        return v_star(model, z_star, z, tol=1e-16)

    errors = []
    for k, target in ((2, 2.0 * eval_m(model, z_star, 2)), (3, 4.0 / 3.0 * eval_m(model, z_star, 3))):
        value = point_derivative(series, z_star, k, step=h)
        diff = abs(value - target)
        errors.append(diff / abs(target) if target != 0 else diff)
    return errors[0], errors[1]


def limit_residual(model: SelectionModel, z_star: float, g: Grid, margin: int = 3) -> float:
    """sup over interior points of |exp(V*(z) - 2 V*(zbar) + V*(z*)) - M(z)|."""
    z = g.points[margin : g.n - margin]
    zbar = 0.5 * (z + z_star)
    exponent = v_star(model, z_star, z) - 2.0 * v_star(model, z_star, zbar) + v_star(model, z_star, z_star)
    return float(np.max(np.abs(np.exp(exponent) - eval_M(model, z_star, z))))


def u_star(model: SelectionModel, traj: ReferenceTrajectory, t: float, z):
    """U*(t, z) = p*(t) + q*(t)(z - z*(t)) + V*(z) around the interpolated z*(t)."""
    ref = traj.at(t)
    zs = ref["z_star"]
    z = np.asarray(z, dtype=float)
    value = ref["p_star"] + ref["q_star"] * (z - zs) + v_star(model, zs, z)
    return float(value) if np.ndim(value) == 0 else value
