"""
Mortality function m, the normalized selection function M and runtime checks
of the structural assumptions on M.

All model kinds are stored as polynomials, so derivatives of every order are
exact and the Taylor expansion of m around any z* is finite.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from pydantic import BaseModel, Field as PydanticField

from infsim.core.grid import check_alpha
from infsim.errors import ConfigurationError, UnsupportedOrderError
from infsim.models.grid import Grid
from infsim.models.trajectory import ReferenceTrajectory
from infsim.observability.logging import get_logger

logger = get_logger(__name__)

MAX_ORDER = 5
MAX_DEGREE = 8
SUPERLINEAR_THRESHOLD = 0.5
SUPERLINEAR_MARGIN = 0.05


class SelectionKind(str, Enum):
    """Built-in mortality families."""

    QUADRATIC = "quadratic"
    POLYNOMIAL = "polynomial"
    DOUBLE_WELL = "double_well"


@dataclass(frozen=True, eq=False)
class SelectionModel:
    """
    Analytic mortality m(z).

    - quadratic: coefficients (c,) or (c, m_min) for c (z - z0)^2 / 2 + m_min
    - double_well: coefficients (a, b, c) for a (z^2 - 1)^2 + b z + c, a > 0
    - polynomial: ascending coefficients, degree <= 8, bounded below
    """

    kind: SelectionKind
    coefficients: Tuple[float, ...]
    z0: float = 0.0
    description: str = field(default="")

    def __post_init__(self):
        object.__setattr__(self, "kind", SelectionKind(self.kind))
        object.__setattr__(
            self, "coefficients", tuple(float(c) for c in self.coefficients)
        )
        poly = self._build()
        if not self.description:
            object.__setattr__(self, "description", self._describe())
        object.__setattr__(self, "_poly", poly)

    def _build(self) -> Polynomial:
        coeffs = self.coefficients
        if self.kind is SelectionKind.QUADRATIC:
            if len(coeffs) not in (1, 2):
                raise ConfigurationError(
                    "quadratic selection takes (c) or (c, m_min)",
                    config_key="selection.coeffs",
                )
            c = coeffs[0]
            m_min = coeffs[1] if len(coeffs) == 2 else 0.0
            if c <= 0:
                raise ConfigurationError(
                    "quadratic curvature c must be positive", config_key="selection.coeffs"
                )
            z0 = self.z0
            return Polynomial([c * z0 * z0 / 2.0 + m_min, -c * z0, c / 2.0])

        if self.kind is SelectionKind.DOUBLE_WELL:
            if len(coeffs) != 3:
                raise ConfigurationError(
                    "double_well selection takes (a, b, c)", config_key="selection.coeffs"
                )
            a, b, c = coeffs
            if a <= 0:
                raise ConfigurationError(
                    "double_well amplitude a must be positive",
                    config_key="selection.coeffs",
                )
            return Polynomial([a + c, b, -2.0 * a, 0.0, a])

        poly = Polynomial(coeffs).trim()
        degree = poly.degree()
        if degree > MAX_DEGREE:
            raise ConfigurationError(
                f"polynomial degree {degree} exceeds {MAX_DEGREE}",
                config_key="selection.coeffs",
            )
        if degree > 0 and (degree % 2 == 1 or poly.coef[-1] <= 0):
            raise ConfigurationError(
                "polynomial mortality must be bounded below "
                "(even degree, positive leading coefficient)",
                config_key="selection.coeffs",
            )
        return poly

    def _describe(self) -> str:
        if self.kind is SelectionKind.QUADRATIC:
            return f"quadratic c={self.coefficients[0]:g} z0={self.z0:g}"
        if self.kind is SelectionKind.DOUBLE_WELL:
            a, b, c = self.coefficients
            return f"double_well a={a:g} b={b:g} c={c:g}"
        return "polynomial " + ",".join(f"{c:g}" for c in self.coefficients)

    @classmethod
    def quadratic(cls, c: float = 1.0, z0: float = 0.0, m_min: float = 0.0):
        return cls(SelectionKind.QUADRATIC, (c, m_min), z0=z0)

    @classmethod
    def double_well(cls, a: float, b: float, c: float = 0.0):
        return cls(SelectionKind.DOUBLE_WELL, (a, b, c))

    @classmethod
    def polynomial(cls, coefficients: Sequence[float]):
        return cls(SelectionKind.POLYNOMIAL, tuple(coefficients))

    @property
    def poly(self) -> Polynomial:
        return self._poly

    @cached_property
    def derivatives(self) -> Tuple[Polynomial, ...]:
        return tuple(self._poly.deriv(k) for k in range(MAX_ORDER + 1))

    @property
    def degree(self) -> int:
        return self._poly.degree()

    def shifted(self, constant: float) -> "SelectionModel":
        """Same model with a constant added to m."""
        coef = self._poly.coef.copy()
        coef[0] += constant
        return SelectionModel.polynomial(coef)

    def translated(self, shift: float) -> "SelectionModel":
        """The model z -> m(z - shift)."""
        moved = self._poly(Polynomial([-shift, 1.0]))
        return SelectionModel.polynomial(moved.coef)


def eval_m(model: SelectionModel, z, k: int = 0):
    """Exact k-th derivative of m at z (scalar or array), k in 0..5."""
    if not 0 <= k <= MAX_ORDER:
        raise UnsupportedOrderError(k, "0..5")
    value = model.derivatives[k](np.asarray(z, dtype=float))
    return float(value) if np.ndim(value) == 0 else value


def taylor_coefficients(model: SelectionModel, z_star: float) -> np.ndarray:
    """Coefficients c_j = m^(j)(z*) / j! of the (finite) expansion of m at z*."""
    shifted = model.poly(Polynomial([z_star, 1.0]))
    coef = np.zeros(max(model.degree, 2) + 1)
    coef[: shifted.coef.size] = shifted.coef
    return coef


def excess(model: SelectionModel, z_star: float, x):
    """
    M(z* + x) - 1 = m(z* + x) - m(z*) - m'(z*) x, summed from the Taylor
    coefficients so that tiny x keeps full relative precision.
    """
    coef = taylor_coefficients(model, z_star)
    coef[:2] = 0.0
    return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), coef)


def eval_M(model: SelectionModel, z_star: float, z):
    """Normalized selection 1 + m(z) - m(z*) - m'(z*)(z - z*)."""
    value = 1.0 + excess(model, z_star, np.asarray(z, dtype=float) - z_star)
    return float(value) if np.ndim(value) == 0 else value


def eval_dM(model: SelectionModel, z_star: float, z, k: int):
    """k-th z-derivative of M (k >= 1)."""
    if k == 1:
        return eval_m(model, z, 1) - eval_m(model, z_star, 1)
    return eval_m(model, z, k)


def stationary_q_star(model: SelectionModel, z: float) -> float:
    """Fixed point m'''/(2 m'') of the q* equation at a critical point of m."""
    return eval_m(model, z, 3) / (2.0 * eval_m(model, z, 2))


def critical_points(model: SelectionModel, lo: float, hi: float) -> Dict[str, List[float]]:
    """Real critical points of m in [lo, hi], split into minima and maxima."""
    roots = model.derivatives[1].roots()
    real = sorted(
        float(r.real) for r in np.atleast_1d(roots) if abs(r.imag) < 1e-9 and lo <= r.real <= hi
    )
    minima = [r for r in real if eval_m(model, r, 2) > 0]
    maxima = [r for r in real if eval_m(model, r, 2) < 0]
    return {"minima": minima, "maxima": maxima}


class AssumptionReport(BaseModel):
    """Numerical verdict on the structural assumptions over a trajectory and window."""

    inf_M: float
    inf_M_at: Tuple[float, float] = PydanticField(description="(t, z) of the infimum")
    weighted_ratio_sup: Dict[int, float]
    a_estimate: float
    derivative_ratio_estimate: float
    superlinear_margin: float
    convexity_onset: Optional[Tuple[float, float]] = None
    alpha: float
    outer_fraction: float = 0.25
    passed: Dict[str, bool]
    notes: List[str] = PydanticField(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())

    def summary_lines(self) -> List[str]:
        lines = [
            f"inf_M = {self.inf_M:.6g} at t={self.inf_M_at[0]:.4g}, z={self.inf_M_at[1]:.4g}",
            "weighted_ratio_sup = "
            + ", ".join(f"k{k}:{v:.4g}" for k, v in sorted(self.weighted_ratio_sup.items())),
            f"a_estimate = {self.a_estimate:.6g} (outer {self.outer_fraction:.0%} of the grid,"
            f" margin {self.superlinear_margin:.3g})",
            f"derivative_ratio_estimate = {self.derivative_ratio_estimate:.6g}",
        ]
        if self.convexity_onset is not None:
            lines.append(
                f"convexity_onset t0={self.convexity_onset[0]:.4g} mu0={self.convexity_onset[1]:.4g}"
            )
        lines += [f"{name}: {'passed' if ok else 'FAILED'}" for name, ok in self.passed.items()]
        lines += [f"note: {n}" for n in self.notes]
        return lines


def convexity_onset(
    model: SelectionModel, traj: ReferenceTrajectory
) -> Optional[Tuple[float, float]]:
    """
    (t0, mu0) such that m''(z*(t)) >= mu0 > 0 for all sampled t >= t0, with mu0
    half the final curvature; None when the final curvature is not positive.
    """
    curv = eval_m(model, traj.z_star, 2)
    mu0 = 0.5 * float(curv[-1])
    if mu0 <= 0:
        return None
    below = np.nonzero(curv < mu0)[0]
    first = 0 if below.size == 0 else int(below[-1]) + 1
    return float(traj.times[first]), mu0


def check_assumptions(
    model: SelectionModel,
    traj: ReferenceTrajectory,
    g: Grid,
    alpha: float,
    max_times: int = 200,
) -> AssumptionReport:
    """
    Evaluate the positivity, decay and superlinearity assumptions on M over the
    sampled trajectory and grid. Never raises on a failed assumption.
    """
    check_alpha(alpha)
    z = g.points
    n_outer = max(1, g.n // 8)
    outer = np.r_[0:n_outer, g.n - n_outer : g.n]

    picks = np.unique(np.linspace(0, traj.times.size - 1, min(traj.times.size, max_times)).astype(int))

    inf_M, inf_at = math.inf, (0.0, 0.0)
    ratio_sup = {k: 0.0 for k in range(1, MAX_ORDER + 1)}
    a_est = 0.0
    d_ratio = 0.0
    for i in picks:
        t, zs = float(traj.times[i]), float(traj.z_star[i])
        M = eval_M(model, zs, z)
        j = int(np.argmin(M))
        if M[j] < inf_M:
            inf_M, inf_at = float(M[j]), (t, float(z[j]))
        positive = M > 0
        phi = (1.0 + np.abs(z - zs)) ** alpha
        for k in ratio_sup:
            if not np.all(positive):
                ratio_sup[k] = math.inf
                continue
            ratio = phi * np.abs(eval_dM(model, zs, z, k)) / M
            ratio_sup[k] = max(ratio_sup[k], float(np.max(ratio)))

        zo = z[outer]
        zbar = 0.5 * (zo + zs)
        Mo = M[outer]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.abs(eval_M(model, zs, zbar) / Mo)
            dMo = eval_dM(model, zs, zo, 1)
            dr = np.abs(eval_dM(model, zs, zbar, 1) / dMo)
        a_est = max(a_est, float(np.max(np.where(Mo != 0, r, math.inf))))
        finite = np.isfinite(dr)
        if np.any(finite):
            d_ratio = max(d_ratio, float(np.max(dr[finite])))

    margin = (SUPERLINEAR_THRESHOLD - a_est) / SUPERLINEAR_THRESHOLD
    onset = convexity_onset(model, traj)
    passed = {
        "cond_gamma": inf_M > 0,
        "decay_gamma": all(math.isfinite(v) for v in ratio_sup.values()),
        "superlinear": a_est < SUPERLINEAR_THRESHOLD,
        "local_convexity": onset is not None,
    }
    notes = []
    if passed["superlinear"] and margin < SUPERLINEAR_MARGIN:
        notes.append(f"a_estimate within {SUPERLINEAR_MARGIN:.0%} of the 1/2 threshold")
    notes.append("derivative ratio at midpoints has no threshold; value recorded only")

    report = AssumptionReport(
        inf_M=inf_M,
        inf_M_at=inf_at,
        weighted_ratio_sup=ratio_sup,
        a_estimate=a_est,
        derivative_ratio_estimate=d_ratio,
        superlinear_margin=margin,
        convexity_onset=onset,
        alpha=alpha,
        passed=passed,
        notes=notes,
    )
    for name, ok in passed.items():
        if not ok:
            logger.assumption_failed(name, inf_M if name == "cond_gamma" else a_est)
    return report
