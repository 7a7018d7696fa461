from dataclasses import dataclass
from functools import cached_property
from typing import Dict

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from infsim.errors import TrajectoryRangeError

COLUMNS = ("z_star", "lambda", "q_star", "p_star")


@dataclass(frozen=True, eq=False)
class ReferenceTrajectory:
    """
    Time samples of (z*, lambda, q*, p*) together with their time derivatives.

    The derivatives are the exact right-hand sides of the reference ODEs at each
    sample, so `at(t)` interpolates with cubic Hermite splines.
    """

    times: np.ndarray
    z_star: np.ndarray
    lam: np.ndarray
    q_star: np.ndarray
    p_star: np.ndarray
    rates: np.ndarray  # shape (len(times), 4), same column order as COLUMNS
    dt: float

    @cached_property
    def _splines(self) -> CubicHermiteSpline:
        states = np.column_stack([self.z_star, self.lam, self.q_star, self.p_star])
        return CubicHermiteSpline(self.times, states, self.rates, axis=0)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def _check(self, t: float):
        slack = 1e-9 * max(1.0, abs(self.t_end))
        if t < self.t_start - slack or t > self.t_end + slack:
            raise TrajectoryRangeError(t, self.t_start, self.t_end)

    def at(self, t: float) -> Dict[str, float]:
        """Interpolated (z_star, lambda, q_star, p_star) at time t."""
        self._check(t)
        t = min(max(t, self.t_start), self.t_end)
        values = self._splines(t)
        return dict(zip(COLUMNS, (float(v) for v in values)))

    def rate_at(self, t: float) -> Dict[str, float]:
        self._check(t)
        t = min(max(t, self.t_start), self.t_end)
        values = self._splines.derivative()(t)
        return dict(zip(COLUMNS, (float(v) for v in values)))

    def z_star_at(self, t: float) -> float:
        return self.at(t)["z_star"]
