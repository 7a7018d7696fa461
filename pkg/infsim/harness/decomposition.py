"""
Hopf-Cole decomposition of a simulated state and the rescaled correctors.

    f = exp(log_mass) * density
      = (eps sqrt(2 pi))^-1 exp(lambda/eps^2 - (z - z*)^2 / (2 eps^2) - U_eps)
    U_eps = p_eps + q_eps (z - z*) + V_eps,   V_eps(z*) = V_eps'(z*) = 0
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from infsim.core.grid import interpolate
from infsim.core.profiles import v_star_field
from infsim.core.selection import SelectionModel
from infsim.errors import InsufficientSupportError
from infsim.models.grid import Field
from infsim.models.state import SimState
from infsim.models.trajectory import ReferenceTrajectory

DENSITY_FLOOR = 1e-12
CORE_FLOOR = 1e-8
CORE_SPAN = 4.0  # default trusted half-width, in eps
GRID_SPAN = 20.0  # grid must cover z* +- GRID_SPAN/2 eps
WINDOW_SPAN = 5.0  # floor window must reach z* +- WINDOW_SPAN eps

_STENCIL = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
_SLOPE_WEIGHTS = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


@dataclass(frozen=True, eq=False)
class Decomposition:
    t: float
    eps: float
    z_star: float
    lambda_ref: float
    p_eps: float
    q_eps: float
    U_eps: Field
    V_eps: Field
    window: Tuple[int, int]
    # where density > core floor; the log is trusted to derivative accuracy here
    core: Tuple[int, int]
    # log_mass - lambda_ref / eps^2: whatever constant the state carries beyond
    # the reference growth; p_eps absorbs it with the opposite sign.
    mass_offset: float

    @property
    def window_bounds(self) -> Tuple[float, float]:
        pts = self.V_eps.grid.points
        return float(pts[self.window[0]]), float(pts[self.window[1] - 1])

    def trusted(self, half_width: Optional[float] = None) -> Tuple[int, int]:
        """
        Indices of the core within half_width (default CORE_SPAN eps) of z*.
        Raises InsufficientSupportError when the core does not cover it.
        """
        half_width = CORE_SPAN * self.eps if half_width is None else half_width
        g = self.V_eps.grid
        c0, c1 = self.core
        i0 = max(c0, int(np.ceil((self.z_star - half_width - g.z_min) / g.h - 1e-9)))
        i1 = min(c1, int(np.floor((self.z_star + half_width - g.z_min) / g.h + 1e-9)) + 1)
        lo, hi = g.points[c0], g.points[c1 - 1]
        if self.z_star - lo < half_width or hi - self.z_star < half_width:
            raise InsufficientSupportError(
                f"density core does not reach {half_width:g} on both sides of z*",
                core=(float(lo), float(hi)),
                z_star=self.z_star,
            )
        return i0, i1


def remove_affine(U: Field, z_star: float) -> Tuple[float, float, Field]:
    """
    Split U into p + q (z - z*) + V with V(z*) = V'(z*) = 0, where the value
    and slope at z* are read from the interpolated field on a 5-point stencil.
    """
    h = U.grid.h
    samples = interpolate(U, z_star + _STENCIL * h)
    p = float(samples[2])
    q = float(np.dot(_SLOPE_WEIGHTS, samples) / h)
    i0, i1 = U.support
    values = np.full(U.grid.n, np.nan)
    values[i0:i1] = U.defined - p - q * (U.defined_points - z_star)
    return p, q, U.with_values(values)


def _floor_window(density: np.ndarray, center: int, floor: float) -> Tuple[int, int]:
    above = density > floor * np.max(density)
    if not above[center]:
        raise InsufficientSupportError("density below the floor at z*", floor=floor)
    below = np.flatnonzero(~above)
    left = below[below < center]
    right = below[below > center]
    i0 = int(left[-1]) + 1 if left.size else 0
    i1 = int(right[0]) if right.size else density.size
    return i0, i1


def hopf_cole_decompose(
    s: SimState,
    traj: ReferenceTrajectory,
    model: SelectionModel,
    floor: float = DENSITY_FLOOR,
    core_floor: float = CORE_FLOOR,
) -> Decomposition:
    """Decompose s around the reference z*(t), with lambda taken from the trajectory."""
    eps = s.eps
    g = s.grid
    ref = traj.at(s.t)
    zs, lam = ref["z_star"], ref["lambda"]

    if not g.contains(zs, margin=0.5 * GRID_SPAN * eps):
        raise InsufficientSupportError(
            f"grid does not cover {GRID_SPAN:g} eps around z*", z_star=zs, eps=eps
        )
    density = np.nan_to_num(s.density.values, nan=0.0)
    center = g.nearest_index(zs)
    i0, i1 = _floor_window(density, center, floor)
    core = _floor_window(density, center, max(floor, core_floor))
    lo, hi = g.points[i0], g.points[i1 - 1]
    if zs - lo < WINDOW_SPAN * eps or hi - zs < WINDOW_SPAN * eps:
        raise InsufficientSupportError(
            f"density above floor covers less than {WINDOW_SPAN:g} eps on one side of z*",
            window=(float(lo), float(hi)),
            z_star=zs,
        )

    z = g.points[i0:i1]
    energy = eps**2 * (np.log(density[i0:i1]) + s.log_mass + math.log(eps * math.sqrt(2.0 * math.pi)))
    values = np.full(g.n, np.nan)
    values[i0:i1] = (lam - 0.5 * (z - zs) ** 2 - energy) / eps**2
    U = Field(g, values, support=(i0, i1))

    p, q, V = remove_affine(U, zs)

    return Decomposition(
        t=s.t,
        eps=eps,
        z_star=zs,
        lambda_ref=lam,
        p_eps=p,
        q_eps=q,
        U_eps=U,
        V_eps=V,
        window=(i0, i1),
        core=core,
        mass_offset=s.log_mass - lam / eps**2,
    )


def correctors(
    d: Decomposition, model: SelectionModel, traj: ReferenceTrajectory, eps: float
) -> Tuple[float, Field]:
    """kappa = (q_eps - q*) / eps^2 and W = (V_eps - V*) / eps^2 on the window."""
    ref = traj.at(d.t)
    # re-pin the sampled V* on the same stencil as V_eps
    _, _, V_ref = remove_affine(v_star_field(model, d.z_star, d.V_eps.grid, support=d.window), d.z_star)
    kappa = (d.q_eps - ref["q_star"]) / eps**2
    W = (d.V_eps - V_ref).scaled(1.0 / eps**2)
    return kappa, W


def v_star_error(
    d: Decomposition, model: SelectionModel, support: Optional[Tuple[int, int]] = None
) -> float:
    """sup |V_eps - V*| over `support` (default: the decomposition window)."""
    support = support or d.window
    V_ref = v_star_field(model, d.z_star, d.V_eps.grid, support=support)
    return float(np.max(np.abs((d.V_eps - V_ref).defined)))


def empirical_mean(s: SimState) -> float:
    g = s.grid
    density = np.nan_to_num(s.density.values, nan=0.0)
    return float(g.h * np.sum(g.points * density))
