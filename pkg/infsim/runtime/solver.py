"""
Time integration of eps^2 d_t f + m f = B_eps(f).

The state is kept as a density of unit mass plus a log-mass ledger, so the
exp(lambda t / eps^2) growth never overflows. Each step books the growth
(1 - <m>) at the current mean mortality into the ledger, applies the exact
integrating factor of the centred part m - <m> and treats the mass-neutral
remainder B_eps(f) - f explicitly. A shape with f = B(f) - (m - <m>) f is an
exact fixed point of the step.
"""

import math
import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import exprel

from infsim.core.operator import Backend, apply_B
from infsim.core.profiles import u_star
from infsim.core.selection import SelectionModel, critical_points, eval_m
from infsim.errors import (
    ConfigurationError,
    DegenerateDensityError,
    DivergenceError,
    StabilityError,
    VStarDomainError,
)
from infsim.models.grid import Field, Grid
from infsim.models.state import CLAMP_TOLERANCE, SimOutput, SimState
from infsim.models.trajectory import ReferenceTrajectory
from infsim.observability.logging import get_logger

logger = get_logger(__name__)

STABILITY_FACTOR = 0.2
DEFAULT_DT_FACTOR = 0.1
BOUNDARY_CELLS = 3
INIT_RESOLUTION = 8
INIT_MARGIN = 6


class InitProfile:
    WELL_PREPARED = "well_prepared"
    GAUSSIAN = "gaussian"

    ALL = (WELL_PREPARED, GAUSSIAN)


def _normalized(log_values: np.ndarray, g: Grid) -> Tuple[np.ndarray, float]:
    shift = float(np.max(log_values))
    density = np.exp(log_values - shift)
    mass = g.h * float(np.sum(density))
    return density / mass, shift + math.log(mass)


def init_well_prepared(
    model: SelectionModel,
    traj: ReferenceTrajectory,
    eps: float,
    g: Grid,
    profile: str = InitProfile.WELL_PREPARED,
) -> SimState:
    """
    Initial state (eps sqrt(2 pi))^-1 exp(lambda0/eps^2 - (z - z*0)^2 / (2 eps^2) - U*(0, z)).

    The gaussian profile drops U*. When V* is undefined on the grid (M not
    positive along some dyadic ray) the gaussian profile is used and the
    density carries a note saying so.
    """
    if not eps > 0:
        raise ConfigurationError(f"eps must be positive, got {eps}", config_key="epsilon")
    if g.h > eps / INIT_RESOLUTION:
        raise ConfigurationError(
            f"Grid spacing {g.h:.4g} does not resolve eps={eps} (need h <= eps/{INIT_RESOLUTION})",
            config_key="grid.n",
        )
    ref = traj.at(traj.t_start)
    z0 = ref["z_star"]
    if not g.contains(z0, margin=INIT_MARGIN * eps):
        raise ConfigurationError(
            f"z*(0)={z0:.4g} closer than {INIT_MARGIN} eps to the grid boundary",
            config_key="z_star0",
        )
    if profile not in InitProfile.ALL:
        raise ConfigurationError(f"Unknown initial profile {profile!r}", config_key="init.profile")

    z = g.points
    log_f = ref["lambda"] / eps**2 - (z - z0) ** 2 / (2.0 * eps**2) - math.log(eps * math.sqrt(2.0 * math.pi))
    notes = []
    if profile == InitProfile.WELL_PREPARED:
        try:
            log_f = log_f - u_star(model, traj, traj.t_start, z)
        except VStarDomainError as e:
            logger.warning("V* undefined on the grid; starting from a plain Gaussian", point=e.point)
            notes.append(f"initial profile: gaussian (V* undefined at z={e.point:.4g})")
    else:
        notes.append("initial profile: gaussian (ill-prepared data)")

    density, log_mass = _normalized(log_f, g)
    return SimState(
        t=traj.t_start,
        density=Field(g, density, notes=tuple(notes)),
        log_mass=log_mass,
        eps=float(eps),
    )


def step(
    s: SimState,
    model: SelectionModel,
    dt: float,
    backend: str = Backend.FFT,
    stability_factor: float = STABILITY_FACTOR,
) -> SimState:
    """One exponential step of size dt, followed by clamp and renormalization."""
    eps = s.eps
    dt_max = stability_factor * eps**2
    if dt > dt_max * (1.0 + 1e-12):
        raise StabilityError(dt, dt_max)

    g = s.grid
    f = np.nan_to_num(s.density.values, nan=0.0)
    r = dt / eps**2
    m = eval_m(model, g.points)
    # Growth at the current mean mortality goes straight into the ledger; the
    # integrating factor only sees the centred part m - <m>.
    mean_m = g.h * float(np.dot(m, f))
    a = (m - mean_m) * r
    mixed_field = apply_B(s.density, eps, backend)
    mixed = mixed_field.values

    new = np.exp(-a) * f + r * exprel(-a) * (mixed - f)
    if not np.all(np.isfinite(new)):
        raise DivergenceError("density", last_valid_time=s.t)

    negative = new < 0
    clips = int(np.count_nonzero(negative))
    clipped = -g.h * float(np.sum(new[negative]))
    if clips:
        new[negative] = 0.0

    total = g.h * float(np.sum(new))
    if not total > 0 or not math.isfinite(total):
        raise DegenerateDensityError(total)
    edge = g.h * float(np.sum(new[:BOUNDARY_CELLS]) + np.sum(new[-BOUNDARY_CELLS:]))
    new[:BOUNDARY_CELLS] = 0.0
    new[-BOUNDARY_CELLS:] = 0.0
    clamped = s.clamped_fraction + (edge + clipped) / total

    kept = total - edge
    if not kept > 0:
        raise DegenerateDensityError(kept)
    valid = s.valid and clamped <= CLAMP_TOLERANCE
    if s.valid and not valid:
        logger.boundary_clamped(s.t + dt, clamped)

    return s.advanced(
        t=s.t + dt,
        density=mixed_field.with_values(new / kept),
        log_mass=s.log_mass + (1.0 - mean_m) * r + math.log(kept),
        step_number=s.step_number + 1,
        clamped_fraction=clamped,
        valid=valid,
        negative_clips=s.negative_clips + clips,
    )


def locate_mode(density: Field) -> float:
    """Mode from a parabola fitted to the log density on 5 points around the argmax."""
    g = density.grid
    v = np.nan_to_num(density.values, nan=0.0)
    j = int(np.clip(np.argmax(v), 2, g.n - 3))
    window = v[j - 2 : j + 3]
    if np.any(window <= 0):
        return float(g.points[j])
    a, b, _ = np.polyfit(np.arange(-2.0, 3.0), np.log(window), 2)
    if a >= 0:
        return float(g.points[j])
    vertex = -b / (2.0 * a)
    if abs(vertex) > 2.0:
        return float(g.points[j])
    return float(g.points[j] + vertex * g.h)


def run(
    model: SelectionModel,
    traj: ReferenceTrajectory,
    eps: float,
    g: Grid,
    t_end: float,
    snapshot_every: float,
    dt_factor: float = DEFAULT_DT_FACTOR,
    backend: str = Backend.FFT,
    profile: str = InitProfile.WELL_PREPARED,
) -> SimOutput:
    """
    Step from the initial state to t_end, snapshotting every `snapshot_every`.

    The step is the largest value not above dt_factor * eps^2 that divides
    snapshot_every; the last step is shortened to land on t_end.
    """
    if not 0 < dt_factor <= STABILITY_FACTOR:
        raise StabilityError(dt_factor * eps**2, STABILITY_FACTOR * eps**2)
    if not snapshot_every > 0 or not t_end > 0:
        raise ConfigurationError("t_end and snapshot_every must be positive", config_key="time")
    if t_end > traj.t_end * (1.0 + 1e-12):
        raise ConfigurationError(
            f"Reference trajectory ends at {traj.t_end}, before t_end={t_end}",
            config_key="time.t_end",
        )

    per_snapshot = int(math.ceil(snapshot_every / (dt_factor * eps**2) - 1e-9))
    dt = snapshot_every / per_snapshot
    steps = int(math.ceil(t_end / dt - 1e-9))

    state = init_well_prepared(model, traj, eps, g, profile=profile)
    output = SimOutput(
        config={
            "eps": eps,
            "dt": dt,
            "t_end": t_end,
            "snapshot_every": snapshot_every,
            "backend": str(Backend(backend).value),
            "profile": profile,
            "selection": model.description,
            "grid": f"[{g.z_min}, {g.z_max}] n={g.n}",
        }
    )
    output.notes.extend(state.density.notes)
    if profile == InitProfile.GAUSSIAN or state.density.notes:
        output.notes.append("ill-prepared initial data: outside the well-prepared hypotheses")

    def record(s: SimState, snapshot: bool):
        output.mass_series.append((s.t, s.log_mass))
        output.mode_series.append((s.t, locate_mode(s.density)))
        if snapshot:
            output.snapshots.append((s.t, s))
            logger.snapshot_taken(s.t, s.log_mass)

    logger.run_started(eps, t_end, steps)
    started = time.monotonic()
    record(state, snapshot=True)
    for i in range(1, steps + 1):
        h = min(dt, t_end - state.t)
        state = step(state, model, h, backend=backend)
        record(state, snapshot=(i % per_snapshot == 0 or i == steps))

    for note in state.density.notes:
        if note not in output.notes:
            output.notes.append(note)
    if not state.valid:
        output.notes.append(
            f"boundary clamp removed {state.clamped_fraction:.3g} of the mass; run invalid"
        )
    logger.run_completed(eps, (time.monotonic() - started) * 1000.0, state.valid)
    return output


def log_mass_rate(output: SimOutput, window: Optional[float] = None) -> float:
    """Least-squares slope of log_mass over the last `window` time units (default: last fifth)."""
    t, v = output.mass_arrays()
    if t.size < 2:
        raise ConfigurationError("Mass series too short to fit a rate")
    span = window if window is not None else 0.2 * (t[-1] - t[0])
    tail = t >= t[-1] - span
    if np.count_nonzero(tail) < 2:
        tail = slice(-2, None)
    return float(np.polyfit(t[tail], v[tail], 1)[0])


@dataclass(frozen=True)
class JumpReport:
    """Classification of a mode series against the critical points of m."""

    kind: str  # converged | jump | undetermined
    local_min: Optional[float]
    global_min: Optional[float]
    barrier: Optional[float]
    relaxation_time: float
    crossing_time: Optional[float]
    dwell_time: Optional[float]
    final_mode: float


def detect_critical_jump(
    output: SimOutput,
    model: SelectionModel,
    dwell_ratio: float = 10.0,
    capture: float = 0.1,
) -> JumpReport:
    """
    Classify the mode trajectory.

    The starting basin is the minimum of m nearest the initial mode and the
    barrier the maximum of m between it and the global minimum. Relaxation
    time is the later of the first entry into the capture neighbourhood of
    the starting minimum (capture * basin half-width) and 1/m'' there.
    A crossing of the barrier after a dwell longer than dwell_ratio times the
    relaxation time is a jump; a run whose final mode sits within the capture
    neighbourhood of a minimum without crossing has converged.
    """
    t, mode = output.mode_arrays()
    g = output.final.grid
    crit = critical_points(model, g.z_min, g.z_max)
    minima, maxima = crit["minima"], crit["maxima"]
    final = float(mode[-1])
    if not minima:
        return JumpReport("undetermined", None, None, None, 0.0, None, None, final)

    start = min(minima, key=lambda z: abs(z - mode[0]))
    best = min(minima, key=lambda z: eval_m(model, z))
    between = [z for z in maxima if min(start, best) < z < max(start, best)]
    barrier = between[0] if between else None

    if barrier is not None:
        radius = capture * abs(barrier - start)
    else:
        radius = capture * max(1.0 / math.sqrt(eval_m(model, start, 2)), g.h)
    inside = np.flatnonzero(np.abs(mode - start) <= radius)
    entry = float(t[inside[0]]) if inside.size else float(t[-1])
    relaxation = max(entry, 1.0 / eval_m(model, start, 2))

    crossing = None
    if barrier is not None:
        side = np.sign(start - barrier)
        crossed = np.flatnonzero(np.sign(mode - barrier) == -side)
        if crossed.size:
            crossing = float(t[crossed[0]])

    if crossing is not None:
        dwell = crossing - relaxation
        kind = "jump" if dwell > dwell_ratio * relaxation else "undetermined"
        return JumpReport(kind, start, best, barrier, relaxation, crossing, dwell, final)

    settled = min(minima, key=lambda z: abs(z - final))
    kind = "converged" if abs(final - settled) <= max(radius, 2.0 * g.h) else "undetermined"
    return JumpReport(kind, settled, best, barrier, relaxation, None, None, final)
