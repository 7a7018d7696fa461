"""
Convergence study in eps: one solver run per eps, decomposed at every
snapshot, reduced into a ConvergenceReport.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field as PydanticField

from infsim.errors import ConfigurationError, InfsimError
from infsim.harness.decomposition import (
    correctors,
    empirical_mean,
    hopf_cole_decompose,
    v_star_error,
)
from infsim.harness.norms import f_norm
from infsim.models.serialization import format_time
from infsim.observability.logging import clear_run_context, get_logger, set_run_context
from infsim.persistence.snapshots import OutputStore
from infsim.runtime.solver import run

if TYPE_CHECKING:
    from infsim.cli.config import RunConfig

logger = get_logger(__name__)

RATIO_BOUNDS = (0.6, 1.3)
SLOPE_TARGET = 2.0
SLOPE_TOLERANCE = 0.2
# slope in eps above which a residual counts as o(eps^2), resp. vanishing
MEAN_SHIFT_MIN_SLOPE = 2.0
VANISHING_MIN_SLOPE = 1.0

REPORT_COLUMNS = (
    "eps",
    "sup_F_norm_W",
    "sup_abs_kappa",
    "sup_p_err_over_eps2",
    "slope_V",
    "passed",
)


def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x over the positive finite pairs."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if np.count_nonzero(keep) < 2:
        return math.nan
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


class ConvergenceRow(BaseModel):
    eps: float
    sup_F_norm_W: float = math.nan
    sup_abs_kappa: float = math.nan
    sup_p_err_over_eps2: float = math.nan
    sup_V_err: float = math.nan
    sup_mean_shift_residual: float = math.nan
    # interval averages between snapshots, exact in the reference part:
    # d/dt log_mass - (lambda'/eps^2 - p*') and p_eps' - p*'
    sup_lambda_residual: float = math.nan
    sup_p_dynamics_residual: float = math.nan
    trusted: Optional[Tuple[float, float]] = None
    window: Optional[Tuple[float, float]] = None
    snapshots: int = 0
    valid: bool = False
    passed: bool = False
    error: Optional[str] = None


class ConvergenceReport(BaseModel):
    """Rows sorted by decreasing eps plus fitted slopes and pass flags."""

    rows: List[ConvergenceRow]
    horizon: float
    alpha: float
    slope_V: float = math.nan
    slope_mean_shift: float = math.nan
    slope_lambda: float = math.nan
    slope_p_dynamics: float = math.nan
    K0: float = math.nan
    passed: Dict[str, bool] = PydanticField(default_factory=dict)
    notes: List[str] = PydanticField(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return bool(self.passed) and all(self.passed.values())

    def table(self) -> List[Dict[str, object]]:
        return [
            {
                "eps": row.eps,
                "sup_F_norm_W": row.sup_F_norm_W,
                "sup_abs_kappa": row.sup_abs_kappa,
                "sup_p_err_over_eps2": row.sup_p_err_over_eps2,
                "slope_V": self.slope_V,
                "passed": row.passed,
            }
            for row in self.rows
        ]


def interval_rates(times: Sequence[float], values: Sequence[float]) -> np.ndarray:
    """Difference quotients of `values` over consecutive snapshot intervals."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < 2:
        return np.array([math.nan])
    return np.diff(v) / np.diff(t)


def sweep_row(
    config: "RunConfig",
    eps: float,
    out_root: Optional[Path] = None,
    meta_sections: Optional[Dict[str, List[str]]] = None,
    half_width: Optional[float] = None,
) -> ConvergenceRow:
    """
    Run and decompose one eps; errors are caught into the row. With `out_root`
    the decomposition of every snapshot goes to out_root/eps<eps>/.

    The F norm and the V* error are taken within `half_width` of z*
    (default harness.core_span * eps) where the density core is trusted.
    """
    set_run_context(f"eps={eps:g}", eps)
    row = ConvergenceRow(eps=eps)
    store = None
    if half_width is None:
        half_width = config.harness.core_span * eps
    try:
        if out_root is not None:
            store = OutputStore(Path(out_root) / f"eps{format_time(eps)}")
        model = config.build_model()
        traj = config.build_trajectory(model)
        g = config.build_grid()
        output = run(
            model,
            traj,
            eps,
            g,
            t_end=config.time.t_end,
            snapshot_every=config.time.snapshot_every,
            dt_factor=config.time.dt_factor,
            backend=config.operator.backend,
            profile=config.init.profile,
        )
        norms, kappas, p_errs, v_errs, shifts = [], [], [], [], []
        times, offsets, p_eps, p_ref = [], [], [], []
        for t, state in output.snapshots:
            d = hopf_cole_decompose(
                state,
                traj,
                model,
                floor=config.harness.density_floor,
                core_floor=config.harness.core_floor,
            )
            kappa, W = correctors(d, model, traj, eps)
            if store is not None:
                store.save_decomposition(t, d.U_eps, d.V_eps, W)
            trusted = d.trusted(half_width)
            ref = traj.at(t)
            norms.append(f_norm(W.restrict(*trusted), d.z_star, config.alpha))
            kappas.append(abs(kappa))
            p_errs.append(abs(d.p_eps - ref["p_star"]) / eps**2)
            v_errs.append(v_star_error(d, model, support=trusted))
            predicted = d.z_star - eps**2 * d.q_eps
            shifts.append(abs(empirical_mean(state) - predicted))
            times.append(t)
            offsets.append(d.mass_offset)
            p_eps.append(d.p_eps)
            p_ref.append(ref["p_star"])
            row.window = d.window_bounds
            row.trusted = (float(g.points[trusted[0]]), float(g.points[trusted[1] - 1]))
        row.sup_F_norm_W = max(norms)
        row.sup_abs_kappa = max(kappas)
        row.sup_p_err_over_eps2 = max(p_errs)
        row.sup_V_err = max(v_errs)
        row.sup_mean_shift_residual = max(shifts)
        # log_mass - lambda/eps^2 = mass_offset, so its rate against -p*' is the lambda residual
        row.sup_lambda_residual = float(
            np.max(np.abs(interval_rates(times, np.add(offsets, p_ref))))
        )
        row.sup_p_dynamics_residual = float(
            np.max(np.abs(interval_rates(times, np.subtract(p_eps, p_ref))))
        )
        row.snapshots = len(output.snapshots)
        row.valid = output.valid
    except InfsimError as e:
        row.error = str(e)
        logger.sweep_row_failed(eps, str(e))
    finally:
        if store is not None:
            sections = dict(meta_sections or {})
            sections["row"] = [f"{key}: {value}" for key, value in row.model_dump().items()]
            store.write_meta(config.with_overrides(epsilon=[eps]).to_dotted(), sections)
        clear_run_context()
    return row


def _within(ratio: float) -> bool:
    return RATIO_BOUNDS[0] <= ratio <= RATIO_BOUNDS[1]


def assemble_report(config: "RunConfig", rows: List[ConvergenceRow]) -> ConvergenceReport:
    rows = sorted(rows, key=lambda r: r.eps, reverse=True)
    ok = [r for r in rows if r.error is None]
    report = ConvergenceReport(rows=rows, horizon=config.time.t_end, alpha=config.alpha)
    report.notes.append(
        f"sup over snapshots in [0, {config.time.t_end:g}]; no claim beyond the horizon"
    )
    if len(ok) < len(rows):
        report.notes.append(f"{len(rows) - len(ok)} row(s) failed")

    eps = [r.eps for r in ok]
    report.slope_V = fit_slope(eps, [r.sup_V_err for r in ok])
    report.slope_mean_shift = fit_slope(eps, [r.sup_mean_shift_residual for r in ok])
    report.slope_lambda = fit_slope(eps, [r.sup_lambda_residual for r in ok])
    report.slope_p_dynamics = fit_slope(eps, [r.sup_p_dynamics_residual for r in ok])
    if ok:
        report.K0 = max(r.sup_p_err_over_eps2 for r in ok)

    uniform_W = uniform_kappa = p_bound = True
    for prev, row in zip(ok, ok[1:]):
        uniform_W &= _within(row.sup_F_norm_W / prev.sup_F_norm_W) if prev.sup_F_norm_W > 0 else True
        uniform_kappa &= (
            _within(row.sup_abs_kappa / prev.sup_abs_kappa) if prev.sup_abs_kappa > 0 else True
        )
        p_bound &= row.sup_p_err_over_eps2 <= RATIO_BOUNDS[1] * prev.sup_p_err_over_eps2
    for row in ok:
        row.passed = bool(
            row.valid
            and all(
                math.isfinite(v)
                for v in (row.sup_F_norm_W, row.sup_abs_kappa, row.sup_p_err_over_eps2)
            )
        )

    enough = len(ok) >= 2
    report.passed = {
        "rows": len(ok) == len(rows) and all(r.passed for r in rows),
        "uniform_W": bool(uniform_W),
        "uniform_kappa": bool(uniform_kappa),
        "p_bound": bool(p_bound),
        "slope_V": bool(enough and abs(report.slope_V - SLOPE_TARGET) <= SLOPE_TOLERANCE),
        "mean_shift": bool(enough and report.slope_mean_shift > MEAN_SHIFT_MIN_SLOPE),
        "p_dynamics": bool(enough and report.slope_p_dynamics > VANISHING_MIN_SLOPE),
    }
    return report


def convergence_sweep(
    config: "RunConfig",
    eps_list: Optional[Sequence[float]] = None,
    workers: Optional[int] = None,
    out_root: Optional[Path] = None,
    meta_sections: Optional[Dict[str, List[str]]] = None,
) -> ConvergenceReport:
    """
    Run every eps (concurrently, one thread per row) and reduce into a report.
    Norms and V* errors of all rows share the region within
    harness.core_span * min(eps) of z*, so their eps trends compare like with like.
    """
    eps_list = list(eps_list if eps_list is not None else config.epsilon)
    if not eps_list:
        raise ConfigurationError("Empty eps list", config_key="epsilon")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigurationError("eps list must be strictly decreasing", config_key="epsilon")

    half_width = config.harness.core_span * eps_list[-1]
    workers = workers or config.harness.workers
    with ThreadPoolExecutor(max_workers=min(workers, len(eps_list))) as pool:
        rows = list(
            pool.map(lambda e: sweep_row(config, e, out_root, meta_sections, half_width), eps_list)
        )
    return assemble_report(config, rows)
