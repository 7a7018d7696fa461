"""
Identity suite behind `infsim verify`: quadrature moments, I_eps identities,
Gaussian fixed point of B_eps and backend agreement, V* identities, the
spectral table of T, the I_eps rate and closed-form reference trajectories.
"""

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, List, Optional

import numpy as np

from infsim.core.grid import make_grid
from infsim.core.operator import apply_B_direct, apply_B_fft, eval_I_eps, spectral_check_T
from infsim.core.profiles import check_vstar_identities, evolve_reference, limit_residual, v_star_field
from infsim.core.quadrature import gaussian_moment, make_rule, make_rule_1d, moment_excess
from infsim.core.selection import SelectionModel
from infsim.errors import InfsimError
from infsim.harness.sweep import fit_slope
from infsim.models.grid import Field

if TYPE_CHECKING:
    from infsim.cli.config import RunConfig


@dataclass(frozen=True)
class SelfTestResult:
    name: str
    value: float
    target: float
    tolerance: float
    passed: bool
    detail: str = ""


def _check(name: str, value: float, target: float, tolerance: float, relative: bool = False):
    err = abs(value - target)
    if relative and target != 0:
        err /= abs(target)
    return SelfTestResult(name, float(value), float(target), tolerance, bool(err <= tolerance))


def _guard(name: str, target: float, tolerance: float, fn: Callable[[], List[SelfTestResult]]):
    try:
        return fn()
    except InfsimError as e:
        return [SelfTestResult(name, math.nan, target, tolerance, False, detail=str(e))]


def _gaussian(g, mu: float, var: float) -> Field:
    z = g.points
    return Field(g, np.exp(-((z - mu) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var))


def _assorted_densities(g, eps: float) -> List[Field]:
    z = g.points
    return [
        _gaussian(g, 0.0, eps**2),
        _gaussian(g, 0.7, 4.0 * eps**2),
        Field(g, 0.3 * np.exp(-((z + 0.5) ** 2) / (2 * eps**2)) + np.exp(-((z - 0.4) ** 2) / (8 * eps**2))),
        Field(g, np.exp(-np.abs(z - 0.2) ** 3 / eps**2)),
        Field(g, np.exp(-((z + 0.1) ** 2) / (2 * eps**2)) * (1.0 + 0.5 * np.sin(3.0 * z))),
    ]


def quadrature_tests(order: int) -> List[SelfTestResult]:
    rule = make_rule(order)
    rule_1d = make_rule_1d(order)
    return [
        _check("quadrature.normalization", float(np.sum(rule.weights)), 1.0, 1e-10),
        _check("quadrature.second_moment", gaussian_moment(rule), 1.5, 1e-10),
        _check("quadrature.moment_excess", moment_excess(rule, rule_1d), 0.5, 1e-10),
    ]


def i_eps_tests(model: SelectionModel, z_star: float, order: int) -> List[SelfTestResult]:
    rule = make_rule(order)
    g = make_grid(z_star - 8.0, z_star + 8.0, 4096)
    zero = Field(g, np.zeros(g.n))
    results = [
        _check(f"I_eps.trivial[eps={eps:g}]", eval_I_eps(0.0, zero, eps, z_star, z_star + 0.3, rule), 1.0, 1e-10)
        for eps in (0.5, 0.1, 0.01)
    ]

    V = v_star_field(model, z_star, g)
    q = 0.25
    base = eval_I_eps(q, V, 0.1, z_star, z_star + 0.5, rule)
    shifted = eval_I_eps(q, V.with_values(V.values + 5.0), 0.1, z_star, z_star + 0.5, rule, check_pinning=False)
    results.append(_check("I_eps.constant_shift", shifted, base, 1e-12))
    return results


def i_eps_rate_test(order: int) -> List[SelfTestResult]:
    model = SelectionModel.quadratic(1.0)
    rule = make_rule(order)
    g = make_grid(-8.0, 8.0, 4096)
    V = v_star_field(model, 0.0, g)
    eps_list = [0.4, 0.2, 0.1, 0.05]
    gaps = [abs(eval_I_eps(0.0, V, eps, 0.0, 0.0, rule) - 1.0) for eps in eps_list]
    return [_check("I_eps.rate", fit_slope(eps_list, gaps), 2.0, 0.15)]


def operator_tests() -> List[SelfTestResult]:
    eps = 0.1
    half_width = 0.5 * 1023 * eps / 16.0  # h = eps/16
    g = make_grid(-half_width, half_width, 1024)
    results = []
    target = _gaussian(g, 0.0, eps**2)
    for name, backend in (("direct", apply_B_direct), ("fft", apply_B_fft)):
        out = backend(target, eps)
        l1 = g.h * float(np.sum(np.abs(out.values - target.values)))
        results.append(_check(f"B_eps.fixed_point[{name}]", l1, 0.0, 1e-6))

    worst = 0.0
    for f in _assorted_densities(g, eps):
        a = apply_B_direct(f, eps).values
        b = apply_B_fft(f, eps).values
        worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(a))))
    results.append(_check("B_eps.backend_agreement", worst, 0.0, 1e-8))
    return results


def series_tests(model: SelectionModel, z_star: float) -> List[SelfTestResult]:
    quadratic = SelectionModel.quadratic(1.0)
    g = make_grid(-4.0, 4.0, 1024)
    results = [
        _check("V*.limit_residual[quadratic]", limit_residual(quadratic, 0.0, g), 0.0, 1e-8),
        _check(
            f"V*.limit_residual[{model.kind.value}, z*={z_star:g}]",
            limit_residual(model, z_star, g),
            0.0,
            1e-8,
        ),
    ]
    err2, err3 = check_vstar_identities(model, z_star)
    results.append(_check("V*.second_derivative", err2, 0.0, 1e-5))
    results.append(_check("V*.third_derivative", err3, 0.0, 1e-5))
    return results


def spectral_tests(model: SelectionModel, z_star: float) -> List[SelfTestResult]:
    return [
        _check(f"T.eigenvalue[k={k}]", spectral_check_T(model, z_star, k), target, 1e-6)
        for k, target in ((0, 0.0), (1, 0.0), (2, -0.5), (3, -0.75))
    ]


def reference_tests() -> List[SelfTestResult]:
    model = SelectionModel.quadratic(1.0)
    moving = evolve_reference(model, 1.0, t_end=1.0, dt=1e-3)
    pinned = evolve_reference(model, 0.0, q0=1.0, t_end=1.0, dt=1e-3)
    end = pinned.at(1.0)
    return [
        _check("reference.z_star", moving.at(1.0)["z_star"], math.exp(-1.0), 1e-8),
        _check("reference.q_star", end["q_star"], math.exp(-1.0), 1e-8),
        _check("reference.p_star", end["p_star"], 1.0, 1e-8),
        _check("reference.lambda", end["lambda"], 1.0, 1e-8),
    ]


def run_self_tests(config: Optional["RunConfig"] = None) -> List[SelfTestResult]:
    """Run the whole suite for the configured model (quadratic by default)."""
    if config is None:
        model, z_star, order = SelectionModel.quadratic(1.0), 0.0, 40
    else:
        model, z_star, order = config.build_model(), config.z_star0, config.operator.quad_order

    results: List[SelfTestResult] = []
    results += quadrature_tests(order)
    results += _guard("I_eps", 1.0, 1e-10, lambda: i_eps_tests(model, z_star, order))
    results += _guard("I_eps.rate", 2.0, 0.15, lambda: i_eps_rate_test(order))
    results += operator_tests()
    results += _guard("V*", 0.0, 1e-8, lambda: series_tests(model, z_star))
    results += spectral_tests(model, z_star)
    results += reference_tests()
    return results
