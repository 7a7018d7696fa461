"""
Gauss-Hermite rules for the Gaussian weights of the mixing functional.

The two-dimensional weight exp(-Q) with Q = y1*y2/2 + 3(y1^2 + y2^2)/4 is
diagonal in the rotated variables u = (y1+y2)/sqrt2, v = (y1-y2)/sqrt2, where
Q = u^2 + v^2/2. The 2D rule is the tensor product of a physicists' rule in u
and a scaled one in v, mapped back to (y1, y2). Weights are normalized so the
rules integrate 1 to 1.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.hermite_e import hermegauss

from infsim.errors import ConfigurationError

DEFAULT_ORDER = 40
MAX_ORDER = 200

# Nodes whose weight falls below this fraction of the largest weight are
# dropped; their contribution is under double precision for bounded integrands.
PRUNE_RELATIVE = 1e-16


@dataclass(frozen=True, eq=False)
class QuadratureRule2D:
    """Nodes (N x 2 array of (y1, y2)) and normalized weights for exp(-Q)."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def y1(self) -> np.ndarray:
        return self.nodes[:, 0]

    @property
    def y2(self) -> np.ndarray:
        return self.nodes[:, 1]

    @property
    def max_abs_node(self) -> float:
        return float(np.max(np.abs(self.nodes)))

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True, eq=False)
class QuadratureRule1D:
    """Nodes and normalized weights for the standard normal weight exp(-y^2/2)."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def max_abs_node(self) -> float:
        return float(np.max(np.abs(self.nodes)))

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def _check_order(order: int) -> int:
    if not 2 <= order <= MAX_ORDER:
        raise ConfigurationError(
            f"Quadrature order {order} outside [2, {MAX_ORDER}]",
            config_key="operator.quad_order",
        )
    return int(order)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=16)
def make_rule(order: int = DEFAULT_ORDER) -> QuadratureRule2D:
    """Tensor Gauss-Hermite rule of `order` points per axis for exp(-Q)."""
    order = _check_order(order)
    x, w = hermgauss(order)
    u = x
    v = math.sqrt(2.0) * x
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ww = np.outer(w, w)

    keep = ww >= PRUNE_RELATIVE * ww.max()
    uu, vv, ww = uu[keep], vv[keep], ww[keep]
    y1 = (uu + vv) / math.sqrt(2.0)
    y2 = (uu - vv) / math.sqrt(2.0)
    return QuadratureRule2D(
        nodes=_frozen(np.column_stack([y1, y2])),
        weights=_frozen(ww / ww.sum()),
        order=order,
    )


@lru_cache(maxsize=16)
def make_rule_1d(order: int = DEFAULT_ORDER) -> QuadratureRule1D:
    """Probabilists' Gauss-Hermite rule for the standard normal."""
    order = _check_order(order)
    x, w = hermegauss(order)
    keep = w >= PRUNE_RELATIVE * w.max()
    x, w = x[keep], w[keep]
    return QuadratureRule1D(nodes=_frozen(x), weights=_frozen(w / w.sum()), order=order)


def gaussian_moment(rule: QuadratureRule2D) -> float:
    """Second moment E[y1^2 + y2^2] under exp(-Q); equals 3/2."""
    return rule.integrate(rule.y1**2 + rule.y2**2)


def moment_excess(rule: QuadratureRule2D, rule_1d: QuadratureRule1D = None) -> float:
    """
    Excess of the two-point moment over the one-point moment E[y^2] of the
    denominator weight; equals 1/2.
    """
    rule_1d = rule_1d or make_rule_1d(rule.order)
    return gaussian_moment(rule) - rule_1d.integrate(rule_1d.nodes**2)
