"""
Tests for the Gauss-Hermite rules of the mixing functional.
"""
import math

import numpy as np
import pytest

from infsim.core.quadrature import gaussian_moment, make_rule, make_rule_1d, moment_excess
from infsim.errors import ConfigurationError


@pytest.mark.unit
class TestTwoDimensionalRule:
    """The exp(-Q) rule reproduces the Gaussian moments."""

    def test_normalized(self):
        rule = make_rule(40)
        assert float(np.sum(rule.weights)) == pytest.approx(1.0, abs=1e-14)

    def test_second_moment(self):
        assert gaussian_moment(make_rule(40)) == pytest.approx(1.5, abs=1e-12)

    def test_covariance(self):
        """The exp(-Q) weight has covariance [[3/4, -1/4], [-1/4, 3/4]]."""
        rule = make_rule(40)
        assert rule.integrate(rule.y1 * rule.y2) == pytest.approx(-0.25, abs=1e-12)
        assert rule.integrate(rule.y1**2) == pytest.approx(0.75, abs=1e-12)
        assert rule.integrate(rule.y1) == pytest.approx(0.0, abs=1e-14)

    def test_exponential_moment(self):
        """E exp(a (y1 + y2)) = exp(a^2 / 2) since y1 + y2 has unit variance."""
        rule = make_rule(40)
        a = 0.7
        assert rule.integrate(np.exp(a * (rule.y1 + rule.y2))) == pytest.approx(
            math.exp(a * a / 2.0), rel=1e-12
        )

    def test_pruning_keeps_accuracy(self):
        """Pruned nodes do not cost accuracy at high order."""
        rule = make_rule(120)
        assert rule.weights.size < 120 * 120
        assert gaussian_moment(rule) == pytest.approx(1.5, abs=1e-12)

    def test_cached(self):
        assert make_rule(40) is make_rule(40)

    @pytest.mark.parametrize("order", [1, 0, 201])
    def test_order_range(self, order):
        with pytest.raises(ConfigurationError):
            make_rule(order)


@pytest.mark.unit
class TestOneDimensionalRule:
    """The standard normal rule."""

    def test_moments(self):
        rule = make_rule_1d(40)
        assert rule.integrate(np.ones_like(rule.nodes)) == pytest.approx(1.0, abs=1e-14)
        assert rule.integrate(rule.nodes**2) == pytest.approx(1.0, abs=1e-12)
        assert rule.integrate(rule.nodes**4) == pytest.approx(3.0, abs=1e-10)

    def test_moment_excess(self):
        """Two-point minus one-point second moment is 1/2."""
        assert moment_excess(make_rule(40), make_rule_1d(40)) == pytest.approx(0.5, abs=1e-12)
        assert moment_excess(make_rule(20)) == pytest.approx(0.5, abs=1e-12)

    def test_order_range(self):
        with pytest.raises(ConfigurationError):
            make_rule_1d(500)
