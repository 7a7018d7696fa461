"""Mixing operator, solver step and I_eps benchmarks."""
import math

import numpy as np

from infsim.core.grid import make_grid
from infsim.core.operator import apply_B_direct, apply_B_fft, eval_I_eps
from infsim.core.profiles import v_star_field
from infsim.core.quadrature import make_rule, make_rule_1d
from infsim.core.selection import SelectionModel
from infsim.models.grid import Field
from infsim.models.state import SimState
from infsim.runtime.solver import step

from .config import BenchmarkConfig
from .runner import BenchmarkRunner


def gaussian_density(n: int, eps: float, resolution: int = 16) -> Field:
    """N(0, eps^2) on a centred grid with h = eps/resolution."""
    half_width = 0.5 * (n - 1) * eps / resolution
    g = make_grid(-half_width, half_width, n)
    values = np.exp(-(g.points**2) / (2 * eps**2)) / (eps * math.sqrt(2 * math.pi))
    return Field(g, values)


class OperatorBenchmarks:
    """Timing of the numerical kernels across grid sizes."""

    def __init__(self, config: BenchmarkConfig, runner: BenchmarkRunner):
        self.config = config
        self.runner = runner

    def run_all(self):
        self.benchmark_mixing_backends()
        self.benchmark_solver_step()
        self.benchmark_i_eps()

    def benchmark_mixing_backends(self):
        """B_eps by direct summation and by FFT for every grid size."""
        eps = self.config.eps
        for n in self.config.grid_sizes:
            f = gaussian_density(n, eps)
            self.runner.run_sync_benchmark(
                f"mixing_fft_n{n}", apply_B_fft, self.config.iterations, f, eps,
                metadata={"n": n, "backend": "fft"},
            )
            if n <= self.config.direct_max_n:
                self.runner.run_sync_benchmark(
                    f"mixing_direct_n{n}", apply_B_direct, self.config.iterations, f, eps,
                    metadata={"n": n, "backend": "direct"},
                )

    def benchmark_solver_step(self):
        """One exponential step with the FFT backend on a quadratic model."""
        eps = self.config.eps
        n = self.config.step_grid_size
        f = gaussian_density(n, eps)
        state = SimState(t=0.0, density=f, log_mass=0.0, eps=eps)
        model = SelectionModel.quadratic(1.0)
        self.runner.run_sync_benchmark(
            f"solver_step_n{n}", step, self.config.step_iterations, state, model, 0.1 * eps**2,
            metadata={"n": n},
        )

    def benchmark_i_eps(self):
        """I_eps at one trait for several quadrature orders."""
        model = SelectionModel.quadratic(1.0)
        g = make_grid(-8.0, 8.0, 4096)
        V = v_star_field(model, 0.0, g)
        for order in self.config.quad_orders:
            rule, rule_1d = make_rule(order), make_rule_1d(order)
            self.runner.run_sync_benchmark(
                f"i_eps_order{order}", eval_I_eps, self.config.iterations,
                0.0, V, self.config.eps, 0.0, 0.5, rule, rule_1d,
                metadata={"order": order, "nodes": int(rule.weights.size)},
            )
