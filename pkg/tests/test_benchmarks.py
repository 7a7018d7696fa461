"""
Tests for the benchmark runner and the kernel benchmarks.
"""
import json

import pytest

from benchmarks.config import BenchmarkConfig
from benchmarks.operator_benchmarks import OperatorBenchmarks, gaussian_density
from benchmarks.runner import BenchmarkRunner
from infsim.errors import DegenerateDensityError


@pytest.fixture
def config(tmp_path):
    return BenchmarkConfig(
        grid_sizes=[128, 256],
        iterations=2,
        direct_max_n=128,
        step_grid_size=256,
        step_iterations=2,
        quad_orders=[20],
        output_dir=str(tmp_path / "results"),
    )


@pytest.mark.unit
class TestBenchmarkRunner:
    """Timing statistics and result files."""

    def test_percentiles(self):
        data = [1.0, 2.0, 3.0, 4.0, 5.0]
        assert BenchmarkRunner._percentiles(data) == pytest.approx((3.0, 4.8, 4.96))
        assert BenchmarkRunner._percentiles([]) == (0.0, 0.0, 0.0)

    def test_calculate_result(self, config):
        runner = BenchmarkRunner(config)
        result = runner._calculate_result("demo", [2.0, 4.0, 6.0], 1, {"n": 3})
        assert result.iterations == 3
        assert result.avg_time_ms == 4.0
        assert result.min_time_ms == 2.0
        assert result.max_time_ms == 6.0
        assert result.throughput_per_sec == pytest.approx(250.0)
        assert result.errors == 1
        assert runner.results == [result]

    def test_errors_are_counted(self, config):
        runner = BenchmarkRunner(config)

        def fail():
            raise DegenerateDensityError(0.0)

        result = runner.run_sync_benchmark("failing", fail, 3)
        assert result.errors == 3
        assert result.iterations == 3

    def test_save_json(self, config):
        runner = BenchmarkRunner(config)
        runner.run_sync_benchmark("noop", lambda: None, 2, metadata={"n": 1})
        path = runner.save_results("run")
        data = json.loads(path.read_text())
        assert path.name == "run.json"
        assert data["results"][0]["name"] == "noop"
        assert data["results"][0]["metadata"] == {"n": 1}

    def test_save_markdown(self, config):
        config.output_format = "markdown"
        runner = BenchmarkRunner(config)
        runner.run_sync_benchmark("noop", lambda: None, 2)
        path = runner.save_results("run")
        assert path.suffix == ".md"
        assert "| noop | 2 |" in path.read_text()


@pytest.mark.integration
class TestOperatorBenchmarks:
    def test_gaussian_density_has_unit_mass(self):
        f = gaussian_density(1024, 0.1)
        assert f.mass == pytest.approx(1.0, abs=1e-9)
        assert f.grid.h == pytest.approx(0.1 / 16)

    def test_run_all(self, config):
        runner = BenchmarkRunner(config)
        OperatorBenchmarks(config, runner).run_all()
        names = [r.name for r in runner.results]
        assert names == [
            "mixing_fft_n128",
            "mixing_direct_n128",
            "mixing_fft_n256",
            "solver_step_n256",
            "i_eps_order20",
        ]
        assert all(r.errors == 0 for r in runner.results)
        assert all(r.iterations == 2 for r in runner.results)
