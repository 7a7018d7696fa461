"""Benchmark configuration."""
from dataclasses import dataclass, field


@dataclass
class BenchmarkConfig:
    """Configuration for benchmark runs."""

    # Mixing operator benchmarks
    grid_sizes: list[int] = field(default_factory=lambda: [256, 512, 1024, 2048, 4096])
    eps: float = 0.1
    iterations: int = 20
    # The direct backend is quadratic in n; larger grids are skipped
    direct_max_n: int = 2048

    # Solver step benchmark
    step_grid_size: int = 2048
    step_iterations: int = 50

    # Quadrature / I_eps benchmark
    quad_orders: list[int] = field(default_factory=lambda: [20, 40, 80])

    # Output
    output_dir: str = "benchmark_results"
    output_format: str = "json"  # json, markdown


@dataclass
class BenchmarkResult:
    """Result of a single benchmark."""

    name: str
    iterations: int
    total_time_ms: float
    avg_time_ms: float
    min_time_ms: float
    max_time_ms: float
    p50_ms: float
    p95_ms: float
    p99_ms: float
    throughput_per_sec: float
    errors: int = 0
    metadata: dict = field(default_factory=dict)
