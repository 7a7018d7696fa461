#!/usr/bin/env python3
"""Main benchmark runner script."""
import argparse

from .config import BenchmarkConfig
from .operator_benchmarks import OperatorBenchmarks
from .runner import BenchmarkRunner


def run_all_benchmarks(config: BenchmarkConfig) -> BenchmarkRunner:
    """Run all benchmark suites."""
    runner = BenchmarkRunner(config)

    print("Starting infsim Performance Benchmarks")
    print("=" * 50)
    OperatorBenchmarks(config, runner).run_all()

    runner.print_summary()
    path = runner.save_results()
    print(f"\nResults saved to {path}")
    return runner


def main(argv=None):
    parser = argparse.ArgumentParser(description="Run infsim benchmarks")
    parser.add_argument("--sizes", default="256,512,1024,2048,4096", help="Comma-separated grid sizes")
    parser.add_argument("--eps", type=float, default=0.1)
    parser.add_argument("--iterations", type=int, default=20)
    parser.add_argument("--direct-max-n", type=int, default=2048)
    parser.add_argument("--output-dir", default="benchmark_results")
    parser.add_argument("--format", choices=["json", "markdown"], default="json")
    args = parser.parse_args(argv)

    config = BenchmarkConfig(
        grid_sizes=[int(s) for s in args.sizes.split(",") if s.strip()],
        eps=args.eps,
        iterations=args.iterations,
        direct_max_n=args.direct_max_n,
        output_dir=args.output_dir,
        output_format=args.format,
    )
    run_all_benchmarks(config)


if __name__ == "__main__":
    main()
