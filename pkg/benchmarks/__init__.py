"""infsim performance benchmarking suite."""
