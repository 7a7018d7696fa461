"""
Main CLI entry point for infsim.
"""

import functools
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import click

from infsim.cli.config import RunConfig, check_buildable, find_config_file, load_config
from infsim.core.profiles import positive_support, v_star_field
from infsim.core.selection import AssumptionReport, check_assumptions
from infsim.errors import ConfigurationError, InfsimError
from infsim.harness.selftest import run_self_tests
from infsim.harness.sweep import REPORT_COLUMNS, convergence_sweep
from infsim.models.serialization import format_time, table_frame
from infsim.models.state import SimOutput
from infsim.observability.logging import setup_json_logging
from infsim.persistence.snapshots import OutputStore
from infsim.runtime.solver import detect_critical_jump, log_mass_rate, run

SELFTEST_COLUMNS = ("name", "value", "target", "tolerance", "passed")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class InfsimGroup(click.Group):
    """Click group that reports an unknown subcommand with exit code 1."""

    def resolve_command(self, ctx, args):
        try:
            return super().resolve_command(ctx, args)
        except click.UsageError as e:
            e.exit_code = EXIT_VALIDATION
            raise


def _fail(ctx: click.Context, error: InfsimError):
    click.echo(f"Error: {error}", err=True)
    ctx.exit(EXIT_VALIDATION if isinstance(error, ConfigurationError) else EXIT_RUNTIME)


def _assumptions(config: RunConfig, model, traj) -> AssumptionReport:
    report = check_assumptions(model, traj, config.build_grid(), config.alpha)
    for name, ok in report.passed.items():
        if not ok:
            click.echo(f"Warning: assumption {name} failed", err=True)
    return report


def _fmt(value) -> str:
    return f"{value:.10g}" if isinstance(value, float) else str(value)


def _run_summary(output: SimOutput, model) -> List[str]:
    jump = detect_critical_jump(output, model)
    final = output.final
    return [
        f"t_final: {_fmt(final.t)}",
        f"log_mass: {_fmt(final.log_mass)}",
        f"log_mass_rate: {_fmt(log_mass_rate(output))}",
        f"clamped_fraction: {_fmt(final.clamped_fraction)}",
        f"negative_clips: {final.negative_clips}",
        f"valid: {final.valid}",
        f"regime: {jump.kind}",
        f"final_mode: {_fmt(jump.final_mode)}",
        f"relaxation_time: {_fmt(jump.relaxation_time)}",
        f"crossing_time: {_fmt(jump.crossing_time)}",
        f"dwell_time: {_fmt(jump.dwell_time)}",
    ]


def _resolve_config(ctx: click.Context, config_path: Optional[str], out_dir: Optional[str]) -> RunConfig:
    """
    Load the run config for a subcommand. Options given after the subcommand
    win over the group's; without any --config the working directory and its
    parents are searched for infsim.conf.
    """
    group = ctx.ensure_object(dict)
    config_path = config_path or group.get("config_option")
    out_dir = out_dir or group.get("out_option")
    path = Path(config_path) if config_path else find_config_file()
    try:
        resolved = load_config(path)
        if out_dir is not None:
            resolved = resolved.with_overrides(out_dir=out_dir)
        check_buildable(resolved)
    except InfsimError as e:
        _fail(ctx, e)

    level = logging.DEBUG if group.get("verbose") else getattr(logging, resolved.logging.level)
    setup_json_logging(level=level, json_format=resolved.logging.format == "json")
    group["config"] = resolved
    group["config_path"] = path
    return resolved


def config_options(fn):
    """Add --config/--out to a subcommand and resolve the config before it runs."""

    @click.option(
        "--config", "-c", "config_path", type=click.Path(exists=True, dir_okay=False),
        help="Path to config file (wins over the group option)",
    )
    @click.option("--out", "-o", "out_dir", help="Output directory (overrides out_dir)")
    @click.pass_context
    @functools.wraps(fn)
    def wrapper(ctx, config_path, out_dir, **kwargs):
        _resolve_config(ctx, config_path, out_dir)
        return ctx.invoke(fn, **kwargs)

    return wrapper


@click.group(cls=InfsimGroup)
@click.option("--config", "-c", type=click.Path(exists=True, dir_okay=False), help="Path to config file")
@click.option("--out", "-o", "out_dir", help="Output directory (overrides out_dir)")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
@click.pass_context
def cli(ctx, config, out_dir, verbose):
    """infsim - infinitesimal model simulation and verification."""
    ctx.ensure_object(dict)
    ctx.obj["config_option"] = config
    ctx.obj["out_option"] = out_dir
    ctx.obj["verbose"] = verbose


@cli.command()
@click.option("--eps", type=float, help="Run this eps instead of the configured list")
@config_options
@click.pass_context
def simulate(ctx, eps):
    """Run the solver and write snapshots, mass and mode series.

    Examples:
        infsim -c run.conf simulate
        infsim -c run.conf --out runs/a simulate --eps 0.05
    """
    config: RunConfig = ctx.obj["config"]
    eps_values = [eps] if eps is not None else list(config.epsilon)
    root = Path(config.out_dir)
    try:
        model = config.build_model()
        traj = config.build_trajectory(model)
        g = config.build_grid()
        report = _assumptions(config, model, traj)
        for value in eps_values:
            store = OutputStore(root / f"eps{format_time(value)}" if len(eps_values) > 1 else root)
            output = run(
                model,
                traj,
                value,
                g,
                t_end=config.time.t_end,
                snapshot_every=config.time.snapshot_every,
                dt_factor=config.time.dt_factor,
                backend=config.operator.backend,
                profile=config.init.profile,
            )
            store.save_output(output)
            store.write_meta(
                config.with_overrides(epsilon=[value]).to_dotted(),
                {
                    "run": [f"{k}: {_fmt(v)}" for k, v in output.config.items()],
                    "summary": _run_summary(output, model),
                    "assumptions": report.summary_lines(),
                    "notes": list(output.notes),
                },
            )
            click.echo(
                f"eps={value:g}: {len(output.snapshots)} snapshots, "
                f"log_mass={output.final.log_mass:.6g}, valid={output.valid} -> {store.root}"
            )
            for note in output.notes:
                click.echo(f"Note: {note}", err=True)
    except InfsimError as e:
        _fail(ctx, e)


@cli.command()
@click.option("--every", default=10, show_default=True, help="Keep every n-th trajectory sample")
@config_options
@click.pass_context
def profiles(ctx, every):
    """Write the reference trajectory and V* around z*(t_end)."""
    config: RunConfig = ctx.obj["config"]
    try:
        model = config.build_model()
        traj = config.build_trajectory(model)
        g = config.build_grid()
        report = _assumptions(config, model, traj)
        store = OutputStore(config.out_dir)
        store.save_trajectory(traj, every=every)

        z_end = float(traj.z_star[-1])
        support = positive_support(model, z_end, g)
        V = v_star_field(model, z_end, g, support=support)
        store.save_field(V, "vstar.csv")
        lo, hi = g.points[support[0]], g.points[support[1] - 1]
        store.write_meta(
            config.to_dotted(),
            {
                "profiles": [
                    f"z_star_final: {_fmt(z_end)}",
                    f"vstar_support: [{_fmt(float(lo))}, {_fmt(float(hi))}]",
                    f"trajectory_samples: {traj.times.size}",
                ],
                "assumptions": report.summary_lines(),
            },
        )
        click.echo(f"Wrote trajectory.csv and vstar.csv to {store.root}")
    except InfsimError as e:
        _fail(ctx, e)


@cli.command()
@config_options
@click.pass_context
def verify(ctx):
    """Run the operator, spectral and series self-tests."""
    config: RunConfig = ctx.obj["config"]
    try:
        results = run_self_tests(config)
    except InfsimError as e:
        _fail(ctx, e)

    frame = table_frame(
        [{c: getattr(r, c) for c in SELFTEST_COLUMNS} for r in results], SELFTEST_COLUMNS
    )
    click.echo(frame.to_string(index=False))
    failed = [r for r in results if not r.passed]
    for r in failed:
        if r.detail:
            click.echo(f"{r.name}: {r.detail}", err=True)
    if failed:
        click.echo(f"{len(failed)} of {len(results)} self-tests failed", err=True)
        ctx.exit(EXIT_VALIDATION)
    click.echo(f"All {len(results)} self-tests passed")


def _parse_eps(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"Cannot parse eps list {text!r}", config_key="epsilon")
    if not values:
        raise ConfigurationError("Empty eps list", config_key="epsilon")
    return values


@cli.command()
@click.option("--eps", "eps_text", help="Comma-separated eps list (overrides epsilon)")
@config_options
@click.pass_context
def sweep(ctx, eps_text):
    """Convergence study over a decreasing eps list.

    Examples:
        infsim -c quadratic.conf sweep --eps 0.2,0.1,0.05
        infsim sweep --config quadratic.conf --out runs/q
    """
    config: RunConfig = ctx.obj["config"]
    try:
        if eps_text is not None:
            config = config.with_overrides(epsilon=_parse_eps(eps_text))
        model = config.build_model()
        traj = config.build_trajectory(model)
        assumptions = _assumptions(config, model, traj).summary_lines()
        root = Path(config.out_dir)
        store = OutputStore(root)
        report = convergence_sweep(config, out_root=root, meta_sections={"assumptions": assumptions})
    except InfsimError as e:
        _fail(ctx, e)

    frame = table_frame(report.table(), REPORT_COLUMNS)
    store.save_table(frame, "report.csv")
    sections: Dict[str, List[str]] = {
        "report": [
            f"horizon: {_fmt(report.horizon)}",
            f"alpha: {_fmt(report.alpha)}",
            f"slope_V: {_fmt(report.slope_V)}",
            f"slope_mean_shift: {_fmt(report.slope_mean_shift)}",
            f"slope_lambda: {_fmt(report.slope_lambda)}",
            f"slope_p_dynamics: {_fmt(report.slope_p_dynamics)}",
            f"K0: {_fmt(report.K0)}",
        ]
        + [f"{name}: {'passed' if ok else 'FAILED'}" for name, ok in report.passed.items()]
        + [f"row eps={r.eps:g}: {r.error}" for r in report.rows if r.error],
        "assumptions": assumptions,
        "notes": list(report.notes),
    }
    store.write_meta(config.to_dotted(), sections)

    click.echo(frame.to_string(index=False))
    for note in report.notes:
        click.echo(f"Note: {note}", err=True)
    if not report.all_passed:
        failed = ", ".join(name for name, ok in report.passed.items() if not ok)
        click.echo(f"Convergence checks failed: {failed}", err=True)
        ctx.exit(EXIT_VALIDATION)


@cli.command()
@config_options
@click.pass_context
def check(ctx):
    """Report the structural assumptions on m; never fails on a violated one."""
    config: RunConfig = ctx.obj["config"]
    try:
        model = config.build_model()
        traj = config.build_trajectory(model)
        report = _assumptions(config, model, traj)
    except InfsimError as e:
        _fail(ctx, e)

    click.echo(f"Selection: {model.description}")
    for line in report.summary_lines():
        click.echo(f"  {line}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Console entry point: 0 success, 1 validation failure, 2 runtime error."""
    try:
        result = cli.main(
            args=list(argv) if argv is not None else None,
            prog_name="infsim",
            standalone_mode=False,
        )
    except click.ClickException as e:
        e.show()
        return EXIT_VALIDATION
    except click.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_VALIDATION
    except ConfigurationError as e:
        click.echo(f"Error: {e}", err=True)
        return EXIT_VALIDATION
    except InfsimError as e:
        click.echo(f"Error: {e}", err=True)
        return EXIT_RUNTIME
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
