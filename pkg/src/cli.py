import logging
import math
from functools import wraps
from pathlib import Path
from typing import Callable

import click
import numpy as np
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from src import __version__
from src.configs import ConfigError, get_settings, load_scenario
from src.dependency_manager import DependencyContainer
from src.physics.errors import WernerSimError
from src.ports import ResultTable

EXIT_CONFIG = 2
EXIT_ENGINE = 3

POSITIVE = click.FloatRange(min=0.0, min_open=True)
NON_NEGATIVE = click.FloatRange(min=0.0)

err_console = Console(stderr=True)


def configure_logging(verbose: int) -> None:
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.getLevelNamesMapping()[get_settings().log_level]
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def output_options(command: Callable) -> Callable:
    command = click.option(
        "--tol-report", is_flag=True, help="Print the numerical tolerances in use to stderr."
    )(command)
    command = click.option(
        "--out",
        type=click.Path(dir_okay=False, writable=True, path_type=Path),
        default=None,
        help="Write results to this file instead of stdout.",
    )(command)
    command = click.option(
        "--json", "as_json", is_flag=True, help="Emit JSON instead of CSV."
    )(command)
    return command


def handle_errors(command: Callable) -> Callable:
    """Map configuration problems to exit code 2 and engine failures to exit code 3."""

    @wraps(command)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return command(*args, **kwargs)
        except (ConfigError, ValidationError) as exc:
            err_console.print(f"[bold red]Config error:[/bold red] {escape(str(exc))}")
            ctx.exit(EXIT_CONFIG)
        except WernerSimError as exc:
            err_console.print(f"[bold red]Engine error:[/bold red] {escape(str(exc))}")
            ctx.exit(EXIT_ENGINE)

    return wrapper


def print_tolerances() -> None:
    table = Table(title="Tolerances")
    table.add_column("name", style="cyan")
    table.add_column("value", justify="right")
    for name, value in DependencyContainer.get_scenario_tools().tolerance_report().items():
        table.add_row(name, f"{value:g}")
    err_console.print(table)


def emit(table: ResultTable, as_json: bool, out: Path | None, tol_report: bool) -> None:
    text = DependencyContainer.get_result_sink(as_json).render(table)
    if tol_report:
        print_tolerances()
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write_text(text, encoding="utf-8")
        err_console.print(f"Results written to [cyan]{escape(str(out))}[/cyan]")


def parse_grid(_ctx, _param, value: str | None) -> list[float] | None:
    if value is None:
        return None
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"not a comma-separated list of numbers: {value!r}") from exc


@click.group(
    help="Driven collective decay of two-level atoms and the Werner states it produces.\n\n"
    "All times are in units of 1/Gamma and all rates in units of Gamma."
)
@click.version_option(__version__, prog_name="werner-sim")
@click.option("-v", "--verbose", count=True, help="-v for INFO logging, -vv for DEBUG.")
def cli(verbose: int) -> None:
    configure_logging(verbose)


@cli.command()
@click.argument("config", type=click.Path(dir_okay=False, path_type=Path))
@output_options
@handle_errors
def run(config: Path, as_json: bool, out: Path | None, tol_report: bool) -> None:
    """Run the scenario file CONFIG."""
    scenario = load_scenario(config)
    table = DependencyContainer.get_scenario_tools().run_scenario(scenario)
    emit(table, as_json, out, tol_report)


@cli.command()
@click.argument("config", type=click.Path(dir_okay=False, path_type=Path))
@handle_errors
def validate(config: Path) -> None:
    """Parse CONFIG without running it."""
    scenario = load_scenario(config)
    click.echo(f"ok: {scenario.name} ({scenario.model}, {scenario.initial_state})")


@cli.command()
@click.option("--theta", type=float, default=0.0, show_default=True)
@click.option(
    "--drive", type=NON_NEGATIVE, default=5.0, show_default=True, help="Omega/Gamma."
)
@click.option("--tfinal", type=POSITIVE, default=20.0, show_default=True)
@click.option("--dt", type=POSITIVE, default=0.1, show_default=True)
@output_options
@handle_errors
def fig1a(theta, drive, tfinal, dt, as_json, out, tol_report) -> None:
    """Normalised <Psi+|rho(t)|Psi+> of the driven pair."""
    table = DependencyContainer.get_scenario_tools().figure_1a(theta, drive, tfinal, dt)
    emit(table, as_json, out, tol_report)


@cli.command()
@click.option("--grid-min", type=POSITIVE, default=0.05, show_default=True)
@click.option("--grid-max", type=POSITIVE, default=100.0, show_default=True)
@click.option("--points", type=click.IntRange(min=1), default=60, show_default=True)
@output_options
@handle_errors
def fig1b(grid_min, grid_max, points, as_json, out, tol_report) -> None:
    """Drive-dependent entropy term beta on a log-spaced grid."""
    if grid_max < grid_min:
        raise ConfigError("grid-max", "must not be below grid-min")
    grid = [float(x) for x in np.geomspace(grid_min, grid_max, points)]
    table = DependencyContainer.get_scenario_tools().figure_1b(grid)
    emit(table, as_json, out, tol_report)


@cli.command("four-particle")
@click.option("--theta", type=float, default=0.0, show_default=True)
@click.option(
    "--drive", type=NON_NEGATIVE, default=1e3, show_default=True, help="Omega/Gamma."
)
@click.option("--tfinal", type=POSITIVE, default=50.0, show_default=True)
@click.option("--dt", type=POSITIVE, default=0.5, show_default=True)
@output_options
@handle_errors
def four_particle(theta, drive, tfinal, dt, as_json, out, tol_report) -> None:
    """Driven four-atom system against the generalized Werner prediction."""
    tools = DependencyContainer.get_scenario_tools()
    table = tools.four_particle_scenario(theta, drive, tfinal, dt)
    emit(table, as_json, out, tol_report)


@cli.command("cavity-compare")
@click.option("--g", "g", type=POSITIVE, required=True)
@click.option("--kappa", type=POSITIVE, required=True)
@click.option("--xi", type=float, default=math.pi / 4, show_default="pi/4")
@click.option(
    "--nmax", type=click.IntRange(min=1), default=None, help="Fock cutoff [default: WERNER_N_MAX]."
)
@click.option("--tfinal", type=POSITIVE, default=5.0, show_default=True)
@click.option("--dt", type=POSITIVE, default=0.25, show_default=True)
@output_options
@handle_errors
def cavity_compare(g, kappa, xi, nmax, tfinal, dt, as_json, out, tol_report) -> None:
    """Full atom-cavity model against the reduced model with Gamma = g^2/kappa."""
    tools = DependencyContainer.get_scenario_tools()
    table = tools.cavity_compare(g, kappa, xi, nmax, tfinal, dt)
    emit(table, as_json, out, tol_report)


@cli.command()
@click.option("--ratios", callback=parse_grid, default=None, help="Comma-separated g/kappa values.")
@click.option("--nmax", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--tfinal", type=POSITIVE, default=5.0, show_default=True)
@output_options
@handle_errors
def elimination(ratios, nmax, tfinal, as_json, out, tol_report) -> None:
    """Bad-cavity convergence of the full model to the reduced one."""
    tools = DependencyContainer.get_scenario_tools()
    if ratios is None:
        table = tools.elimination_sweep(n_max=nmax, t_final=tfinal)
    else:
        table = tools.elimination_sweep(ratios, n_max=nmax, t_final=tfinal)
    emit(table, as_json, out, tol_report)


@cli.command()
@click.option("--fidelity", type=float, required=True, help="Singlet fidelity F in [0, 1].")
@output_options
@handle_errors
def werner(fidelity, as_json, out, tol_report) -> None:
    """Werner matrix, classification and entropy for singlet fidelity F."""
    table = DependencyContainer.get_scenario_tools().werner_report(fidelity)
    emit(table, as_json, out, tol_report)


@cli.command()
@click.option(
    "--grid", callback=parse_grid, required=True, help="Comma-separated Omega/Gamma values."
)
@click.option("--theta", type=float, default=0.0, show_default=True)
@output_options
@handle_errors
def sweep(grid, theta, as_json, out, tol_report) -> None:
    """Steady states over a drive grid, evaluated concurrently."""
    table = DependencyContainer.get_scenario_tools().drive_sweep(grid, theta)
    emit(table, as_json, out, tol_report)


def main() -> None:
    cli(prog_name="werner-sim")


if __name__ == "__main__":
    main()
