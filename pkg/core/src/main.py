"""
===============================================================================
    Name: Main Command Line Entry
    Description:  Command-line entry point. Each subcommand reads its JSON
                  input documents, hands them to CommandProcessor and writes
                  the resulting report with report_writer. Logs go to stderr
                  (and optionally a file) so stdout carries only the report.

                  Exit codes:
                    0  success, every checked bound holds
                    1  a verified inequality or residual check failed
                       (the report is still written)
                    2  input or usage error

    Created Date: 2024-10-02
    Last Updated: 2024-10-08
    Version:      1.0.2

    License:      GNU General Public License v3.0

    Usage:        $ python main.py entropy state.json --measure renyi:2
                  $ python main.py --format csv compress state.json --n 16 --rate 0.7
                  $ python main.py transition src.json dst.json --mode probabilistic
                  $ python main.py models thermal --nbar 1 --N-list 4,8,16,64

    Requirements: Python 3.10.12, typer, loguru, python-dotenv

    Notes:        A global tolerance can be set with --tol or the CE_TOL
                  environment variable (also read from a .env file).
===============================================================================
"""

import sys
from pathlib import Path
from typing import Callable, List, Optional

import click
import typer
from loguru import logger

from command_processor import CommandProcessor, exit_code, report_body
from qcore import CatalyticEntropyError
from report_writer import emit_report
from settings import LogBase, OutputFormat, RunConfig, load_tolerances


app = typer.Typer(
    add_completion=False,
    no_args_is_help=True,
    help="Entropy measures, dephasing principles, maximum-entropy estimation and verified state transitions."
)
models_app = typer.Typer(no_args_is_help=True, help="Thermal, Gaussian and spin-cluster models.")
app.add_typer(models_app, name="models")


def _stderr_sink(message):
    sys.stderr.write(message)


def configure_logging(level: str, log_file: Optional[str] = None):
    logger.remove()
    logger.add(_stderr_sink, level=level)
    if log_file:
        logger.add(log_file, level="DEBUG")
        logger.info("Logging to file: {}", log_file)


def _read(path: Optional[Path]) -> Optional[str]:
    return None if path is None else path.read_text(encoding="utf-8")


def _parse_list(text: str, cast: Callable):
    try:
        values = [cast(token) for token in text.split(",") if token.strip()]
    except ValueError:
        raise typer.BadParameter(f"'{text}' is not a comma-separated list")
    if not values:
        raise typer.BadParameter("list is empty")
    return values


def _processor(ctx: typer.Context) -> CommandProcessor:
    return CommandProcessor(ctx.obj)


def _finish(ctx: typer.Context, record: dict):
    config: RunConfig = ctx.obj
    if record.get("status") == "error":
        logger.error("Error Code: {}", record.get("error_code"))
        logger.error("Error Message: {}", record.get("error_message"))
        logger.error("Details: {}", record.get("details"))
    try:
        emit_report(report_body(record), config.format, config.out)
    except CatalyticEntropyError as e:
        logger.error("Could not write the report: {}", e)
        raise typer.Exit(2)
    raise typer.Exit(exit_code(record))


def _existing_file():
    return typer.Argument(..., exists=True, dir_okay=False, readable=True)


@app.callback()
def main_options(
    ctx: typer.Context,
    seed: int = typer.Option(0, "--seed", help="Seed for every random draw."),
    tol: Optional[float] = typer.Option(None, "--tol", help="Global tolerance; overrides CE_TOL."),
    base: LogBase = typer.Option(LogBase.BITS, "--base", help="Logarithm base for entropies."),
    fmt: OutputFormat = typer.Option(OutputFormat.JSON, "--format", help="Report format."),
    out: Optional[str] = typer.Option(None, "--out", help="Report path; stdout when omitted."),
    log_level: str = typer.Option("INFO", "--log-level", help="stderr log level."),
    log_file: Optional[str] = typer.Option(None, "--log-file", help="Also log (DEBUG) to this file."),
):
    configure_logging(log_level.upper(), log_file)
    ctx.obj = RunConfig(
        command=ctx.invoked_subcommand or "",
        tolerances=load_tolerances(tol),
        seed=seed,
        base=base,
        format=fmt,
        out=out,
        log_level=log_level,
        log_file=log_file
    )


@app.command()
def entropy(
    ctx: typer.Context,
    state: Path = _existing_file(),
    measure: str = typer.Option("vn", "--measure", help="vn | renyi:A | tsallis:Q"),
):
    """Entropy of a density matrix."""
    _finish(ctx, _processor(ctx).entropy(_read(state), measure))


@app.command()
def dephase(
    ctx: typer.Context,
    state: Path = _existing_file(),
    basis: Optional[Path] = typer.Argument(None, exists=True, dir_okay=False),
):
    """Dephase a state in a basis (computational when no basis file is given)."""
    _finish(ctx, _processor(ctx).dephase(_read(state), _read(basis)))


@app.command("verify-principles")
def verify_principles(
    ctx: typer.Context,
    state: Path = _existing_file(),
    measure: str = typer.Option("vn", "--measure"),
    samples: int = typer.Option(500, "--samples", min=1),
    uncertainty: int = typer.Option(0, "--uncertainty", min=0, help="Random basis pairs for the uncertainty relation."),
):
    """Sample random bases and check the dephasing and joint-entropy bounds."""
    _finish(ctx, _processor(ctx).verify_principles(_read(state), measure, samples, uncertainty))


@app.command("network-chain")
def network_chain(
    ctx: typer.Context,
    links: Path = _existing_file(),
    measure: str = typer.Option("vn", "--measure"),
):
    """Entropy table of a chain of entangled links."""
    _finish(ctx, _processor(ctx).network_chain(_read(links), measure))


@app.command()
def maxent(
    ctx: typer.Context,
    problem: Path = _existing_file(),
    relaxed: bool = typer.Option(False, "--relaxed", help="Solve the single-constraint relaxation."),
    oracle: bool = typer.Option(False, "--oracle", help="Also run the brute-force grid oracle."),
):
    """Maximum-entropy estimate from dephased observations."""
    _finish(ctx, _processor(ctx).maxent(_read(problem), relaxed, oracle))


@app.command()
def transition(
    ctx: typer.Context,
    source: Path = _existing_file(),
    target: Path = _existing_file(),
    mode: str = typer.Option("noisy", "--mode", help="noisy | catalytic | approx | probabilistic"),
    epsilon: float = typer.Option(0.01, "--epsilon"),
    catalyst_dim: Optional[int] = typer.Option(None, "--catalyst-dim", min=1),
    budget: int = typer.Option(2000, "--budget", min=0),
    basis: Optional[Path] = typer.Option(None, "--basis", exists=True, dir_okay=False),
    emit_unitary: bool = typer.Option(False, "--emit-unitary"),
):
    """Construct and verify a unitary realizing source -> target."""
    record = _processor(ctx).transition(
        _read(source), _read(target), mode, epsilon, catalyst_dim, budget, _read(basis), emit_unitary
    )
    _finish(ctx, record)


@app.command()
def compress(
    ctx: typer.Context,
    state: Path = _existing_file(),
    basis: Optional[Path] = typer.Argument(None, exists=True, dir_okay=False),
    n: List[int] = typer.Option(..., "--n", help="Block length (repeatable)."),
    rate: List[float] = typer.Option(..., "--rate", help="Rate in qubits per symbol (repeatable)."),
):
    """Typical-subspace fidelity over block lengths and rates."""
    _finish(ctx, _processor(ctx).compress(_read(state), _read(basis), n, rate))


@models_app.command("thermal")
def models_thermal(
    ctx: typer.Context,
    nbar: float = typer.Option(..., "--nbar", min=0.0),
    n_list: str = typer.Option("4,8,16,32,64", "--N-list", help="Comma-separated truncation levels."),
    measure: str = typer.Option("vn", "--measure"),
):
    """Entropy of truncated thermal states against the untruncated limit."""
    levels = _parse_list(n_list, int)
    _finish(ctx, _processor(ctx).models_thermal(nbar, levels, measure))


@models_app.command("gaussian")
def models_gaussian(
    ctx: typer.Context,
    cov: Path = typer.Option(..., "--cov", exists=True, dir_okay=False),
    transmissivity: float = typer.Option(..., "--lambda"),
):
    """Mix a one-mode covariance with vacuum on a beamsplitter."""
    _finish(ctx, _processor(ctx).models_gaussian(_read(cov), transmissivity))


@models_app.command("spin")
def models_spin(
    ctx: typer.Context,
    m: int = typer.Option(..., "--m", min=1),
    n: int = typer.Option(..., "--n", min=0),
    omega: Path = typer.Option(..., "--omega", exists=True, dir_okay=False),
    t_list: str = typer.Option(..., "--T-list", help="Comma-separated evolution times."),
    measure: str = typer.Option("vn", "--measure"),
    basis: Optional[Path] = typer.Option(None, "--basis", exists=True, dir_okay=False),
):
    """Center-cluster entropies along a time grid."""
    times = _parse_list(t_list, float)
    _finish(ctx, _processor(ctx).models_spin(m, n, _read(omega), times, measure, _read(basis)))


def dispatch(argv: Optional[List[str]] = None) -> int:
    try:
        result = app(args=argv, standalone_mode=False)
    except click.exceptions.ClickException as e:
        e.show()
        return 2
    except click.exceptions.Abort:
        return 2
    return 0 if result is None else int(result)


if __name__ == "__main__":
    sys.exit(dispatch())
