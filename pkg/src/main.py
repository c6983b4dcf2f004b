#!/usr/bin/env python3
"""
affinedim - Dimension theory of affine iterated function systems

A command-line tool that reads a system spec (maps, measure and experiment
settings) and computes entropies, Lyapunov spectra, pressures and Lyapunov
dimensions, or checks them against sampled local dimensions.
"""

import sys
from typing import Callable, Optional

import click

from . import __version__
from .commands import RunOptions, cmd_analyze, cmd_pressure, cmd_simulate
from .console import configure, log_error, log_info, log_verbose, print_banner
from .errors import AffineDimError, NumericalError, SpecError
from .regression import RegressionBatch, run_regressions
from .report import RunReport
from .spec_parser import SpecParser

REGRESSION_FAILURE_EXIT = 4


def determine_exit_code(result: RegressionBatch) -> int:
    """
    Determine the exit code of a regression run

    Args:
        result: RegressionBatch from run_regressions

    Returns:
        int: 0 when every check passed, 4 otherwise
    """
    if result.failed > 0:
        return REGRESSION_FAILURE_EXIT
    return 0


def exit_code_for(error: Exception) -> int:
    """2 for spec errors, 3 for numerical failures, 1 for anything else"""
    if isinstance(error, (SpecError, NumericalError)):
        return error.exit_code
    return 1


def setup_output(verbose: bool, quiet: bool, as_json: bool) -> None:
    """Apply the verbosity flags; --json keeps stdout for the report"""
    # Validate quiet and verbose aren't both set
    if quiet and verbose:
        click.echo("Error: --quiet and --verbose cannot be used together", err=True)
        sys.exit(1)
    configure(verbose=verbose and not as_json, quiet=quiet or as_json)


def report_error(message: str, as_json: bool) -> None:
    """Errors go to stderr even when --json silences the human output"""
    if as_json:
        click.echo(f"Error: {message}", err=True)
    else:
        log_error(message)


def summary_rows(report: RunReport):
    """Label/value rows for the human-readable summary of a report"""
    results = report.results
    rows = [("System", report.spec_name)]
    if "entropy" in results:
        rows.append(("Entropy", results["entropy"]["value"]))
    if "spectrum" in results:
        rows.append(("Lyapunov exponents", ", ".join(str(e) for e in results["spectrum"]["exponents"])))
    if results.get("lyapunov_dimension"):
        dimension = results["lyapunov_dimension"]
        label = " (at jump)" if dimension["discontinuity_hit"] else ""
        rows.append(("Lyapunov dimension", f"{dimension['value']}{label}"))
    if "norm_sup" in results:
        rows.append(("Sup norm", f"{results['norm_sup']:.6g} (half-norm: {results['half_norm']})"))
    if "median_of_medians" in results:
        rows.append(("Median slope", results["median_of_medians"]))
        rows.append(("Exceptional draws", results["exceptional_draws"] or "none"))
    if "root" in results:
        root = results["root"]
        rows.append(("Pressure zero", f"{root['root']} (jump: {root['jump']})"))
    if results.get("s_infinity") and not results["s_infinity"]["zero_flag"]:
        rows.append(("s_infinity", results["s_infinity"]["value"]))
    return rows


def run_command(
    name: str,
    command: Callable,
    spec_file: str,
    out: Optional[str],
    seed: Optional[int],
    threads: int,
    as_json: bool,
) -> None:
    """Parse the spec, run one analysis, write and print its report, exit"""
    log_verbose(f"Spec file: {spec_file}")
    log_verbose(f"Output directory: {out or 'None (no files written)'}")
    try:
        log_info("Parsing spec file...")
        spec = SpecParser(spec_file).parse()
        log_info(f"Loaded {spec.name}: {spec.ifs.describe()}")
        report = command(spec, RunOptions(seed=seed, threads=threads))
    except AffineDimError as e:
        report_error(str(e), as_json)
        sys.exit(exit_code_for(e))
    except Exception as e:
        report_error(f"{name} failed: {str(e)}", as_json)
        sys.exit(1)

    if out:
        written = report.write(out)
        for label, path in written.items():
            log_verbose(f"Wrote {label}: {path}")
    if as_json:
        click.echo(report.to_json())
    else:
        print_banner(f"{name.upper()} SUMMARY", summary_rows(report))
    sys.exit(0)


def spec_options(func):
    """Options shared by the spec-driven commands"""
    options = [
        click.option(
            '--spec', '-s', 'spec_file',
            required=True,
            type=click.Path(exists=True, dir_okay=False, readable=True),
            help='Path to the system spec (TOML)'
        ),
        click.option(
            '--out', '-o',
            type=click.Path(file_okay=False),
            help='Directory for report.json and CSV tables'
        ),
        click.option(
            '--seed',
            type=int,
            help='Override experiment.seed from the spec'
        ),
        click.option(
            '--threads',
            type=click.IntRange(min=1),
            default=1,
            show_default=True,
            envvar='AFFINEDIM_THREADS',
            help='Worker count for neighbour queries (env: AFFINEDIM_THREADS)'
        ),
        click.option('--json', 'as_json', is_flag=True, help='Print the report JSON to stdout'),
        click.option('--verbose', '-v', is_flag=True, help='Enable verbose output showing detailed progress'),
        click.option('--quiet', '-q', is_flag=True, help='Suppress all output except errors'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
@click.version_option(version=__version__, prog_name='affinedim')
def main() -> None:
    """
    Dimension theory of affine iterated function systems.

    Example usage:

        affinedim analyze --spec specs/diagonal_pair.toml

        affinedim simulate --spec specs/cantor.toml --out runs/cantor --seed 7

        affinedim pressure --spec specs/log_squared_diagonal.toml --json

        affinedim examples
    """


@main.command()
@spec_options
def analyze(spec_file, out, seed, threads, as_json, verbose, quiet) -> None:
    """Entropy, Lyapunov spectrum, measure pressure and Lyapunov dimension."""
    setup_output(verbose, quiet, as_json)
    run_command("analyze", cmd_analyze, spec_file, out, seed, threads, as_json)


@main.command()
@spec_options
def simulate(spec_file, out, seed, threads, as_json, verbose, quiet) -> None:
    """Local dimension slopes over independent translation draws."""
    setup_output(verbose, quiet, as_json)
    run_command("simulate", cmd_simulate, spec_file, out, seed, threads, as_json)


@main.command()
@spec_options
def pressure(spec_file, out, seed, threads, as_json, verbose, quiet) -> None:
    """System pressure curve, its zero and s_infinity."""
    setup_output(verbose, quiet, as_json)
    run_command("pressure", cmd_pressure, spec_file, out, seed, threads, as_json)


@main.command()
@click.option('--out', '-o', type=click.Path(file_okay=False), help='Directory for report.json')
@click.option('--json', 'as_json', is_flag=True, help='Print the results JSON to stdout')
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose output showing detailed progress')
@click.option('--quiet', '-q', is_flag=True, help='Only print failing checks')
def examples(out, as_json, verbose, quiet) -> None:
    """Run the built-in regression table; exit code 4 on any failure."""
    setup_output(verbose, quiet, as_json)
    log_info("Running regression checks...")
    result = run_regressions()

    report = RunReport(
        command="examples",
        spec_name="regressions",
        results={
            "passed": result.passed,
            "failed": result.failed,
            "checks": [r.to_dict() for r in result.results],
        },
        wall_times={r.name: r.elapsed for r in result.results},
    )
    if out:
        report.write(out)
    if as_json:
        click.echo(report.to_json())
    elif quiet:
        for r in result.results:
            if not r.passed:
                click.echo(f"FAIL {r.name}: {r.error_message or r.observed}", err=True)
    else:
        result.print_summary()

    log_verbose(f"Exit code will be: {determine_exit_code(result)}")
    sys.exit(determine_exit_code(result))


if __name__ == '__main__':
    main()
