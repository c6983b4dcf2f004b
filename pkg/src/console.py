"""
Console output helpers shared by the CLI and the library modules.

Verbosity is process-wide: the CLI calls configure() once and every module
reports through these functions.
"""

import click


# Global variables for controlling output verbosity
VERBOSE = False
QUIET = False


def configure(verbose: bool = False, quiet: bool = False) -> None:
    """Set the output mode for this process"""
    global VERBOSE, QUIET
    VERBOSE = verbose
    QUIET = quiet


def log_info(message: str) -> None:
    """Log info message if not in quiet mode"""
    if not QUIET:
        click.echo(message)


def log_verbose(message: str) -> None:
    """Log verbose message if verbose mode is enabled"""
    if VERBOSE and not QUIET:
        click.echo(f"[VERBOSE] {message}")


def log_error(message: str) -> None:
    """Log error message (always shown unless quiet)"""
    if not QUIET:
        click.echo(f"Error: {message}", err=True)


def log_warning(message: str) -> None:
    """Log warning message if not in quiet mode"""
    if not QUIET:
        click.echo(f"Warning: {message}", err=True)


def print_banner(title: str, rows) -> None:
    """
    Print a titled block of aligned label/value rows

    Args:
        title: Heading shown between the rule lines
        rows: Iterable of (label, value) pairs
    """
    if QUIET:
        return
    rows = list(rows)
    width = max((len(label) for label, _ in rows), default=0) + 1
    click.echo("\n" + "=" * 60)
    click.echo(title)
    click.echo("=" * 60)
    for label, value in rows:
        click.echo(f"{(label + ':').ljust(width + 1)} {value}")
    click.echo("=" * 60)
