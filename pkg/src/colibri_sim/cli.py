"""Main CLI entry point for colibri-sim."""

# Load .env FIRST so COLIBRI_SIM_SEED can live there
from pathlib import Path
from dotenv import load_dotenv

env_path = Path.cwd() / ".env"
if env_path.exists():
    load_dotenv(env_path)

import logging
from typing import Optional, Sequence

import click
from rich.console import Console
from rich.logging import RichHandler

from . import __version__
from .bench import ExperimentAborted
from .commands import bench, cost_model, replay, simulate, verify
from .config import ConfigError
from .monitor import ProtocolViolation
from .sim import SimulationError
from .trace import TraceParseError
from .verify import VerificationFailed

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_INTERRUPTED = 130


def setup_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


@click.group()
@click.version_option(version=__version__)
@click.option("--json", "output_format", flag_value="json", help="Output as JSON")
@click.option("--csv", "output_format", flag_value="csv", help="Output as CSV")
@click.option("--verbose", "-v", count=True, help="-v for progress, -vv for debug logging")
@click.pass_context
def main(ctx, output_format, verbose):
    """colibri-sim - simulate, verify and benchmark queue-based atomics.

    Models a banked-memory manycore where memory controllers defer LRwait
    responses and chain waiting cores through per-core queue nodes.

    \b
    Quick Start:
      1. Run 'colibri-sim simulate --config configs/fig2.yaml --trace'
      2. Run 'colibri-sim verify --config configs/fig2.yaml'
      3. Run 'colibri-sim bench histogram --out results'
    """
    setup_logging(verbose)
    ctx.ensure_object(dict)
    ctx.obj["output_format"] = output_format


# Register commands
main.add_command(simulate)
main.add_command(verify)
main.add_command(bench)
main.add_command(cost_model)
main.add_command(replay)


def parse_and_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command line and map its outcome to an exit code."""
    try:
        code = main(args=list(argv) if argv is not None else None, standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except ConfigError as e:
        click.echo(f"Config error: {e}", err=True)
        return EXIT_CONFIG
    except TraceParseError as e:
        click.echo(f"Trace error: {e}", err=True)
        return EXIT_CONFIG
    except VerificationFailed as e:
        click.echo(f"Verification failed: {e}", err=True)
        for path in e.counterexamples:
            click.echo(f"  counterexample: {path}", err=True)
        return EXIT_FAILED
    except (ExperimentAborted, ProtocolViolation, SimulationError) as e:
        click.echo(f"Error: {e}", err=True)
        return EXIT_FAILED
    except click.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_FAILED
    except KeyboardInterrupt:
        click.echo("Aborted!", err=True)
        return EXIT_INTERRUPTED
    return code if isinstance(code, int) else EXIT_OK


def cli():
    """Entry point with error handling."""
    raise SystemExit(parse_and_dispatch())


if __name__ == "__main__":
    cli()
