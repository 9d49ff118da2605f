"""Run one simulation."""

import json
from pathlib import Path
from typing import Optional

import click

from ..config import ConfigError, config_manager
from ..output import output_data, print_info, print_warning
from ..sim import RunOutcome, SimulationError
from ..workloads import simulate as run_simulation
from .common import (
    CORE_COLUMNS,
    SUMMARY_FIELDS,
    config_options,
    core_rows,
    out_option,
    output_format,
    run_summary,
)


@click.command("simulate")
@config_options
@click.option("--trace", "write_trace", is_flag=True, help="Write the message trace")
@click.option("--max-cycles", type=int, help="Cycle budget for this run")
@out_option()
@click.pass_context
def simulate(
    ctx,
    config_path: Optional[Path],
    overrides: tuple[str, ...],
    write_trace: bool,
    max_cycles: Optional[int],
    out_dir: Path,
):
    """Run the configured core programs until the machine is quiescent."""
    run = config_manager.load(config_path, overrides)
    if not run.programs:
        raise ConfigError("config has no core programs to simulate")
    if max_cycles is not None:
        if max_cycles < 1:
            raise ConfigError("--max-cycles must be positive")
        sim = run.sim.model_copy(update={"max_cycles": max_cycles})
        run = run.model_copy(update={"sim": sim})

    result = run_simulation(run, trace=write_trace)

    config_manager.echo(run, out_dir)
    summary = run_summary(result)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2))
    fmt = output_format(ctx)
    if fmt == "json":
        output_data({**summary, "cores": core_rows(result)}, format="json")
    else:
        output_data(summary, single_fields=SUMMARY_FIELDS)
        output_data(core_rows(result), CORE_COLUMNS, format=fmt, title="Cores")
    if result.trace is not None:
        path = result.trace.write(out_dir / "run.trace")
        print_info(f"Trace written to {path}")

    if result.outcome is RunOutcome.DEADLOCK:
        raise SimulationError(f"run deadlocked at cycle {result.cycles}")
    if result.outcome is RunOutcome.BUDGET_EXHAUSTED:
        print_warning(f"cycle budget of {run.sim.max_cycles} spent before the run finished")
