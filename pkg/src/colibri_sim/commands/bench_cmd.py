"""Benchmark sweeps."""

from pathlib import Path
from typing import Optional

import click

from ..bench import CSV_COLUMNS, bench_machine, run_experiment, write_csv
from ..config import ExperimentName, ExperimentSpec, config_manager
from ..output import Column, output_data, print_info, print_success, print_warning
from ..plots import emit_plots
from .common import config_options, out_option, output_format

ROW_COLUMNS = [
    Column("flavor", "Flavor"),
    Column("sweep_value", "Sweep", "d"),
    Column("throughput", "Ops/cycle", ".4f"),
    Column("ops_min", "Min ops", "d"),
    Column("ops_max", "Max ops", "d"),
    Column("spread", "Spread", ".3f"),
    Column("retries", "Retries", ".2f"),
    Column("msgs_per_op", "Msgs/op", ".2f"),
    Column("bank_accesses_per_op", "Bank acc/op", ".2f"),
    Column("worker_rel_perf", "Worker rel", ".3f"),
]

CSV_FIELDS = [Column(name, name) for name in CSV_COLUMNS]


@click.group()
def bench():
    """Run contention sweeps and plot their results."""
    pass


def _sweep_command(name: ExperimentName):
    @config_options
    @click.option("--jobs", "-j", default=1, show_default=True, help="Parallel sweep points")
    @click.option("--full-scale", is_flag=True, help="256 cores and 1024 banks")
    @click.option("--no-plots", is_flag=True, help="Skip plot rendering")
    @out_option("results")
    @click.pass_context
    def command(
        ctx,
        config_path: Optional[Path],
        overrides: tuple[str, ...],
        jobs: int,
        full_scale: bool,
        no_plots: bool,
        out_dir: Path,
    ):
        run = config_manager.load(config_path, overrides)
        spec = run.experiment or ExperimentSpec(name=name)
        spec = spec.model_copy(update={"name": name})
        sim = bench_machine(run.sim if "sim" in run.model_fields_set else None, full_scale)
        resolved = run.model_copy(update={"sim": sim, "experiment": spec})
        config_manager.echo(resolved, out_dir)

        rows = run_experiment(spec, sim, jobs=max(1, jobs), out_dir=out_dir)

        csv_path = write_csv(rows, out_dir / f"{name.value}.csv")
        fmt = output_format(ctx)
        if fmt == "csv":
            output_data([row.csv_row() for row in rows], CSV_FIELDS, "csv")
        else:
            output_data(rows, ROW_COLUMNS, format=fmt, title=f"{name.value} on {sim.n_cores} cores")
        print_success(f"Wrote {len(rows)} rows to {csv_path}")
        unmet = [f"{row.flavor}@{row.sweep_value}" for row in rows if not row.all_quotas_met]
        if unmet:
            print_warning(f"cores gave up or fell short of their quota at {', '.join(unmet)}")
        if not no_plots:
            for path in emit_plots(csv_path, out_dir):
                print_info(f"Plot written to {path}")

    command.__doc__ = {
        ExperimentName.HISTOGRAM: "Histogram increments swept over the bin count.",
        ExperimentName.QUEUE: "Concurrent queue throughput swept over the core count.",
        ExperimentName.INTERFERENCE: "Worker slowdown swept over the number of polling cores.",
    }[name]
    return command


for _name in ExperimentName:
    bench.command(_name.value)(_sweep_command(_name))


@bench.command("plot")
@click.option(
    "--csv",
    "csv_path",
    required=True,
    type=click.Path(dir_okay=False, path_type=Path),
    help="CSV written by a bench sweep",
)
@click.option("--out", "-o", "out_dir", type=click.Path(file_okay=False, path_type=Path))
def plot(csv_path: Path, out_dir: Optional[Path]):
    """Render plots from an existing bench CSV."""
    paths = emit_plots(csv_path, out_dir)
    if not paths:
        print_warning(f"{csv_path} has no rows; no plots written")
    for path in paths:
        print_info(f"Plot written to {path}")
