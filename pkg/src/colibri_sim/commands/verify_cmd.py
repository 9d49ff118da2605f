"""Exhaustive verification commands."""

from pathlib import Path
from typing import Any, Optional, Sequence

import click

from ..config import ExplorationConfig, Mutation, RunConfig, config_manager
from ..output import (
    Column,
    output_data,
    output_json,
    plain_rows,
    print_error,
    print_info,
    print_success,
)
from ..trace import Trace
from ..verify import (
    ExplorationResult,
    Verdict,
    VerificationFailed,
    check_trace_all,
    explore,
    golden_mismatches,
    run_mutation_suite,
    summarize,
)
from ..workloads import simulate as run_simulation
from .common import config_options, out_option, output_format

VERDICT_COLUMNS = [
    Column("prop", "Property"),
    Column("status", "Status"),
    Column("detail", "Detail"),
]

MUTATION_COLUMNS = [
    Column("mutation", "Mutation"),
    Column("workload", "Workload"),
    Column("expected", "Expected"),
    Column("broken", "Broken properties"),
    Column("caught", "Caught"),
]


def _write_counterexamples(verdicts: list[Verdict], out_dir: Path, prefix: str) -> list[Path]:
    paths = []
    for verdict in verdicts:
        if verdict.counterexample is None:
            continue
        path = verdict.counterexample.write(out_dir / f"{prefix}{verdict.prop.value}.trace")
        paths.append(path)
    return paths


def _golden_path(run_path: Optional[Path], golden: str) -> Path:
    path = Path(golden)
    if not path.is_absolute() and run_path is not None:
        path = run_path.parent / path
    return path


class _Report:
    def __init__(self, out_dir: Path, fmt: str):
        self.out_dir = out_dir
        self.fmt = fmt
        self.failures: list[str] = []
        self.counterexamples: list[Path] = []
        self.sections: dict[str, Any] = {}

    def show(self, rows: Sequence[Any], columns: list[Column], title: str) -> None:
        if self.fmt != "json":
            output_data(rows, columns, format=self.fmt, title=title)


def _check_configured_run(
    run: RunConfig,
    config_path: Optional[Path],
    exploration: Optional[ExplorationConfig],
    mutations: tuple[Mutation, ...],
    report: _Report,
) -> None:
    """Run the configured programs once; judge the trace and match the golden trace."""
    result = run_simulation(run, trace=True, mutations=mutations)
    trace_path = result.trace.write(report.out_dir / "run.trace")
    verdicts = check_trace_all(result.trace)
    report.show(verdicts, VERDICT_COLUMNS, f"Trace checks ({trace_path.name})")
    report.sections["trace_checks"] = plain_rows(verdicts, VERDICT_COLUMNS)
    for verdict in verdicts:
        if not verdict.holds:
            report.failures.append(f"{verdict.prop.value} on the configured run")
            report.counterexamples.append(trace_path)

    if exploration is None or not exploration.golden_trace:
        return
    golden_path = _golden_path(config_path, exploration.golden_trace)
    mismatches = golden_mismatches(result.trace, Trace.read(golden_path))
    report.sections["golden"] = {"path": str(golden_path), "mismatches": mismatches}
    if mismatches:
        report.failures.append(f"trace differs from {golden_path}")
        report.counterexamples.append(trace_path)
        if report.fmt != "json":
            print_error(f"Trace differs from golden trace {golden_path}:")
            for line in mismatches[:5]:
                click.echo(f"  {line}")
    elif report.fmt != "json":
        print_success(f"Trace matches golden trace {golden_path}")


def _explore(exploration: ExplorationConfig, report: _Report) -> ExplorationResult:
    result = explore(exploration)
    title = (
        f"{exploration.workload.value} on {exploration.adapter.value}: "
        f"{result.states} states, {result.terminals} terminal runs"
    )
    report.show(result.verdicts, VERDICT_COLUMNS, title)
    report.sections["exploration"] = summarize(result)
    prefix = "counterexample-"
    if exploration.mutation:
        prefix = f"counterexample-{exploration.mutation.value}-"
    report.counterexamples.extend(_write_counterexamples(result.failed(), report.out_dir, prefix))
    for verdict in result.failed():
        report.failures.append(f"{verdict.prop.value}: {verdict.detail}")
    if result.inconclusive and report.fmt != "json":
        print_info("State budget exhausted; passing verdicts are inconclusive")
    return result


def _mutation_suite(exploration: ExplorationConfig, report: _Report) -> None:
    base = exploration.model_copy(update={"mutation": None})
    rows = []
    for outcome in run_mutation_suite(base):
        case = outcome.case
        rows.append(
            {
                "mutation": case.mutation,
                "workload": case.workload,
                "expected": case.expected,
                "broken": outcome.failed_properties,
                "caught": outcome.caught,
            }
        )
        _write_counterexamples(
            outcome.result.failed(), report.out_dir, f"mutation-{case.mutation.value}-"
        )
        if not outcome.caught:
            report.failures.append(f"mutation {case.mutation.value} went undetected")
    report.show(rows, MUTATION_COLUMNS, "Seeded protocol mutations")
    report.sections["mutations"] = plain_rows(rows, MUTATION_COLUMNS)


@click.command("verify")
@config_options
@click.option(
    "--mutation",
    type=click.Choice([m.value for m in Mutation]),
    help="Explore with a seeded protocol bug",
)
@click.option("--all-mutations", is_flag=True, help="Check that every seeded bug is caught")
@click.option("--max-states", type=int, help="State budget for the exploration")
@out_option()
@click.pass_context
def verify(
    ctx,
    config_path: Optional[Path],
    overrides: tuple[str, ...],
    mutation: Optional[str],
    all_mutations: bool,
    max_states: Optional[int],
    out_dir: Path,
):
    """Explore every delivery interleaving and check the protocol properties.

    \b
    With core programs in the config, they are run once and their trace is
    checked (and matched against verify.golden_trace if set). The verify
    section, or the defaults, drive the exhaustive exploration.
    """
    run = config_manager.load(config_path, overrides)
    config_manager.echo(run, out_dir)
    report = _Report(out_dir, output_format(ctx))

    exploration = run.verify or ExplorationConfig()
    updates: dict[str, Any] = {}
    if mutation:
        updates["mutation"] = Mutation(mutation)
    if max_states is not None:
        updates["max_states"] = max_states
    if updates:
        exploration = ExplorationConfig(**{**exploration.model_dump(), **updates})

    mutations = (exploration.mutation,) if exploration.mutation else ()
    if run.programs:
        _check_configured_run(run, config_path, run.verify, mutations, report)
    if all_mutations:
        _mutation_suite(exploration, report)
    elif run.verify is not None or mutation or not run.programs:
        _explore(exploration, report)

    if report.fmt == "json":
        output_json({**report.sections, "failures": report.failures})
    if report.failures:
        raise VerificationFailed(
            f"{len(report.failures)} check(s) failed: {report.failures[0]}",
            report.counterexamples,
        )
    if report.fmt != "json":
        print_success("All properties hold")
