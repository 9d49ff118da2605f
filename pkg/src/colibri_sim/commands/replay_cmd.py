"""Re-run a recorded trace."""

from pathlib import Path

import click

from ..monitor import ProtocolViolation
from ..output import output_data, print_error, print_success
from ..sim import SimulationError
from ..trace import Trace
from ..verify import VerificationFailed, check_trace_all, golden_mismatches
from ..workloads import replay as replay_trace
from .common import SUMMARY_FIELDS, out_option, output_format, run_summary


@click.command("replay")
@click.option(
    "--trace",
    "trace_path",
    required=True,
    type=click.Path(dir_okay=False, path_type=Path),
    help="Trace written by simulate or verify",
)
@out_option()
@click.pass_context
def replay(ctx, trace_path: Path, out_dir: Path):
    """Replay a trace from its recorded config and delivery delays.

    A counterexample trace reproduces its property violation; any other
    trace must reproduce line for line.
    """
    recorded = Trace.read(trace_path)
    try:
        result = replay_trace(recorded)
    except ProtocolViolation as e:
        raise VerificationFailed(f"replay reproduced {e}", [trace_path]) from e

    replayed = result.trace.write(out_dir / "replay.trace")
    mismatches = golden_mismatches(result.trace, recorded)
    if mismatches:
        print_error(f"Replay diverged from {trace_path}:")
        for line in mismatches[:5]:
            click.echo(f"  {line}")
        raise SimulationError(f"replay of {trace_path} diverged; see {replayed}")

    if recorded.outcome is not None and recorded.outcome != result.outcome.value:
        raise SimulationError(
            f"recorded outcome {recorded.outcome}, replayed {result.outcome.value}"
        )
    broken = [v for v in check_trace_all(result.trace) if not v.holds]

    fmt = output_format(ctx)
    summary = run_summary(result)
    if fmt == "json":
        output_data(summary, format="json")
    else:
        output_data(summary, single_fields=SUMMARY_FIELDS)
        print_success(f"Replayed {len(result.trace.message_records())} messages from {trace_path}")
    if broken:
        raise VerificationFailed(
            f"replayed trace breaks {', '.join(v.prop.value for v in broken)}", [replayed]
        )
