"""Options and summaries shared by several commands."""

from pathlib import Path
from typing import Any, Callable

import click

from ..output import Column
from ..sim import RunResult

CORE_COLUMNS = [
    Column("core", "Core"),
    Column("ops", "Ops", "d"),
    Column("retries", "Retries", "d"),
    Column("gave_up", "Gave Up", "d"),
    Column("messages_sent", "Sent", "d"),
    Column("finish_cycle", "Finished", ","),
]

SUMMARY_FIELDS = [
    Column("outcome", "Outcome"),
    Column("cycles", "Cycles", ","),
    Column("finish_cycle", "Last finish", ","),
    Column("ops", "Operations", ","),
    Column("retries", "Retries", ","),
    Column("messages", "Messages", ","),
    Column("msgs_per_op", "Messages/op", ".3f"),
    Column("bank_accesses", "Bank accesses", ","),
    Column("memory", "Final memory"),
]


def config_options(func: Callable) -> Callable:
    """--config and repeatable --set key=value."""
    func = click.option(
        "--set",
        "-s",
        "overrides",
        multiple=True,
        metavar="KEY=VALUE",
        help="Override a config value, e.g. sim.n_cores=16",
    )(func)
    func = click.option(
        "--config",
        "-c",
        "config_path",
        type=click.Path(path_type=Path),
        help="YAML run configuration",
    )(func)
    return func


def out_option(default: str = "colibri-out") -> Callable:
    return click.option(
        "--out",
        "-o",
        "out_dir",
        type=click.Path(file_okay=False, path_type=Path),
        default=default,
        show_default=True,
        help="Output directory",
    )


def output_format(ctx: click.Context) -> str:
    return (ctx.obj or {}).get("output_format") or "table"


def run_summary(result: RunResult) -> dict[str, Any]:
    ops = result.total_ops
    return {
        "outcome": result.outcome.value,
        "cycles": result.cycles,
        "finish_cycle": result.finish_cycle,
        "ops": ops,
        "retries": result.total_retries,
        "messages": result.messages,
        "msgs_per_op": round(result.messages / ops, 3) if ops else None,
        "bank_accesses": result.bank_accesses,
        "memory": {str(address): value for address, value in result.memory.items()},
    }


def core_rows(result: RunResult) -> list[dict[str, Any]]:
    return [
        {
            "core": state.core,
            "ops": state.ops_completed,
            "retries": state.retries,
            "gave_up": state.gave_up,
            "messages_sent": state.messages_sent,
            "finish_cycle": state.finish_cycle,
        }
        for state in result.cores
    ]
