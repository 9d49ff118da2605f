"""Rendering of run summaries, metric rows and verdicts on the console."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, NamedTuple, Optional, Sequence

import click
from rich.console import Console
from rich.table import Table

console = Console()

STATUS_STYLES = {"holds": "green", "fails": "bold red", "inconclusive": "yellow"}


class Column(NamedTuple):
    """A table column: row key or attribute, header, and a number format for its cells."""

    key: str
    header: str
    number: Optional[str] = None


def field_of(row: Any, key: str) -> Any:
    """``key`` of a dict row, or the attribute (properties included) of a dataclass row."""
    if isinstance(row, dict):
        return row.get(key)
    return getattr(row, key, None)


def to_plain(value: Any) -> Any:
    """JSON-ready copy of dataclasses, enums, paths and nested containers."""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def plain_rows(rows: Sequence[Any], columns: Sequence[Column]) -> list[dict[str, Any]]:
    """One dict per row holding the raw value of every column."""
    return [{col.key: to_plain(field_of(row, col.key)) for col in columns} for row in rows]


def format_cell(value: Any, number: Optional[str] = None) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return format(value, number or ".4g")
    if isinstance(value, int) and number:
        return format(value, number)
    if isinstance(value, dict):
        return ", ".join(f"{k}={v}" for k, v in value.items()) or "-"
    if isinstance(value, (list, tuple)):
        return ", ".join(format_cell(v) for v in value) or "-"
    return str(value)


def _styled(text: str) -> str:
    style = STATUS_STYLES.get(text)
    return f"[{style}]{text}[/{style}]" if style else text


def output_table(
    rows: Sequence[Any], columns: Sequence[Column], title: Optional[str] = None
) -> None:
    """Rows as a rich table; verdict statuses are coloured."""
    if not rows:
        console.print("[dim]No results.[/dim]")
        return

    table = Table(title=title, show_header=True, header_style="bold cyan")
    for col in columns:
        table.add_column(col.header, justify="right" if col.number else "left")
    for row in rows:
        table.add_row(*(_styled(format_cell(field_of(row, c.key), c.number)) for c in columns))
    console.print(table)


def output_json(data: Any) -> None:
    click.echo(json.dumps(to_plain(data), indent=2, default=str))


def output_csv(rows: Sequence[Any], columns: Sequence[Column]) -> None:
    """Rows as CSV on stdout, headed by the column headers."""
    if not rows:
        return
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow([col.header for col in columns])
    for row in rows:
        writer.writerow(
            ["" if (v := field_of(row, c.key)) is None else format_cell(v, c.number) for c in columns]
        )
    click.echo(buffer.getvalue().strip())


def output_record(record: Any, fields: Sequence[Column]) -> None:
    """One run summary as aligned ``label  value`` lines."""
    width = max(len(f.header) for f in fields)
    for f in fields:
        value = format_cell(field_of(record, f.key), f.number)
        console.print(f"[bold]{f.header.ljust(width)}[/bold]  {_styled(value)}")


def output_data(
    data: Any,
    columns: Optional[Sequence[Column]] = None,
    format: Optional[str] = "table",
    title: Optional[str] = None,
    single_fields: Optional[Sequence[Column]] = None,
) -> None:
    """Render rows (with ``columns``) or one record (with ``single_fields``) as table, json or csv."""
    rows = isinstance(data, (list, tuple))
    if format == "json":
        output_json(plain_rows(data, columns) if rows and columns else data)
    elif rows and columns:
        if format == "csv":
            output_csv(data, columns)
        else:
            output_table(data, columns, title)
    elif single_fields and not rows:
        output_record(data, single_fields)
    else:
        output_json(data)


def print_success(message: str) -> None:
    console.print(f"[green]✓[/green] {message}")


def print_error(message: str) -> None:
    console.print(f"[red]✗[/red] {message}")


def print_warning(message: str) -> None:
    console.print(f"[yellow]![/yellow] {message}")


def print_info(message: str) -> None:
    console.print(f"[blue]i[/blue] {message}")
