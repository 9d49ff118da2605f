"""Line-oriented event traces: recording, writing and parsing."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

from .messages import MsgKind

TRACE_MAGIC = "# colibri-sim trace v1"
TRACE_COLUMNS = "cycle,source,destination,kind,payload"
MESSAGE_KIND_NAMES = frozenset(kind.value for kind in MsgKind)


class TraceParseError(Exception):
    """A trace file or line that does not follow the trace format."""

    pass


def _format_value(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "1" if value else "0"
    return str(value)


@dataclass(frozen=True)
class TraceRecord:
    """One trace line: ``cycle,source,destination,kind,payload``."""

    cycle: int
    source: str
    destination: str
    kind: str
    fields: tuple[tuple[str, str], ...] = ()

    @property
    def is_message(self) -> bool:
        return self.kind in MESSAGE_KIND_NAMES

    def get(self, name: str, default: Optional[str] = None) -> Optional[str]:
        for key, value in self.fields:
            if key == name:
                return value
        return default

    def get_int(self, name: str, default: int = 0) -> int:
        value = self.get(name)
        if value is None or value == "-":
            return default
        return int(value)

    def payload(self) -> dict[str, str]:
        return dict(self.fields)

    def to_line(self) -> str:
        payload = " ".join(f"{key}={value}" for key, value in self.fields)
        return f"{self.cycle},{self.source},{self.destination},{self.kind},{payload}"

    @classmethod
    def from_line(cls, line: str) -> "TraceRecord":
        parts = line.rstrip("\n").split(",", 4)
        if len(parts) != 5:
            raise TraceParseError(f"expected 5 comma-separated columns: {line!r}")
        cycle, source, destination, kind, payload = parts
        try:
            cycle_value = int(cycle)
        except ValueError as e:
            raise TraceParseError(f"bad cycle {cycle!r} in {line!r}") from e
        fields = []
        for token in payload.split():
            if "=" not in token:
                raise TraceParseError(f"bad payload field {token!r} in {line!r}")
            key, value = token.split("=", 1)
            fields.append((key, value))
        return cls(cycle_value, source, destination, kind, tuple(fields))


class TraceRecorder:
    """Collects records while a simulation runs."""

    def __init__(self):
        self.records: list[TraceRecord] = []

    def record(
        self,
        cycle: int,
        source: str,
        destination: str,
        kind: str,
        fields: Iterable[tuple[str, Any]],
    ) -> None:
        self.records.append(
            TraceRecord(
                cycle,
                source,
                destination,
                kind,
                tuple((key, _format_value(value)) for key, value in fields),
            )
        )

    def lines(self) -> list[str]:
        return [record.to_line() for record in self.records]


@dataclass
class Trace:
    """A complete trace: resolved config, records and run outcome."""

    records: list[TraceRecord] = field(default_factory=list)
    config: Optional[dict[str, Any]] = None
    outcome: Optional[str] = None
    cycles: Optional[int] = None

    def lines(self) -> list[str]:
        return [record.to_line() for record in self.records]

    def message_records(self) -> list[TraceRecord]:
        return [record for record in self.records if record.is_message]

    def render(self) -> str:
        out = [TRACE_MAGIC]
        if self.config is not None:
            out.append("# config: " + json.dumps(self.config, sort_keys=True))
        out.append(TRACE_COLUMNS)
        out.extend(self.lines())
        if self.outcome is not None:
            out.append(f"# outcome: {self.outcome} cycles={self.cycles}")
        return "\n".join(out) + "\n"

    def write(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render())
        return path

    @classmethod
    def parse(cls, text: str) -> "Trace":
        trace = cls()
        lines = text.splitlines()
        if not lines or lines[0].strip() != TRACE_MAGIC:
            raise TraceParseError("missing trace header line")
        for line in lines[1:]:
            if not line.strip() or line.strip() == TRACE_COLUMNS:
                continue
            if line.startswith("# config: "):
                try:
                    trace.config = json.loads(line[len("# config: "):])
                except json.JSONDecodeError as e:
                    raise TraceParseError(f"bad config header: {e}") from e
                continue
            if line.startswith("# outcome: "):
                words = line[len("# outcome: "):].split()
                if not words:
                    raise TraceParseError("empty outcome line")
                trace.outcome = words[0]
                for word in words[1:]:
                    if word.startswith("cycles="):
                        trace.cycles = int(word.split("=", 1)[1])
                continue
            if line.startswith("#"):
                continue
            trace.records.append(TraceRecord.from_line(line))
        return trace

    @classmethod
    def read(cls, path: Path) -> "Trace":
        if not path.exists():
            raise TraceParseError(f"trace file not found: {path}")
        return cls.parse(path.read_text())
