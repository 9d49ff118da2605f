"""Tests for the trace file format."""

import pytest

from colibri_sim.trace import TRACE_MAGIC, Trace, TraceParseError, TraceRecord, TraceRecorder


def test_record_line():
    recorder = TraceRecorder()
    recorder.record(5, "core0", "bank0", "LrWaitReq", [("seq", 2), ("successor", None)])
    recorder.record(6, "bank0", "-", "Slot", [("occupied", True)])
    assert recorder.lines() == [
        "5,core0,bank0,LrWaitReq,seq=2 successor=-",
        "6,bank0,-,Slot,occupied=1",
    ]
    assert recorder.records[0].is_message
    assert not recorder.records[1].is_message
    assert recorder.records[0].get_int("successor", default=-1) == -1


@pytest.mark.parametrize(
    "line",
    ["5,core0,bank0,LrWaitReq", "x,core0,bank0,LrWaitReq,seq=1", "5,core0,bank0,Load,seq"],
)
def test_bad_lines(line):
    with pytest.raises(TraceParseError):
        TraceRecord.from_line(line)


def test_parse_golden(configs_dir):
    trace = Trace.read(configs_dir / "fig2.golden.trace")
    assert trace.outcome == "completed"
    assert trace.cycles == 41
    assert len(trace.message_records()) == 10
    first = trace.records[0]
    assert (first.cycle, first.source, first.destination, first.kind) == (
        5,
        "core0",
        "bank0",
        "LrWaitReq",
    )


def test_render_keeps_header_and_outcome():
    trace = Trace(
        records=[TraceRecord(1, "core0", "bank0", "Load", (("address", "3"),))],
        config={"run": {"sim": {"n_cores": 1}}},
        outcome="deadlock",
        cycles=9,
    )
    parsed = Trace.parse(trace.render())
    assert parsed.config == trace.config
    assert parsed.outcome == "deadlock"
    assert parsed.cycles == 9
    assert parsed.records == trace.records


def test_missing_magic():
    with pytest.raises(TraceParseError, match="header"):
        Trace.parse("cycle,source,destination,kind,payload\n")
    assert Trace.parse(TRACE_MAGIC + "\n").records == []


def test_missing_file(tmp_path):
    with pytest.raises(TraceParseError, match="not found"):
        Trace.read(tmp_path / "none.trace")
