"""Tests for console rendering of rows and verdicts."""

import json

import pytest

from colibri_sim.adapters import CostScheme, cost_model
from colibri_sim.bench import MetricRow
from colibri_sim.monitor import Property
from colibri_sim.output import (
    Column,
    field_of,
    format_cell,
    output_csv,
    output_data,
    output_table,
    plain_rows,
)
from colibri_sim.trace import Trace
from colibri_sim.verify import Verdict

METRIC_COLUMNS = [
    Column("flavor", "Flavor"),
    Column("throughput", "Ops/cycle", ".4f"),
    Column("spread", "Spread", ".3f"),
    Column("worker_rel_perf", "Worker rel", ".3f"),
]


def metric_row(**fields):
    defaults = dict(
        flavor="colibri",
        sweep_name="bins",
        sweep_value=4,
        throughput=0.25,
        ops_min=2,
        ops_max=6,
        ops_mean=4.0,
        retries=0.0,
        msgs_per_op=4.0,
        bank_accesses_per_op=2.0,
    )
    defaults.update(fields)
    return MetricRow(**defaults)


@pytest.mark.parametrize(
    "value,number,expected",
    [
        (None, None, "-"),
        (True, None, "yes"),
        (Property.FIFO_SERVICE, None, "FifoService"),
        (float("inf"), ".3f", "inf"),
        (0.123456, None, "0.1235"),
        (0.5, ".3f", "0.500"),
        (2_097_152, ",", "2,097,152"),
        (7, None, "7"),
        ({"0": 3, "1": 4}, None, "0=3, 1=4"),
        ([Property.MUTUAL_EXCLUSION], None, "MutualExclusion"),
        ([], None, "-"),
    ],
)
def test_format_cell(value, number, expected):
    assert format_cell(value, number) == expected


def test_field_of_reads_properties():
    row = metric_row()
    assert field_of(row, "spread") == pytest.approx(1.0)
    assert field_of({"spread": 2}, "spread") == 2
    assert field_of(row, "missing") is None


def test_plain_rows_from_cost_dataclasses():
    costs = [cost_model(scheme, 4, 8) for scheme in (CostScheme.IDEAL, CostScheme.COLIBRI)]
    columns = [Column("scheme", "Scheme"), Column("total_bits", "Total bits", ",")]
    rows = plain_rows(costs, columns)
    assert [row["scheme"] for row in rows] == ["ideal", "colibri"]
    assert rows[0]["total_bits"] == costs[0].total_bits


def test_json_keeps_raw_values(capsys):
    output_data([metric_row(throughput=1 / 3)], METRIC_COLUMNS, format="json")
    (row,) = json.loads(capsys.readouterr().out)
    assert row == {
        "flavor": "colibri",
        "throughput": pytest.approx(1 / 3),
        "spread": pytest.approx(1.0),
        "worker_rel_perf": None,
    }


def test_csv_formats_numbers(capsys):
    output_csv([metric_row(), metric_row(flavor="lr-sc", worker_rel_perf=0.5)], METRIC_COLUMNS)
    lines = capsys.readouterr().out.splitlines()
    assert lines == [
        "Flavor,Ops/cycle,Spread,Worker rel",
        "colibri,0.2500,1.000,",
        "lr-sc,0.2500,1.000,0.500",
    ]


def test_table_lists_verdicts(capsys):
    verdicts = [
        Verdict(Property.FIFO_SERVICE, holds=True),
        Verdict(
            Property.NO_LOST_WAKEUP, holds=False, counterexample=Trace(), detail="core1 asleep"
        ),
    ]
    columns = [Column("prop", "Property"), Column("status", "Status"), Column("detail", "Detail")]
    output_table(verdicts, columns, title="Exploration")
    out = capsys.readouterr().out
    assert "FifoService" in out
    assert "holds" in out
    assert "fails" in out
    assert "core1 asleep" in out


def test_empty_table(capsys):
    output_table([], METRIC_COLUMNS)
    assert "No results." in capsys.readouterr().out
