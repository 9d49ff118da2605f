"""Tests for bench plots."""

from colibri_sim.bench import write_csv
from colibri_sim.plots import emit_plots

from .test_bench import row


def test_one_plot_per_sweep(tmp_path):
    rows = [
        row("colibri", 1, throughput=0.2),
        row("colibri", 4, throughput=0.5),
        row("lr-sc", 1, throughput=0.05),
        row("lr-sc", 4, throughput=0.3),
        row("colibri", 0, sweep_name="pollers", worker_rel_perf=1.0),
        row("colibri", 4, sweep_name="pollers", worker_rel_perf=0.97),
    ]
    csv_path = write_csv(rows, tmp_path / "mixed.csv")
    paths = emit_plots(csv_path, tmp_path / "plots")
    assert sorted(p.name for p in paths) == [
        "mixed-bins.png",
        "mixed-bins.svg",
        "mixed-pollers.png",
        "mixed-pollers.svg",
    ]
    assert all(p.stat().st_size > 0 for p in paths)


def test_queue_band(tmp_path):
    rows = [row("colibri", n, sweep_name="cores", ops_min=n, ops_max=2 * n) for n in (2, 4, 8)]
    paths = emit_plots(write_csv(rows, tmp_path / "queue.csv"))
    assert {p.parent for p in paths} == {tmp_path}


def test_empty_csv(tmp_path):
    csv_path = write_csv([], tmp_path / "empty.csv")
    assert emit_plots(csv_path) == []
