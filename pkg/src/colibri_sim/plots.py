"""Static plots of bench CSV files."""

from __future__ import annotations

import logging
from collections import defaultdict
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .bench import read_csv  # noqa: E402

logger = logging.getLogger(__name__)

PLOT_FORMATS = ("png", "svg")

_LAYOUT = {
    "bins": ("Histogram bins (fewer = more contention)", "Throughput [ops/cycle]", True),
    "cores": ("Cores", "Queue throughput [ops/cycle]", True),
    "pollers": ("Polling cores", "Worker relative performance", False),
}


def _series(rows: list[dict[str, str]]) -> dict[str, list[dict[str, str]]]:
    by_flavor: dict[str, list[dict[str, str]]] = defaultdict(list)
    for row in rows:
        by_flavor[row["flavor"]].append(row)
    for flavor_rows in by_flavor.values():
        flavor_rows.sort(key=lambda row: int(row["sweep_value"]))
    return by_flavor


def plot_sweep(sweep_name: str, rows: list[dict[str, str]], path_stem: Path) -> list[Path]:
    """One figure for one sweep: a line per flavor, with the min/max band for queues."""
    xlabel, ylabel, log_x = _LAYOUT.get(sweep_name, (sweep_name, "Throughput [ops/cycle]", False))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for flavor, flavor_rows in sorted(_series(rows).items()):
        xs = [int(row["sweep_value"]) for row in flavor_rows]
        if sweep_name == "pollers":
            ys = [float(row["worker_rel_perf"] or "nan") for row in flavor_rows]
        else:
            ys = [float(row["throughput_ops_per_cycle"]) for row in flavor_rows]
        (line,) = ax.plot(xs, ys, marker="o", label=flavor)
        if sweep_name == "cores":
            # band: slowest and fastest core scaled to the mean throughput
            lows, highs = [], []
            for row, y in zip(flavor_rows, ys):
                low, high = int(row["ops_min"]), int(row["ops_max"])
                mean = (low + high) / 2 or 1
                lows.append(y * low / mean)
                highs.append(y * high / mean)
            ax.fill_between(xs, lows, highs, color=line.get_color(), alpha=0.2)
    if log_x and all(int(row["sweep_value"]) > 0 for row in rows):
        ax.set_xscale("log", base=2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    paths = []
    for fmt in PLOT_FORMATS:
        path = path_stem.with_name(f"{path_stem.name}-{sweep_name}.{fmt}")
        fig.savefig(path)
        paths.append(path)
    plt.close(fig)
    return paths


def emit_plots(csv_path: Path, out_dir: Optional[Path] = None) -> list[Path]:
    """Render one plot per experiment found in a bench CSV."""
    rows = read_csv(csv_path)
    if not rows:
        logger.warning("%s has no rows; nothing to plot", csv_path)
        return []
    out_dir = out_dir or csv_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    by_sweep: dict[str, list[dict[str, str]]] = defaultdict(list)
    for row in rows:
        by_sweep[row["sweep_name"]].append(row)
    paths = []
    for sweep_name, sweep_rows in sorted(by_sweep.items()):
        paths.extend(plot_sweep(sweep_name, sweep_rows, out_dir / csv_path.stem))
    logger.info("wrote %d plot files", len(paths))
    return paths
