"""Contention sweeps: histogram, concurrent queue and interference."""

from __future__ import annotations

import csv
import logging
import re
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional

from .config import (
    AdapterKind,
    AtomicFlavor,
    ConfigError,
    CoreProgram,
    ExperimentName,
    ExperimentSpec,
    ProgramKind,
    RunConfig,
    SimConfig,
    TargetOrder,
)
from .sim import RunOutcome, RunResult, SimulationError
from .trace import Trace
from .workloads import simulate

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "flavor",
    "sweep_name",
    "sweep_value",
    "throughput_ops_per_cycle",
    "ops_min",
    "ops_max",
    "retries",
    "msgs_per_op",
    "worker_rel_perf",
)

DEFAULT_SCALE = (64, 256)
FULL_SCALE = (256, 1024)
WORKER_COMPUTE = 2

SWEEP_NAMES = {
    ExperimentName.HISTOGRAM: "bins",
    ExperimentName.QUEUE: "cores",
    ExperimentName.INTERFERENCE: "pollers",
}

DEFAULT_FLAVORS = {
    ExperimentName.HISTOGRAM: [
        "amo-add",
        "lrscwait-ideal",
        "lrscwait-bounded",
        "colibri",
        "lr-sc",
    ],
    ExperimentName.QUEUE: ["amo-add", "colibri", "lr-sc"],
    ExperimentName.INTERFERENCE: ["colibri", "lr-sc"],
}


class ExperimentAborted(Exception):
    """A sweep point did not run to completion."""

    def __init__(self, flavor: str, sweep_value: int, outcome: str, trace_path: Optional[Path]):
        self.flavor = flavor
        self.sweep_value = sweep_value
        self.outcome = outcome
        self.trace_path = trace_path
        where = f"; trace written to {trace_path}" if trace_path else ""
        super().__init__(f"{flavor} at sweep value {sweep_value} ended {outcome}{where}")


@dataclass(frozen=True)
class BenchFlavor:
    """A named way to do the atomic update: adapter plus core-side flavor."""

    name: str
    adapter: AdapterKind
    atomic: AtomicFlavor
    queue_slots: Optional[int] = None

    @property
    def is_lock(self) -> bool:
        return self.atomic.is_lock


_FLAVORS = {
    "amo-add": (AdapterKind.AMO_ONLY, AtomicFlavor.AMO_ADD),
    "lr-sc": (AdapterKind.PLAIN_LRSC, AtomicFlavor.LR_SC),
    "lrscwait-ideal": (AdapterKind.LRSCWAIT_IDEAL, AtomicFlavor.LRSC_WAIT),
    "lrscwait-bounded": (AdapterKind.LRSCWAIT_BOUNDED, AtomicFlavor.LRSC_WAIT),
    "colibri": (AdapterKind.COLIBRI, AtomicFlavor.COLIBRI),
    "spin-lock-amo": (AdapterKind.AMO_ONLY, AtomicFlavor.SPIN_LOCK_AMO),
    "spin-lock-lr-sc": (AdapterKind.PLAIN_LRSC, AtomicFlavor.SPIN_LOCK_LR_SC),
    "spin-lock-colibri": (AdapterKind.COLIBRI, AtomicFlavor.SPIN_LOCK_COLIBRI),
    "mcs-mwait-lock": (AdapterKind.COLIBRI, AtomicFlavor.MCS_MWAIT_LOCK),
}

_BOUNDED = re.compile(r"^lrscwait-bounded-q(\d+)$")


def resolve_flavor(name: str) -> BenchFlavor:
    """Map a flavor name (``lrscwait-bounded-q4`` selects q=4) to its adapter and flavor."""
    match = _BOUNDED.match(name)
    if match:
        slots = int(match.group(1))
        if slots < 1:
            raise ConfigError(f"flavor {name}: q must be at least 1")
        return BenchFlavor(name, AdapterKind.LRSCWAIT_BOUNDED, AtomicFlavor.LRSC_WAIT, slots)
    if name not in _FLAVORS:
        known = ", ".join(sorted(_FLAVORS))
        raise ConfigError(f"unknown flavor '{name}' (known: {known}, lrscwait-bounded-q<N>)")
    adapter, atomic = _FLAVORS[name]
    return BenchFlavor(name, adapter, atomic)


@dataclass
class MetricRow:
    """Aggregated metrics of one (flavor, sweep value) point."""

    flavor: str
    sweep_name: str
    sweep_value: int
    throughput: float
    ops_min: int
    ops_max: int
    ops_mean: float
    retries: float
    msgs_per_op: float
    bank_accesses_per_op: float
    worker_rel_perf: Optional[float] = None
    cycles: int = 0
    all_quotas_met: bool = True

    @property
    def spread(self) -> float:
        """(max - min) / mean of per-core ops in the fairness window."""
        if self.ops_mean <= 0:
            return 0.0
        return (self.ops_max - self.ops_min) / self.ops_mean

    def csv_row(self) -> dict[str, str]:
        return {
            "flavor": self.flavor,
            "sweep_name": self.sweep_name,
            "sweep_value": str(self.sweep_value),
            "throughput_ops_per_cycle": f"{self.throughput:.6f}",
            "ops_min": str(self.ops_min),
            "ops_max": str(self.ops_max),
            "retries": f"{self.retries:g}",
            "msgs_per_op": f"{self.msgs_per_op:.3f}",
            "worker_rel_perf": (
                "" if self.worker_rel_perf is None else f"{self.worker_rel_perf:.4f}"
            ),
        }


@dataclass(frozen=True)
class EnergyProxy:
    """Traffic per successful operation, standing in for energy."""

    messages: int
    bank_accesses: int
    ops: int

    @property
    def msgs_per_op(self) -> float:
        return self.messages / self.ops if self.ops else float("inf")

    @property
    def bank_accesses_per_op(self) -> float:
        return self.bank_accesses / self.ops if self.ops else float("inf")


def energy_proxy(trace: Trace) -> EnergyProxy:
    """Interconnect hops and bank accesses of a complete run trace."""
    messages = trace.message_records()
    bank_accesses = sum(1 for record in messages if record.destination.startswith("bank"))
    ops = sum(record.get_int("ops") for record in trace.records if record.kind == "Done")
    return EnergyProxy(len(messages), bank_accesses, ops)


def energy_from_result(result: RunResult) -> EnergyProxy:
    return EnergyProxy(result.messages, result.bank_accesses, result.total_ops)


# -- sweep points ------------------------------------------------------------------


@dataclass
class SweepPoint:
    flavor: str
    sweep_value: int
    repetition: int
    run: RunConfig
    baseline: bool = False


def powers_of_two(low: int, high: int) -> list[int]:
    out, value = [], 1
    while value <= high:
        if value >= low:
            out.append(value)
        value *= 2
    return out


def sweep_values(spec: ExperimentSpec, sim: SimConfig) -> list[int]:
    if spec.values:
        try:
            return [int(value) for value in spec.values]
        except ValueError as e:
            raise ConfigError(f"sweep values must be integers: {e}") from e
    if spec.name is ExperimentName.HISTOGRAM:
        return powers_of_two(1, sim.n_cores * 4)
    if spec.name is ExperimentName.QUEUE:
        return powers_of_two(1, sim.n_cores)
    contenders = powers_of_two(2 * spec.workers, sim.n_cores)
    return [0] + [cores - spec.workers for cores in contenders]


def flavors_of(spec: ExperimentSpec) -> list[BenchFlavor]:
    names = spec.flavors or DEFAULT_FLAVORS[spec.name]
    flavors = [resolve_flavor(name) for name in names]
    for flavor in flavors:
        if spec.name is not ExperimentName.HISTOGRAM and flavor.is_lock:
            raise ConfigError(f"lock flavor {flavor.name} only applies to the histogram")
    return flavors


def _machine(sim: SimConfig, flavor: BenchFlavor, seed: int, **update: Any) -> SimConfig:
    update.update(adapter=flavor.adapter, seed=seed, monitor=False)
    if flavor.queue_slots is not None:
        update["queue_slots"] = flavor.queue_slots
    return sim.model_copy(update=update)


def histogram_point(
    spec: ExperimentSpec, sim: SimConfig, flavor: BenchFlavor, bins: int, repetition: int
) -> SweepPoint:
    program = CoreProgram(
        cores="all",
        kind=ProgramKind.LOCKED_CS if flavor.is_lock else ProgramKind.RMW_LOOP,
        iterations=spec.increments_per_core,
        bins=bins,
        target_order=TargetOrder.RANDOM,
        atomic_flavor=flavor.atomic,
        think_cycles=spec.think_cycles,
    )
    machine = _machine(sim, flavor, spec.seed + repetition)
    run = RunConfig(sim=machine, programs=[program])
    return SweepPoint(flavor.name, bins, repetition, run)


def queue_point(
    spec: ExperimentSpec, sim: SimConfig, flavor: BenchFlavor, cores: int, repetition: int
) -> SweepPoint:
    program = CoreProgram(
        cores="all",
        kind=ProgramKind.QUEUE_OPS,
        iterations=max(1, spec.ops_per_core // 2),
        atomic_flavor=flavor.atomic,
    )
    machine = _machine(sim, flavor, spec.seed + repetition, n_cores=cores)
    return SweepPoint(flavor.name, cores, repetition, RunConfig(sim=machine, programs=[program]))


def worker_addresses(spec: ExperimentSpec, n_banks: int, hot: int) -> list[int]:
    """Stream addresses spread over the first ``stream_banks`` banks, hot bank included."""
    banks = min(spec.stream_banks, n_banks)
    out = []
    row = 1
    while len(out) < spec.stream_length:
        for bank in range(banks):
            address = row * n_banks + bank
            if address != hot:
                out.append(address)
        row += 1
    return out[: spec.stream_length]


def interference_point(
    spec: ExperimentSpec,
    sim: SimConfig,
    flavor: BenchFlavor,
    pollers: int,
    repetition: int,
    baseline: bool = False,
) -> SweepPoint:
    hot = 0
    n_cores = pollers + spec.workers
    programs = []
    if pollers:
        programs.append(
            CoreProgram(
                cores=f"0-{pollers - 1}",
                kind=ProgramKind.RMW_LOOP,
                iterations=None,
                background=True,
                target_addresses=[hot],
                atomic_flavor=flavor.atomic,
            )
        )
    programs.append(
        CoreProgram(
            cores=f"{pollers}-{n_cores - 1}",
            kind=ProgramKind.WORKER_STREAM,
            iterations=spec.stream_length,
            target_addresses=worker_addresses(spec, sim.n_banks, hot),
            cs_length=WORKER_COMPUTE,
        )
    )
    machine = _machine(sim, flavor, spec.seed + repetition, n_cores=n_cores)
    run = RunConfig(sim=machine, programs=programs)
    return SweepPoint(flavor.name, pollers, repetition, run, baseline=baseline)


def build_points(spec: ExperimentSpec, sim: SimConfig) -> list[SweepPoint]:
    expected = SWEEP_NAMES[spec.name]
    if spec.sweep is not None and spec.sweep != expected:
        raise ConfigError(
            f"experiment {spec.name.value} sweeps {expected}, not {spec.sweep}"
        )
    values = sweep_values(spec, sim)
    if not values:
        raise ConfigError(f"experiment {spec.name.value} has no sweep values")
    points = []
    for flavor in flavors_of(spec):
        for repetition in range(spec.repetitions):
            if spec.name is ExperimentName.INTERFERENCE and 0 not in values:
                points.append(interference_point(spec, sim, flavor, 0, repetition, baseline=True))
            for value in values:
                if spec.name is ExperimentName.HISTOGRAM:
                    points.append(histogram_point(spec, sim, flavor, value, repetition))
                elif spec.name is ExperimentName.QUEUE:
                    points.append(queue_point(spec, sim, flavor, value, repetition))
                else:
                    points.append(interference_point(spec, sim, flavor, value, repetition))
    return points


def run_point(point: SweepPoint) -> RunResult:
    """Run one sweep point; module-level so a process pool can pickle it."""
    return simulate(point.run)


def _run_all(points: list[SweepPoint], jobs: int) -> list[RunResult]:
    if jobs <= 1 or len(points) <= 1:
        results = []
        for index, point in enumerate(points, 1):
            logger.info(
                "point %d/%d: %s at %d", index, len(points), point.flavor, point.sweep_value
            )
            results.append(run_point(point))
        return results
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_point, points))


def _check_point(point: SweepPoint, result: RunResult, out_dir: Optional[Path]) -> None:
    if result.outcome is RunOutcome.COMPLETED:
        return
    trace_path = None
    if out_dir is not None:
        traced = simulate(point.run, trace=True)
        name = f"aborted-{point.flavor}-{point.sweep_value}-r{point.repetition}.trace"
        trace_path = traced.trace.write(out_dir / name)
    raise ExperimentAborted(point.flavor, point.sweep_value, result.outcome.value, trace_path)


def _check_conservation(point: SweepPoint, result: RunResult) -> None:
    """Bin contents add up to the increments the cores report."""
    program = point.run.programs[0]
    if program.kind is not ProgramKind.RMW_LOOP:
        return
    stored = sum(result.memory.values())
    if stored != result.total_ops * program.value:
        raise SimulationError(
            f"{point.flavor} at {point.sweep_value} bins: bins hold {stored} "
            f"but cores committed {result.total_ops} increments"
        )


def _quotas_met(point: SweepPoint, result: RunResult) -> bool:
    quotas = {}
    for program in point.run.programs:
        if program.background or program.iterations is None:
            continue
        per_core = program.iterations
        if program.kind is ProgramKind.QUEUE_OPS:
            per_core *= 2
        for core in program.core_ids(point.run.sim.n_cores):
            quotas[core] = per_core
    return all(
        state.ops_completed >= quotas.get(state.core, 0) and not state.gave_up
        for state in result.cores
        if not state.background
    )


@dataclass
class _Sample:
    throughput: float
    window: list[int]
    retries: int
    msgs_per_op: float
    bank_accesses_per_op: float
    finish_cycle: int
    quotas_met: bool


def _sample(point: SweepPoint, result: RunResult) -> _Sample:
    foreground = [state for state in result.cores if not state.background]
    ops = sum(state.ops_completed for state in foreground)
    if result.ops_at_first_finish:
        window = [result.ops_at_first_finish[state.core] for state in foreground]
    else:
        window = [state.ops_completed for state in foreground]
    energy = energy_from_result(result)
    return _Sample(
        throughput=ops / result.finish_cycle if result.finish_cycle else 0.0,
        window=window,
        retries=result.total_retries,
        msgs_per_op=energy.msgs_per_op,
        bank_accesses_per_op=energy.bank_accesses_per_op,
        finish_cycle=result.finish_cycle,
        quotas_met=_quotas_met(point, result),
    )


def aggregate(
    spec: ExperimentSpec, points: list[SweepPoint], results: list[RunResult]
) -> list[MetricRow]:
    """Fold repetitions into one row per (flavor, sweep value), in sweep order."""
    sweep_name = SWEEP_NAMES[spec.name]
    samples: dict[tuple[str, int], list[_Sample]] = {}
    baselines: dict[tuple[str, int], int] = {}
    order: list[tuple[str, int]] = []
    for point, result in zip(points, results):
        sample = _sample(point, result)
        if point.sweep_value == 0 and spec.name is ExperimentName.INTERFERENCE:
            baselines[(point.flavor, point.repetition)] = sample.finish_cycle
        if point.baseline:
            continue
        key = (point.flavor, point.sweep_value)
        if key not in samples:
            samples[key] = []
            order.append(key)
        samples[key].append(sample)

    rows = []
    for flavor, value in order:
        group = samples[(flavor, value)]
        window = [ops for sample in group for ops in sample.window]
        rel = None
        if spec.name is ExperimentName.INTERFERENCE:
            ratios = [
                baselines[(flavor, rep)] / sample.finish_cycle
                for rep, sample in enumerate(group)
                if sample.finish_cycle
            ]
            rel = statistics.fmean(ratios) if ratios else 0.0
        rows.append(
            MetricRow(
                flavor=flavor,
                sweep_name=sweep_name,
                sweep_value=value,
                throughput=statistics.fmean(s.throughput for s in group),
                ops_min=min(window) if window else 0,
                ops_max=max(window) if window else 0,
                ops_mean=statistics.fmean(window) if window else 0.0,
                retries=statistics.fmean(s.retries for s in group),
                msgs_per_op=statistics.fmean(s.msgs_per_op for s in group),
                bank_accesses_per_op=statistics.fmean(s.bank_accesses_per_op for s in group),
                worker_rel_perf=rel,
                cycles=max(s.finish_cycle for s in group),
                all_quotas_met=all(s.quotas_met for s in group),
            )
        )
    return rows


def run_experiment(
    spec: ExperimentSpec,
    sim: SimConfig,
    *,
    jobs: int = 1,
    out_dir: Optional[Path] = None,
) -> list[MetricRow]:
    """Run every sweep point of ``spec`` on machines derived from ``sim``."""
    points = build_points(spec, sim)
    logger.info("%s sweep: %d points, %d jobs", spec.name.value, len(points), jobs)
    results = _run_all(points, jobs)
    for point, result in zip(points, results):
        _check_point(point, result, out_dir)
        if spec.name is ExperimentName.HISTOGRAM:
            _check_conservation(point, result)
    return aggregate(spec, points, results)


def run_histogram(spec: ExperimentSpec, sim: SimConfig, **kwargs: Any) -> list[MetricRow]:
    return run_experiment(
        spec.model_copy(update={"name": ExperimentName.HISTOGRAM}), sim, **kwargs
    )


def run_queue_scaling(spec: ExperimentSpec, sim: SimConfig, **kwargs: Any) -> list[MetricRow]:
    return run_experiment(spec.model_copy(update={"name": ExperimentName.QUEUE}), sim, **kwargs)


def run_interference(spec: ExperimentSpec, sim: SimConfig, **kwargs: Any) -> list[MetricRow]:
    return run_experiment(
        spec.model_copy(update={"name": ExperimentName.INTERFERENCE}), sim, **kwargs
    )


def bench_machine(sim: Optional[SimConfig] = None, full_scale: bool = False) -> SimConfig:
    """The machine a sweep runs on; ``full_scale`` selects 256 cores and 1024 banks."""
    sim = sim or SimConfig(n_cores=DEFAULT_SCALE[0], n_banks=DEFAULT_SCALE[1])
    if full_scale:
        sim = sim.model_copy(update={"n_cores": FULL_SCALE[0], "n_banks": FULL_SCALE[1]})
    return sim


# -- CSV -------------------------------------------------------------------------------


def write_csv(rows: Iterable[MetricRow], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(CSV_COLUMNS))
        writer.writeheader()
        for row in rows:
            writer.writerow(row.csv_row())
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    if not path.exists():
        raise ConfigError(f"CSV file not found: {path}")
    with path.open(newline="") as handle:
        reader = csv.DictReader(handle)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or [])
        if reader.fieldnames and missing:
            raise ConfigError(f"{path} lacks columns {sorted(missing)}")
        return list(reader)
