"""Tests for the contention sweeps."""

import pytest

from colibri_sim.bench import (
    CSV_COLUMNS,
    MetricRow,
    bench_machine,
    build_points,
    energy_proxy,
    powers_of_two,
    read_csv,
    resolve_flavor,
    run_experiment,
    sweep_values,
    write_csv,
)
from colibri_sim.config import (
    AdapterKind,
    AtomicFlavor,
    ConfigError,
    ExperimentName,
    ExperimentSpec,
    ProgramKind,
    SimConfig,
)
from colibri_sim.workloads import simulate


def row(flavor="colibri", value=1, **fields):
    defaults = dict(
        sweep_name="bins",
        throughput=0.5,
        ops_min=2,
        ops_max=6,
        ops_mean=4.0,
        retries=0.0,
        msgs_per_op=4.0,
        bank_accesses_per_op=2.0,
    )
    defaults.update(fields)
    return MetricRow(flavor=flavor, sweep_value=value, **defaults)


class TestFlavors:
    def test_bounded_queue_size(self):
        flavor = resolve_flavor("lrscwait-bounded-q4")
        assert flavor.adapter is AdapterKind.LRSCWAIT_BOUNDED
        assert flavor.atomic is AtomicFlavor.LRSC_WAIT
        assert flavor.queue_slots == 4

    def test_named(self):
        flavor = resolve_flavor("mcs-mwait-lock")
        assert flavor.adapter is AdapterKind.COLIBRI
        assert flavor.is_lock

    @pytest.mark.parametrize("name", ["cas", "lrscwait-bounded-q0"])
    def test_unknown(self, name):
        with pytest.raises(ConfigError):
            resolve_flavor(name)


def test_powers_of_two():
    assert powers_of_two(1, 8) == [1, 2, 4, 8]
    assert powers_of_two(3, 20) == [4, 8, 16]


class TestSweepPoints:
    def test_default_values(self):
        sim = SimConfig(n_cores=8, n_banks=32)
        assert sweep_values(ExperimentSpec(name=ExperimentName.HISTOGRAM), sim) == [
            1, 2, 4, 8, 16, 32,
        ]
        assert sweep_values(ExperimentSpec(name=ExperimentName.QUEUE), sim) == [1, 2, 4, 8]
        assert sweep_values(ExperimentSpec(name=ExperimentName.INTERFERENCE, workers=2), sim) == [
            0, 2, 6,
        ]

    def test_histogram_points(self):
        spec = ExperimentSpec(values=[1, 4], flavors=["amo-add", "colibri"], repetitions=2)
        points = build_points(spec, SimConfig(n_cores=4, n_banks=8))
        assert len(points) == 8
        point = points[-1]
        assert (point.flavor, point.sweep_value, point.repetition) == ("colibri", 4, 1)
        assert point.run.sim.adapter is AdapterKind.COLIBRI
        assert point.run.sim.seed == 1
        assert point.run.programs[0].bins == 4

    def test_lock_flavors_run_critical_sections(self):
        spec = ExperimentSpec(values=[2], flavors=["spin-lock-lr-sc"])
        (point,) = build_points(spec, SimConfig(n_cores=4, n_banks=8))
        assert point.run.programs[0].kind is ProgramKind.LOCKED_CS
        assert point.run.sim.adapter is AdapterKind.PLAIN_LRSC

    def test_interference_adds_baseline(self):
        spec = ExperimentSpec(
            name=ExperimentName.INTERFERENCE, values=[4], flavors=["colibri"], workers=2
        )
        points = build_points(spec, SimConfig(n_cores=8, n_banks=16))
        assert [(p.sweep_value, p.baseline) for p in points] == [(0, True), (4, False)]
        assert points[1].run.sim.n_cores == 6
        assert points[1].run.programs[0].background

    def test_queue_points_resize_machine(self):
        spec = ExperimentSpec(name=ExperimentName.QUEUE, values=[2, 4], flavors=["lr-sc"])
        points = build_points(spec, SimConfig(n_cores=4, n_banks=8))
        assert [p.run.sim.n_cores for p in points] == [2, 4]

    def test_wrong_sweep_name(self):
        spec = ExperimentSpec(name=ExperimentName.QUEUE, sweep="bins")
        with pytest.raises(ConfigError, match="sweeps cores"):
            build_points(spec, SimConfig())

    def test_lock_flavor_outside_histogram(self):
        spec = ExperimentSpec(name=ExperimentName.QUEUE, flavors=["mcs-mwait-lock"])
        with pytest.raises(ConfigError, match="only applies to the histogram"):
            build_points(spec, SimConfig())


def test_bench_machine():
    assert (bench_machine().n_cores, bench_machine().n_banks) == (64, 256)
    full = bench_machine(SimConfig(channel_latency=3), full_scale=True)
    assert (full.n_cores, full.n_banks, full.channel_latency) == (256, 1024, 3)


def test_spread():
    assert row().spread == pytest.approx(1.0)
    assert row(ops_mean=0.0).spread == 0.0


def test_csv_roundtrip(tmp_path):
    path = write_csv([row(), row("lr-sc", worker_rel_perf=0.5)], tmp_path / "out" / "h.csv")
    rows = read_csv(path)
    assert list(rows[0]) == list(CSV_COLUMNS)
    assert rows[0]["worker_rel_perf"] == ""
    assert rows[1]["worker_rel_perf"] == "0.5000"


def test_csv_missing_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("flavor,sweep_value\ncolibri,1\n")
    with pytest.raises(ConfigError, match="lacks columns"):
        read_csv(path)


def test_energy_proxy(fig2_run):
    result = simulate(fig2_run, trace=True)
    energy = energy_proxy(result.trace)
    assert (energy.messages, energy.bank_accesses, energy.ops) == (10, 5, 2)
    assert energy.msgs_per_op == 5.0


def test_small_histogram_sweep(tmp_path):
    spec = ExperimentSpec(
        values=[1, 8], flavors=["colibri", "lrscwait-ideal", "lr-sc"], increments_per_core=8
    )
    rows = run_experiment(spec, SimConfig(n_cores=8, n_banks=32), out_dir=tmp_path)
    assert [(r.flavor, r.sweep_value) for r in rows] == [
        ("colibri", 1),
        ("colibri", 8),
        ("lrscwait-ideal", 1),
        ("lrscwait-ideal", 8),
        ("lr-sc", 1),
        ("lr-sc", 8),
    ]
    for r in rows:
        assert r.all_quotas_met
        if r.flavor != "lr-sc":
            assert r.retries == 0


# -- full-size sweeps ------------------------------------------------------------------

BINS = [1, 4, 16, 64, 256]


@pytest.fixture(scope="module", params=[5, 3], ids=lambda latency: f"latency{latency}")
def histogram(request):
    spec = ExperimentSpec(
        values=BINS,
        flavors=["amo-add", "lrscwait-ideal", "lrscwait-bounded-q1", "colibri", "lr-sc"],
        increments_per_core=16,
    )
    sim = bench_machine().model_copy(update={"channel_latency": request.param})
    rows = run_experiment(spec, sim, jobs=4)
    return {(r.flavor, r.sweep_value): r for r in rows}


@pytest.mark.slow
def test_queued_flavors_never_retry(histogram):
    for bins in BINS:
        assert histogram[("colibri", bins)].retries == 0
        assert histogram[("lrscwait-ideal", bins)].retries == 0
    assert histogram[("lr-sc", 1)].retries > 0


@pytest.mark.slow
def test_histogram_throughput_ordering(histogram):
    for bins in BINS:
        amo = histogram[("amo-add", bins)].throughput
        ideal = histogram[("lrscwait-ideal", bins)].throughput
        colibri = histogram[("colibri", bins)].throughput
        lrsc = histogram[("lr-sc", bins)].throughput
        assert amo >= ideal >= colibri >= lrsc
        assert colibri >= 0.7 * ideal
    assert histogram[("colibri", 1)].throughput >= 3 * histogram[("lr-sc", 1)].throughput


@pytest.mark.slow
def test_bounded_queue_degrades_under_contention(histogram):
    for bins in (64, 256):
        ideal = histogram[("lrscwait-ideal", bins)].throughput
        assert histogram[("lrscwait-bounded-q1", bins)].throughput >= 0.9 * ideal
    ideal = histogram[("lrscwait-ideal", 1)].throughput
    assert histogram[("lrscwait-bounded-q1", 1)].throughput < 0.5 * ideal


@pytest.mark.slow
def test_energy_per_op(histogram):
    colibri = histogram[("colibri", 1)].msgs_per_op
    assert histogram[("lr-sc", 1)].msgs_per_op >= 5 * colibri
    # LRwait, SCwait and their responses, plus one SuccessorUpdate and WakeUpRequest
    for bins in BINS:
        assert 4 <= histogram[("colibri", bins)].msgs_per_op <= 6


ORDERED_FLAVORS = ["amo-add", "lrscwait-ideal", "colibri", "lr-sc"]


@pytest.mark.slow
@pytest.mark.parametrize("latency", [5, 3])
def test_contention_only_hurts(latency):
    sim = bench_machine().model_copy(update={"channel_latency": latency})
    every_bin_count = list(range(1, sim.n_banks + 1))
    spec = ExperimentSpec(values=every_bin_count, flavors=ORDERED_FLAVORS, increments_per_core=16)
    rows = run_experiment(spec, sim, jobs=4)
    series = {
        flavor: [r.throughput for r in rows if r.flavor == flavor] for flavor in ORDERED_FLAVORS
    }
    for flavor, throughputs in series.items():
        assert len(throughputs) == len(every_bin_count)
        for bins, (fewer, more) in enumerate(zip(throughputs, throughputs[1:]), 1):
            assert more >= fewer, f"{flavor} drops from {bins} to {bins + 1} bins"
    for bins, point in zip(every_bin_count, zip(*series.values())):
        amo, ideal, colibri, lrsc = point
        assert amo >= ideal >= colibri >= lrsc, f"ordering broken at {bins} bins"


@pytest.mark.slow
def test_queue_fairness():
    spec = ExperimentSpec(
        name=ExperimentName.QUEUE, values=[64], flavors=["colibri", "lr-sc"], ops_per_core=16
    )
    rows = {r.flavor: r for r in run_experiment(spec, bench_machine())}
    colibri, lrsc = rows["colibri"], rows["lr-sc"]
    assert colibri.all_quotas_met
    assert colibri.spread < lrsc.spread
    assert lrsc.spread >= 2 * colibri.spread


@pytest.mark.slow
def test_pollers_barely_slow_workers_with_colibri():
    spec = ExperimentSpec(
        name=ExperimentName.INTERFERENCE, values=[60], flavors=["colibri", "lr-sc"], workers=4
    )
    rows = {r.flavor: r for r in run_experiment(spec, bench_machine())}
    assert rows["colibri"].worker_rel_perf >= 0.9
    assert rows["colibri"].worker_rel_perf > rows["lr-sc"].worker_rel_perf
