"""Tests for core programs and machine assembly."""

import pytest

from colibri_sim.config import (
    AdapterKind,
    AtomicFlavor,
    ConfigError,
    CoreProgram,
    ProgramKind,
    RunConfig,
    SimConfig,
    TargetOrder,
)
from colibri_sim.sim import SimulationError
from colibri_sim.trace import Trace, TraceParseError
from colibri_sim.workloads import (
    EMPTY,
    AddressLayout,
    ScriptedDelays,
    build_simulator,
    replay,
    simulate,
)

from .conftest import rmw_run


class TestAddressLayout:
    def test_skips_reserved(self):
        layout = AddressLayout(4)
        layout.reserve([0])
        assert layout.alloc(2) == [1, 2]
        assert layout.alloc(2, avoid_banks={3}) == [4, 5]
        assert layout.banks_of([4, 5, 7]) == {0, 1, 3}

    def test_avoiding_every_bank_is_ignored(self):
        layout = AddressLayout(2)
        assert layout.alloc(2, avoid_banks={0, 1}) == [0, 1]


class TestBuild:
    def test_unassigned_cores_idle(self):
        run = RunConfig(
            sim=SimConfig(n_cores=4, n_banks=4),
            programs=[CoreProgram(cores="0", target_addresses=[0])],
        )
        sim = build_simulator(run)
        assert not sim.cores[0].background
        assert all(core.background for core in sim.cores[1:])
        assert sim.cores[1].program.kind is ProgramKind.IDLE

    def test_core_assigned_twice(self):
        run = RunConfig(
            sim=SimConfig(n_cores=2),
            programs=[CoreProgram(cores="0-1"), CoreProgram(cores="1")],
        )
        with pytest.raises(ConfigError, match="assigned two programs"):
            build_simulator(run)

    def test_bins_get_distinct_addresses(self):
        sim = build_simulator(rmw_run(AdapterKind.COLIBRI, AtomicFlavor.COLIBRI, bins=8))
        targets = sim.cores[0].targets
        assert len(set(targets)) == 8
        assert all(core.targets == targets for core in sim.cores)

    def test_queue_nodes_only_on_colibri(self):
        colibri = build_simulator(rmw_run(AdapterKind.COLIBRI, AtomicFlavor.COLIBRI))
        ideal = build_simulator(rmw_run(AdapterKind.LRSCWAIT_IDEAL, AtomicFlavor.LRSC_WAIT))
        assert colibri.cores[0].qnode is not None
        assert ideal.cores[0].qnode is None

    def test_round_robin_targets(self):
        program = CoreProgram(
            cores="all", bins=4, target_order=TargetOrder.ROUND_ROBIN, iterations=4
        )
        sim = build_simulator(RunConfig(sim=SimConfig(n_cores=2, n_banks=4), programs=[program]))
        core = sim.cores[1]
        assert [core.pick_index(i) for i in range(4)] == [1, 2, 3, 0]


def test_seed_fixes_target_choices():
    run = rmw_run(AdapterKind.AMO_ONLY, AtomicFlavor.AMO_ADD, bins=16, iterations=8, seed=3)
    first = simulate(run)
    second = simulate(run)
    assert [c.committed for c in first.cores] == [c.committed for c in second.cores]


def test_think_cycles_delay_every_iteration():
    def finish(think: int) -> int:
        program = CoreProgram(
            cores="0",
            target_addresses=[0],
            atomic_flavor=AtomicFlavor.AMO_ADD,
            iterations=3,
            think_cycles=think,
        )
        run = RunConfig(
            sim=SimConfig(n_cores=1, n_banks=1, adapter=AdapterKind.AMO_ONLY), programs=[program]
        )
        result = simulate(run)
        assert result.memory[0] == 3
        return result.finish_cycle

    assert finish(10) - finish(0) == 30


def test_amo_add_has_no_retries():
    result = simulate(rmw_run(AdapterKind.AMO_ONLY, AtomicFlavor.AMO_ADD, n_cores=8))
    assert result.memory[0] == 32
    assert result.total_retries == 0


def test_lr_sc_gives_up_after_max_retries():
    program = CoreProgram(
        cores="all",
        target_addresses=[0],
        atomic_flavor=AtomicFlavor.LR_SC,
        iterations=4,
        max_retries=0,
        backoff=0,
    )
    run = RunConfig(
        sim=SimConfig(n_cores=8, n_banks=1, adapter=AdapterKind.PLAIN_LRSC, backoff_jitter=0),
        programs=[program],
    )
    result = simulate(run)
    assert result.completed
    gave_up = sum(core.gave_up for core in result.cores)
    assert gave_up > 0
    assert result.memory[0] == result.total_ops


@pytest.mark.parametrize(
    "adapter,flavor",
    [
        (AdapterKind.AMO_ONLY, AtomicFlavor.SPIN_LOCK_AMO),
        (AdapterKind.PLAIN_LRSC, AtomicFlavor.SPIN_LOCK_LR_SC),
        (AdapterKind.COLIBRI, AtomicFlavor.SPIN_LOCK_COLIBRI),
        (AdapterKind.COLIBRI, AtomicFlavor.MCS_MWAIT_LOCK),
    ],
)
def test_locked_critical_sections(adapter, flavor):
    program = CoreProgram(
        cores="all",
        kind=ProgramKind.LOCKED_CS,
        atomic_flavor=flavor,
        bins=2,
        iterations=2,
        backoff=4,
        cs_length=2,
    )
    run = RunConfig(sim=SimConfig(n_cores=4, n_banks=16, adapter=adapter), programs=[program])
    sim = build_simulator(run)
    result = sim.run_until_quiescent()
    assert result.completed
    data = sim.cores[0].targets
    assert sum(result.memory.get(address, 0) for address in data) == 8
    assert result.total_ops == 8


@pytest.mark.parametrize(
    "adapter,flavor",
    [
        (AdapterKind.AMO_ONLY, AtomicFlavor.AMO_ADD),
        (AdapterKind.PLAIN_LRSC, AtomicFlavor.LR_SC),
        (AdapterKind.COLIBRI, AtomicFlavor.COLIBRI),
    ],
)
def test_queue_ops_pop_what_was_pushed(adapter, flavor):
    program = CoreProgram(
        cores="all", kind=ProgramKind.QUEUE_OPS, atomic_flavor=flavor, iterations=2, backoff=4
    )
    run = RunConfig(sim=SimConfig(n_cores=4, n_banks=8, adapter=adapter), programs=[program])
    result = simulate(run)
    assert result.completed
    pushed = [item for core in result.cores for op, item in core.results if op == "push"]
    popped = [
        item for core in result.cores for op, item in core.results if op == "pop" and item != EMPTY
    ]
    assert len(pushed) == 8
    assert len(popped) == len(set(popped))
    assert set(popped) <= set(pushed)
    assert popped


def test_background_pollers_stop_with_workers():
    programs = [
        CoreProgram(
            cores="0-1",
            target_addresses=[0],
            iterations=None,
            background=True,
            atomic_flavor=AtomicFlavor.COLIBRI,
        ),
        CoreProgram(
            cores="2",
            kind=ProgramKind.WORKER_STREAM,
            iterations=8,
            target_addresses=[5, 6, 7],
            cs_length=2,
        ),
    ]
    result = simulate(RunConfig(sim=SimConfig(n_cores=3, n_banks=4), programs=programs))
    assert result.completed
    assert result.cores[2].ops_completed == 8
    assert result.cores[0].ops_completed > 0
    assert result.first_finish_cycle == result.cores[2].finish_cycle


class TestTraceReplay:
    def test_header_reproduces_run(self, fig2_run):
        original = simulate(fig2_run, trace=True, delays=None)
        assert original.trace.config["run"]["sim"]["n_cores"] == 2
        replayed = replay(Trace.parse(original.trace.render()))
        assert replayed.trace.lines() == original.trace.lines()

    def test_scripted_delays_reproduce(self, fig2_run):
        delays = [1, 3] * 20
        first = simulate(fig2_run, trace=True, delays=delays)
        assert first.trace.config["delays"] == delays
        second = replay(Trace.parse(first.trace.render()))
        assert second.trace.lines() == first.trace.lines()

    def test_exhausted_delays(self, fig2_run):
        with pytest.raises(SimulationError, match="exhausted"):
            simulate(fig2_run, delays=[])

    def test_needs_header(self):
        with pytest.raises(TraceParseError):
            replay(Trace())


def test_scripted_delays_in_order():
    chooser = ScriptedDelays([4, 2])
    assert chooser(None, None, None, None) == 4
    assert chooser(None, None, None, None) == 2
