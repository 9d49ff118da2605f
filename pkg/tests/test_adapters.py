"""Tests for the baseline bank front-ends and the storage cost model."""

import pytest

from colibri_sim.adapters import (
    CostScheme,
    PlainLrscAdapter,
    ReservationQueueAdapter,
    cost_model,
    id_bits,
)
from colibri_sim.config import AdapterKind, AtomicFlavor, RunConfig, SimConfig
from colibri_sim.messages import SC_FAILURE, SC_SUCCESS, MsgKind
from colibri_sim.sim import SimulationError
from colibri_sim.workloads import build_simulator, simulate

from .conftest import rmw_run


def bank_of(adapter: AdapterKind, n_cores: int = 3, **sim_fields):
    sim = build_simulator(
        RunConfig(sim=SimConfig(n_cores=n_cores, n_banks=1, adapter=adapter, **sim_fields))
    )
    return sim.banks[0]


def outbox_kinds(bank):
    return [(message.kind, message.core) for _, _, message in bank.sim._outbox]


class TestPlainMemory:
    def test_amo_returns_old_value(self):
        bank = bank_of(AdapterKind.AMO_ONLY)
        bank.poke(0, 4)
        resp = bank.handle_amo_add(1, 0, 3)
        assert resp.kind is MsgKind.AMO_RESP
        assert resp.value == 4
        assert bank.read(0) == 7

    def test_store_then_load(self):
        bank = bank_of(AdapterKind.AMO_ONLY)
        bank.handle_store(0, 2, 9)
        assert bank.handle_load(1, 2).value == 9

    def test_reservations_unsupported(self):
        bank = bank_of(AdapterKind.AMO_ONLY)
        with pytest.raises(SimulationError, match="does not implement LrWaitReq"):
            bank.handle_lrwait(0, 0)


class TestPlainLrsc:
    def test_later_lr_steals_reservation(self):
        bank = bank_of(AdapterKind.PLAIN_LRSC)
        assert isinstance(bank, PlainLrscAdapter)
        bank.handle_lr(0, 0)
        bank.handle_lr(1, 0)
        assert bank.handle_sc(0, 0, 5).value == SC_FAILURE
        assert bank.handle_sc(1, 0, 6).value == SC_SUCCESS
        assert bank.read(0) == 6

    def test_store_invalidates(self):
        bank = bank_of(AdapterKind.PLAIN_LRSC)
        bank.handle_lr(0, 0)
        bank.handle_store(1, 0, 2)
        assert bank.handle_sc(0, 0, 5).value == SC_FAILURE
        assert bank.read(0) == 2

    def test_other_address_keeps_reservation(self):
        bank = bank_of(AdapterKind.PLAIN_LRSC)
        bank.handle_lr(0, 0)
        bank.handle_store(1, 1, 2)
        assert bank.handle_sc(0, 0, 5).value == SC_SUCCESS


class TestReservationQueue:
    def test_fifo_grants(self):
        bank = bank_of(AdapterKind.LRSCWAIT_IDEAL)
        assert isinstance(bank, ReservationQueueAdapter)
        assert bank.handle_lrwait(0, 0).kind is MsgKind.LRWAIT_RESP
        assert bank.handle_lrwait(1, 0) is None
        assert bank.handle_lrwait(2, 0) is None
        assert bank.handle_scwait(0, 0, 1).value == SC_SUCCESS
        assert [w.core for w in bank.queues[0]] == [1, 2]
        assert outbox_kinds(bank)[-1] == (MsgKind.LRWAIT_RESP, 1)

    def test_grant_reads_committed_value(self):
        bank = bank_of(AdapterKind.LRSCWAIT_IDEAL)
        bank.handle_lrwait(0, 0)
        bank.handle_lrwait(1, 0)
        bank.handle_scwait(0, 0, 41)
        granted = bank.sim._outbox[-1][2]
        assert granted.value == 41

    def test_store_breaks_reservation_but_queue_advances(self):
        bank = bank_of(AdapterKind.LRSCWAIT_IDEAL)
        bank.handle_lrwait(0, 0)
        bank.handle_lrwait(1, 0)
        bank.handle_store(2, 0, 9)
        assert bank.handle_scwait(0, 0, 1).value == SC_FAILURE
        assert bank.read(0) == 9
        assert bank.queues[0][0].core == 1

    def test_non_head_scwait_fails(self):
        bank = bank_of(AdapterKind.LRSCWAIT_IDEAL)
        bank.handle_lrwait(0, 0)
        bank.handle_lrwait(1, 0)
        assert bank.handle_scwait(1, 0, 3).value == SC_FAILURE
        assert [w.core for w in bank.queues[0]] == [0, 1]

    def test_last_scwait_frees_queue(self):
        bank = bank_of(AdapterKind.LRSCWAIT_IDEAL)
        bank.handle_lrwait(0, 0)
        bank.handle_scwait(0, 0, 1)
        assert bank.queues == {}

    def test_second_outstanding_lrwait(self):
        bank = bank_of(AdapterKind.LRSCWAIT_IDEAL)
        bank.handle_lrwait(0, 0)
        with pytest.raises(SimulationError, match="second outstanding"):
            bank.handle_lrwait(0, 1)

    def test_bounded_queue_fails_when_full(self):
        bank = bank_of(AdapterKind.LRSCWAIT_BOUNDED, queue_slots=2)
        assert bank.kind is AdapterKind.LRSCWAIT_BOUNDED
        bank.handle_lrwait(0, 0)
        assert bank.handle_lrwait(1, 0) is None
        assert bank.handle_lrwait(2, 0).kind is MsgKind.FAIL_RESP


@pytest.mark.parametrize(
    "adapter,flavor,sim_fields",
    [
        (AdapterKind.AMO_ONLY, AtomicFlavor.AMO_ADD, {}),
        (AdapterKind.PLAIN_LRSC, AtomicFlavor.LR_SC, {"backoff_cycles": 8}),
        (AdapterKind.LRSCWAIT_IDEAL, AtomicFlavor.LRSC_WAIT, {}),
        (AdapterKind.LRSCWAIT_BOUNDED, AtomicFlavor.LRSC_WAIT, {"queue_slots": 1}),
        (AdapterKind.COLIBRI, AtomicFlavor.COLIBRI, {}),
    ],
)
def test_increments_are_conserved(adapter, flavor, sim_fields):
    run = rmw_run(adapter, flavor, n_cores=4, bins=2, iterations=4, monitor=True, **sim_fields)
    result = simulate(run)
    assert result.completed
    assert sum(result.memory.values()) == 16
    assert result.total_ops == 16


def test_bounded_queue_retries_on_full():
    run = rmw_run(
        AdapterKind.LRSCWAIT_BOUNDED, AtomicFlavor.LRSC_WAIT, n_cores=4, iterations=2, queue_slots=1
    )
    result = simulate(run)
    assert result.completed
    assert result.memory[0] == 8
    assert result.total_retries > 0


def retry_gaps(result) -> list[int]:
    """Cycles from each FailResp reaching a core to that core sending its next LRwait."""
    failed_at: dict[str, int] = {}
    gaps = []
    for record in result.trace.message_records():
        if record.kind == MsgKind.FAIL_RESP.value:
            failed_at[record.destination] = record.cycle
        elif record.kind == MsgKind.LRWAIT_REQ.value and record.source in failed_at:
            gaps.append(record.get_int("sent") - failed_at.pop(record.source))
    return gaps


@pytest.mark.parametrize("window", [0, 9])
def test_full_queue_retry_waits_a_seeded_pause(window):
    run = rmw_run(
        AdapterKind.LRSCWAIT_BOUNDED,
        AtomicFlavor.LRSC_WAIT,
        n_cores=4,
        iterations=3,
        queue_slots=1,
        fail_retry_window=window,
    )
    result = simulate(run, trace=True)
    assert result.completed
    assert result.memory[0] == 12
    gaps = retry_gaps(result)
    assert gaps
    assert all(0 <= gap <= window for gap in gaps)
    if window:
        assert max(gaps) > 0


def test_fail_pause_defaults_to_channel_latency():
    run = rmw_run(AdapterKind.LRSCWAIT_BOUNDED, AtomicFlavor.LRSC_WAIT, channel_latency=3)
    core = build_simulator(run).cores[0]
    pauses = [core.fail_pause() for _ in range(200)]
    assert all(pause.backoff for pause in pauses)
    assert {pause.cycles for pause in pauses} == {0, 1, 2, 3}


class TestCostModel:
    def test_id_bits(self):
        assert [id_bits(n) for n in (1, 2, 3, 256, 257)] == [0, 1, 2, 8, 9]

    def test_full_scale(self):
        ideal = cost_model(CostScheme.IDEAL, 256, 1024)
        colibri = cost_model(CostScheme.COLIBRI, 256, 1024)
        assert ideal.identifier_bits == 2_097_152
        assert colibri.identifier_bits == 18_432
        assert ideal.identifier_bits > 100 * colibri.identifier_bits

    def test_bounded(self):
        cost = cost_model(CostScheme.BOUNDED, 256, 1024, q=4)
        assert cost.identifier_bits == 32_768
        assert cost.valid_bits == 5 * 1024

    def test_total(self):
        cost = cost_model(CostScheme.COLIBRI, 4, 2, addresses_per_bank=2, address_width=16)
        assert cost.identifier_bits == 4 * 2 + 2 * 2 * 2 * 2
        assert cost.valid_bits == 4 + 3 * 2 * 2
        assert cost.address_bits == 16 * 2 * 2
        assert cost.total_bits == cost.identifier_bits + cost.valid_bits + cost.address_bits

    def test_ideal_grows_quadratically_colibri_linearly(self):
        ratios = []
        for n in (16, 64, 256):
            ideal = cost_model(CostScheme.IDEAL, n, 4 * n).identifier_bits
            colibri = cost_model(CostScheme.COLIBRI, n, 4 * n).identifier_bits
            assert colibri == 9 * n * id_bits(n)
            ratios.append(ideal / colibri)
        assert ratios == pytest.approx([4 * n / 9 for n in (16, 64, 256)])

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            cost_model(CostScheme.IDEAL, 0, 4)
