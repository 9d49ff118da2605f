"""Scripted core programs and the machine builder.

Each core runs one routine: a generator that yields the next action (send
requests and wait for their responses, or wait a number of cycles). The core
resumes the routine with the response, so a routine reads like straight-line
code for one core.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Generator, Iterable, Optional, Sequence, Union

import numpy as np

from .adapters import MemoryAdapter, PlainLrscAdapter, ReservationQueueAdapter
from .colibri import ColibriAdapter, QNode
from .config import (
    AdapterKind,
    AtomicFlavor,
    ConfigError,
    CoreProgram,
    Mutation,
    ProgramKind,
    RunConfig,
    TargetOrder,
    config_manager,
)
from .messages import (
    DEFERRED_KINDS,
    RESPONSE_KINDS,
    SC_SUCCESS,
    Endpoint,
    MemoryMessage,
    MsgKind,
)
from .monitor import NullMonitor, ProtocolMonitor
from .sim import DelayChooser, RunResult, SimulationError, Simulator
from .trace import Trace, TraceParseError, TraceRecorder

logger = logging.getLogger(__name__)

EMPTY = -1
DEFAULT_CS_LENGTH = 3


class CorePhase(str, Enum):
    RUNNING = "Running"
    AWAITING_RESPONSE = "AwaitingResponse"
    SLEEPING = "Sleeping"
    BACKING_OFF = "BackingOff"
    DONE = "Done"

    def __str__(self) -> str:
        return self.value


@dataclass
class CoreState:
    """Counters and results of one core."""

    core: int
    background: bool = False
    phase: CorePhase = CorePhase.RUNNING
    ops_completed: int = 0
    messages_sent: int = 0
    retries: int = 0
    gave_up: int = 0
    polling_loads: int = 0
    finish_cycle: Optional[int] = None
    backoff_until: Optional[int] = None
    committed: list[tuple[int, int]] = field(default_factory=list)
    results: list[tuple[str, int]] = field(default_factory=list)


@dataclass(frozen=True)
class Send:
    """Send requests back to back, then sleep until every one is answered."""

    messages: tuple[MemoryMessage, ...]


@dataclass(frozen=True)
class Wait:
    cycles: int
    backoff: bool = False


Action = Union[Send, Wait]
Routine = Generator[Action, Any, Any]


class Core:
    """Drives one routine and owns the core's queue node, if any."""

    def __init__(
        self,
        sim: Simulator,
        core_id: int,
        program: CoreProgram,
        targets: list[int],
        seed: int,
        extra: Optional[dict[str, object]] = None,
    ):
        self.sim = sim
        self.id = core_id
        self.endpoint = Endpoint.core(core_id)
        self.program = program
        self.targets = targets
        self.extra = extra or {}
        self.background = program.background or program.kind is ProgramKind.IDLE
        self.start_delay = program.start_delay
        self.state = CoreState(core_id, background=self.background)
        self.rng = np.random.default_rng([seed, core_id])
        # backoff draws stay off the bin stream so every flavor visits the same bins
        self.jitter_rng = np.random.default_rng([seed, core_id, 1])
        self.qnode = QNode(sim, core_id) if sim.config.adapter is AdapterKind.COLIBRI else None
        self._routine: Optional[Routine] = None
        self._awaiting = 0
        self._responses: list[MemoryMessage] = []
        self._burst = False
        self._history: list[tuple] = []

    # -- helpers used by routines ------------------------------------------

    def request(self, kind: MsgKind, address: int, value: int = 0, expected: int = 0) -> Send:
        return Send((MemoryMessage(kind, address, value, self.id, expected),))

    def burst(self, *messages: MemoryMessage) -> Send:
        return Send(tuple(messages))

    def backoff(self) -> Wait:
        base = self.program.backoff
        if base is None:
            base = self.sim.config.backoff_cycles
        jitter = self.sim.config.backoff_jitter
        extra = int(self.jitter_rng.integers(0, jitter + 1)) if jitter else 0
        return Wait(base + extra, backoff=True)

    def fail_pause(self) -> Wait:
        """Seeded pause before re-issuing a request the controller turned away."""
        window = self.sim.config.fail_retry_window
        if window is None:
            window = self.sim.config.channel_latency
        pause = int(self.jitter_rng.integers(0, window + 1)) if window else 0
        return Wait(pause, backoff=True)

    def pick_index(self, iteration: int) -> int:
        """Index into the targets; uniform from the core's own generator unless round-robin."""
        if self.program.target_order is TargetOrder.ROUND_ROBIN or len(self.targets) == 1:
            return (self.id + iteration) % len(self.targets)
        return int(self.rng.integers(len(self.targets)))

    def pick_target(self, iteration: int) -> int:
        return self.targets[self.pick_index(iteration)]

    def should_stop(self) -> bool:
        return self.background and self.sim.foreground_done

    def iterations(self) -> Iterable[int]:
        """Iteration indices; background programs run until the foreground is done."""
        i = 0
        while True:
            if self.program.iterations is not None and i >= self.program.iterations:
                return
            if self.should_stop():
                return
            yield i
            i += 1

    # -- event-loop entry points ---------------------------------------------

    def start(self) -> None:
        self.state.phase = CorePhase.RUNNING
        self._routine = ROUTINES[self.program.kind](self)
        self._advance(None)

    def wake(self) -> None:
        self._history.append(("wake",))
        self.state.backoff_until = None
        self.state.phase = CorePhase.RUNNING
        self._advance(None)

    def deliver(self, message: MemoryMessage) -> None:
        if self.qnode is not None and self.qnode.on_receive(message):
            return
        if message.kind not in RESPONSE_KINDS or self._awaiting == 0:
            raise SimulationError(
                f"core {self.id} received unexpected {message.kind.value} at cycle {self.sim.now}"
            )
        self._history.append(message.key())
        self._responses.append(message)
        self._awaiting -= 1
        if self._awaiting == 0:
            responses, self._responses = self._responses, []
            self.state.phase = CorePhase.RUNNING
            self._advance(responses if self._burst else responses[0])

    def _advance(self, value: object) -> None:
        while True:
            try:
                action = self._routine.send(value)
            except StopIteration:
                self._finish()
                return
            if isinstance(action, Send):
                self._send(action)
                return
            if action.cycles <= 0:
                value = None
                continue
            until = self.sim.now + action.cycles
            if action.backoff:
                self.state.phase = CorePhase.BACKING_OFF
                self.state.backoff_until = until
            self.sim.wake_at(self.id, until)
            return

    def _send(self, action: Send) -> None:
        deferred = False
        for message in action.messages:
            self.sim.send(self.endpoint, self.sim.bank_for(message.address).endpoint, message)
            self.state.messages_sent += 1
            if self.qnode is not None:
                self.qnode.on_send(message)
            deferred = deferred or message.kind in DEFERRED_KINDS
        self._awaiting = len(action.messages)
        self._burst = len(action.messages) > 1
        self.state.phase = CorePhase.SLEEPING if deferred else CorePhase.AWAITING_RESPONSE

    def _finish(self) -> None:
        self.state.phase = CorePhase.DONE
        self.state.finish_cycle = self.sim.now
        self.sim.note(
            self.endpoint,
            "Done",
            [("ops", self.state.ops_completed), ("gave_up", self.state.gave_up)],
        )
        self.sim.core_finished(self)

    def fingerprint(self, now: int) -> tuple:
        """Routine position is a function of the inputs the core has seen."""
        return (
            self.state.phase.value,
            tuple(self._history),
            self._awaiting,
            tuple(m.key() for m in self._responses),
            self.qnode.fingerprint() if self.qnode is not None else None,
        )


# -- atomic update flavors -----------------------------------------------------


def rmw_increment_step(core: Core, address: int, amount: int) -> Routine:
    """One atomic increment of ``address``; returns normally once committed or abandoned."""
    flavor = core.program.atomic_flavor
    state = core.state
    compute = core.program.cs_length or 0
    if flavor is AtomicFlavor.AMO_ADD:
        resp = yield core.request(MsgKind.AMO_ADD, address, amount)
        state.committed.append((address, resp.value + amount))
        return True
    if flavor is AtomicFlavor.LR_SC:
        failures = 0
        while True:
            loaded = yield core.request(MsgKind.LR_REQ, address)
            yield Wait(compute)
            new_value = loaded.value + amount
            sc = yield core.request(MsgKind.SC_REQ, address, new_value)
            if sc.value == SC_SUCCESS:
                state.committed.append((address, new_value))
                return True
            state.retries += 1
            failures += 1
            if core.program.max_retries is not None and failures > core.program.max_retries:
                state.gave_up += 1
                return False
            yield core.backoff()
    # LRwait/SCwait: a response means this core holds the queue head
    while True:
        loaded = yield core.request(MsgKind.LRWAIT_REQ, address)
        if loaded.kind is MsgKind.FAIL_RESP:
            state.retries += 1
            yield core.fail_pause()
            continue
        yield Wait(compute)
        new_value = loaded.value + amount
        sc = yield core.request(MsgKind.SCWAIT_REQ, address, new_value)
        if sc.value == SC_SUCCESS:
            state.committed.append((address, new_value))
            return True
        state.retries += 1


def lrwait_swap(core: Core, address: int, compute: Callable[[int], int]) -> Routine:
    """Atomically replace ``address`` with ``compute(old)``; returns the old value."""
    while True:
        loaded = yield core.request(MsgKind.LRWAIT_REQ, address)
        if loaded.kind is MsgKind.FAIL_RESP:
            core.state.retries += 1
            yield core.fail_pause()
            continue
        sc = yield core.request(MsgKind.SCWAIT_REQ, address, compute(loaded.value))
        if sc.value == SC_SUCCESS:
            return loaded.value
        core.state.retries += 1


def mwait_until_changed(core: Core, address: int, expected: int) -> Routine:
    """Sleep until ``address`` holds something other than ``expected``."""
    while True:
        resp = yield core.request(MsgKind.MWAIT_REQ, address, expected=expected)
        if resp.kind is MsgKind.FAIL_RESP:
            core.state.retries += 1
            yield core.fail_pause()
            continue
        if resp.value != expected:
            return resp.value


# -- locks ---------------------------------------------------------------------


def lock_acquire(core: Core, lock: int) -> Routine:
    flavor = core.program.atomic_flavor
    state = core.state
    if flavor is AtomicFlavor.SPIN_LOCK_AMO:
        while True:
            resp = yield core.request(MsgKind.AMO_ADD, lock, 1)
            if resp.value == 0:
                return
            state.retries += 1
            yield core.backoff()
    if flavor is AtomicFlavor.SPIN_LOCK_LR_SC:
        while True:
            loaded = yield core.request(MsgKind.LR_REQ, lock)
            if loaded.value == 0:
                sc = yield core.request(MsgKind.SC_REQ, lock, 1)
                if sc.value == SC_SUCCESS:
                    return
            state.retries += 1
            yield core.backoff()
    if flavor is AtomicFlavor.SPIN_LOCK_COLIBRI:
        while True:
            old = yield from lrwait_swap(core, lock, lambda value: 1)
            if old == 0:
                return
            state.retries += 1
            yield core.backoff()
    # MCS queue lock; the tail holds core id + 1, zero when free
    me = core.id + 1
    flags, nexts = core.extra["mcs_flag"], core.extra["mcs_next"]
    yield core.request(MsgKind.STORE, nexts[core.id], 0)
    yield core.request(MsgKind.STORE, flags[core.id], 1)
    predecessor = yield from lrwait_swap(core, lock, lambda value: me)
    if predecessor == 0:
        return
    yield core.request(MsgKind.STORE, nexts[predecessor - 1], me)
    yield from mwait_until_changed(core, flags[core.id], 1)


def lock_release(core: Core, lock: int) -> Routine:
    if core.program.atomic_flavor is not AtomicFlavor.MCS_MWAIT_LOCK:
        yield core.request(MsgKind.STORE, lock, 0)
        return
    me = core.id + 1
    flags, nexts = core.extra["mcs_flag"], core.extra["mcs_next"]
    old = yield from lrwait_swap(core, lock, lambda value: 0 if value == me else value)
    if old == me:
        return
    successor = yield from mwait_until_changed(core, nexts[core.id], 0)
    yield core.request(MsgKind.STORE, flags[successor - 1], 0)


# -- routines ------------------------------------------------------------------


def rmw_loop(core: Core) -> Routine:
    for i in core.iterations():
        address = core.pick_target(i)
        yield Wait(core.program.think_cycles)
        done = yield from rmw_increment_step(core, address, core.program.value)
        if done:
            core.state.ops_completed += 1


def locked_cs(core: Core) -> Routine:
    locks = core.extra["locks"]
    cs_length = core.program.cs_length
    if cs_length is None:
        cs_length = DEFAULT_CS_LENGTH
    monitor = core.sim.monitor
    for i in core.iterations():
        index = core.pick_index(i)
        data, lock = core.targets[index], locks[index]
        yield Wait(core.program.think_cycles)
        yield from lock_acquire(core, lock)
        monitor.on_cs_enter(lock, core.id, core.sim.now)
        loaded = yield core.request(MsgKind.LOAD, data)
        yield Wait(cs_length)
        yield core.request(MsgKind.STORE, data, loaded.value + core.program.value)
        monitor.on_cs_exit(lock, core.id, core.sim.now)
        core.state.committed.append((data, loaded.value + core.program.value))
        yield from lock_release(core, lock)
        core.state.ops_completed += 1


def _queue_update(core: Core, word: int, compute: Callable[[int], int]) -> Routine:
    """Read-modify-write of the queue index word; returns the old value."""
    flavor = core.program.atomic_flavor
    if flavor is AtomicFlavor.LR_SC:
        while True:
            loaded = yield core.request(MsgKind.LR_REQ, word)
            new_value = compute(loaded.value)
            if new_value == loaded.value:
                return loaded.value
            sc = yield core.request(MsgKind.SC_REQ, word, new_value)
            if sc.value == SC_SUCCESS:
                return loaded.value
            core.state.retries += 1
            yield core.backoff()
    if flavor is AtomicFlavor.AMO_ADD:
        # lock-based queue: spin lock over atomic adds guards plain accesses
        lock = core.extra["queue_lock"]
        while True:
            resp = yield core.request(MsgKind.AMO_ADD, lock, 1)
            if resp.value == 0:
                break
            core.state.retries += 1
            yield core.backoff()
        loaded = yield core.request(MsgKind.LOAD, word)
        new_value = compute(loaded.value)
        if new_value != loaded.value:
            yield core.request(MsgKind.STORE, word, new_value)
        yield core.request(MsgKind.STORE, lock, 0)
        return loaded.value
    old = yield from lrwait_swap(core, word, compute)
    return old


QUEUE_INDEX_SHIFT = 1 << 20


def concurrent_queue_op(core: Core, op: str, item: int = 0) -> Routine:
    """Push ``item`` or pop one item; a pop on an empty queue yields ``EMPTY``.

    The index word packs ``head * QUEUE_INDEX_SHIFT + tail``. A push claims the
    tail index and then stores the item; a pop claims the head index and then
    reads the slot, waiting for a producer that claimed it but has not stored
    yet.
    """
    word, slots = core.extra["queue_word"], core.extra["queue_slots"]
    if op == "push":
        old = yield from _queue_update(core, word, lambda value: value + 1)
        yield core.request(MsgKind.STORE, slots[old % QUEUE_INDEX_SHIFT], item)
        return item

    def take(value: int) -> int:
        head, tail = divmod(value, QUEUE_INDEX_SHIFT)
        return value if head == tail else value + QUEUE_INDEX_SHIFT

    old = yield from _queue_update(core, word, take)
    head, tail = divmod(old, QUEUE_INDEX_SHIFT)
    if head == tail:
        return EMPTY
    while True:
        loaded = yield core.request(MsgKind.LOAD, slots[head])
        if loaded.value != 0:
            return loaded.value
        core.state.polling_loads += 1
        yield Wait(core.sim.config.channel_latency)


def queue_ops(core: Core) -> Routine:
    pushes = core.program.iterations or 1
    for i in range(pushes):
        item = core.id * QUEUE_INDEX_SHIFT + i + 1
        yield from concurrent_queue_op(core, "push", item)
        core.state.results.append(("push", item))
        core.state.ops_completed += 1
    for _ in range(pushes):
        item = yield from concurrent_queue_op(core, "pop")
        core.state.results.append(("pop", item))
        core.state.ops_completed += 1


def worker_stream_step(core: Core, i: int) -> Action:
    address = core.targets[i % len(core.targets)]
    if i % 2 == 0:
        return core.request(MsgKind.LOAD, address)
    return core.request(MsgKind.STORE, address, i)


def worker_stream(core: Core) -> Routine:
    compute = core.program.cs_length or 0
    for i in core.iterations():
        yield worker_stream_step(core, i)
        core.state.ops_completed += 1
        if compute:
            yield Wait(compute)


def idle(core: Core) -> Routine:
    return
    yield


def mwait_once(core: Core) -> Routine:
    resp = yield core.request(MsgKind.MWAIT_REQ, core.targets[0], expected=core.program.expected)
    if resp.kind is MsgKind.MWAIT_RESP:
        core.state.results.append(("mwait", resp.value))
        core.state.ops_completed += 1


def store_once(core: Core) -> Routine:
    for _ in core.iterations():
        yield core.request(MsgKind.STORE, core.targets[0], core.program.value)
        core.state.committed.append((core.targets[0], core.program.value))
        core.state.ops_completed += 1


def rogue_scwait(core: Core) -> Routine:
    """LRwait, then two SCwaits back to back; a correct controller fails the second."""
    address = core.targets[0]
    loaded = yield core.request(MsgKind.LRWAIT_REQ, address)
    if loaded.kind is MsgKind.FAIL_RESP:
        return
    new_value = loaded.value + core.program.value
    first = MemoryMessage(MsgKind.SCWAIT_REQ, address, new_value, core.id)
    second = MemoryMessage(MsgKind.SCWAIT_REQ, address, new_value + core.program.value, core.id)
    responses = yield core.burst(first, second)
    for message, resp in zip((first, second), responses):
        if resp.value == SC_SUCCESS:
            core.state.committed.append((address, message.value))
    core.state.ops_completed += 1


ROUTINES: dict[ProgramKind, Callable[[Core], Routine]] = {
    ProgramKind.RMW_LOOP: rmw_loop,
    ProgramKind.LOCKED_CS: locked_cs,
    ProgramKind.QUEUE_OPS: queue_ops,
    ProgramKind.WORKER_STREAM: worker_stream,
    ProgramKind.IDLE: idle,
    ProgramKind.MWAIT_ONCE: mwait_once,
    ProgramKind.STORE_ONCE: store_once,
    ProgramKind.ROGUE_SCWAIT: rogue_scwait,
}


# -- machine assembly ------------------------------------------------------------


class AddressLayout:
    """Hands out word addresses; consecutive words fall in consecutive banks."""

    def __init__(self, n_banks: int):
        self.n_banks = n_banks
        self._next = 0
        self._used: set[int] = set()

    def reserve(self, addresses: Iterable[int]) -> None:
        self._used.update(addresses)

    def alloc(self, count: int, avoid_banks: Iterable[int] = ()) -> list[int]:
        avoid = set(avoid_banks)
        if len(avoid) >= self.n_banks:
            avoid = set()
        out: list[int] = []
        while len(out) < count:
            address = self._next
            self._next += 1
            if address in self._used or address % self.n_banks in avoid:
                continue
            self._used.add(address)
            out.append(address)
        return out

    def banks_of(self, addresses: Iterable[int]) -> set[int]:
        return {address % self.n_banks for address in addresses}


def make_adapter(sim: Simulator, index: int) -> MemoryAdapter:
    """Build the front-end the config selects for bank ``index``."""
    kind = sim.config.adapter
    if kind is AdapterKind.PLAIN_LRSC:
        return PlainLrscAdapter(sim, index)
    if kind is AdapterKind.LRSCWAIT_IDEAL:
        return ReservationQueueAdapter(sim, index)
    if kind is AdapterKind.LRSCWAIT_BOUNDED:
        return ReservationQueueAdapter(sim, index, capacity=sim.config.queue_slots)
    if kind is AdapterKind.COLIBRI:
        return ColibriAdapter(sim, index, sim.config.addresses_per_bank)
    return MemoryAdapter(sim, index)


def _program_words(
    program: CoreProgram, core_ids: list[int], layout: AddressLayout, n_cores: int
) -> tuple[list[int], dict[str, object]]:
    """Targets and helper words one program needs."""
    extra: dict[str, object] = {}
    kind = program.kind
    if kind is ProgramKind.LOCKED_CS:
        count = len(program.target_addresses) or program.bins or 1
        locks = layout.alloc(count)
        targets = list(program.target_addresses) or layout.alloc(count)
        extra["locks"] = locks
        if program.atomic_flavor is AtomicFlavor.MCS_MWAIT_LOCK:
            lock_banks = layout.banks_of(locks)
            extra["mcs_flag"] = dict(zip(range(n_cores), layout.alloc(n_cores, lock_banks)))
            extra["mcs_next"] = dict(zip(range(n_cores), layout.alloc(n_cores, lock_banks)))
        return targets, extra
    if kind is ProgramKind.QUEUE_OPS:
        pushes = (program.iterations or 1) * len(core_ids)
        extra["queue_word"] = layout.alloc(1)[0]
        extra["queue_lock"] = layout.alloc(1)[0]
        extra["queue_slots"] = layout.alloc(pushes)
        return [extra["queue_word"]], extra
    if program.target_addresses:
        return list(program.target_addresses), extra
    if kind is ProgramKind.WORKER_STREAM:
        return layout.alloc(program.iterations or 1), extra
    return layout.alloc(program.bins or 1), extra


def build_simulator(
    run: RunConfig,
    *,
    delay_chooser: Optional[DelayChooser] = None,
    tracer: Optional[TraceRecorder] = None,
    monitor: Optional[NullMonitor] = None,
    mutations: Iterable[Mutation] = (),
) -> Simulator:
    """Assemble banks and cores for one run; cores without a program stay idle."""
    config = run.sim
    if monitor is None:
        monitor = ProtocolMonitor() if config.monitor else NullMonitor()
    if not config.addresses_per_bank_supported:
        logger.warning(
            "addresses_per_bank=%d is outside the supported 1/2/4/8", config.addresses_per_bank
        )
    sim = Simulator(
        config, delay_chooser=delay_chooser, tracer=tracer, monitor=monitor, mutations=mutations
    )
    banks = [make_adapter(sim, index) for index in range(config.n_banks)]
    layout = AddressLayout(config.n_banks)
    for program in run.programs:
        layout.reserve(program.target_addresses)

    assigned: dict[int, tuple[CoreProgram, list[int], dict[str, object]]] = {}
    for program in run.programs:
        core_ids = program.core_ids(config.n_cores)
        targets, extra = _program_words(program, core_ids, layout, config.n_cores)
        for core_id in core_ids:
            if core_id in assigned:
                raise ConfigError(f"core {core_id} is assigned two programs")
            assigned[core_id] = (program, targets, extra)

    cores = []
    for core_id in range(config.n_cores):
        program, targets, extra = assigned.get(
            core_id, (CoreProgram(kind=ProgramKind.IDLE), [0], {})
        )
        cores.append(Core(sim, core_id, program, targets, config.seed, extra))
    sim.attach(banks, cores)
    return sim


# -- single runs -------------------------------------------------------------------


class ScriptedDelays:
    """Delay chooser that replays recorded per-message latencies in send order."""

    def __init__(self, delays: Sequence[int]):
        self.delays = list(delays)
        self.index = 0

    def __call__(
        self, sim: Simulator, source: Endpoint, destination: Endpoint, message: MemoryMessage
    ) -> int:
        if self.index >= len(self.delays):
            raise SimulationError(
                f"recorded delays exhausted after {len(self.delays)} messages at cycle {sim.now}"
            )
        delay = self.delays[self.index]
        self.index += 1
        return delay


def trace_header(
    run: RunConfig, *, delays: Optional[Sequence[int]] = None, mutations: Iterable[Mutation] = ()
) -> dict[str, Any]:
    """Everything ``replay`` needs to re-run a trace."""
    header: dict[str, Any] = {"run": run.model_dump(mode="json", exclude_none=True)}
    if delays is not None:
        header["delays"] = list(delays)
    names = sorted(m.value for m in mutations)
    if names:
        header["mutations"] = names
    return header


def simulate(
    run: RunConfig,
    *,
    trace: bool = False,
    delays: Optional[Sequence[int]] = None,
    mutations: Iterable[Mutation] = (),
    max_cycles: Optional[int] = None,
) -> RunResult:
    mutations = tuple(mutations)
    sim = build_simulator(
        run,
        delay_chooser=ScriptedDelays(delays) if delays is not None else None,
        tracer=TraceRecorder() if trace else None,
        mutations=mutations,
    )
    result = sim.run_until_quiescent(max_cycles)
    if result.trace is not None:
        result.trace.config = trace_header(run, delays=delays, mutations=mutations)
    return result


def replay(trace: Trace) -> RunResult:
    """Re-run the configuration recorded in a trace header."""
    header = trace.config
    if not header or "run" not in header:
        raise TraceParseError("trace has no config header to replay")
    run = config_manager.validate(header["run"])
    try:
        mutations = [Mutation(name) for name in header.get("mutations", [])]
    except ValueError as e:
        raise ConfigError(f"unknown mutation in trace header: {e}") from e
    return simulate(run, trace=True, delays=header.get("delays"), mutations=mutations)
