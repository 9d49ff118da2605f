"""Deterministic discrete-event kernel.

One global cycle counter, an event heap ordered by ``(deliver_at, seq)`` and
point-to-point FIFO channels between every core and every memory controller.
Banks serve at most one request per cycle; requests that arrive while a bank is
busy wait in its input queue in delivery order.
"""

from __future__ import annotations

import heapq
import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Callable, Iterable, Optional

from .config import Mutation, SimConfig
from .messages import Endpoint, MemoryMessage
from .monitor import NullMonitor
from .trace import Trace, TraceRecorder

if TYPE_CHECKING:
    from .adapters import MemoryAdapter
    from .workloads import Core, CoreState

logger = logging.getLogger(__name__)

# Chooses a channel latency for one message from the explorer's options.
DelayChooser = Callable[["Simulator", Endpoint, Endpoint, MemoryMessage], int]


class SimulationError(Exception):
    """The model reached a state the simulator does not allow."""

    pass


class ScheduleError(SimulationError):
    """An event was scheduled in the past."""

    pass


class RunOutcome(str, Enum):
    COMPLETED = "completed"
    BUDGET_EXHAUSTED = "budget-exhausted"
    DEADLOCK = "deadlock"

    def __str__(self) -> str:
        return self.value


class EventKind(str, Enum):
    DELIVER = "deliver"
    SERVICE = "service"
    WAKE = "wake"
    START = "start"


@dataclass(order=True)
class SimEvent:
    """A timestamped unit of progress; ties break on the global send sequence."""

    deliver_at: int
    seq: int
    kind: EventKind = field(compare=False)
    source: Optional[Endpoint] = field(default=None, compare=False)
    destination: Optional[Endpoint] = field(default=None, compare=False)
    message: Optional[MemoryMessage] = field(default=None, compare=False)
    sent_at: int = field(default=0, compare=False)


@dataclass
class Channel:
    """Ordered point-to-point link; delivery order equals send order."""

    source: Endpoint
    destination: Endpoint
    latency: int
    queue: deque = field(default_factory=deque)
    last_deliver_at: int = -1

    def earliest(self, now: int, latency: int) -> int:
        return max(now + latency, self.last_deliver_at)

    def enqueue(self, deliver_at: int, seq: int) -> None:
        if deliver_at < self.last_deliver_at:
            raise ScheduleError(
                f"delivery at {deliver_at} would overtake cycle {self.last_deliver_at} "
                f"on {self.source}->{self.destination}"
            )
        self.last_deliver_at = deliver_at
        self.queue.append((deliver_at, seq))

    def deliver(self, seq: int) -> None:
        if not self.queue or self.queue[0][1] != seq:
            raise SimulationError(
                f"channel {self.source}->{self.destination} delivered seq {seq} out of order"
            )
        self.queue.popleft()


@dataclass
class RunResult:
    """What a run reports back."""

    outcome: RunOutcome
    cycles: int
    finish_cycle: int
    first_finish_cycle: Optional[int]
    ops_at_first_finish: list[int]
    cores: list["CoreState"]
    messages: int
    bank_accesses: int
    memory: dict[int, int]
    trace: Optional[Trace] = None

    @property
    def completed(self) -> bool:
        return self.outcome is RunOutcome.COMPLETED

    @property
    def total_ops(self) -> int:
        return sum(core.ops_completed for core in self.cores)

    @property
    def total_retries(self) -> int:
        return sum(core.retries for core in self.cores)


class Simulator:
    """Single-threaded event loop for one simulation instance."""

    def __init__(
        self,
        config: SimConfig,
        *,
        delay_chooser: Optional[DelayChooser] = None,
        tracer: Optional[TraceRecorder] = None,
        monitor: Optional[NullMonitor] = None,
        mutations: Iterable[Mutation] = (),
    ):
        self.config = config
        self.now = 0
        self.delay_chooser = delay_chooser
        self.tracer = tracer
        self.monitor = monitor if monitor is not None else NullMonitor()
        self.mutations = frozenset(mutations)
        self.banks: list["MemoryAdapter"] = []
        self.cores: list["Core"] = []
        self.messages_delivered = 0
        self.bank_accesses = 0
        self.first_finish_cycle: Optional[int] = None
        self.ops_at_first_finish: list[int] = []
        self._heap: list[SimEvent] = []
        self._seq = itertools.count()
        self._channels: dict[tuple[Endpoint, Endpoint], Channel] = {}
        self._outbox: deque[tuple[Endpoint, Endpoint, MemoryMessage]] = deque()
        self._foreground_left = 0
        self._cores_left = 0
        self._started = False

    # -- assembly ---------------------------------------------------------

    def attach(self, banks: list["MemoryAdapter"], cores: list["Core"]) -> None:
        """Install bank front-ends and cores; cores start at their start delay."""
        self.banks = banks
        self.cores = cores
        self._cores_left = len(cores)
        self._foreground_left = sum(1 for core in cores if not core.background)

    def bank_index(self, address: int) -> int:
        return address % self.config.n_banks

    def bank_for(self, address: int) -> "MemoryAdapter":
        return self.banks[address % self.config.n_banks]

    def read(self, address: int) -> int:
        return self.bank_for(address).read(address)

    def memory_snapshot(self) -> dict[int, int]:
        snapshot: dict[int, int] = {}
        for bank in self.banks:
            snapshot.update(bank.memory)
        return dict(sorted(snapshot.items()))

    @property
    def foreground_done(self) -> bool:
        return self._foreground_left <= 0

    # -- scheduling -------------------------------------------------------

    def schedule(
        self,
        deliver_at: int,
        destination: Endpoint,
        message: Optional[MemoryMessage] = None,
        *,
        source: Optional[Endpoint] = None,
        kind: EventKind = EventKind.DELIVER,
    ) -> SimEvent:
        """Enqueue an event; same-cycle events run in send-sequence order."""
        if deliver_at < self.now:
            raise ScheduleError(f"cannot schedule at cycle {deliver_at}, now is {self.now}")
        seq = next(self._seq)
        if kind is EventKind.DELIVER:
            if source is None or message is None:
                raise ScheduleError("a delivery needs a source and a message")
            self.channel(source, destination).enqueue(deliver_at, seq)
        event = SimEvent(
            deliver_at,
            seq,
            kind,
            source,
            destination,
            message,
            self.now,
        )
        heapq.heappush(self._heap, event)
        return event

    def send(self, source: Endpoint, destination: Endpoint, message: MemoryMessage) -> None:
        """Queue a message; it leaves once the current handler returns."""
        self._outbox.append((source, destination, message))

    def wake_at(self, core_id: int, cycle: int) -> None:
        self.schedule(cycle, Endpoint.core(core_id), kind=EventKind.WAKE)

    def channel(self, source: Endpoint, destination: Endpoint) -> Channel:
        key = (source, destination)
        channel = self._channels.get(key)
        if channel is None:
            channel = Channel(source, destination, self.config.channel_latency)
            self._channels[key] = channel
        return channel

    def flush(self) -> None:
        """Put queued messages on their channels in send order."""
        while self._outbox:
            source, destination, message = self._outbox[0]
            if self.delay_chooser is not None:
                latency = self.delay_chooser(self, source, destination, message)
            else:
                latency = self.config.channel_latency
            self._outbox.popleft()
            deliver_at = self.channel(source, destination).earliest(self.now, latency)
            self.schedule(deliver_at, destination, message, source=source)

    def note(self, source: Endpoint, kind: str, fields: Iterable[tuple[str, Any]]) -> None:
        """Trace a non-message protocol event (QNode phase, slot snapshot, completion)."""
        if self.tracer is not None:
            self.tracer.record(self.now, str(source), "-", kind, fields)

    # -- core bookkeeping -------------------------------------------------

    def core_finished(self, core: "Core") -> None:
        self._cores_left -= 1
        if core.background:
            return
        if self.first_finish_cycle is None:
            self.first_finish_cycle = self.now
            self.ops_at_first_finish = [c.state.ops_completed for c in self.cores]
        self._foreground_left -= 1

    # -- main loop --------------------------------------------------------

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        for core in self.cores:
            self.schedule(core.start_delay, core.endpoint, kind=EventKind.START)

    def step(self) -> SimEvent:
        """Process the next event and everything it sends."""
        event = heapq.heappop(self._heap)
        self.now = event.deliver_at
        self._dispatch(event)
        self.flush()
        return event

    def _dispatch(self, event: SimEvent) -> None:
        kind = event.kind
        if kind is EventKind.DELIVER:
            self._deliver(event)
        elif kind is EventKind.SERVICE:
            bank = self.banks[event.destination.index]
            bank.serve_next()
            bank.next_free = self.now + 1
            self.bank_accesses += 1
            if bank.pending:
                self.schedule(self.now + 1, bank.endpoint, kind=EventKind.SERVICE)
            else:
                bank.service_scheduled = False
        elif kind is EventKind.WAKE:
            self.cores[event.destination.index].wake()
        elif kind is EventKind.START:
            self.cores[event.destination.index].start()

    def _deliver(self, event: SimEvent) -> None:
        source, destination, message = event.source, event.destination, event.message
        self._channels[(source, destination)].deliver(event.seq)
        self.messages_delivered += 1
        if self.tracer is not None:
            self.tracer.record(
                self.now,
                str(source),
                str(destination),
                message.kind.value,
                [("seq", event.seq), ("sent", event.sent_at), *message.payload()],
            )
        if destination.kind == "bank":
            bank = self.banks[destination.index]
            bank.pending.append((source, message))
            if not bank.service_scheduled:
                bank.service_scheduled = True
                self.schedule(max(self.now, bank.next_free), bank.endpoint, kind=EventKind.SERVICE)
        else:
            self.cores[destination.index].deliver(message)

    def pending_events(self) -> int:
        return len(self._heap) + len(self._outbox)

    def run_until_quiescent(self, max_cycles: Optional[int] = None) -> RunResult:
        """Run until no events remain or the cycle budget is spent."""
        budget = self.config.max_cycles if max_cycles is None else max_cycles
        self.start()
        outcome: Optional[RunOutcome] = None
        while self._heap:
            if self._heap[0].deliver_at > budget:
                outcome = RunOutcome.BUDGET_EXHAUSTED
                break
            self.step()
        if outcome is None:
            outcome = RunOutcome.COMPLETED if self._cores_left == 0 else RunOutcome.DEADLOCK
        logger.info("run %s after %d cycles", outcome.value, self.now)
        return self.result(outcome)

    def result(self, outcome: RunOutcome) -> RunResult:
        finishes = [
            core.state.finish_cycle
            for core in self.cores
            if not core.background and core.state.finish_cycle is not None
        ]
        memory = self.memory_snapshot()
        trace = None
        if self.tracer is not None:
            for address, value in memory.items():
                fields = [("address", address), ("value", value)]
                self.tracer.record(self.now, "-", "-", "Memory", fields)
            trace = Trace(records=list(self.tracer.records), outcome=outcome.value, cycles=self.now)
        return RunResult(
            outcome=outcome,
            cycles=self.now,
            finish_cycle=max(finishes) if finishes else self.now,
            first_finish_cycle=self.first_finish_cycle,
            ops_at_first_finish=list(self.ops_at_first_finish),
            cores=[core.state for core in self.cores],
            messages=self.messages_delivered,
            bank_accesses=self.bank_accesses,
            memory=memory,
            trace=trace,
        )

    # -- exploration support ----------------------------------------------

    def fingerprint(self) -> tuple:
        """Hashable state with times relative to now; used to memoize exploration."""
        now = self.now
        events = tuple(
            (
                e.deliver_at - now,
                e.kind.value,
                e.source,
                e.destination,
                e.message.key() if e.message is not None else None,
            )
            for e in sorted(self._heap)
        )
        outbox = tuple((s, d, m.key()) for s, d, m in self._outbox)
        channels = tuple(
            sorted(
                (key, c.last_deliver_at - now)
                for key, c in self._channels.items()
                if c.last_deliver_at > now
            )
        )
        return (
            events,
            outbox,
            channels,
            tuple(bank.fingerprint(now) for bank in self.banks),
            tuple(core.fingerprint(now) for core in self.cores),
            self.monitor.fingerprint(),
        )
