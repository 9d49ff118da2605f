"""Memory-bank front-ends: plain memory, LR/SC, and LRwait reservation queues."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Optional

from .config import AdapterKind, Mutation
from .messages import SC_FAILURE, SC_SUCCESS, Endpoint, MemoryMessage, MsgKind, WaiterKind
from .sim import SimulationError

if TYPE_CHECKING:
    from .sim import Simulator

logger = logging.getLogger(__name__)


class MemoryAdapter:
    """Plain memory controller: loads, stores and atomic add.

    Subclasses add reservation handling. Every ``handle_*`` method sends its
    response through the simulator and also returns it, or ``None`` when the
    response is withheld.
    """

    kind = AdapterKind.AMO_ONLY

    def __init__(self, sim: "Simulator", index: int):
        self.sim = sim
        self.index = index
        self.endpoint = Endpoint.bank(index)
        self.memory: dict[int, int] = {}
        self.pending: deque[tuple[Endpoint, MemoryMessage]] = deque()
        self.next_free = 0
        self.service_scheduled = False

    # -- memory -----------------------------------------------------------

    def read(self, address: int) -> int:
        return self.memory.get(address, 0)

    def poke(self, address: int, value: int) -> None:
        """Initialize a word without counting as a write."""
        self.memory[address] = value

    def write(self, address: int, value: int, *, commit: bool = False) -> None:
        """Apply a write; ``commit`` marks an SC/SCwait writing under its own reservation."""
        self.memory[address] = value
        self.sim.monitor.on_write(address)
        invalidate = not commit and Mutation.FORGET_STORE_INVALIDATION not in self.sim.mutations
        self._after_write(address, invalidate)

    def _after_write(self, address: int, invalidate: bool) -> None:
        if invalidate:
            self._invalidate(address)

    def _invalidate(self, address: int) -> None:
        pass

    def respond(self, message: MemoryMessage) -> MemoryMessage:
        self.sim.send(self.endpoint, Endpoint.core(message.core), message)
        return message

    # -- service ----------------------------------------------------------

    def serve_next(self) -> Optional[MemoryMessage]:
        """Serve the oldest queued request; one call is one bank cycle."""
        source, message = self.pending.popleft()
        kind = message.kind
        core, address = message.core, message.address
        if kind is MsgKind.LOAD:
            return self.handle_load(core, address)
        if kind is MsgKind.STORE:
            return self.handle_store(core, address, message.value)
        if kind is MsgKind.AMO_ADD:
            return self.handle_amo_add(core, address, message.value)
        if kind is MsgKind.LR_REQ:
            return self.handle_lr(core, address)
        if kind is MsgKind.SC_REQ:
            return self.handle_sc(core, address, message.value)
        if kind is MsgKind.LRWAIT_REQ:
            return self.handle_lrwait(core, address)
        if kind is MsgKind.SCWAIT_REQ:
            return self.handle_scwait(core, address, message.value)
        if kind is MsgKind.MWAIT_REQ:
            return self.handle_mwait(core, address, message.expected)
        if kind is MsgKind.WAKEUP_REQUEST:
            return self.handle_wakeup(message)
        raise SimulationError(f"{self.endpoint} cannot serve {kind.value} from {source}")

    def _unsupported(self, kind: MsgKind) -> Exception:
        return SimulationError(f"adapter {self.kind.value} does not implement {kind.value}")

    def handle_load(self, core: int, address: int) -> MemoryMessage:
        return self.respond(
            MemoryMessage(MsgKind.LOAD_RESP, address, self.read(address), core)
        )

    def handle_store(self, core: int, address: int, value: int) -> MemoryMessage:
        self.write(address, value)
        return self.respond(MemoryMessage(MsgKind.STORE_ACK, address, value, core))

    def handle_amo_add(self, core: int, address: int, value: int) -> MemoryMessage:
        # A zero add is still a write and clears reservations.
        old = self.read(address)
        self.write(address, old + value)
        return self.respond(MemoryMessage(MsgKind.AMO_RESP, address, old, core))

    def handle_lr(self, core: int, address: int) -> MemoryMessage:
        raise self._unsupported(MsgKind.LR_REQ)

    def handle_sc(self, core: int, address: int, value: int) -> MemoryMessage:
        raise self._unsupported(MsgKind.SC_REQ)

    def handle_lrwait(self, core: int, address: int) -> Optional[MemoryMessage]:
        raise self._unsupported(MsgKind.LRWAIT_REQ)

    def handle_scwait(self, core: int, address: int, value: int) -> MemoryMessage:
        raise self._unsupported(MsgKind.SCWAIT_REQ)

    def handle_mwait(self, core: int, address: int, expected: int) -> Optional[MemoryMessage]:
        raise self._unsupported(MsgKind.MWAIT_REQ)

    def handle_wakeup(self, message: MemoryMessage) -> Optional[MemoryMessage]:
        raise self._unsupported(MsgKind.WAKEUP_REQUEST)

    # -- exploration ------------------------------------------------------

    def state_key(self) -> tuple:
        return ()

    def fingerprint(self, now: int) -> tuple:
        return (
            tuple(sorted(self.memory.items())),
            tuple((src, msg.key()) for src, msg in self.pending),
            self.service_scheduled,
            max(self.next_free - now, 0),
            self.state_key(),
        )


class PlainLrscAdapter(MemoryAdapter):
    """Baseline LR/SC with a single reservation slot per bank."""

    kind = AdapterKind.PLAIN_LRSC

    def __init__(self, sim: "Simulator", index: int):
        super().__init__(sim, index)
        self.reserved_core: Optional[int] = None
        self.reserved_address = 0
        self.valid = False

    def _invalidate(self, address: int) -> None:
        if self.valid and self.reserved_address == address:
            self.valid = False

    def handle_lr(self, core: int, address: int) -> MemoryMessage:
        self.reserved_core = core
        self.reserved_address = address
        self.valid = True
        self.sim.monitor.on_lr(address, core)
        return self.respond(MemoryMessage(MsgKind.LOAD_RESP, address, self.read(address), core))

    def handle_sc(self, core: int, address: int, value: int) -> MemoryMessage:
        success = self.valid and self.reserved_core == core and self.reserved_address == address
        self.sim.monitor.on_commit(address, core, success, exclusive=False)
        if self.reserved_core == core:
            self.valid = False
        if success:
            self.write(address, value, commit=True)
        code = SC_SUCCESS if success else SC_FAILURE
        return self.respond(MemoryMessage(MsgKind.SCWAIT_RESP, address, code, core))

    def state_key(self) -> tuple:
        return (self.reserved_core, self.reserved_address, self.valid)


@dataclass
class Waiter:
    core: int
    waiter: WaiterKind = WaiterKind.LR_WAITER
    expected: int = 0

    def key(self) -> tuple:
        return (self.core, self.waiter.value, self.expected)


class ReservationQueueAdapter(MemoryAdapter):
    """LRwait/SCwait with a per-address FIFO of waiting cores.

    ``capacity`` of ``None`` is the ideal queue that can hold every core;
    otherwise a full queue answers an LRwait with FailResp.
    """

    kind = AdapterKind.LRSCWAIT_IDEAL

    def __init__(self, sim: "Simulator", index: int, capacity: Optional[int] = None):
        super().__init__(sim, index)
        self.capacity = capacity
        if capacity is not None:
            self.kind = AdapterKind.LRSCWAIT_BOUNDED
        self.queues: dict[int, deque[Waiter]] = {}
        self.head_granted: dict[int, bool] = {}
        self.reservation_valid: dict[int, bool] = {}

    def _invalidate(self, address: int) -> None:
        if self.reservation_valid.get(address):
            self.reservation_valid[address] = False

    def is_queued(self, core: int) -> bool:
        return any(w.core == core for queue in self.queues.values() for w in queue)

    def handle_lrwait(self, core: int, address: int) -> Optional[MemoryMessage]:
        if any(
            isinstance(bank, ReservationQueueAdapter) and bank.is_queued(core)
            for bank in self.sim.banks
        ):
            raise SimulationError(f"core {core} issued a second outstanding LRwait")
        queue = self.queues.setdefault(address, deque())
        if self.capacity is not None and len(queue) >= self.capacity:
            if not queue:
                del self.queues[address]
            return self.respond(MemoryMessage(MsgKind.FAIL_RESP, address, SC_FAILURE, core))
        queue.append(Waiter(core))
        self.sim.monitor.on_arrival(address, core, WaiterKind.LR_WAITER)
        if len(queue) == 1:
            return self._grant(address)
        return None

    def _grant(self, address: int) -> MemoryMessage:
        head = self.queues[address][0]
        self.head_granted[address] = True
        self.reservation_valid[address] = True
        self.sim.monitor.on_grant(address, head.core, WaiterKind.LR_WAITER)
        response = MemoryMessage(MsgKind.LRWAIT_RESP, address, self.read(address), head.core)
        self.respond(response)
        if Mutation.DOUBLE_RESPONSE in self.sim.mutations:
            self.sim.monitor.on_grant(address, head.core, WaiterKind.LR_WAITER)
            self.respond(response)
        return response

    def handle_scwait(self, core: int, address: int, value: int) -> MemoryMessage:
        queue = self.queues.get(address)
        if not queue or queue[0].core != core or not self.head_granted.get(address):
            self.sim.monitor.on_non_head_scwait(address, core)
            return self.respond(MemoryMessage(MsgKind.SCWAIT_RESP, address, SC_FAILURE, core))
        success = bool(self.reservation_valid.get(address))
        self.sim.monitor.on_commit(address, core, success, exclusive=True)
        queue.popleft()
        self.head_granted[address] = False
        self.reservation_valid[address] = False
        if success:
            self.write(address, value, commit=True)
        code = SC_SUCCESS if success else SC_FAILURE
        response = self.respond(MemoryMessage(MsgKind.SCWAIT_RESP, address, code, core))
        if queue:
            self._grant(address)
        else:
            del self.queues[address]
            self.head_granted.pop(address, None)
            self.reservation_valid.pop(address, None)
        return response

    def state_key(self) -> tuple:
        return tuple(
            (
                address,
                tuple(w.key() for w in queue),
                bool(self.head_granted.get(address)),
                bool(self.reservation_valid.get(address)),
            )
            for address, queue in sorted(self.queues.items())
        )


@dataclass(frozen=True)
class StorageCost:
    """Reservation storage of one scheme across the whole machine."""

    scheme: str
    identifier_bits: int
    valid_bits: int
    address_bits: int

    @property
    def total_bits(self) -> int:
        return self.identifier_bits + self.valid_bits + self.address_bits


class CostScheme(str, Enum):
    IDEAL = "ideal"
    BOUNDED = "bounded"
    COLIBRI = "colibri"

    def __str__(self) -> str:
        return self.value


def id_bits(n_cores: int) -> int:
    """Bits to name one of ``n_cores`` cores; zero for a single core."""
    return (n_cores - 1).bit_length()


def cost_model(
    scheme: CostScheme,
    n_cores: int,
    n_banks: int,
    q: int = 1,
    addresses_per_bank: int = 1,
    address_width: int = 32,
) -> StorageCost:
    """Storage needed to track reservations.

    Identifier bits follow the queue formulas. Each queue entry and each
    QNode also needs a valid bit; each bank needs one reservation-valid bit per
    queue and one address register of ``address_width`` bits per queue.
    """
    if min(n_cores, n_banks, q, addresses_per_bank, address_width) < 1:
        raise ValueError("cost model parameters must be positive")
    bits = id_bits(n_cores)
    if scheme is CostScheme.IDEAL:
        return StorageCost(
            scheme.value,
            identifier_bits=n_cores * bits * n_banks,
            valid_bits=(n_cores + 1) * n_banks,
            address_bits=address_width * n_banks,
        )
    if scheme is CostScheme.BOUNDED:
        return StorageCost(
            scheme.value,
            identifier_bits=q * bits * n_banks,
            valid_bits=(q + 1) * n_banks,
            address_bits=address_width * n_banks,
        )
    # head and tail per address; occupied, head-valid and reservation-valid flags
    return StorageCost(
        scheme.value,
        identifier_bits=n_cores * bits + 2 * addresses_per_bank * bits * n_banks,
        valid_bits=n_cores + 3 * addresses_per_bank * n_banks,
        address_bits=address_width * addresses_per_bank * n_banks,
    )

