"""Distributed reservation queue: bank head/tail slots and per-core queue nodes.

A bank keeps only the head and tail of each queue. The links between waiting
cores live in the cores' queue nodes, which the controller updates with
SuccessorUpdate messages. A node hands the queue on by sending a
WakeUpRequest for its successor, right behind its SCwait on the same channel
or when its Mwait is answered.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Optional

from .adapters import MemoryAdapter
from .config import AdapterKind, Mutation
from .messages import SC_FAILURE, SC_SUCCESS, Endpoint, MemoryMessage, MsgKind, WaiterKind
from .monitor import Property, ProtocolViolation
from .sim import SimulationError

if TYPE_CHECKING:
    from .sim import Simulator

logger = logging.getLogger(__name__)


@dataclass
class ColibriSlot:
    """Head and tail registers for one queued address."""

    address: int = 0
    occupied: bool = False
    head: Optional[int] = None
    head_valid: bool = False
    tail: Optional[int] = None
    reservation_valid: bool = False
    head_waiter: WaiterKind = WaiterKind.LR_WAITER
    head_expected: int = 0
    armed: bool = False
    writes: int = 0

    def clear(self) -> None:
        self.address = 0
        self.occupied = False
        self.head = None
        self.head_valid = False
        self.tail = None
        self.reservation_valid = False
        self.head_waiter = WaiterKind.LR_WAITER
        self.head_expected = 0
        self.armed = False
        self.writes = 0

    def snapshot(self) -> list[tuple[str, object]]:
        return [
            ("address", self.address),
            ("occupied", self.occupied),
            ("head", self.head),
            ("head_valid", self.head_valid),
            ("tail", self.tail),
            ("reservation_valid", self.reservation_valid),
        ]

    def key(self) -> tuple:
        return (
            self.address,
            self.occupied,
            self.head,
            self.head_valid,
            self.tail,
            self.reservation_valid,
            self.head_waiter.value,
            self.head_expected,
            self.armed,
            self.writes,
        )


class ColibriAdapter(MemoryAdapter):
    """Bank controller holding ``addresses_per_bank`` queue slots."""

    kind = AdapterKind.COLIBRI

    def __init__(self, sim: "Simulator", index: int, addresses_per_bank: int = 1):
        super().__init__(sim, index)
        self.slots = [ColibriSlot() for _ in range(addresses_per_bank)]

    def slot_for(self, address: int) -> Optional[ColibriSlot]:
        for slot in self.slots:
            if slot.occupied and slot.address == address:
                return slot
        return None

    def _free_slot(self) -> Optional[ColibriSlot]:
        for slot in self.slots:
            if not slot.occupied:
                return slot
        return None

    def _note_slot(self, slot: ColibriSlot) -> None:
        self.sim.note(self.endpoint, "Slot", slot.snapshot())

    def _release(self, slot: ColibriSlot) -> None:
        address = slot.address
        slot.clear()
        self.sim.note(self.endpoint, "Slot", [("address", address), ("occupied", False)])

    # -- writes -----------------------------------------------------------

    def _after_write(self, address: int, invalidate: bool) -> None:
        slot = self.slot_for(address)
        if slot is None:
            return
        slot.writes += 1
        if invalidate:
            slot.reservation_valid = False
        if slot.head_valid and slot.head_waiter is WaiterKind.M_WAITER and slot.armed:
            self._notify_mwaiter(slot)

    def _notify_mwaiter(self, slot: ColibriSlot) -> MemoryMessage:
        """Answer the MWaiter at the head and hand the queue on."""
        core = slot.head
        self.sim.monitor.on_grant(slot.address, core, WaiterKind.M_WAITER)
        response = self.respond(
            MemoryMessage(MsgKind.MWAIT_RESP, slot.address, self.read(slot.address), core)
        )
        if slot.head == slot.tail:
            self._release(slot)
        else:
            slot.head_valid = False
            slot.armed = False
            self._note_slot(slot)
        return response

    # -- enqueue ----------------------------------------------------------

    def _enqueue(
        self, core: int, address: int, waiter: WaiterKind, expected: int
    ) -> Optional[MemoryMessage]:
        slot = self.slot_for(address)
        if slot is None:
            slot = self._free_slot()
            if slot is None:
                return self.respond(MemoryMessage(MsgKind.FAIL_RESP, address, SC_FAILURE, core))
            slot.occupied = True
            slot.address = address
            slot.head = slot.tail = core
            self.sim.monitor.on_arrival(address, core, waiter)
            return self._promote(slot, core, waiter, expected, slot.writes)
        predecessor = slot.tail
        slot.tail = core
        self.sim.monitor.on_arrival(address, core, waiter)
        update = MemoryMessage(
            MsgKind.SUCCESSOR_UPDATE,
            address,
            core=predecessor,
            successor=core,
            waiter=waiter,
            expected=expected,
            epoch=slot.writes,
        )
        self.sim.send(self.endpoint, Endpoint.core(predecessor), update)
        self._note_slot(slot)
        return None

    def _promote(
        self, slot: ColibriSlot, core: int, waiter: WaiterKind, expected: int, epoch: int
    ) -> Optional[MemoryMessage]:
        """Make ``core`` the head and serve it if it can be served."""
        slot.head = core
        slot.head_valid = True
        slot.head_waiter = waiter
        slot.head_expected = expected
        slot.armed = False
        if waiter is WaiterKind.LR_WAITER:
            slot.reservation_valid = True
            self.sim.monitor.on_grant(slot.address, core, waiter)
            response = MemoryMessage(
                MsgKind.LRWAIT_RESP, slot.address, self.read(slot.address), core
            )
            self.respond(response)
            if Mutation.DOUBLE_RESPONSE in self.sim.mutations:
                self.sim.monitor.on_grant(slot.address, core, waiter)
                self.respond(response)
            self._note_slot(slot)
            return response
        slot.reservation_valid = False
        if self.read(slot.address) != expected or slot.writes > epoch:
            return self._notify_mwaiter(slot)
        slot.armed = True
        self._note_slot(slot)
        return None

    def handle_lrwait(self, core: int, address: int) -> Optional[MemoryMessage]:
        return self._enqueue(core, address, WaiterKind.LR_WAITER, 0)

    def handle_mwait(self, core: int, address: int, expected: int) -> Optional[MemoryMessage]:
        return self._enqueue(core, address, WaiterKind.M_WAITER, expected)

    # -- dequeue ----------------------------------------------------------

    def handle_scwait(self, core: int, address: int, value: int) -> MemoryMessage:
        slot = self.slot_for(address)
        is_head = (
            slot is not None
            and slot.head == core
            and slot.head_valid
            and slot.head_waiter is WaiterKind.LR_WAITER
        )
        if not is_head:
            self.sim.monitor.on_non_head_scwait(address, core)
            return self.respond(MemoryMessage(MsgKind.SCWAIT_RESP, address, SC_FAILURE, core))
        success = slot.reservation_valid
        self.sim.monitor.on_commit(address, core, success, exclusive=True)
        if success:
            self.write(address, value, commit=True)
        response = self.respond(
            MemoryMessage(
                MsgKind.SCWAIT_RESP, address, SC_SUCCESS if success else SC_FAILURE, core
            )
        )
        if slot.head == slot.tail:
            self._release(slot)
        elif Mutation.SKIP_HEAD_INVALIDATION not in self.sim.mutations:
            slot.head_valid = False
            slot.reservation_valid = False
            self._note_slot(slot)
        return response

    def handle_wakeup(self, message: MemoryMessage) -> Optional[MemoryMessage]:
        """Promote the successor named by a queue node to head."""
        slot = self.slot_for(message.address)
        if slot is None or message.successor is None:
            raise ProtocolViolation(
                Property.NO_LOST_WAKEUP,
                f"WakeUpRequest from core {message.core} for address {message.address} "
                "matches no queue",
            )
        successor = message.successor
        waiter, expected, epoch = message.waiter, message.expected, message.epoch
        if Mutation.WAKE_WRONG_SUCCESSOR in self.sim.mutations and slot.tail is not None:
            successor = slot.tail
        return self._promote(slot, successor, waiter, expected, epoch)

    def state_key(self) -> tuple:
        return tuple(slot.key() for slot in self.slots)


class QNodePhase(str, Enum):
    IDLE = "Idle"
    AWAITING_RESPONSE = "AwaitingResponse"
    HOLDING_RESERVATION = "HoldingReservation"
    PAST_SCWAIT = "PastScWait"

    def __str__(self) -> str:
        return self.value


@dataclass
class QNodeState:
    """A core's queue node: successor link and episode phase."""

    owner: int
    successor: Optional[int] = None
    successor_waiter: WaiterKind = WaiterKind.LR_WAITER
    successor_expected: int = 0
    successor_epoch: int = 0
    phase: QNodePhase = QNodePhase.IDLE
    address: int = 0

    def key(self) -> tuple:
        return (
            self.successor,
            self.successor_waiter.value,
            self.successor_expected,
            self.successor_epoch,
            self.phase.value,
            self.address,
        )


class QNode:
    """Sits between a core and the interconnect and owns the queue link."""

    def __init__(self, sim: "Simulator", owner: int):
        self.sim = sim
        self.state = QNodeState(owner)
        self.endpoint = Endpoint.core(owner)

    @property
    def phase(self) -> QNodePhase:
        return self.state.phase

    def _set_phase(self, phase: QNodePhase) -> None:
        if phase is not self.state.phase:
            self.state.phase = phase
            self.sim.note(
                self.endpoint,
                "QNode",
                [("phase", phase.value), ("successor", self.state.successor)],
            )

    def _end_episode(self) -> None:
        self.state.successor = None
        self.state.successor_waiter = WaiterKind.LR_WAITER
        self.state.successor_expected = 0
        self.state.successor_epoch = 0
        self._set_phase(QNodePhase.IDLE)

    def _wake_successor(self) -> None:
        node = self.state
        wakeup = MemoryMessage(
            MsgKind.WAKEUP_REQUEST,
            node.address,
            core=node.owner,
            successor=node.successor,
            waiter=node.successor_waiter,
            expected=node.successor_expected,
            epoch=node.successor_epoch,
        )
        self.sim.send(self.endpoint, self.sim.bank_for(node.address).endpoint, wakeup)
        self._end_episode()

    def on_send(self, message: MemoryMessage) -> None:
        """Track an outgoing request; a WakeUpRequest may follow it on the same channel."""
        kind = message.kind
        if kind in (MsgKind.LRWAIT_REQ, MsgKind.MWAIT_REQ):
            if self.phase is not QNodePhase.IDLE:
                raise SimulationError(
                    f"core {self.state.owner} issued {kind.value} with queue node {self.phase}"
                )
            self.state.address = message.address
            self.state.successor = None
            self._set_phase(QNodePhase.AWAITING_RESPONSE)
        elif (
            kind is MsgKind.SCWAIT_REQ
            and self.phase is QNodePhase.HOLDING_RESERVATION
            and message.address == self.state.address
        ):
            self._set_phase(QNodePhase.PAST_SCWAIT)
            if self.state.successor is not None:
                self._wake_successor()

    def on_receive(self, message: MemoryMessage) -> bool:
        """Handle an incoming message; returns True if the node consumed it."""
        kind = message.kind
        node = self.state
        if kind is MsgKind.SUCCESSOR_UPDATE:
            if Mutation.DROP_SUCCESSOR_UPDATE in self.sim.mutations:
                return True
            if self.phase is QNodePhase.IDLE:
                raise ProtocolViolation(
                    Property.NO_LOST_WAKEUP,
                    f"SuccessorUpdate for core {message.successor} reached idle node of "
                    f"core {node.owner}",
                )
            if node.successor is not None:
                raise ProtocolViolation(
                    Property.NO_LOST_WAKEUP,
                    f"second SuccessorUpdate for the queue node of core {node.owner}",
                )
            node.successor = message.successor
            node.successor_waiter = message.waiter
            node.successor_expected = message.expected
            node.successor_epoch = message.epoch
            if self.phase is QNodePhase.PAST_SCWAIT:
                self._wake_successor()
            return True
        if kind is MsgKind.LRWAIT_RESP and self.phase is QNodePhase.AWAITING_RESPONSE:
            self._set_phase(QNodePhase.HOLDING_RESERVATION)
        elif kind is MsgKind.MWAIT_RESP and self.phase is QNodePhase.AWAITING_RESPONSE:
            if node.successor is not None:
                self._wake_successor()
            else:
                self._end_episode()
        elif kind is MsgKind.SCWAIT_RESP and self.phase is QNodePhase.PAST_SCWAIT:
            self._end_episode()
        elif kind is MsgKind.FAIL_RESP and self.phase is QNodePhase.AWAITING_RESPONSE:
            self._end_episode()
        return False

    def fingerprint(self) -> tuple:
        return self.state.key()
