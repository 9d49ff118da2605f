"""Online protocol property checks driven by memory-controller hooks."""

from __future__ import annotations

from collections import deque
from enum import Enum
from typing import Optional

from .messages import WaiterKind


class Property(str, Enum):
    """Properties the verifier evaluates."""

    MUTUAL_EXCLUSION = "MutualExclusion"
    ATOMICITY_ORACLE = "AtomicityOracle"
    FIFO_SERVICE = "FifoService"
    NO_LOST_WAKEUP = "NoLostWakeup"
    DEADLOCK_FREE = "DeadlockFree"
    STARVATION_FREE = "StarvationFree"
    COLIBRI_EQUALS_IDEAL = "ColibriEqualsIdeal"

    def __str__(self) -> str:
        return self.value


class ProtocolViolation(Exception):
    """A run broke a protocol property."""

    def __init__(self, prop: Property, message: str):
        self.prop = prop
        self.message = message
        super().__init__(f"{prop.value}: {message}")


class NullMonitor:
    """Monitor that checks nothing; used for benchmark runs."""

    enabled = False

    def on_arrival(self, address: int, core: int, waiter: WaiterKind) -> None:
        pass

    def on_grant(self, address: int, core: int, waiter: WaiterKind) -> None:
        pass

    def on_lr(self, address: int, core: int) -> None:
        pass

    def on_write(self, address: int) -> None:
        pass

    def on_commit(self, address: int, core: int, success: bool, exclusive: bool) -> None:
        pass

    def on_non_head_scwait(self, address: int, core: int) -> None:
        pass

    def on_cs_enter(self, lock: int, core: int, cycle: int) -> None:
        pass

    def on_cs_exit(self, lock: int, core: int, cycle: int) -> None:
        pass

    def pending_waiters(self) -> dict[int, list[int]]:
        return {}

    def fingerprint(self) -> tuple:
        return ()


class ProtocolMonitor(NullMonitor):
    """Tracks reservations per address and raises on the first violation.

    Arrivals are the LRwait/Mwait requests a controller accepted into its
    queue; grants are the LrWaitResp/MwaitResp it emitted. Only LR waiters
    hold the address exclusively between grant and SCwait.
    """

    enabled = True

    def __init__(self):
        self._arrivals: dict[int, deque[tuple[int, WaiterKind]]] = {}
        self._holder: dict[int, int] = {}
        self._writes: dict[int, int] = {}
        self._granted_at: dict[tuple[int, int], int] = {}
        self._cs_owner: dict[int, int] = {}
        self.notes: list[str] = []

    def on_arrival(self, address: int, core: int, waiter: WaiterKind) -> None:
        queue = self._arrivals.setdefault(address, deque())
        if any(c == core for c, _ in queue):
            raise ProtocolViolation(
                Property.DEADLOCK_FREE,
                f"core {core} has two outstanding waits on address {address}",
            )
        queue.append((core, waiter))

    def on_grant(self, address: int, core: int, waiter: WaiterKind) -> None:
        queue = self._arrivals.get(address)
        if not queue or all(c != core for c, _ in queue):
            raise ProtocolViolation(
                Property.NO_LOST_WAKEUP,
                f"response to core {core} on address {address} without an outstanding request",
            )
        expected_core, _ = queue[0]
        if expected_core != core:
            raise ProtocolViolation(
                Property.FIFO_SERVICE,
                f"address {address} served core {core} before core {expected_core}",
            )
        queue.popleft()
        if not queue:
            del self._arrivals[address]
        if waiter is WaiterKind.LR_WAITER:
            holder = self._holder.get(address)
            if holder is not None:
                raise ProtocolViolation(
                    Property.MUTUAL_EXCLUSION,
                    f"address {address} granted to core {core} while core {holder} holds it",
                )
            self._holder[address] = core
            self._granted_at[(core, address)] = self._writes.get(address, 0)

    def on_lr(self, address: int, core: int) -> None:
        self._granted_at[(core, address)] = self._writes.get(address, 0)

    def on_write(self, address: int) -> None:
        self._writes[address] = self._writes.get(address, 0) + 1

    def on_commit(self, address: int, core: int, success: bool, exclusive: bool) -> None:
        """Called before the commit's own write is applied."""
        granted = self._granted_at.pop((core, address), None)
        if exclusive:
            holder = self._holder.get(address)
            if success and holder != core:
                raise ProtocolViolation(
                    Property.MUTUAL_EXCLUSION,
                    f"SCwait of core {core} on address {address} succeeded without the reservation",
                )
            if holder == core:
                del self._holder[address]
        if success and (granted is None or granted != self._writes.get(address, 0)):
            raise ProtocolViolation(
                Property.ATOMICITY_ORACLE,
                f"core {core} committed to address {address} after an intervening write",
            )

    def on_non_head_scwait(self, address: int, core: int) -> None:
        self.notes.append(f"core {core} issued SCwait on address {address} without being head")

    def on_cs_enter(self, lock: int, core: int, cycle: int) -> None:
        owner = self._cs_owner.get(lock)
        if owner is not None:
            raise ProtocolViolation(
                Property.MUTUAL_EXCLUSION,
                f"core {core} entered lock {lock} at cycle {cycle} while core {owner} is inside",
            )
        self._cs_owner[lock] = core

    def on_cs_exit(self, lock: int, core: int, cycle: int) -> None:
        if self._cs_owner.get(lock) == core:
            del self._cs_owner[lock]

    def pending_waiters(self) -> dict[int, list[int]]:
        return {address: [c for c, _ in queue] for address, queue in self._arrivals.items()}

    def holder(self, address: int) -> Optional[int]:
        return self._holder.get(address)

    def fingerprint(self) -> tuple:
        return (
            tuple(
                sorted((a, tuple((c, w.value) for c, w in q)) for a, q in self._arrivals.items())
            ),
            tuple(sorted(self._holder.items())),
            tuple(sorted(self._writes.items())),
            tuple(sorted(self._granted_at.items())),
            tuple(sorted(self._cs_owner.items())),
        )
