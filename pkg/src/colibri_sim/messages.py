"""Memory messages exchanged between cores and memory controllers."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

SC_SUCCESS = 0
SC_FAILURE = 1


class MsgKind(str, Enum):
    """Every request and response kind that travels over a channel."""

    LOAD = "Load"
    STORE = "Store"
    AMO_ADD = "AmoAdd"
    LR_REQ = "LrReq"
    SC_REQ = "ScReq"
    LRWAIT_REQ = "LrWaitReq"
    SCWAIT_REQ = "ScWaitReq"
    MWAIT_REQ = "MwaitReq"
    LRWAIT_RESP = "LrWaitResp"
    SCWAIT_RESP = "ScWaitResp"
    MWAIT_RESP = "MwaitResp"
    LOAD_RESP = "LoadResp"
    STORE_ACK = "StoreAck"
    AMO_RESP = "AmoResp"
    SUCCESSOR_UPDATE = "SuccessorUpdate"
    WAKEUP_REQUEST = "WakeUpRequest"
    FAIL_RESP = "FailResp"

    def __str__(self) -> str:
        return self.value


# Kinds a core sends to a memory controller and expects an answer for.
REQUEST_KINDS = frozenset(
    {
        MsgKind.LOAD,
        MsgKind.STORE,
        MsgKind.AMO_ADD,
        MsgKind.LR_REQ,
        MsgKind.SC_REQ,
        MsgKind.LRWAIT_REQ,
        MsgKind.SCWAIT_REQ,
        MsgKind.MWAIT_REQ,
    }
)

RESPONSE_KINDS = frozenset(
    {
        MsgKind.LRWAIT_RESP,
        MsgKind.SCWAIT_RESP,
        MsgKind.MWAIT_RESP,
        MsgKind.LOAD_RESP,
        MsgKind.STORE_ACK,
        MsgKind.AMO_RESP,
        MsgKind.FAIL_RESP,
    }
)

# Requests whose response the controller withholds until the core is served.
DEFERRED_KINDS = frozenset({MsgKind.LRWAIT_REQ, MsgKind.MWAIT_REQ})

WRITE_KINDS = frozenset({MsgKind.STORE, MsgKind.AMO_ADD})


class WaiterKind(str, Enum):
    """What a queued core is waiting for."""

    LR_WAITER = "lr"
    M_WAITER = "m"

    def __str__(self) -> str:
        return self.value


class Endpoint(NamedTuple):
    """A core or a memory controller; one end of a channel."""

    kind: str
    index: int

    def __str__(self) -> str:
        return f"{self.kind}{self.index}"

    @classmethod
    def core(cls, index: int) -> "Endpoint":
        return cls("core", index)

    @classmethod
    def bank(cls, index: int) -> "Endpoint":
        return cls("bank", index)

    @classmethod
    def parse(cls, text: str) -> "Endpoint":
        for kind in ("core", "bank"):
            if text.startswith(kind) and text[len(kind):].isdigit():
                return cls(kind, int(text[len(kind):]))
        raise ValueError(f"not an endpoint: {text!r}")


@dataclass(frozen=True)
class MemoryMessage:
    """Tagged union of all request and response kinds.

    ``core`` is the requesting core for requests and the addressed core for
    responses. ``successor``, ``waiter`` and ``epoch`` are only meaningful for
    SuccessorUpdate and WakeUpRequest; ``expected`` for Mwait and for links
    that describe a queued MWaiter.
    """

    kind: MsgKind
    address: int = 0
    value: int = 0
    core: int = 0
    expected: int = 0
    successor: Optional[int] = None
    waiter: WaiterKind = WaiterKind.LR_WAITER
    epoch: int = 0

    def payload(self) -> list[tuple[str, object]]:
        """Payload fields in a stable order, only those the kind uses."""
        fields: list[tuple[str, object]] = [
            ("address", self.address),
            ("value", self.value),
            ("core", self.core),
        ]
        if self.kind in (MsgKind.MWAIT_REQ,):
            fields.append(("expected", self.expected))
        if self.kind in (MsgKind.SUCCESSOR_UPDATE, MsgKind.WAKEUP_REQUEST):
            fields.append(("successor", self.successor))
            fields.append(("waiter", self.waiter.value))
            if self.waiter is WaiterKind.M_WAITER:
                fields.append(("expected", self.expected))
            fields.append(("epoch", self.epoch))
        return fields

    def key(self) -> tuple:
        """Hashable identity used in state fingerprints."""
        return (
            self.kind.value,
            self.address,
            self.value,
            self.core,
            self.expected,
            self.successor,
            self.waiter.value,
            self.epoch,
        )

    @classmethod
    def from_payload(cls, kind: str, fields: dict[str, str]) -> "MemoryMessage":
        successor = fields.get("successor")
        return cls(
            kind=MsgKind(kind),
            address=int(fields.get("address", 0)),
            value=int(fields.get("value", 0)),
            core=int(fields.get("core", 0)),
            expected=int(fields.get("expected", 0)),
            successor=None if successor in (None, "-", "None") else int(successor),
            waiter=WaiterKind(fields.get("waiter", WaiterKind.LR_WAITER.value)),
            epoch=int(fields.get("epoch", 0)),
        )
