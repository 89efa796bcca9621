"""Ready-state algebra, event vocabulary and the scheduler contract."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Protocol

from ..isa import ALL_READY, R0, R1, RF, RT, Slot

PRED_BITS = RT | RF
OPERAND_BITS = R0 | R1
ONE_HOT = (RT, RF, R0, R1)


def fmt_rdys(rdys: int) -> str:
    return f"'b{rdys:04b}"


class Stage(Enum):
    IS = "IS"       # IS-stage forward of a single-cycle result
    EX = "EX"
    LS = "LS"
    DRAIN = "DRAIN"  # broadcast drain injection (incremental only)


@dataclass(frozen=True)
class Event:
    """A targeted (``iid`` set) or broadcast (``channel`` set) ready event."""
    rdys: int
    iid: Optional[int] = None
    channel: int = 0
    origin: Stage = Stage.IS

    def __post_init__(self):
        if self.rdys not in ONE_HOT:
            raise ValueError(f"event must deliver exactly one ready bit, got {fmt_rdys(self.rdys)}")
        if (self.iid is None) == (self.channel == 0):
            raise ValueError("event needs exactly one of iid / channel")

    @property
    def is_broadcast(self) -> bool:
        return self.channel != 0

    @property
    def is_predicate(self) -> bool:
        return bool(self.rdys & PRED_BITS)

    def to_json(self) -> dict:
        d = {"rdys": f"{self.rdys:04b}", "origin": self.origin.value}
        if self.is_broadcast:
            d["channel"] = self.channel
        else:
            d["iid"] = self.iid
        return d

    @classmethod
    def targeted(cls, iid: int, rdys: int, origin: Stage = Stage.IS) -> Event:
        return cls(rdys, iid=iid, origin=origin)

    @classmethod
    def broadcast(cls, channel: int, rdys: int, origin: Stage = Stage.IS) -> Event:
        return cls(rdys, channel=channel, origin=origin)


def slot_rdys(slot: Slot, value=None) -> int:
    """Ready bit that delivering to ``slot`` sets; predicates need the value."""
    if slot is Slot.OP0:
        return R0
    if slot is Slot.OP1:
        return R1
    return RT if value else RF


def merge_ready(dv: bool, drdys: int, av: bool, ardys: int, evt_rdys: int) -> tuple[int, bool]:
    """One bank read-modify-write: returns ``(ardys_nxt, ready)``."""
    nxt = (drdys if dv else 0) | (ardys if av else 0) | evt_rdys
    return nxt, nxt == ALL_READY


class Scheduler(Protocol):
    """What the core needs from a dataflow scheduler.

    Per cycle the core calls, in order: ``select()`` (issue, at most once),
    ``decode()`` (up to two instructions), then ``step(events)`` which is the
    clock edge.  ``peek()`` answers what ``select()`` would return without
    side effects.
    """

    kind: str

    def reset(self) -> None: ...

    def refresh(self) -> None: ...

    def decode(self, iid: int, drdys: int, dbid: int, listen_slot: Slot | None = None,
               mem: bool = False) -> None: ...

    def select(self) -> Optional[int]: ...

    def peek(self) -> Optional[int]: ...

    def step(self, events=()) -> list[Event]: ...

    def busy(self) -> bool: ...
