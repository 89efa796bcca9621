"""Incremental scheduler.

Ready state lives in two 16-entry banks (even and odd iids).  Each bank
performs at most one event read-modify-write per cycle; a second event for
the same bank waits in that parity's pending queue.  Ready iids come from the
banks' READY outputs or from three FIFOs (ISRDYQ, LSRDYQ, DCRDYQ).
Broadcasts are delivered iteratively: the listeners recorded in BRnQ at
decode time are injected as targeted events into idle bank slots.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..errors import DoubleDecode, ModelAssertion
from ..isa import ALL_READY, NUM_CHANNELS, Slot
from .core import Event, Stage, fmt_rdys, merge_ready, slot_rdys

BANK_SIZE = 16


class SchedulerBank:
    """Decoded ready state in LUT RAM plus flash-clearable valid bits."""

    def __init__(self, parity: int):
        self.parity = parity
        self.drdys = [0] * BANK_SIZE
        self.ardys = [0] * BANK_SIZE
        self.dv = 0     # valid bits, one per entry
        self.av = 0
        self.decode_writes = 0
        self.event_writes = 0

    def iid(self, idx: int) -> int:
        return 2 * idx + self.parity

    def write_decoded(self, idx: int, drdys: int) -> None:
        if self.decode_writes:
            raise ModelAssertion(f"bank {self.parity}: second decode write in one cycle")
        self.decode_writes += 1
        self.drdys[idx] = drdys
        self.dv |= 1 << idx

    def process(self, idx: int, evt_rdys: int) -> tuple[int, bool]:
        if self.event_writes:
            raise ModelAssertion(f"bank {self.parity}: second event write in one cycle")
        self.event_writes += 1
        nxt, ready = merge_ready(bool(self.dv >> idx & 1), self.drdys[idx],
                                 bool(self.av >> idx & 1), self.ardys[idx], evt_rdys)
        self.ardys[idx] = nxt
        self.av |= 1 << idx
        return nxt, ready

    def merged(self, idx: int) -> int:
        d = self.drdys[idx] if self.dv >> idx & 1 else 0
        a = self.ardys[idx] if self.av >> idx & 1 else 0
        return d | a

    def end_cycle(self) -> None:
        self.decode_writes = self.event_writes = 0

    def flash_reset(self) -> None:
        # the RAM contents stay; only the valid bits clear
        self.dv = self.av = 0

    def flash_refresh(self) -> None:
        self.av = 0

    def entry(self, idx: int) -> tuple[int, int, int, int]:
        return (self.dv >> idx & 1, self.drdys[idx], self.av >> idx & 1, self.ardys[idx])


@dataclass
class _Drain:
    event: Event
    remaining: deque = field(default_factory=deque)
    late: bool = False      # delivers a past broadcast to listeners decoded after it


class IncrementalScheduler:
    kind = "incremental"

    def __init__(self, lsq=None):
        self.lsq = lsq
        self.banks = (SchedulerBank(0), SchedulerBank(1))
        self.reset()
        self.clear_stats()

    def clear_stats(self) -> None:
        self.events_in = 0
        self.events_applied = 0
        self.events_to_undecoded = 0
        self.bank_conflict_stalls = 0
        self.broadcast_drain_cycles = 0
        self.drain_injections = 0
        self.cycle_conflicts = 0
        self.cycle_drained = False

    # -- block control ------------------------------------------------------------

    def reset(self) -> None:
        for b in self.banks:
            b.flash_reset()
            b.end_cycle()
        self.brq: dict[int, deque] = {c: deque() for c in range(1, NUM_CHANNELS + 1)}
        self.dcrdyq: deque[int] = deque()
        self.decoded: set[int] = set()
        self.mem: set[int] = set()
        self._clear_active()

    def refresh(self) -> None:
        for b in self.banks:
            b.flash_refresh()
            b.end_cycle()
        self._clear_active()
        self.dcrdyq = deque()
        for iid in sorted(self.decoded):
            b = self.banks[iid & 1]
            if b.drdys[iid >> 1] == ALL_READY:
                self._wake(iid, self.dcrdyq)

    def _clear_active(self) -> None:
        self.isrdyq: deque[int] = deque()
        self.lsrdyq: deque[int] = deque()
        self.pending = (deque(), deque())
        self.drains: deque[_Drain] = deque()
        self.latched: dict[int, Event] = {}
        self.bank_ready: list[int] = []
        self.woken: set[int] = set()
        self.issued: set[int] = set()

    def decode(self, iid: int, drdys: int, dbid: int, listen_slot: Slot | None = None,
               mem: bool = False) -> None:
        if iid in self.decoded:
            raise DoubleDecode(f"iid {iid} decoded twice")
        bank = self.banks[iid & 1]
        bank.write_decoded(iid >> 1, drdys)
        self.decoded.add(iid)
        if mem:
            self.mem.add(iid)
        if dbid:
            entry = (iid, listen_slot if listen_slot is not None else Slot.PRED)
            self.brq[dbid].append(entry)
            if dbid in self.latched:
                self._late_listener(self.latched[dbid], entry)
        # events may have reached the entry before its decode
        if bank.merged(iid >> 1) == ALL_READY:
            self._wake(iid, self.dcrdyq)

    def _wake(self, iid: int, queue) -> None:
        if iid in self.woken:
            return
        self.woken.add(iid)
        if iid in self.mem and self.lsq is not None:
            self.lsq.note_ready(iid)
        else:
            queue.append(iid)

    # -- events -------------------------------------------------------------------

    def process_event(self, evt: Event) -> Optional[int]:
        """One bank read-modify-write; returns the iid if it became READY."""
        iid = evt.iid
        if iid not in self.decoded:
            self.events_to_undecoded += 1
        _, ready = self.banks[iid & 1].process(iid >> 1, evt.rdys)
        return iid if ready else None

    def broadcast(self, channel: int, rdys: int) -> None:
        """Start draining BR<channel>Q with a result carrying ``rdys``."""
        self._start_drain(Event.broadcast(channel, rdys))

    def _start_drain(self, evt: Event) -> None:
        self.latched[evt.channel] = evt
        self.drains.append(_Drain(evt, deque(self.brq[evt.channel])))

    def _late_listener(self, evt: Event, entry) -> None:
        for d in self.drains:
            if d.event is evt:
                d.remaining.append(entry)
                return
        self.drains.append(_Drain(evt, deque([entry]), late=True))

    def drain_rdys(self, evt: Event, slot: Slot) -> int:
        return evt.rdys if slot is Slot.PRED else slot_rdys(slot)

    def step(self, events=()) -> list[Event]:
        for e in events:
            self.events_in += 1
            if e.is_broadcast:
                self._start_drain(e)
            else:
                self.pending[e.iid & 1].append(e)
        # a latched bank READY nobody consumed goes to ISRDYQ rather than being lost
        if self.bank_ready:
            self.isrdyq.extend(self.bank_ready)
            self.bank_ready = []

        applied: list[Event] = []
        woke: list[int] = []
        used = [False, False]
        self.cycle_conflicts = 0
        for p in (0, 1):
            q = self.pending[p]
            if q:
                e = q.popleft()
                used[p] = True
                applied.append(e)
                self.events_applied += 1
                iid = self.process_event(e)
                if iid is not None:
                    self._wake(iid, woke)
                self.cycle_conflicts += len(q)
        self.bank_conflict_stalls += self.cycle_conflicts

        self.cycle_drained = False
        while self.drains:
            d = self.drains[0]
            while d.remaining:
                iid, slot = d.remaining[0]
                p = iid & 1
                if used[p]:
                    break
                d.remaining.popleft()
                used[p] = True
                self.cycle_drained = True
                self.drain_injections += 1
                ev = Event.targeted(iid, self.drain_rdys(d.event, slot), Stage.DRAIN)
                applied.append(ev)
                hit = self.process_event(ev)
                if hit is not None:
                    self._wake(hit, woke)
            if d.remaining:
                break
            self.drains.popleft()
            if not d.late:
                self.events_applied += 1
        if self.cycle_drained:
            self.broadcast_drain_cycles += 1

        woke.sort(key=lambda i: i & 1)
        self.bank_ready = woke

        if self.lsq is not None:
            r = self.lsq.release()
            if r is not None:
                self.lsrdyq.append(r)
        for b in self.banks:
            b.end_cycle()
        return applied

    # -- issue --------------------------------------------------------------------

    def _choose(self, consume: bool) -> Optional[int]:
        if self.bank_ready:
            iid = self.bank_ready[0]
            if consume:
                self.isrdyq.extend(self.bank_ready[1:])
                self.bank_ready = []
            return iid
        for q in (self.isrdyq, self.lsrdyq, self.dcrdyq):
            if q:
                return q.popleft() if consume else q[0]
        return None

    def peek(self) -> Optional[int]:
        return self._choose(False)

    def select(self) -> Optional[int]:
        iid = self._choose(True)
        if iid is not None:
            if iid in self.issued:
                raise ModelAssertion(f"iid {iid} selected twice")
            self.issued.add(iid)
        return iid

    def busy(self) -> bool:
        return bool(self.pending[0] or self.pending[1] or self.drains)

    # -- inspection -----------------------------------------------------------------

    def dump(self) -> str:
        lines = []
        for b in self.banks:
            lines.append(f"bank {'even' if b.parity == 0 else 'odd'}:  iid DV DRDYS  AV ARDYS")
            for idx in range(BANK_SIZE):
                dv, d, av, a = b.entry(idx)
                if dv or av:
                    lines.append(f"  {b.iid(idx):>13}  {dv} {d:04b}    {av} {a:04b}")
        lines.append(f"DCRDYQ {list(self.dcrdyq)}")
        lines.append(f"ISRDYQ {list(self.isrdyq)}")
        lines.append(f"LSRDYQ {list(self.lsrdyq)}")
        for c, q in self.brq.items():
            lines.append(f"BR{c}Q   {[i for i, _ in q]}")
        lines.append(f"EVT0   {[(e.iid, fmt_rdys(e.rdys)) for e in self.pending[0]]}")
        lines.append(f"EVT1   {[(e.iid, fmt_rdys(e.rdys)) for e in self.pending[1]]}")
        return "\n".join(lines)

    def __repr__(self) -> str:
        return (f"IncrementalScheduler(dcrdyq={list(self.dcrdyq)}, isrdyq={list(self.isrdyq)}, "
                f"lsrdyq={list(self.lsrdyq)}, drains={len(self.drains)})")
