"""Brute-force parallel scheduler.

Every entry keeps six decoded bits (DBID, DRT, DRF, DR0, DR1) and six active
bits (RT, RF, R0, R1, INH, RDY) in flip-flops and all 32 entries re-evaluate
their next state every cycle.  State is held bit-sliced: ``self.rt`` is a
32-bit int whose bit ``i`` is RT[i], so the per-entry next-state equations
are evaluated for all entries at once.
"""

from __future__ import annotations

from collections import deque
from typing import Optional

from ..errors import DoubleDecode
from ..isa import MAX_BLOCK, R0, R1, RF, RT, Slot
from .core import Event, fmt_rdys

N = MAX_BLOCK
MASK = (1 << N) - 1

# 32x4 ROM per 5-bit group: index of the lowest set bit
_ROM = [0] + [(g & -g).bit_length() - 1 for g in range(1, 32)]


def encode16(v: int) -> tuple[bool, int]:
    """16->4 priority encoder, lowest index wins.

    The input is split into I[4:0], I[9:5], I[14:10] and I[15]; each 5-bit
    group looks up its ROM and a 3:1 selector takes the first nonzero group,
    producing 'b1111 when all three groups are zero.
    """
    g0, g1, g2 = v & 0x1F, (v >> 5) & 0x1F, (v >> 10) & 0x1F
    if g0:
        idx = _ROM[g0]
    elif g1:
        idx = 5 + _ROM[g1]
    elif g2:
        idx = 10 + _ROM[g2]
    else:
        idx = 0b1111
    return v & 0xFFFF != 0, idx


def _bank_bits(rdy: int, parity: int) -> int:
    out = 0
    for j in range(16):
        if rdy >> (2 * j + parity) & 1:
            out |= 1 << j
    return out


def select_lowest(rdy: int) -> Optional[int]:
    """Lowest-numbered set bit of a 32-bit ready vector, or None.

    Modeled as one 16->4 encoder per even/odd bank followed by a comparator
    that keeps the smaller global iid.
    """
    ve, ie = encode16(_bank_bits(rdy, 0))
    vo, io = encode16(_bank_bits(rdy, 1))
    even = 2 * ie if ve else None
    odd = 2 * io + 1 if vo else None
    if even is None:
        return odd
    if odd is None:
        return even
    return min(even, odd)


class ParallelScheduler:
    kind = "parallel"

    def __init__(self, lsq=None):
        self.lsq = lsq
        self.pending: deque[Event] = deque()
        self.reset()
        self.clear_stats()

    def clear_stats(self) -> None:
        self.events_in = 0
        self.events_applied = 0
        self.events_to_undecoded = 0
        self.event_deferrals = 0
        self.broadcast_cycles = 0
        self.bank_conflict_stalls = 0

    # -- block control ------------------------------------------------------------

    def reset(self) -> None:
        self.dbid = [0] * N
        self.chan = [0, 0, 0, 0]    # per channel: mask of entries with that DBID
        self.drt = self.drf = self.dr0 = self.dr1 = 0
        self.mem = 0
        self._clear_active()

    def refresh(self) -> None:
        self._clear_active()

    def _clear_active(self) -> None:
        self.rt = self.rf = self.r0 = self.r1 = 0
        self.inh = self.rdy = 0
        self.latched: dict[int, int] = {}   # channel -> ready bit of its broadcast
        self.pending.clear()
        self._inh_en: Optional[int] = None

    @property
    def decoded(self) -> int:
        return self.drt | self.drf

    def decode(self, iid: int, drdys: int, dbid: int, listen_slot: Slot | None = None,
               mem: bool = False) -> None:
        bit = 1 << iid
        if self.decoded & bit:
            raise DoubleDecode(f"iid {iid} decoded twice")
        if drdys & RT:
            self.drt |= bit
        if drdys & RF:
            self.drf |= bit
        if drdys & R0:
            self.dr0 |= bit
        if drdys & R1:
            self.dr1 |= bit
        self.dbid[iid] = dbid
        if dbid:
            self.chan[dbid] |= bit
        if mem:
            self.mem |= bit
        # a broadcast on this channel may already have gone past
        if dbid in self.latched:
            self._set_active(self.latched[dbid], bit)

    def _set_active(self, rdys: int, bits: int) -> None:
        if rdys & RT:
            self.rt |= bits
        if rdys & RF:
            self.rf |= bits
        if rdys & R0:
            self.r0 |= bits
        if rdys & R1:
            self.r1 |= bits

    # -- issue ----------------------------------------------------------------------

    def _candidates(self) -> int:
        vec = self.rdy
        if self.mem and self.lsq is not None:
            head = self.lsq.head
            blocked = self.mem & ~((1 << head) if head is not None else 0)
            vec &= ~blocked
        return vec & MASK

    def peek(self) -> Optional[int]:
        return select_lowest(self._candidates())

    def select(self) -> Optional[int]:
        iid = self.peek()
        self._inh_en = iid
        return iid

    def busy(self) -> bool:
        return bool(self.pending)

    # -- clock edge -----------------------------------------------------------------

    def _intake(self) -> list[Event]:
        """Take a compatible prefix of the pending FIFO for this cycle's ports.

        Two targeted ports (T0, T1) and one broadcast port share one ENs
        vector, so targeted predicate and operand events cannot share a cycle,
        and a broadcast only travels with targeted events of the same bit.
        """
        taken: list[Event] = []
        bcast = None
        ntargeted = 0
        for e in self.pending:
            if e.is_broadcast:
                if bcast is not None or any(t.rdys != e.rdys for t in taken):
                    break
                bcast = e
            else:
                if ntargeted == 2:
                    break
                if bcast is not None and e.rdys != bcast.rdys:
                    break
                if taken and any(t.is_predicate != e.is_predicate for t in taken):
                    break
                ntargeted += 1
            taken.append(e)
        for _ in taken:
            self.pending.popleft()
        return taken

    def step(self, events=()) -> list[Event]:
        for e in events:
            self.pending.append(e)
            self.events_in += 1
        taken = self._intake()
        self.event_deferrals += len(self.pending)

        # drive the scheduler inputs: T = {input#:1; IID:5}
        ports = [None, None]
        bid = 0
        ens = 0
        k = 0
        for e in taken:
            ens |= e.rdys
            if e.is_broadcast:
                bid = e.channel
                self.latched[bid] = e.rdys
                continue
            input_bit = 1 if e.rdys & (RT | R1) else 0
            ports[k] = (input_bit << 5) | e.iid
            k += 1
            if not self.decoded >> e.iid & 1:
                self.events_to_undecoded += 1
        self.events_applied += len(taken)
        if bid:
            self.broadcast_cycles += 1
        self._next_readys(ports[0], ports[1], bid, ens)
        return taken

    def _next_readys(self, t0: Optional[int], t1: Optional[int], bid: int, ens: int) -> None:
        def dec(t, side):
            if t is None or (t >> 5) != side:
                return 0
            return 1 << (t & 0x1F)

        t00, t01 = dec(t0, 0), dec(t0, 1)
        t10, t11 = dec(t1, 0), dec(t1, 1)
        # BID 00 means "no broadcast", so it must not match undecoded/non-listening entries
        b = self.chan[bid] if bid else 0
        side1 = t01 | t11 | b
        side0 = t00 | t10 | b

        rt = self.rt | self.drt | (side1 if ens & RT else 0)
        rf = self.rf | self.drf | (side0 if ens & RF else 0)
        r0 = self.r0 | self.dr0 | (side0 if ens & R0 else 0)
        r1 = self.r1 | self.dr1 | (side1 if ens & R1 else 0)
        inh = self.inh | ((1 << self._inh_en) if self._inh_en is not None else 0)
        self.rt, self.rf, self.r0, self.r1, self.inh = rt, rf, r0, r1, inh
        self.rdy = rt & rf & r0 & r1 & ~inh & MASK
        self._inh_en = None

    # -- inspection -------------------------------------------------------------------

    def entry(self, iid: int) -> dict:
        def bit(v):
            return v >> iid & 1
        return {
            "DBID": self.dbid[iid],
            "DRT": bit(self.drt), "DRF": bit(self.drf), "DR0": bit(self.dr0), "DR1": bit(self.dr1),
            "RT": bit(self.rt), "RF": bit(self.rf), "R0": bit(self.r0), "R1": bit(self.r1),
            "INH": bit(self.inh), "RDY": bit(self.rdy),
        }

    def dump(self, entries: int = N, names=None) -> str:
        """Ready state as a text table, one row per entry."""
        cols = ["DBID", "DRT", "DRF", "DR0", "DR1", "RT", "RF", "R0", "R1", "INH", "RDY"]
        width = max([len(n) for n in (names or [])] + [9])
        lines = [f"{'entry':<{width}} " + " ".join(f"{c:>4}" for c in cols)]
        for i in range(entries):
            e = self.entry(i)
            label = names[i] if names and i < len(names) else f"{i}"
            if not (e["DRT"] or e["DRF"]):
                label = f"{label} (undec)"
            cells = [f"{e['DBID']:02b}"] + [str(e[c]) for c in cols[1:]]
            lines.append(f"{label:<{width}} " + " ".join(f"{c:>4}" for c in cells))
        return "\n".join(lines)

    def __repr__(self) -> str:
        return f"ParallelScheduler(rdy={self.rdy:#010x}, inh={self.inh:#010x}, pending={len(self.pending)})"


__all__ = ["ParallelScheduler", "select_lowest", "encode16", "fmt_rdys"]
