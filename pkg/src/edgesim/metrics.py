"""Cycle statistics and the FPGA cost figures of the two schedulers."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from decimal import Decimal
from typing import Optional

from .errors import UnknownConfiguration

KINDS = ("parallel", "incremental")


@dataclass
class CycleStats:
    scheduler: str = ""
    cycles: int = 0
    blocks: int = 0
    decodes: int = 0
    issues: int = 0
    refreshes: int = 0
    bank_conflict_stalls: int = 0
    broadcast_drain_cycles: int = 0
    events_generated: int = 0
    events_delivered: int = 0

    @property
    def ipc(self) -> float:
        return self.issues / self.cycles if self.cycles else 0.0

    def add(self, other: CycleStats) -> None:
        for f in fields(self):
            if f.name != "scheduler":
                setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def to_json(self) -> dict:
        d = asdict(self)
        d["bank_conflicts"] = d.pop("bank_conflict_stalls")
        d["ipc"] = round(self.ipc, 6)
        return d


@dataclass(frozen=True)
class HardwareCost:
    kind: str
    entries: int
    events_per_cycle: int
    area_core_luts: Optional[int]
    area_total_luts: Optional[int]
    period_ns: Optional[Decimal]
    period_pipelined_ns: Optional[Decimal]
    note: str = ""

    @property
    def area_period_product(self) -> Optional[Decimal]:
        if self.area_total_luts is None or self.period_ns is None:
            return None
        return self.area_total_luts * self.period_ns

    def to_json(self) -> dict:
        def s(v):
            return None if v is None else str(v) if isinstance(v, Decimal) else v
        return {
            "scheduler": self.kind,
            "entries": self.entries,
            "events_per_cycle": self.events_per_cycle,
            "area_core_luts": self.area_core_luts,
            "area_total_luts": self.area_total_luts,
            "period_ns": s(self.period_ns),
            "period_pipelined_ns": s(self.period_pipelined_ns),
            "area_period_product": s(self.area_period_product),
            "note": self.note,
        }


D = Decimal

# (kind, entries, events/cycle) -> (core LUTs, total LUTs, period, pipelined period, note)
_TABLE = {
    ("parallel", 32, 2): (288, 340, D("5.0"), D("2.9"), ""),
    ("incremental", 32, 2): (78, 150, D("4.3"), D("2.5"), ""),
    ("parallel", 32, 4): (288, None, None, None, "scheduler core area with 4 events/cycle"),
    ("incremental", 32, 4): (156, None, None, None, "scheduler core area with 4 events/cycle"),
    ("parallel", 64, 2): (576, None, None, None, "scheduler core area with 64 entries"),
    ("incremental", 64, 2): (130, None, None, None,
                             "64-entry figure; whether it covers the core only is not stated"),
}


def cost_report(kind: str, entries: int = 32, events_per_cycle: int = 2) -> HardwareCost:
    key = (kind, entries, events_per_cycle)
    if key not in _TABLE:
        raise UnknownConfiguration(
            f"no cost data for {kind} scheduler with {entries} entries and {events_per_cycle} events/cycle")
    core, total, period, piped, note = _TABLE[key]
    return HardwareCost(kind, entries, events_per_cycle, core, total, period, piped, note)


def product_ratio() -> Decimal:
    """Area*period of the parallel scheduler over the incremental one (32 entries)."""
    return cost_report("parallel").area_period_product / cost_report("incremental").area_period_product


def cost_table() -> str:
    """Both 32-entry configurations as aligned text, one row per figure."""
    p, i = cost_report("parallel"), cost_report("incremental")
    p64, i64 = cost_report("parallel", 64), cost_report("incremental", 64)
    p4, i4 = cost_report("parallel", 32, 4), cost_report("incremental", 32, 4)
    rows = [
        ("Area, core (LUTs)", p.area_core_luts, i.area_core_luts),
        ("Area, total (LUTs)", p.area_total_luts, i.area_total_luts),
        ("Period (ns)", p.period_ns, i.period_ns),
        ("Period, pipelined (ns)", p.period_pipelined_ns, i.period_pipelined_ns),
        ("Area*period (LUT*ns)", p.area_period_product, i.area_period_product),
        ("Area, 4 events/cycle", p4.area_core_luts, i4.area_core_luts),
        ("Area, 64 entries", p64.area_core_luts, i64.area_core_luts),
        ("Broadcast", "flash", "iterative"),
    ]
    lines = [f"{'':<24}{'parallel':>12}{'incremental':>14}"]
    for label, a, b in rows:
        lines.append(f"{label:<24}{str(a):>12}{str(b):>14}")
    return "\n".join(lines)


def format_cost(c: HardwareCost) -> str:
    parts = [f"{c.kind} scheduler, {c.entries} entries, {c.events_per_cycle} events/cycle",
             f"  area core:   {c.area_core_luts} LUTs"]
    if c.area_total_luts is not None:
        parts.append(f"  area total:  {c.area_total_luts} LUTs")
    if c.period_ns is not None:
        parts.append(f"  period:      {c.period_ns} ns ({c.period_pipelined_ns} ns pipelined)")
        parts.append(f"  area*period: {c.area_period_product} LUT*ns")
    if c.note:
        parts.append(f"  note: {c.note}")
    return "\n".join(parts)


def predicted_drain_cycles(listener_iids) -> int:
    """Cycles needed to drain one broadcast with no competing events.

    Listeners are injected in queue order, at most one per bank per cycle, so
    a cycle ends whenever the next listener's bank is already taken.
    """
    cycles = 0
    used = set()
    for iid in listener_iids:
        p = iid & 1
        if not used or p in used:
            cycles += 1
            used = set()
        used.add(p)
    return cycles


@dataclass(frozen=True)
class Comparison:
    parallel: CycleStats
    incremental: CycleStats
    cycle_delta: int
    bank_conflict_delta: int
    broadcast_drain_surplus: int
    slack: int
    time_parallel_ns: Decimal
    time_incremental_ns: Decimal

    def to_json(self) -> dict:
        return {
            "cycle_delta": self.cycle_delta,
            "bank_conflict_delta": self.bank_conflict_delta,
            "broadcast_drain_surplus": self.broadcast_drain_surplus,
            "slack": self.slack,
            "time_parallel_ns": str(self.time_parallel_ns),
            "time_incremental_ns": str(self.time_incremental_ns),
            "parallel": self.parallel.to_json(),
            "incremental": self.incremental.to_json(),
        }

    def text(self) -> str:
        p, i = self.parallel, self.incremental
        return "\n".join([
            f"{'':<24}{'parallel':>12}{'incremental':>14}",
            f"{'cycles':<24}{p.cycles:>12}{i.cycles:>14}",
            f"{'issues':<24}{p.issues:>12}{i.issues:>14}",
            f"{'bank conflict stalls':<24}{p.bank_conflict_stalls:>12}{i.bank_conflict_stalls:>14}",
            f"{'broadcast drain cycles':<24}{p.broadcast_drain_cycles:>12}{i.broadcast_drain_cycles:>14}",
            f"{'time (ns)':<24}{str(self.time_parallel_ns):>12}{str(self.time_incremental_ns):>14}",
            f"cycle delta {self.cycle_delta}: bank conflicts {self.bank_conflict_delta}, "
            f"broadcast drain {self.broadcast_drain_surplus}, slack {self.slack}",
        ])


def compare(parallel: CycleStats, incremental: CycleStats) -> Comparison:
    """Attribute the cycle difference between the two schedulers.

    ``slack`` is whatever the bank-conflict and broadcast-drain counts do not
    explain (queue priority effects); it can have either sign.
    """
    delta = incremental.cycles - parallel.cycles
    conflicts = incremental.bank_conflict_stalls - parallel.bank_conflict_stalls
    surplus = incremental.broadcast_drain_cycles - parallel.broadcast_drain_cycles
    return Comparison(
        parallel, incremental, delta, conflicts, surplus, delta - conflicts - surplus,
        parallel.cycles * cost_report("parallel").period_ns,
        incremental.cycles * cost_report("incremental").period_ns,
    )
