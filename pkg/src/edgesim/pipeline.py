"""Cycle-level model of the two-decode, single-issue EDGE core.

Stages: IF, DC (two instructions per cycle), IS (select one), EX, LS.
Within a cycle the model evaluates LS, EX, IS and DC, then clocks the
scheduler with the events produced this cycle (LS results first, then EX,
then IS forwards).  A single-cycle instruction issued in cycle ``t``
forwards its wakeup from IS, so a dependent instruction can be selected in
``t + 1`` and reads the value that EX wrote in ``t + 1`` during its own EX
in ``t + 2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .assembler import HALT
from .errors import (
    BlockLimitExceeded,
    CycleLimitExceeded,
    Deadlock,
    DoubleDelivery,
    ModelAssertion,
    MultipleBranches,
    RegisterWriteConflict,
    UnknownLabel,
)
from .isa import R0, Block, Opcode, Pred, Result, Slot, TargetKind, decoded_ready_state
from .lsq import LoadStoreQueue
from .metrics import CycleStats
from .refinterp import ArchState, BlockResult, ProgramRun, alu, check_aligned, index_blocks
from .sched.core import Event, Stage, slot_rdys
from .sched.incremental import IncrementalScheduler
from .sched.parallel import ParallelScheduler

SCHEDULERS = {"parallel": ParallelScheduler, "incremental": IncrementalScheduler}


@dataclass
class CoreConfig:
    scheduler: str = "parallel"
    load_latency: int = 2
    max_cycles: int = 10_000
    decode_width: int = 2
    issue_width: int = 1

    def __post_init__(self):
        if self.scheduler not in SCHEDULERS:
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        if self.load_latency < 2:
            raise ValueError("load latency covers EX and LS, so it is at least 2")
        if self.decode_width != 2 or self.issue_width != 1:
            raise ValueError("the core decodes two and issues one instruction per cycle")


@dataclass
class _InFlight:
    iid: int
    ops: dict = field(default_factory=dict)


@dataclass
class _MemOp:
    due: int
    iid: int
    addr: int
    data: int = 0


class Core:
    """One core instance; keeps decoded state between blocks for refresh."""

    def __init__(self, cfg: CoreConfig | None = None, trace=None):
        self.cfg = cfg or CoreConfig()
        self.lsq = LoadStoreQueue()
        self.sched = SCHEDULERS[self.cfg.scheduler](self.lsq)
        self.trace = trace      # callable taking one dict per cycle, or None
        self.loaded: Optional[Block] = None
        self.issue_log: list[tuple[int, int]] = []

    # -- one block ------------------------------------------------------------------

    def run_block(self, block: Block, state: ArchState, refresh: bool = False,
                  block_index: int = 0) -> tuple[BlockResult, CycleStats]:
        """Execute ``block`` against ``state`` (not modified).

        With ``refresh`` the block must be the one loaded last; fetch and
        decode are skipped and only the active ready state is cleared.
        """
        cfg = self.cfg
        sched = self.sched
        n = len(block.instructions)
        if refresh:
            if self.loaded is not block:
                raise ModelAssertion("refresh requested for a block that is not loaded")
            sched.refresh()
        else:
            sched.reset()
            self.loaded = block
        sched.clear_stats()
        insns = block.instructions
        self.lsq.reset({i: insns[i].lsid for i in block.memory_ops})

        decoded = set(range(n)) if refresh else set()
        next_decode = n if refresh else 0
        operands: dict[tuple[int, Slot], object] = {}
        regwrites: dict[int, int] = {}
        overlay: dict[int, int] = {}
        stores: list[tuple[int, int]] = []
        fired: set[int] = set()
        exits: list[int] = []
        ex: Optional[_InFlight] = None
        ls: list[_MemOp] = []
        stats = CycleStats(cfg.scheduler, blocks=1, refreshes=int(refresh))
        self.issue_log = []

        def write(iid, slot, value):
            key = (iid, slot)
            if key in operands:
                raise DoubleDelivery(f"{block.name}[{iid}] {slot.name} written twice")
            operands[key] = value

        def value_events(insn, origin):
            out = []
            for t in insn.targets:
                if t.kind is not TargetKind.REG:
                    out.append(Event.targeted(t.index, slot_rdys(t.slot), origin))
            if insn.bid:
                out.append(Event.broadcast(insn.bid, R0, origin))
            return out

        def deliver_value(insn, value):
            for t in insn.targets:
                if t.kind is TargetKind.REG:
                    if t.index in regwrites:
                        raise RegisterWriteConflict(f"R{t.index} written twice in {block.name}")
                    regwrites[t.index] = value
                else:
                    write(t.index, t.slot, value)
            if insn.bid:
                for lid, slot in block.listeners(insn.bid):
                    write(lid, slot, value)

        cycle = 0
        while True:
            if cycle >= cfg.max_cycles:
                raise CycleLimitExceeded(f"{block.name}: no completion after {cycle} cycles")
            ls_events: list[Event] = []
            ex_events: list[Event] = []
            is_events: list[Event] = []
            rec = {"cycle": cycle, "block": block_index, "decoded": [], "issued": None,
                   "ex": [], "ls": []}

            # LS: memory access, in issue (= lsid) order
            while ls and ls[0].due == cycle:
                m = ls.pop(0)
                insn = insns[m.iid]
                rec["ls"].append(m.iid)
                if insn.opcode is Opcode.LD:
                    self.lsq.access(m.iid, "LD", m.addr)
                    value = overlay[m.addr] if m.addr in overlay else state.load(m.addr)
                    deliver_value(insn, value)
                    ls_events += value_events(insn, Stage.LS)
                else:
                    self.lsq.access(m.iid, "ST", m.addr)
                    overlay[m.addr] = m.data
                    stores.append((m.addr, m.data))

            # EX
            if ex is not None:
                iid = ex.iid
                insn = insns[iid]
                op = insn.opcode
                rec["ex"].append(iid)
                a = operands.get((iid, Slot.OP0), 0)
                b = operands.get((iid, Slot.OP1), 0)
                if op is Opcode.BRO:
                    exits.append(iid)
                    if len(exits) > 1:
                        raise MultipleBranches(f"{block.name}: branches {exits} fired")
                elif op.is_memory:
                    check_aligned(a)
                    ls.append(_MemOp(cycle - 1 + cfg.load_latency, iid, a, b))
                elif op is Opcode.READ:
                    deliver_value(insn, state.regs[insn.reg])
                elif op.is_test:
                    outcome = alu(insn, a, b)
                    for t in insn.targets:
                        write(t.index, Slot.PRED, outcome)
                        ex_events.append(Event.targeted(t.index, slot_rdys(Slot.PRED, outcome), Stage.EX))
                    if insn.bid:
                        for lid, slot in block.listeners(insn.bid):
                            write(lid, slot, outcome)
                        ex_events.append(Event.broadcast(insn.bid, slot_rdys(Slot.PRED, outcome), Stage.EX))
                elif op is not Opcode.NOP:
                    deliver_value(insn, alu(insn, a, b))
                ex = None

            # IS
            if not (refresh and cycle == 0):
                iid = sched.select()
                if iid is not None:
                    if iid not in decoded:
                        raise ModelAssertion(f"iid {iid} selected before decode")
                    insn = insns[iid]
                    for slot in insn.consumed_slots():
                        if slot is Slot.PRED:
                            got = operands.get((iid, Slot.PRED))
                            if got is None or bool(got) != (insn.pred is Pred.TRUE):
                                raise ModelAssertion(f"iid {iid} issued without its predicate")
                    if insn.opcode.is_memory:
                        self.lsq.issued(iid)
                    elif insn.opcode.result is Result.VALUE:
                        is_events += value_events(insn, Stage.IS)
                    fired.add(iid)
                    ex = _InFlight(iid)
                    stats.issues += 1
                    rec["issued"] = iid
                    self.issue_log.append((cycle, iid))

            # DC: one pair per cycle, after the fetch cycle
            if not refresh and cycle >= 1 and next_decode < n:
                for iid in range(next_decode, min(next_decode + 2, n)):
                    insn = insns[iid]
                    drdys, dbid = decoded_ready_state(insn)
                    sched.decode(iid, drdys, dbid, insn.listen_slot, insn.opcode.is_memory)
                    decoded.add(iid)
                    rec["decoded"].append(iid)
                    stats.decodes += 1
                next_decode += 2

            new = ls_events + ex_events + is_events
            stats.events_generated += len(new)
            sched.step(new)
            rec["events"] = [e.to_json() for e in new]
            rec["stalls"] = {
                "bank_conflict": getattr(sched, "cycle_conflicts", 0),
                "broadcast_drain": bool(getattr(sched, "cycle_drained", False)),
                "empty": rec["issued"] is None,
            }
            if self.trace is not None:
                self.trace(rec)
            cycle += 1

            quiet = (next_decode >= n and ex is None and not ls and not sched.busy()
                     and sched.peek() is None and not self.lsq.awaiting_release)
            if quiet:
                break

        if not exits:
            raise Deadlock(f"{block.name}: no branch fired")
        stats.cycles = cycle
        stats.bank_conflict_stalls = sched.bank_conflict_stalls
        stats.broadcast_drain_cycles = (sched.broadcast_drain_cycles if sched.kind == "incremental"
                                        else sched.broadcast_cycles)
        stats.events_delivered = sched.events_applied
        if stats.events_delivered != stats.events_generated:
            raise ModelAssertion(
                f"{block.name}: {stats.events_generated} events generated, {stats.events_delivered} delivered")
        result = BlockResult(block.exit_label(exits[0]), regwrites, stores, frozenset(fired))
        return result, stats


def run_block(block: Block, state: ArchState, cfg: CoreConfig | None = None,
              trace=None) -> tuple[BlockResult, CycleStats]:
    return Core(cfg, trace).run_block(block, state)


@dataclass
class TimedRun(ProgramRun):
    stats: CycleStats = field(default_factory=CycleStats)


def run_program_timed(blocks, state: ArchState, cfg: CoreConfig | None = None, start: str | None = None,
                      max_blocks: int = 1000, strict: bool = False, halt: str = HALT,
                      trace=None) -> TimedRun:
    """Run blocks on the timed core; a branch back to the same block refreshes it."""
    cfg = cfg or CoreConfig()
    core = Core(cfg, trace)
    table = index_blocks(blocks)
    label = start if start is not None else blocks[0].name
    if label not in table:
        raise UnknownLabel(f"no block named {label!r}")
    state = state.copy()
    total = CycleStats(cfg.scheduler)
    exits: list[str] = []
    results: list[BlockResult] = []
    prev = None
    for k in range(max_blocks):
        block = table[label]
        res, st = core.run_block(block, state, refresh=(prev is block), block_index=k)
        total.add(st)
        state.commit(res)
        exits.append(res.exit)
        results.append(res)
        if res.exit == halt:
            return TimedRun(state, exits, True, results, total)
        if res.exit not in table:
            raise UnknownLabel(f"{label}: exit to unknown block {res.exit!r}")
        prev = block
        label = res.exit
    if strict:
        raise BlockLimitExceeded(f"no {halt} after {max_blocks} blocks")
    return TimedRun(state, exits, False, results, total)


class JsonlTrace:
    """Collects per-cycle records; writes them as JSON lines."""

    def __init__(self):
        self.records: list[dict] = []

    def __call__(self, rec: dict) -> None:
        self.records.append(rec)

    def dumps(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)
