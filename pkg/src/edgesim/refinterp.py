"""Functional dataflow interpreter: the architectural oracle for the timed core.

A block is evaluated to fixpoint with no notion of time.  Register reads see
the block-entry snapshot; register writes and stores are buffered and only
applied by :meth:`ArchState.commit`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .assembler import HALT
from .errors import (
    BlockLimitExceeded,
    Deadlock,
    DoubleDelivery,
    MultipleBranches,
    RegisterWriteConflict,
    UnalignedAddress,
    UnknownLabel,
)
from .isa import Block, Instruction, Opcode, Pred, Slot, TargetKind

MASK32 = 0xFFFF_FFFF


def to_signed(v: int) -> int:
    v &= MASK32
    return v - (1 << 32) if v & 0x8000_0000 else v


def alu(insn: Instruction, a: int = 0, b: int = 0):
    """Result of a non-memory, non-branch instruction: an int for value
    producers, a bool for tests."""
    op = insn.opcode
    if op is Opcode.MOV:
        return a
    if op is Opcode.ADD:
        return (a + b) & MASK32
    if op is Opcode.SUB:
        return (a - b) & MASK32
    if op is Opcode.AND:
        return a & b
    if op is Opcode.OR:
        return a | b
    if op is Opcode.XOR:
        return a ^ b
    if op is Opcode.ADDI:
        return (a + insn.imm) & MASK32
    if op is Opcode.TLEI:
        return to_signed(a) <= insn.imm
    if op is Opcode.TLT:
        return to_signed(a) < to_signed(b)
    if op is Opcode.TEQ:
        return a == b
    raise ValueError(f"{op.name} is not an ALU operation")


def check_aligned(addr: int) -> None:
    if addr & 3:
        raise UnalignedAddress(f"address {addr:#010x} is not word aligned")


@dataclass
class ArchState:
    regs: list[int] = field(default_factory=lambda: [0] * 32)
    mem: dict[int, int] = field(default_factory=dict)

    def copy(self) -> ArchState:
        return ArchState(list(self.regs), dict(self.mem))

    def load(self, addr: int) -> int:
        check_aligned(addr)
        return self.mem.get(addr, 0)

    def commit(self, result: BlockResult) -> None:
        for r, v in result.regwrites.items():
            self.regs[r] = v
        for addr, v in result.stores:
            self.mem[addr] = v

    def nonzero_mem(self) -> dict[int, int]:
        return {a: v for a, v in self.mem.items() if v}

    def same_as(self, other: ArchState) -> bool:
        return self.regs == other.regs and self.nonzero_mem() == other.nonzero_mem()


@dataclass
class BlockResult:
    exit: str
    regwrites: dict[int, int] = field(default_factory=dict)
    stores: list[tuple[int, int]] = field(default_factory=list)
    fired: frozenset[int] = frozenset()


class _Evaluator:
    """Slot bookkeeping shared by the interpreter loop."""

    def __init__(self, block: Block, state: ArchState):
        self.block = block
        self.state = state
        self.slots: dict[tuple[int, Slot], object] = {}
        self.fired: set[int] = set()
        self.regwrites: dict[int, int] = {}
        self.stores: list[tuple[int, int]] = []
        self.overlay: dict[int, int] = {}
        self.next_lsid = 0
        self.exits: list[int] = []

    def deliver(self, iid: int, slot: Slot, value) -> None:
        key = (iid, slot)
        if key in self.slots:
            raise DoubleDelivery(f"{self.block.name}[{iid}] {slot.name} delivered twice")
        self.slots[key] = value

    def can_fire(self, iid: int) -> bool:
        if iid in self.fired:
            return False
        insn = self.block.instructions[iid]
        for slot in insn.consumed_slots():
            if (iid, slot) not in self.slots:
                return False
        if insn.pred is not Pred.NONE:
            if self.slots[(iid, Slot.PRED)] != (insn.pred is Pred.TRUE):
                return False
        if insn.opcode.is_memory and insn.lsid != self.next_lsid:
            return False
        return True

    def fire(self, iid: int) -> None:
        insn = self.block.instructions[iid]
        op = insn.opcode
        self.fired.add(iid)
        a = self.slots.get((iid, Slot.OP0), 0)
        b = self.slots.get((iid, Slot.OP1), 0)
        result = None
        if op is Opcode.READ:
            result = self.state.regs[insn.reg]
        elif op is Opcode.BRO:
            self.exits.append(iid)
        elif op is Opcode.LD:
            check_aligned(a)
            result = self.overlay[a] if a in self.overlay else self.state.load(a)
            self.next_lsid += 1
        elif op is Opcode.ST:
            check_aligned(a)
            self.overlay[a] = b
            self.stores.append((a, b))
            self.next_lsid += 1
        elif op is not Opcode.NOP:
            result = alu(insn, a, b)
        if result is None:
            return
        for t in insn.targets:
            if t.kind is TargetKind.REG:
                if t.index in self.regwrites:
                    raise RegisterWriteConflict(f"R{t.index} written twice in {self.block.name}")
                self.regwrites[t.index] = result
            else:
                self.deliver(t.index, t.slot, result)
        if insn.bid:
            for lid, slot in self.block.listeners(insn.bid):
                self.deliver(lid, slot, result)


def interpret_block(block: Block, state: ArchState, rng: random.Random | None = None) -> BlockResult:
    """Evaluate ``block`` against ``state`` (which is not modified).

    ``rng`` picks the next instruction among all fireable ones at random;
    without it the lowest fireable iid goes first.  The result does not depend
    on that choice.
    """
    ev = _Evaluator(block, state)
    n = len(block.instructions)
    while True:
        ready = [i for i in range(n) if ev.can_fire(i)]
        if not ready:
            break
        ev.fire(rng.choice(ready) if rng is not None else ready[0])
    if not ev.exits:
        raise Deadlock(f"{block.name}: no branch fired")
    if len(ev.exits) > 1:
        raise MultipleBranches(f"{block.name}: branches {sorted(ev.exits)} all fired")
    return BlockResult(
        exit=block.exit_label(ev.exits[0]),
        regwrites=ev.regwrites,
        stores=ev.stores,
        fired=frozenset(ev.fired),
    )


@dataclass
class ProgramRun:
    state: ArchState
    exits: list[str]
    halted: bool
    results: list[BlockResult] = field(default_factory=list)


def index_blocks(blocks) -> dict[str, Block]:
    return {b.name: b for b in blocks}


def run_program(blocks, state: ArchState, start: str | None = None, max_blocks: int = 1000,
                strict: bool = False, halt: str = HALT) -> ProgramRun:
    """Execute blocks from ``start`` until an exit to ``halt`` or ``max_blocks``
    block executions.  ``state`` is left untouched; the final state is returned.
    Running out of blocks raises :class:`BlockLimitExceeded` only when ``strict``.
    """
    table = index_blocks(blocks)
    label = start if start is not None else blocks[0].name
    if label not in table:
        raise UnknownLabel(f"no block named {label!r}")
    state = state.copy()
    exits: list[str] = []
    results: list[BlockResult] = []
    for _ in range(max_blocks):
        res = interpret_block(table[label], state)
        state.commit(res)
        exits.append(res.exit)
        results.append(res)
        if res.exit == halt:
            return ProgramRun(state, exits, True, results)
        if res.exit not in table:
            raise UnknownLabel(f"{label}: exit to unknown block {res.exit!r}")
        label = res.exit
    if strict:
        raise BlockLimitExceeded(f"no {halt} after {max_blocks} blocks")
    return ProgramRun(state, exits, False, results)
