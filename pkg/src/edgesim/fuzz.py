"""Random well-formed programs and a three-way engine equivalence check.

Blocks are random dataflow graphs of 1..32 instructions.  They mix ALU
operations, tests, predication, loads and stores and broadcasts on up to
three channels.  Instructions are placed at random iids.  Memory
operations are then reassigned among their own iids so that lsid order
agrees with dataflow order.  Addresses come from base registers R28..R31,
which hold word-aligned values and are never written.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .assembler import HALT, build_block
from .errors import EdgeError
from .isa import (
    IMM_MAX,
    IMM_MIN,
    MAX_BLOCK,
    NUM_CHANNELS,
    Block,
    Instruction,
    Opcode,
    Pred,
    Result,
    Slot,
    Target,
    TargetKind,
)
from .pipeline import CoreConfig, run_program_timed
from .refinterp import MASK32, ArchState, run_program

BASE_REGS = (28, 29, 30, 31)
MEM_WORDS = 64

_BINARY = (Opcode.ADD, Opcode.SUB, Opcode.AND, Opcode.OR, Opcode.XOR)
_TESTS = (Opcode.TLEI, Opcode.TLT, Opcode.TEQ)


@dataclass(eq=False)
class _Node:
    op: Opcode
    pred: Pred = Pred.NONE
    imm: int = 0
    reg: int = 0
    label: Optional[str] = None
    outs: list = field(default_factory=list)    # (consumer node, slot) or ("W", reg)
    bid: int = 0
    listen: int = 0
    listen_slot: Optional[Slot] = None
    certain: bool = True    # fires on every execution
    is_addr: bool = False

    @property
    def capacity(self) -> int:
        return self.op.max_targets - len(self.outs)


def _read(reg: int) -> _Node:
    return _Node(Opcode.READ, reg=reg, is_addr=reg in BASE_REGS)


class _BlockGen:
    def __init__(self, rng: random.Random, name: str, labels, size: int):
        self.rng = rng
        self.name = name
        self.labels = list(labels)
        self.size = size
        self.limit = size
        self.nodes: list[_Node] = []
        self.channels: set[int] = set()
        self.free_regs = list(range(BASE_REGS[0]))
        rng.shuffle(self.free_regs)

    def room(self) -> int:
        return self.limit - len(self.nodes)

    # -- wiring ---------------------------------------------------------------------

    def _can_broadcast(self, p: _Node, c: _Node, slot: Slot) -> bool:
        if c.listen or slot is Slot.OP1:
            return False
        return bool(p.bid) or len(self.channels) < NUM_CHANNELS

    def _candidates(self, c: _Node, slot: Slot, addr: bool, certain: bool) -> list[_Node]:
        out = []
        for p in self.nodes:
            if (slot is Slot.PRED) != p.op.is_test:
                continue
            if not p.op.is_test and p.op.result is not Result.VALUE:
                continue
            if (addr and not p.is_addr) or (certain and not p.certain):
                continue
            if p.capacity > 0 or self._can_broadcast(p, c, slot):
                out.append(p)
        return out

    def _connect(self, p: _Node, c: _Node, slot: Slot) -> None:
        bcast = self._can_broadcast(p, c, slot)
        if bcast and (p.capacity <= 0 or self.rng.random() < 0.3):
            if not p.bid:
                p.bid = self.rng.choice(sorted(set(range(1, NUM_CHANNELS + 1)) - self.channels))
                self.channels.add(p.bid)
            c.listen, c.listen_slot = p.bid, slot
        else:
            assert p.capacity > 0
            p.outs.append((c, slot))
        if not p.certain:
            c.certain = False

    def _fresh(self, addr: bool) -> _Node:
        node = _read(self.rng.choice(BASE_REGS) if addr else self.rng.randrange(32))
        self.nodes.append(node)
        if addr and self.room() >= 2 and self.rng.random() < 0.5:
            offset = _Node(Opcode.ADDI, imm=4 * self.rng.randrange(16), is_addr=True)
            node.outs.append((offset, Slot.OP0))
            self.nodes.append(offset)
            return offset
        return node

    def _place(self, node: _Node, certain: bool = False) -> None:
        """Wire every consumed slot of ``node`` and append it."""
        for slot, addr in _slots(node):
            cands = self._candidates(node, slot, addr, certain)
            p = self.rng.choice(cands) if cands else self._fresh(addr)
            self._connect(p, node, slot)
        self.nodes.append(node)

    # -- instructions -------------------------------------------------------------

    def _random_node(self) -> _Node:
        rng = self.rng
        r = rng.random()
        if r < 0.12:
            node = _read(rng.randrange(32))
        elif r < 0.22:
            node = _Node(Opcode.MOV)
        elif r < 0.32:
            node = _Node(Opcode.ADDI, imm=rng.randint(IMM_MIN, IMM_MAX))
        elif r < 0.55:
            node = _Node(rng.choice(_BINARY))
        elif r < 0.70:
            node = _test(rng, rng.choice(_TESTS))
        elif r < 0.80:
            # a load waits for every lower lsid, which may be predicated off
            node = _Node(Opcode.LD, certain=False)
        elif r < 0.90:
            node = _Node(Opcode.ST)
        else:
            node = _Node(Opcode.NOP)
        if rng.random() < (0.8 if node.op is Opcode.NOP else 0.25):
            node.pred = rng.choice((Pred.TRUE, Pred.FALSE))
            if not self._candidates(node, Slot.PRED, False, False):
                node.pred = Pred.NONE
        node.certain = node.certain and node.pred is Pred.NONE
        return node

    def generate(self) -> Block:
        rng = self.rng
        pair = self.size >= 5 and rng.random() < 0.6
        self.limit = self.size - (5 if pair else 1)
        while self.room() > 0:
            node = self._random_node()
            # each slot may need a fresh producer; an address may need two
            if 1 + sum(1 + addr for _, addr in _slots(node)) > self.room():
                node = _read(rng.randrange(32))
            self._place(node)

        self.limit = self.size
        if pair:
            # a one-target test needs a channel for the second branch, and
            # wiring its own input may take one
            ops = _TESTS if len(self.channels) < NUM_CHANNELS - 1 else (Opcode.TLT, Opcode.TEQ)
            test = _test(rng, rng.choice(ops))
            self._place(test, certain=True)
            for pred in (Pred.TRUE, Pred.FALSE):
                bro = _Node(Opcode.BRO, pred=pred, label=rng.choice(self.labels))
                self._connect(test, bro, Slot.PRED)
                self.nodes.append(bro)
        else:
            self.nodes.append(_Node(Opcode.BRO, label=rng.choice(self.labels)))
        for p in self.nodes:
            if (p.op.result is Result.VALUE and p.capacity > 0 and self.free_regs
                    and rng.random() < 0.4):
                p.outs.append(("W", self.free_regs.pop()))
        return self._emit()

    def _emit(self) -> Block:
        n = len(self.nodes)
        perm = list(range(n))
        self.rng.shuffle(perm)
        mem = [i for i, p in enumerate(self.nodes) if p.op.is_memory]
        for i, iid in zip(mem, sorted(perm[i] for i in mem)):
            perm[i] = iid
        iid_of = {id(p): perm[i] for i, p in enumerate(self.nodes)}
        rows: list = [None] * n
        for i, p in enumerate(self.nodes):
            targets = []
            for dst, slot in p.outs:
                if dst == "W":
                    targets.append(Target.reg(slot))
                else:
                    targets.append(Target(TargetKind(int(slot)), iid_of[id(dst)]))
            insn = Instruction(p.op, p.pred, tuple(targets), p.bid, p.listen, p.listen_slot,
                               imm=p.imm, reg=p.reg)
            rows[perm[i]] = (insn, p.label)
        return build_block(self.name, rows)


def _test(rng: random.Random, op: Opcode) -> _Node:
    return _Node(op, imm=rng.randint(-8, 8) if op is Opcode.TLEI else 0)


def _slots(node: _Node) -> list[tuple[Slot, bool]]:
    """(slot, needs an address) for every input of ``node``."""
    slots = []
    if node.pred is not Pred.NONE:
        slots.append((Slot.PRED, False))
    if node.op.n_operands >= 1:
        slots.append((Slot.OP0, node.op.is_memory))
    if node.op.n_operands >= 2:
        slots.append((Slot.OP1, False))
    return slots


def random_block(rng: random.Random, name: str = "b0", labels=(HALT,), size: int | None = None) -> Block:
    if size is None:
        size = rng.randint(1, MAX_BLOCK)
    return _BlockGen(rng, name, labels, size).generate()


def random_program(rng: random.Random, nblocks: int | None = None) -> list[Block]:
    if nblocks is None:
        nblocks = rng.randint(1, 3)
    names = [f"b{i}" for i in range(nblocks)]
    labels = names + [HALT]
    return [random_block(rng, name, labels) for name in names]


def random_state(rng: random.Random) -> ArchState:
    regs = []
    for r in range(32):
        if r in BASE_REGS:
            regs.append(4 * rng.randrange(MEM_WORDS))
        elif rng.random() < 0.5:
            regs.append(rng.randint(-10, 10) & MASK32)
        else:
            regs.append(rng.getrandbits(32))
    mem = {4 * a: rng.getrandbits(32) for a in rng.sample(range(MEM_WORDS + 16), 12)}
    return ArchState(regs, mem)


def check_program(blocks, state: ArchState, max_blocks: int = 6) -> list[str]:
    """Run the reference and both timed engines; return mismatch descriptions."""
    problems = []
    ref = run_program(blocks, state, max_blocks=max_blocks)
    for kind in ("parallel", "incremental"):
        try:
            run = run_program_timed(blocks, state, CoreConfig(kind), max_blocks=max_blocks)
        except EdgeError as e:
            problems.append(f"{kind}: {type(e).__name__}: {e}")
            continue
        if run.exits != ref.exits:
            problems.append(f"{kind}: exits {run.exits} != {ref.exits}")
        if not run.state.same_as(ref.state):
            problems.append(f"{kind}: final state differs")
        for k, (a, b) in enumerate(zip(run.results, ref.results)):
            if a.fired != b.fired:
                problems.append(f"{kind}: block #{k} fired {sorted(a.fired)} != {sorted(b.fired)}")
            if a.regwrites != b.regwrites or a.stores != b.stores:
                problems.append(f"{kind}: block #{k} writes differ")
    return problems


@dataclass
class FuzzReport:
    programs: int = 0
    blocks: int = 0
    executed: int = 0
    failures: list = field(default_factory=list)


def fuzz(seed: int, programs: int, max_blocks: int = 6, stop_on_failure: bool = False) -> FuzzReport:
    rng = random.Random(seed)
    rep = FuzzReport()
    for _ in range(programs):
        blocks = random_program(rng)
        state = random_state(rng)
        rep.programs += 1
        rep.blocks += len(blocks)
        problems = check_program(blocks, state, max_blocks)
        rep.executed += len(run_program(blocks, state, max_blocks=max_blocks).exits)
        if problems:
            rep.failures.append((blocks, state, problems))
            if stop_on_failure:
                break
    return rep
