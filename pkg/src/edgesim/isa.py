"""EDGE instruction subset, target-form encoding and the block container.

Word layout (32 bits)::

    31      25 24 23 22 21 20    18 17       9 8        0
    | opcode  | pred | bid | binput |    t1     |    t0    |

A 9-bit target field is ``kind[8:6] | payload[5:0]``.  Opcodes that carry an
immediate, a register number, a load/store id or an exit index keep that
value in the t1 field instead of a second target.

``binput`` is ``operand_flag[2] | channel[1:0]``: channel 0 means the
instruction listens to no broadcast; with a channel, ``operand_flag`` selects
operand #0 (1) or the predicate (0) as the listened slot.  Code ``0b100`` is
reserved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

from .errors import (
    BlockError,
    BlockTooLarge,
    InvalidInstruction,
    InvalidOpcode,
    InvalidTargetKind,
    SlotConflict,
    TargetOutOfRange,
    TooManyTargets,
    UnencodableImmediate,
    UnreachableSlot,
)

MAX_BLOCK = 32
NUM_REGS = 32
NUM_CHANNELS = 3
WORD_MASK = 0xFFFF_FFFF

IMM_BITS = 9
IMM_MIN = -(1 << (IMM_BITS - 1))
IMM_MAX = (1 << (IMM_BITS - 1)) - 1
EXIT_MAX = (1 << 9) - 1

# ready-state bit positions, MSB->LSB = [RT, RF, R0, R1]
RT = 0b1000
RF = 0b0100
R0 = 0b0010
R1 = 0b0001
ALL_READY = 0b1111


class Result(Enum):
    NONE = "none"
    VALUE = "value"
    PRED = "pred"


class Field1(Enum):
    """What the t1 field holds for an opcode."""
    TARGET = "target"
    IMM = "imm"
    REG = "reg"
    LSID = "lsid"
    EXIT = "exit"


class Opcode(IntEnum):
    NOP = 0
    READ = 1
    MOV = 2
    ADD = 3
    SUB = 4
    AND = 5
    OR = 6
    XOR = 7
    ADDI = 8
    TLEI = 9
    TLT = 10
    TEQ = 11
    BRO = 12
    LD = 13
    ST = 14

    @property
    def n_operands(self) -> int:
        return _OPINFO[self][0]

    @property
    def result(self) -> Result:
        return _OPINFO[self][1]

    @property
    def field1(self) -> Field1:
        return _OPINFO[self][2]

    @property
    def is_test(self) -> bool:
        return self.result is Result.PRED

    @property
    def is_memory(self) -> bool:
        return self in (Opcode.LD, Opcode.ST)

    @property
    def max_targets(self) -> int:
        if self.result is Result.NONE:
            return 0
        return 2 if self.field1 is Field1.TARGET else 1


_OPINFO = {
    Opcode.NOP: (0, Result.NONE, Field1.TARGET),
    Opcode.READ: (0, Result.VALUE, Field1.REG),
    Opcode.MOV: (1, Result.VALUE, Field1.TARGET),
    Opcode.ADD: (2, Result.VALUE, Field1.TARGET),
    Opcode.SUB: (2, Result.VALUE, Field1.TARGET),
    Opcode.AND: (2, Result.VALUE, Field1.TARGET),
    Opcode.OR: (2, Result.VALUE, Field1.TARGET),
    Opcode.XOR: (2, Result.VALUE, Field1.TARGET),
    Opcode.ADDI: (1, Result.VALUE, Field1.IMM),
    Opcode.TLEI: (1, Result.PRED, Field1.IMM),
    Opcode.TLT: (2, Result.PRED, Field1.TARGET),
    Opcode.TEQ: (2, Result.PRED, Field1.TARGET),
    Opcode.BRO: (0, Result.NONE, Field1.EXIT),
    Opcode.LD: (1, Result.VALUE, Field1.LSID),
    Opcode.ST: (2, Result.NONE, Field1.LSID),
}


class Pred(IntEnum):
    NONE = 0
    TRUE = 1
    FALSE = 2


class TargetKind(IntEnum):
    NONE = 0
    OP0 = 1
    OP1 = 2
    PRED = 3
    REG = 4


class Slot(IntEnum):
    """An input slot of an instruction (same codes as the target kinds)."""
    OP0 = 1
    OP1 = 2
    PRED = 3


SLOT_BIT = {Slot.OP0: R0, Slot.OP1: R1}


@dataclass(frozen=True)
class Target:
    kind: TargetKind
    index: int

    @property
    def slot(self) -> Slot | None:
        if self.kind in (TargetKind.OP0, TargetKind.OP1, TargetKind.PRED):
            return Slot(int(self.kind))
        return None

    @classmethod
    def op0(cls, iid: int) -> Target:
        return cls(TargetKind.OP0, iid)

    @classmethod
    def op1(cls, iid: int) -> Target:
        return cls(TargetKind.OP1, iid)

    @classmethod
    def pred(cls, iid: int) -> Target:
        return cls(TargetKind.PRED, iid)

    @classmethod
    def reg(cls, regnum: int) -> Target:
        return cls(TargetKind.REG, regnum)


@dataclass(frozen=True)
class Instruction:
    opcode: Opcode
    pred: Pred = Pred.NONE
    targets: tuple[Target, ...] = ()
    bid: int = 0            # broadcast send channel, 0 = none
    listen: int = 0         # broadcast listen channel, 0 = none
    listen_slot: Slot | None = None
    imm: int = 0
    reg: int = 0            # READ source register
    lsid: int = 0
    exit: int = 0           # BRO: index into Block.exits

    def consumed_slots(self) -> tuple[Slot, ...]:
        slots = []
        if self.pred is not Pred.NONE:
            slots.append(Slot.PRED)
        if self.opcode.n_operands >= 1:
            slots.append(Slot.OP0)
        if self.opcode.n_operands >= 2:
            slots.append(Slot.OP1)
        return tuple(slots)

    @property
    def broadcast_slot(self) -> Slot | None:
        """Slot that listeners of this instruction's broadcast receive."""
        if not self.bid:
            return None
        return Slot.PRED if self.opcode.is_test else Slot.OP0


def validate_instruction(insn: Instruction) -> None:
    op = insn.opcode
    if not isinstance(op, Opcode):
        raise InvalidOpcode(f"not an opcode: {op!r}")
    if len(insn.targets) > op.max_targets:
        raise TooManyTargets(f"{op.name} takes at most {op.max_targets} target(s), got {len(insn.targets)}")
    if len(set(insn.targets)) != len(insn.targets):
        raise InvalidInstruction(f"{op.name}: duplicate target")
    for t in insn.targets:
        if t.kind is TargetKind.NONE:
            raise InvalidInstruction("NONE is not a target")
        if not 0 <= t.index < 32:
            raise TargetOutOfRange(f"target index {t.index} outside 0..31")
        if op.is_test and t.kind is not TargetKind.PRED:
            raise InvalidInstruction(f"{op.name} produces a predicate; cannot target {t.kind.name}")
        if not op.is_test and t.kind is TargetKind.PRED:
            raise InvalidInstruction(f"{op.name} produces a value; cannot target a predicate")
    if not 0 <= insn.bid <= NUM_CHANNELS:
        raise InvalidInstruction(f"broadcast channel {insn.bid} outside 0..3")
    if insn.bid and op.result is Result.NONE:
        raise InvalidInstruction(f"{op.name} has no result to broadcast")
    if not 0 <= insn.listen <= NUM_CHANNELS:
        raise InvalidInstruction(f"listen channel {insn.listen} outside 0..3")
    if (insn.listen == 0) != (insn.listen_slot is None):
        raise InvalidInstruction("listen channel and listened slot must be given together")
    if insn.listen_slot is Slot.PRED and insn.pred is Pred.NONE:
        raise InvalidInstruction("unpredicated instruction cannot listen for a predicate")
    if insn.listen_slot is Slot.OP0 and op.n_operands < 1:
        raise InvalidInstruction(f"{op.name} has no operand #0 to listen on")
    if insn.listen_slot is Slot.OP1:
        raise InvalidInstruction("broadcast operands are delivered to operand #0 only")
    f1 = op.field1
    if f1 is Field1.IMM:
        if not IMM_MIN <= insn.imm <= IMM_MAX:
            raise UnencodableImmediate(f"immediate {insn.imm} outside {IMM_MIN}..{IMM_MAX}")
    elif insn.imm:
        raise InvalidInstruction(f"{op.name} takes no immediate")
    if f1 is Field1.REG:
        if not 0 <= insn.reg < NUM_REGS:
            raise InvalidInstruction(f"register {insn.reg} outside 0..31")
    elif insn.reg:
        raise InvalidInstruction(f"{op.name} takes no source register")
    if f1 is Field1.LSID:
        if not 0 <= insn.lsid < MAX_BLOCK:
            raise InvalidInstruction(f"lsid {insn.lsid} outside 0..31")
    elif insn.lsid:
        raise InvalidInstruction(f"{op.name} is not a memory instruction")
    if f1 is Field1.EXIT:
        if not 0 <= insn.exit <= EXIT_MAX:
            raise InvalidInstruction(f"exit index {insn.exit} out of range")
    elif insn.exit:
        raise InvalidInstruction(f"{op.name} is not a branch")


# -- binary encoding ------------------------------------------------------------

def _encode_target(t: Target | None) -> int:
    if t is None:
        return 0
    return (int(t.kind) << 6) | t.index


def _decode_target(f: int) -> Target | None:
    kind, payload = (f >> 6) & 0b111, f & 0b111111
    if kind > TargetKind.REG:
        raise InvalidTargetKind(f"reserved target kind {kind:#05b}")
    if payload >= 32 or (kind == TargetKind.NONE and payload):
        raise InvalidTargetKind(f"bad target payload {payload} for kind {kind}")
    if kind == TargetKind.NONE:
        return None
    return Target(TargetKind(kind), payload)


def encode_instruction(insn: Instruction) -> int:
    validate_instruction(insn)
    op = insn.opcode
    t0 = _encode_target(insn.targets[0] if insn.targets else None)
    f1 = op.field1
    if f1 is Field1.TARGET:
        t1 = _encode_target(insn.targets[1] if len(insn.targets) > 1 else None)
    elif f1 is Field1.IMM:
        t1 = insn.imm & 0x1FF
    elif f1 is Field1.REG:
        t1 = insn.reg
    elif f1 is Field1.LSID:
        t1 = insn.lsid
    else:
        t1 = insn.exit
    binput = 0
    if insn.listen:
        binput = (4 if insn.listen_slot is Slot.OP0 else 0) | insn.listen
    return (int(op) << 25) | (int(insn.pred) << 23) | (insn.bid << 21) | (binput << 18) | (t1 << 9) | t0


def decode_instruction(word: int) -> Instruction:
    word &= WORD_MASK
    code = word >> 25
    try:
        op = Opcode(code)
    except ValueError:
        raise InvalidOpcode(f"opcode {code} is not defined") from None
    pcode = (word >> 23) & 0b11
    if pcode == 3:
        raise InvalidInstruction("reserved predicate code 0b11")
    bid = (word >> 21) & 0b11
    binput = (word >> 18) & 0b111
    listen, listen_slot = binput & 0b11, None
    if listen:
        listen_slot = Slot.OP0 if binput & 0b100 else Slot.PRED
    elif binput:
        raise InvalidInstruction("reserved broadcast input code 0b100")
    f1, f0 = (word >> 9) & 0x1FF, word & 0x1FF
    targets = []
    t0 = _decode_target(f0)
    if t0 is not None:
        targets.append(t0)
    kw = {}
    if op.field1 is Field1.TARGET:
        t1 = _decode_target(f1)
        if t1 is not None:
            targets.append(t1)
    elif op.field1 is Field1.IMM:
        kw["imm"] = f1 - 0x200 if f1 & 0x100 else f1
    elif op.field1 is Field1.EXIT:
        kw["exit"] = f1
    else:
        if f1 >= 32:
            raise InvalidInstruction(f"{op.name}: field value {f1} outside 0..31")
        kw["reg" if op.field1 is Field1.REG else "lsid"] = f1
    insn = Instruction(op, Pred(pcode), tuple(targets), bid, listen, listen_slot, **kw)
    validate_instruction(insn)
    return insn


def decoded_ready_state(insn: Instruction) -> tuple[int, int]:
    """Return ``(drdys, dbid)``: pre-ready input bits and the listened channel."""
    rdys = ALL_READY
    if insn.pred is Pred.TRUE:
        rdys &= ~RT
    elif insn.pred is Pred.FALSE:
        rdys &= ~RF
    if insn.opcode.n_operands >= 1:
        rdys &= ~R0
    if insn.opcode.n_operands >= 2:
        rdys &= ~R1
    return rdys, insn.listen


# -- blocks -------------------------------------------------------------------------

@dataclass(frozen=True)
class Block:
    name: str
    instructions: tuple[Instruction, ...]
    exits: tuple[str, ...] = ()
    _listeners: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __len__(self) -> int:
        return len(self.instructions)

    def listeners(self, channel: int) -> list[tuple[int, Slot]]:
        """(iid, slot) of every instruction listening on ``channel``, in iid order."""
        if self._listeners is None:
            table = {c: [] for c in range(1, NUM_CHANNELS + 1)}
            for iid, insn in enumerate(self.instructions):
                if insn.listen:
                    table[insn.listen].append((iid, insn.listen_slot))
            object.__setattr__(self, "_listeners", table)
        return self._listeners[channel]

    def senders(self, channel: int) -> list[int]:
        return [i for i, insn in enumerate(self.instructions) if insn.bid == channel]

    def exit_label(self, iid: int) -> str:
        return self.exits[self.instructions[iid].exit]

    @property
    def memory_ops(self) -> list[int]:
        return [i for i, insn in enumerate(self.instructions) if insn.opcode.is_memory]


def validate_block(block: Block) -> None:
    n = len(block.instructions)
    if n == 0:
        raise BlockError(f"{block.name}: empty block")
    if n > MAX_BLOCK:
        raise BlockTooLarge(f"{block.name}: {n} instructions (max {MAX_BLOCK})")
    for insn in block.instructions:
        validate_instruction(insn)

    # exit table is in first-use order over the branches, no spare entries
    first_use = []
    for insn in block.instructions:
        if insn.opcode is Opcode.BRO and insn.exit not in first_use:
            first_use.append(insn.exit)
    if first_use != list(range(len(block.exits))):
        raise BlockError(f"{block.name}: exit table does not match branch exit indices")
    if len(set(block.exits)) != len(block.exits):
        raise BlockError(f"{block.name}: duplicate exit labels")

    mem = [insn.lsid for insn in block.instructions if insn.opcode.is_memory]
    if mem != list(range(len(mem))):
        raise BlockError(f"{block.name}: lsids {mem} are not dense in block order")

    targeted = {}
    for src, insn in enumerate(block.instructions):
        for t in insn.targets:
            if t.kind is TargetKind.REG:
                continue
            if t.index >= n:
                raise TargetOutOfRange(f"{block.name}[{src}]: target {t.index} beyond block of {n}")
            slot = t.slot
            if slot not in block.instructions[t.index].consumed_slots():
                raise SlotConflict(
                    f"{block.name}[{src}]: targets {slot.name} of [{t.index}], which does not consume it")
            targeted.setdefault((t.index, slot), []).append(src)

    for iid, insn in enumerate(block.instructions):
        if insn.listen and (iid, insn.listen_slot) in targeted:
            raise SlotConflict(f"{block.name}[{iid}]: {insn.listen_slot.name} is both listened and targeted")

    for ch in range(1, NUM_CHANNELS + 1):
        lst = block.listeners(ch)
        snd = block.senders(ch)
        for s in snd:
            for iid, slot in lst:
                if block.instructions[s].broadcast_slot is not slot:
                    raise BlockError(f"{block.name}: channel {ch} sender [{s}] and listener [{iid}] disagree on slot")

    for iid, insn in enumerate(block.instructions):
        for slot in insn.consumed_slots():
            if (iid, slot) in targeted:
                continue
            if insn.listen and insn.listen_slot is slot and block.senders(insn.listen):
                continue
            raise UnreachableSlot(f"{block.name}[{iid}]: {slot.name} is awaited but nothing delivers it")
