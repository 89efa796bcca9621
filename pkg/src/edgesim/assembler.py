"""Text assembler/disassembler for EDGE blocks.

Syntax, one instruction per line, ``;`` starts a comment::

    blk0:
        READ R0 T[2R]        ; read global R0 into operand #1 of instruction 2
        READ R7 T[2L]
        ADD T[3L]
        TLEI #5 B[1P]        ; broadcast the predicate on channel 1
        BRO.T B1 blk1        ; listen on channel 1, branch to blk1
        BRO.F B1 blk2

Operands: ``R<n>`` (READ source), ``#<imm>``, ``B<n>`` (listen; the slot is
the predicate for predicated instructions, operand #0 otherwise; ``B<n>L`` /
``B<n>P`` make it explicit) and a bare label for BRO.  Targets: ``T[<iid>L]``,
``T[<iid>R]``, ``T[<iid>P]``, ``W[R<n>]``; the broadcast send is ``B[<ch>P]``
for tests and ``B[<ch>L]`` for value producers.
"""

from __future__ import annotations

import re
from dataclasses import replace

from .errors import (
    BlockTooLarge,
    DanglingLabel,
    EdgeError,
    ParseError,
)
from .isa import (
    MAX_BLOCK,
    Block,
    Field1,
    Instruction,
    Opcode,
    Pred,
    Slot,
    Target,
    TargetKind,
    validate_block,
    validate_instruction,
)

HALT = "HALT"

_LABEL = re.compile(r"^([A-Za-z_][\w.]*):$")
_TARGET = re.compile(r"^T\[(\d+)([LRP])\]$")
_WRITE = re.compile(r"^W\[R(\d+)\]$")
_SEND = re.compile(r"^B\[(\d)([LRP])\]$")
_LISTEN = re.compile(r"^B(\d)([LP]?)$")
_REG = re.compile(r"^R(\d+)$")
_IMM = re.compile(r"^#(-?(?:0x[0-9a-fA-F]+|\d+))$")
_IDENT = re.compile(r"^[A-Za-z_][\w.]*$")

_SUFFIX_KIND = {"L": TargetKind.OP0, "R": TargetKind.OP1, "P": TargetKind.PRED}
_KIND_SUFFIX = {v: k for k, v in _SUFFIX_KIND.items()}


def _parse_insn(text: str, lineno: int) -> tuple[Instruction, str | None]:
    tokens = text.split()
    head = tokens[0].upper()
    mnemonic, _, suffix = head.partition(".")
    try:
        op = Opcode[mnemonic]
    except KeyError:
        raise ParseError(lineno, f"unknown mnemonic {tokens[0]!r}") from None
    pred = {"": Pred.NONE, "T": Pred.TRUE, "F": Pred.FALSE}.get(suffix)
    if pred is None:
        raise ParseError(lineno, f"bad predicate suffix {suffix!r}")

    kw = {}
    targets = []
    label = None
    for tok in tokens[1:]:
        if m := _TARGET.match(tok):
            targets.append(Target(_SUFFIX_KIND[m[2]], int(m[1])))
        elif m := _WRITE.match(tok):
            targets.append(Target.reg(int(m[1])))
        elif m := _SEND.match(tok):
            if "bid" in kw:
                raise ParseError(lineno, "more than one broadcast send")
            ch, sfx = int(m[1]), m[2]
            want = "P" if op.is_test else "L"
            if sfx != want:
                raise ParseError(lineno, f"{op.name} broadcasts must be written B[{ch}{want}]")
            kw["bid"] = ch
        elif m := _LISTEN.match(tok):
            if "listen" in kw:
                raise ParseError(lineno, "more than one broadcast listen")
            kw["listen"] = int(m[1])
            if m[2]:
                kw["listen_slot"] = Slot.OP0 if m[2] == "L" else Slot.PRED
            else:
                kw["listen_slot"] = Slot.PRED if pred is not Pred.NONE else Slot.OP0
        elif m := _REG.match(tok):
            if op.field1 is not Field1.REG:
                raise ParseError(lineno, f"{op.name} takes no register operand")
            kw["reg"] = int(m[1])
        elif m := _IMM.match(tok):
            if op.field1 is not Field1.IMM:
                raise ParseError(lineno, f"{op.name} takes no immediate")
            kw["imm"] = int(m[1], 0)
        elif _IDENT.match(tok) and op is Opcode.BRO and label is None:
            label = tok
        else:
            raise ParseError(lineno, f"unexpected token {tok!r}")
    if op is Opcode.BRO and label is None:
        raise ParseError(lineno, "BRO needs an exit label")
    if op.field1 is Field1.REG and "reg" not in kw:
        raise ParseError(lineno, "READ needs a source register")
    if op.field1 is Field1.IMM and "imm" not in kw:
        raise ParseError(lineno, f"{op.name} needs an immediate")
    insn = Instruction(op, pred, tuple(targets), **kw)
    try:
        validate_instruction(insn)
    except EdgeError as e:
        raise ParseError(lineno, str(e)) from e
    return insn, label


def build_block(name: str, rows, lineno: int = 0) -> Block:
    """Block from ``(instruction, exit label or None)`` rows in iid order.

    Exit indices and lsids are (re)assigned here: exits in order of first
    use, lsids in iid order.
    """
    if not rows:
        raise ParseError(lineno, f"empty block {name!r}")
    if len(rows) > MAX_BLOCK:
        raise BlockTooLarge(f"{name}: {len(rows)} instructions (max {MAX_BLOCK})")
    exits: list[str] = []
    insns = []
    lsid = 0
    for insn, label in rows:
        kw = {}
        if label is not None:
            if label not in exits:
                exits.append(label)
            kw["exit"] = exits.index(label)
        if insn.opcode.is_memory:
            kw["lsid"] = lsid
            lsid += 1
        insns.append(replace(insn, **kw))
    block = Block(name, tuple(insns), tuple(exits))
    validate_block(block)
    return block


def assemble(text: str, check_labels: bool = True) -> list[Block]:
    """Parse assembly text into validated blocks.

    With ``check_labels`` every branch exit must name a block in ``text`` or
    ``HALT``.
    """
    blocks: list[Block] = []
    name = None
    start_line = 0
    rows: list = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        if m := _LABEL.match(line):
            if name is not None:
                blocks.append(build_block(name, rows, start_line))
            name, start_line, rows = m[1], lineno, []
            if any(b.name == name for b in blocks):
                raise ParseError(lineno, f"duplicate block label {name!r}")
            continue
        if name is None:
            raise ParseError(lineno, "instruction outside a block")
        rows.append(_parse_insn(line, lineno))
        if len(rows) > MAX_BLOCK:
            raise BlockTooLarge(f"{name}: more than {MAX_BLOCK} instructions (line {lineno})")
    if name is not None:
        blocks.append(build_block(name, rows, start_line))

    if check_labels:
        known = {b.name for b in blocks} | {HALT}
        for b in blocks:
            for label in b.exits:
                if label not in known:
                    raise DanglingLabel(f"{b.name}: exit to undefined label {label!r}")
    return blocks


def format_instruction(insn: Instruction, block: Block | None = None) -> str:
    op = insn.opcode
    parts = [op.name + {Pred.NONE: "", Pred.TRUE: ".T", Pred.FALSE: ".F"}[insn.pred]]
    if op.field1 is Field1.REG:
        parts.append(f"R{insn.reg}")
    if op.field1 is Field1.IMM:
        parts.append(f"#{insn.imm}")
    if insn.listen:
        implied = Slot.PRED if insn.pred is not Pred.NONE else Slot.OP0
        sfx = "" if insn.listen_slot is implied else ("P" if insn.listen_slot is Slot.PRED else "L")
        parts.append(f"B{insn.listen}{sfx}")
    if op is Opcode.BRO:
        parts.append(block.exits[insn.exit] if block is not None else f"@{insn.exit}")
    for t in insn.targets:
        if t.kind is TargetKind.REG:
            parts.append(f"W[R{t.index}]")
        else:
            parts.append(f"T[{t.index}{_KIND_SUFFIX[t.kind]}]")
    if insn.bid:
        parts.append(f"B[{insn.bid}{'P' if op.is_test else 'L'}]")
    return " ".join(parts)


def disassemble(blocks) -> str:
    lines = []
    for b in blocks:
        lines.append(f"{b.name}:")
        for insn in b.instructions:
            lines.append("    " + format_instruction(insn, b))
    return "\n".join(lines) + "\n"

