from __future__ import annotations

import random
from dataclasses import replace
from types import SimpleNamespace

import pytest

from edgesim.assembler import _parse_insn, assemble, disassemble, format_instruction
from edgesim.errors import BlockTooLarge, DanglingLabel, ParseError, SlotConflict, UnreachableSlot
from edgesim.fuzz import random_block
from edgesim.isa import Opcode, Pred, Slot, Target

from .conftest import SAMPLE
from .test_isa import grid, random_instruction


EXITS = SimpleNamespace(exits=[f"L{i}" for i in range(512)])


def text_round_trip(insn):
    parsed, label = _parse_insn(format_instruction(insn, EXITS), 1)
    # exit index and lsid belong to the block, not the line
    if insn.opcode is Opcode.BRO and label != f"L{insn.exit}":
        return False
    return parsed == replace(insn, exit=0, lsid=0)


class TestAssemble:
    def test_fig1(self, sample):
        assert [b.name for b in sample] == ["blk0", "blk1", "blk2"]
        b = sample[0]
        assert b.instructions[0].opcode is Opcode.READ
        assert b.instructions[0].targets == (Target.op1(2),)
        assert b.instructions[1].targets == (Target.op0(2),)
        assert b.instructions[3].imm == 5 and b.instructions[3].bid == 1
        assert b.instructions[4].pred is Pred.TRUE and b.instructions[4].listen_slot is Slot.PRED
        assert b.exit_label(4) == "blk1" and b.exit_label(5) == "blk2"

    def test_lsids_follow_text_order(self):
        b = assemble("m:\n READ R28 T[3L]\n READ R29 T[2L]\n ST\n LD W[R1]\n"
                     " READ R5 T[2R]\n BRO HALT\n")[0]
        assert b.instructions[2].lsid == 0
        assert b.instructions[3].lsid == 1

    def test_comments_and_blank_lines(self):
        blocks = assemble("; leading comment\n\nb:\n    BRO HALT   ; done\n")
        assert len(blocks) == 1

    def test_unknown_mnemonic_has_line(self):
        with pytest.raises(ParseError) as e:
            assemble("b:\n    READ R1\n    FROB T[0L]\n    BRO HALT\n")
        assert e.value.line == 3

    def test_dangling_label(self):
        with pytest.raises(DanglingLabel):
            assemble("b:\n    BRO nowhere\n")
        assert assemble("b:\n    BRO nowhere\n", check_labels=False)[0].exits == ("nowhere",)

    def test_too_large(self):
        with pytest.raises(BlockTooLarge):
            assemble("b:\n" + "    NOP\n" * 32 + "    BRO HALT\n")

    def test_empty_block(self):
        with pytest.raises(ParseError):
            assemble("a:\nb:\n    BRO HALT\n")

    def test_wrong_broadcast_suffix(self):
        with pytest.raises(ParseError):
            assemble("b:\n    READ R0 T[1L]\n    TLEI #1 B[1L]\n    BRO HALT\n")
        with pytest.raises(ParseError):
            assemble("b:\n    READ R0 B[1R]\n    BRO HALT\n")

    def test_structural_errors_surface(self):
        with pytest.raises(UnreachableSlot):
            assemble("b:\n    ADD W[R1]\n    BRO HALT\n")
        with pytest.raises(SlotConflict):
            assemble("b:\n    READ R0 T[1R]\n    MOV W[R1]\n    BRO HALT\n")

    def test_duplicate_block(self):
        with pytest.raises(ParseError):
            assemble("b:\n    BRO HALT\nb:\n    BRO HALT\n")


class TestRoundTrip:
    def test_fig1_text(self, sample):
        assert disassemble(sample) == SAMPLE
        assert assemble(disassemble(sample)) == sample

    def test_instruction_grid(self):
        for insn in grid():
            assert text_round_trip(insn), format_instruction(insn)

    def test_random_instructions(self):
        rng = random.Random(11)
        for _ in range(10_000):
            insn = random_instruction(rng)
            assert text_round_trip(insn), format_instruction(insn)

    def test_random_blocks(self):
        rng = random.Random(3)
        for i in range(300):
            b = random_block(rng, f"b{i}")
            assert assemble(disassemble([b])) == [b]
