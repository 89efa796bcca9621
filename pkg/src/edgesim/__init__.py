"""Cycle-level simulator of a small EDGE core and its two dataflow schedulers."""

from .assembler import HALT, assemble, disassemble
from .isa import Block, Instruction, Opcode, decode_instruction, encode_instruction
from .pipeline import Core, CoreConfig, run_block, run_program_timed
from .refinterp import ArchState, interpret_block, run_program

__version__ = "0.1.0"

__all__ = [
    "HALT", "assemble", "disassemble", "Block", "Instruction", "Opcode",
    "decode_instruction", "encode_instruction", "Core", "CoreConfig", "run_block",
    "run_program_timed", "ArchState", "interpret_block", "run_program",
]
