from __future__ import annotations

import pytest

from edgesim.assembler import assemble
from edgesim.refinterp import ArchState

# (criterion number, one-line verdict), filled in by test_acceptance
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])

# the first example block with its two successors
SAMPLE = """\
blk0:
    READ R0 T[2R]
    READ R7 T[2L]
    ADD T[3L]
    TLEI #5 B[1P]
    BRO.T B1 blk1
    BRO.F B1 blk2
blk1:
    BRO HALT
blk2:
    BRO HALT
"""

# same block with the READ feeding the left operand placed first
SAMPLE_LEFT_FIRST = """\
blk0:
    READ R7 T[2L]
    READ R0 T[2R]
    ADD T[3L]
    TLEI #5 B[1P]
    BRO.T B1 blk1
    BRO.F B1 blk2
"""


def chain_text(k: int, op: str = "ADDI #1") -> str:
    """READ, then ``k`` dependent single-cycle ops, then an unconditional branch."""
    lines = ["chain:", "    READ R1 T[1L]"]
    for i in range(1, k + 1):
        dst = f"T[{i + 1}L]" if i < k else "W[R2]"
        lines.append(f"    {op} {dst}")
    lines.append("    BRO HALT")
    return "\n".join(lines) + "\n"


def broadcast_text(k: int, delay: int | None = None) -> str:
    """A test broadcasting on channel 1 to ``k`` listeners; the taken branch listens last.

    ``delay`` ADDI #0 ops sit between the READ and the test so that the
    broadcast fires after the whole block is decoded (default: ``k``).
    """
    if delay is None:
        delay = k
    lines = ["bcast:", "    READ R0 T[1L]"]
    lines += [f"    ADDI #0 T[{i + 2}L]" for i in range(delay)]
    lines.append("    TLEI #5 B[1P]")
    lines += ["    NOP.F B1"] * (k - 2)
    lines += ["    BRO.F B1 HALT", "    BRO.T B1 HALT"]
    return "\n".join(lines) + "\n"


@pytest.fixture
def sample():
    return assemble(SAMPLE)


@pytest.fixture
def sample_state():
    st = ArchState()
    st.regs[0] = 2
    st.regs[7] = 3
    return st
