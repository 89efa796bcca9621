from __future__ import annotations

import random

import pytest

from edgesim.fuzz import BASE_REGS, check_program, fuzz, random_block, random_program, random_state
from edgesim.isa import MAX_BLOCK, NUM_CHANNELS, Opcode, Pred, TargetKind


class TestGenerator:
    def test_blocks_are_well_formed(self):
        rng = random.Random(5)
        for size in list(range(1, MAX_BLOCK + 1)) * 3:
            b = random_block(rng, size=size)
            # a branch pair reserves room it may not fully use
            assert 1 <= len(b.instructions) <= size
            lsids = [b.instructions[i].lsid for i in b.memory_ops]
            assert lsids == list(range(len(lsids)))

    def test_coverage(self):
        rng = random.Random(8)
        blocks = [random_block(rng) for _ in range(400)]
        ops = [i.opcode for b in blocks for i in b.instructions]
        for op in (Opcode.LD, Opcode.ST, Opcode.TLEI, Opcode.TLT, Opcode.TEQ, Opcode.ADD, Opcode.MOV):
            assert op in ops
        bids = {i.bid for b in blocks for i in b.instructions if i.bid}
        assert bids == set(range(1, NUM_CHANNELS + 1))
        assert any(i.pred is not Pred.NONE and i.opcode is not Opcode.BRO
                   for b in blocks for i in b.instructions)

    def test_base_registers_never_written(self):
        rng = random.Random(2)
        for _ in range(200):
            for b in random_program(rng):
                for insn in b.instructions:
                    assert not any(t.kind is TargetKind.REG and t.index in BASE_REGS for t in insn.targets)

    def test_state(self):
        st = random_state(random.Random(1))
        assert all(st.regs[r] % 4 == 0 for r in BASE_REGS)

    def test_deterministic(self):
        a = random_program(random.Random(42))
        b = random_program(random.Random(42))
        assert [x.instructions for x in a] == [y.instructions for y in b]


class TestEquivalence:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_fuzz(self, seed):
        rep = fuzz(seed, 150)
        assert rep.programs == 150 and rep.blocks >= 150
        assert rep.failures == []

    def test_check_program_detects_difference(self, sample, sample_state, monkeypatch):
        from edgesim import fuzz as fz

        real = fz.run_program_timed

        def skewed(blocks, state, cfg, **kw):
            st = state.copy()
            st.regs[1] ^= 1
            return real(blocks, st, cfg, **kw)

        monkeypatch.setattr(fz, "run_program_timed", skewed)
        problems = check_program(sample, sample_state)
        assert any("final state differs" in p for p in problems)
