from __future__ import annotations

import pytest

from edgesim.errors import DoubleDecode, ModelAssertion
from edgesim.isa import R0, R1, RF, RT, Slot, decoded_ready_state
from edgesim.metrics import predicted_drain_cycles
from edgesim.sched.core import Event
from edgesim.sched.incremental import IncrementalScheduler


def decode_pairs(s, block):
    """Front end: one even and one odd instruction per cycle."""
    n = len(block.instructions)
    for k in range(0, n, 2):
        for iid in range(k, min(k + 2, n)):
            insn = block.instructions[iid]
            drdys, dbid = decoded_ready_state(insn)
            s.decode(iid, drdys, dbid, insn.listen_slot, insn.opcode.is_memory)
        s.step()


def add_ardys(s):
    return s.banks[0].entry(1)


class TestDecode:
    def test_primes_the_pump(self, sample):
        s = IncrementalScheduler()
        decode_pairs(s, sample[0])
        assert list(s.dcrdyq) == [0, 1]
        assert [i for i, _ in s.brq[1]] == [4, 5]
        assert s.banks[0].entry(1) == (1, 0b1100, 0, 0)

    def test_double_decode(self):
        s = IncrementalScheduler()
        s.decode(0, 0b1111, 0)
        s.step()
        with pytest.raises(DoubleDecode):
            s.decode(0, 0b1111, 0)

    def test_one_decode_per_bank_per_cycle(self):
        s = IncrementalScheduler()
        s.decode(0, 0b1111, 0)
        with pytest.raises(ModelAssertion):
            s.decode(2, 0b1111, 0)


class TestWalkthrough:
    """READ, READ, ADD, TLEI, BRO.T, BRO.F with R0=2, R7=3."""

    def test_replay(self, sample):
        s = IncrementalScheduler()
        decode_pairs(s, sample[0])
        trace = []

        iid = s.select()
        s.step([Event.targeted(2, R1)])        # READ R0 -> ADD operand #1
        trace.append((iid, add_ardys(s)[3], s.peek()))

        iid = s.select()
        s.step([Event.targeted(2, R0)])        # READ R7 -> ADD operand #0
        trace.append((iid, add_ardys(s)[3], s.peek()))

        iid = s.select()
        s.step([Event.targeted(3, R0)])        # ADD -> TLEI
        trace.append((iid, add_ardys(s)[3], s.peek()))

        iid = s.select()
        s.step()                               # TLEI in IS: no IS-stage events
        trace.append((iid, add_ardys(s)[3], s.peek()))

        s.select()
        s.step([Event.broadcast(1, RT)])       # TLEI true, from EX
        trace.append((None, add_ardys(s)[3], s.peek()))

        assert trace == [
            (0, 0b1101, 1),
            (1, 0b1111, 2),
            (2, 0b1111, 3),
            (3, 0b1111, None),
            (None, 0b1111, 4),
        ]
        assert s.select() == 4
        assert s.banks[1].entry(2)[2:] == (1, 0b1011)       # BRO.F: 'b1011 | 'b1000
        assert s.banks[1].merged(2) != 0b1111
        assert s.broadcast_drain_cycles == 1


class TestProcessEvent:
    def test_examples(self):
        s = IncrementalScheduler()
        s.decode(2, 0b1100, 0)
        assert s.process_event(Event.targeted(2, R1)) is None
        assert s.banks[0].entry(1) == (1, 0b1100, 1, 0b1101)
        s.banks[0].end_cycle()
        assert s.process_event(Event.targeted(2, R0)) == 2

    def test_undecoded_entry(self):
        s = IncrementalScheduler()
        assert s.process_event(Event.targeted(7, R0)) is None
        assert s.banks[1].entry(3) == (0, 0, 1, R0)
        assert s.events_to_undecoded == 1


class TestSelect:
    def test_even_bank_wins_odd_goes_to_isrdyq(self):
        s = IncrementalScheduler()
        s.decode(2, 0b1110, 0)
        s.decode(5, 0b1110, 0)
        s.step([Event.targeted(5, R1), Event.targeted(2, R1)])
        assert s.select() == 2
        assert list(s.isrdyq) == [5]
        s.step()
        assert s.select() == 5

    def test_queue_priority(self):
        s = IncrementalScheduler()
        s.isrdyq.append(7)
        s.lsrdyq.append(9)
        s.dcrdyq.append(1)
        assert [s.select(), s.select(), s.select(), s.select()] == [7, 9, 1, None]

    def test_no_reissue(self):
        s = IncrementalScheduler()
        s.dcrdyq.extend([3, 3])
        s.select()
        with pytest.raises(ModelAssertion):
            s.select()


class TestBankConflicts:
    def test_same_parity_deferred(self):
        s = IncrementalScheduler()
        s.decode(2, 0b1110, 0)
        s.step()
        s.decode(4, 0b1110, 0)
        s.step()
        a, b = Event.targeted(2, R1), Event.targeted(4, R1)
        assert s.step([a, b]) == [a]
        assert s.bank_conflict_stalls == 1
        assert s.step() == [b]
        assert s.events_applied == 2

    def test_deferred_beats_new(self):
        s = IncrementalScheduler()
        a, b, c = (Event.targeted(i, R0) for i in (2, 4, 6))
        s.step([a, b])
        assert s.step([c]) == [b]
        assert s.step() == [c]
        assert s.bank_conflict_stalls == 2


def listeners(s, iids, channel=1):
    for iid in iids:
        s.decode(iid, 0b0111, channel, Slot.PRED)
        s.step()


def drain(s, evt, limit=100):
    s.step([evt])
    for _ in range(limit):
        if not s.busy():
            return
        s.step()
    raise AssertionError("drain did not finish")


class TestBroadcastDrain:
    def test_fig1_drain(self, sample):
        s = IncrementalScheduler()
        decode_pairs(s, sample[0])
        drain(s, Event.broadcast(1, RT))
        assert s.broadcast_drain_cycles == 1
        assert s.select() == 4
        assert s.select() == 0      # the READs still wait in DCRDYQ

    def test_empty_queue(self):
        s = IncrementalScheduler()
        s.step([Event.broadcast(3, RT)])
        assert not s.busy()
        assert s.broadcast_drain_cycles == 0

    def test_eight_even_listeners(self):
        s = IncrementalScheduler()
        iids = [2 * k for k in range(8)]
        listeners(s, iids)
        drain(s, Event.broadcast(1, RT))
        assert s.broadcast_drain_cycles == 8 == predicted_drain_cycles(iids)
        assert s.drain_injections == 8

    @pytest.mark.parametrize("iids", [[0, 1], [0, 1, 2, 3], [1, 3, 0, 2], [0, 2, 1, 3, 5, 4]])
    def test_mixed_parity(self, iids):
        s = IncrementalScheduler()
        listeners(s, iids)
        drain(s, Event.broadcast(1, RF))
        assert s.broadcast_drain_cycles == predicted_drain_cycles(iids)

    def test_pipeline_events_win(self):
        s = IncrementalScheduler()
        listeners(s, [2])
        s.decode(4, 0b1110, 0)
        s.step()
        s.step([Event.broadcast(1, RT), Event.targeted(4, R1)])
        assert s.drain_injections == 0
        s.step()
        assert s.drain_injections == 1

    def test_operand_broadcast(self):
        s = IncrementalScheduler()
        s.decode(2, 0b1101, 2, Slot.OP0)
        s.step()
        drain(s, Event.broadcast(2, R0))
        assert s.select() == 2


class TestResetRefresh:
    def test_refresh_reprimes(self, sample):
        s = IncrementalScheduler()
        decode_pairs(s, sample[0])
        for _ in range(2):
            s.select()
        s.step([Event.targeted(2, R1)])
        s.refresh()
        assert list(s.dcrdyq) == [0, 1]
        assert s.banks[0].entry(1)[:2] == (1, 0b1100)
        assert s.banks[0].av == 0 and s.banks[1].av == 0
        assert [i for i, _ in s.brq[1]] == [4, 5]

    def test_refresh_discards_drain(self):
        s = IncrementalScheduler()
        listeners(s, [0, 2, 4, 6])
        s.step([Event.broadcast(1, RT)])
        assert s.busy()
        s.refresh()
        assert not s.busy()

    def test_reset(self, sample):
        s = IncrementalScheduler()
        decode_pairs(s, sample[0])
        s.reset()
        assert s.select() is None
        assert not s.decoded and all(not q for q in s.brq.values())
