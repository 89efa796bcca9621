from __future__ import annotations

import json
import subprocess
import sys

import pytest

from edgesim.cli import main, parse_state

from .conftest import SAMPLE


@pytest.fixture
def sample_file(tmp_path):
    src = tmp_path / "sample.s"
    src.write_text(SAMPLE)
    assert main(["asm", str(src), "-o", str(tmp_path / "sample.edgb")]) == 0
    return tmp_path / "sample.edgb"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestAsmDisasm:
    def test_round_trip(self, tmp_path, sample_file, capsys):
        code, out, _ = run(capsys, "disasm", sample_file)
        assert code == 0 and "TLEI #5 B[1P]" in out
        again = tmp_path / "again.s"
        again.write_text(out)
        assert main(["asm", str(again), "-o", str(tmp_path / "again.edgb")]) == 0
        assert (tmp_path / "again.edgb").read_bytes() == sample_file.read_bytes()

    def test_default_output_name(self, tmp_path, capsys):
        src = tmp_path / "p.s"
        src.write_text(SAMPLE)
        code, out, _ = run(capsys, "asm", src)
        assert code == 0 and (tmp_path / "p.edgb").exists() and "3 block(s)" in out

    def test_parse_error_is_user_error(self, tmp_path, capsys):
        src = tmp_path / "bad.s"
        src.write_text("b:\n    FROB T[1L]\n")
        code, _, err = run(capsys, "asm", src)
        assert code == 1 and "error" in err


class TestRun:
    @pytest.mark.parametrize("engine", ["ref", "parallel", "incremental"])
    def test_fig1(self, sample_file, capsys, engine):
        code, out, _ = run(capsys, "run", sample_file, "--engine", engine, "--regs", "R0=2,R7=3")
        assert code == 0
        assert "blk0 exit=blk1" in out and "halted" in out
        assert ("cycles=13" in out) == (engine != "ref")

    def test_false_path_from_source(self, tmp_path, capsys):
        src = tmp_path / "sample.s"
        src.write_text(SAMPLE)
        code, out, _ = run(capsys, "run", src, "--regs", "R0=9")
        assert code == 0 and "exit=blk2" in out

    def test_trace_and_stats(self, tmp_path, sample_file, capsys):
        tr, stats = tmp_path / "t.jsonl", tmp_path / "s.json"
        code, _, _ = run(capsys, "run", sample_file, "--engine", "incremental", "--regs", "R0=2,R7=3",
                         "--trace", tr, "--stats", stats)
        assert code == 0
        recs = [json.loads(line) for line in tr.read_text().splitlines()]
        assert len(recs) == 13 and recs[0]["cycle"] == 0
        js = json.loads(stats.read_text())
        assert js["cycles"] == 13 and js["blocks"] == 2 and js["bank_conflicts"] == 0
        assert js["ipc"] == pytest.approx(6 / 13, abs=1e-6)

    def test_memory_and_start(self, tmp_path, capsys):
        src = tmp_path / "m.s"
        src.write_text("skip:\n    BRO HALT\nm:\n    READ R1 T[1L]\n    LD W[R2]\n    BRO HALT\n")
        code, out, _ = run(capsys, "run", src, "--engine", "parallel", "--regs", "R1=0x10",
                           "--mem", "0x10=42", "--start", "m")
        assert code == 0 and "R2=42" in out and "m exit=HALT" in out

    def test_block_limit(self, tmp_path, capsys):
        src = tmp_path / "loop.s"
        src.write_text("a:\n    BRO a\n")
        code, out, _ = run(capsys, "run", src, "--max-blocks", "3")
        assert code == 0 and "stopped after 3 blocks" in out
        code, _, err = run(capsys, "run", src, "--max-blocks", "3", "--strict")
        assert code == 1 and "BlockLimitExceeded" in err

    @pytest.mark.parametrize("regs", ["R0", "R32=1", "X1=2", "R1=zz"])
    def test_bad_regs(self, sample_file, capsys, regs):
        code, _, err = run(capsys, "run", sample_file, "--regs", regs)
        assert code == 1 and err

    def test_stats_need_timed_engine(self, tmp_path, sample_file, capsys):
        code, _, _ = run(capsys, "run", sample_file, "--stats", tmp_path / "s.json")
        assert code == 1

    def test_missing_file(self, tmp_path, capsys):
        code, _, _ = run(capsys, "run", tmp_path / "nope.edgb")
        assert code == 1


class TestCompare:
    def test_match(self, sample_file, capsys):
        code, out, _ = run(capsys, "compare", sample_file, "--regs", "R0=2,R7=3")
        assert code == 0
        assert out.startswith("MATCH")
        assert "parallel: 13 cycles" in out and "incremental: 13 cycles" in out

    def test_json(self, sample_file, capsys):
        code, out, _ = run(capsys, "compare", sample_file, "--regs", "R0=2,R7=3", "--json")
        js = json.loads(out)
        assert code == 0 and js["match"] and js["exits"] == ["blk1", "HALT"]
        assert js["comparison"]["cycle_delta"] == 0

    def test_mismatch_exit_code(self, sample_file, capsys, monkeypatch):
        from edgesim import cli
        from edgesim.refinterp import ArchState

        real = cli._run_engine

        def broken(engine, blocks, state, args, trace=None):
            r = real(engine, blocks, state, args, trace)
            if engine == "incremental":
                r.state = ArchState()
                r.state.regs[9] = 1
            return r

        monkeypatch.setattr(cli, "_run_engine", broken)
        code, out, _ = run(capsys, "compare", sample_file, "--regs", "R0=2,R7=3")
        assert code == 2 and out.startswith("MISMATCH")


class TestCost:
    def test_incremental(self, capsys):
        code, out, _ = run(capsys, "cost", "--scheduler", "incremental", "--entries", "32")
        assert code == 0
        for s in ("78 LUTs", "150 LUTs", "4.3 ns", "645"):
            assert s in out

    def test_json(self, capsys):
        code, out, _ = run(capsys, "cost", "--scheduler", "parallel", "--json")
        js = json.loads(out)
        assert js["area_core_luts"] == 288 and js["area_period_product"] == "1700.0"

    def test_table(self, capsys):
        code, out, _ = run(capsys, "cost")
        assert code == 0 and "Area*period" in out and "1700.0" in out

    def test_off_grid(self, capsys):
        code, _, err = run(capsys, "cost", "--scheduler", "parallel", "--entries", "16")
        assert code == 1 and "UnknownConfiguration" in err


class TestFuzz:
    def test_small_run(self, capsys):
        code, out, _ = run(capsys, "fuzz", "--programs", "20", "--seed", "3")
        assert code == 0 and "mismatches=0" in out and "seed=3" in out

    def test_seed_from_env(self, capsys, monkeypatch):
        monkeypatch.setenv("EDGESIM_SEED", "11")
        code, out, _ = run(capsys, "fuzz", "--programs", "5")
        assert code == 0 and "seed=11" in out


class TestEntryPoints:
    def test_module(self, tmp_path):
        r = subprocess.run([sys.executable, "-m", "edgesim", "cost", "--scheduler", "parallel"],
                           capture_output=True, text=True)
        assert r.returncode == 0 and "288 LUTs" in r.stdout

    def test_usage_error(self):
        r = subprocess.run([sys.executable, "-m", "edgesim"], capture_output=True, text=True)
        assert r.returncode == 2     # argparse

    def test_parse_state(self):
        st = parse_state("r3=0xff, R4=-1", "0x8=1")
        assert st.regs[3] == 255 and st.regs[4] == 0xFFFFFFFF and st.mem[8] == 1
