"""Command-line interface: ``edgesim {asm,disasm,run,compare,cost,fuzz}``.

Exit status is 0 on success, 1 for user errors (bad input, failing
program) and 2 when an internal model assertion fires or the engines
disagree.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import edgb
from .assembler import assemble, disassemble
from .errors import EdgeError, ModelAssertion
from .fuzz import fuzz
from .metrics import compare, cost_report, cost_table, format_cost
from .pipeline import CoreConfig, JsonlTrace, run_program_timed
from .refinterp import MASK32, ArchState, run_program

ENGINES = ("ref", "parallel", "incremental")


class UsageError(Exception):
    pass


def _parse_assignments(text: str, what: str) -> list[tuple[str, int]]:
    out = []
    for item in filter(None, (p.strip() for p in text.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"bad {what} assignment {item!r} (expected KEY=VALUE)")
        try:
            out.append((key.strip(), int(value, 0) & MASK32))
        except ValueError:
            raise UsageError(f"bad value in {what} assignment {item!r}") from None
    return out


def parse_state(regs: str | None, mem: str | None) -> ArchState:
    state = ArchState()
    for key, value in _parse_assignments(regs or "", "register"):
        if not (key[:1] in "Rr" and key[1:].isdigit() and int(key[1:]) < 32):
            raise UsageError(f"unknown register {key!r}")
        state.regs[int(key[1:])] = value
    for key, value in _parse_assignments(mem or "", "memory"):
        try:
            addr = int(key, 0)
        except ValueError:
            raise UsageError(f"bad address {key!r}") from None
        if addr & 3 or addr < 0:
            raise UsageError(f"address {key} is not word aligned")
        state.mem[addr] = value
    return state


def load_program(path: str):
    """Blocks from a binary block file, or from assembly when the name ends in ``.s``."""
    p = Path(path)
    if p.suffix in (".s", ".asm"):
        return assemble(p.read_text())
    return edgb.read_file(p)


def _state_lines(state: ArchState) -> list[str]:
    regs = " ".join(f"R{i}={v}" for i, v in enumerate(state.regs) if v)
    lines = [f"regs: {regs or '(all zero)'}"]
    mem = state.nonzero_mem()
    if mem:
        lines.append("mem: " + " ".join(f"{a:#x}={v}" for a, v in sorted(mem.items())))
    return lines


def _run_engine(engine, blocks, state, args, trace=None):
    if engine == "ref":
        return run_program(blocks, state, start=args.start, max_blocks=args.max_blocks, strict=args.strict)
    cfg = CoreConfig(engine, load_latency=args.load_latency)
    return run_program_timed(blocks, state, cfg, start=args.start, max_blocks=args.max_blocks,
                             strict=args.strict, trace=trace)


# -- subcommands ----------------------------------------------------------------

def cmd_asm(args) -> int:
    blocks = assemble(Path(args.input).read_text())
    out = args.output or str(Path(args.input).with_suffix(".edgb"))
    edgb.write_file(out, blocks)
    print(f"wrote {len(blocks)} block(s) to {out}")
    return 0


def cmd_disasm(args) -> int:
    text = disassemble(edgb.read_file(args.input))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_run(args) -> int:
    blocks = load_program(args.input)
    state = parse_state(args.regs, args.mem)
    trace = JsonlTrace() if args.trace else None
    run = _run_engine(args.engine, blocks, state, args, trace)
    label = args.start or blocks[0].name
    for ex in run.exits:
        print(f"{label} exit={ex}")
        label = ex
    print("halted" if run.halted else f"stopped after {len(run.exits)} blocks")
    for line in _state_lines(run.state):
        print(line)
    if args.engine != "ref":
        st = run.stats
        print(f"cycles={st.cycles} issues={st.issues} ipc={st.ipc:.3f}")
        if args.stats:
            Path(args.stats).write_text(json.dumps(st.to_json(), sort_keys=True, indent=2) + "\n")
        if trace is not None:
            Path(args.trace).write_text(trace.dumps())
    elif args.stats or args.trace:
        raise UsageError("--stats and --trace need a timed engine (parallel or incremental)")
    return 0


def cmd_compare(args) -> int:
    blocks = load_program(args.input)
    state = parse_state(args.regs, args.mem)
    runs = {e: _run_engine(e, blocks, state, args) for e in ENGINES}
    ref = runs["ref"]
    problems = []
    for e in ("parallel", "incremental"):
        r = runs[e]
        if r.exits != ref.exits:
            problems.append(f"{e}: exits {r.exits} differ from ref {ref.exits}")
        if not r.state.same_as(ref.state):
            problems.append(f"{e}: final state differs from ref")
    report = compare(runs["parallel"].stats, runs["incremental"].stats)
    if args.json:
        out = {"match": not problems, "problems": problems, "exits": ref.exits,
               "comparison": report.to_json()}
        print(json.dumps(out, sort_keys=True, indent=2))
    else:
        print("MATCH" if not problems else "MISMATCH")
        for p in problems:
            print(f"  {p}")
        print(f"exits: {' -> '.join(ref.exits)}")
        for e in ("parallel", "incremental"):
            print(f"{e}: {runs[e].stats.cycles} cycles")
        print(report.text())
    return 0 if not problems else 2


def cmd_cost(args) -> int:
    if args.scheduler is None:
        if args.json:
            rows = [cost_report(k, args.entries, args.events).to_json() for k in ("parallel", "incremental")]
            print(json.dumps(rows, sort_keys=True, indent=2))
        else:
            print(cost_table())
        return 0
    c = cost_report(args.scheduler, args.entries, args.events)
    print(json.dumps(c.to_json(), sort_keys=True, indent=2) if args.json else format_cost(c))
    return 0


def cmd_fuzz(args) -> int:
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("EDGESIM_SEED", "0"), 0)
    rep = fuzz(seed, args.programs, max_blocks=args.max_blocks, stop_on_failure=True)
    print(f"seed={seed} programs={rep.programs} blocks={rep.blocks} executed={rep.executed} "
          f"mismatches={len(rep.failures)}")
    for blocks, state, problems in rep.failures:
        for p in problems:
            print(f"  {p}")
        sys.stdout.write(disassemble(blocks))
    return 2 if rep.failures else 0


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="edgesim", description="EDGE core and dataflow scheduler simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("asm", help="assemble a .s file into a block file")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_asm)

    p = sub.add_parser("disasm", help="print a block file as assembly")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_disasm)

    def engine_args(p):
        p.add_argument("input", help="block file (.edgb) or assembly (.s)")
        p.add_argument("--regs", help="initial registers, e.g. R0=2,R7=3")
        p.add_argument("--mem", help="initial memory words, e.g. 0x10=5,0x14=7")
        p.add_argument("--start", help="first block (default: the first in the file)")
        p.add_argument("--max-blocks", type=int, default=1000)
        p.add_argument("--strict", action="store_true", help="fail if the block limit is reached before HALT")
        p.add_argument("--load-latency", type=int, default=2)

    p = sub.add_parser("run", help="execute a program")
    engine_args(p)
    p.add_argument("--engine", choices=ENGINES, default="ref")
    p.add_argument("--trace", help="write a per-cycle JSON-lines trace")
    p.add_argument("--stats", help="write cycle statistics as JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run all three engines and check they agree")
    engine_args(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("cost", help="FPGA cost figures of the schedulers")
    p.add_argument("--scheduler", choices=("parallel", "incremental"))
    p.add_argument("--entries", type=int, default=32)
    p.add_argument("--events", type=int, default=2, help="events per cycle")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("fuzz", help="random programs checked across all engines")
    p.add_argument("--programs", type=int, default=200)
    p.add_argument("--seed", type=lambda s: int(s, 0), help="default: $EDGESIM_SEED or 0")
    p.add_argument("--max-blocks", type=int, default=6)
    p.set_defaults(func=cmd_fuzz)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelAssertion as e:
        print(f"edgesim: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except (EdgeError, UsageError, OSError, ValueError) as e:
        print(f"edgesim: error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
