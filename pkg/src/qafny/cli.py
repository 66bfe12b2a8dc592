"""Command line front end: ``qafny <command> file.qfy``.

Exit codes: 0 success, 1 parse error, 2 kind or type error, 3 runtime
error, 4 failed check or crosscheck.
"""
from __future__ import annotations

import argparse
import glob
import json
import os
import sys
from typing import List, Optional

from .errors import QafnyError

EXIT_CHECK = 4


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load(path: str):
    from .surface import parse_program
    return parse_program(_read(path))


def _write(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _outcomes(spec: Optional[str]) -> List[int]:
    if not spec:
        return []
    return [int(t) for t in spec.replace(",", " ").split()]


def cmd_parse(args) -> int:
    from .surface import print_program
    _write(print_program(_load(args.file)), args.output)
    return 0


def cmd_typecheck(args) -> int:
    from .typecheck import typecheck_program
    res = typecheck_program(_load(args.file))
    if args.dump_types:
        for path, env in res.dump:
            print(f"{'.'.join(map(str, path)) or '-'}\t{env}")
    print(f"ok\t{res.env}")
    return 0


def cmd_run(args) -> int:
    from .interp import Forced, Seeded, run_program
    program = _load(args.file)
    policy = Forced(_outcomes(args.force)) if args.force is not None else Seeded(args.seed)
    res = run_program(program, policy, trace=args.trace)
    out = {
        "state": res.state.to_json(),
        "store": {k: {"prob": round(v.prob, 12), "outcome": v.outcome} for k, v in res.store.items()},
        "outcomes": [{"var": v, "bits": b, "prob": round(p, 12)} for v, b, p in res.outcomes],
    }
    if args.trace:
        out["trace"] = res.trace
    _write(json.dumps(out, indent=2, sort_keys=True) + "\n", args.output)
    return 0


def _ir_json(prog) -> str:
    from dataclasses import asdict
    gates = [{"gate": type(g).__name__, **asdict(g)} for g in prog.gates]
    return json.dumps({"qubits": prog.d, "gates": gates}, indent=2) + "\n"


def cmd_compile(args) -> int:
    from .circuit import compile_program, emit_qasm
    prog, _ = compile_program(_load(args.file))
    text = emit_qasm(prog) if args.emit == "qasm" else _ir_json(prog)
    _write(text, args.output)
    return 0


def cmd_simulate(args) -> int:
    import numpy as np
    from .circuit import compile_program, read_qasm
    from .dense import simulate_gates, zero_state
    if args.file.endswith(".qasm"):
        prog = read_qasm(_read(args.file))
    else:
        prog, _ = compile_program(_load(args.file))
    if prog.d > args.max_qubits:
        raise QafnyError(f"circuit needs {prog.d} qubits, limit is {args.max_qubits}")
    v = simulate_gates(prog, zero_state(prog.d))
    amps = []
    for i in np.flatnonzero(np.abs(v) > 1e-12):
        bits = "".join(str((int(i) >> q) & 1) for q in range(prog.d))
        amps.append({"basis": bits, "re": round(float(v[i].real), 12), "im": round(float(v[i].imag), 12)})
    _write(json.dumps({"qubits": prog.d, "amplitudes": amps}, indent=2) + "\n", args.output)
    return 0


def cmd_crosscheck(args) -> int:
    from .dense import crosscheck_corpus
    if args.corpus:
        paths = sorted(glob.glob(os.path.join(args.corpus, "*.qfy")))
    elif args.file:
        paths = [args.file]
    else:
        raise QafnyError("crosscheck needs a file or --corpus DIR")
    rows = crosscheck_corpus(paths, args.tolerance, args.max_qubits, args.workers)
    lines = ["program\tqubits\tdistance\tresult"] + [r.tsv() for r in rows]
    _write("\n".join(lines) + "\n", args.output)
    for r in rows:
        if r.note:
            print(f"{r.program}: {r.note}", file=sys.stderr)
    return 0 if rows and all(r.passed for r in rows) else EXIT_CHECK


def cmd_check(args) -> int:
    from .triples import check_program
    rep = check_program(_load(args.file))
    _write("\n".join(rep.lines()) + "\n" if rep.lines() else "", args.output)
    if not rep.passed:
        return EXIT_CHECK
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qafny", description="Qafny toolchain")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, file_required=True):
        p = sub.add_parser(name, help=help_)
        if file_required:
            p.add_argument("file")
        p.add_argument("-o", "--output", default=None, help="write output here instead of stdout")
        p.set_defaults(fn=fn)
        return p

    add("parse", cmd_parse, "parse and print in canonical form")
    p = add("typecheck", cmd_typecheck, "check kinds and locus types")
    p.add_argument("--dump-types", action="store_true", help="print the type environment after each statement")
    p = add("run", cmd_run, "run the symbolic interpreter")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled measurements")
    p.add_argument("--force", nargs="?", const="", default=None,
                   help="comma-separated measurement outcomes to force, in program order")
    p.add_argument("--trace", action="store_true", help="include the state after every statement")
    p = add("compile", cmd_compile, "lower to gates")
    p.add_argument("--emit", choices=("qasm", "ir-json"), default="qasm")
    p = add("simulate", cmd_simulate, "simulate the compiled circuit from all zeros")
    p.add_argument("--max-qubits", type=int, default=14)
    p = add("crosscheck", cmd_crosscheck, "compare interpreter and circuit", file_required=False)
    p.add_argument("file", nargs="?")
    p.add_argument("--corpus", default=None, help="check every .qfy file in this directory")
    p.add_argument("--max-qubits", type=int, default=14)
    p.add_argument("--tolerance", type=float, default=1e-7)
    p.add_argument("--workers", type=int, default=1)
    add("check", cmd_check, "check asserts (a leading literal assert fixes the start state)")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except QafnyError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
