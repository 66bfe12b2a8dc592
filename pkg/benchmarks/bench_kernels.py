"""Compare the compiled and numpy statevector kernels.

Usage: python3 benchmarks/bench_kernels.py [--qubits 12 16 20] [--repeat 5]

Each case applies a fixed random circuit (H, RZ, CX, CCX) to a random
state with both backends, checks the outputs agree and prints the best
wall time of each.
"""
import argparse
import random
import time

import numpy as np

from qafny import _kernels as K
from qafny import gates as G
from qafny.dense import simulate_gates


def random_circuit(d: int, n_gates: int, seed: int) -> G.GateProgram:
    rng = random.Random(seed)
    out = []
    for _ in range(n_gates):
        kind = rng.choice("HRXC" if d >= 3 else "HRX")
        qs = rng.sample(range(d), 3 if kind == "C" else 2)
        if kind == "H":
            out.append(G.H(qs[0]))
        elif kind == "R":
            out.append(G.RZ(rng.randint(1, 6), qs[0]))
        elif kind == "X":
            out.append(G.CX(qs[0], qs[1]))
        else:
            out.append(G.CCX(*qs))
    return G.GateProgram(d, out)


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--qubits", type=int, nargs="+", default=[10, 14, 18])
    ap.add_argument("--gates", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"compiled backend available: {K.BACKEND == 'cython'}")
    print("qubits\tgates\tcompiled_s\tnumpy_s\tspeedup\tmax_diff")
    for d in args.qubits:
        prog = random_circuit(d, args.gates, seed=d)
        rng = np.random.default_rng(d)
        v = rng.normal(size=1 << d) + 1j * rng.normal(size=1 << d)
        v /= np.linalg.norm(v)
        fast = simulate_gates(prog, v, K)
        slow = simulate_gates(prog, v, K.py)
        diff = float(np.max(np.abs(fast - slow)))
        t_fast = best_of(lambda: simulate_gates(prog, v, K), args.repeat)
        t_slow = best_of(lambda: simulate_gates(prog, v, K.py), args.repeat)
        print(f"{d}\t{args.gates}\t{t_fast:.4f}\t{t_slow:.4f}\t{t_slow / t_fast:.2f}x\t{diff:.1e}")


if __name__ == "__main__":
    main()
