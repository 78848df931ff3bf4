"""Timing comparison of the compiled evaluation kernel against the fallback.

Run as a script:

    python3 benchmarks/kernel_bench.py [--rows 10000] [--repeat 200]

Builds a spread of random chromosomes, compiles them once, then times
batch error evaluation under both backends on the same data.  Prints a
small table plus the speedup ratio.  The numbers are indicative only;
they depend on expression depth and on how many rows survive the
protected-evaluation masking.
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from kexpr.engine import RunConfig
from kexpr.evalkit import synth_dataset
from kexpr.genome import layout_of
from kexpr.kernel import compile_chromosome
from kexpr.kernel import pyfallback
from kexpr.operators import init_population

try:
    from kexpr.kernel import _speedups
except ImportError:
    _speedups = None


def build_programs(n: int, seed: int, data):
    config = RunConfig()
    symbol_set = config.symbol_set_for(data)
    layout = layout_of(config.head_len, symbol_set, config.rnc_enabled)
    rng = random.Random(seed)
    chroms = init_population(n, config.n_genes, layout, symbol_set, rng)
    return [compile_chromosome(c, symbol_set) for c in chroms]


def time_backend(module, programs, X, y, denom, repeat: int) -> float:
    Xc = np.ascontiguousarray(X)
    yc = np.ascontiguousarray(y)
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        for prog in programs:
            module.program_error(prog.code, prog.consts, Xc, yc, denom, prog.max_stack)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=10000)
    parser.add_argument("--programs", type=int, default=100)
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    data = synth_dataset("tp1", args.rows, seed=args.seed)
    programs = build_programs(args.programs, args.seed, data)
    denom = data.target_denom

    evals = args.programs * args.rows
    print(f"{args.programs} programs x {args.rows} rows "
          f"({evals} row evaluations per pass, best of {args.repeat})")

    py_time = time_backend(pyfallback, programs, data.X, data.y, denom, args.repeat)
    print(f"python fallback : {py_time * 1e3:9.2f} ms  "
          f"({evals / py_time / 1e6:6.1f} M rows/s)")

    if _speedups is None:
        print("compiled kernel : not built (install with Cython available)")
        return
    c_time = time_backend(_speedups, programs, data.X, data.y, denom, args.repeat)
    print(f"compiled kernel : {c_time * 1e3:9.2f} ms  "
          f"({evals / c_time / 1e6:6.1f} M rows/s)")
    print(f"speedup         : {py_time / c_time:9.2f}x")

    # sanity: both backends agree on every program
    Xc = np.ascontiguousarray(data.X)
    yc = np.ascontiguousarray(data.y)
    worst = 0.0
    for prog in programs:
        args_ = (prog.code, prog.consts, Xc, yc, denom, prog.max_stack)
        err_c, ok_c = _speedups.program_error(*args_)
        err_p, ok_p = pyfallback.program_error(*args_)
        if ok_c != ok_p:
            raise AssertionError("backends disagree on validity")
        if ok_c:
            worst = max(worst, abs(err_c - err_p))
    print(f"max |err diff|  : {worst:9.3e}")


if __name__ == "__main__":
    main()
