"""Time the compiled kernels against the NumPy fallback.

    python3 bench/bench_kernels.py [--terms 1024 4096 65536] [--repeat 200]

Also times a short measurement-chain Monte Carlo run under each backend.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from grwfuzzy import _pykernels
from grwfuzzy.kernels import backend


def bench_hit(mod, labels, logm, repeat):
    u = iter(np.random.default_rng(0).random(repeat * 10))
    fn = lambda: mod.hit_update(labels, logm, 3, next(u), -27.6, False, 0.0, -np.inf)  # noqa: E731
    return min(timeit.repeat(fn, number=repeat, repeat=5)) / repeat


def bench_grouped(mod, labels, logm, repeat):
    fn = lambda: mod.grouped_log_mass(labels, logm, 3)  # noqa: E731
    return min(timeit.repeat(fn, number=repeat, repeat=5)) / repeat


CHAIN = """
import time
from grwfuzzy.dynamics import GrwParams
from grwfuzzy.scenarios import ScenarioConfig, monte_carlo
cfg = ScenarioConfig(n_marbles=10, grw=GrwParams(epsilon_leak=1e-12), trials={trials}, seed=1)
monte_carlo("measure-chain", cfg.with_(trials=2))
t = time.perf_counter()
monte_carlo("measure-chain", cfg, keep_logs=False)
print(time.perf_counter() - t)
"""


def bench_chain(pure: bool, trials: int) -> float:
    env = dict(os.environ)
    env.pop("GRWFUZZY_PURE_PYTHON", None)
    if pure:
        env["GRWFUZZY_PURE_PYTHON"] = "1"
    out = subprocess.run(
        [sys.executable, "-c", CHAIN.format(trials=trials)], env=env, check=True, capture_output=True, text=True
    )
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--terms", type=int, nargs="+", default=[64, 1024, 16384, 262144])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--chain-trials", type=int, default=200)
    args = ap.parse_args(argv)

    try:
        cy = backend("cython")
    except ImportError:
        print("compiled extension not built; run `python3 setup.py build_ext --inplace`")
        return 1
    rng = np.random.default_rng(1)
    print(f"{'terms':>8} {'kernel':>10} {'python us':>11} {'cython us':>11} {'speedup':>8}")
    for n in args.terms:
        labels = rng.integers(0, 3, n).astype(np.int32)
        logm = rng.normal(-5.0, 3.0, n)
        rep = max(5, args.repeat * 1024 // max(n, 1024))
        for name, fn in (("hit", bench_hit), ("grouped", bench_grouped)):
            tp = fn(_pykernels, labels, logm, rep) * 1e6
            tc = fn(cy, labels, logm, rep) * 1e6
            print(f"{n:>8} {name:>10} {tp:>11.1f} {tc:>11.1f} {tp / tc:>7.1f}x")

    tp = bench_chain(True, args.chain_trials)
    tc = bench_chain(False, args.chain_trials)
    print(f"\nmeasure-chain n=10, {args.chain_trials} trials: python {tp:.2f} s, cython {tc:.2f} s ({tp / tc:.2f}x)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
