"""Compiled vs NumPy kernels, and one full sweep under each backend.

    python3 benchmarks/bench_kernels.py [--repeat 20] [--sweeps 50]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from proxyfavar.factor_sampler import MIXTURE, sv_precision
from proxyfavar.kernels import _py

try:
    from proxyfavar.kernels import _ckernels
except ImportError:
    _ckernels = None

SWEEP_SNIPPET = """
import time
from proxyfavar import kernels
from proxyfavar.gibbs import gibbs_sweep, step_generators
from proxyfavar.model import ModelSpec, PriorConfig, default_true_params, simulate_dgp, initialize_state, validate_spec
spec = ModelSpec.baseline(3, ["rate", "spread"], var_lag_order=2)
tp = default_true_params(spec, 252, seed=1)
data, _ = simulate_dgp(spec, tp, 252, seed=2)
pri = PriorConfig()
tags = validate_spec(spec, data, pri).tags
state = initialize_state(spec, data, pri, 0)
rngs = step_generators(0)
gibbs_sweep(spec, state, data, pri, rngs, tags)
t0 = time.perf_counter()
for _ in range({sweeps}):
    gibbs_sweep(spec, state, data, pri, rngs, tags)
print(kernels.BACKEND, (time.perf_counter() - t0) / {sweeps})
"""


def kernel_inputs(S, T, rng):
    V = rng.uniform(0.01, 0.5, (S, T))
    s = rng.integers(0, 7, (S, T))
    diag, off = sv_precision(V, MIXTURE.var[s])
    return dict(
        tri=(diag, off, rng.standard_normal((S, T)), rng.standard_normal((S, T))),
        mix=(rng.standard_normal((S, T)) * 3 - 1, rng.standard_normal((S, T)), rng.random((S, T)),
             MIXTURE.prob, MIXTURE.mean, MIXTURE.var),
    )


def time_call(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--sweeps", type=int, default=50)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    impls = [("python", _py)] + ([("cython", _ckernels)] if _ckernels is not None else [])
    print(f"{'kernel':<24}{'S x T':>12}" + "".join(f"{name:>14}" for name, _ in impls) + f"{'speedup':>10}")
    for S, T in ((38, 252), (38, 1000), (200, 1000)):
        inputs = kernel_inputs(S, T, rng)
        for label, key, fn_name in (("tridiag_precision_draw", "tri", "tridiag_precision_draw"),
                                    ("mixture_indicator_draw", "mix", "mixture_indicator_draw")):
            secs = [time_call(getattr(mod, fn_name), inputs[key], args.repeat) for _, mod in impls]
            speed = f"{secs[0] / secs[-1]:.1f}x" if len(secs) > 1 else "-"
            print(f"{label:<24}{f'{S}x{T}':>12}" + "".join(f"{1e3 * s:>12.3f}ms" for s in secs) + f"{speed:>10}")

    print(f"\nfull sweep, 3 countries, T=252, L=2 ({args.sweeps} sweeps)")
    for flag in ("1", "0"):
        env = dict(os.environ, PROXYFAVAR_PURE_PYTHON=flag)
        out = subprocess.run([sys.executable, "-c", SWEEP_SNIPPET.format(sweeps=args.sweeps)],
                             env=env, capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:<8}{1e3 * float(out[1]):8.1f} ms/sweep")


if __name__ == "__main__":
    main()
