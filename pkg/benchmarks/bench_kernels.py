"""Compare the compiled and pure-Python filtering kernels.

Times each kernel on the same inputs with both backends, checks that the
outputs agree, and optionally times a full two-step fit under each backend
(run in a subprocess with ``CORRX_BACKEND`` set).

    python3 benchmarks/bench_kernels.py --T 5000 --N 3 --repeat 20 --fit
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from corrx import recursions_python

try:
    from corrx import recursions as compiled
except ImportError:
    compiled = None

FIT_SNIPPET = """
import time
from corrx.dcc import DccOptions, DccSpec, two_step_fit
from corrx.kernels import BACKEND
from corrx.simulate import default_config, simulate_panel
ds = simulate_panel(default_config(T={T}, N={N}, seed=1)).dataset
t0 = time.perf_counter()
two_step_fit(ds, DccSpec(("TPU",)), DccOptions(compute_se=False))
print(BACKEND, time.perf_counter() - t0)
"""


def inputs(T: int, N: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(N, N + 2))
    c = a @ a.T + 0.5 * np.eye(N)
    d = np.sqrt(np.diag(c))
    qbar = c / np.outer(d, d)
    np.fill_diagonal(qbar, 1.0)
    eps = rng.standard_normal((T, N))
    intercept = np.full(T, 0.015)
    shift = np.concatenate([[0.0], rng.lognormal(-2.3, 0.7, T - 1) * 0.025])
    return {
        "gjr_params": np.array([0.05, 0.05, 0.85, 0.15]),
        "resid": np.ascontiguousarray(eps[:, 0]),
        "dcc": (0.05, 0.93, intercept, shift, eps, qbar),
    }


def cases(data):
    p, r = data["gjr_params"], data["resid"]
    args = data["dcc"]
    return {
        "gjr_variance": lambda m: m.gjr_variance(p, r, 1.0),
        "gjr_loglik_terms": lambda m: m.gjr_loglik_terms(p, r, 1.0, 1e-12),
        "dcc_recursion (loglik only)": lambda m: m.dcc_recursion(*args, False, False),
        "dcc_recursion (with paths)": lambda m: m.dcc_recursion(*args, False, True),
    }


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(u, v) for u, v in zip(a, b))
    if a is None or b is None:
        return a is b
    return bool(np.allclose(a, b, rtol=1e-10, atol=1e-12))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=5000)
    ap.add_argument("--N", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--fit", action="store_true", help="also time a full two-step fit")
    args = ap.parse_args(argv)

    if compiled is None:
        print("compiled extension not built; only the Python kernels are available")
    data = inputs(args.T, args.N)
    print(f"T={args.T} N={args.N}, best of {args.repeat} calls (ms)")
    print(f"{'kernel':30}{'python':>12}{'compiled':>12}{'speedup':>10}  agree")
    for name, call in cases(data).items():
        py = min(timeit.repeat(lambda: call(recursions_python), number=1, repeat=args.repeat))
        if compiled is None:
            print(f"{name:30}{py * 1e3:12.3f}{'-':>12}{'-':>10}")
            continue
        cy = min(timeit.repeat(lambda: call(compiled), number=1, repeat=args.repeat))
        agree = _same(call(compiled), call(recursions_python))
        print(f"{name:30}{py * 1e3:12.3f}{cy * 1e3:12.3f}{py / cy:10.1f}  {agree}")

    if args.fit:
        code = FIT_SNIPPET.format(T=args.T, N=args.N)
        for backend in ("python", "cython"):
            env = {**os.environ, "CORRX_BACKEND": backend}
            out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                                 text=True, check=True).stdout.split()
            print(f"two-step fit with backend {out[0]}: {float(out[1]):.2f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
