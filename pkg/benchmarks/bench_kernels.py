"""Time the NumPy and Numba kernel implementations side by side.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Both implementations are called directly (the env flag is irrelevant here).
The Numba functions are warmed up once so compile time is not counted.
"""

import argparse
import json
import platform
import timeit

import numpy as np

from twist_echo import _kernels
from twist_echo.spin_algebra import make_spin_space, x_quantized_ket


def cases(rng):
    s = make_spin_space(1.5)
    n_atoms, light = 5, 11
    psi = rng.normal(size=s.dim**n_atoms * light) + 1j * rng.normal(size=s.dim**n_atoms * light)
    op = rng.normal(size=(s.dim, s.dim)) + 1j * rng.normal(size=(s.dim, s.dim))
    big = make_spin_space(20)
    c0 = x_quantized_ket(big, big.f).amplitudes
    chis = np.linspace(0, np.pi, 4000)
    yield "apply_local (4^5 x 11, middle site)", "apply_local", (psi, op, 16, 4, 16 * light)
    yield "tensor_sum (12 factors of 2)", "tensor_sum", (rng.normal(size=(12, 2)),)
    phases = np.exp(1j * rng.normal(size=(6, 4)))
    yield "tensor_prod (6 factors of 4)", "tensor_prod", (phases,)
    yield "oat_moments (f=20, 4000 times)", "oat_moments", (big.m, c0, big.ladder, chis)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=20)
    ap.add_argument("--json", help="also write results to this file")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    rows = []
    print(f"python {platform.python_version()}, numpy {np.__version__}, active backend {_kernels.BACKEND}")
    print(f"{'kernel':40s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s} {'max |diff|':>11s}")
    for label, name, call_args in cases(rng):
        fn_np, fn_nb = _kernels.NUMPY_KERNELS[name], _kernels.NUMBA_KERNELS[name]
        diff = float(np.max(np.abs(fn_np(*call_args) - fn_nb(*call_args))))  # also warms up numba
        t_np = min(timeit.repeat(lambda: fn_np(*call_args), number=args.number, repeat=args.repeat)) / args.number
        t_nb = min(timeit.repeat(lambda: fn_nb(*call_args), number=args.number, repeat=args.repeat)) / args.number
        rows.append({"kernel": name, "case": label, "numpy_s": t_np, "numba_s": t_nb, "max_abs_diff": diff})
        print(f"{label:40s} {1e3 * t_np:11.3f} {1e3 * t_nb:11.3f} {t_np / t_nb:8.2f} {diff:11.1e}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
