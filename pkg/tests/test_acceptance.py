"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run standalone with ``python3 tests/test_acceptance.py`` or through pytest,
where the lines are collected and shown in the terminal summary.
"""

import math
import subprocess
import sys
import time

import numpy as np
from scipy.optimize import minimize_scalar

from twist_echo import exact_collective as ec
from twist_echo import gaussian_model as gm
from twist_echo.internal_dynamics import (
    OatParams,
    echo_coupled_state,
    internal_squeezing_grid,
    reference_state,
    zeta_sq_analytic,
    zeta_sq_numeric,
)
from twist_echo.spin_algebra import fidelity, make_spin_space, x_quantized_ket, y_quantized_ket

F_LIST = [0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5]
RESULTS = {}


def report(key, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {key}: {detail}"
    RESULTS[key] = line
    print(line)
    return ok


def criterion_1():
    t0 = time.perf_counter()
    chis = np.linspace(0, math.pi, 200)
    worst = 0.0
    for f in F_LIST:
        worst = max(worst, np.abs(zeta_sq_analytic(f, chis) - zeta_sq_numeric(f, chis)).max())
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 5
    return report("C1 enhancement closed form vs 2Var(fy)/f", ok, f"max dev {worst:.2e} (<=1e-9), {dt:.2f} s (<5 s)")


def criterion_2():
    dev_zero = max(abs(zeta_sq_analytic(f, 0.0) - 1) for f in F_LIST)
    # spin 1 is excluded from the pi/4 plateau: its cosine power is zero
    integer_f = [f for f in F_LIST if f == int(f) and f >= 2]
    dev_int = max(abs(zeta_sq_analytic(f, math.pi / 4) - (f + 0.5)) for f in integer_f)
    dev_half = max(abs(zeta_sq_analytic(f, math.pi / 2) - 2 * f) for f in F_LIST if f != int(f))
    spin1 = zeta_sq_analytic(1, math.pi / 4)
    ok = dev_zero <= 1e-12 and dev_int <= 1e-10 and dev_half <= 1e-10
    return report("C2 enhancement extremes", ok,
                  f"zeta(0) dev {dev_zero:.1e}; integer f>=2 at pi/4 dev {dev_int:.1e}; "
                  f"half-integer at pi/2 dev {dev_half:.1e}; f=1 at pi/4 gives {spin1:.3f}")


def criterion_3():
    worst_fid, worst_norm = 0.0, 0.0
    for f in (0.5, 1.5, 2.5, 3.5, 4.5):
        p = OatParams.for_spin(f, math.pi / 2)
        s = p.space
        ghz = (y_quantized_ket(s, f).amplitudes + 1j * y_quantized_ket(s, -f).amplitudes) / math.sqrt(2)
        worst_fid = max(worst_fid, 1 - fidelity(reference_state(p), ghz))
        vec, norm = echo_coupled_state(p)
        worst_fid = max(worst_fid, 1 - fidelity(vec, x_quantized_ket(s, -f)))
        worst_norm = max(worst_norm, abs(norm - f))
    ok = worst_fid <= 1e-10 and worst_norm <= 1e-9
    return report("C3 GHZ echo", ok, f"max infidelity {worst_fid:.1e} (<=1e-10), norm error {worst_norm:.1e} (<=1e-9)")


def criterion_4():
    t0 = time.perf_counter()
    alpha = 0.05
    parts, ok = [], True
    for f, n in ((0.5, 4), (1.5, 3)):
        infid = []
        for a in (alpha, alpha / 2):
            cfg = ec.QndConfig(a, n, f)
            infid.append(1 - fidelity(ec.run_echo_protocol(cfg, math.pi / 2), ec.perturbative_state(cfg, "ghz")))
        ratio = infid[0] / infid[1]
        bound_ok = infid[0] <= 10 * alpha**3
        ratio_ok = 5 <= ratio <= 12
        ok &= bound_ok and ratio_ok
        parts.append(f"f={f} N={n}: 1-F={infid[0]:.2e} ({'ok' if bound_ok else 'over'} 10a^3), "
                     f"halving ratio {ratio:.1f} ({'in' if ratio_ok else 'outside'} [5,12])")
    dt = time.perf_counter() - t0
    ok &= dt < 60
    return report("C4 perturbative vs exact", ok, "; ".join(parts) + f"; {dt:.2f} s")


def criterion_5():
    worst = 0.0
    for zeta_sq in np.linspace(1.0, 10.0, 20):
        for kappa in np.linspace(0.1, 5.0, 20):
            g_star = gm.optimal_gain(zeta_sq, kappa)
            res = minimize_scalar(lambda g: gm.measure_feedback(None, zeta_sq, kappa, g),
                                  bracket=(g_star - 1.0, g_star + 1.0), tol=1e-14)
            worst = max(worst, abs(res.x - g_star), abs(res.fun - gm.xi_squared(zeta_sq, kappa)))
    return report("C5 Gaussian optimum", worst <= 1e-8, f"max deviation {worst:.2e} over 20x20 grid (<=1e-8)")


def criterion_6():
    parts, ok = [], True
    f, n = 1.5, 3
    for kappa in (0.1, 0.2):
        cfg = ec.QndConfig.from_kappa(kappa, n, f)
        state = ec.perturbative_state(cfg, "ghz")
        before = ec.wineland(state)
        after = ec.wineland(ec.rf_map(state))
        target = 1 / (1 + 2 * f * kappa**2)
        rel = abs(after - target) / target
        good = abs(before - 1) <= 5 * kappa**4 and after < 1 and rel <= 0.10
        ok &= good
        parts.append(f"kappa={kappa}: before-rf |xi-1|={abs(before - 1):.1e} (<= {5 * kappa**4:.0e}), "
                     f"after-rf {after:.4f} vs {target:.4f} ({100 * rel:.1f}%)")
    return report("C6 Wineland before/after rf", ok, "; ".join(parts))


def criterion_7():
    alpha0 = 300.0
    _, xi_min = gm.optimize_od(1.0, 0.0, alpha0)
    target = 2 / math.sqrt(3 * alpha0)
    rel = abs(xi_min - target) / target
    parts = [f"xi_min {xi_min:.4f} vs {target:.4f} ({100 * rel:.1f}%)"]
    ok = rel <= 0.05
    for f in (1.5, 2, 4.5):
        ratio = gm.required_od(xi_min, 1.0) / gm.required_od(xi_min, 2 * f)
        ok &= abs(ratio / (2 * f) - 1) <= 0.05
        parts.append(f"f={f}: OD ratio {ratio:.4f} vs {2 * f}")
    return report("C7 noise model and OD", ok, "; ".join(parts))


def criterion_8():
    f = 2
    chis = np.linspace(0, math.pi, 2001)
    xi_oat = internal_squeezing_grid(f, chis)
    zeta = zeta_sq_analytic(f, chis)
    mins = {}
    for kappa in (0.3, 10.0):
        mins[kappa] = (float(np.min(gm.cooperative_xi(np.clip(xi_oat, 1e-300, 1.0), kappa))),
                       float(np.min(gm.xi_squared(zeta, kappa))))
    ok = mins[0.3][0] < mins[0.3][1] and mins[10.0][1] < mins[10.0][0]
    return report("C8 scheme crossover", ok,
                  f"kappa=0.3 coop {mins[0.3][0]:.4f} < echo {mins[0.3][1]:.4f}; "
                  f"kappa=10 echo {mins[10.0][1]:.5f} < coop {mins[10.0][0]:.5f}")


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "twist_echo.cli", *args], capture_output=True)


def criterion_9():
    t0 = time.perf_counter()
    green = _cli("selfcheck")
    dt = time.perf_counter() - t0
    red = _cli("selfcheck", "--inject-fault", "zeta-sign")
    ok = green.returncode == 0 and dt < 60 and red.returncode != 0 and b"[FAIL] zeta_cross_check" in red.stdout
    return report("C9 selfcheck", ok, f"clean exit {green.returncode} in {dt:.1f} s (<60 s); fault exit {red.returncode}")


def criterion_10():
    invocations = [
        ("enhancement", "--f", "1/2,2,7/2", "--chi-t-grid", "0:pi:101"),
        ("squeeze", "--scheme", "cooperative", "--f", "2", "--kappa", "0.3", "--chi-t-grid", "0:pi/2:51"),
        ("squeeze", "--f", "2", "--kappa", "1", "--epsilon", "0.1", "--beta", "0.05", "--format", "json"),
        ("exact", "--f", "1/2", "--n-atoms", "3", "--alpha-tilde", "0.2", "--sample-outcome", "--seed", "7"),
        ("sweep", "--engine", "exact", "--f", "1/2", "--n-atoms", "3", "--alpha-tilde", "0.2",
         "--sample-outcome", "--seed", "7", "--param", "alpha_tilde", "--values", "0.1,0.2,0.3", "--workers", "2"),
    ]
    same = 0
    for args in invocations:
        a, b = _cli(*args), _cli(*args)
        same += int(a.returncode == 0 and a.stdout == b.stdout and len(a.stdout) > 0)
    return report("C10 determinism", same == len(invocations), f"{same}/{len(invocations)} invocations byte-identical")


def test_criterion_1():
    assert criterion_1()


def test_criterion_2():
    assert criterion_2()


def test_criterion_3():
    assert criterion_3()


def test_criterion_4():
    assert criterion_4()


def test_criterion_5():
    assert criterion_5()


def test_criterion_6():
    assert criterion_6()


def test_criterion_7():
    assert criterion_7()


def test_criterion_8():
    assert criterion_8()


def test_criterion_9():
    assert criterion_9()


def test_criterion_10():
    assert criterion_10()


if __name__ == "__main__":
    checks = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
              criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]
    results = [c() for c in checks]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
