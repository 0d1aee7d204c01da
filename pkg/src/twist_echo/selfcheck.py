"""Invariant suite behind ``twist-echo selfcheck``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels
from . import exact_collective as ec
from . import gaussian_model as gm
from .internal_dynamics import (
    OatParams,
    echo_coupled_state,
    ghz_states,
    oat_unitary,
    reference_state,
    zeta_sq_analytic,
    zeta_sq_numeric,
)
from .spin_algebra import fidelity, make_spin_space, x_quantized_ket

FAULTS = ("zeta-sign",)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _faulty_zeta_sq(f, chi_t):
    # negative control: sign of the cosine term flipped
    space = make_spin_space(f)
    if space.two_f == 1:
        return np.ones_like(np.asarray(chi_t, dtype=float))
    return space.f + 0.5 + (space.f - 0.5) * np.cos(2 * np.asarray(chi_t)) ** (space.two_f - 2)


def check_spin_algebra():
    worst = 0.0
    for two_f in range(1, 13):
        s = make_spin_space(two_f / 2)
        comm = s.fx @ s.fy - s.fy @ s.fx - 1j * s.fz
        cas = s.fx @ s.fx + s.fy @ s.fy + s.fz @ s.fz - s.f * (s.f + 1) * s.identity
        herm = max(np.abs(m - m.conj().T).max() for m in (s.fx, s.fy, s.fz))
        worst = max(worst, np.abs(comm).max(), np.abs(cas).max(), herm)
    return worst <= 1e-12, f"max identity residual {worst:.2e}"


def check_zeta(analytic=zeta_sq_analytic):
    chis = np.linspace(0, math.pi, 200)
    worst = 0.0
    for two_f in range(1, 11):
        f = two_f / 2
        worst = max(worst, np.abs(np.asarray(analytic(f, chis)) - zeta_sq_numeric(f, chis)).max())
    return worst <= 1e-9, f"max |analytic - numeric| {worst:.2e}"


def check_extremes(analytic=zeta_sq_analytic):
    worst = 0.0
    for two_f in range(1, 11):
        f = two_f / 2
        worst = max(worst, abs(analytic(f, 0.0) - 1.0))
        if two_f == 2:
            # spin 1: cos^0 is identically 1, so there is no enhancement at all
            worst = max(worst, abs(analytic(f, math.pi / 4) - 1.0))
        elif two_f % 2 == 0:
            worst = max(worst, abs(analytic(f, math.pi / 4) - (f + 0.5)))
        else:
            worst = max(worst, abs(analytic(f, math.pi / 2) - 2 * f))
    return worst <= 1e-10, f"max deviation {worst:.2e}"


def check_ghz_echo():
    worst = 0.0
    for two_f in (1, 3, 5, 7, 9):
        p = OatParams.for_spin(two_f / 2, math.pi / 2)
        plus, _ = ghz_states(p.space)
        worst = max(worst, 1 - fidelity(reference_state(p), plus))
        vec, norm = echo_coupled_state(p)
        worst = max(worst, 1 - fidelity(vec, x_quantized_ket(p.space, -p.space.f)), abs(norm - p.space.f))
    return worst <= 1e-9, f"max infidelity / norm error {worst:.2e}"


def check_echo_identity():
    rng = np.random.default_rng(7)
    worst = 0.0
    for two_f in range(1, 11):
        p = OatParams.for_spin(two_f / 2, rng.uniform(0, math.pi))
        psi = rng.normal(size=p.space.dim) + 1j * rng.normal(size=p.space.dim)
        out = oat_unitary(p.inverse()) @ (oat_unitary(p) @ psi)
        worst = max(worst, 1 - fidelity(psi, out))
    return worst <= 1e-12, f"max echo infidelity {worst:.2e}"


def check_perturbative():
    alpha = 0.05
    cfg = ec.QndConfig(alpha, 4, 0.5)
    infid = 1 - fidelity(ec.run_echo_protocol(cfg, math.pi / 2), ec.perturbative_state(cfg, "ghz"))
    return infid <= 10 * alpha**3, f"f=1/2 N=4 infidelity {infid:.2e} (bound {10 * alpha**3:.2e})"


def check_gaussian_optimum():
    worst = 0.0
    for zeta_sq in np.linspace(1.0, 10.0, 5):
        for kappa in np.linspace(0.1, 5.0, 5):
            res = minimize_scalar(lambda g: gm.measure_feedback(None, zeta_sq, kappa, g),
                                  bracket=(-2.0, 0.0), tol=1e-12)
            worst = max(worst, abs(res.x - gm.optimal_gain(zeta_sq, kappa)),
                        abs(res.fun - gm.xi_squared(zeta_sq, kappa)))
    return worst <= 1e-8, f"max optimum deviation {worst:.2e}"


def check_noise_optimum():
    _, xi_min = gm.optimize_od(1.0, 0.0, 300.0)
    target = 2 / math.sqrt(3 * 300.0)
    rel = abs(xi_min - target) / target
    return rel <= 0.05, f"xi_min {xi_min:.4f} vs asymptote {target:.4f}"


def check_kernels():
    rng = np.random.default_rng(3)
    s = make_spin_space(2.5)
    psi = rng.normal(size=s.dim**3) + 1j * rng.normal(size=s.dim**3)
    chis = np.linspace(0, 3, 17)
    c0 = x_quantized_ket(s, s.f).amplitudes
    diffs = [
        np.abs(_kernels.NUMPY_KERNELS["apply_local"](psi, s.fy, s.dim, s.dim, s.dim)
               - _kernels.NUMBA_KERNELS["apply_local"](psi, s.fy, s.dim, s.dim, s.dim)).max(),
        np.abs(_kernels.NUMPY_KERNELS["oat_moments"](s.m, c0, s.ladder, chis)
               - _kernels.NUMBA_KERNELS["oat_moments"](s.m, c0, s.ladder, chis)).max(),
    ]
    worst = float(max(diffs))
    return worst <= 1e-12, f"numba vs numpy max diff {worst:.2e} (active: {_kernels.BACKEND})"


def run_selfcheck(inject_fault: str | None = None):
    if inject_fault is not None and inject_fault not in FAULTS:
        raise ValueError(f"unknown fault {inject_fault!r}; choose from {FAULTS}")
    analytic = _faulty_zeta_sq if inject_fault == "zeta-sign" else zeta_sq_analytic
    checks = [
        ("spin_algebra_identities", check_spin_algebra),
        ("zeta_cross_check", lambda: check_zeta(analytic)),
        ("enhancement_extremes", lambda: check_extremes(analytic)),
        ("ghz_echo", check_ghz_echo),
        ("echo_identity", check_echo_identity),
        ("perturbative_exact", check_perturbative),
        ("gaussian_optimum", check_gaussian_optimum),
        ("noise_optimum", check_noise_optimum),
        ("kernel_backends", check_kernels),
    ]
    results = []
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return results
