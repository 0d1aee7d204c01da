"""Holstein-Primakoff Gaussian model of the QND step, feedback and noise.

Quadrature ordering is (X_A, P_A, X_L, P_L); vacuum covariance is I/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

__all__ = [
    "GaussianState",
    "NoiseConfig",
    "symplectic_form",
    "qnd_matrix",
    "qnd_io",
    "optimal_gain",
    "measure_feedback",
    "conditional_variance",
    "xi_squared",
    "cooperative_xi",
    "noisy_xi",
    "noisy_xi_moments",
    "optimize_od",
    "required_od",
]

XA, PA, XL, PL = range(4)


def symplectic_form() -> np.ndarray:
    j = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(2), j)


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray = field(default_factory=lambda: np.zeros(4))
    cov: np.ndarray = field(default_factory=lambda: 0.5 * np.eye(4))

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(4)
        cov = np.asarray(self.cov, dtype=float).reshape(4, 4)
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def vacuum(cls) -> "GaussianState":
        return cls()

    def is_physical(self, tol: float = 1e-9) -> bool:
        """Uncertainty principle: ``cov + (i/2) Omega >= 0``."""
        herm = self.cov + 0.5j * symplectic_form()
        return bool(np.linalg.eigvalsh(herm).min() >= -tol)

    def variance(self, index: int) -> float:
        return float(self.cov[index, index])


@dataclass(frozen=True)
class NoiseConfig:
    """Light loss ``epsilon``, atomic decay ``beta`` and optical depth ``alpha0``.

    With the optical-depth parameterisation active, ``kappa^2 = alpha0 * beta``.
    """

    epsilon: float = 0.0
    beta: float = 0.0
    alpha0: float | None = None
    T: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.alpha0 is not None and self.alpha0 <= 0:
            raise ValueError("alpha0 must be positive")
        if self.T <= 0:
            raise ValueError("T must be positive")

    def kappa_from_od(self) -> float:
        if self.alpha0 is None:
            raise ValueError("alpha0 not set")
        return math.sqrt(self.alpha0 * self.beta)


def qnd_matrix(zeta_sq: float, kappa: float) -> np.ndarray:
    """Linear map of the quadratures under the QND interaction.

    X_L -> X_L - g X_A and the back-action P_A -> P_A + g P_L with
    ``g = zeta * kappa``; the pair makes the map symplectic.
    """
    g = math.sqrt(zeta_sq) * kappa
    s = np.eye(4)
    s[XL, XA] = -g
    s[PA, PL] = g
    return s


def qnd_io(state: GaussianState, zeta_sq: float, kappa: float) -> GaussianState:
    if zeta_sq < 1 - 1e-12 or kappa < 0:
        raise ValueError("need zeta_sq >= 1 and kappa >= 0")
    s = qnd_matrix(zeta_sq, kappa)
    return GaussianState(s @ state.mean, s @ state.cov @ s.T)


def optimal_gain(zeta_sq: float, kappa: float) -> float:
    zk = math.sqrt(zeta_sq) * kappa
    return -zk / (1.0 + zk * zk)


def measure_feedback(state: GaussianState | None, zeta_sq: float, kappa: float, gain: float) -> float:
    """``2 Var(X_A - g X_L^out)`` after the QND map.

    ``state`` is the input state (vacuum when None). For vacuum input this
    is ``g^2 + (1 + g zeta kappa)^2``.
    """
    out = qnd_io(state or GaussianState.vacuum(), zeta_sq, kappa)
    w = np.zeros(4)
    w[XA] = 1.0
    w[XL] = -gain
    return float(2.0 * w @ out.cov @ w)


def conditional_variance(state: GaussianState | None, zeta_sq: float, kappa: float) -> float:
    """Twice the variance of X_A conditioned on a homodyne record of X_L^out."""
    cov = qnd_io(state or GaussianState.vacuum(), zeta_sq, kappa).cov
    return float(2.0 * (cov[XA, XA] - cov[XA, XL] ** 2 / cov[XL, XL]))


def xi_squared(zeta_sq, kappa):
    return 1.0 / (1.0 + np.asarray(zeta_sq) * np.asarray(kappa) ** 2)


def cooperative_xi(xi_oat_sq, kappa):
    xi_oat_sq = np.asarray(xi_oat_sq)
    if np.any(xi_oat_sq <= 0) or np.any(xi_oat_sq > 1 + 1e-12):
        raise ValueError("xi_oat_sq must lie in (0, 1]")
    return xi_oat_sq / (1.0 + xi_oat_sq * np.asarray(kappa) ** 2)


def noisy_xi(zeta_sq, kappa, noise: NoiseConfig):
    return 1.0 / (1.0 + (1.0 - noise.epsilon) * zeta_sq * kappa**2) + noise.beta / 3.0


def noisy_xi_moments(zeta_sq: float, kappa: float, noise: NoiseConfig, rtol: float = 1e-10) -> float:
    """Cross-check of :func:`noisy_xi` from the second-moment dynamics.

    Integrates the covariance of (X_A(t), I(t)) with
    ``dX_A = -(beta/2T) X_A dt + sqrt(beta/T) dW``, ``<dW^2> = dt/2`` and
    ``dI = X_A dt / T``, then conditions X_A(T) on
    ``sqrt(1-eps) [X_L - zeta kappa I(T)] + sqrt(eps) F``.
    """
    T = noise.T
    decay = noise.beta / (2.0 * T)
    drift = np.array([[-decay, 0.0], [1.0 / T, 0.0]])
    diffusion = np.diag([noise.beta / (2.0 * T), 0.0])

    def rhs(_t, y):
        s = y.reshape(2, 2)
        return (drift @ s + s @ drift.T + diffusion).ravel()

    sol = solve_ivp(rhs, (0.0, T), np.diag([0.5, 0.0]).ravel(), rtol=rtol, atol=1e-14, method="DOP853")
    s = sol.y[:, -1].reshape(2, 2)
    zk = math.sqrt(zeta_sq) * kappa
    eps = noise.epsilon
    var_signal = (1.0 - eps) * (0.5 + zk * zk * s[1, 1]) + 0.5 * eps
    cov_xa_signal = -math.sqrt(1.0 - eps) * zk * s[0, 1]
    return float(2.0 * (s[0, 0] - cov_xa_signal**2 / var_signal))


def _od_objective(beta, zeta_sq, epsilon, alpha0):
    return 1.0 / (1.0 + (1.0 - epsilon) * zeta_sq * alpha0 * beta) + beta / 3.0


def optimize_od(zeta_sq: float, epsilon: float, alpha0: float):
    """Minimise the noisy squeezing over ``beta`` with ``kappa^2 = alpha0 beta``.

    Returns ``(beta_opt, xi_min)``.
    """
    if alpha0 <= 0:
        raise ValueError("alpha0 must be positive")
    # the objective is convex in beta; beta > 3 can never beat beta = 0
    res = minimize_scalar(
        _od_objective,
        bounds=(0.0, 3.0),
        args=(zeta_sq, epsilon, alpha0),
        method="bounded",
        options={"xatol": 1e-12, "maxiter": 500},
    )
    if not res.success:
        raise RuntimeError(f"optical-depth minimisation did not converge: {res.message}")
    return float(res.x), float(res.fun)


def asymptotic_xi_min(zeta_sq: float, epsilon: float, alpha0: float) -> float:
    return 2.0 / math.sqrt(3.0 * (1.0 - epsilon) * zeta_sq * alpha0)


def required_od(target_xi: float, zeta_sq: float, epsilon: float = 0.0,
                lo: float = 1e-3, hi: float = 1e9) -> float:
    """Smallest optical depth whose optimised squeezing reaches ``target_xi``."""

    def gap(log_alpha0):
        return optimize_od(zeta_sq, epsilon, math.exp(log_alpha0))[1] - target_xi

    if gap(math.log(hi)) > 0:
        raise ValueError("target squeezing not reachable within the optical-depth bracket")
    return math.exp(brentq(gap, math.log(lo), math.log(hi), xtol=1e-14, rtol=1e-14))
