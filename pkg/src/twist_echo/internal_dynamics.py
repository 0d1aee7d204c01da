"""Single-atom one-axis twisting, the enhancement factor and the echo map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels
from .spin_algebra import (
    PureState,
    SpinSpace,
    make_spin_space,
    single_atom_state,
    x_basis,
    x_quantized_ket,
    y_quantized_ket,
)

__all__ = [
    "OatParams",
    "EnhancementResult",
    "oat_unitary",
    "reference_state",
    "coupled_state",
    "zeta_sq_analytic",
    "zeta_sq_numeric",
    "enhancement_factor",
    "enhancement_grid",
    "internal_squeezing",
    "internal_squeezing_grid",
    "optimal_internal_squeezing",
    "echo_coupled_state",
    "echo_sine_term",
    "conjugated_fy",
    "ghz_states",
]

_DIRECTIONS = ("forward", "inverse")


@dataclass(frozen=True)
class OatParams:
    space: SpinSpace
    chi_t: float
    direction: str = "forward"

    def __post_init__(self):
        if not np.isfinite(self.chi_t):
            raise ValueError("chi_t must be finite")
        if self.direction not in _DIRECTIONS:
            raise ValueError(f"direction must be one of {_DIRECTIONS}")

    @classmethod
    def for_spin(cls, f, chi_t, direction="forward"):
        return cls(make_spin_space(f), float(chi_t), direction)

    def inverse(self) -> "OatParams":
        other = "inverse" if self.direction == "forward" else "forward"
        return OatParams(self.space, self.chi_t, other)


@dataclass(frozen=True)
class EnhancementResult:
    zeta_sq_analytic: float
    zeta_sq_numeric: float
    f: float
    chi_t: float

    @property
    def discrepancy(self) -> float:
        return abs(self.zeta_sq_analytic - self.zeta_sq_numeric)


def oat_phases(space: SpinSpace, chi_t: float, direction: str = "forward") -> np.ndarray:
    sign = -1.0 if direction == "forward" else 1.0
    return np.exp(sign * 1j * chi_t * space.m**2)


def oat_unitary(params: OatParams) -> np.ndarray:
    """Diagonal ``exp(-i chi_t fz^2)``; the inverse direction is its adjoint."""
    return np.diag(oat_phases(params.space, params.chi_t, params.direction))


def _require_forward(params: OatParams):
    if params.direction != "forward":
        raise ValueError("expected forward OAT parameters")


def reference_state(params: OatParams) -> PureState:
    """Twisted coherent state ``U_OAT |f>_x``."""
    _require_forward(params)
    css = x_quantized_ket(params.space, params.space.f).amplitudes
    return single_atom_state(params.space, oat_phases(params.space, params.chi_t) * css)


def coupled_state(params: OatParams, axis="y"):
    """Return ``(|down>, delta)`` with ``|down> = (f_a - <f_a>)|up> / delta``.

    For the default y axis ``<f_y> = 0`` on the reference state, so this
    is ``f_y|up>`` over its standard deviation.
    """
    up = reference_state(params).amplitudes
    fa = params.space.component(axis)
    v = fa @ up
    v = v - np.vdot(up, v).real * up
    delta = float(np.linalg.norm(v))
    if delta < 1e-12:
        raise ValueError("degenerate reference state: vanishing spread along the axis")
    return single_atom_state(params.space, v / delta), delta


def zeta_sq_analytic(f, chi_t):
    """Closed-form enhancement factor, vectorised over ``chi_t``.

    The cosine power ``2f - 2`` is an integer; for f = 1/2 the result is
    identically 1.
    """
    space = make_spin_space(f)
    chi_t = np.asarray(chi_t, dtype=float)
    if space.two_f == 1:
        return np.ones_like(chi_t)[()]
    power = space.two_f - 2
    ff = space.f
    return (ff + 0.5 - (ff - 0.5) * np.cos(2.0 * chi_t) ** power)[()]


def _moments(space: SpinSpace, chis) -> np.ndarray:
    css = x_quantized_ket(space, space.f).amplitudes
    return _kernels.oat_moments(space.m, css, space.ladder, np.atleast_1d(chis))


_COLUMN = {"x": 0, "y": 1, "z": 2}


def zeta_sq_numeric(f, chi_t, axis="y"):
    """``2 Var(f_axis) / f`` on the reference state, vectorised over ``chi_t``."""
    space = make_spin_space(f)
    mom = _moments(space, chi_t)
    k = _COLUMN[axis]
    var = mom[:, 3 + k] - mom[:, k] ** 2
    out = 2.0 * var / space.f
    return out[0] if np.ndim(chi_t) == 0 else out


def enhancement_factor(f, chi_t: float) -> EnhancementResult:
    space = make_spin_space(f)
    return EnhancementResult(
        zeta_sq_analytic=float(zeta_sq_analytic(space.f, chi_t)),
        zeta_sq_numeric=float(zeta_sq_numeric(space.f, chi_t)),
        f=space.f,
        chi_t=float(chi_t),
    )


def enhancement_grid(f, chis):
    """Analytic and numeric enhancement factor on a grid; returns two arrays."""
    chis = np.asarray(chis, dtype=float)
    return np.atleast_1d(zeta_sq_analytic(f, chis)), np.atleast_1d(zeta_sq_numeric(f, chis))


def internal_squeezing_grid(f, chis):
    """Minimum normalised variance in the y-z plane on the reference state.

    ``2 lambda_min(C) / f`` where ``C`` is the 2x2 covariance of (fy, fz).
    """
    space = make_spin_space(f)
    chis = np.atleast_1d(np.asarray(chis, dtype=float))
    mom = _moments(space, chis)
    vyy = mom[:, 4] - mom[:, 1] ** 2
    vzz = mom[:, 5] - mom[:, 2] ** 2
    cyz = mom[:, 7] - mom[:, 1] * mom[:, 2]
    half_tr = 0.5 * (vyy + vzz)
    lam = half_tr - np.sqrt((0.5 * (vyy - vzz)) ** 2 + cyz**2)
    return 2.0 * np.maximum(lam, 0.0) / space.f


def internal_squeezing(f, chi_t: float) -> float:
    return float(internal_squeezing_grid(f, [chi_t])[0])


def optimal_internal_squeezing(f, n_grid: int = 4000, chi_max: float = np.pi / 2):
    """Minimise the internal squeezing over ``chi_t`` in ``(0, chi_max]``.

    Coarse grid then a bracketed Brent refinement; returns ``(chi_t, xi_oat_sq)``.
    """
    grid = np.linspace(chi_max / n_grid, chi_max, n_grid)
    vals = internal_squeezing_grid(f, grid)
    i = int(np.argmin(vals))
    if i == 0 or i == n_grid - 1:
        return float(grid[i]), float(vals[i])
    res = minimize_scalar(
        lambda c: internal_squeezing(f, c),
        bracket=(grid[i - 1], grid[i], grid[i + 1]),
        tol=1e-12,
    )
    if res.fun <= vals[i]:
        return float(res.x), float(res.fun)
    return float(grid[i]), float(vals[i])


def echo_coupled_state(params: OatParams, axis="y"):
    """Unnormalised ``U^dagger f_a U |f>_x`` and its norm."""
    _require_forward(params)
    space = params.space
    vec = np.conj(oat_phases(space, params.chi_t)) * (
        space.component(axis) @ reference_state(params).amplitudes
    )
    return single_atom_state(space, vec, normalized=False), float(np.linalg.norm(vec))


def conjugated_fy(space: SpinSpace, chi_t: float) -> np.ndarray:
    """Closed form of ``U^dagger fy U`` built from ladder operators.

    ``U^dagger f_+ U = f_+ exp(i chi_t (2 fz + 1))`` and its adjoint.
    """
    fplus = np.diag(space.ladder, 1).astype(np.complex128)
    raise_part = fplus @ np.diag(np.exp(1j * chi_t * (2 * space.m + 1)))
    lower_part = raise_part.conj().T
    return (raise_part - lower_part) / 2j


def echo_sine_term(params: OatParams) -> np.ndarray:
    """``exp(-i chi_t) f sin(2 chi_t fz) |f>_x``, the leading term of the
    closed-form echo coupled state."""
    space = params.space
    css = x_quantized_ket(space, space.f).amplitudes
    return np.exp(-1j * params.chi_t) * space.f * (np.sin(2 * params.chi_t * space.m) * css)


def ghz_states(space: SpinSpace):
    """``(|y,f> + i|y,-f>)/sqrt(2)`` and ``(|y,f> - i|y,-f>)/sqrt(2)``.

    See :func:`y_quantized_ket` for the relative phase convention.
    """
    top = y_quantized_ket(space, space.f).amplitudes
    bottom = y_quantized_ket(space, -space.f).amplitudes
    plus = (top + 1j * bottom) / np.sqrt(2)
    minus = (top - 1j * bottom) / np.sqrt(2)
    return single_atom_state(space, plus), single_atom_state(space, minus)


def x_sector_amplitudes(state: PureState) -> np.ndarray:
    """Amplitudes ``<f-k|_x psi>`` for k = 0..2f."""
    space = make_spin_space((state.dim - 1) / 2)
    return x_basis(space).conj().T @ state.amplitudes
