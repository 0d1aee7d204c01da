"""Exact small-N simulation of the echo protocol on atoms (x) light.

State layout: N spin-f atom factors followed (when present) by one
truncated light mode with Fock states |0>..|n_max>. The QND unitary is
never formed densely; it is applied through the eigendecomposition of
its generator, which factorises over atoms and light.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .internal_dynamics import (
    OatParams,
    coupled_state,
    echo_coupled_state,
    oat_phases,
    reference_state,
)
from .spin_algebra import (
    PureState,
    SpinSpace,
    make_spin_space,
    product_state,
    x_basis,
    x_quantized_ket,
)

__all__ = [
    "QndConfig",
    "LightMode",
    "QndUnitary",
    "DimensionCapExceeded",
    "qnd_unitary",
    "homodyne_condition",
    "outcome_density",
    "sample_outcome",
    "perturbative_state",
    "run_echo_protocol",
    "rf_map",
    "wineland",
    "collective_moments",
    "attach_vacuum",
    "permute_atoms",
]

DEFAULT_DIM_CAP = 200_000
# per-f atom-number defaults; anything unlisted falls back to 2
DEFAULT_MAX_ATOMS = {1: 6, 2: 5, 3: 4, 4: 3, 5: 3}


class DimensionCapExceeded(ValueError):
    pass


def default_axis(f) -> str:
    return "y" if make_spin_space(f).is_half_integer else "x"


@dataclass(frozen=True)
class QndConfig:
    """Couplings and measurement settings for one exact run.

    ``kappa`` is derived as ``sqrt(f N) * alpha_tilde``.
    """

    alpha_tilde: float
    n_atoms: int
    f: float
    axis: str | None = None
    n_max: int = 10
    x_m: float = 0.0
    dim_cap: int = DEFAULT_DIM_CAP
    max_atoms: int | None = None

    def __post_init__(self):
        space = make_spin_space(self.f)
        object.__setattr__(self, "f", space.f)
        if self.axis is None:
            object.__setattr__(self, "axis", default_axis(space.f))
        if self.axis not in ("x", "y"):
            raise ValueError(f"measurement axis must be 'x' or 'y', got {self.axis!r}")
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValueError("n_atoms must be a positive integer")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))
        if self.n_max < 2:
            raise ValueError("n_max must be at least 2")
        if not np.isfinite(self.alpha_tilde) or self.alpha_tilde < 0:
            raise ValueError("alpha_tilde must be a finite non-negative number")

    @classmethod
    def from_kappa(cls, kappa, n_atoms, f, **kwargs):
        f = make_spin_space(f).f
        return cls(alpha_tilde=kappa / math.sqrt(f * n_atoms), n_atoms=n_atoms, f=f, **kwargs)

    @property
    def space(self) -> SpinSpace:
        return make_spin_space(self.f)

    @property
    def kappa(self) -> float:
        return math.sqrt(self.f * self.n_atoms) * self.alpha_tilde

    @property
    def atom_dim(self) -> int:
        return self.space.dim**self.n_atoms

    @property
    def total_dim(self) -> int:
        return self.atom_dim * (self.n_max + 1)

    @property
    def atom_limit(self) -> int:
        if self.max_atoms is not None:
            return self.max_atoms
        return DEFAULT_MAX_ATOMS.get(self.space.two_f, 2)

    def check_dimensions(self):
        if self.total_dim > self.dim_cap:
            raise DimensionCapExceeded(
                f"total dimension {self.total_dim} exceeds cap {self.dim_cap}"
            )
        if self.n_atoms > self.atom_limit:
            raise DimensionCapExceeded(
                f"N={self.n_atoms} exceeds the atom limit {self.atom_limit} for this f"
            )


def hermite_functions(n_max: int, x) -> np.ndarray:
    """``<x|n>`` for n = 0..n_max, shape ``(len(x), n_max + 1)``.

    Normalised Hermite functions by the three-term recurrence, matching
    ``X = (a + a^dagger)/sqrt(2)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((x.size, n_max + 1))
    out[:, 0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[:, 1] = math.sqrt(2.0) * x * out[:, 0]
    for n in range(1, n_max):
        out[:, n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[:, n] - math.sqrt(n / (n + 1)) * out[:, n - 1]
    return out


@dataclass(frozen=True)
class LightMode:
    n_max: int = 10
    x_min: float = -8.0
    x_max: float = 8.0
    n_grid: int = 801

    @cached_property
    def annihilation(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.n_max + 1, dtype=float)), 1).astype(np.complex128)

    @cached_property
    def X(self) -> np.ndarray:
        a = self.annihilation
        return (a + a.conj().T) / math.sqrt(2.0)

    @cached_property
    def P(self) -> np.ndarray:
        a = self.annihilation
        return 1j * (a.conj().T - a) / math.sqrt(2.0)

    @cached_property
    def grid(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_grid)

    @cached_property
    def quadrature_eigenfunctions(self) -> np.ndarray:
        return hermite_functions(self.n_max, self.grid)

    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights on the grid."""
        h = self.grid[1] - self.grid[0]
        w = np.full(self.n_grid, h)
        w[0] = w[-1] = h / 2
        return w

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.n_max + 1, dtype=np.complex128)
        v[0] = 1.0
        return v


@dataclass
class QndUnitary:
    """``exp(-i alpha_tilde F_axis (x) P_L)`` stored in factorised eigenform."""

    alpha_tilde: float
    n_atoms: int
    atom_vecs: np.ndarray
    atom_vals: np.ndarray
    light_vecs: np.ndarray
    light_vals: np.ndarray
    collective_vals: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.collective_vals = _kernels.tensor_sum(np.tile(self.atom_vals, (self.n_atoms, 1)))

    @property
    def atom_dim(self) -> int:
        return self.collective_vals.size

    @property
    def light_dim(self) -> int:
        return self.light_vals.size

    @property
    def dim(self) -> int:
        return self.atom_dim * self.light_dim

    def phases(self) -> np.ndarray:
        return np.exp(-1j * self.alpha_tilde * np.outer(self.collective_vals, self.light_vals))

    def _atoms_to(self, vec, mat):
        d = self.atom_vecs.shape[0]
        for site in range(self.n_atoms):
            left = d**site
            right = d ** (self.n_atoms - site - 1) * self.light_dim
            vec = _kernels.apply_local(vec, mat, left, d, right)
        return vec

    def apply_vector(self, vec, adjoint=False) -> np.ndarray:
        vec = self._atoms_to(np.asarray(vec, dtype=np.complex128), self.atom_vecs.conj().T)
        block = vec.reshape(self.atom_dim, self.light_dim) @ self.light_vecs.conj()
        ph = self.phases()
        block = block * (ph.conj() if adjoint else ph)
        vec = (block @ self.light_vecs.T).reshape(-1)
        return self._atoms_to(vec, self.atom_vecs)

    def apply(self, state: PureState) -> PureState:
        if state.dim != self.dim:
            raise ValueError(f"state dimension {state.dim} does not match unitary {self.dim}")
        return state.with_amplitudes(self.apply_vector(state.amplitudes), state.normalized)

    def matrix(self, max_dim: int = 4096) -> np.ndarray:
        """Dense matrix; only for small test instances."""
        if self.dim > max_dim:
            raise DimensionCapExceeded(f"dense matrix of dimension {self.dim} refused")
        eye = np.eye(self.dim, dtype=np.complex128)
        return np.column_stack([self.apply_vector(eye[:, k]) for k in range(self.dim)])

    def generator(self, space: SpinSpace, axis: str, light: LightMode) -> np.ndarray:
        """Dense ``alpha_tilde F_axis (x) P_L`` for cross-checks."""
        f_axis = space.component(axis)
        eye = np.eye(space.dim)
        total = np.zeros((self.atom_dim, self.atom_dim), dtype=np.complex128)
        for i in range(self.n_atoms):
            term = np.array([[1.0 + 0j]])
            for j in range(self.n_atoms):
                term = np.kron(term, f_axis if i == j else eye)
            total += term
        return self.alpha_tilde * np.kron(total, light.P)


def qnd_unitary(cfg: QndConfig, light: LightMode | None = None) -> QndUnitary:
    cfg.check_dimensions()
    light = light or LightMode(n_max=cfg.n_max)
    if light.n_max != cfg.n_max:
        raise ValueError("light mode truncation differs from cfg.n_max")
    space = cfg.space
    aw, av = np.linalg.eigh(space.component(cfg.axis))
    lw, lv = np.linalg.eigh(light.P)
    return QndUnitary(cfg.alpha_tilde, cfg.n_atoms, av, aw, lv, lw)


def atom_labels(n_atoms: int):
    return tuple(f"atom{i}" for i in range(n_atoms))


def attach_vacuum(atoms: PureState, light: LightMode) -> PureState:
    return PureState(
        atoms.dims + (light.n_max + 1,),
        atoms.labels + ("light",),
        np.kron(atoms.amplitudes, light.vacuum()),
        atoms.normalized,
    )


def _split_light(state: PureState):
    if not state.labels or state.labels[-1] != "light":
        raise ValueError("state has no light factor")
    n_light = state.dims[-1]
    return state.amplitudes.reshape(-1, n_light), n_light


def homodyne_condition(state: PureState, x_m: float, min_density: float = 1e-14):
    """Project the light factor on ``<x_m|``.

    Returns the normalised atomic state and the outcome probability
    density ``|| <x_m|psi> ||^2``.
    """
    block, n_light = _split_light(state)
    psi_x = hermite_functions(n_light - 1, [x_m])[0]
    atoms = block @ psi_x
    density = float(np.vdot(atoms, atoms).real)
    if density < min_density:
        raise ValueError(f"homodyne outcome x_m={x_m} has negligible density {density:.3e}")
    out = PureState(state.dims[:-1], state.labels[:-1], atoms, normalized=False)
    return out.normalize(), density


def outcome_density(state: PureState, grid) -> np.ndarray:
    """Homodyne probability density evaluated on ``grid``."""
    block, n_light = _split_light(state)
    psi = hermite_functions(n_light - 1, grid)
    amps = block @ psi.T
    return np.sum(np.abs(amps) ** 2, axis=0)


def sample_outcome(state: PureState, rng: np.random.Generator, light: LightMode | None = None) -> float:
    """Draw one homodyne outcome from the grid-discretised density."""
    light = light or LightMode(n_max=state.dims[-1] - 1)
    p = outcome_density(state, light.grid) * light.weights()
    p = p / p.sum()
    return float(rng.choice(light.grid, p=p))


def _echo_down_ket(space: SpinSpace, axis: str) -> np.ndarray:
    # |-f> with the phase fixed by the echo map itself
    vec, norm = echo_coupled_state(OatParams(space, np.pi / 2), axis=axis)
    return vec.amplitudes / norm


def _pair_superposition(n_atoms, lead, pair, coef) -> PureState:
    """``lead^N - coef * sum over ordered pairs i != j`` of ``pair_i pair_j lead...``.

    Each unordered pair appears twice in the ordered sum.
    """
    out = product_state([lead] * n_atoms).amplitudes.copy()
    for i, j in itertools.combinations(range(n_atoms), 2):
        kets = [pair if k in (i, j) else lead for k in range(n_atoms)]
        out -= 2.0 * coef * product_state(kets).amplitudes
    state = PureState((lead.size,) * n_atoms, atom_labels(n_atoms), out, normalized=False)
    return state.normalize()


def perturbative_state(cfg: QndConfig, variant: str, chi_t: float | None = None) -> PureState:
    """Second-order conditioned atomic state at ``x_m = 0``.

    ``twisted``: reference and coupled states at ``chi_t``, weight kappa^2 zeta^2/(4N).
    ``echo``: after the inverse twist, unnormalised echo kets, weight kappa^2/(2Nf).
    ``ghz``: GHZ echo point, kets |f>, |-f>, weight 2f kappa^2/(4N).
    The pair sum runs over ordered pairs.
    """
    n = cfg.n_atoms
    if n < 2:
        raise ValueError("perturbative states need N >= 2")
    space = cfg.space
    kappa = cfg.kappa
    if variant == "twisted":
        if chi_t is None:
            raise ValueError("the twisted variant needs chi_t")
        params = OatParams(space, chi_t)
        lead = reference_state(params).amplitudes
        down, delta = coupled_state(params, axis=cfg.axis)
        zeta_sq = 2.0 * delta**2 / space.f
        return _pair_superposition(n, lead, down.amplitudes, kappa**2 * zeta_sq / (4 * n))
    if variant == "echo":
        if chi_t is None:
            raise ValueError("the echo variant needs chi_t")
        lead = x_quantized_ket(space, space.f).amplitudes
        down_prime, _ = echo_coupled_state(OatParams(space, chi_t), axis=cfg.axis)
        return _pair_superposition(n, lead, down_prime.amplitudes, kappa**2 / (2 * n * space.f))
    if variant == "ghz":
        if chi_t is not None and not np.isclose(chi_t, np.pi / 2, atol=1e-12):
            raise ValueError("the ghz variant is defined at chi_t = pi/2 only")
        expected = "y" if space.is_half_integer else "x"
        if cfg.axis != expected:
            raise ValueError(
                f"the ghz variant needs axis={expected!r} for f={space.f} (got {cfg.axis!r})"
            )
        lead = x_quantized_ket(space, space.f).amplitudes
        down = _echo_down_ket(space, cfg.axis)
        return _pair_superposition(n, lead, down, (math.sqrt(2 * space.f) * kappa) ** 2 / (4 * n))
    raise ValueError(f"unknown variant {variant!r}")


def oat_product(space: SpinSpace, n_atoms: int, chi_t: float, direction="forward") -> np.ndarray:
    """Diagonal of ``U_OAT^{(x)N}`` as a flat vector."""
    phases = oat_phases(space, chi_t, direction)
    return _kernels.tensor_prod(np.tile(phases, (n_atoms, 1)))


def css(space: SpinSpace, n_atoms: int) -> PureState:
    ket = x_quantized_ket(space, space.f).amplitudes
    return product_state([ket] * n_atoms, atom_labels(n_atoms))


def run_echo_protocol(cfg: QndConfig, chi_t: float, light: LightMode | None = None,
                      x_m: float | None = None, return_density: bool = False):
    """CSS -> twist -> QND -> homodyne(x_m) -> untwist; returns the atomic state."""
    cfg.check_dimensions()
    light = light or LightMode(n_max=cfg.n_max)
    space = cfg.space
    n = cfg.n_atoms
    x_m = cfg.x_m if x_m is None else x_m
    atoms = css(space, n)
    atoms = atoms.with_amplitudes(oat_product(space, n, chi_t) * atoms.amplitudes)
    joint = qnd_unitary(cfg, light).apply(attach_vacuum(atoms, light))
    cond, density = homodyne_condition(joint, x_m)
    out = cond.with_amplitudes(oat_product(space, n, chi_t, "inverse") * cond.amplitudes)
    return (out, density) if return_density else out


def _atom_space(state: PureState) -> SpinSpace:
    dims = set(state.dims)
    if len(dims) != 1 or any(lbl == "light" for lbl in state.labels):
        raise ValueError("expected a state of identical atom factors only")
    return make_spin_space((state.dims[0] - 1) / 2)


def rf_map(state: PureState) -> PureState:
    """Swap |-f>_x and |f-1>_x on every atom."""
    space = _atom_space(state)
    if space.two_f < 2:
        raise ValueError("rf map needs f >= 1 so that |f-1> differs from |-f>")
    basis = x_basis(space)
    perm = np.eye(space.dim)
    perm[[1, -1]] = perm[[-1, 1]]
    single = basis @ perm @ basis.conj().T
    out = state
    for site in range(len(state.dims)):
        out = out.apply_local(single, site)
    return out.with_amplitudes(out.amplitudes, state.normalized)


def collective_apply(state: PureState, op) -> np.ndarray:
    out = np.zeros(state.dim, dtype=np.complex128)
    for site in range(len(state.dims)):
        out += state.apply_local(op, site).amplitudes
    return out


def collective_moments(state: PureState):
    """Mean vector and symmetrised 3x3 covariance of (Fx, Fy, Fz)."""
    space = _atom_space(state)
    psi = state.amplitudes
    nrm = np.vdot(psi, psi).real
    applied = [collective_apply(state, op) for op in (space.fx, space.fy, space.fz)]
    mean = np.array([np.vdot(psi, a).real for a in applied]) / nrm
    cov = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            cov[i, j] = cov[j, i] = np.vdot(applied[i], applied[j]).real / nrm - mean[i] * mean[j]
    return mean, cov


def perpendicular_frame(direction) -> np.ndarray:
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    trial = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    a = np.cross(n, trial)
    a /= np.linalg.norm(a)
    b = np.cross(n, a)
    return np.vstack([a, b])


def wineland(state: PureState, f=None, n_atoms=None, details=False):
    """Metrological squeezing ``2 f N (dF_perp)^2 / |<F>|^2``."""
    space = _atom_space(state)
    if f is not None and not np.isclose(make_spin_space(f).f, space.f):
        raise ValueError("f does not match the state's atom dimension")
    n = len(state.dims)
    if n_atoms is not None and n_atoms != n:
        raise ValueError("n_atoms does not match the state's factor count")
    mean, cov = collective_moments(state)
    length_sq = float(mean @ mean)
    if length_sq < 1e-20:
        raise ValueError("mean collective spin vanishes; Wineland parameter undefined")
    frame = perpendicular_frame(mean)
    perp_cov = frame @ cov @ frame.T
    var_perp = float(np.linalg.eigvalsh(perp_cov)[0])
    xi = 2.0 * space.f * n * var_perp / length_sq
    if details:
        return xi, {"mean": mean, "var_perp": var_perp, "cov": cov}
    return xi


def permute_atoms(state: PureState, order) -> PureState:
    """Reorder the atom factors (light, if present, stays last)."""
    has_light = state.labels[-1] == "light"
    n_atoms = len(state.dims) - int(has_light)
    order = list(order)
    axes = order + ([n_atoms] if has_light else [])
    amps = state.amplitudes.reshape(state.dims).transpose(axes).reshape(-1)
    dims = tuple(state.dims[k] for k in axes)
    labels = tuple(state.labels[k] for k in axes)
    return PureState(dims, labels, amps, state.normalized)
