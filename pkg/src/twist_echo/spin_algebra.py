"""Spin-f operator matrices, kets, expectation values and rotations.

Canonical storage basis is the fz eigenbasis with m descending
(f, f-1, ..., -f). Composite states are flat vectors ordered row-major
over their factor list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _kernels

__all__ = [
    "SpinSpace",
    "PureState",
    "make_spin_space",
    "expm_hermitian",
    "x_quantized_ket",
    "y_quantized_ket",
    "x_basis",
    "expectation",
    "variance",
    "covariance_matrix",
    "rotation",
    "fidelity",
    "product_state",
]


def _as_fraction(f) -> Fraction:
    if isinstance(f, str):
        frac = Fraction(f.strip())
    else:
        frac = Fraction(f).limit_denominator(1000)
        if abs(float(frac) - float(f)) > 1e-12:
            raise ValueError(f"f={f!r} is not a half-integer")
    if frac <= 0 or (2 * frac).denominator != 1:
        raise ValueError(f"f must be a positive half-integer, got {f!r}")
    return frac


def format_f(f) -> str:
    """Render a spin quantum number as ``'3/2'`` or ``'2'``."""
    frac = _as_fraction(f)
    return str(frac.numerator) if frac.denominator == 1 else f"{frac.numerator}/2"


@dataclass(frozen=True, eq=False)
class SpinSpace:
    """Single spin-f Hilbert space with its angular-momentum matrices."""

    f: float
    two_f: int
    dim: int
    m: np.ndarray = field(repr=False)
    ladder: np.ndarray = field(repr=False)
    fx: np.ndarray = field(repr=False)
    fy: np.ndarray = field(repr=False)
    fz: np.ndarray = field(repr=False)

    @property
    def is_half_integer(self) -> bool:
        return self.two_f % 2 == 1

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=np.complex128)

    def component(self, axis) -> np.ndarray:
        """``n . f`` for a 3-vector or one of ``'x'``, ``'y'``, ``'z'``."""
        if isinstance(axis, str):
            try:
                return {"x": self.fx, "y": self.fy, "z": self.fz}[axis]
            except KeyError:
                raise ValueError(f"unknown axis {axis!r}") from None
        n = np.asarray(axis, dtype=float)
        return n[0] * self.fx + n[1] * self.fy + n[2] * self.fz

    def __repr__(self) -> str:
        return f"SpinSpace(f={format_f(self.f)}, dim={self.dim})"


@lru_cache(maxsize=64)
def _build_space(two_f: int) -> SpinSpace:
    f = two_f / 2
    dim = two_f + 1
    m = f - np.arange(dim, dtype=float)
    # <m_i| f_+ |m_{i+1}> with m_{i+1} = m_i - 1
    ladder = np.sqrt(f * (f + 1) - m[1:] * (m[1:] + 1))
    fplus = np.diag(ladder, 1).astype(np.complex128)
    fx = 0.5 * (fplus + fplus.T)
    fy = -0.5j * (fplus - fplus.T)
    fz = np.diag(m).astype(np.complex128)
    for a in (m, ladder, fx, fy, fz):
        a.setflags(write=False)
    return SpinSpace(f=f, two_f=two_f, dim=dim, m=m, ladder=ladder, fx=fx, fy=fy, fz=fz)


def make_spin_space(f) -> SpinSpace:
    """Build the spin-f space; ``f`` may be a number, Fraction or ``'3/2'``."""
    frac = _as_fraction(f)
    return _build_space(int(2 * frac))


@dataclass(frozen=True, eq=False)
class PureState:
    """Amplitude vector over a tensor product of labelled factors.

    ``normalized`` is False for intermediates that are deliberately left
    unnormalised (for instance an operator applied to a ket).
    """

    dims: tuple
    labels: tuple
    amplitudes: np.ndarray
    normalized: bool = True
    norm_tolerance: float = 1e-10

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if len(self.dims) != len(self.labels):
            raise ValueError("dims and labels differ in length")
        if int(np.prod(self.dims)) != amps.size:
            raise ValueError(
                f"amplitude length {amps.size} does not match dims {self.dims}"
            )
        if self.normalized and abs(self.norm() - 1.0) > self.norm_tolerance:
            raise ValueError(f"state flagged normalized but has norm {self.norm()}")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "PureState":
        n = self.norm()
        if n < 1e-300:
            raise ValueError("cannot normalize a zero vector")
        return PureState(self.dims, self.labels, self.amplitudes / n, True, self.norm_tolerance)

    def with_amplitudes(self, amps, normalized=True) -> "PureState":
        return PureState(self.dims, self.labels, amps, normalized, self.norm_tolerance)

    def site_slices(self, site: int):
        left = int(np.prod(self.dims[:site], dtype=np.int64))
        right = int(np.prod(self.dims[site + 1 :], dtype=np.int64))
        return left, self.dims[site], right

    def apply_local(self, op, site: int, normalized=False) -> "PureState":
        """Apply a single-factor operator; result is flagged unnormalised by default."""
        left, d, right = self.site_slices(site)
        op = np.asarray(op)
        if op.shape != (d, d):
            raise ValueError(f"operator shape {op.shape} does not match factor dim {d}")
        out = _kernels.apply_local(self.amplitudes, op, left, d, right)
        return self.with_amplitudes(out, normalized=normalized)

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "labels": list(self.labels),
            "normalized": self.normalized,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "PureState":
        amps = np.array([complex(re, im) for re, im in data["amplitudes"]])
        return cls(
            tuple(data["dims"]),
            tuple(data["labels"]),
            amps,
            bool(data.get("normalized", True)),
        )

    @classmethod
    def from_json(cls, text: str) -> "PureState":
        return cls.from_dict(json.loads(text))


def single_atom_state(space: SpinSpace, vec, normalized=True) -> PureState:
    return PureState((space.dim,), ("atom",), vec, normalized)


def product_state(kets, labels=None) -> PureState:
    """Tensor product of single-factor kets (arrays or PureStates)."""
    vecs = [k.amplitudes if isinstance(k, PureState) else np.asarray(k) for k in kets]
    if labels is None:
        labels = [f"atom{i}" for i in range(len(vecs))]
    out = vecs[0].astype(np.complex128)
    for v in vecs[1:]:
        out = np.kron(out, v)
    norm_ok = abs(np.linalg.norm(out) - 1.0) < 1e-10
    return PureState(tuple(v.size for v in vecs), tuple(labels), out, norm_ok)


def expm_hermitian(h, t: float = 1.0) -> np.ndarray:
    """``exp(-i t H)`` for Hermitian ``H`` via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def _phase_fix(vec):
    k = np.flatnonzero(np.abs(vec) > 1e-12)[0]
    return vec * np.exp(-1j * np.angle(vec[k]))


@lru_cache(maxsize=64)
def _x_basis(two_f: int) -> np.ndarray:
    space = _build_space(two_f)
    w, v = np.linalg.eigh(space.fx)
    order = np.argsort(-w)
    basis = np.column_stack([_phase_fix(v[:, i]) for i in order])
    basis.setflags(write=False)
    return basis


def x_basis(space: SpinSpace) -> np.ndarray:
    """Columns are the x-quantized kets |f>_x, |f-1>_x, ..., |-f>_x."""
    return _x_basis(space.two_f)


def _index_of(space: SpinSpace, m) -> int:
    idx = space.f - float(m)
    i = int(round(idx))
    if abs(idx - i) > 1e-9 or not 0 <= i < space.dim:
        raise ValueError(f"m={m} not in {{-f, ..., f}} for f={format_f(space.f)}")
    return i


def x_quantized_ket(space: SpinSpace, m) -> PureState:
    """Eigenvector of fx with eigenvalue m.

    Phase convention: the first nonzero amplitude in the fz basis is real
    and positive.
    """
    return single_atom_state(space, x_basis(space)[:, _index_of(space, m)])


def x_parity(space: SpinSpace) -> np.ndarray:
    """``exp(i pi (f - fx))``: pi rotation about x with |f>_x left invariant."""
    return expm_hermitian(space.fx - space.f * space.identity, -np.pi)


def y_quantized_ket(space: SpinSpace, m) -> PureState:
    """Eigenvector of fy with eigenvalue m.

    Kets with m >= 0 carry the first-amplitude-positive phase. Kets with
    m < 0 are tied to their mirror partner by ``|-m>_y = -i X |m>_y`` with
    ``X = x_parity(space)``, so that x-parity-even cats read
    ``(|m>_y + i|-m>_y)/sqrt(2)`` for every f.
    """
    _index_of(space, m)
    w, v = np.linalg.eigh(space.fy)
    mm = float(m)
    if mm >= 0:
        j = int(np.argmin(np.abs(w - mm)))
        return single_atom_state(space, _phase_fix(v[:, j]))
    j = int(np.argmin(np.abs(w + mm)))
    partner = _phase_fix(v[:, j])
    return single_atom_state(space, -1j * (x_parity(space) @ partner))


def _vector(state) -> np.ndarray:
    return state.amplitudes if isinstance(state, PureState) else np.asarray(state)


def _apply(state, op, site):
    vec = _vector(state)
    op = np.asarray(op)
    if site is None:
        if op.shape != (vec.size, vec.size):
            raise ValueError(
                f"operator shape {op.shape} does not match state dimension {vec.size}"
            )
        return op @ vec
    if not isinstance(state, PureState):
        raise ValueError("site-local operators need a PureState with factor metadata")
    return state.apply_local(op, site).amplitudes


def expectation(state, op, site=None) -> float:
    """``<psi|op|psi>`` for Hermitian ``op``.

    ``op`` acts on the whole space, or on factor ``site`` with identity
    padding elsewhere.
    """
    vec = _vector(state)
    val = np.vdot(vec, _apply(state, op, site)) / np.vdot(vec, vec).real
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ValueError(f"expectation value has imaginary part {val.imag:.3e}")
    return float(val.real)


def variance(state, op, site=None) -> float:
    vec = _vector(state)
    ov = _apply(state, op, site)
    nrm = np.vdot(vec, vec).real
    mean = np.vdot(vec, ov).real / nrm
    second = np.vdot(ov, ov).real / nrm
    return max(second - mean * mean, 0.0)


def covariance_matrix(state, ops) -> np.ndarray:
    """Symmetrised covariance ``Re<A B> - <A><B>`` for a list of Hermitian ops."""
    vec = _vector(state)
    nrm = np.vdot(vec, vec).real
    applied = [np.asarray(op) @ vec for op in ops]
    means = np.array([np.vdot(vec, a).real for a in applied]) / nrm
    n = len(ops)
    cov = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            cov[i, j] = cov[j, i] = np.vdot(applied[i], applied[j]).real / nrm - means[i] * means[j]
    return cov


def rotation(space: SpinSpace, axis, angle: float) -> np.ndarray:
    """``exp(-i angle n.f)`` for unit vector ``n``."""
    n = np.asarray(axis, dtype=float)
    nrm = np.linalg.norm(n)
    if nrm < 1e-12:
        raise ValueError("rotation axis must be nonzero")
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError(f"rotation axis must be normalized, |n|={nrm}")
    return expm_hermitian(space.component(n), angle)


def fidelity(a, b) -> float:
    """``|<a|b>|^2`` of the normalised vectors; blind to global phases."""
    va, vb = _vector(a), _vector(b)
    num = abs(np.vdot(va, vb)) ** 2
    return float(num / (np.vdot(va, va).real * np.vdot(vb, vb).real))
