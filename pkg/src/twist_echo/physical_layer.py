"""Effective dispersive atom-light Hamiltonian and its operator decomposition.

The Hamiltonian is written in a beam frame whose first axis is the
propagation direction. ``frame`` maps beam-frame spin components onto lab
components: ``slot_k = sum_j R[k, j] f_j``. Presets:

* ``"identity"`` - beam frame equals lab frame.
* ``"oat"``      - beam along lab x; slots (x, y, z) -> (f_x, f_z, -f_y).
  Linear polarisation then gives a pure ``f_z^2`` twist.
* ``"qnd"``      - beam along lab y; slots (x, y, z) -> (f_y, f_z, f_x).
  The vector term then couples to ``f_y``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .spin_algebra import SpinSpace

__all__ = [
    "FRAMES",
    "AtomLightParams",
    "ReductionReport",
    "build_hamiltonian",
    "operator_basis",
    "reduction_report",
    "projection_residual",
]

FRAMES = {
    "identity": np.eye(3),
    "oat": np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]]),
    "qnd": np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]),
}


def _resolve_frame(frame):
    if isinstance(frame, str):
        try:
            return frame, FRAMES[frame]
        except KeyError:
            raise ValueError(f"unknown frame preset {frame!r}; choose from {sorted(FRAMES)}") from None
    mat = np.asarray(frame, dtype=float)
    if mat.shape != (3, 3):
        raise ValueError("frame matrix must be 3x3")
    if not np.allclose(mat @ mat.T, np.eye(3), atol=1e-10) or np.linalg.det(mat) < 0:
        raise ValueError("frame matrix must be a proper rotation")
    return "custom", mat


@dataclass(frozen=True)
class AtomLightParams:
    g_coupling: float
    detuning: float
    a0: float
    a1: float
    a2: float
    stokes: tuple = (0.0, 0.0, 0.0)
    phi: float = 1.0
    frame: object = "oat"

    def __post_init__(self):
        if self.detuning == 0:
            raise ValueError("detuning must be nonzero")
        s = np.asarray(self.stokes, dtype=float)
        if s.shape != (3,):
            raise ValueError("stokes must be a 3-vector")
        if np.linalg.norm(s) > self.phi / 2 + 1e-12:
            raise ValueError("|stokes| exceeds phi/2")
        _resolve_frame(self.frame)

    @property
    def frame_matrix(self) -> np.ndarray:
        return _resolve_frame(self.frame)[1]

    @property
    def frame_name(self) -> str:
        return _resolve_frame(self.frame)[0]

    def with_detuning(self, detuning) -> "AtomLightParams":
        return AtomLightParams(self.g_coupling, detuning, self.a0, self.a1, self.a2,
                               self.stokes, self.phi, self.frame)


def beam_components(space: SpinSpace, frame) -> list:
    _, mat = _resolve_frame(frame)
    lab = (space.fx, space.fy, space.fz)
    return [sum(mat[k, j] * lab[j] for j in range(3)) for k in range(3)]


def build_hamiltonian(params: AtomLightParams, space: SpinSpace) -> np.ndarray:
    """``(g/Delta) [a0 phi + a1 s_z f_x + a2 (-phi f_x^2 + 2 s_x (f_y^2 - f_z^2)
    + 2 s_y (f_z f_y + f_y f_z))]`` with beam-frame components."""
    gx, gy, gz = beam_components(space, params.frame)
    sx, sy, sz = (float(v) for v in params.stokes)
    eye = space.identity
    tensor = -params.phi * gx @ gx + 2 * sx * (gy @ gy - gz @ gz) + 2 * sy * (gz @ gy + gy @ gz)
    h = (params.g_coupling / params.detuning) * (
        params.a0 * params.phi * eye + params.a1 * sz * gx + params.a2 * tensor
    )
    return 0.5 * (h + h.conj().T)


BASIS_NAMES = ("I", "fx", "fy", "fz", "fx^2", "fy^2", "fz^2", "{fx,fy}", "{fy,fz}", "{fz,fx}")


def operator_basis(space: SpinSpace) -> list:
    fx, fy, fz = space.fx, space.fy, space.fz
    return [
        space.identity, fx, fy, fz,
        fx @ fx, fy @ fy, fz @ fz,
        fx @ fy + fy @ fx, fy @ fz + fz @ fy, fz @ fx + fx @ fz,
    ]


def _realify(mats):
    return np.column_stack([np.concatenate([m.real.ravel(), m.imag.ravel()]) for m in mats])


def _lstsq(h, mats):
    a = _realify(mats)
    b = np.concatenate([h.real.ravel(), h.imag.ravel()])
    coef = np.linalg.lstsq(a, b, rcond=1e-12)[0]
    recon = sum(c * m for c, m in zip(coef, mats))
    return coef, float(np.linalg.norm(h - recon))


def projection_residual(h, ops) -> float:
    """Frobenius norm of ``h`` minus its projection onto ``span(ops)``."""
    return _lstsq(np.asarray(h), [np.asarray(o) for o in ops])[1]


@dataclass
class ReductionReport:
    coefficients: dict
    residual: float
    quadratic_tensor: np.ndarray
    twist_eigenvalues: np.ndarray
    twist_axis: np.ndarray
    frame_name: str
    frame_matrix: np.ndarray
    params: dict = field(default_factory=dict)

    def coefficient_vector(self) -> np.ndarray:
        return np.array([self.coefficients[k] for k in BASIS_NAMES])

    def to_dict(self) -> dict:
        return {
            "frame": self.frame_name,
            "frame_matrix": self.frame_matrix.tolist(),
            "params": self.params,
            "coefficients": [{"operator": k, "coefficient": self.coefficients[k]} for k in BASIS_NAMES],
            "residual": self.residual,
            "quadratic_tensor": self.quadratic_tensor.tolist(),
            "twist_eigenvalues": self.twist_eigenvalues.tolist(),
            "twist_axis": self.twist_axis.tolist(),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def reduction_report(params: AtomLightParams, space: SpinSpace) -> ReductionReport:
    """Decompose the Hamiltonian on ``BASIS_NAMES`` (minimum-norm least squares).

    The quadratic part is also summarised as a symmetric tensor ``Q`` with
    ``H_quad = sum_jk Q_jk f_j f_k``; the eigenvector of its traceless part
    whose eigenvalue stands furthest from the other two is the twist axis.
    """
    h = build_hamiltonian(params, space)
    coef, residual = _lstsq(h, operator_basis(space))
    c = dict(zip(BASIS_NAMES, (float(v) for v in coef)))
    q = np.array([
        [c["fx^2"], c["{fx,fy}"], c["{fz,fx}"]],
        [c["{fx,fy}"], c["fy^2"], c["{fy,fz}"]],
        [c["{fz,fx}"], c["{fy,fz}"], c["fz^2"]],
    ])
    traceless = q - np.trace(q) / 3 * np.eye(3)
    w, v = np.linalg.eigh(traceless)
    spread = [abs(w[k] - np.mean(np.delete(w, k))) for k in range(3)]
    k = int(np.argmax(spread))
    axis = v[:, k] * np.sign(v[np.argmax(np.abs(v[:, k])), k])
    return ReductionReport(
        coefficients=c,
        residual=residual,
        quadratic_tensor=q,
        twist_eigenvalues=w,
        twist_axis=axis,
        frame_name=params.frame_name,
        frame_matrix=params.frame_matrix,
        params={
            "g_coupling": params.g_coupling,
            "detuning": params.detuning,
            "a0": params.a0,
            "a1": params.a1,
            "a2": params.a2,
            "stokes": [float(s) for s in params.stokes],
            "phi": params.phi,
        },
    )
