import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from twist_echo.physical_layer import (
    BASIS_NAMES,
    FRAMES,
    AtomLightParams,
    build_hamiltonian,
    operator_basis,
    projection_residual,
    reduction_report,
)
from twist_echo.spin_algebra import make_spin_space


def params(**kw):
    base = dict(g_coupling=1.0, detuning=2.0, a0=0.3, a1=0.7, a2=1.1, stokes=(0.3, 0.1, 0.2), phi=1.0)
    base.update(kw)
    return AtomLightParams(**base)


@pytest.mark.parametrize("frame", sorted(FRAMES))
@pytest.mark.parametrize("f", [0.5, 1, 1.5, 2, 3.5])
def test_decomposition_is_exact(frame, f):
    s = make_spin_space(f)
    p = params(frame=frame)
    h = build_hamiltonian(p, s)
    assert np.allclose(h, h.conj().T)
    rep = reduction_report(p, s)
    assert rep.residual < 1e-10
    recon = sum(c * m for c, m in zip(rep.coefficient_vector(), operator_basis(s)))
    assert np.allclose(recon, h, atol=1e-10)


def test_oat_frame_linear_polarisation_gives_fz_twist():
    s = make_spin_space(2)
    rep = reduction_report(params(stokes=(0.5, 0, 0), a1=0.0), s)
    assert np.allclose(np.abs(rep.twist_axis), [0, 0, 1], atol=1e-10)
    q = rep.quadratic_tensor
    # apart from a Casimir shift the quadratic part is a pure fz^2 term
    assert q[0, 0] == pytest.approx(q[1, 1])
    assert np.allclose(q - np.diag(np.diag(q)), 0, atol=1e-12)


def test_qnd_frame_vector_term_couples_to_fy():
    s = make_spin_space(1.5)
    rep = reduction_report(params(frame="qnd", stokes=(0, 0, 0.5), a2=0.0), s)
    lin = np.array([rep.coefficients[k] for k in ("fx", "fy", "fz")])
    g_over_d = 1.0 / 2.0
    assert np.allclose(lin, [0, g_over_d * 0.7 * 0.5, 0], atol=1e-12)


def test_spin_half_has_no_twist():
    s = make_spin_space(0.5)
    h = build_hamiltonian(params(), s)
    lin_ops = [s.identity, s.fx, s.fy, s.fz]
    assert projection_residual(h, lin_ops) < 1e-12


def test_detuning_scaling():
    s = make_spin_space(2)
    h1 = build_hamiltonian(params(detuning=1.0), s)
    h3 = build_hamiltonian(params().with_detuning(3.0), s)
    assert np.allclose(h1, 3 * h3)
    neg = reduction_report(params(detuning=-2.0), s).coefficient_vector()
    pos = reduction_report(params(detuning=2.0), s).coefficient_vector()
    assert np.allclose(neg, -pos)


@given(st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_custom_frame_is_covariant(seed):
    rot = Rotation.random(random_state=seed).as_matrix()
    s = make_spin_space(1.5)
    rep = reduction_report(params(frame=rot, a1=0.0), s)
    assert rep.frame_name == "custom"
    assert rep.residual < 1e-10
    ident = reduction_report(params(frame="identity", a1=0.0), s)
    # Q transforms as R^T Q R under the frame map
    assert np.allclose(rep.quadratic_tensor - np.trace(rep.quadratic_tensor) / 3 * np.eye(3),
                       rot.T @ (ident.quadratic_tensor - np.trace(ident.quadratic_tensor) / 3 * np.eye(3)) @ rot,
                       atol=1e-9)


def test_validation():
    with pytest.raises(ValueError):
        params(detuning=0.0)
    with pytest.raises(ValueError):
        params(stokes=(1.0, 0, 0))
    with pytest.raises(ValueError):
        params(stokes=(0.1, 0.1))
    with pytest.raises(ValueError):
        params(frame="sideways")
    with pytest.raises(ValueError):
        params(frame=np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(ValueError):
        params(frame=np.eye(2))


def test_report_serialises():
    rep = reduction_report(params(), make_spin_space(2))
    data = json.loads(rep.to_json())
    assert [c["operator"] for c in data["coefficients"]] == list(BASIS_NAMES)
    assert data["frame"] == "oat"
    assert math.isclose(data["residual"], rep.residual)


def test_projection_residual_detects_missing_operator():
    s = make_spin_space(1)
    assert projection_residual(s.fz @ s.fz, [s.identity, s.fz]) > 0.1
