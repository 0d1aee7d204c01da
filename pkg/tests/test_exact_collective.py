import math

import numpy as np
import pytest
import scipy.linalg
from scipy.special import eval_hermite

from twist_echo import exact_collective as ec
from twist_echo.internal_dynamics import OatParams, oat_unitary
from twist_echo.spin_algebra import PureState, fidelity, make_spin_space, x_quantized_ket

from conftest import random_ket


def hermite_oracle(n, x):
    x = np.asarray(x, dtype=float)
    norm = 1 / math.sqrt(2.0**n * math.factorial(n) * math.sqrt(math.pi))
    return norm * eval_hermite(n, x) * np.exp(-x * x / 2)


def test_hermite_functions_match_scipy():
    x = np.linspace(-6, 6, 41)
    h = ec.hermite_functions(12, x)
    for n in range(13):
        assert np.allclose(h[:, n], hermite_oracle(n, x), atol=1e-12)


def test_light_mode_operators():
    light = ec.LightMode(n_max=20)
    comm = light.X @ light.P - light.P @ light.X
    # [X, P] = i away from the truncation edge
    assert np.allclose(comm[:-1, :-1], 1j * np.eye(20), atol=1e-12)
    # the default grid resolves the Fock functions used by the engine
    light = ec.LightMode()
    w = light.weights()
    psi = light.quadrature_eigenfunctions
    gram = (psi * w[:, None]).T @ psi
    assert np.allclose(gram, np.eye(11), atol=1e-10)


def test_qnd_config_defaults_and_validation():
    assert ec.QndConfig(0.1, 3, 1.5).axis == "y"
    assert ec.QndConfig(0.1, 3, 2).axis == "x"
    cfg = ec.QndConfig.from_kappa(0.3, 3, "3/2")
    assert cfg.kappa == pytest.approx(0.3)
    assert cfg.total_dim == 4**3 * 11
    for kwargs in ({"axis": "z"}, {"n_atoms": 0}, {"n_max": 1}, {"alpha_tilde": -1.0}):
        base = {"alpha_tilde": 0.1, "n_atoms": 2, "f": 1}
        base.update(kwargs)
        with pytest.raises(ValueError):
            ec.QndConfig(**base)
    with pytest.raises(ec.DimensionCapExceeded):
        ec.QndConfig(0.1, 7, 0.5).check_dimensions()
    with pytest.raises(ec.DimensionCapExceeded):
        ec.QndConfig(0.1, 3, 1, dim_cap=100).check_dimensions()
    ec.QndConfig(0.1, 7, 0.5, max_atoms=7).check_dimensions()


@pytest.mark.parametrize("f,n,axis", [(0.5, 2, "y"), (1, 2, "x"), (1.5, 2, "y")])
def test_qnd_unitary_matches_dense_expm(f, n, axis):
    cfg = ec.QndConfig(0.37, n, f, axis=axis, n_max=6)
    light = ec.LightMode(n_max=6)
    u = ec.qnd_unitary(cfg, light)
    dense = scipy.linalg.expm(-1j * u.generator(cfg.space, axis, light))
    assert np.allclose(u.matrix(), dense, atol=1e-10)
    rng = np.random.default_rng(0)
    v = random_ket(rng, u.dim)
    assert np.allclose(u.apply_vector(u.apply_vector(v), adjoint=True), v, atol=1e-12)


def test_qnd_unitary_refuses_large_dense_matrix():
    u = ec.qnd_unitary(ec.QndConfig(0.1, 4, 0.5))
    with pytest.raises(ec.DimensionCapExceeded):
        u.matrix(max_dim=10)


def test_homodyne_density_normalised_and_conditioning():
    cfg = ec.QndConfig(0.3, 3, 0.5)
    light = ec.LightMode(n_max=cfg.n_max)
    atoms = ec.css(cfg.space, 3)
    joint = ec.qnd_unitary(cfg, light).apply(ec.attach_vacuum(atoms, light))
    dens = ec.outcome_density(joint, light.grid)
    assert np.sum(dens * light.weights()) == pytest.approx(1.0, abs=1e-8)
    cond, p = ec.homodyne_condition(joint, 0.4)
    assert cond.normalized and cond.dims == (2, 2, 2)
    assert p == pytest.approx(np.interp(0.4, light.grid, dens), rel=1e-6)
    with pytest.raises(ValueError):
        ec.homodyne_condition(joint, 40.0)
    with pytest.raises(ValueError):
        ec.homodyne_condition(atoms, 0.0)


def test_no_coupling_leaves_css():
    cfg = ec.QndConfig(0.0, 3, 1.5)
    out = ec.run_echo_protocol(cfg, 0.9)
    assert fidelity(out, ec.css(cfg.space, 3)) == pytest.approx(1.0, abs=1e-12)


def test_protocol_matches_dense_pipeline():
    cfg = ec.QndConfig(0.2, 2, 1.5, n_max=8)
    chi = 0.7
    s = cfg.space
    light = ec.LightMode(n_max=8)
    u1 = oat_unitary(OatParams(s, chi))
    twist = np.kron(u1, u1)
    qnd = scipy.linalg.expm(-1j * ec.qnd_unitary(cfg, light).generator(s, "y", light))
    up = x_quantized_ket(s, s.f).amplitudes
    psi = np.kron(twist @ np.kron(up, up), light.vacuum())
    psi = (qnd @ psi).reshape(-1, 9) @ np.array([hermite_oracle(n, 0.25) for n in range(9)])
    psi = twist.conj().T @ psi
    out = ec.run_echo_protocol(cfg, chi, x_m=0.25)
    assert fidelity(out, psi) == pytest.approx(1.0, abs=1e-10)


def test_sample_outcome_is_seeded():
    cfg = ec.QndConfig(0.3, 2, 0.5)
    light = ec.LightMode()
    joint = ec.qnd_unitary(cfg, light).apply(ec.attach_vacuum(ec.css(cfg.space, 2), light))
    a = [ec.sample_outcome(joint, np.random.default_rng(5), light) for _ in range(3)]
    assert a[0] == a[1] == a[2]
    draws = [ec.sample_outcome(joint, np.random.default_rng(k), light) for k in range(400)]
    # vacuum-like outcome distribution: variance near 1/2 plus a small signal term
    assert 0.4 < np.var(draws) < 0.7


@pytest.mark.parametrize("variant", ["twisted", "echo", "ghz"])
def test_perturbative_states_approach_exact(variant):
    alpha = 0.05
    cfg = ec.QndConfig(alpha, 4, 0.5)
    chi = math.pi / 2 if variant == "ghz" else 0.6
    exact = ec.run_echo_protocol(cfg, chi)
    approx = ec.perturbative_state(cfg, variant, None if variant == "ghz" else chi)
    if variant == "twisted":
        # the twisted variant lives before the inverse twist
        twist = ec.oat_product(cfg.space, 4, chi, "inverse")
        approx = approx.with_amplitudes(twist * approx.amplitudes)
    assert 1 - fidelity(exact, approx) <= 10 * alpha**3


def test_twisted_variant_untwisted_equals_echo_variant():
    cfg = ec.QndConfig(0.1, 3, 1.5)
    chi = 0.45
    a = ec.perturbative_state(cfg, "twisted", chi)
    a = a.with_amplitudes(ec.oat_product(cfg.space, 3, chi, "inverse") * a.amplitudes)
    b = ec.perturbative_state(cfg, "echo", chi)
    assert fidelity(a, b) == pytest.approx(1.0, abs=1e-12)


def test_perturbative_state_argument_checks():
    cfg = ec.QndConfig(0.1, 3, 1.5)
    with pytest.raises(ValueError):
        ec.perturbative_state(cfg, "twisted")
    with pytest.raises(ValueError):
        ec.perturbative_state(cfg, "ghz", 0.3)
    with pytest.raises(ValueError):
        ec.perturbative_state(ec.QndConfig(0.1, 3, 1.5, axis="x"), "ghz")
    with pytest.raises(ValueError):
        ec.perturbative_state(cfg, "fourth")
    with pytest.raises(ValueError):
        ec.perturbative_state(ec.QndConfig(0.1, 1, 1.5), "ghz")


def test_rf_map_swaps_sectors():
    s = make_spin_space(1.5)
    down = x_quantized_ket(s, -1.5).amplitudes
    nxt = x_quantized_ket(s, 0.5).amplitudes
    up = x_quantized_ket(s, 1.5).amplitudes
    st = PureState((4, 4), ("a", "b"), np.kron(down, up))
    out = ec.rf_map(st)
    assert fidelity(out, np.kron(nxt, up)) == pytest.approx(1.0)
    assert fidelity(ec.rf_map(out), st) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ec.rf_map(ec.css(make_spin_space(0.5), 2))


def test_wineland_of_css_is_one():
    for f, n in [(0.5, 4), (1, 3), (2.5, 2)]:
        s = make_spin_space(f)
        assert ec.wineland(ec.css(s, n)) == pytest.approx(1.0, abs=1e-12)
    xi, info = ec.wineland(ec.css(make_spin_space(1), 2), details=True)
    assert np.allclose(info["mean"], [2, 0, 0])
    with pytest.raises(ValueError):
        ec.wineland(ec.css(make_spin_space(1), 2), f=2)


def test_wineland_rejects_zero_mean():
    s = make_spin_space(0.5)
    singlet = np.array([0, 1, -1, 0]) / math.sqrt(2)
    with pytest.raises(ValueError):
        ec.wineland(PureState((2, 2), ("a", "b"), singlet))


def test_wineland_squeezed_after_rf():
    cfg = ec.QndConfig.from_kappa(0.2, 3, 1.5)
    out = ec.run_echo_protocol(cfg, math.pi / 2)
    assert ec.wineland(ec.rf_map(out)) < 1.0


def test_permutation_symmetry(rng):
    cfg = ec.QndConfig(0.2, 3, 1, n_max=6)
    out = ec.run_echo_protocol(cfg, 0.4, x_m=0.3)
    perm = ec.permute_atoms(out, [2, 0, 1])
    assert np.allclose(perm.amplitudes, out.amplitudes, atol=1e-12)
    st = PureState((2, 3), ("a", "b"), random_ket(rng, 6))
    swapped = ec.permute_atoms(st, [1, 0])
    assert swapped.dims == (3, 2) and swapped.labels == ("b", "a")


def test_collective_moments_and_frame():
    mean, cov = ec.collective_moments(ec.css(make_spin_space(2), 2))
    assert np.allclose(mean, [4, 0, 0])
    assert np.allclose(cov, np.diag([0, 2, 2]), atol=1e-12)
    fr = ec.perpendicular_frame([0.3, -0.2, 0.9])
    assert np.allclose(fr @ fr.T, np.eye(2))
    assert np.allclose(fr @ np.array([0.3, -0.2, 0.9]), 0)
