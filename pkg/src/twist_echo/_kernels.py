"""
Hot numeric kernels with two interchangeable implementations.

Every kernel exists as a pure-NumPy function and as a Numba ``@njit``
function with identical signature and semantics. The dispatched names at
module level pick one of them once, at import time:

    TWIST_ECHO_BACKEND=numba   (default when numba imports)
    TWIST_ECHO_BACKEND=numpy   (force the vectorised fallback)

Both implementations stay reachable through ``NUMPY_KERNELS`` and
``NUMBA_KERNELS`` so tests and the benchmark can compare them directly.

Tensor-product index convention: row-major over the factor list, site 0
is the most significant digit (same as ``np.kron(a0, np.kron(a1, ...))``).
"""

import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def decorator(func):
            return func

        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return decorator


# ============================================================================
# Pure NumPy implementations
# ============================================================================


def apply_local_numpy(psi, op, left, d, right):
    """Apply a ``d x d`` matrix to one tensor factor of ``psi``.

    ``psi`` is viewed as shape ``(left, d, right)``; the result is a new
    flat vector.
    """
    block = psi.reshape(left, d, right)
    return np.einsum("ij,ljr->lir", op, block).reshape(-1)


def tensor_sum_numpy(vals):
    # out[i0, i1, ...] = vals[0, i0] + vals[1, i1] + ...
    out = vals[0].astype(np.float64)
    for k in range(1, vals.shape[0]):
        out = np.add.outer(out, vals[k]).reshape(-1)
    return out


def tensor_prod_numpy(vals):
    out = vals[0].astype(np.complex128)
    for k in range(1, vals.shape[0]):
        out = np.multiply.outer(out, vals[k]).reshape(-1)
    return out


def oat_moments_numpy(m, c0, ladder, chis):
    """First and second spin moments of ``exp(-i chi fz^2) |c0>`` on a chi grid.

    Parameters
    ----------
    m : (d,) float
        fz eigenvalues, descending.
    c0 : (d,) complex
        Initial amplitudes in the fz basis.
    ladder : (d-1,) float
        ``<m_i| f_+ |m_{i+1}>``.
    chis : (n,) float
        Twisting phases.

    Returns
    -------
    (n, 9) float array with columns
    <fx>, <fy>, <fz>, <fx fx>, <fy fy>, <fz fz>, <fx fy>s, <fy fz>s, <fz fx>s
    where ``s`` marks the symmetrised product (real part).
    """
    phase = np.exp(-1j * np.outer(chis, m * m))
    psi = phase * c0[None, :]
    up = np.zeros_like(psi)
    dn = np.zeros_like(psi)
    up[:, :-1] = ladder[None, :] * psi[:, 1:]
    dn[:, 1:] = ladder[None, :] * psi[:, :-1]
    vx = 0.5 * (up + dn)
    vy = -0.5j * (up - dn)
    vz = m[None, :] * psi

    def braket(a, b):
        return np.real(np.sum(np.conj(a) * b, axis=1))

    out = np.empty((chis.shape[0], 9))
    out[:, 0] = braket(psi, vx)
    out[:, 1] = braket(psi, vy)
    out[:, 2] = braket(psi, vz)
    out[:, 3] = braket(vx, vx)
    out[:, 4] = braket(vy, vy)
    out[:, 5] = braket(vz, vz)
    out[:, 6] = braket(vx, vy)
    out[:, 7] = braket(vy, vz)
    out[:, 8] = braket(vz, vx)
    return out


# ============================================================================
# Numba implementations
# ============================================================================


@njit(cache=True)
def apply_local_numba(psi, op, left, d, right):
    out = np.zeros(left * d * right, dtype=np.complex128)
    for l in range(left):
        base = l * d * right
        for i in range(d):
            row = base + i * right
            for j in range(d):
                a = op[i, j]
                if a == 0.0:
                    continue
                col = base + j * right
                for r in range(right):
                    out[row + r] += a * psi[col + r]
    return out


@njit(cache=True)
def tensor_sum_numba(vals):
    n_sites, d = vals.shape
    total = d**n_sites
    out = np.empty(total, dtype=np.float64)
    for idx in range(total):
        rem = idx
        acc = 0.0
        for k in range(n_sites - 1, -1, -1):
            acc += vals[k, rem % d]
            rem //= d
        out[idx] = acc
    return out


@njit(cache=True)
def tensor_prod_numba(vals):
    n_sites, d = vals.shape
    total = d**n_sites
    out = np.empty(total, dtype=np.complex128)
    for idx in range(total):
        rem = idx
        acc = 1.0 + 0.0j
        for k in range(n_sites - 1, -1, -1):
            acc *= vals[k, rem % d]
            rem //= d
        out[idx] = acc
    return out


@njit(cache=True)
def oat_moments_numba(m, c0, ladder, chis):
    d = m.shape[0]
    n = chis.shape[0]
    out = np.zeros((n, 9))
    psi = np.empty(d, dtype=np.complex128)
    vx = np.empty(d, dtype=np.complex128)
    vy = np.empty(d, dtype=np.complex128)
    vz = np.empty(d, dtype=np.complex128)
    for t in range(n):
        chi = chis[t]
        for i in range(d):
            psi[i] = c0[i] * np.exp(-1j * chi * m[i] * m[i])
        for i in range(d):
            up = 0.0j
            dn = 0.0j
            if i < d - 1:
                up = ladder[i] * psi[i + 1]
            if i > 0:
                dn = ladder[i - 1] * psi[i - 1]
            vx[i] = 0.5 * (up + dn)
            vy[i] = -0.5j * (up - dn)
            vz[i] = m[i] * psi[i]
        acc = np.zeros(9)
        for i in range(d):
            p = psi[i].conjugate()
            x = vx[i]
            y = vy[i]
            z = vz[i]
            acc[0] += (p * x).real
            acc[1] += (p * y).real
            acc[2] += (p * z).real
            acc[3] += (x.conjugate() * x).real
            acc[4] += (y.conjugate() * y).real
            acc[5] += (z.conjugate() * z).real
            acc[6] += (x.conjugate() * y).real
            acc[7] += (y.conjugate() * z).real
            acc[8] += (z.conjugate() * x).real
        for k in range(9):
            out[t, k] = acc[k]
    return out


NUMPY_KERNELS = {
    "apply_local": apply_local_numpy,
    "tensor_sum": tensor_sum_numpy,
    "tensor_prod": tensor_prod_numpy,
    "oat_moments": oat_moments_numpy,
}

NUMBA_KERNELS = {
    "apply_local": apply_local_numba,
    "tensor_sum": tensor_sum_numba,
    "tensor_prod": tensor_prod_numba,
    "oat_moments": oat_moments_numba,
}


def _select_backend():
    requested = os.environ.get("TWIST_ECHO_BACKEND", "numba").strip().lower()
    if requested not in ("numba", "numpy"):
        raise ValueError(
            f"TWIST_ECHO_BACKEND must be 'numba' or 'numpy', got {requested!r}"
        )
    if requested == "numba" and not NUMBA_AVAILABLE:
        return "numpy"
    return requested


BACKEND = _select_backend()
_ACTIVE = NUMBA_KERNELS if BACKEND == "numba" else NUMPY_KERNELS


def apply_local(psi, op, left, d, right):
    return _ACTIVE["apply_local"](
        np.ascontiguousarray(psi, dtype=np.complex128),
        np.ascontiguousarray(op, dtype=np.complex128),
        int(left),
        int(d),
        int(right),
    )


def tensor_sum(vals):
    return _ACTIVE["tensor_sum"](np.ascontiguousarray(vals, dtype=np.float64))


def tensor_prod(vals):
    return _ACTIVE["tensor_prod"](np.ascontiguousarray(vals, dtype=np.complex128))


def oat_moments(m, c0, ladder, chis):
    return _ACTIVE["oat_moments"](
        np.ascontiguousarray(m, dtype=np.float64),
        np.ascontiguousarray(c0, dtype=np.complex128),
        np.ascontiguousarray(ladder, dtype=np.float64),
        np.ascontiguousarray(np.atleast_1d(chis), dtype=np.float64),
    )
