"""Small fixed-size linear algebra: Pauli expansion, Hermitian 4x4 spectra,
so(3) exponentials and a rotation-only singular value decomposition.

Matrices are plain numpy arrays. A "rotation" is a 3x3 orthogonal matrix
with determinant +1.
"""
import numpy as np

from .kernels import jacobi_eigvalsh

HERMITIAN_TOL = 1e-12
JACOBI_TOL = 1e-14

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

# so(3) generators; GENERATORS[k] generates rotations about axis k.
GENERATORS = np.array(
    [
        [[0, 0, 0], [0, 0, -1], [0, 1, 0]],
        [[0, 0, 1], [0, 0, 0], [-1, 0, 0]],
        [[0, -1, 0], [1, 0, 0], [0, 0, 0]],
    ],
    dtype=float,
)


def is_hermitian(m, tol=HERMITIAN_TOL):
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol * max(1.0, np.max(np.abs(m), initial=0.0)))


def pauli_expand(m, tol=HERMITIAN_TOL):
    """Return ``(r0, r)`` with ``m = r0 * I + r . sigma`` for a Hermitian 2x2 ``m``."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    if not is_hermitian(m, tol):
        raise ValueError("not Hermitian")
    r0 = 0.5 * np.trace(m).real
    r = np.array([0.5 * np.trace(s @ m).real for s in PAULIS])
    return r0, r


def pauli_compose(r0, r):
    """Inverse of :func:`pauli_expand`."""
    r = np.asarray(r)
    return r0 * IDENTITY2 + r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z


def herm4_eigenvalues(h, tol=JACOBI_TOL):
    """Eigenvalues of a 4x4 Hermitian matrix in ascending order (cyclic Jacobi)."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {h.shape}")
    h = 0.5 * (h + h.conj().T)
    return jacobi_eigvalsh(h, tol)


def hat(n):
    """Cross-product matrix ``sum_k n_k G_k``."""
    x, y, z = (float(c) for c in n)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rot_exp(n):
    """``exp(sum_k n_k G_k)`` by Rodrigues' formula."""
    n = np.asarray(n, dtype=float)
    theta = float(np.linalg.norm(n))
    k = hat(n)
    if theta < 1e-8:
        # Taylor terms to second order keep orthogonality at 1e-16 here
        return np.eye(3) + k + 0.5 * (k @ k)
    return np.eye(3) + (np.sin(theta) / theta) * k + ((1.0 - np.cos(theta)) / theta**2) * (k @ k)


def rot_exp_derivatives(n):
    """Partial derivatives ``d rot_exp(n) / d n_k``, shape ``(3, 3, 3)``.

    Uses ``dR/dn_k = hat(J e_k) R`` with the left Jacobian
    ``J = I + (1 - cos t)/t^2 K + (t - sin t)/t^3 K^2``.
    """
    n = np.asarray(n, dtype=float)
    theta = float(np.linalg.norm(n))
    k = hat(n)
    if theta < 1e-6:
        jac = np.eye(3) + 0.5 * k + (k @ k) / 6.0
    else:
        jac = (
            np.eye(3)
            + ((1.0 - np.cos(theta)) / theta**2) * k
            + ((theta - np.sin(theta)) / theta**3) * (k @ k)
        )
    r = rot_exp(n)
    return np.array([hat(jac[:, i]) @ r for i in range(3)])


def rot_log(r):
    """Axis-angle vector ``n`` with ``rot_exp(n) == r`` and ``|n| <= pi``."""
    r = np.asarray(r, dtype=float)
    cos_t = np.clip(0.5 * (np.trace(r) - 1.0), -1.0, 1.0)
    theta = float(np.arccos(cos_t))
    if theta < 1e-8:
        return np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]) / 2.0
    if np.pi - theta < 1e-6:
        # near pi the antisymmetric part vanishes; read the axis off R + I
        m = 0.5 * (r + np.eye(3))
        axis = m[:, int(np.argmax(np.diag(m)))]
        axis = axis / np.linalg.norm(axis)
        return theta * axis
    w = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return theta / (2.0 * np.sin(theta)) * w


def is_rotation(r, tol=1e-12):
    r = np.asarray(r, dtype=float)
    return bool(np.allclose(r @ r.T, np.eye(3), atol=tol) and abs(np.linalg.det(r) - 1.0) <= tol)


def signed_svd(a):
    """Factor ``a = v @ diag(d) @ u.T`` with proper rotations ``v`` and ``u``.

    Reflections are moved into ``d``, so its last entry can be negative.
    """
    a = np.asarray(a, dtype=float)
    w, s, xt = np.linalg.svd(a)
    x = xt.T
    d = s.copy()
    if np.linalg.det(w) < 0:
        w[:, 2] = -w[:, 2]
        d[2] = -d[2]
    if np.linalg.det(x) < 0:
        x[:, 2] = -x[:, 2]
        d[2] = -d[2]
    return w, d, x
