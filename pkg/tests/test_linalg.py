import numpy as np
import pytest

from dichannel.linalg import (
    GENERATORS,
    PAULIS,
    herm4_eigenvalues,
    is_rotation,
    pauli_compose,
    pauli_expand,
    rot_exp,
    rot_exp_derivatives,
    rot_log,
    signed_svd,
)

from oracles import jacobi_svd


def random_hermitian(rng, n):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (m + m.conj().T)


def random_unitary(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.mark.parametrize(
    "m, r0, r",
    [
        (np.eye(2), 1.0, (0, 0, 0)),
        (np.diag([1.0, 0.0]), 0.5, (0, 0, 0.5)),
        (0.5 * (np.eye(2) + PAULIS[0]), 0.5, (0.5, 0, 0)),
    ],
)
def test_pauli_expand_examples(m, r0, r):
    got0, got = pauli_expand(m)
    assert got0 == pytest.approx(r0, abs=1e-15)
    assert np.allclose(got, r, atol=1e-15)


def test_pauli_expand_rejects_non_hermitian():
    with pytest.raises(ValueError, match="not Hermitian"):
        pauli_expand(np.array([[0, 1], [0, 0]]))


def test_pauli_roundtrip():
    rng = np.random.default_rng(1)
    for _ in range(100_000 // 100):
        ms = [random_hermitian(rng, 2) for _ in range(100)]
        for m in ms:
            assert np.abs(pauli_compose(*pauli_expand(m)) - m).max() <= 1e-12


def test_herm4_examples():
    assert np.allclose(herm4_eigenvalues(np.eye(4)), 1.0, atol=1e-12)
    assert np.allclose(herm4_eigenvalues(np.diag([3.0, 1.0, 4.0, 1.0])), [1, 1, 3, 4], atol=1e-12)


def test_herm4_trace_and_unitary_invariance():
    rng = np.random.default_rng(2)
    for _ in range(10_000):
        h = random_hermitian(rng, 4)
        w = herm4_eigenvalues(h)
        assert abs(w.sum() - np.trace(h).real) <= 1e-9
        u = random_unitary(rng, 4)
        assert np.abs(herm4_eigenvalues(u @ h @ u.conj().T) - w).max() <= 1e-8


def test_herm4_against_lapack():
    rng = np.random.default_rng(3)
    for _ in range(500):
        h = random_hermitian(rng, 4)
        ref = np.linalg.eigvalsh(h)
        assert np.abs(herm4_eigenvalues(h) - ref).max() <= 1e-10 * max(1.0, np.abs(ref).max())


def test_rot_exp_examples():
    assert np.allclose(rot_exp([0, 0, 0]), np.eye(3), atol=1e-15)
    r = rot_exp([0, 0, np.pi / 2])
    assert np.allclose(r @ [1, 0, 0], [0, 1, 0], atol=1e-12)
    assert np.allclose(rot_exp([2 * np.pi, 0, 0]), np.eye(3), atol=1e-12)


def test_rot_exp_matches_series():
    rng = np.random.default_rng(4)
    for _ in range(50):
        n = rng.normal(size=3)
        k = np.tensordot(n, GENERATORS, axes=1)
        series = np.eye(3)
        term = np.eye(3)
        for j in range(1, 60):
            term = term @ k / j
            series = series + term
        assert np.abs(rot_exp(n) - series).max() <= 1e-11


def test_rot_exp_inverse_and_log():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        n = rng.normal(size=3)
        n *= rng.uniform(0, np.pi) / np.linalg.norm(n)
        r = rot_exp(n)
        assert is_rotation(r)
        assert np.abs(r @ rot_exp(-n) - np.eye(3)).max() <= 1e-12
        assert np.allclose(rot_exp(rot_log(r)), r, atol=1e-10)


def test_rot_exp_derivatives_fd():
    rng = np.random.default_rng(6)
    for n in [rng.normal(size=3), np.array([1e-8, 0.0, 0.0]), np.zeros(3)]:
        d = rot_exp_derivatives(n)
        for k in range(3):
            e = np.zeros(3)
            e[k] = 1e-6
            fd = (rot_exp(n + e) - rot_exp(n - e)) / 2e-6
            assert np.abs(d[k] - fd).max() <= 1e-8


def test_signed_svd_examples():
    v, d, u = signed_svd(np.eye(3))
    assert np.allclose(np.abs(d), 1.0)
    assert np.allclose(v @ np.diag(d) @ u.T, np.eye(3), atol=1e-12)
    a = np.diag([2.0, -3.0, 0.0])
    v, d, u = signed_svd(a)
    assert sorted(np.abs(d)) == pytest.approx([0.0, 2.0, 3.0])
    assert np.allclose(v @ np.diag(d) @ u.T, a, atol=1e-12)
    assert is_rotation(v) and is_rotation(u)


def test_signed_svd_against_jacobi_oracle():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        a = rng.normal(size=(3, 3))
        v, d, u = signed_svd(a)
        assert is_rotation(v, 1e-10) and is_rotation(u, 1e-10)
        assert np.abs(v @ np.diag(d) @ u.T - a).max() <= 1e-10
        assert np.allclose(np.sort(np.abs(d)), jacobi_svd(a), atol=1e-10)
