import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anholonomy import numlin
from anholonomy.errors import DimensionError, NotHermitianError, NotUnitaryError

from oracles import bisect_eigenvalues, loop_matmul, random_hermitian, random_unitary, taylor_expm


def test_matmul_matches_loops():
    rng = np.random.default_rng(0)
    for n in (1, 2, 5):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        b = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        assert np.allclose(numlin.matmul(a, b), loop_matmul(a, b), atol=1e-13)


def test_matmul_rejects_mismatch():
    with pytest.raises(DimensionError):
        numlin.matmul(np.eye(2), np.eye(3))
    with pytest.raises(DimensionError):
        numlin.as_matrix(np.ones((2, 3)))


def test_fix_gauge_largest_component_real_positive():
    x = np.array([[0.6j, 0.1], [-0.8j, 1.0j]])
    g = numlin.fix_gauge(x)
    assert np.isclose(g[1, 0], 0.8)
    assert np.isclose(g[1, 1], 1.0)
    # tie goes to the lowest index
    t = numlin.fix_gauge(np.array([[1j], [-1.0]]) / np.sqrt(2))
    assert np.isclose(t[0, 0], 1 / np.sqrt(2))


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_eig_hermitian_against_inertia_bisection(method):
    rng = np.random.default_rng(1)
    for n in (1, 2, 3, 6):
        h = random_hermitian(rng, n)
        w, x = numlin.eig_hermitian(h, method=method)
        assert np.all(np.diff(w) >= 0)
        assert np.allclose(w, bisect_eigenvalues(h), atol=1e-11)
        assert np.allclose(x.conj().T @ x, np.eye(n), atol=1e-12)
        assert np.linalg.norm(h @ x - x * w) <= 1e-10 * np.linalg.norm(h)


def test_jacobi_agrees_with_lapack():
    rng = np.random.default_rng(2)
    for n in (4, 12, 30):
        h = random_hermitian(rng, n, scale=3.0)
        wl, xl = numlin.eig_hermitian(h)
        wj, xj = numlin.eig_hermitian(h, method="jacobi")
        assert np.allclose(wl, wj, atol=1e-11 * np.linalg.norm(h))
        # gauge fixing makes nondegenerate eigenvectors comparable entrywise
        assert np.allclose(xl, xj, atol=1e-8)


def test_jacobi_degenerate_and_diagonal():
    w, x = numlin.eig_hermitian(np.diag([2.0, -1.0, 2.0]), method="jacobi")
    assert np.allclose(w, [-1.0, 2.0, 2.0])
    assert np.allclose(np.abs(x.conj().T @ x), np.eye(3))
    w, _ = numlin.eig_hermitian(np.zeros((3, 3)), method="jacobi")
    assert np.all(w == 0)


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        numlin.eig_hermitian(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        numlin.eig_hermitian(np.eye(2), method="qr")


def test_eig_unitary_random():
    rng = np.random.default_rng(3)
    for n in (1, 2, 7, 20):
        u = random_unitary(rng, n)
        res = numlin.eig_unitary(u)
        assert np.all(np.diff(res.eigenphases) >= 0)
        assert res.eigenphases.min() >= 0 and res.eigenphases.max() < 2 * np.pi
        assert res.residuals.max() <= 1e-10 * np.linalg.norm(u)
        assert np.abs(res.eigenvectors.conj().T @ res.eigenvectors - np.eye(n)).max() <= 1e-10
        assert np.linalg.norm(res.reconstruct() - u) <= 1e-9
        ref = np.sort(np.mod(np.angle(np.linalg.eigvals(u)), 2 * np.pi))
        assert np.allclose(np.exp(1j * res.eigenphases), np.exp(1j * ref), atol=1e-10)


def test_eig_unitary_mirror_phases_and_degeneracy():
    rng = np.random.default_rng(4)
    q = random_unitary(rng, 6)
    # pairs +-theta share a cosine; 0.3 appears twice
    phases = np.array([0.3, -0.3, 2.0, -2.0, 0.3, np.pi])
    u = (q * np.exp(1j * phases)) @ q.conj().T
    res = numlin.eig_unitary(u)
    assert np.allclose(np.sort(np.mod(phases, 2 * np.pi)), res.eigenphases, atol=1e-12)
    assert res.residuals.max() <= 1e-10 * np.linalg.norm(u)
    # near-degenerate pair closer than the clustering tolerance
    phases = np.array([1.0, 1.0 + 3e-7, 1.0 + 1e-6, 4.0])
    q = random_unitary(rng, 4)
    u = (q * np.exp(1j * phases)) @ q.conj().T
    res = numlin.eig_unitary(u)
    assert res.residuals.max() <= 1e-10 * np.linalg.norm(u)
    assert np.allclose(res.eigenphases, phases, atol=1e-10)


def test_eig_unitary_phase_zero_not_two_pi():
    res = numlin.eig_unitary(np.diag(np.exp(1j * np.array([-1e-17, 1.0]))))
    assert res.eigenphases[0] == 0.0 or res.eigenphases[0] < 1e-15


def test_eig_unitary_rejects_non_unitary():
    with pytest.raises(NotUnitaryError):
        numlin.eig_unitary(2 * np.eye(2))


def test_expm_matches_taylor():
    rng = np.random.default_rng(5)
    for n, t in ((2, 1.0), (5, 0.37), (8, 3.0)):
        h = random_hermitian(rng, n)
        u = numlin.expm_unitary_from_hermitian(h, t)
        assert np.allclose(u, taylor_expm(-1j * t * h), atol=1e-11)
        assert numlin.is_unitary(u)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_eig_unitary_property(n, seed):
    u = random_unitary(np.random.default_rng(seed), n)
    res = numlin.eig_unitary(u)
    assert np.linalg.norm(res.reconstruct() - u) <= 1e-9
    assert np.abs(res.eigenvectors.conj().T @ res.eigenvectors - np.eye(n)).max() <= 1e-10
