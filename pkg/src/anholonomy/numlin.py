"""Dense complex linear algebra used by the Floquet code.

Matrices and vectors are plain ``numpy`` complex128 arrays.  Eigenvectors are
returned as the *columns* of a matrix, following the numpy/LAPACK convention.

Two Hermitian eigensolvers are available: ``"lapack"`` (``numpy.linalg.eigh``,
the default) and ``"jacobi"`` (cyclic complex Jacobi rotations implemented
here).  Both are wrapped by the same post-condition checks, so callers get the
same contract whichever backend runs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DegeneracyResolutionError,
    DimensionError,
    NotHermitianError,
    NotUnitaryError,
)

TWO_PI = 2.0 * np.pi

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
RESIDUAL_TOL = 1e-10
# Absolute on the unit-norm Hermitian parts; residual of split pairs is ~eps*|dz|/gap.
CLUSTER_TOL = 1e-5
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite, square complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def as_vector(x, name: str = "vector") -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1 or x.size == 0:
        raise DimensionError(f"{name} must be a non-empty 1-d array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")
    return x


def frobenius(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, "fro"))


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b


def is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return frobenius(h - h.conj().T) <= tol * frobenius(h)


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    return frobenius(u.conj().T @ u - np.eye(u.shape[0])) <= tol


def fix_gauge(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real and positive.

    Ties (within 1e-10 relative) go to the lowest index.
    """
    out = np.array(vectors, dtype=np.complex128, copy=True)
    mags = np.abs(out)
    peak = mags.max(axis=0)
    idx = np.argmax(mags >= peak * (1.0 - 1e-10), axis=0)
    pivots = out[idx, np.arange(out.shape[1])]
    out /= pivots / np.abs(pivots)
    return out


def _jacobi_eigh(h: np.ndarray, tol: float, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    a = np.array(h, dtype=np.complex128, copy=True)
    n = a.shape[0]
    vecs = np.eye(n, dtype=np.complex128)
    target = tol * frobenius(h)

    off_mask = ~np.eye(n, dtype=bool)

    def off_norm(m):
        return np.linalg.norm(m[off_mask])

    for _ in range(max_sweeps):
        if off_norm(a) <= target:
            return np.real(np.diag(a)).copy(), vecs
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-3 * np.finfo(float).eps * target or mag < np.finfo(float).tiny:
                    continue
                phase = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # (D J): D = diag(1, conj(phase)) makes a_pq real, J is the real Jacobi rotation
                rot = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                cols = a[:, [p, q]] @ rot
                a[:, p], a[:, q] = cols[:, 0], cols[:, 1]
                rows = rot.conj().T @ a[[p, q], :]
                a[p, :], a[q, :] = rows[0], rows[1]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vcols = vecs[:, [p, q]] @ rot
                vecs[:, p], vecs[:, q] = vcols[:, 0], vcols[:, 1]
    if off_norm(a) <= target:
        return np.real(np.diag(a)).copy(), vecs
    raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def eig_hermitian(h, method: str = "lapack") -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    h : array_like
        Square complex matrix with ``||h - h^H||_F <= 1e-12 ||h||_F``.
    method : {"lapack", "jacobi"}
        Backend.  ``"jacobi"`` runs cyclic complex Jacobi sweeps until the
        off-diagonal norm drops below ``1e-13 ||h||_F`` (at most 100 sweeps).

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Ascending.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal columns, gauge-fixed (largest component real-positive).
    """
    h = as_matrix(h, "h")
    if not is_hermitian(h):
        raise NotHermitianError("input matrix is not Hermitian")
    if method == "lapack":
        w, x = np.linalg.eigh(h)
    elif method == "jacobi":
        w, x = _jacobi_eigh(h, JACOBI_TOL, JACOBI_MAX_SWEEPS)
        order = np.argsort(w, kind="stable")
        w, x = w[order], x[:, order]
    else:
        raise ValueError(f"unknown method {method!r}")
    x = fix_gauge(x)
    scale = frobenius(h)
    resid = np.linalg.norm(h @ x - x * w, axis=0)
    if np.any(resid > RESIDUAL_TOL * max(scale, np.finfo(float).tiny)) and scale > 0:
        raise ConvergenceError(f"eigenpair residual {resid.max():.3e} exceeds tolerance")
    return w, x


@dataclass(frozen=True, eq=False)
class UnitaryEig:
    """Eigendecomposition of a unitary matrix.

    ``eigenvectors[:, n]`` has eigenvalue ``exp(1j * eigenphases[n])``.
    """

    eigenphases: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.exp(1j * self.eigenphases)

    def reconstruct(self) -> np.ndarray:
        x = self.eigenvectors
        return (x * self.eigenvalues) @ x.conj().T


def _project(h: np.ndarray, q: np.ndarray) -> np.ndarray:
    k = q.conj().T @ h @ q
    return 0.5 * (k + k.conj().T)


def _clusters(values: np.ndarray, tol: float) -> list[np.ndarray]:
    # values ascending
    breaks = np.nonzero(np.diff(values) > tol)[0] + 1
    return np.split(np.arange(values.size), breaks)


def eig_unitary(u, method: str = "lapack") -> UnitaryEig:
    """Eigendecomposition of a unitary matrix via Hermitian solves.

    ``(U + U^H)/2`` and ``(U - U^H)/2i`` commute for normal ``U``.  The first
    is diagonalized; clusters of nearly equal eigenvalues (phases ``theta`` and
    ``-theta`` share a cosine) are split by the second, projected onto the
    cluster.  Phases that still coincide within the tolerance lie on a short
    arc around some ``theta0``; they are separated by the Hermitian part of
    ``exp(-i(theta0 - pi/2)) U``, whose eigenvalues ``-sin(theta - theta0)``
    vary fastest there.  Eigenphases are reported in ``[0, 2*pi)``, ascending.
    """
    u = as_matrix(u, "u")
    if not is_unitary(u):
        raise NotUnitaryError("input matrix is not unitary")
    n = u.shape[0]
    h_plus = 0.5 * (u + u.conj().T)
    h_minus = -0.5j * (u - u.conj().T)
    w, x = eig_hermitian(h_plus, method=method)
    for idx in _clusters(w, CLUSTER_TOL):
        if idx.size == 1:
            continue
        q = x[:, idx]
        s, r = eig_hermitian(_project(h_minus, q), method=method)
        q = q @ r
        for sub in _clusters(s, CLUSTER_TOL):
            if sub.size == 1:
                continue
            qq = q[:, sub]
            k = qq.conj().T @ u @ qq
            theta0 = np.angle(np.trace(k)) if abs(np.trace(k)) > 0 else 0.0
            rotated = np.exp(-1j * (theta0 - 0.5 * np.pi)) * k
            _, rr = eig_hermitian(0.5 * (rotated + rotated.conj().T), method=method)
            q[:, sub] = qq @ rr
        x[:, idx] = q

    rayleigh = np.einsum("ij,ij->j", x.conj(), u @ x)
    phases = np.mod(np.angle(rayleigh), TWO_PI)
    phases[phases >= TWO_PI] = 0.0
    order = np.argsort(phases, kind="stable")
    phases = phases[order]
    x = fix_gauge(x[:, order])

    scale = frobenius(u)
    resid = np.linalg.norm(u @ x - x * np.exp(1j * phases), axis=0)
    if np.any(resid > RESIDUAL_TOL * scale):
        raise DegeneracyResolutionError(
            f"unitary eigenpair residual {resid.max():.3e} exceeds {RESIDUAL_TOL:g}*||U||_F"
        )
    gram = x.conj().T @ x
    if np.max(np.abs(gram - np.eye(n))) > RESIDUAL_TOL:
        raise DegeneracyResolutionError("eigenvectors lost orthonormality")
    return UnitaryEig(phases, x, resid)


def expm_unitary_from_hermitian(h, t: float, method: str = "lapack") -> np.ndarray:
    """Return ``exp(-1j * h * t)`` for Hermitian ``h`` via its eigendecomposition."""
    w, x = eig_hermitian(h, method=method)
    return (x * np.exp(-1j * w * t)) @ x.conj().T
