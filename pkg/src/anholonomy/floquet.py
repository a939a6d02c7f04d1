"""Kicked systems and their one-parameter Floquet family.

A kicked system evolves under ``H0`` for one period ``T`` and receives a
rank-1 kick ``lam * |v><v|`` at the start of every period, so one period is

    U(lam) = exp(-i H0 T) exp(-i lam |v><v|) = U0 (1 - (1 - e^{-i lam}) |v><v|),

which is exactly ``2*pi``-periodic in ``lam``.  Quasienergies are
``E = i T^{-1} ln z`` for the eigenvalues ``z`` of ``U(lam)``, i.e. the
eigenphase ``theta`` (``z = e^{i theta}``) maps to ``E = -theta / T`` modulo
``2*pi / T``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import numlin
from .errors import DegenerateSpectrumWarning, InvalidSystemError

TWO_PI = numlin.TWO_PI

NORM_TOL = 1e-12
DEGENERACY_TOL = 1e-8
OVERLAP_TOL = 1e-8
# Values within this fraction of the period of the top of a branch window wrap to its bottom.
BRANCH_SNAP = 1e-12


@dataclass(frozen=True, eq=False)
class KickedSystem:
    """Unperturbed Hamiltonian ``h0``, normalized kick vector ``v`` and period ``period_T``."""

    h0: np.ndarray
    v: np.ndarray
    period_T: float = 1.0

    def __post_init__(self):
        try:
            h0 = numlin.as_matrix(self.h0, "h0")
            v = numlin.as_vector(self.v, "v")
        except ValueError as exc:
            raise InvalidSystemError(str(exc)) from exc
        if not numlin.is_hermitian(h0):
            raise InvalidSystemError("h0 is not Hermitian")
        if v.size != h0.shape[0]:
            raise InvalidSystemError(f"v has dimension {v.size}, h0 has {h0.shape[0]}")
        if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
            raise InvalidSystemError(f"v is not normalized (norm {np.linalg.norm(v):.15g})")
        if not (np.isfinite(self.period_T) and self.period_T > 0):
            raise InvalidSystemError("period_T must be positive")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "period_T", float(self.period_T))

    @classmethod
    def from_diagonal(cls, energies, v, period_T: float = 1.0, normalize: bool = False) -> KickedSystem:
        v = np.asarray(v, dtype=np.complex128)
        if normalize:
            v = v / np.linalg.norm(v)
        return cls(np.diag(np.asarray(energies, dtype=float)).astype(np.complex128), v, period_T)

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def quasi_period(self) -> float:
        """Width ``2*pi/T`` of one quasienergy Brillouin zone."""
        return TWO_PI / self.period_T

    @cached_property
    def h0_eig(self) -> tuple[np.ndarray, np.ndarray]:
        return numlin.eig_hermitian(self.h0)

    @cached_property
    def u0(self) -> np.ndarray:
        w, x = self.h0_eig
        return (x * np.exp(-1j * w * self.period_T)) @ x.conj().T

    @property
    def default_branch_origin(self) -> float:
        """Lowest eigenvalue of ``h0``: the quasienergy ``E_0(0)`` whenever ``T`` resolves the spectrum."""
        return float(self.h0_eig[0][0])


@dataclass(frozen=True, eq=False)
class QuasiEnergySpectrum:
    quasienergies: np.ndarray
    branch_origin: float
    eigenvectors: np.ndarray
    period_T: float

    def eigenvalues(self) -> np.ndarray:
        return np.exp(-1j * self.quasienergies * self.period_T)


@dataclass(frozen=True)
class AssumptionReport:
    u0_nondegenerate: bool
    min_eigenphase_gap: float
    v_not_eigenvector: bool
    min_overlap: float
    max_overlap: float
    overlaps: tuple[float, ...] = ()

    @property
    def ok(self) -> bool:
        return self.u0_nondegenerate and self.v_not_eigenvector

    def to_dict(self) -> dict:
        return {
            "u0_nondegenerate": self.u0_nondegenerate,
            "min_eigenphase_gap": self.min_eigenphase_gap,
            "v_not_eigenvector": self.v_not_eigenvector,
            "min_overlap": self.min_overlap,
            "max_overlap": self.max_overlap,
            "overlaps": list(self.overlaps),
            "overlaps_squared": [o * o for o in self.overlaps],
        }


def kick_factor(sys: KickedSystem, lam: float) -> np.ndarray:
    """``exp(-i lam |v><v|)`` written as the rank-1 update of the identity."""
    c = 1.0 - np.exp(-1j * lam)
    return np.eye(sys.dim, dtype=np.complex128) - c * np.outer(sys.v, sys.v.conj())


def build_floquet(sys: KickedSystem, lam: float) -> np.ndarray:
    return sys.u0 @ kick_factor(sys, lam)


def reduce_to_branch(energies, origin: float, period: float) -> np.ndarray:
    """Map energies into ``[origin, origin + period)``."""
    r = np.mod(np.asarray(energies, dtype=float) - origin, period)
    r[r >= period * (1.0 - BRANCH_SNAP)] = 0.0
    return origin + r


def circular_distance(a, b, period: float) -> np.ndarray:
    d = np.mod(np.asarray(a) - np.asarray(b), period)
    return np.minimum(d, period - d)


def phases_to_quasienergies(phases, period_T: float) -> np.ndarray:
    return -np.asarray(phases) / period_T


def spectrum_of(u: np.ndarray, period_T: float, branch_origin: float) -> QuasiEnergySpectrum:
    eig = numlin.eig_unitary(u)
    e = reduce_to_branch(phases_to_quasienergies(eig.eigenphases, period_T), branch_origin, TWO_PI / period_T)
    order = np.argsort(e, kind="stable")
    return QuasiEnergySpectrum(e[order], float(branch_origin), eig.eigenvectors[:, order], period_T)


def quasienergies(sys: KickedSystem, lam: float, branch_origin: float | None = None) -> QuasiEnergySpectrum:
    """Quasienergies of ``U(lam)`` in ``[branch_origin, branch_origin + 2*pi/T)``, ascending.

    ``branch_origin`` defaults to the lowest eigenvalue of ``h0``.
    """
    if branch_origin is None:
        branch_origin = sys.default_branch_origin
    return spectrum_of(build_floquet(sys, lam), sys.period_T, branch_origin)


def validate_assumptions(sys: KickedSystem) -> AssumptionReport:
    """Check nondegeneracy of ``U0`` and that ``v`` is not an eigenvector of it."""
    eig = numlin.eig_unitary(sys.u0)
    phases = eig.eigenphases
    if phases.size > 1:
        gaps = np.diff(np.concatenate([phases, [phases[0] + TWO_PI]]))
        min_gap = float(gaps.min())
    else:
        min_gap = TWO_PI
    overlaps = np.abs(eig.eigenvectors.conj().T @ sys.v)
    nondegenerate = min_gap > DEGENERACY_TOL
    v_ok = bool(np.all((overlaps > OVERLAP_TOL) & (overlaps < 1.0 - OVERLAP_TOL)))
    if not nondegenerate:
        warnings.warn(
            f"U0 spectrum is degenerate (min eigenphase gap {min_gap:.3e})",
            DegenerateSpectrumWarning,
            stacklevel=2,
        )
    return AssumptionReport(
        u0_nondegenerate=bool(nondegenerate),
        min_eigenphase_gap=min_gap,
        v_not_eigenvector=v_ok,
        min_overlap=float(overlaps.min()),
        max_overlap=float(min(overlaps.max(), 1.0)),
        overlaps=tuple(float(o) for o in overlaps),
    )


def fig1_system(v=None) -> KickedSystem:
    """Two-level system ``H0 = (pi/2) sigma_z``, ``T = 1``; ``v`` defaults to ``(|up> - i|down>)/sqrt(2)``."""
    if v is None:
        v = np.array([1.0, -1.0j]) / np.sqrt(2.0)
    return KickedSystem.from_diagonal([np.pi / 2, -np.pi / 2], v, 1.0)


def fig1_avoided_system() -> KickedSystem:
    return fig1_system(np.array([np.cos(np.pi / 8), np.sin(np.pi / 8)]))


def two_level_reference(lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form quasienergies and eigenvectors of :func:`fig1_system`.

    Returns ``(energies, vectors)`` with ``energies = ((lam - pi)/2, (lam + pi)/2)``
    and the matching eigenvectors as columns: ``xi_- = -sin(lam/4)|up> + cos(lam/4)|down>``
    and ``xi_+ = cos(lam/4)|up> + sin(lam/4)|down>``.
    """
    if not 0.0 <= lam <= TWO_PI:
        raise ValueError(f"lam must lie in [0, 2*pi], got {lam}")
    a = lam / 4.0
    energies = np.array([(lam - np.pi) / 2.0, (lam + np.pi) / 2.0])
    vectors = np.array([[-np.sin(a), np.cos(a)], [np.cos(a), np.sin(a)]], dtype=np.complex128)
    return energies, vectors
