"""Continuation of quasienergy branches around one cycle of the kick strength.

Branches are followed from ``lam = 0`` to ``lam = 2*pi`` by matching
eigenvectors between neighbouring grid points.  Quasienergies are unwrapped
along the way, so after the cycle each branch carries its total increment and
lands on some ``lam = 0`` branch; that landing map is the holonomy permutation.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import floquet
from .errors import AmbiguousMatching, AnholonomyError, DegenerateBranch, NonCyclicPermutationWarning
from .floquet import TWO_PI, KickedSystem

DEFAULT_POINTS = 512
DEFAULT_MIN_STEP = TWO_PI * 1e-6
DEFAULT_OVERLAP_THRESHOLD = 0.7
BRANCH_DEGENERACY_TOL = 1e-10
# dE/dlam lies in [0, 1/T]; steps up to pi/2 keep the true change within a quarter zone.
MAX_STEP = np.pi / 2


class AssumptionViolation(AnholonomyError):
    """The system breaks nondegeneracy of U0 or the kick-vector overlap condition."""


@dataclass(frozen=True, eq=False)
class FlowGrid:
    """Grid of kick strengths over one cycle.

    ``lambdas`` must start at 0 and end at ``2*pi``, strictly ascending.  The
    all-zero grid is accepted as a null cycle.
    """

    lambdas: np.ndarray
    adaptive: bool = True
    min_step: float = DEFAULT_MIN_STEP
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD

    def __post_init__(self):
        lams = np.asarray(self.lambdas, dtype=float)
        if lams.ndim != 1 or lams.size < 2:
            raise ValueError("grid needs at least two points")
        if lams[0] != 0.0:
            raise ValueError("grid must start at 0")
        if not self.is_null_cycle_of(lams):
            if not np.all(np.diff(lams) > 0):
                raise ValueError("grid must be strictly ascending")
            if not np.isclose(lams[-1], TWO_PI, rtol=0, atol=1e-12):
                raise ValueError("grid must end at 2*pi")
            lams[-1] = TWO_PI
        if self.min_step <= 0:
            raise ValueError("min_step must be positive")
        if not 0.0 < self.overlap_threshold < 1.0:
            raise ValueError("overlap_threshold must lie in (0, 1)")
        object.__setattr__(self, "lambdas", lams)

    @staticmethod
    def is_null_cycle_of(lams: np.ndarray) -> bool:
        return bool(np.all(lams == 0.0))

    @property
    def is_null_cycle(self) -> bool:
        return self.is_null_cycle_of(self.lambdas)

    @classmethod
    def uniform(cls, points: int = DEFAULT_POINTS, **kwargs) -> FlowGrid:
        return cls(np.linspace(0.0, TWO_PI, points), **kwargs)


@dataclass(frozen=True, eq=False)
class SpectralFlow:
    """Tracked branches on the accepted grid.

    Arrays are indexed ``[grid point, tracked branch]``; ``vectors`` is
    ``[grid point, component, tracked branch]``.  ``spectra`` holds the full
    branch-reduced spectrum at each point and ``match_index`` the position of
    each tracked branch inside it.
    """

    lambdas: np.ndarray
    branch_ids: np.ndarray
    e_unwrapped: np.ndarray
    e_branch: np.ndarray
    vectors: np.ndarray
    overlap_v: np.ndarray
    match_index: np.ndarray
    spectra: np.ndarray
    period_T: float
    branch_origin: float
    grid: FlowGrid
    refinements: int = 0

    @property
    def quasi_period(self) -> float:
        return TWO_PI / self.period_T

    @property
    def num_levels(self) -> int:
        return self.spectra.shape[1]

    @property
    def is_complete(self) -> bool:
        return self.branch_ids.size == self.num_levels

    def column(self, branch: int) -> int:
        hits = np.nonzero(self.branch_ids == branch)[0]
        if hits.size == 0:
            raise IndexError(f"branch {branch} was not tracked")
        return int(hits[0])


@dataclass(frozen=True, eq=False)
class HolonomyResult:
    permutation: tuple[int, ...]
    delta_E: np.ndarray
    nu: int | None
    branch_ids: tuple[int, ...] = ()

    @property
    def cyclic(self) -> bool:
        return self.nu is not None

    def sum_rule_residual(self, period_T: float) -> float:
        return float(np.sum(self.delta_E) - TWO_PI / period_T)

    def to_dict(self, period_T: float) -> dict:
        return {
            "permutation": list(self.permutation),
            "delta_E": [float(x) for x in self.delta_E],
            "nu": self.nu,
            "sum_delta_E": float(np.sum(self.delta_E)),
            "sum_rule_residual": self.sum_rule_residual(period_T),
        }


@dataclass(frozen=True, eq=False)
class DerivativeCheck:
    lambdas: np.ndarray
    branch_ids: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    abs_err: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "abs_err", np.abs(self.lhs - self.rhs))

    @property
    def max_error(self) -> float:
        return float(self.abs_err.max()) if self.abs_err.size else 0.0

    def rows(self):
        for i, lam in enumerate(self.lambdas):
            for j, b in enumerate(self.branch_ids):
                yield float(lam), int(b), float(self.lhs[i, j]), float(self.rhs[i, j]), float(self.abs_err[i, j])


@dataclass
class _Point:
    lam: float
    e_unwrapped: np.ndarray
    e_branch: np.ndarray
    vectors: np.ndarray
    match: np.ndarray
    spectrum: np.ndarray


def greedy_match(overlaps: np.ndarray) -> np.ndarray:
    """Assign each row to a distinct column by descending overlap."""
    rows, cols = overlaps.shape
    order = np.argsort(-overlaps, axis=None, kind="stable")
    assigned = np.full(rows, -1)
    used_cols = np.zeros(cols, dtype=bool)
    left = rows
    for flat in order:
        r, c = divmod(int(flat), cols)
        if assigned[r] >= 0 or used_cols[c]:
            continue
        assigned[r] = c
        used_cols[c] = True
        left -= 1
        if left == 0:
            break
    return assigned


def _check_nondegenerate(spectrum: np.ndarray, match: np.ndarray, period_T: float, lam: float):
    if spectrum.size < 2:
        return
    period = TWO_PI / period_T
    for idx in match:
        others = np.delete(spectrum, idx)
        gap = floquet.circular_distance(spectrum[idx], others, period).min() * period_T
        if gap < BRANCH_DEGENERACY_TOL:
            raise DegenerateBranch(f"tracked branch is degenerate at lambda={lam:.12g} (eigenphase gap {gap:.3e})")


def track_flow(
    sys: KickedSystem,
    grid: FlowGrid | None = None,
    branches=None,
    branch_origin: float | None = None,
    force: bool = False,
) -> SpectralFlow:
    """Follow quasienergy branches of ``sys`` over ``grid``.

    Parameters
    ----------
    branches : sequence of int, optional
        Branch indices (ascending order at ``lam = 0``) to follow.  All by default.
    force : bool
        Skip the assumption check.  Degeneracy of a tracked branch is still fatal.

    Raises
    ------
    AssumptionViolation
        ``U0`` degenerate or ``v`` not generic, unless ``force``.
    AmbiguousMatching
        A step could not be matched even at ``grid.min_step`` (or with
        ``adaptive=False``).
    DegenerateBranch
        A tracked branch touches another level.
    """
    grid = FlowGrid.uniform() if grid is None else grid
    if not force:
        report = floquet.validate_assumptions(sys)
        if not report.u0_nondegenerate:
            raise AssumptionViolation(
                f"assumption (i) violated: U0 is degenerate (min eigenphase gap {report.min_eigenphase_gap:.3e})"
            )
        if not report.v_not_eigenvector:
            raise AssumptionViolation(
                "assumption (ii) violated: |<v|xi_n(0)>| must lie strictly between 0 and 1 "
                f"(observed range [{report.min_overlap:.3g}, {report.max_overlap:.3g}])"
            )
    origin = sys.default_branch_origin if branch_origin is None else float(branch_origin)
    period = sys.quasi_period
    spec0 = floquet.quasienergies(sys, 0.0, origin)
    n = sys.dim
    ids = np.arange(n) if branches is None else np.asarray(sorted(set(int(b) for b in branches)))
    if ids.size == 0 or ids.min() < 0 or ids.max() >= n:
        raise IndexError(f"branch indices must lie in [0, {n})")
    _check_nondegenerate(spec0.quasienergies, ids, sys.period_T, 0.0)

    first = _Point(0.0, spec0.quasienergies[ids].copy(), spec0.quasienergies[ids].copy(),
                   spec0.eigenvectors[:, ids], ids.copy(), spec0.quasienergies)
    accepted = [first]
    refinements = 0

    def attempt(prev: _Point, lam: float):
        if lam == TWO_PI or lam == 0.0:
            spec = spec0
        else:
            spec = floquet.quasienergies(sys, lam, origin)
        ov = np.abs(prev.vectors.conj().T @ spec.eigenvectors) ** 2
        match = greedy_match(ov)
        best = ov[np.arange(ids.size), match]
        e_new = spec.quasienergies[match]
        step = np.mod(e_new - prev.e_unwrapped + period / 2, period) - period / 2
        if best.min() < grid.overlap_threshold or np.abs(step).max() > period / 4:
            return None
        return _Point(lam, prev.e_unwrapped + step, e_new, spec.eigenvectors[:, match], match, spec.quasienergies)

    targets = list(grid.lambdas[1:])
    targets.reverse()
    while targets:
        lam = targets.pop()
        prev = accepted[-1]
        h = lam - prev.lam
        point = attempt(prev, lam) if h <= MAX_STEP else None
        if point is None:
            if grid.adaptive and h / 2 >= grid.min_step:
                targets.append(lam)
                targets.append(prev.lam + h / 2)
                refinements += 1
                continue
            raise AmbiguousMatching(
                f"cannot match branches between lambda={prev.lam:.12g} and {lam:.12g} "
                f"(step {h:.3e}, threshold {grid.overlap_threshold})"
            )
        _check_nondegenerate(point.spectrum, point.match, sys.period_T, lam)
        accepted.append(point)

    v = sys.v
    vectors = np.stack([p.vectors for p in accepted])
    return SpectralFlow(
        lambdas=np.array([p.lam for p in accepted]),
        branch_ids=ids,
        e_unwrapped=np.stack([p.e_unwrapped for p in accepted]),
        e_branch=np.stack([p.e_branch for p in accepted]),
        vectors=vectors,
        overlap_v=np.abs(np.einsum("i,kij->kj", v.conj(), vectors)) ** 2,
        match_index=np.stack([p.match for p in accepted]),
        spectra=np.stack([p.spectrum for p in accepted]),
        period_T=sys.period_T,
        branch_origin=origin,
        grid=grid,
        refinements=refinements,
    )


def holonomy(flow: SpectralFlow) -> HolonomyResult:
    """Permutation of branches and quasienergy increments after one cycle."""
    end = flow.lambdas[-1]
    if not (end == TWO_PI or (end == 0.0 and FlowGrid.is_null_cycle_of(flow.lambdas))):
        raise ValueError("flow does not cover a full cycle")
    perm = tuple(int(i) for i in flow.match_index[-1])
    delta = flow.e_unwrapped[-1] - flow.e_unwrapped[0]
    n = flow.num_levels
    ids = flow.branch_ids
    shifts = {(p - b) % n for p, b in zip(perm, ids)}
    nu = int(shifts.pop()) if len(shifts) == 1 else None
    if nu is None:
        warnings.warn(f"holonomy permutation {perm} is not a uniform cyclic shift", NonCyclicPermutationWarning,
                      stacklevel=2)
    return HolonomyResult(perm, delta, nu, tuple(int(b) for b in ids))


def derivative_check(sys: KickedSystem, flow: SpectralFlow) -> DerivativeCheck:
    """Compare the finite-difference slope of each branch with ``<xi|V|xi>/T``.

    The slope at each interior grid point uses the three-point formula that is
    second-order accurate on non-uniform grids.
    """
    lams = flow.lambdas
    if lams.size < 3:
        raise ValueError("derivative check needs at least three grid points")
    e = flow.e_unwrapped
    hm = (lams[1:-1] - lams[:-2])[:, None]
    hp = (lams[2:] - lams[1:-1])[:, None]
    lhs = (hm**2 * e[2:] - hp**2 * e[:-2] + (hp**2 - hm**2) * e[1:-1]) / (hm * hp * (hm + hp))
    rhs = flow.overlap_v[1:-1] / sys.period_T
    return DerivativeCheck(lams[1:-1].copy(), flow.branch_ids.copy(), lhs, rhs)


def gap_profile(flow: SpectralFlow, branch: int) -> tuple[np.ndarray, np.ndarray]:
    """Smallest circular quasienergy distance from ``branch`` to any other level, per grid point."""
    col = flow.column(branch)
    if flow.num_levels < 2:
        return flow.lambdas.copy(), np.full(flow.lambdas.size, flow.quasi_period)
    gaps = np.empty(flow.lambdas.size)
    for k in range(flow.lambdas.size):
        spec = flow.spectra[k]
        idx = flow.match_index[k, col]
        gaps[k] = floquet.circular_distance(spec[idx], np.delete(spec, idx), flow.quasi_period).min()
    return flow.lambdas.copy(), gaps


def minimal_gap(sys: KickedSystem, flow: SpectralFlow, branch: int, refine: bool = True) -> tuple[float, float]:
    """Location and value of the smallest gap of ``branch`` over the cycle.

    With ``refine`` the grid minimum is polished by bounded scalar minimization
    between its neighbouring grid points, re-diagonalizing ``U(lam)`` directly.
    """
    lams, gaps = gap_profile(flow, branch)
    k = int(np.argmin(gaps))
    if not refine or lams.size < 3 or flow.num_levels < 2:
        return float(lams[k]), float(gaps[k])
    col = flow.column(branch)
    period = flow.quasi_period
    lo, hi = lams[max(k - 1, 0)], lams[min(k + 1, lams.size - 1)]
    e_track = flow.e_unwrapped[:, col]

    def gap_at(lam):
        spec = floquet.quasienergies(sys, lam, flow.branch_origin).quasienergies
        guess = np.interp(lam, lams, e_track)
        idx = int(np.argmin(floquet.circular_distance(spec, guess, period)))
        return floquet.circular_distance(spec[idx], np.delete(spec, idx), period).min()

    res = minimize_scalar(gap_at, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    if res.fun < gaps[k]:
        return float(res.x), float(res.fun)
    return float(lams[k]), float(gaps[k])
