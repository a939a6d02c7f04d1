"""Stroboscopic adiabatic transport under a slowly ramped kick strength."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import floquet
from .errors import AnholonomyError
from .floquet import TWO_PI, KickedSystem
from .flow import AssumptionViolation, FlowGrid, track_flow

SCHEDULES = ("linear", "smoothstep")
NORM_TOL = 1e-12


@dataclass(frozen=True)
class TransportPlan:
    steps_M: int
    schedule: str = "linear"
    initial_branch: int = 0
    cycles: int = 1

    def __post_init__(self):
        if self.steps_M < 0:
            raise ValueError("steps_M must be non-negative")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}")
        if self.cycles < 1:
            raise ValueError("cycles must be positive")
        if self.initial_branch < 0:
            raise ValueError("initial_branch must be non-negative")


@dataclass(frozen=True, eq=False)
class TransportResult:
    final_state: np.ndarray
    fidelity_target: float
    fidelity_initial: float
    per_cycle_fidelities: tuple[float, ...]
    target_branch: int

    def to_dict(self) -> dict:
        return {
            "fidelity_target": self.fidelity_target,
            "fidelity_initial": self.fidelity_initial,
            "per_cycle_fidelities": list(self.per_cycle_fidelities),
            "target_branch": self.target_branch,
            "final_state": [[float(z.real), float(z.imag)] for z in self.final_state],
        }


def schedule_lambdas(steps_M: int, schedule: str = "linear") -> np.ndarray:
    """Kick strengths ``2*pi*s(m/M)`` for ``m = 0..M-1``."""
    x = np.arange(steps_M) / max(steps_M, 1)
    if schedule == "linear":
        s = x
    elif schedule == "smoothstep":
        s = x * x * (3.0 - 2.0 * x)
    else:
        raise ValueError(f"unknown schedule {schedule!r}")
    return TWO_PI * s


class Propagator:
    """Applies ``U(lam)`` to states, working in the eigenbasis of ``h0``.

    In that basis ``U0`` is diagonal, so one step costs O(dim).
    """

    def __init__(self, sys: KickedSystem):
        w, x = sys.h0_eig
        self.basis = x
        self.phases = np.exp(-1j * w * sys.period_T)
        self.v = x.conj().T @ sys.v
        # projector normalization; keeps each step unitary despite rounding in |v|
        self.v_norm2 = float(np.vdot(self.v, self.v).real)

    def to_eigenbasis(self, psi: np.ndarray) -> np.ndarray:
        return self.basis.conj().T @ psi

    def from_eigenbasis(self, psi: np.ndarray) -> np.ndarray:
        return self.basis @ psi

    def step(self, psi: np.ndarray, lam: float) -> np.ndarray:
        c = 1.0 - np.exp(-1j * lam)
        return self.phases * (psi - (c * np.vdot(self.v, psi) / self.v_norm2) * self.v)

    def run(self, psi: np.ndarray, lambdas) -> np.ndarray:
        """Apply ``U(lambdas[-1]) ... U(lambdas[0])`` to a state given in the original basis."""
        phi = self.to_eigenbasis(np.asarray(psi, dtype=np.complex128))
        for lam in lambdas:
            phi = self.step(phi, lam)
        return self.from_eigenbasis(phi)


def propagate(sys: KickedSystem, psi, lambdas) -> np.ndarray:
    return Propagator(sys).run(psi, lambdas)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(min(abs(np.vdot(a, b)) ** 2, 1.0))


def _check_assumptions(sys: KickedSystem):
    report = floquet.validate_assumptions(sys)
    if not report.ok:
        raise AssumptionViolation(
            "transport needs a nondegenerate U0 and |<v|xi_n(0)>| strictly inside (0, 1)"
        )


def run_transport(sys: KickedSystem, plan: TransportPlan, force: bool = False) -> TransportResult:
    """Carry ``xi_n(0)`` through ``plan.cycles`` slow cycles of the kick strength.

    Each cycle applies ``U(lam_{M-1}) ... U(lam_0)``.  After ``c`` cycles the
    state is compared with ``xi_{(n + c) mod N}(0)``.
    """
    if not force:
        _check_assumptions(sys)
    n = sys.dim
    if plan.initial_branch >= n:
        raise ValueError(f"initial_branch {plan.initial_branch} out of range for dimension {n}")
    basis = floquet.quasienergies(sys, 0.0).eigenvectors
    start = basis[:, plan.initial_branch]
    prop = Propagator(sys)
    lambdas = schedule_lambdas(plan.steps_M, plan.schedule)
    phi = prop.to_eigenbasis(start)
    per_cycle = []
    for c in range(1, plan.cycles + 1):
        for lam in lambdas:
            phi = prop.step(phi, lam)
        psi = prop.from_eigenbasis(phi)
        per_cycle.append(fidelity(basis[:, (plan.initial_branch + c) % n], psi))
    psi = prop.from_eigenbasis(phi)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > NORM_TOL:
        raise AnholonomyError(f"state norm drifted to {norm:.15g}")
    target = (plan.initial_branch + plan.cycles) % n
    return TransportResult(
        final_state=psi,
        fidelity_target=per_cycle[-1],
        fidelity_initial=fidelity(start, psi),
        per_cycle_fidelities=tuple(per_cycle),
        target_branch=target,
    )


def convergence_scan(sys: KickedSystem, plan_base: TransportPlan, m_values, jobs: int = 1, force: bool = False):
    """Infidelity ``1 - fidelity_target`` for each step count, in input order."""
    m_values = [int(m) for m in m_values]
    if any(b < a for a, b in zip(m_values, m_values[1:])):
        raise ValueError("m_values must be ascending")

    def one(m):
        plan = TransportPlan(m, plan_base.schedule, plan_base.initial_branch, plan_base.cycles)
        return m, 1.0 - run_transport(sys, plan, force=force).fidelity_target

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, m_values))
    return [one(m) for m in m_values]


@dataclass(frozen=True)
class TraceRow:
    step: int
    lam: float
    fidelity_to_instantaneous: float
    fidelity_to_target: float


def trace_transport(sys: KickedSystem, plan: TransportPlan, force: bool = False) -> tuple[list[TraceRow], TransportResult]:
    """Per-step record of a transport run.

    Row ``k`` describes the state after ``k`` kicks.  Its instantaneous
    reference is the tracked eigenvector at the strength of the last kick
    applied (``lam = 0`` at the start of each cycle), and its target is the
    eigenvector the current cycle should end in.
    """
    if not force:
        _check_assumptions(sys)
    n = sys.dim
    b0 = plan.initial_branch
    lambdas = schedule_lambdas(plan.steps_M, plan.schedule)
    branches = sorted({(b0 + c) % n for c in range(plan.cycles)})
    grid_points = np.unique(np.concatenate([lambdas, [0.0, TWO_PI]]))
    flow = track_flow(sys, FlowGrid(grid_points), branches=branches, force=force)
    at = np.searchsorted(flow.lambdas, lambdas)
    basis = floquet.quasienergies(sys, 0.0).eigenvectors

    prop = Propagator(sys)
    phi = prop.to_eigenbasis(basis[:, b0])
    rows = [TraceRow(0, 0.0, 1.0, fidelity(basis[:, (b0 + 1) % n], basis[:, b0]))]
    step = 0
    for c in range(plan.cycles):
        col = flow.column((b0 + c) % n)
        target = basis[:, (b0 + c + 1) % n]
        for m, lam in enumerate(lambdas):
            phi = prop.step(phi, lam)
            step += 1
            psi = prop.from_eigenbasis(phi)
            rows.append(TraceRow(step, float(lam), fidelity(flow.vectors[at[m], :, col], psi), fidelity(target, psi)))
    return rows, run_transport(sys, plan, force=force)
