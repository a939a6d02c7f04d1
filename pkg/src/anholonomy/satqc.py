"""Anholonomic adiabatic search for the unique solution of a 3-SAT instance.

The arithmetic register holds an assignment ``n`` (bit ``i`` is the truth
value of variable ``i + 1``).  One extra control qubit with basis ``I = 0``,
``F = 1`` is appended as the least significant index, so the composite index
is ``2 * n + control``.

    H0 = (H_B - eps) (x) |I><I| + H_P (x) |F><F|,    H_B = beta (1 - |0_B><0_B|)

``|0_B>|I>`` (energy ``-eps``) and ``|Ans>|F>`` (energy 0) are adjacent
levels.  One slow cycle of a rank-1 kick carries the former into the latter.
"""
from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import floquet
from .errors import (
    GapCollapseWarning,
    LevelCoincidenceWarning,
    LevelOrderingError,
    MultipleSolutions,
    NoSolution,
    SatFormatError,
    ZeroTargetOverlap,
)
from .floquet import TWO_PI, KickedSystem
from .flow import FlowGrid, minimal_gap, track_flow
from .transport import Propagator, schedule_lambdas

MAX_VARS = 12
STRATEGIES = ("oracle", "uniform", "custom")
TARGET_OVERLAP_TOL = 1e-12
GAP_COLLAPSE_TOL = 1e-6
LEVEL_COINCIDENCE_TOL = 1e-9
SUCCESS_THRESHOLD = 0.99


@dataclass(frozen=True)
class SatInstance:
    """3-CNF formula.  Literals are signed 1-based variable indices."""

    num_vars: int
    clauses: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self):
        if not 1 <= self.num_vars <= MAX_VARS:
            raise SatFormatError(f"num_vars must lie in [1, {MAX_VARS}], got {self.num_vars}")
        clauses = tuple(tuple(int(x) for x in c) for c in self.clauses)
        for c in clauses:
            if len(c) != 3:
                raise SatFormatError(f"clause {c} does not have exactly 3 literals")
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise SatFormatError(f"literal {lit} out of range for {self.num_vars} variables")
        object.__setattr__(self, "clauses", clauses)

    @property
    def dim(self) -> int:
        return 2**self.num_vars


def parse_cnf(text) -> SatInstance:
    """Parse DIMACS CNF.  Every clause must have exactly three literals."""
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("ascii")
    num_vars = num_clauses = None
    clauses: list[tuple[int, ...]] = []
    pending: list[int] = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if num_vars is not None or len(parts) != 4 or parts[1] != "cnf":
                raise SatFormatError(f"line {lineno}: malformed header {line!r}")
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise SatFormatError(f"line {lineno}: malformed header {line!r}") from None
            if num_vars < 1 or num_clauses < 0:
                raise SatFormatError(f"line {lineno}: malformed header {line!r}")
            continue
        if num_vars is None:
            raise SatFormatError(f"line {lineno}: clause before header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise SatFormatError(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                if len(pending) != 3:
                    raise SatFormatError(f"line {lineno}: clause width {len(pending)} != 3")
                clauses.append(tuple(pending))
                pending = []
                continue
            if abs(lit) > num_vars:
                raise SatFormatError(f"line {lineno}: variable {abs(lit)} out of range 1..{num_vars}")
            pending.append(lit)
    if num_vars is None:
        raise SatFormatError("missing 'p cnf' header")
    if pending:
        raise SatFormatError("last clause not terminated by 0")
    if len(clauses) != num_clauses:
        raise SatFormatError(f"header declares {num_clauses} clauses, found {len(clauses)}")
    return SatInstance(num_vars, tuple(clauses))


def emit_cnf(instance: SatInstance, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"c {c}" for c in comment.splitlines())
    lines.append(f"p cnf {instance.num_vars} {len(instance.clauses)}")
    lines.extend(" ".join(str(x) for x in c) + " 0" for c in instance.clauses)
    return "\n".join(lines) + "\n"


def violation_counts(instance: SatInstance) -> np.ndarray:
    """Number of violated clauses for every assignment ``n = 0 .. 2^N - 1``."""
    n = np.arange(instance.dim)
    counts = np.zeros(instance.dim, dtype=np.int64)
    for clause in instance.clauses:
        sat = np.zeros(instance.dim, dtype=bool)
        for lit in clause:
            bit = (n >> (abs(lit) - 1)) & 1
            sat |= bit == (1 if lit > 0 else 0)
        counts += ~sat
    return counts


def is_satisfying(instance: SatInstance, assignment: int) -> bool:
    for clause in instance.clauses:
        if not any(((assignment >> (abs(lit) - 1)) & 1) == (lit > 0) for lit in clause):
            return False
    return True


def solutions(instance: SatInstance) -> np.ndarray:
    return np.nonzero(violation_counts(instance) == 0)[0]


def unique_solution(instance: SatInstance) -> int:
    sols = solutions(instance)
    if sols.size == 0:
        raise NoSolution("instance has no satisfying assignment")
    if sols.size > 1:
        raise MultipleSolutions(f"instance has {sols.size} satisfying assignments")
    return int(sols[0])


def cost_hamiltonian(instance: SatInstance) -> np.ndarray:
    return np.diag(violation_counts(instance).astype(float)).astype(np.complex128)


def random_unique_instance(num_vars: int, rng: np.random.Generator, max_clauses: int = 400) -> SatInstance:
    """Random 3-SAT instance with exactly one solution.

    Clauses on three distinct variables are added until the solution is
    unique; a draw that becomes unsatisfiable is discarded and restarted.
    """
    if num_vars < 3:
        raise ValueError("need at least three variables")
    while True:
        clauses: list[tuple[int, int, int]] = []
        for _ in range(max_clauses):
            vars_ = rng.choice(num_vars, size=3, replace=False) + 1
            signs = rng.choice([-1, 1], size=3)
            clause = tuple(int(x) for x in vars_ * signs)
            if clause in clauses:
                continue
            clauses.append(clause)
            count = solutions(SatInstance(num_vars, tuple(clauses))).size
            if count == 1:
                return SatInstance(num_vars, tuple(clauses))
            if count == 0:
                break


@dataclass(frozen=True, eq=False)
class AqcSetup:
    """Parameters of one anholonomic run.

    ``period_T`` defaults to ``t_factor * 2*pi / W``; ``base_state`` (the
    ground state of ``H_B``) defaults to the uniform superposition.
    """

    instance: SatInstance
    beta: float = 1.0
    epsilon: float = 0.5
    period_T: float | None = None
    t_factor: float = 0.9
    v_strategy: str = "oracle"
    custom_v: np.ndarray | None = None
    base_state: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 < self.epsilon < self.beta:
            raise ValueError("require 0 < epsilon < beta")
        if self.v_strategy not in STRATEGIES:
            raise ValueError(f"v_strategy must be one of {STRATEGIES}")
        if self.v_strategy == "custom" and self.custom_v is None:
            raise ValueError("custom strategy needs custom_v")
        if not 0.0 < self.t_factor < 1.0:
            raise ValueError("t_factor must lie in (0, 1)")
        d = self.instance.dim
        base = np.full(d, 1.0 / np.sqrt(d), dtype=np.complex128) if self.base_state is None \
            else np.asarray(self.base_state, dtype=np.complex128)
        if base.shape != (d,) or abs(np.linalg.norm(base) - 1.0) > 1e-12:
            raise ValueError("base_state must be a normalized vector on the arithmetic register")
        object.__setattr__(self, "base_state", base)
        if self.custom_v is not None:
            object.__setattr__(self, "custom_v", np.asarray(self.custom_v, dtype=np.complex128))
        if self.period_T is not None:
            w = composite_spread(self)
            if not 0.0 < self.period_T < TWO_PI / w:
                raise ValueError(f"period_T must lie in (0, 2*pi/W) = (0, {TWO_PI / w:.6g})")

    @property
    def dim(self) -> int:
        return 2 * self.instance.dim

    def resolved_period(self) -> float:
        if self.period_T is not None:
            return float(self.period_T)
        return self.t_factor * TWO_PI / composite_spread(self)

    def with_strategy(self, strategy: str, custom_v=None) -> AqcSetup:
        return AqcSetup(self.instance, self.beta, self.epsilon, self.period_T, self.t_factor,
                        strategy, custom_v, self.base_state)

    def to_dict(self) -> dict:
        return {
            "num_vars": self.instance.num_vars,
            "clauses": [list(c) for c in self.instance.clauses],
            "beta": self.beta,
            "epsilon": self.epsilon,
            "period_T": self.resolved_period(),
            "t_factor": self.t_factor,
            "v_strategy": self.v_strategy,
            "base_state": _complex_list(self.base_state),
        }


def _complex_list(x) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(x).ravel()]


def composite_levels(setup: AqcSetup) -> np.ndarray:
    """Eigenvalues of the composite Hamiltonian with multiplicity, from its block structure."""
    d = setup.instance.dim
    i_sector = np.concatenate([[-setup.epsilon], np.full(d - 1, setup.beta - setup.epsilon)])
    return np.sort(np.concatenate([i_sector, violation_counts(setup.instance).astype(float)]))


def composite_spread(setup: AqcSetup) -> float:
    levels = composite_levels(setup)
    return float(levels[-1] - levels[0])


def control_basis(control: int) -> np.ndarray:
    e = np.zeros(2, dtype=np.complex128)
    e[control] = 1.0
    return e


def base_hamiltonian(setup: AqcSetup) -> np.ndarray:
    b = setup.base_state
    return setup.beta * (np.eye(b.size, dtype=np.complex128) - np.outer(b, b.conj()))


def ground_state(setup: AqcSetup) -> np.ndarray:
    return np.kron(setup.base_state, control_basis(0))


def answer_state(setup: AqcSetup, answer: int) -> np.ndarray:
    e = np.zeros(setup.instance.dim, dtype=np.complex128)
    e[answer] = 1.0
    return np.kron(e, control_basis(1))


@dataclass(frozen=True, eq=False)
class CompositeH0:
    h0: np.ndarray
    W: float
    targets: tuple[tuple[str, float], tuple[str, float]]
    answer: int
    ground: np.ndarray = field(repr=False)
    excited: np.ndarray = field(repr=False)


def composite_h0(setup: AqcSetup) -> CompositeH0:
    """Build the composite unperturbed Hamiltonian and check the target levels.

    Raises
    ------
    NoSolution, MultipleSolutions
        The instance must have exactly one satisfying assignment.
    LevelOrderingError
        Some level lies strictly between ``-eps`` and 0.
    """
    answer = unique_solution(setup.instance)
    d = setup.instance.dim
    h_b = base_hamiltonian(setup) - setup.epsilon * np.eye(d)
    h0 = np.kron(h_b, np.outer(control_basis(0), control_basis(0))) + np.kron(
        cost_hamiltonian(setup.instance), np.outer(control_basis(1), control_basis(1))
    )
    levels = composite_levels(setup)
    eps = setup.epsilon
    if np.any((levels > -eps + LEVEL_COINCIDENCE_TOL) & (levels < -LEVEL_COINCIDENCE_TOL)):
        raise LevelOrderingError("a level lies strictly between the two target energies")
    near = np.sum(np.abs(levels + eps) <= LEVEL_COINCIDENCE_TOL) + np.sum(np.abs(levels) <= LEVEL_COINCIDENCE_TOL)
    if near > 2:
        warnings.warn("a non-target level coincides with a target level", LevelCoincidenceWarning, stacklevel=2)
    w = float(levels[-1] - levels[0])
    ans_bits = format(answer, f"0{setup.instance.num_vars}b")
    targets = (("|0_B>|I>", -eps), (f"|{answer}>|F> (x_N..x_1 = {ans_bits})", 0.0))
    return CompositeH0(h0, w, targets, answer, ground_state(setup), answer_state(setup, answer))


def build_v(setup: AqcSetup, answer: int | None = None) -> np.ndarray:
    """Normalized kick vector for ``setup.v_strategy``.

    Raises ``ZeroTargetOverlap`` when the vector misses either target state.
    """
    if answer is None:
        if setup.v_strategy == "oracle":
            raise ValueError("oracle strategy needs the answer")
        answer = unique_solution(setup.instance)
    g = ground_state(setup)
    a = answer_state(setup, answer)
    if setup.v_strategy == "oracle":
        v = (g + a) / np.sqrt(2.0)
    elif setup.v_strategy == "uniform":
        v = np.full(setup.dim, 1.0 / np.sqrt(setup.dim), dtype=np.complex128)
    else:
        v = np.asarray(setup.custom_v, dtype=np.complex128)
        if v.shape != (setup.dim,):
            raise ValueError(f"custom v must have dimension {setup.dim}")
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValueError("custom v must be normalized")
    for name, t in (("|0_B>|I>", g), ("|Ans>|F>", a)):
        if abs(np.vdot(t, v)) <= TARGET_OVERLAP_TOL:
            raise ZeroTargetOverlap(f"kick vector has no overlap with target {name}")
    return v


def kicked_system(setup: AqcSetup, comp: CompositeH0 | None = None) -> tuple[KickedSystem, CompositeH0]:
    comp = composite_h0(setup) if comp is None else comp
    v = build_v(setup, comp.answer)
    return KickedSystem(comp.h0, v, setup.resolved_period()), comp


@dataclass(frozen=True, eq=False)
class AqcRunResult:
    success_probability: float
    control_F_probability: float
    min_gap_seen: float | None
    solution_found: int | None
    verified: bool
    steps_M: int
    setup: AqcSetup
    v: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        d = {
            "success_probability": self.success_probability,
            "control_F_probability": self.control_F_probability,
            "min_gap_seen": self.min_gap_seen,
            "solution_found": self.solution_found,
            "verified": self.verified,
            "steps_M": self.steps_M,
        }
        setup = self.setup.to_dict()
        setup["v"] = _complex_list(self.v)
        d["setup"] = setup
        return d


def ground_branch_gap(sys: KickedSystem, grid_points: int = 512, refine: bool = False) -> float:
    """Smallest quasienergy gap of the ground branch over the cycle (energy units)."""
    flow = track_flow(sys, FlowGrid.uniform(grid_points), branches=[0], force=True)
    return minimal_gap(sys, flow, 0, refine=refine)[1]


def run_aqc(setup: AqcSetup, steps_M: int, track_gap: bool = True, grid_points: int = 512) -> AqcRunResult:
    """Transport ``|0_B>|I>`` through one slow cycle and read out the register."""
    if steps_M < 0:
        raise ValueError("steps_M must be non-negative")
    sys, comp = kicked_system(setup)
    psi = Propagator(sys).run(comp.ground, schedule_lambdas(steps_M))
    success = float(min(abs(np.vdot(comp.excited, psi)) ** 2, 1.0))
    f_probs = np.abs(psi[1::2]) ** 2
    p_f = float(min(f_probs.sum(), 1.0))
    found = int(np.argmax(f_probs)) if p_f > 0.5 else None
    verified = found is not None and is_satisfying(setup.instance, found) and found == comp.answer
    gap = ground_branch_gap(sys, grid_points) if track_gap else None
    if gap is not None and gap < GAP_COLLAPSE_TOL:
        warnings.warn(f"ground-branch quasienergy gap collapsed to {gap:.3e}", GapCollapseWarning, stacklevel=2)
    return AqcRunResult(success, p_f, gap, found, bool(verified), steps_M, setup, sys.v)


@dataclass(frozen=True)
class GapStudyRow:
    strategy: str
    min_gap: float
    m_to_target: int | None


def steps_to_success(setup: AqcSetup, threshold: float = SUCCESS_THRESHOLD, m_start: int = 4,
                     m_max: int = 2**18) -> int | None:
    """Smallest power-of-two multiple of ``m_start`` whose run reaches ``threshold``."""
    m = m_start
    while m <= m_max:
        if run_aqc(setup, m, track_gap=False).success_probability >= threshold:
            return m
        m *= 2
    return None


def gap_study(setup: AqcSetup, v_candidates, grid_points: int = 512, m_start: int = 4,
              m_max: int = 2**18) -> list[GapStudyRow]:
    """Minimal ground-branch gap and doubling-search step count per kick vector.

    ``v_candidates`` holds strategy names (``"oracle"``, ``"uniform"``) or
    ``(label, vector)`` pairs for custom vectors.
    """
    rows = []
    for cand in v_candidates:
        if isinstance(cand, str):
            label, trial = cand, setup.with_strategy(cand)
        else:
            label, vec = cand
            trial = setup.with_strategy("custom", vec)
        sys, _ = kicked_system(trial)
        flow = track_flow(sys, FlowGrid.uniform(grid_points), branches=[0], force=True)
        gap = minimal_gap(sys, flow, 0, refine=True)[1]
        rows.append(GapStudyRow(label, gap, steps_to_success(trial, m_start=m_start, m_max=m_max)))
    return rows
