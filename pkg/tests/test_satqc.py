import itertools
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anholonomy import satqc
from anholonomy.errors import MultipleSolutions, NoSolution, SatFormatError, ZeroTargetOverlap
from anholonomy.satqc import AqcSetup, SatInstance

DATA = resources.files("anholonomy") / "data"

UNSAT3 = "p cnf 3 8\n" + "".join(
    f"{a * 1} {b * 2} {c * 3} 0\n" for a, b, c in itertools.product((1, -1), repeat=3)
)


def brute_force_violations(instance):
    out = []
    for n in range(2**instance.num_vars):
        bits = [(n >> i) & 1 for i in range(instance.num_vars)]
        bad = 0
        for clause in instance.clauses:
            if not any(bits[abs(l) - 1] == (1 if l > 0 else 0) for l in clause):
                bad += 1
        out.append(bad)
    return np.array(out)


def n4_instance():
    return satqc.parse_cnf((DATA / "n4_unique.cnf").read_bytes())


def test_parse_dimacs_features():
    text = b"c header comment\np cnf 4 2\n1 -2\n 3 0\nc mid\n-4 2 1 0\n%\n0\n"
    inst = satqc.parse_cnf(text)
    assert inst.num_vars == 4
    assert inst.clauses == ((1, -2, 3), (-4, 2, 1))


@pytest.mark.parametrize(
    "text",
    [
        "1 2 3 0\n",
        "p cnf 3 1\n1 2 0\n",
        "p cnf 3 1\n1 2 3 4 0\n",
        "p cnf 3 1\n1 2 5 0\n",
        "p cnf 3 2\n1 2 3 0\n",
        "p cnf 3 1\n1 2 3\n",
        "p cnf 3 1\n1 x 3 0\n",
        "p dnf 3 1\n1 2 3 0\n",
        "",
    ],
)
def test_parse_errors(text):
    with pytest.raises(SatFormatError):
        satqc.parse_cnf(text)


def test_emit_round_trip():
    inst = n4_instance()
    again = satqc.parse_cnf(satqc.emit_cnf(inst, "round trip"))
    assert again == inst


def test_violation_counts_match_brute_force():
    rng = np.random.default_rng(0)
    for n in (3, 4, 6):
        clauses = [tuple(int(x) for x in (rng.choice(n, 3, replace=False) + 1) * rng.choice([-1, 1], 3))
                   for _ in range(10)]
        inst = SatInstance(n, tuple(clauses))
        assert np.array_equal(satqc.violation_counts(inst), brute_force_violations(inst))
        h = satqc.cost_hamiltonian(inst)
        assert np.array_equal(np.diag(h).real, brute_force_violations(inst))


def test_solution_count_errors():
    with pytest.raises(NoSolution):
        satqc.unique_solution(satqc.parse_cnf(UNSAT3))
    with pytest.raises(MultipleSolutions):
        satqc.unique_solution(SatInstance(3, ((1, 2, 3),)))
    inst = n4_instance()
    ans = satqc.unique_solution(inst)
    assert satqc.is_satisfying(inst, ans)
    assert sum(satqc.is_satisfying(inst, n) for n in range(16)) == 1


def test_bundled_corpus_is_unique_solution():
    files = sorted((DATA / "corpus").iterdir(), key=lambda p: p.name)
    assert len(files) >= 20
    for f in files:
        inst = satqc.parse_cnf(f.read_bytes())
        assert inst.num_vars <= 4
        assert np.count_nonzero(brute_force_violations(inst) == 0) == 1


@settings(max_examples=10, deadline=None)
@given(st.integers(3, 6), st.integers(0, 2**31 - 1))
def test_random_unique_instance(n, seed):
    inst = satqc.random_unique_instance(n, np.random.default_rng(seed))
    assert np.count_nonzero(brute_force_violations(inst) == 0) == 1


def test_composite_h0_against_diagonalization():
    setup = AqcSetup(n4_instance())
    comp = satqc.composite_h0(setup)
    w = np.linalg.eigvalsh(comp.h0)
    assert np.allclose(w, satqc.composite_levels(setup), atol=1e-12)
    assert np.isclose(comp.W, w[-1] - w[0])
    assert np.allclose(comp.h0 @ comp.ground, -0.5 * comp.ground)
    assert np.allclose(comp.h0 @ comp.excited, 0.0)
    # composite index is 2*n + control with control I = 0, F = 1
    assert comp.excited[2 * comp.answer + 1] == 1.0
    assert np.isclose(setup.resolved_period(), 0.9 * 2 * np.pi / comp.W)


def test_setup_validation():
    inst = n4_instance()
    with pytest.raises(ValueError):
        AqcSetup(inst, beta=1.0, epsilon=1.5)
    with pytest.raises(ValueError):
        AqcSetup(inst, v_strategy="custom")
    with pytest.raises(ValueError):
        AqcSetup(inst, t_factor=1.0)
    with pytest.raises(ValueError):
        AqcSetup(inst, period_T=10.0)


def test_build_v_strategies():
    setup = AqcSetup(n4_instance())
    comp = satqc.composite_h0(setup)
    v = satqc.build_v(setup, comp.answer)
    assert np.isclose(np.vdot(comp.ground, v), 1 / np.sqrt(2))
    assert np.isclose(np.vdot(comp.excited, v), 1 / np.sqrt(2))
    u = satqc.build_v(setup.with_strategy("uniform"))
    assert np.allclose(u, 1 / np.sqrt(32))
    zero = np.zeros(32, dtype=complex)
    zero[3] = 1.0  # assignment 1 under F: misses the ground state
    with pytest.raises(ZeroTargetOverlap):
        satqc.build_v(setup.with_strategy("custom", zero))
    with pytest.raises(ValueError):
        satqc.build_v(setup.with_strategy("custom", np.ones(32)))


def test_run_aqc_n4_oracle():
    setup = AqcSetup(n4_instance())
    res = satqc.run_aqc(setup, 20_000)
    assert res.success_probability >= 0.99
    assert res.verified and res.solution_found == satqc.unique_solution(setup.instance)
    assert res.min_gap_seen > 0
    d = res.to_dict()
    assert d["setup"]["v_strategy"] == "oracle"
    assert len(d["setup"]["v"]) == 32


def test_run_aqc_no_steps_stays_put():
    res = satqc.run_aqc(AqcSetup(n4_instance()), 0, track_gap=False)
    assert res.success_probability < 1e-20
    assert res.solution_found is None and not res.verified


@pytest.mark.parametrize("n,seed", [(5, 1), (6, 2)])
def test_run_aqc_larger_instances(n, seed):
    inst = satqc.random_unique_instance(n, np.random.default_rng(seed))
    res = satqc.run_aqc(AqcSetup(inst), 20_000, track_gap=False)
    assert res.success_probability >= 0.99
    assert res.verified


def test_gap_study_reports_both_strategies():
    rows = satqc.gap_study(AqcSetup(n4_instance()), ["oracle", "uniform"], m_max=2**12)
    assert [r.strategy for r in rows] == ["oracle", "uniform"]
    assert all(r.min_gap > 0 for r in rows)
    assert all(r.m_to_target is not None for r in rows)
