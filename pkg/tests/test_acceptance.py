"""Acceptance checks.  Each test prints one PASS/FAIL line; a summary is shown at the end of the run.

Run standalone with ``python3 tests/test_acceptance.py`` or through pytest.
"""
import json
import time
from importlib import resources

import numpy as np
import pytest

from anholonomy import cli, floquet, numlin, satqc
from anholonomy.bench import random_system
from anholonomy.flow import FlowGrid, derivative_check, holonomy, track_flow
from anholonomy.transport import TransportPlan, convergence_scan, run_transport

from oracles import random_unitary, winding_from_dense

DATA = resources.files("anholonomy") / "data"
TWO_PI = 2 * np.pi
RESULTS = []


def report(number, title, ok, detail):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def test_criterion_1_fig1_lines():
    t0 = time.perf_counter()
    sys = floquet.fig1_system()
    flow = track_flow(sys, FlowGrid.uniform(1000), branch_origin=-np.pi / 2)
    lams = flow.lambdas
    e_err = max(np.abs(flow.e_unwrapped[:, 0] - (lams - np.pi) / 2).max(),
                np.abs(flow.e_unwrapped[:, 1] - (lams + np.pi) / 2).max())
    worst_fid = 1.0
    for k, lam in enumerate(lams):
        _, ref = floquet.two_level_reference(lam)
        fid = np.abs(np.sum(ref.conj() * flow.vectors[k], axis=0)) ** 2
        worst_fid = min(worst_fid, fid.min())
    elapsed = time.perf_counter() - t0
    ok = e_err <= 1e-9 and worst_fid >= 1 - 1e-9 and elapsed < 1.0 and lams.size == 1000
    assert report(1, "two-level lines", ok,
                  f"max |E - (lam+-pi)/2| = {e_err:.2e}, min fidelity = {worst_fid:.15f}, {elapsed:.3f} s")


def test_criterion_2_fig1_anholonomy():
    sys = floquet.fig1_system()
    hol = holonomy(track_flow(sys, branch_origin=-np.pi / 2))
    err = np.abs(hol.delta_E - np.pi).max()
    ok = err <= 1e-9 and hol.permutation == (1, 0)
    assert report(2, "quasienergy anholonomy", ok, f"delta_E = {[float(x) for x in hol.delta_E]}, permutation = {hol.permutation}")


def test_criterion_3_cyclic_shift_and_sum_rule():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    count, shift_ok, worst_sum, worst_oracle = 0, 0, 0.0, 0.0
    for k in range(105):
        dim = 2 + k % 7
        sys = random_system(rng, dim)
        hol = holonomy(track_flow(sys, FlowGrid.uniform(512)))
        count += 1
        shift_ok += hol.permutation == tuple((np.arange(dim) + 1) % dim)
        worst_sum = max(worst_sum, abs(hol.sum_rule_residual(sys.period_T)))
        ref, wraps = winding_from_dense(np.real(np.diag(sys.h0)), sys.v, sys.period_T, points=10_000)
        worst_oracle = max(worst_oracle, np.abs(hol.delta_E - ref).max() if wraps == 1 else np.inf)
    elapsed = time.perf_counter() - t0
    ok = shift_ok == count >= 100 and worst_sum <= 1e-8 and worst_oracle <= 1e-8 and elapsed < 60
    assert report(3, "cyclic shift + sum rule", ok,
                  f"{shift_ok}/{count} shift-by-1, max sum-rule residual {worst_sum:.2e}, "
                  f"max |dE - oracle| {worst_oracle:.2e}, {elapsed:.1f} s")


def test_criterion_4_derivative_identity():
    rng = np.random.default_rng(7)
    worst, ratios = 0.0, []
    for _ in range(20):
        sys = random_system(rng, int(rng.integers(2, 9)), separated=True)
        fine = derivative_check(sys, track_flow(sys, FlowGrid.uniform(4097)))
        coarse = derivative_check(sys, track_flow(sys, FlowGrid.uniform(2049)))
        worst = max(worst, fine.max_error)
        ratios.append(coarse.max_error / fine.max_error)
    ratios = np.array(ratios)
    ok = worst <= 1e-6 and np.all(np.abs(ratios - 4) <= 1.0)
    assert report(4, "derivative identity", ok,
                  f"max error {worst:.2e} on 4096 intervals, Richardson ratios in "
                  f"[{ratios.min():.3f}, {ratios.max():.3f}]")


def test_criterion_5_eigenspace_transport():
    sys = floquet.fig1_system()
    res = run_transport(sys, TransportPlan(4096))
    ms = [64, 256, 1024, 4096]
    infid = np.array([x for _, x in convergence_scan(sys, TransportPlan(1), ms)])
    monotone = bool(np.all(np.diff(infid) < 0))
    # log-log slope is undefined once the infidelity reaches exact zero
    slope = float(np.polyfit(np.log(ms), np.log(infid), 1)[0]) if np.all(infid > 0) else float("nan")
    # diagnostic only: odd step counts avoid the pairwise cancellation of even ones
    odd = [m - 1 for m in ms]
    odd_infid = np.array([x for _, x in convergence_scan(sys, TransportPlan(1), odd)])
    odd_slope = float(np.polyfit(np.log(odd), np.log(odd_infid), 1)[0])
    fid_ok = res.fidelity_target >= 0.999 and res.fidelity_initial <= 1e-3
    ok = fid_ok and monotone and abs(slope + 2) <= 0.3
    assert report(5, "eigenspace anholonomy", ok,
                  f"F_target {res.fidelity_target:.12f}, F_initial {res.fidelity_initial:.1e}, "
                  f"infidelity at M={ms}: {['%.1e' % x for x in infid]}, monotone {monotone}, slope {slope:.2f} "
                  f"(odd M={odd}: slope {odd_slope:.2f})")


def corpus_instances():
    paths = [DATA / "n4_unique.cnf"] + sorted((DATA / "corpus").iterdir(), key=lambda p: p.name)
    return [(p.name, satqc.parse_cnf(p.read_bytes())) for p in paths]


def test_criterion_6_aqc_corpus():
    t0 = time.perf_counter()
    rows = []
    for name, inst in corpus_instances():
        if inst.num_vars > 4:
            continue
        res = satqc.run_aqc(satqc.AqcSetup(inst), 20_000)
        exhaustive = int(satqc.solutions(inst)[0])
        rows.append((name, res.success_probability, res.verified and res.solution_found == exhaustive))
    elapsed = time.perf_counter() - t0
    worst = min(p for _, p, _ in rows)
    verified = sum(v for _, _, v in rows)
    ok = len(rows) >= 20 and worst >= 0.99 and verified == len(rows) and elapsed < 300
    assert report(6, "AQC end-to-end", ok,
                  f"{len(rows)} instances, min success {worst:.6f}, verified {verified}/{len(rows)}, {elapsed:.1f} s")


def test_criterion_7_gap_strategy_study():
    inst = satqc.parse_cnf((DATA / "n4_unique.cnf").read_bytes())
    oracle, uniform = satqc.gap_study(satqc.AqcSetup(inst), ["oracle", "uniform"])
    ok = (oracle.min_gap > uniform.min_gap and oracle.m_to_target is not None
          and (uniform.m_to_target is None or oracle.m_to_target <= uniform.m_to_target))
    assert report(7, "gap/strategy study", ok,
                  f"oracle gap {oracle.min_gap:.4f} M {oracle.m_to_target}; "
                  f"uniform gap {uniform.min_gap:.4f} M {uniform.m_to_target}")


def test_criterion_8_unitary_kernel():
    rng = np.random.default_rng(8)
    worst_res = worst_orth = worst_rec = 0.0
    for k in range(500):
        n = 1 + k % 64
        u = random_unitary(rng, n)
        eig = numlin.eig_unitary(u)
        x = eig.eigenvectors
        worst_res = max(worst_res, eig.residuals.max())
        worst_orth = max(worst_orth, np.abs(x.conj().T @ x - np.eye(n)).max())
        worst_rec = max(worst_rec, np.linalg.norm(eig.reconstruct() - u))
    ok = worst_res <= 1e-10 and worst_orth <= 1e-10 and worst_rec <= 1e-9
    assert report(8, "unitary eigen kernel", ok,
                  f"500 unitaries dim 1..64: residual {worst_res:.1e}, orthonormality {worst_orth:.1e}, "
                  f"reconstruction {worst_rec:.1e}")


def run_all_configs(out_dir, capsys):
    blobs = []
    out_dir.mkdir()
    commands = [
        ["flow", "--config", str(DATA / "fig1_lines.json"), "--out", str(out_dir / "lines.csv")],
        ["flow", "--config", str(DATA / "fig1_avoided.json"), "--out", str(out_dir / "avoided.csv")],
        ["transport", "--config", str(DATA / "fig1_lines.json"), "--out", str(out_dir / "tr_lines.csv")],
        ["transport", "--config", str(DATA / "fig1_avoided.json"), "--out", str(out_dir / "tr_avoided.csv")],
        ["validate", "--config", str(DATA / "fig1_lines.json")],
        ["aqc", "--config", str(DATA / "aqc_n4.json"), "--out", str(out_dir / "aqc.json")],
        ["demo-two-level", "--out", str(out_dir / "demo")],
    ]
    for argv in commands:
        code = cli.main(argv)
        stdout = capsys.readouterr().out
        blobs.append((" ".join(argv[:1]), code, stdout.replace(str(out_dir), "<out>")))
    files = sorted(p for p in out_dir.rglob("*") if p.is_file())
    return blobs, {str(p.relative_to(out_dir)): p.read_bytes() for p in files}


def test_criterion_9_determinism(tmp_path, capsys):
    first = run_all_configs(tmp_path / "a", capsys)
    second = run_all_configs(tmp_path / "b", capsys)
    same_stdout = first[0] == second[0]
    same_files = first[1] == second[1]
    codes = [c for _, c, _ in first[0]]
    ok = same_stdout and same_files and all(c == 0 for c in codes)
    assert report(9, "determinism", ok,
                  f"{len(first[0])} runs, {len(first[1])} files byte-identical: {same_files}, "
                  f"stdout identical: {same_stdout}, exit codes {codes}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
