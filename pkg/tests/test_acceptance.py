"""Acceptance criteria 1-11.  Each test prints one PASS/FAIL line, then asserts."""

import itertools
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from dasolve.adiabatic import ideal_evolution_and_error, proof_operator_suite
from dasolve.bounds import (
    asymptotic_constants,
    lemma_bound_suite,
    measured_bounds,
    schedule_bounds,
)
from dasolve.filtering import (
    apply_filter_lcu,
    apply_filter_spectral,
    make_plan,
    stopband_max,
    tilde_w,
)
from dasolve.harness import RunConfig, solve
from dasolve.problem import hamiltonian, haar_unitary, random_instance
from dasolve.spectral import unitary_eig
from dasolve.walk import block_encode_f, walk_at_f

from conftest import unitary_with_phases

pytestmark = pytest.mark.slow


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {detail}")


def pattern_deviation(eigs, phases, extras_at_half_pi):
    """Worst deviation of walk phases from the {arcsin lam, pi - arcsin lam} pattern.

    arcsin has infinite slope at |lam| = 1, so for those eigenvalues the phase
    is compared through sin(phi) = lam instead; elsewhere phases are compared.
    """
    got = list(np.asarray(phases))
    worst = 0.0
    near_unit = []
    for lam in eigs:
        if 1 - abs(lam) < 1e-6:
            near_unit.append(lam)
            continue
        a = np.arcsin(lam)
        for x in (a, np.pi - a):
            d = np.abs(np.angle(np.exp(1j * (x - np.array(got)))))
            k = int(np.argmin(d))
            worst = max(worst, d[k])
            got.pop(k)
    for lam in near_unit:
        for _ in range(2):
            d = np.abs(np.sin(got) - lam)
            k = int(np.argmin(d))
            worst = max(worst, d[k])
            got.pop(k)
    if extras_at_half_pi:
        worst = max(worst, np.max(np.abs(np.abs(got) - np.pi / 2)))
    elif got:
        worst = np.inf
    return worst


def test_c01_block_encoding_validity(capsys):
    worst_inv = worst_block = 0.0
    for seed in range(10):
        inst = random_instance(2 if seed % 2 else 4, 4, "general", seed)
        for f in np.linspace(0, 1, 11):
            be = block_encode_f(inst, f)
            worst_inv = max(worst_inv, np.linalg.norm(be.U @ be.U - np.eye(len(be.U)), 2))
            target = hamiltonian(inst, f, f, scale=be.alpha)
            worst_block = max(worst_block, np.abs(be.block() - target).max())
    ok = worst_inv <= 1e-10 and worst_block <= 1e-10
    report(capsys, 1, ok, f"max ||U^2 - I|| = {worst_inv:.2e}, max block mismatch = {worst_block:.2e}")
    assert ok


def test_c02_qubitisation_spectrum(capsys):
    worst, zero_ok = 0.0, True
    for variant in ("general", "hermitian", "hermitian-pd"):
        inst = random_instance(3, 5, variant, 11)
        for f in (0.0, 0.3, 0.7, 1.0):
            for kind in ("reference", "appendix-e"):
                W = walk_at_f(inst, f, f, kind).W
                scale = block_encode_f(inst, f).alpha if kind == "appendix-e" else 1.0
                eigs = np.linalg.eigvalsh(hamiltonian(inst, f, f, scale=scale))
                worst = max(worst, pattern_deviation(eigs, unitary_eig(W).phases,
                                                     kind == "appendix-e"))
    # exact zero eigenvalue: f = 1/2 on a general instance has a two-dimensional kernel
    inst = random_instance(2, 4, "general", 4)
    for kind in ("reference", "appendix-e"):
        ph = unitary_eig(walk_at_f(inst, 0.5, 0.5, kind).W).phases
        zero_ok &= np.sum(np.abs(ph) < 1e-9) == 2 and np.sum(np.pi - np.abs(ph) < 1e-9) == 2
    ok = worst <= 1e-9 and zero_ok
    report(capsys, 2, ok, f"max phase deviation = {worst:.2e}, zero -> {{0, pi}}: {zero_ok}")
    assert ok


# criteria 3 and 9 share one pass over the grid

GRID = list(itertools.product([2, 4, 8], [1.2, 1.5, 1.8], [128, 512, 2048], [2, 4]))


def _grid_cell(cell):
    from dasolve.schedule import Schedule
    from dasolve.walk import WalkSequence

    kappa, p, T, N = cell
    inst = random_instance(N, kappa, "general", 0)
    sch = Schedule(p, kappa, T, "linear-over-sqrt2")
    res = lemma_bound_suite(WalkSequence(inst, sch, "reference"))
    m1, m2 = measured_bounds(res.c1, res.c2, res.p_spread, res.q_dist, T)
    a1, a2 = schedule_bounds(sch, "exact")
    valid = [b.total for b in (m1, m2, a1, a2) if b.precondition_ok]
    return {"cell": cell, "error": res.error, "bound": min(valid) if valid else np.inf,
            "rows": res.rows}


@pytest.fixture(scope="module")
def grid_results():
    t = time.time()
    workers = os.cpu_count() or 1
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            out = list(ex.map(_grid_cell, GRID))
    else:
        out = [_grid_cell(c) for c in GRID]
    return out, time.time() - t


def test_c03_bound_validity(capsys, grid_results):
    cells, secs = grid_results
    bad = [c["cell"] for c in cells if not c["error"] <= c["bound"]]
    tight = max(c["error"] / c["bound"] for c in cells)
    ok = not bad
    report(capsys, 3, ok, f"{len(cells)} cells, violations = {len(bad)}, "
                          f"max error/bound = {tight:.3g}, {secs:.0f}s")
    assert ok, bad


def test_c09_operator_norm_checks(capsys, grid_results):
    cells, _ = grid_results
    checked = passed = 0
    for c in cells:
        for chk, okc, _ in c["rows"].values():
            checked += chk
            passed += okc
    ok = checked > 0 and passed == checked
    report(capsys, 9, ok, f"{passed}/{checked} operator-norm checks within bound "
                          f"({100 * passed / checked:.1f}%)")
    assert ok


def test_c04_constant_reproduction(capsys):
    from dasolve.schedule import Schedule

    b1, _ = schedule_bounds(Schedule(1.5, 40, 50_000, "arcsin-adjusted"), "exact")
    value = b1.scaled(40)
    ok = abs(value / 638 - 1) <= 0.15
    terms = ", ".join(f"{k}={v * 50_000 / 40:.1f}" for k, v in b1.terms.items())
    report(capsys, 4, ok, f"bound * T / kappa = {value:.2f} (target 638 +- 15%); per term: {terms}")
    assert ok


def test_c05_figure_shapes(capsys):
    from dasolve.schedule import Schedule

    ks = np.arange(10, 41)
    b = np.array([schedule_bounds(Schedule(1.5, k, 50_000, "arcsin-adjusted"), "exact")[0].total
                  for k in ks])
    r2 = np.corrcoef(ks, b)[0, 1] ** 2
    ps = np.round(np.arange(1.1, 1.95, 0.1), 1)
    bp = [schedule_bounds(Schedule(p, 40, 50_000, "arcsin-adjusted"), "exact")[0].total for p in ps]
    p_best = ps[int(np.argmin(bp))]
    ok = r2 >= 0.99 and 1.2 <= p_best <= 1.4
    report(capsys, 5, ok, f"R^2 in kappa = {r2:.5f}, argmin over p = {p_best}")
    assert ok


def test_c06_error_scales_inverse_T(capsys):
    from dasolve.schedule import Schedule
    from dasolve.walk import WalkSequence

    inst = random_instance(4, 4, "general", 0)
    errs = {T: ideal_evolution_and_error(
        WalkSequence(inst, Schedule(1.5, 4, T, "linear-over-sqrt2"), "reference")).error
        for T in (512, 1024, 2048, 4096)}
    ratios = [errs[2 * T] / errs[T] for T in (512, 1024, 2048)]
    ok = max(ratios) <= 0.75
    report(capsys, 6, ok, "error(2T)/error(T) = " + ", ".join(f"{r:.3f}" for r in ratios))
    assert ok


def test_c07_asymptotic_constants(capsys):
    kappa, T = 100, 100_000
    pd = asymptotic_constants(kappa, T, 1.5, "hermitian-pd")["p15_bound"]
    gen = asymptotic_constants(kappa, T, 1.5, "general")["p15_bound"]
    cps = {p: asymptotic_constants(kappa, T, p)["C_p"] for p in np.round(np.arange(1.1, 1.95, 0.1), 1)}
    ok = (pd == 5632 * kappa / T and gen == 15307 * kappa / T
          and all(np.isfinite(v) for v in cps.values()) and cps[1.5] >= 5632)
    report(capsys, 7, ok, f"PD {pd:.4f}, general {gen:.4f} at kappa/T = 1e-3; C_1.5 = {cps[1.5]:.1f}")
    assert ok


def test_c08_operator_identities(capsys):
    from dasolve.schedule import Schedule
    from dasolve.walk import WalkSequence

    worst = {}
    for seed in range(5):
        for kind in ("reference", "appendix-e"):
            inst = random_instance(2, 4, "general", seed)
            seq = WalkSequence(inst, Schedule(1.5, 4, 64, "linear-over-sqrt2"), kind)
            res = proof_operator_suite(ideal_evolution_and_error(seq, keep_history=True))
            for k, v in res.items():
                worst[k] = max(worst.get(k, 0.0), v)
    top = max(worst.values())
    ok = top <= 1e-8
    report(capsys, 8, ok, f"max residual = {top:.2e} over {len(worst)} identities, 5 seeds, 2 walks")
    assert ok


def test_c10_filter(capsys):
    rng = np.random.default_rng(10)
    stop_ok = order_ok = True
    for kappa in (2, 4, 8, 16, 40):
        for eps in (0.1, 1e-3, 1e-6):
            plan = make_plan(kappa, eps)
            stop_ok &= stopband_max(plan, kappa) <= eps * (1 + 1e-6)
            order_ok &= plan.ell <= np.ceil(kappa * np.log(2 / eps)) + 1
    lcu_gap = 0.0
    for ell_k in (2, 4, 8, 16):
        plan = make_plan(ell_k, 0.01)
        for _ in range(5):
            W = haar_unitary(6, rng)
            v = haar_unitary(6, rng)[:, 0]
            a, pa = apply_filter_spectral(v, W, plan)
            b, pb, _ = apply_filter_lcu(v, W, plan)
            lcu_gap = max(lcu_gap, np.linalg.norm(a - b), abs(pa - pb))
    err_ok = True
    kappa, eps = 6, 0.05
    plan = make_plan(kappa, eps)
    for _ in range(20):
        bad = rng.uniform(1 / kappa, np.pi - 1 / kappa, 4) * rng.choice([-1, 1], 4)
        W = unitary_with_phases(np.concatenate([[0.0, np.pi], bad]), rng)
        vals, vecs = np.linalg.eig(W)
        good = np.abs(vals ** 2 - 1) < 1e-9
        Qg = np.linalg.qr(vecs[:, good])[0]
        Qb = np.linalg.qr(vecs[:, ~good])[0]
        mass = rng.uniform(0.5, 1)
        a = Qg @ rng.normal(size=Qg.shape[1])
        b = Qb @ rng.normal(size=Qb.shape[1])
        psi = np.sqrt(mass) * a / np.linalg.norm(a) + np.sqrt(1 - mass) * b / np.linalg.norm(b)
        out, _ = apply_filter_spectral(psi, W, plan)
        err = np.linalg.norm(out / np.linalg.norm(out) - a / np.linalg.norm(a))
        err_ok &= err <= np.max(np.abs(tilde_w(plan, bad))) + 1e-9
    ok = stop_ok and order_ok and lcu_gap <= 1e-8 and err_ok
    report(capsys, 10, ok, f"stopband {stop_ok}, order bound {order_ok}, "
                           f"LCU vs spectral {lcu_gap:.1e}, error <= stopband {err_ok}")
    assert ok


def test_c11_end_to_end(capsys):
    rng = np.random.default_rng(2024)
    variants = ("hermitian-pd", "hermitian", "general")
    errors, reps, fails = [], [], []
    for i in range(20):
        cfg = RunConfig(N=int(rng.integers(2, 5)), kappa=float(rng.choice([2, 3, 4, 6, 8])),
                        variant=variants[i % 3], seed=i, epsilon=1e-3)
        rep = solve(cfg)
        reps.append(rep.repetitions)
        if rep.succeeded:
            errors.append(rep.solution_error)
            if rep.solution_error > 1e-3:
                fails.append((cfg.N, cfg.kappa, cfg.variant, rep.solution_error))
    mean_reps = float(np.mean(reps))
    ok = not fails and mean_reps <= 2.5 and len(errors) == 20
    report(capsys, 11, ok, f"{len(errors)}/20 succeeded, max error = {max(errors):.2e}, "
                           f"mean repetitions = {mean_reps:.2f}")
    assert ok, fails
