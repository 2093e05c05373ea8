"""Acceptance suite: one test per criterion, each printing a pass line.

Run with ``pytest tests/test_acceptance.py -v -s``.  Every tolerance is pinned
here; stochastic checks use fixed seeds and 3-sigma binomial bands.
"""

import math
import subprocess
import sys

import numpy as np
import pytest

from qsa_lab.anneal_classical import build_sa_schedule, propagate_exact, run_sa_trials
from qsa_lab.anneal_quantum import (
    average_cost,
    build_qsa_schedule,
    repeat_until_success,
    run_qsa_ensemble,
    terminal_beta,
)
from qsa_lab.chains import detailed_balance_residual, gibbs, metropolis, spectral_report
from qsa_lab.instances import generate_random_ising_chain
from qsa_lab.lab import (
    bundled_instances,
    schedule_grid_gap,
    scaling_study,
    weak_link_family,
)
from qsa_lab.walk import (
    QuantumState,
    apply_W,
    apply_X,
    basis_state,
    build_walk,
    dense_walk_matrix,
    fixed_point_residual,
    walk_spectrum,
)

EPS = 0.2  # bundled error budget for criteria 1-8


def bundled_with_family():
    return bundled_instances() + weak_link_family(6)


def beta_grid(instance, points=9, epsilon=EPS):
    return np.linspace(0.0, terminal_beta(instance, epsilon), points)


# -- 1 ---------------------------------------------------------------------


def test_criterion_01_detailed_balance():
    worst = 0.0
    for inst in bundled_with_family():
        for beta in beta_grid(inst):
            S = metropolis(inst, float(beta))
            res = detailed_balance_residual(S, gibbs(inst, float(beta)))
            worst = max(worst, res)
    assert worst <= 1e-12
    print(f"ACCEPTANCE 01 detailed-balance: PASS (max residual {worst:.2e})")


# -- 2 ---------------------------------------------------------------------


def test_criterion_02_isometry_rows_exact():
    worst = 0.0
    for inst in bundled_instances():  # n = 1, 3, 6
        for beta in [0.0, 0.7, 2.1]:
            S = metropolis(inst, beta)
            op = build_walk(S)
            for i in range(inst.d):
                state = basis_state(inst.n, i, 0)
                apply_X(op, state)
                block = state.amplitudes.reshape(inst.d, inst.d)
                err = float(np.abs(block[i].real - S.sqrt_row(i)).max())
                err = max(err, float(np.abs(block[np.arange(inst.d) != i]).max()))
                worst = max(worst, err)
    assert worst <= 1e-12
    print(f"ACCEPTANCE 02 isometry-rows: PASS (max entry error {worst:.2e})")


# -- 3 ---------------------------------------------------------------------


def test_criterion_03_unitarity():
    worst_dense = 0.0
    small = bundled_instances()[:2]  # n = 1 and n = 3
    for inst in small:
        for variant in ["two_reflection", "literal_product"]:
            W = dense_walk_matrix(build_walk(metropolis(inst, 0.9), variant))
            worst_dense = max(
                worst_dense, float(np.abs(W.T @ W - np.eye(W.shape[0])).max())
            )
    assert worst_dense <= 1e-10

    ising6 = bundled_instances()[2]
    rng = np.random.default_rng(1)
    amps = rng.normal(size=ising6.d**2) + 1j * rng.normal(size=ising6.d**2)
    state = QuantumState(6, amps / np.linalg.norm(amps))
    drifts = {}
    for variant in ["two_reflection", "literal_product"]:
        op = build_walk(metropolis(ising6, 1.1), variant)
        test_state = state.copy()
        for _ in range(1000):
            apply_W(op, test_state)
        drifts[variant] = abs(test_state.norm() - 1.0)
        assert drifts[variant] <= 1e-8
    print(
        "ACCEPTANCE 03 unitarity: PASS "
        f"(dense {worst_dense:.2e}; drift after 1e3 applications at n=6 "
        f"{drifts['two_reflection']:.2e} / {drifts['literal_product']:.2e})"
    )


# -- 4 ---------------------------------------------------------------------


def test_criterion_04_fixed_point():
    worst = 0.0
    literal_records = []
    for inst in bundled_with_family():
        for beta in beta_grid(inst):
            pi = gibbs(inst, float(beta))
            S = metropolis(inst, float(beta))
            resid = fixed_point_residual(build_walk(S), pi)
            worst = max(worst, resid)
    assert worst <= 1e-10

    # literal ten-factor product: measured and recorded, not asserted small;
    # the measurement itself is validated against its closed form
    for inst in bundled_instances():
        beta = 0.8
        pi = gibbs(inst, beta)
        measured = fixed_point_residual(
            build_walk(metropolis(inst, beta), "literal_product"), pi
        )
        closed = 2.0 * math.sqrt(1.0 - pi.probabilities[0])
        assert abs(measured - closed) <= 1e-9
        literal_records.append(f"{inst.name}@0.8: {measured:.6f}")
    print(
        f"ACCEPTANCE 04 fixed-point: PASS (two_reflection max residual {worst:.2e}; "
        f"literal_product residuals recorded: {'; '.join(literal_records)})"
    )


# -- 5 ---------------------------------------------------------------------


def test_criterion_05_phase_gap_bound():
    rng = np.random.default_rng(2024)
    worst_margin = math.inf
    worst_hausdorff = 0.0
    checked = 0
    for k in range(20):
        n = 2 + k % 4  # n in {2, 3, 4, 5}
        inst = generate_random_ising_chain(n, seed=int(rng.integers(1 << 30)))
        betas = rng.uniform(0.1, 2.5, size=5)
        for beta in betas:
            S = metropolis(inst, float(beta))
            spec = walk_spectrum(build_walk(S), method="dense", dense_cap_n=5)
            chain_gap = spectral_report(S).gap
            margin = spec.phase_gap - math.sqrt(chain_gap)
            assert margin >= -1e-9
            worst_margin = min(worst_margin, margin)
            hd = max(
                max(np.abs(spec.phases - p).min() for p in spec.dense_phases),
                max(np.abs(spec.dense_phases - p).min() for p in spec.phases),
            )
            assert hd <= 1e-9
            worst_hausdorff = max(worst_hausdorff, hd)
            checked += 1
    assert checked == 100
    print(
        f"ACCEPTANCE 05 phase-gap: PASS ({checked} spectra; min margin "
        f"phi_1 - sqrt(gap) = {worst_margin:.4f}; max dense/shortcut distance "
        f"{worst_hausdorff:.2e})"
    )


# -- 6 ---------------------------------------------------------------------


def test_criterion_06_qsa_output_contract():
    ising6 = bundled_instances()[2]
    delta = schedule_grid_gap(ising6, EPS)
    sched = build_qsa_schedule(ising6, delta, EPS)
    traces = run_qsa_ensemble(ising6, sched, range(50))
    exact = np.array([t.exact_success for t in traces])
    assert exact.mean() >= 1 - EPS
    freq = float(np.mean([t.measured in ising6.optimal_set for t in traces]))
    band = 3.0 * math.sqrt(exact.mean() * (1 - exact.mean()) / len(traces))
    assert abs(freq - exact.mean()) <= band
    print(
        f"ACCEPTANCE 06 qsa-contract: PASS (mean exact success {exact.mean():.4f} "
        f">= {1 - EPS}; sampled frequency {freq:.3f} within 3-sigma {band:.3f})"
    )


# -- 7 ---------------------------------------------------------------------


def test_criterion_07_sa_baseline():
    lines = []
    for inst in bundled_instances():
        delta = schedule_grid_gap(inst, EPS)
        sched = build_sa_schedule(inst, delta, EPS)
        res = propagate_exact(inst, sched)
        assert res.tv_to_gibbs <= EPS
        assert res.success_probability >= 1 - EPS
        n_seeds = 500
        finals = run_sa_trials(inst, sched, range(n_seeds))
        for config in range(inst.d):
            p = res.distribution[config]
            freq = float(np.mean(finals == config))
            band = 3.0 * math.sqrt(p * (1 - p) / n_seeds)
            assert abs(freq - p) <= band, f"{inst.name} config {config}"
        lines.append(
            f"{inst.name}: success {res.success_probability:.4f}, tv {res.tv_to_gibbs:.1e}"
        )
    print(f"ACCEPTANCE 07 sa-baseline: PASS ({'; '.join(lines)})")


# -- 8 ---------------------------------------------------------------------


def test_criterion_08_schedule_formulas():
    inst2 = bundled_instances()[0]
    assert build_qsa_schedule(inst2, 0.25, 0.1).Q == 13
    assert build_qsa_schedule(inst2, 1.0, 0.1).Q == 7
    sched = build_qsa_schedule(inst2, 1.0, 0.1)
    assert sched.delta_beta == pytest.approx(0.1 / (2 * inst2.e_max))
    assert sched.m == math.ceil(sched.beta_m / sched.delta_beta)

    run_sched = build_qsa_schedule(inst2, schedule_grid_gap(inst2, EPS), EPS)
    totals = np.array(
        [t.total_applications for t in run_qsa_ensemble(inst2, run_sched, range(200))]
    )
    expected = average_cost(run_sched)
    band = 3.0 * math.sqrt(run_sched.m * (run_sched.Q**2 - 1) / 12.0 / 200)
    assert abs(totals.mean() - expected) <= band
    print(
        f"ACCEPTANCE 08 schedule-formulas: PASS (Q spot checks 13/7; "
        f"mean total applications {totals.mean():.1f} vs {expected:.1f} "
        f"within 3-sigma {band:.1f})"
    )


# -- 9 ---------------------------------------------------------------------


def test_criterion_09_scaling_separation():
    eps = 0.25
    family = weak_link_family(6)
    result = scaling_study(family, epsilon=eps, seeds=range(6))
    deltas = np.array([row.delta for row in result.rows])
    span = deltas.max() / deltas.min()
    assert span >= 100.0
    assert abs(result.qsa_slope - 0.5) <= 0.1
    assert abs(result.sa_slope - 1.0) <= 0.1
    for row in result.rows:
        assert row.qsa_success_mean >= 1 - eps
    ratios = [row.sa_cost / row.qsa_cost_expected for row in result.rows]
    order = np.argsort(-deltas)  # decreasing gap
    ordered = [ratios[i] for i in order]
    assert all(a <= b + 1e-9 for a, b in zip(ordered, ordered[1:]))
    for row in result.rows:
        if row.delta <= 0.5:
            assert row.qsa_cost_expected < row.sa_cost
    print(
        f"ACCEPTANCE 09 scaling: PASS (gap span {span:.0f}x over "
        f"{math.log10(span):.2f} decades; slopes qsa {result.qsa_slope:.3f} "
        f"sa {result.sa_slope:.3f}; min point success "
        f"{min(r.qsa_success_mean for r in result.rows):.3f})"
    )


# -- 10 --------------------------------------------------------------------


def test_criterion_10_repeat_until_success():
    inst2 = bundled_instances()[0]
    eps0 = 0.25
    sched = build_qsa_schedule(inst2, schedule_grid_gap(inst2, eps0), eps0)
    n_seeds = 400
    failures = aborts = attempts = 0
    for seed in range(n_seeds):
        result = repeat_until_success(inst2, sched, max_rounds=2, seed=seed)
        failures += 0 if result.certified else 1
        aborts += result.aborts
        attempts += result.attempts
    fail_rate = failures / n_seeds
    fail_band = 0.0625 + 3.0 * math.sqrt(0.0625 * (1 - 0.0625) / n_seeds)
    assert fail_rate <= fail_band
    abort_rate = aborts / attempts
    abort_band = 0.25 + 3.0 * math.sqrt(0.25 * 0.75 / attempts)
    assert abort_rate <= abort_band
    print(
        f"ACCEPTANCE 10 repeat-until-success: PASS (failure rate {fail_rate:.4f} "
        f"<= {fail_band:.4f}; abort rate {abort_rate:.4f} <= {abort_band:.4f})"
    )


# -- 11 --------------------------------------------------------------------


def test_criterion_11_cli_determinism(tmp_path):
    cases = [
        ["spectrum", "--bundled", "two_state", "--betas", "0,0.5,1.0"],
        ["gibbs", "--bundled", "ising_n3", "--betas", "0,1,5"],
        ["sa", "--bundled", "two_state", "--epsilon", "0.2", "--trials", "30"],
        ["qsa", "--bundled", "ising_n3", "--epsilon", "0.3", "--seeds", "3", "--traces"],
        ["compare", "--seeds", "3"],
        ["scaling", "--family-n", "4", "--ratios", "1.0,1.4,1.8", "--seeds", "2"],
    ]
    for case in cases:
        outputs = []
        for attempt in range(2):
            out = tmp_path / f"{case[0]}_{attempt}.out"
            cmd = [sys.executable, "-m", "qsa_lab.cli", *case,
                   "--seed", "9", "--threads", "1", "--out", str(out)]
            if case[0] == "scaling":
                cmd += ["--summary-out", str(out) + ".summary"]
            proc = subprocess.run(cmd, capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            blob = out.read_bytes()
            if case[0] == "scaling":
                blob += (tmp_path / f"{case[0]}_{attempt}.out.summary").read_bytes()
            outputs.append(blob)
        assert outputs[0] == outputs[1], f"{case[0]} output not byte-identical"
    print(f"ACCEPTANCE 11 determinism: PASS ({len(cases)} subcommands byte-identical)")
