import math

import numpy as np
import pytest

from conftest import LN2
from qsa_lab.anneal_classical import (
    SaSchedule,
    build_sa_schedule,
    propagate_exact,
    run_sa_chain,
    run_sa_trials,
    sa_cost,
)
from qsa_lab.anneal_quantum import terminal_beta
from qsa_lab.chains import gibbs
from qsa_lab.errors import CapExceededError, DomainError
from qsa_lab.instances import analyze


def test_schedule_two_state_constants(inst2):
    sched = build_sa_schedule(inst2, delta=1.5, epsilon=0.1)
    assert abs(sched.delta_beta - 0.075) <= 1e-15
    beta_m = terminal_beta(inst2, 0.1)
    assert sched.beta_m == beta_m
    assert sched.m == math.ceil(beta_m / 0.075) == 90


def test_schedule_ladder_shape(inst2):
    sched = build_sa_schedule(inst2, delta=1.5, epsilon=0.1)
    betas = sched.betas
    assert betas[0] == 0.0
    assert betas.size == sched.m + 1
    steps = np.diff(betas)
    np.testing.assert_allclose(steps[:-1], sched.delta_beta, atol=1e-15)
    assert 0.0 < steps[-1] <= sched.delta_beta + 1e-15
    assert betas[-1] == sched.beta_m


def test_schedule_scaling_with_epsilon_and_delta(inst2):
    base = build_sa_schedule(inst2, delta=1.0, epsilon=0.2)
    half_eps = build_sa_schedule(inst2, delta=1.0, epsilon=0.1)
    # beta_m grows with smaller epsilon, so m more than doubles
    assert half_eps.m >= 2 * base.m - 1
    half_delta = build_sa_schedule(inst2, delta=0.5, epsilon=0.2)
    assert abs(half_delta.m - 2 * base.m) <= 1


def test_schedule_domain_errors(inst2):
    with pytest.raises(DomainError):
        build_sa_schedule(inst2, delta=0.0, epsilon=0.1)
    with pytest.raises(DomainError):
        build_sa_schedule(inst2, delta=2.5, epsilon=0.1)
    with pytest.raises(DomainError):
        build_sa_schedule(inst2, delta=1.0, epsilon=1.0)
    with pytest.raises(DomainError):
        build_sa_schedule(inst2, delta=1.0, epsilon=0.1, c_sa=0.0)


def test_sa_cost_monotone_in_delta(inst2):
    costs = [sa_cost(build_sa_schedule(inst2, d, 0.1)) for d in [0.25, 0.5, 1.0, 2.0]]
    assert costs == sorted(costs, reverse=True)


def test_propagate_single_step_hand_values(inst2):
    sched = SaSchedule(
        epsilon=0.1, delta_used=1.5, delta_beta=LN2, beta_m=LN2, m=1
    )
    res = propagate_exact(inst2, sched)
    np.testing.assert_allclose(res.distribution, [0.75, 0.25], atol=1e-15)
    np.testing.assert_allclose(res.tv_to_gibbs, 1 / 12, atol=1e-15)


def test_propagate_empty_schedule(ising3):
    sched = SaSchedule(epsilon=0.1, delta_used=1.0, delta_beta=0.1, beta_m=0.0, m=0)
    res = propagate_exact(ising3, sched)
    np.testing.assert_allclose(res.distribution, np.full(8, 1 / 8), atol=1e-15)
    assert res.success_probability == pytest.approx(2 / 8)


def test_propagate_full_default_two_state(inst2):
    sched = build_sa_schedule(inst2, delta=1.0, epsilon=0.1)
    res = propagate_exact(inst2, sched)
    assert res.success_probability >= 0.9
    assert res.tv_to_gibbs <= 0.1


def test_propagate_stationary_fixed_point(ising3):
    beta = 1.4
    pi = gibbs(ising3, beta).probabilities
    const = SaSchedule(
        epsilon=0.1, delta_used=1.0, delta_beta=0.0, beta_m=beta, m=20,
        explicit_betas=np.full(21, beta),
    )
    res = propagate_exact(ising3, const, initial=pi)
    assert res.tv_to_gibbs <= 1e-12


def test_propagate_cap():
    big = analyze(np.arange(1 << 13, dtype=float))
    sched = SaSchedule(epsilon=0.1, delta_used=1.0, delta_beta=0.1, beta_m=0.1, m=1)
    with pytest.raises(CapExceededError):
        propagate_exact(big, sched)


def test_propagate_rejects_bad_initial(inst2):
    sched = SaSchedule(epsilon=0.1, delta_used=1.0, delta_beta=0.1, beta_m=0.1, m=1)
    with pytest.raises(DomainError):
        propagate_exact(inst2, sched, initial=[0.7, 0.7])
    with pytest.raises(DomainError):
        propagate_exact(inst2, sched, initial=[1.0, 0.0, 0.0])


def test_run_sa_chain_deterministic(inst2):
    sched = build_sa_schedule(inst2, delta=1.0, epsilon=0.2)
    assert run_sa_chain(inst2, sched, 7) == run_sa_chain(inst2, sched, 7)


def test_run_sa_chain_no_steps_is_uniform_draw(ising3):
    sched = SaSchedule(epsilon=0.1, delta_used=1.0, delta_beta=0.1, beta_m=0.0, m=0)
    outs = {run_sa_chain(ising3, sched, s) for s in range(64)}
    assert outs <= set(range(8))
    assert len(outs) >= 5  # a uniform draw hits most configurations


def test_batch_matches_single_runs(ising3):
    sched = build_sa_schedule(ising3, delta=0.05, epsilon=0.3)
    seeds = [3, 11, 19]
    batch = run_sa_trials(ising3, sched, seeds)
    singles = [run_sa_chain(ising3, sched, s) for s in seeds]
    assert batch.tolist() == singles


def test_trajectories_match_exact_propagation(inst2):
    sched = build_sa_schedule(inst2, delta=1.0, epsilon=0.2)
    exact = propagate_exact(inst2, sched).distribution
    n_seeds = 600
    finals = run_sa_trials(inst2, sched, range(n_seeds))
    for config in range(2):
        freq = float(np.mean(finals == config))
        p = exact[config]
        band = 3.0 * math.sqrt(p * (1 - p) / n_seeds)
        assert abs(freq - p) <= band


def test_steps_per_temperature_knob(ising3):
    sched = build_sa_schedule(ising3, delta=0.05, epsilon=0.3)
    res1 = propagate_exact(ising3, sched, steps_per_temperature=1)
    res2 = propagate_exact(ising3, sched, steps_per_temperature=2)
    # more mixing per temperature cannot hurt convergence at this scale
    assert res2.tv_to_gibbs <= res1.tv_to_gibbs + 1e-9
    with pytest.raises(DomainError):
        run_sa_trials(ising3, sched, [0], steps_per_temperature=0)
