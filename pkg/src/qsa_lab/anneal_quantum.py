"""Quantum simulated annealing by evolution randomization.

The run starts from the uniform superposition on the |0> fiber, then for each
scheduled inverse temperature applies the walk a random number of times
(t_k = sum of r draws from unif[0, Q-1], Q = ceil(2 pi / sqrt(Delta))) and
finally measures the first register.  Randomizing the walk powers dephases
every eigencomponent except the tracked one, emulating a projective Zeno
step without phase estimation; the spacing delta_beta = eps / (2 E_max)
keeps the tracked eigenvector's motion per step small enough that the final
state concentrates on the optimal configurations with probability >= 1 - eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .chains import flip_energy_deltas, gibbs_optimal_mass, metropolis
from .errors import DomainError
from .instances import ProblemInstance, evaluate
from .walk import DEFAULT_MAX_N, QuantumState, build_walk, check_register_count, zero_state

# Terminal-beta adjustment factor when the optimal-mass check fails.
_BETA_GROWTH = 1.25

# Seed-block evolution keeps at most this much state memory in flight.
_MAX_BLOCK_BYTES = 256 * 1024 * 1024


def terminal_beta_details(
    instance: ProblemInstance,
    epsilon: float,
    formula: str = "energy_scaled",
) -> tuple[float, bool]:
    """Final inverse temperature and whether the mass check had to raise it.

    ``energy_scaled`` (default) uses (2 / gamma) log(2 sqrt(d) / eps), which
    guarantees Gibbs mass >= 1 - eps/2 on the optimal set since the excited
    tail is at most d exp(-beta_m gamma) <= eps^2 / 4.  ``literal_caption``
    uses (gamma / 2) log(2 sqrt(d) / eps) instead; it scales the wrong way
    with the energy gap and is provided for comparison only.  Either way the
    mass condition is verified by direct summation and beta_m is grown
    geometrically until it holds.
    """
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    log_term = math.log(2.0 * math.sqrt(instance.d) / epsilon)
    if formula == "energy_scaled":
        beta_m = (2.0 / instance.gamma) * log_term
    elif formula == "literal_caption":
        beta_m = (instance.gamma / 2.0) * log_term
    else:
        raise DomainError(f"unknown beta_m formula {formula!r}")
    adjusted = False
    while gibbs_optimal_mass(instance, beta_m) < 1.0 - epsilon / 2.0:
        beta_m *= _BETA_GROWTH
        adjusted = True
    return float(beta_m), adjusted


def terminal_beta(
    instance: ProblemInstance,
    epsilon: float,
    formula: str = "energy_scaled",
) -> float:
    return terminal_beta_details(instance, epsilon, formula)[0]


@dataclass(frozen=True)
class QsaSchedule:
    """Temperatures beta_1..beta_m plus the randomization constants."""

    epsilon: float
    delta_used: float
    delta_beta: float
    beta_m: float
    m: int
    Q: int
    r: int = 1
    beta_m_adjusted: bool = False

    @property
    def betas(self) -> np.ndarray:
        return np.minimum(np.arange(1, self.m + 1) * self.delta_beta, self.beta_m)

    @property
    def max_draw(self) -> int:
        """Largest possible t_k (sum of r draws from unif[0, Q-1])."""
        return self.r * (self.Q - 1)


def build_qsa_schedule(
    instance: ProblemInstance,
    delta: float,
    epsilon: float,
    r: int = 1,
    beta_m_formula: str = "energy_scaled",
) -> QsaSchedule:
    if not 0 < delta <= 2:
        raise DomainError(f"delta must lie in (0, 2], got {delta}")
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if r < 1:
        raise DomainError(f"randomization rounds r must be >= 1, got {r}")
    beta_m, adjusted = terminal_beta_details(instance, epsilon, formula=beta_m_formula)
    delta_beta = epsilon / (2.0 * instance.e_max)
    m = math.ceil(beta_m / delta_beta)
    Q = math.ceil(2.0 * math.pi / math.sqrt(delta))
    return QsaSchedule(
        epsilon=float(epsilon),
        delta_used=float(delta),
        delta_beta=float(delta_beta),
        beta_m=float(beta_m),
        m=int(m),
        Q=int(Q),
        r=int(r),
        beta_m_adjusted=adjusted,
    )


def average_cost(schedule: QsaSchedule) -> float:
    """Expected number of walk applications, m * r * (Q - 1) / 2."""
    return schedule.m * schedule.r * (schedule.Q - 1) / 2.0


def initial_state(n: int, max_n: int = DEFAULT_MAX_N) -> QuantumState:
    """Uniform superposition on the |0> fiber, amplitude 1/sqrt(d) at (i, 0).

    Computed as sqrt(1/d) so it matches the coherent Gibbs state at beta = 0
    bit for bit (1/d is exact for power-of-two d).
    """
    state = zero_state(n, max_n)
    d = 1 << n
    state.amplitudes[::d] = math.sqrt(1.0 / d)
    return state


@dataclass(frozen=True)
class QsaRunTrace:
    seed: int
    walk_variant: str
    t_k: np.ndarray
    total_applications: int
    measured: int
    exact_success: float


def _draw_t(rng: np.random.Generator, schedule: QsaSchedule) -> np.ndarray:
    """t_k = sum of r independent draws from unif[0, Q-1], one per step."""
    if schedule.m == 0:
        return np.zeros(0, dtype=np.int64)
    draws = rng.integers(0, schedule.Q, size=(schedule.m, schedule.r), dtype=np.int64)
    return draws.sum(axis=1)


def _evolve_block(
    instance: ProblemInstance,
    schedule: QsaSchedule,
    T: np.ndarray,
    walk_variant: str,
    max_n: int,
) -> np.ndarray:
    """Evolve a block of initial states through the randomized walk powers.

    T has shape (m, w): walk powers per step and per column.  Amplitudes stay
    real throughout (the walk is real orthogonal and the initial state real),
    so the block is evolved in float64.  Within each step the columns are
    sorted by decreasing power and the walk is applied to a shrinking prefix,
    which makes the work exactly sum(T) column applications.
    """
    d, m = instance.d, schedule.m
    w = T.shape[1]
    literal = walk_variant == "literal_product"
    A = np.zeros((w, d, d))
    A[:, :, 0] = math.sqrt(1.0 / d)
    if m == 0:
        return A
    B = np.empty_like(A)
    deltas = flip_energy_deltas(instance)
    betas = schedule.betas
    # a literal step leaves data in its input buffer; the default variant
    # swaps buffers once per application
    swaps_per_apply = 0 if literal else 1
    for k in range(m):
        tk = T[k]
        if not tk.any():
            continue
        op = build_walk(metropolis(instance, float(betas[k]), _deltas=deltas),
                        walk_variant, max_n=max_n)
        order = np.argsort(-tk, kind="stable")
        tk_sorted = tk[order]
        A = A[order]
        cur, scr = A, B
        tmax = int(tk_sorted[0])
        neg = -tk_sorted
        for t in range(1, tmax + 1):
            active = int(np.searchsorted(neg, -t, side="right"))
            out, _ = _kernels.walk_apply_block(
                literal, cur[:active], scr[:active], op.cols, op.vals, op.scale
            )
            if swaps_per_apply:
                cur, scr = scr, cur
        # column c's result sits in the buffer its own parity points at
        if swaps_per_apply:
            in_b = tk_sorted % 2 == 1
            merged = np.empty_like(A)
            merged[~in_b] = A[~in_b]
            merged[in_b] = B[in_b]
        else:
            merged = A
        restored = np.empty_like(merged)
        restored[order] = merged
        A = restored
    return A


def _first_register_probs(block_row: np.ndarray) -> np.ndarray:
    """Measurement marginal Pr(sigma_i) = sum_j |amp(i, j)|^2, renormalized."""
    probs = (np.abs(block_row) ** 2).sum(axis=1)
    return probs / probs.sum()


def run_qsa_ensemble(
    instance: ProblemInstance,
    schedule: QsaSchedule,
    seeds,
    walk_variant: str = "two_reflection",
    max_n: int = DEFAULT_MAX_N,
) -> list[QsaRunTrace]:
    """Independent seeded runs sharing per-temperature walk builds.

    Each seed's generator first draws all its walk powers in one block, then
    one uniform for the final measurement, so a seed's trace is identical
    whether it runs alone or inside any ensemble.
    """
    check_register_count(instance.n, max_n)
    seeds = [int(s) for s in seeds]
    d = instance.d
    # memory cap: two float64 buffers of w*d*d
    max_width = max(1, _MAX_BLOCK_BYTES // (2 * 8 * d * d))
    traces: list[QsaRunTrace] = []
    optimal = instance.optimal_array
    for lo in range(0, len(seeds), max_width):
        chunk = seeds[lo : lo + max_width]
        rngs = [np.random.default_rng(s) for s in chunk]
        T = np.stack([_draw_t(rng, schedule) for rng in rngs], axis=1) \
            if schedule.m else np.zeros((0, len(chunk)), dtype=np.int64)
        block = _evolve_block(instance, schedule, T, walk_variant, max_n)
        for c, (seed, rng) in enumerate(zip(chunk, rngs)):
            probs = _first_register_probs(block[c])
            exact = float(probs[optimal].sum())
            u = rng.random()
            measured = int(min(np.searchsorted(np.cumsum(probs), u, side="right"), d - 1))
            traces.append(
                QsaRunTrace(
                    seed=seed,
                    walk_variant=walk_variant,
                    t_k=T[:, c].copy(),
                    total_applications=int(T[:, c].sum()),
                    measured=measured,
                    exact_success=exact,
                )
            )
    return traces


def run_qsa(
    instance: ProblemInstance,
    schedule: QsaSchedule,
    seed: int,
    walk_variant: str = "two_reflection",
    max_n: int = DEFAULT_MAX_N,
) -> QsaRunTrace:
    """One seeded QSA run; bit-identical to the same seed inside an ensemble."""
    return run_qsa_ensemble(instance, schedule, [seed], walk_variant, max_n)[0]


def exact_success_probability(
    instance: ProblemInstance,
    schedule: QsaSchedule,
    seed: int,
    walk_variant: str = "two_reflection",
    max_n: int = DEFAULT_MAX_N,
) -> float:
    """Optimal-set mass of the final state, bypassing measurement sampling."""
    return run_qsa(instance, schedule, seed, walk_variant, max_n).exact_success


def trace_to_document(trace: QsaRunTrace, schedule: QsaSchedule, delta: float | None = None) -> dict:
    """JSON-ready record of one run (t_k summarized beyond 1000 steps)."""
    if trace.t_k.size <= 1000:
        t_field = [int(t) for t in trace.t_k]
    else:
        t_field = {
            "count": int(trace.t_k.size),
            "total": int(trace.t_k.sum()),
            "mean": float(f"{trace.t_k.mean():.12g}"),
            "max": int(trace.t_k.max()),
        }
    return {
        "seed": trace.seed,
        "epsilon": schedule.epsilon,
        "delta": schedule.delta_used if delta is None else delta,
        "Q": schedule.Q,
        "m": schedule.m,
        "r": schedule.r,
        "t_k": t_field,
        "total_applications": trace.total_applications,
        "measured_config": trace.measured,
        "exact_success": float(f"{trace.exact_success:.12g}"),
        "walk_variant": trace.walk_variant,
        "beta_m": float(f"{schedule.beta_m:.12g}"),
        "adjusted_beta_m": schedule.beta_m_adjusted,
    }


@dataclass(frozen=True)
class RepeatResult:
    configuration: int
    rounds_used: int
    certified: bool
    best_energy: float
    aborts: int
    attempts: int


def repeat_until_success(
    instance: ProblemInstance,
    schedule: QsaSchedule,
    max_rounds: int,
    seed: int,
    walk_variant: str = "two_reflection",
    c_markov: float = 4.0,
    max_n: int = DEFAULT_MAX_N,
) -> RepeatResult:
    """Repeated executions with a Markov cost cutoff.

    Each round runs QSA with a fresh sub-seed, keeping the best-energy
    measurement and stopping early when a configuration of known optimal
    energy appears.  Attempts whose sampled total walk count exceeds
    c_markov * average_cost(schedule) are aborted and redrawn (at most
    Pr <= 1/c_markov of attempts, by Markov's inequality).
    """
    if max_rounds < 1:
        raise DomainError("max_rounds must be >= 1")
    if c_markov <= 1:
        raise DomainError("c_markov must exceed 1")
    rng = np.random.default_rng(int(seed))
    cutoff = c_markov * average_cost(schedule)
    best_config, best_energy = -1, math.inf
    aborts = attempts = 0
    for round_idx in range(1, max_rounds + 1):
        while True:
            attempts += 1
            sub_seed = int(rng.integers(0, 2**63))
            planned = _draw_t(np.random.default_rng(sub_seed), schedule)
            if planned.sum() <= cutoff:
                break
            aborts += 1
        trace = run_qsa(instance, schedule, sub_seed, walk_variant, max_n)
        energy = evaluate(instance, trace.measured)
        if energy < best_energy:
            best_config, best_energy = trace.measured, energy
        if trace.measured in instance.optimal_set:
            return RepeatResult(
                configuration=trace.measured, rounds_used=round_idx, certified=True,
                best_energy=energy, aborts=aborts, attempts=attempts,
            )
    return RepeatResult(
        configuration=best_config, rounds_used=max_rounds, certified=False,
        best_energy=best_energy, aborts=aborts, attempts=attempts,
    )
