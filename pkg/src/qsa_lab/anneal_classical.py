"""Classical simulated annealing: schedule construction, Monte Carlo
trajectories, and exact distribution propagation for verification.

The schedule spaces inverse temperatures by delta_beta = c_sa * eps * Delta /
(2 E_max), runs one Metropolis step per temperature, and ends at the shared
terminal inverse temperature, so the step count scales as
E_max log(sqrt(d)) / (eps * Delta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .anneal_quantum import terminal_beta_details
from .chains import flip_energy_deltas, gibbs
from .errors import CapExceededError, DomainError
from .instances import ProblemInstance

# Random draws are generated in bulk per trajectory in chunks of this many
# steps; the chunk size is part of the determinism contract for a seed.
SA_CHUNK_STEPS = 4096

# propagate_exact refuses to run above this dimension.
PROPAGATION_DENSE_CAP = 1 << 12


@dataclass(frozen=True)
class SaSchedule:
    """Inverse-temperature ladder 0 = beta_0 < beta_1 < ... < beta_m.

    Increments equal delta_beta except possibly a short final step landing
    exactly on beta_m.  ``explicit_betas`` overrides the generated ladder
    (used for hand-built test schedules).
    """

    epsilon: float
    delta_used: float
    delta_beta: float
    beta_m: float
    m: int
    c_sa: float = 1.0
    beta_m_adjusted: bool = False
    explicit_betas: np.ndarray | None = None

    @property
    def betas(self) -> np.ndarray:
        """Full ladder including beta_0 (length m + 1)."""
        if self.explicit_betas is not None:
            return self.explicit_betas
        return np.concatenate([[0.0], self.step_betas(0, self.m)])

    def step_betas(self, k0: int, k1: int) -> np.ndarray:
        """Temperatures of steps k0..k1-1 (0-based among the m steps)."""
        if self.explicit_betas is not None:
            return self.explicit_betas[1 + k0 : 1 + k1]
        return np.minimum(np.arange(k0 + 1, k1 + 1) * self.delta_beta, self.beta_m)


def build_sa_schedule(
    instance: ProblemInstance,
    delta: float,
    epsilon: float,
    c_sa: float = 1.0,
    beta_m_formula: str = "energy_scaled",
) -> SaSchedule:
    """SA schedule for a chain whose spectral gap is lower-bounded by delta."""
    if not 0 < delta <= 2:
        raise DomainError(f"delta must lie in (0, 2], got {delta}")
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if c_sa <= 0:
        raise DomainError(f"c_sa must be positive, got {c_sa}")
    beta_m, adjusted = terminal_beta_details(instance, epsilon, formula=beta_m_formula)
    delta_beta = c_sa * epsilon * delta / (2.0 * instance.e_max)
    m = math.ceil(beta_m / delta_beta)
    return SaSchedule(
        epsilon=float(epsilon),
        delta_used=float(delta),
        delta_beta=float(delta_beta),
        beta_m=float(beta_m),
        m=int(m),
        c_sa=float(c_sa),
        beta_m_adjusted=adjusted,
    )


def sa_cost(schedule: SaSchedule) -> int:
    """Number of transition-rule applications the schedule prescribes."""
    return schedule.m


def run_sa_trials(
    instance: ProblemInstance,
    schedule: SaSchedule,
    seeds,
    steps_per_temperature: int = 1,
) -> np.ndarray:
    """Monte Carlo trajectories for many seeds; returns final configurations.

    Each seed owns an independent generator; its draw stream is the initial
    configuration, then per chunk of steps a block of proposal bits followed
    by a block of acceptance uniforms.  A single-seed run therefore produces
    an identical trajectory whether it runs alone or inside a batch.
    """
    if steps_per_temperature < 1:
        raise DomainError("steps_per_temperature must be >= 1")
    seeds = list(seeds)
    w = len(seeds)
    rngs = [np.random.default_rng(int(s)) for s in seeds]
    configs = np.array([r.integers(0, instance.d) for r in rngs], dtype=np.int64)
    total = schedule.m * steps_per_temperature
    if total == 0 or w == 0:
        return configs
    deltas = flip_energy_deltas(instance)
    bits = np.empty((SA_CHUNK_STEPS, w), dtype=np.int64)
    unifs = np.empty((SA_CHUNK_STEPS, w), dtype=np.float64)
    for start in range(0, total, SA_CHUNK_STEPS):
        steps = min(SA_CHUNK_STEPS, total - start)
        k0, k1 = start // steps_per_temperature, -(-(start + steps) // steps_per_temperature)
        betas = np.repeat(schedule.step_betas(k0, k1), steps_per_temperature)
        betas = betas[start - k0 * steps_per_temperature :][:steps]
        for s, rng in enumerate(rngs):
            bits[:steps, s] = rng.integers(0, instance.n, size=steps)
            unifs[:steps, s] = rng.random(steps)
        _kernels.sa_trajectory_chunk(configs, deltas, betas, bits[:steps], unifs[:steps])
    return configs


def run_sa_chain(
    instance: ProblemInstance,
    schedule: SaSchedule,
    seed: int,
    steps_per_temperature: int = 1,
) -> int:
    """Single trajectory: uniform random start, one Metropolis step per
    scheduled temperature, deterministic given the seed."""
    return int(run_sa_trials(instance, schedule, [seed], steps_per_temperature)[0])


@dataclass(frozen=True)
class PropagationResult:
    distribution: np.ndarray
    tv_to_gibbs: float
    success_probability: float


def propagate_exact(
    instance: ProblemInstance,
    schedule: SaSchedule,
    initial: np.ndarray | None = None,
    steps_per_temperature: int = 1,
) -> PropagationResult:
    """Deterministic push-forward of the full distribution through the schedule.

    Returns the final distribution, its total-variation distance to the Gibbs
    distribution at beta_m, and the probability mass on the optimal set.
    """
    if instance.d > PROPAGATION_DENSE_CAP:
        raise CapExceededError(
            f"exact propagation capped at d <= {PROPAGATION_DENSE_CAP}, got d = {instance.d}"
        )
    if initial is None:
        p = np.full(instance.d, 1.0 / instance.d)
    else:
        p = np.asarray(initial, dtype=np.float64).copy()
        if p.shape != (instance.d,):
            raise DomainError(f"initial distribution must have shape ({instance.d},)")
        if abs(p.sum() - 1.0) > 1e-9:
            raise DomainError("initial distribution must sum to 1")
    deltas = flip_energy_deltas(instance)
    out = np.empty_like(p)
    for k0 in range(0, schedule.m, SA_CHUNK_STEPS):
        k1 = min(k0 + SA_CHUNK_STEPS, schedule.m)
        betas = np.repeat(schedule.step_betas(k0, k1), steps_per_temperature)
        _kernels.propagate_chunk(p, out, deltas, betas)
    final_beta = schedule.betas[-1] if schedule.m or schedule.explicit_betas is not None else 0.0
    target = gibbs(instance, float(final_beta)).probabilities
    tv = 0.5 * float(np.abs(p - target).sum())
    success = float(p[instance.optimal_array].sum())
    return PropagationResult(distribution=p, tv_to_gibbs=tv, success_probability=success)
