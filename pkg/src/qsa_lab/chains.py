"""Metropolis-Hastings transition matrices and their spectral analysis.

Conventions, fixed once and used everywhere:

* S[i, j] = Pr_beta(sigma_j | sigma_i), the transition probability i -> j.
  Rows sum to one; distributions evolve through the transpose action
  p'_j = sum_i S[i, j] p_i.
* The proposal is uniform over the n single-bit-flip neighbours (probability
  1/n each); acceptance is min(1, exp(-beta (E_j - E_i))); rejected mass goes
  to the self loop.  Each row therefore has at most n+1 nonzero entries.
* Matrices are stored structurally: a (d, n) array of flip probabilities
  (column b holds i -> i^2^b) plus the self-loop vector.  Dense forms are
  materialized only for eigensolves, capped by ``dense_cap``.

Under detailed balance the symmetrized kernel sqrt(S_ij S_ji) has the same
spectrum as S, so all gap computations run on a symmetric matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError, DimensionMismatchError, DomainError, NumericalError
from .instances import ProblemInstance

# Dense eigensolves refuse to run above this dimension unless overridden.
DEFAULT_DENSE_CAP = 1 << 10


@dataclass(frozen=True)
class StochasticMatrix:
    """Single-bit-flip Metropolis transition matrix in structured form."""

    n: int
    d: int
    beta: float
    flip: np.ndarray       # (d, n); flip[i, b] = Pr(i -> i ^ 2^b)
    self_loop: np.ndarray  # (d,)
    laziness: float = 1.0

    def row(self, i: int) -> list[tuple[int, float]]:
        """Sparse row i as (target, probability) pairs, positive entries only."""
        out = []
        if self.self_loop[i] > 0.0:
            out.append((int(i), float(self.self_loop[i])))
        for b in range(self.n):
            p = self.flip[i, b]
            if p > 0.0:
                out.append((int(i) ^ (1 << b), float(p)))
        out.sort()
        return out

    def entry(self, i: int, j: int) -> float:
        if i == j:
            return float(self.self_loop[i])
        delta = i ^ j
        if delta & (delta - 1) == 0:  # single bit differs
            return float(self.flip[i, delta.bit_length() - 1])
        return 0.0

    def to_dense(self) -> np.ndarray:
        S = np.zeros((self.d, self.d))
        idx = np.arange(self.d)
        for b in range(self.n):
            S[idx, idx ^ (1 << b)] = self.flip[:, b]
        S[idx, idx] = self.self_loop
        return S

    def sqrt_row(self, i: int) -> np.ndarray:
        """Dense sqrt of row i (the unit vector quantized by the walk)."""
        a = np.zeros(self.d)
        a[i] = np.sqrt(max(self.self_loop[i], 0.0))
        for b in range(self.n):
            a[i ^ (1 << b)] = np.sqrt(self.flip[i, b])
        return a

    def triplets(self) -> list[tuple[int, int, float]]:
        """Nonzero entries as (i, j, value), deterministic row-major order."""
        out = []
        for i in range(self.d):
            for j, p in self.row(i):
                out.append((i, j, p))
        return out


@dataclass(frozen=True)
class GibbsDistribution:
    beta: float
    probabilities: np.ndarray

    @property
    def d(self) -> int:
        return self.probabilities.size


@dataclass(frozen=True)
class SpectralReport:
    beta: float
    eigenvalues: np.ndarray  # sorted descending
    gap: float               # eigenvalues[0] - eigenvalues[1]


@dataclass(frozen=True)
class DiscriminantMatrix:
    """Symmetric kernel D_ij = sqrt(S_ij S_ji), same structured storage as S."""

    n: int
    d: int
    beta: float
    flip: np.ndarray  # (d, n); flip[i, b] = D[i, i ^ 2^b]
    diag: np.ndarray  # (d,)

    def entry(self, i: int, j: int) -> float:
        if i == j:
            return float(self.diag[i])
        delta = i ^ j
        if delta & (delta - 1) == 0:
            return float(self.flip[i, delta.bit_length() - 1])
        return 0.0

    def to_dense(self) -> np.ndarray:
        D = np.zeros((self.d, self.d))
        idx = np.arange(self.d)
        for b in range(self.n):
            D[idx, idx ^ (1 << b)] = self.flip[:, b]
        D[idx, idx] = self.diag
        return D


def flip_energy_deltas(instance: ProblemInstance) -> np.ndarray:
    """(d, n) table of E(i ^ 2^b) - E(i); beta-independent, reusable."""
    d, n = instance.d, instance.n
    idx = np.arange(d)
    dE = np.empty((d, n))
    for b in range(n):
        dE[:, b] = instance.energies[idx ^ (1 << b)] - instance.energies
    return dE


def metropolis(
    instance: ProblemInstance,
    beta: float,
    laziness: float = 1.0,
    _deltas: np.ndarray | None = None,
) -> StochasticMatrix:
    """Metropolis-Hastings chain at inverse temperature beta.

    ``laziness`` alpha in (0, 1] replaces S by (1-alpha) I + alpha S; the
    default 1.0 leaves the chain unmodified.  All spectral reports refer to
    the matrix actually constructed here.
    """
    if beta < 0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    if not 0 < laziness <= 1:
        raise DomainError(f"laziness must lie in (0, 1], got {laziness}")
    dE = flip_energy_deltas(instance) if _deltas is None else _deltas
    flip = np.exp(-beta * np.maximum(dE, 0.0)) / instance.n
    if laziness != 1.0:
        flip = laziness * flip
    self_loop = 1.0 - flip.sum(axis=1)
    np.maximum(self_loop, 0.0, out=self_loop)  # clip -eps from rounding
    return StochasticMatrix(
        n=instance.n, d=instance.d, beta=float(beta),
        flip=flip, self_loop=self_loop, laziness=float(laziness),
    )


def gibbs(instance: ProblemInstance, beta: float) -> GibbsDistribution:
    """Gibbs distribution proportional to exp(-beta E), computed with the
    min-energy shift for numerical stability."""
    if beta < 0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    w = np.exp(-beta * (instance.energies - instance.energies.min()))
    return GibbsDistribution(beta=float(beta), probabilities=w / w.sum())


def gibbs_optimal_mass(instance: ProblemInstance, beta: float) -> float:
    """Probability mass the Gibbs distribution puts on the optimal set."""
    p = gibbs(instance, beta).probabilities
    return float(p[instance.optimal_array].sum())


def detailed_balance_residual(S: StochasticMatrix, pi: GibbsDistribution) -> float:
    """max over (i, j) of |pi_i S_ij - pi_j S_ji|.

    A distribution at the wrong temperature is allowed on purpose: the
    residual is then positive and flags the mismatch.
    """
    if pi.d != S.d:
        raise DimensionMismatchError(f"distribution over {pi.d} states, matrix over {S.d}")
    p = pi.probabilities
    idx = np.arange(S.d)
    worst = 0.0
    for b in range(S.n):
        fwd = p * S.flip[:, b]
        back = (p * S.flip[:, b])[idx ^ (1 << b)]
        worst = max(worst, float(np.abs(fwd - back).max()))
    return worst


def discriminant(S: StochasticMatrix) -> DiscriminantMatrix:
    """Symmetrization D_ij = sqrt(S_ij S_ji); similar to S under detailed balance."""
    idx = np.arange(S.d)
    flip = np.empty_like(S.flip)
    for b in range(S.n):
        flip[:, b] = np.sqrt(S.flip[:, b] * S.flip[idx ^ (1 << b), b])
    return DiscriminantMatrix(
        n=S.n, d=S.d, beta=S.beta, flip=flip, diag=S.self_loop.copy()
    )


def discriminant_eigenvalues(S: StochasticMatrix, dense_cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """All eigenvalues of the discriminant, sorted descending."""
    if S.d > dense_cap:
        raise CapExceededError(
            f"dense eigensolve needs d <= {dense_cap}, got d = {S.d}; raise dense_cap to override"
        )
    try:
        lam = np.linalg.eigvalsh(discriminant(S).to_dense())
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolve failed at beta={S.beta}: {exc}") from exc
    return lam[::-1]


def spectral_report(S: StochasticMatrix, dense_cap: int = DEFAULT_DENSE_CAP) -> SpectralReport:
    """Spectrum of S via the symmetric discriminant; gap = lambda_0 - lambda_1."""
    lam = discriminant_eigenvalues(S, dense_cap=dense_cap)
    return SpectralReport(beta=S.beta, eigenvalues=lam, gap=float(lam[0] - lam[1]))


def schedule_gap(
    instance: ProblemInstance,
    betas,
    laziness: float = 1.0,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> float:
    """min over the beta grid of the chain's spectral gap."""
    betas = np.atleast_1d(np.asarray(betas, dtype=np.float64))
    if betas.size == 0:
        raise DomainError("schedule_gap needs at least one beta")
    deltas = flip_energy_deltas(instance)
    worst = np.inf
    for beta in betas:
        S = metropolis(instance, float(beta), laziness=laziness, _deltas=deltas)
        worst = min(worst, spectral_report(S, dense_cap=dense_cap).gap)
    return float(worst)


def evolve_distribution(S: StochasticMatrix, p) -> np.ndarray:
    """One push-forward step: p'_j = sum_i S_ij p_i."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (S.d,):
        raise DimensionMismatchError(f"distribution shape {p.shape} does not match d = {S.d}")
    out = p * S.self_loop
    idx = np.arange(S.d)
    for b in range(S.n):
        out[idx ^ (1 << b)] += p * S.flip[:, b]
    return out


def dump_matrix(S: StochasticMatrix, path: str, fmt: str = "csv") -> None:
    """Write the nonzero entries as i,j,value triplets (row-major order)."""
    trips = S.triplets()
    if fmt == "csv":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("i,j,value\n")
            for i, j, v in trips:
                fh.write(f"{i},{j},{v:.12g}\n")
    elif fmt == "json":
        import json

        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {"beta": S.beta, "d": S.d,
                 "triplets": [[i, j, float(f"{v:.12g}")] for i, j, v in trips]},
                fh,
            )
            fh.write("\n")
    else:
        raise DomainError(f"unknown dump format {fmt!r}")
