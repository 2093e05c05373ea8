"""Quantization of a Metropolis chain into a unitary walk on the doubled space.

Layout and operators
--------------------
States live on two configuration registers; the amplitude at flat index
i*d + j belongs to |sigma_i>|sigma_j>.  Three building blocks act there:

* X: block-diagonal over the first register.  Block i is the Householder
  reflection V_i exchanging e_0 with a_i, the unit vector of square-root
  transition probabilities of row i (V_i = identity when a_i = e_0).  This
  completes the defining action X|sigma_i>|0> = sum_j sqrt(S_ij)|sigma_i>|sigma_j>
  into a real symmetric orthogonal matrix, so X^dagger = X.
* P: the register swap, amplitude (i, j) -> (j, i).
* R: sign flip of every amplitude whose second register is |0>.

Two walk variants are shipped:

* ``two_reflection`` (default): W = X . P . X . (2 Pi_0 - 1), a product of the
  j=0 fiber reflection with the swap conjugated into the X frame.  Detailed
  balance makes the coherent Gibbs state sum_i sqrt(pi_i)|sigma_i>|0> an exact
  +1 eigenvector for any unitary completion of X, and on the subspace with
  support on the |0> fiber the eigenphases are exactly arccos of the
  discriminant eigenvalues, so the phase gap is at least sqrt of the chain gap.
* ``literal_product``: the ten-factor transcription X'PXPRPX'PXR.  Under the
  Householder completion it deviates from the fixed-point identity by a
  completion artifact on the all-zeros fiber (residual 2 sqrt(1 - pi_0), which
  this module measures rather than asserts).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .chains import (
    DEFAULT_DENSE_CAP,
    GibbsDistribution,
    StochasticMatrix,
    discriminant_eigenvalues,
)
from .errors import (
    CapExceededError,
    DimensionMismatchError,
    DomainError,
    NumericalError,
)

VARIANTS = ("two_reflection", "literal_product")

# State vectors hold d**2 = 4**n amplitudes; 16 bytes each, two buffers in
# flight during evolution: n = 10 -> 32 MiB, n = 12 (hard ceiling) -> 512 MiB.
DEFAULT_MAX_N = 10
HARD_MAX_N = 12

# Eigenvalues this close to 1 are snapped to exactly 1 before arccos; this is
# the Perron eigenvalue whose exact value is fixed by row stochasticity.
_TOP_EIGENVALUE_SNAP = 1e-12
_ZERO_PHASE_TOL = 1e-10


def check_register_count(n: int, max_n: int = DEFAULT_MAX_N) -> None:
    limit = min(max_n, HARD_MAX_N)
    if n > limit:
        raise CapExceededError(
            f"n = {n} exceeds the state-vector cap {limit} "
            f"(4**n amplitudes; raise max_n up to {HARD_MAX_N} to override)"
        )


@dataclass
class QuantumState:
    """Complex amplitude vector over register pairs, flat index i*d + j."""

    n: int
    amplitudes: np.ndarray

    @property
    def d(self) -> int:
        return 1 << self.n

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "QuantumState":
        return QuantumState(self.n, self.amplitudes.copy())

    def block_view(self):
        return self.amplitudes.reshape(1, self.d, self.d)


def zero_state(n: int, max_n: int = DEFAULT_MAX_N) -> QuantumState:
    check_register_count(n, max_n)
    return QuantumState(n, np.zeros((1 << n) ** 2, dtype=np.complex128))


def basis_state(n: int, i: int, j: int, max_n: int = DEFAULT_MAX_N) -> QuantumState:
    state = zero_state(n, max_n)
    state.amplitudes[i * (1 << n) + j] = 1.0
    return state


@dataclass
class WalkOperator:
    """Structured walk operator: per-row Householder data plus the source chain.

    cols/vals hold the sparse reflection vectors w_i = a_i - e_0 in slot form
    (n neighbour slots, the self slot, the e_0 slot); scale[i] = -2/||w_i||^2,
    zero when row i needs no reflection.
    """

    beta: float
    n: int
    d: int
    variant: str
    source: StochasticMatrix
    cols: np.ndarray = field(repr=False)
    vals: np.ndarray = field(repr=False)
    scale: np.ndarray = field(repr=False)


def build_walk(
    S: StochasticMatrix,
    variant: str = "two_reflection",
    max_n: int = DEFAULT_MAX_N,
) -> WalkOperator:
    """Prepare the Householder blocks quantizing S."""
    if variant not in VARIANTS:
        raise DomainError(f"unknown walk variant {variant!r}; expected one of {VARIANTS}")
    check_register_count(S.n, max_n)
    d, n = S.d, S.n
    row_sums = S.flip.sum(axis=1) + S.self_loop
    if np.abs(row_sums - 1.0).max() > 1e-9:
        raise DomainError("source matrix rows must sum to 1")

    slots = n + 2
    idx = np.arange(d)
    cols = np.empty((d, slots), dtype=np.int64)
    vals = np.empty((d, slots), dtype=np.float64)
    for b in range(n):
        cols[:, b] = idx ^ (1 << b)
        vals[:, b] = np.sqrt(S.flip[:, b])
    cols[:, n] = idx
    vals[:, n] = np.sqrt(S.self_loop)
    cols[:, n + 1] = 0
    vals[:, n + 1] = -1.0

    # ||w||^2 = 2 (1 - a_i[0]) exactly; recompute with dedup for the rows
    # where slot columns collide (i = 0 and the neighbours of 0).
    wnorm2 = (vals * vals).sum(axis=1)
    for i in [0] + [1 << b for b in range(n)]:
        w = np.zeros(d)
        for k in range(slots):
            w[cols[i, k]] += vals[i, k]
        wnorm2[i] = float(w @ w)
    scale = np.where(wnorm2 > 1e-24, -2.0 / np.where(wnorm2 > 0, wnorm2, 1.0), 0.0)

    return WalkOperator(
        beta=S.beta, n=n, d=d, variant=variant, source=S,
        cols=cols, vals=vals, scale=scale,
    )


def _require_state(op: WalkOperator, state: QuantumState) -> None:
    if state.d != op.d:
        raise DimensionMismatchError(f"state over d = {state.d}, operator over d = {op.d}")


def apply_X(op: WalkOperator, state: QuantumState) -> QuantumState:
    """In-place blockwise Householder application (the isometry completion)."""
    _require_state(op, state)
    _kernels.apply_x_inplace(state.block_view(), op.cols, op.vals, op.scale)
    return state


def apply_X_dagger(op: WalkOperator, state: QuantumState) -> QuantumState:
    """Adjoint of X; equal to X for the real symmetric completion."""
    return apply_X(op, state)


def apply_P(state: QuantumState) -> QuantumState:
    """Register swap: amplitude (i, j) -> (j, i)."""
    d = state.d
    A = state.amplitudes.reshape(d, d)
    A[...] = A.T.copy()
    return state


def apply_R(state: QuantumState) -> QuantumState:
    """Negate every amplitude whose second register is |0>."""
    _kernels.negate_col0(state.block_view())
    return state


def apply_W(op: WalkOperator, state: QuantumState) -> QuantumState:
    """One walk step, in place (through a scratch buffer)."""
    _require_state(op, state)
    A = state.block_view()
    B = np.empty_like(A)
    out, _ = _kernels.walk_apply_block(
        op.variant == "literal_product", A, B, op.cols, op.vals, op.scale
    )
    if out is not A:
        A[...] = out
    return state


def coherent_gibbs_state(pi: GibbsDistribution, max_n: int = DEFAULT_MAX_N) -> QuantumState:
    """Amplitude sqrt(pi_i) at (i, 0), zero elsewhere."""
    d = pi.d
    n = d.bit_length() - 1
    state = zero_state(n, max_n)
    state.amplitudes[:: d] = np.sqrt(pi.probabilities)
    return state


def fixed_point_residual(op: WalkOperator, pi: GibbsDistribution) -> float:
    """|| W psi - psi ||_2 for the coherent Gibbs state of matching beta."""
    if pi.d != op.d:
        raise DimensionMismatchError(f"distribution over {pi.d} states, walk over {op.d}")
    if pi.beta != op.beta:
        raise DimensionMismatchError(f"beta mismatch: walk {op.beta}, distribution {pi.beta}")
    psi = coherent_gibbs_state(pi, max_n=HARD_MAX_N)
    moved = apply_W(op, psi.copy())
    return float(np.linalg.norm(moved.amplitudes - psi.amplitudes))


def dense_walk_matrix(op: WalkOperator, cap_n: int = 3) -> np.ndarray:
    """Materialize W column by column via the block kernels (verification oracle)."""
    if op.n > cap_n:
        raise CapExceededError(
            f"dense walk matrix needs n <= {cap_n} (got n = {op.n}); raise cap_n to override"
        )
    d = op.d
    A = np.eye(d * d).reshape(d * d, d, d)
    B = np.empty_like(A)
    out, _ = _kernels.walk_apply_block(
        op.variant == "literal_product", A, B, op.cols, op.vals, op.scale
    )
    # block s holds W e_s, i.e. column s of W
    return out.reshape(d * d, d * d).T.copy()


@dataclass(frozen=True)
class WalkSpectrum:
    """Eigenphases of W on the subspace with support on the |0> fiber.

    ``phases`` holds arccos of the d discriminant eigenvalues (ascending);
    when the dense path ran, ``dense_phases`` holds the distinct relevant
    phases extracted from full diagonalization for cross-validation.
    """

    beta: float
    phases: np.ndarray
    phase_gap: float
    chain_gap: float
    method: str
    dense_phases: np.ndarray | None = None


def _shortcut_phases(op: WalkOperator, dense_cap: int) -> tuple[np.ndarray, float]:
    lam = discriminant_eigenvalues(op.source, dense_cap=dense_cap)
    lam = np.clip(lam, -1.0, 1.0)
    lam[lam > 1.0 - _TOP_EIGENVALUE_SNAP] = 1.0
    chain_gap = float(lam[0] - lam[1])
    phases = np.arccos(lam)  # descending eigenvalues -> ascending phases
    return phases, chain_gap


def _relevant_dense_phases(W: np.ndarray, d: int, overlap_tol: float = 1e-8) -> np.ndarray:
    """Distinct eigenphases of W whose eigenspace overlaps the |0> fiber.

    Eigenvalues are clustered (the +1 space mixes the tracked eigenvector
    with the orthogonal complement, where W also acts trivially), and a
    cluster is kept when the Frobenius overlap between its orthonormalized
    eigenbasis and the fiber span{|i>|0>} exceeds ``overlap_tol``.
    """
    try:
        eigvals, eigvecs = np.linalg.eig(W)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"dense walk diagonalization failed: {exc}") from exc
    phases = np.abs(np.angle(eigvals))
    order = np.argsort(phases)
    phases = phases[order]
    eigvecs = eigvecs[:, order]
    fiber = np.arange(d) * d

    kept = []
    k = 0
    m = phases.size
    while k < m:
        kk = k
        while kk + 1 < m and phases[kk + 1] - phases[kk] < 1e-7:
            kk += 1
        q, _ = np.linalg.qr(eigvecs[:, k : kk + 1])
        overlap = float(np.sum(np.abs(q[fiber, :]) ** 2))
        if overlap > overlap_tol:
            ph = float(phases[k : kk + 1].mean())
            kept.append(0.0 if ph < _ZERO_PHASE_TOL else ph)
        k = kk + 1
    return np.array(sorted(kept))


def walk_spectrum(
    op: WalkOperator,
    method: str = "auto",
    dense_cap_n: int = 5,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> WalkSpectrum:
    """Eigenphase report for the walk.

    ``method``: "shortcut" predicts phases from the discriminant spectrum,
    "dense" additionally diagonalizes the materialized operator and extracts
    the fiber-overlapping phases, "auto" picks dense when n is within
    ``dense_cap_n``.  The dense path exists to validate the shortcut; the two
    are compared explicitly in the acceptance suite.
    """
    if method not in ("auto", "dense", "shortcut"):
        raise DomainError(f"unknown spectrum method {method!r}")
    if method == "auto":
        method = "dense" if op.n <= dense_cap_n else "shortcut"
    phases, chain_gap = _shortcut_phases(op, dense_cap)
    dense_phases = None
    if method == "dense":
        if op.n > dense_cap_n:
            raise CapExceededError(
                f"dense spectrum needs n <= {dense_cap_n}; use the shortcut for n = {op.n}"
            )
        dense_phases = _relevant_dense_phases(dense_walk_matrix(op, cap_n=dense_cap_n), op.d)
    nonzero = phases[phases > _ZERO_PHASE_TOL]
    phase_gap = float(nonzero[0]) if nonzero.size else 0.0
    return WalkSpectrum(
        beta=op.beta,
        phases=phases,
        phase_gap=phase_gap,
        chain_gap=chain_gap,
        method=method,
        dense_phases=dense_phases,
    )


# --- state and spectrum export ----------------------------------------------


def save_state(state: QuantumState, path: str) -> None:
    """Write amplitudes as little-endian float64 (re, im) pairs, index order."""
    state.amplitudes.astype("<c16").tofile(path)


def load_state(path: str, n: int) -> QuantumState:
    amps = np.fromfile(path, dtype="<c16")
    d = 1 << n
    if amps.size != d * d:
        raise DimensionMismatchError(
            f"state file holds {amps.size} amplitudes, expected {d * d} for n = {n}"
        )
    return QuantumState(n, amps.astype(np.complex128))


def write_spectrum_csv(path: str, spectra: list[WalkSpectrum]) -> None:
    """One row per beta: beta, chain gap, phase gap, then the phase columns."""
    if not spectra:
        raise DomainError("no spectra to write")
    width = max(s.phases.size for s in spectra)
    cols = ",".join(f"phi_{j}" for j in range(width))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"beta,chain_gap,phase_gap,{cols}\n")
        for s in spectra:
            row = [f"{s.beta:.12g}", f"{s.chain_gap:.12g}", f"{s.phase_gap:.12g}"]
            row += [f"{p:.12g}" for p in s.phases]
            row += [""] * (width - s.phases.size)
            fh.write(",".join(row) + "\n")
