"""Numba kernels for the hot loops: walk application, SA trajectories,
exact distribution propagation.

State blocks have shape (w, d, d): w independent state vectors, each stored
as a d x d amplitude matrix A[i, j] <-> |sigma_i>|sigma_j>.  The walk factors
are applied per row using the sparse Householder data (cols, vals, scale):
row i of X acts as v -> v + (scale_i * <w_i, v>) w_i with w_i stored in slot
form.  Slot columns may repeat for the few rows where the fiducial column 0
collides with a neighbour; gathers and scatters stay correct because both
are linear in the slot values.

All kernels are elementwise per state column with fixed loop order, so a
width-1 call is bit-identical to the same column inside a wider block.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def negate_col0(A):
    w, d, _ = A.shape
    for s in range(w):
        for i in range(d):
            A[s, i, 0] = -A[s, i, 0]


@njit(cache=True)
def negate_except_col0(A):
    w, d, _ = A.shape
    for s in range(w):
        for i in range(d):
            for j in range(1, d):
                A[s, i, j] = -A[s, i, j]


@njit(cache=True)
def apply_x_inplace(A, cols, vals, scale):
    w, d, _ = A.shape
    slots = cols.shape[1]
    for s in range(w):
        for i in range(d):
            if scale[i] == 0.0:
                continue
            dot = A[s, i, cols[i, 0]] * vals[i, 0]
            for k in range(1, slots):
                dot += A[s, i, cols[i, k]] * vals[i, k]
            c = dot * scale[i]
            for k in range(slots):
                A[s, i, cols[i, k]] += c * vals[i, k]


@njit(cache=True)
def transpose_block(A, B):
    w, d, _ = A.shape
    for s in range(w):
        for i in range(d):
            for j in range(d):
                B[s, i, j] = A[s, j, i]


@njit(cache=True)
def transpose_then_x(A, B, cols, vals, scale):
    """B <- X applied rowwise to the register swap of A."""
    w, d, _ = A.shape
    slots = cols.shape[1]
    for s in range(w):
        for i in range(d):
            for j in range(d):
                B[s, i, j] = A[s, j, i]
        for i in range(d):
            if scale[i] == 0.0:
                continue
            dot = B[s, i, cols[i, 0]] * vals[i, 0]
            for k in range(1, slots):
                dot += B[s, i, cols[i, k]] * vals[i, k]
            c = dot * scale[i]
            for k in range(slots):
                B[s, i, cols[i, k]] += c * vals[i, k]


def walk_apply_block(variant_literal, A, B, cols, vals, scale):
    """Apply one walk step to every column of the block.

    Returns the pair (result, scratch); callers must continue with the
    returned arrays since the roles of A and B may have swapped.
    """
    if variant_literal:
        # ten factors right to left: R X P X' P R P X P X'
        negate_col0(A)
        apply_x_inplace(A, cols, vals, scale)
        transpose_then_x(A, B, cols, vals, scale)
        transpose_block(B, A)
        negate_col0(A)
        transpose_then_x(A, B, cols, vals, scale)
        transpose_then_x(B, A, cols, vals, scale)
        return A, B
    # default: X' P X (2 Pi_0 - 1), right to left
    negate_except_col0(A)
    apply_x_inplace(A, cols, vals, scale)
    transpose_then_x(A, B, cols, vals, scale)
    return B, A


@njit(cache=True)
def sa_trajectory_chunk(configs, deltas, betas, bits, unifs):
    """Advance Monte Carlo configurations through one chunk of schedule steps.

    configs: (w,) current configuration per trajectory, updated in place.
    deltas: (d, n) table of E(i ^ 2^b) - E(i).
    betas: (steps,) inverse temperature per step.
    bits: (steps, w) proposed flip bit per step and trajectory.
    unifs: (steps, w) acceptance uniforms.
    """
    steps, w = bits.shape
    for t in range(steps):
        beta = betas[t]
        for s in range(w):
            i = configs[s]
            b = bits[t, s]
            de = deltas[i, b]
            if de <= 0.0 or unifs[t, s] < np.exp(-beta * de):
                configs[s] = i ^ (1 << b)


@njit(cache=True)
def propagate_chunk(p, out, deltas, betas):
    """Exact push-forward of a distribution through Metropolis steps.

    p: (d,) distribution, overwritten with the final distribution.
    out: (d,) scratch buffer.
    deltas: (d, n) energy increment table.
    betas: (steps,) inverse temperature per step.
    """
    d, n = deltas.shape
    inv_n = 1.0 / n
    for t in range(betas.size):
        beta = betas[t]
        for j in range(d):
            out[j] = 0.0
        for i in range(d):
            pi = p[i]
            rem = 1.0
            for b in range(n):
                de = deltas[i, b]
                a = inv_n if de <= 0.0 else np.exp(-beta * de) * inv_n
                out[i ^ (1 << b)] += pi * a
                rem -= a
            if rem > 0.0:
                out[i] += pi * rem
        for j in range(d):
            p[j] = out[j]
