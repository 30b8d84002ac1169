"""JIT-compiled pair-sum kernels for the penalty estimator and MMD.

The quadratic pair sums are partitioned into fixed-size row blocks; each block
accumulates into its own partial and the partials are reduced in index order.
Results are therefore bit-identical regardless of how many threads execute
the blocks.
"""

import numpy as np
from numba import config as _numba_config
from numba import njit, prange

# The sandboxed TBB is too old for numba and only triggers a warning before
# falling back; pick the OpenMP layer directly.
_numba_config.THREADING_LAYER = "omp"

BLOCK = 64


@njit(cache=True, parallel=True, fastmath=True)
def penalty_sums(tf, Xf, Uf, slice_ids, X0, T, h, sigma, c1, c2, c3, mask_same, with_grad):
    """Scaled three-sum penalty over one batch, plus d(value)/d(drift values).

    tf, Xf, Uf: flat times, positions and drift values at the MN batch points;
    X0: initial-distribution particles; c1/c2/c3: prefactors of the bulk,
    boundary and cross sums.  The bulk and cross sums skip self-pairs (and,
    when `mask_same`, all same-slice pairs).
    """
    n, d = Xf.shape
    n0 = X0.shape[0]
    a = 1.0 / (h * h)
    s2 = 0.5 * sigma * sigma
    use_sigma = sigma > 0.0
    nblk = (n + BLOCK - 1) // BLOCK
    bulk = np.zeros(nblk)
    cross = np.zeros(nblk)
    bnd = np.zeros(nblk)
    dU = np.zeros((n, d))
    for b in prange(nblk):
        lo = b * BLOCK
        hi = min(n, lo + BLOCK)
        acc_bulk = 0.0
        acc_cross = 0.0
        acc_bnd = 0.0
        for p in range(lo, hi):
            tp = tf[p]
            for q in range(n):
                if q == p:
                    continue
                if mask_same and slice_ids[q] == slice_ids[p]:
                    continue
                dt = tp - tf[q]
                dx2 = 0.0
                tau = dt
                tauq = dt
                uu = 0.0
                for j in range(d):
                    dxj = Xf[p, j] - Xf[q, j]
                    dx2 += dxj * dxj
                    tau += Uf[p, j] * dxj
                    tauq += Uf[q, j] * dxj
                    uu += Uf[p, j] * Uf[q, j]
                K = np.exp(-0.5 * a * (dt * dt + dx2))
                phi1 = -a * K
                phi2 = a * a * K
                AA = -phi2 * tau * tauq - phi1 * (1.0 + uu)
                g3 = 0.0
                if use_sigma:
                    phi3 = -a * a * a * K
                    phi4 = a * a * a * a * K
                    g3 = phi3 * dx2 + (d + 2) * phi2
                    AA += s2 * g3 * (tau - tauq)
                    AA += s2 * s2 * (
                        phi4 * dx2 * dx2
                        + 2.0 * (d + 2) * phi3 * dx2
                        + d * (d + 2) * phi2
                    )
                w = T - max(tp, tf[q])
                acc_bulk += w * AA
                Asing = phi1 * tau
                if use_sigma:
                    Asing += s2 * (d * phi1 + phi2 * dx2)
                ind = 1.0 if tp <= tf[q] else 0.0
                acc_cross += ind * Asing
                if with_grad:
                    # pair-swap symmetry folds the q-role derivative of the
                    # bulk term into a factor 2 on the p-role derivative
                    for j in range(d):
                        dxj = Xf[p, j] - Xf[q, j]
                        dAA = -phi2 * tauq * dxj - phi1 * Uf[q, j]
                        if use_sigma:
                            dAA += s2 * g3 * dxj
                        dU[p, j] += 2.0 * c1 * w * dAA + c3 * ind * phi1 * dxj
            for k in range(n0):
                dx2 = 0.0
                tau = tp
                for j in range(d):
                    dxj = Xf[p, j] - X0[k, j]
                    dx2 += dxj * dxj
                    tau += Uf[p, j] * dxj
                K = np.exp(-0.5 * a * (tp * tp + dx2))
                phi1 = -a * K
                Aval = phi1 * tau
                if use_sigma:
                    Aval += s2 * (d * phi1 + a * a * K * dx2)
                wt = T - tp
                acc_bnd += wt * Aval
                if with_grad:
                    for j in range(d):
                        dxj = Xf[p, j] - X0[k, j]
                        dU[p, j] += c2 * wt * phi1 * dxj
        bulk[b] = acc_bulk
        cross[b] = acc_cross
        bnd[b] = acc_bnd
    value = c1 * bulk.sum() + c2 * bnd.sum() + c3 * cross.sum()
    return value, dU


@njit(cache=True, parallel=True, fastmath=True)
def gaussian_kernel_mean(A, B, h):
    """Mean of exp(-|a_i - b_j|^2 / (2 h^2)) over all (i, j) pairs."""
    n, d = A.shape
    m = B.shape[0]
    inv = 0.5 / (h * h)
    nblk = (n + BLOCK - 1) // BLOCK
    partial = np.zeros(nblk)
    for b in prange(nblk):
        lo = b * BLOCK
        hi = min(n, lo + BLOCK)
        acc = 0.0
        for i in range(lo, hi):
            for j in range(m):
                dx2 = 0.0
                for c in range(d):
                    diff = A[i, c] - B[j, c]
                    dx2 += diff * diff
                acc += np.exp(-inv * dx2)
        partial[b] = acc
    return partial.sum() / (n * m)
