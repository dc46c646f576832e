"""Compiled inner loops for orthogonal matching pursuit.

All kernels are plain scalar loops so that a signal coded on its own and the
same signal coded inside a batch go through bit-identical arithmetic. The
batch kernel releases the GIL, which lets a thread pool run disjoint column
ranges concurrently without changing any result.
"""

import numpy as np
from numba import njit

# Status codes shared with the Python wrappers.
STATUS_OK = 0
STATUS_SINGULAR = 2
STATUS_STALLED = 3

# Diagonal guard for the normal equations on the selected support.
_DIAG_GUARD = 1e-12
# Relative window inside which two correlations count as tied.
_TIE_REL = 1e-12


@njit(cache=True, nogil=True)
def gram_matrix(D):
    """Dense Gram matrix D^T D, computed with plain loops."""
    m, K = D.shape
    G = np.empty((K, K))
    for i in range(K):
        for j in range(i, K):
            acc = 0.0
            for t in range(m):
                acc += D[t, i] * D[t, j]
            G[i, j] = acc
            G[j, i] = acc
    return G


@njit(cache=True, nogil=True)
def omp_single(D, G, y, s_max, eps, out_idx, out_val):
    """Greedy OMP on one signal.

    Selects atoms by maximal |correlation| with the current residual
    (correlations maintained through the Gram matrix), refits coefficients by
    least squares on the support via an incrementally updated Cholesky factor
    of G[S, S] (with a small-pivot singularity guard), and stops when the
    residual norm drops to ``eps``
    or the support reaches ``s_max``.

    Writes the support into ``out_idx`` / ``out_val`` (selection order) and
    returns ``(n_selected, status, residual_norm)``.
    """
    m, K = D.shape

    c0 = np.empty(K)
    for j in range(K):
        acc = 0.0
        for t in range(m):
            acc += D[t, j] * y[t]
        c0[j] = acc

    ysq = 0.0
    for t in range(m):
        ysq += y[t] * y[t]
    rnorm = np.sqrt(ysq)

    if rnorm <= eps or rnorm == 0.0:
        return 0, STATUS_OK, rnorm

    corr = np.empty(K)
    L = np.zeros((s_max, s_max))
    x = np.zeros(s_max)
    tmp = np.empty(s_max)
    r = np.empty(m)
    selected = np.zeros(K, np.bool_)
    n = 0
    status = STATUS_OK

    for _step in range(s_max):
        # Correlations of unselected atoms with the current residual:
        # D^T r = c0 - G[:, S] x, accumulated row-by-row for locality.
        for j in range(K):
            corr[j] = c0[j]
        for t in range(n):
            coef = x[t]
            row = out_idx[t]
            for j in range(K):
                corr[j] -= G[row, j] * coef
        cmax = -1.0
        for j in range(K):
            if selected[j]:
                corr[j] = 0.0
                continue
            a = abs(corr[j])
            corr[j] = a
            if a > cmax:
                cmax = a
        if cmax <= 1e-13 * rnorm:
            # Residual is numerically orthogonal to every remaining atom.
            status = STATUS_STALLED
            break
        # Ties within a relative window resolve to the lowest index.
        best = -1
        thresh = cmax - _TIE_REL * cmax
        for j in range(K):
            if not selected[j] and corr[j] >= thresh:
                best = j
                break

        # Append `best` to the Cholesky factor of G[S, S]; the diagonal
        # guard acts as the singularity threshold.
        dsq = G[best, best]
        for t in range(n):
            acc = G[out_idx[t], best]
            for u in range(t):
                acc -= L[t, u] * L[n, u]
            w = acc / L[t, t]
            L[n, t] = w
            dsq -= w * w
        if dsq <= _DIAG_GUARD:
            # Selected Gram submatrix is numerically singular: keep the
            # current support and stop.
            status = STATUS_SINGULAR
            break
        L[n, n] = np.sqrt(dsq)
        out_idx[n] = best
        selected[best] = True
        n += 1

        # Least-squares coefficients on the support: L L^T x = D_S^T y.
        for t in range(n):
            acc = c0[out_idx[t]]
            for u in range(t):
                acc -= L[t, u] * tmp[u]
            tmp[t] = acc / L[t, t]
        for t in range(n - 1, -1, -1):
            acc = tmp[t]
            for u in range(t + 1, n):
                acc -= L[u, t] * x[u]
            x[t] = acc / L[t, t]

        # Explicit residual keeps the stopping rule and diagnostics honest.
        for i in range(m):
            r[i] = y[i]
        for t in range(n):
            coef = x[t]
            col = out_idx[t]
            for i in range(m):
                r[i] -= D[i, col] * coef
        rsq = 0.0
        for i in range(m):
            rsq += r[i] * r[i]
        rnorm = np.sqrt(rsq)
        if rnorm <= eps:
            break

    for t in range(n):
        out_val[t] = x[t]
    return n, status, rnorm


@njit(cache=True, nogil=True)
def omp_batch_range(D, G, Y, s_max, eps, lo, hi, idx_out, val_out, counts,
                    status_out, rnorm_out):
    """Run omp_single on columns lo..hi-1 of Y, writing per-column results."""
    m = Y.shape[0]
    y = np.empty(m)
    for i in range(lo, hi):
        for t in range(m):
            y[t] = Y[t, i]
        n, st, rn = omp_single(D, G, y, s_max, eps, idx_out[i], val_out[i])
        counts[i] = n
        status_out[i] = st
        rnorm_out[i] = rn
