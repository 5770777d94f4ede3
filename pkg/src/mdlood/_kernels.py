"""Compiled numerical kernels.

Everything here is internal: plain float64 arrays in, plain arrays/scalars
out, no validation. The public wrappers in ``glasso`` and ``select`` own the
contracts. Kernels are compiled with ``nogil`` so trial-level thread pools
can overlap them.
"""

import numpy as np
from numba import njit

LOG2E = 1.4426950408889634
LOG2_TWO_PI = 2.651496129472319


@njit(cache=True, nogil=True)
def lasso_cd(w11, s12, beta, lam, tol, max_pass):
    """Cyclic coordinate descent for 0.5*b'W b - s'b + lam*|b|_1, in place."""
    p = beta.shape[0]
    g = w11 @ beta
    for it in range(max_pass):
        delta_max = 0.0
        for k in range(p):
            wkk = w11[k, k]
            if wkk <= 0.0:
                continue
            bk = beta[k]
            z = s12[k] - g[k] + wkk * bk
            if z > lam:
                bn = (z - lam) / wkk
            elif z < -lam:
                bn = (z + lam) / wkk
            else:
                bn = 0.0
            diff = bn - bk
            if diff != 0.0:
                beta[k] = bn
                for a in range(p):
                    g[a] += w11[a, k] * diff
                ad = abs(diff)
                if ad > delta_max:
                    delta_max = ad
        if delta_max <= tol:
            return it + 1
    return max_pass


@njit(cache=True, nogil=True)
def glasso_solve(S, lam, tol, max_sweeps, zero_tol):
    """Block coordinate descent for the l1-penalized precision problem.

    Off-diagonal penalty only; the working covariance keeps W_ii = S_ii.
    Stops when the stationarity residual drops below ``tol``. Returns
    (W, Omega, sweeps, residual, converged).
    """
    d = S.shape[0]
    W = S.copy()
    for i in range(d):
        for j in range(d):
            if i != j:
                W[i, j] *= 0.95
    B = np.zeros((d, d))
    Omega = np.zeros((d, d))
    w11 = np.empty((d - 1, d - 1))
    s12 = np.empty(d - 1)
    beta = np.empty(d - 1)
    kkt = np.inf
    sweeps = 0
    for sweep in range(max_sweeps):
        sweeps = sweep + 1
        for j in range(d):
            r = 0
            for a in range(d):
                if a == j:
                    continue
                s12[r] = S[a, j]
                beta[r] = B[a, j]
                c = 0
                for b in range(d):
                    if b == j:
                        continue
                    w11[r, c] = W[a, b]
                    c += 1
                r += 1
            lasso_cd(w11, s12, beta, lam, 1e-10, 1000)
            r = 0
            for a in range(d):
                if a == j:
                    continue
                acc = 0.0
                for c in range(d - 1):
                    acc += w11[r, c] * beta[c]
                W[a, j] = acc
                W[j, a] = acc
                B[a, j] = beta[r]
                r += 1
            # W[j,j] stays S[j,j]: the penalty skips the diagonal
        # recover the precision from the per-column coefficients
        pd_ok = True
        for j in range(d):
            dot = 0.0
            for a in range(d):
                if a != j:
                    dot += W[a, j] * B[a, j]
            denom = W[j, j] - dot
            if denom <= 0.0:
                pd_ok = False
                break
            ojj = 1.0 / denom
            Omega[j, j] = ojj
            for a in range(d):
                if a != j:
                    Omega[a, j] = -B[a, j] * ojj
        if not pd_ok:
            continue
        for i in range(d):
            for j in range(i + 1, d):
                v = 0.5 * (Omega[i, j] + Omega[j, i])
                if abs(v) < zero_tol:
                    v = 0.0
                Omega[i, j] = v
                Omega[j, i] = v
        kkt = 0.0
        for i in range(d):
            r0 = abs(S[i, i] - W[i, i])
            if r0 > kkt:
                kkt = r0
            for j in range(i + 1, d):
                o = Omega[i, j]
                diff = S[i, j] - W[i, j]
                if o != 0.0:
                    sgn = 1.0 if o > 0.0 else -1.0
                    r1 = abs(diff + lam * sgn)
                else:
                    r1 = abs(diff) - lam
                    if r1 < 0.0:
                        r1 = 0.0
                if r1 > kkt:
                    kkt = r1
        if kkt <= tol:
            return W, Omega, sweeps, kkt, True
    return W, Omega, sweeps, kkt, kkt <= tol


@njit(cache=True, nogil=True)
def chol_lower(A, L):
    """In-place lower Cholesky of A into L; False on a non-positive pivot."""
    n = A.shape[0]
    for i in range(n):
        for j in range(i + 1):
            acc = A[i, j]
            for k in range(j):
                acc -= L[i, k] * L[j, k]
            if i == j:
                if acc <= 0.0:
                    return False
                L[i, i] = np.sqrt(acc)
            else:
                L[i, j] = acc / L[j, j]
        for j in range(i + 1, n):
            L[i, j] = 0.0
    return True


@njit(cache=True, nogil=True)
def spd_solve_small(A, b, out):
    """Solve A @ out = b for small SPD A; False if A is not PD."""
    n = A.shape[0]
    L = np.empty((n, n))
    if not chol_lower(A, L):
        return False
    # forward then backward substitution
    for i in range(n):
        acc = b[i]
        for k in range(i):
            acc -= L[i, k] * out[k]
        out[i] = acc / L[i, i]
    for i in range(n - 1, -1, -1):
        acc = out[i]
        for k in range(i + 1, n):
            acc -= L[k, i] * out[k]
        out[i] = acc / L[i, i]
    return True


@njit(cache=True, nogil=True)
def ggm_sweep(W, S, adj):
    """One column sweep of the graph-constrained covariance fit, in place.

    For each vertex the working covariance column is replaced by the
    regression prediction from its neighbors, which pins W to S exactly on
    edges and keeps the recovered precision zero off the pattern. Returns
    the largest entry change.
    """
    d = W.shape[0]
    delta = 0.0
    nb = np.empty(d, dtype=np.int64)
    for j in range(d):
        k = 0
        for a in range(d):
            if adj[j, a] and a != j:
                nb[k] = a
                k += 1
        if k == 0:
            for a in range(d):
                if a != j and W[a, j] != 0.0:
                    ch = abs(W[a, j])
                    if ch > delta:
                        delta = ch
                    W[a, j] = 0.0
                    W[j, a] = 0.0
            continue
        wnn = np.empty((k, k))
        snj = np.empty(k)
        beta = np.empty(k)
        for a in range(k):
            snj[a] = S[nb[a], j]
            for b in range(k):
                wnn[a, b] = W[nb[a], nb[b]]
        if not spd_solve_small(wnn, snj, beta):
            return np.inf
        for a in range(d):
            if a == j:
                continue
            acc = 0.0
            for b in range(k):
                acc += W[a, nb[b]] * beta[b]
            ch = abs(acc - W[a, j])
            if ch > delta:
                delta = ch
            W[a, j] = acc
            W[j, a] = acc
    return delta


@njit(cache=True, nogil=True)
def ggm_fit(W, S, adj, tol, max_sweeps):
    """Sweep until the working covariance stops moving. Returns
    (sweeps, last_delta); delta is +inf on numerical breakdown."""
    delta = np.inf
    sweeps = 0
    for sweep in range(max_sweeps):
        sweeps = sweep + 1
        delta = ggm_sweep(W, S, adj)
        if not np.isfinite(delta):
            return sweeps, delta
        if delta <= tol:
            break
    return sweeps, delta


@njit(cache=True, nogil=True)
def prefix_stats(X, warmup, eig_rtol):
    """Running zero-mean covariances with positive-definiteness flags.

    S_all[t] is the covariance of rows 0..t. Flags and log2-determinants are
    only evaluated from the first usable prefix (length >= warmup) on.
    """
    M, d = X.shape
    S_all = np.empty((M, d, d))
    pd = np.zeros(M, dtype=np.bool_)
    log2det = np.zeros(M)
    S = np.zeros((d, d))
    for t in range(M):
        x = X[t]
        wt = t / (t + 1.0)
        for a in range(d):
            xa = x[a] / (t + 1.0)
            for b in range(d):
                S[a, b] = S[a, b] * wt + xa * x[b]
        for a in range(d):
            for b in range(d):
                S_all[t, a, b] = S[a, b]
        if t + 1 >= warmup:
            eigs = np.linalg.eigvalsh(S)
            if eigs[0] > eig_rtol * max(eigs[d - 1], 0.0):
                pd[t] = True
                acc = 0.0
                for a in range(d):
                    acc += np.log2(eigs[a])
                log2det[t] = acc
    return S_all, pd, log2det


@njit(cache=True, nogil=True)
def _default_bits(x, prec0, log2det0, mean0):
    d = x.shape[0]
    q = 0.0
    for a in range(d):
        xa = x[a] - mean0[a]
        for b in range(d):
            q += xa * prec0[a, b] * (x[b] - mean0[b])
    return 0.5 * d * LOG2_TWO_PI + 0.5 * log2det0 + 0.5 * LOG2E * q


@njit(cache=True, nogil=True)
def _chol_bits(x, L, log2det):
    """Codelength of one sample under N(0, A) given L = chol(A)."""
    d = x.shape[0]
    z = np.empty(d)
    for i in range(d):
        acc = x[i]
        for k in range(i):
            acc -= L[i, k] * z[k]
        z[i] = acc / L[i, i]
    q = 0.0
    for i in range(d):
        q += z[i] * z[i]
    return 0.5 * d * LOG2_TWO_PI + 0.5 * log2det + 0.5 * LOG2E * q


@njit(cache=True, nogil=True)
def predictive_pass(X, S_all, pd, log2det_s, adj, complete,
                    prec0, log2det0, mean0, warmup, tol, max_sweeps):
    """Per-sample plug-in codelengths for one conditional-independence graph.

    Sample t+1 is coded under the zero-mean Gaussian whose covariance is the
    graph-constrained completion of the first t samples' covariance, warm
    started from the previous prefix. Samples up to ``warmup`` and samples
    whose prefix covariance is not positive-definite use the default model.
    """
    M, d = X.shape
    bits = np.empty(M)
    W = np.zeros((d, d))
    L = np.empty((d, d))
    log2det_w = 0.0
    have_model = False
    for t in range(M):
        if t < warmup or not have_model:
            bits[t] = _default_bits(X[t], prec0, log2det0, mean0)
        else:
            bits[t] = _chol_bits(X[t], L, log2det_w)
        if t + 1 >= warmup and t + 1 < M:
            if not pd[t]:
                have_model = False
                continue
            S = S_all[t]
            if complete:
                for a in range(d):
                    for b in range(d):
                        W[a, b] = S[a, b]
                log2det_w = log2det_s[t]
                if not chol_lower(W, L):
                    have_model = False
                    continue
            else:
                if not have_model:
                    for a in range(d):
                        for b in range(d):
                            W[a, b] = S[a, b]
                else:
                    # constrained entries track the new prefix exactly;
                    # free entries keep their warm-started values
                    for a in range(d):
                        W[a, a] = S[a, a]
                sweeps, delta = ggm_fit(W, S, adj, tol, max_sweeps)
                if not np.isfinite(delta):
                    have_model = False
                    continue
                if not chol_lower(W, L):
                    have_model = False
                    continue
                log2det_w = 0.0
                for a in range(d):
                    log2det_w += 2.0 * np.log2(L[a, a])
            have_model = True
    return bits
