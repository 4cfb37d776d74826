"""Compiled dense complex kernels.

Everything here works on ``complex128`` arrays and is compiled with
``nogil=True`` so trial-level thread pools actually run in parallel.
The public wrappers with argument checking live in :mod:`haarlab.linalg`.
"""

import math

import numba as nb
import numpy as np

_JIT = dict(nogil=True, cache=True)


@nb.njit(**_JIT)
def householder_qr(A):
    """Thin Householder QR with a real non-negative diagonal in ``R``."""
    m, n = A.shape
    R = A.copy()
    V = np.zeros((n, m), dtype=np.complex128)
    beta = np.zeros(n)
    for k in range(n):
        norm2 = 0.0
        for i in range(k, m):
            norm2 += R[i, k].real ** 2 + R[i, k].imag ** 2
        norm = math.sqrt(norm2)
        if norm == 0.0:
            continue
        x0 = R[k, k]
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0.0 else 1.0 + 0.0j
        alpha = -phase * norm
        for i in range(k, m):
            V[k, i] = R[i, k]
        V[k, k] -= alpha
        vnorm2 = 0.0
        for i in range(k, m):
            vnorm2 += V[k, i].real ** 2 + V[k, i].imag ** 2
        if vnorm2 == 0.0:
            continue
        beta[k] = 2.0 / vnorm2
        for j in range(k, n):
            s = 0.0j
            for i in range(k, m):
                s += V[k, i].conjugate() * R[i, j]
            s *= beta[k]
            for i in range(k, m):
                R[i, j] -= s * V[k, i]
        for i in range(k + 1, m):
            R[i, k] = 0.0j
    Q = np.zeros((m, n), dtype=np.complex128)
    for j in range(n):
        Q[j, j] = 1.0
    for k in range(n - 1, -1, -1):
        if beta[k] == 0.0:
            continue
        for j in range(n):
            s = 0.0j
            for i in range(k, m):
                s += V[k, i].conjugate() * Q[i, j]
            s *= beta[k]
            for i in range(k, m):
                Q[i, j] -= s * V[k, i]
    # absorb diagonal phases so that diag(R) >= 0
    for k in range(n):
        r = R[k, k]
        ar = abs(r)
        if ar == 0.0:
            continue
        ph = r / ar
        cph = ph.conjugate()
        for j in range(k, n):
            R[k, j] *= cph
        R[k, k] = ar
        for i in range(m):
            Q[i, k] *= ph
    return Q, R


@nb.njit(**_JIT)
def jacobi_svd(A, want_vectors, tol, max_sweeps):
    """One-sided (Hestenes) Jacobi on the columns of a tall matrix.

    Returns ``(G, sigma, V, sweeps, converged)`` where the columns of ``G``
    are ``sigma_j * u_j`` in the original column order.
    """
    m, n = A.shape
    # rows of G are the columns of A, kept contiguous
    G = np.ascontiguousarray(A.T).copy()
    V = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        V[j, j] = 1.0
    fro2 = 0.0
    for j in range(n):
        for i in range(m):
            fro2 += G[j, i].real ** 2 + G[j, i].imag ** 2
    # columns this small are rounding noise; rotating them never settles
    floor = (n * 2.220446049250313e-16) ** 2 * fro2
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0j
                for i in range(m):
                    gp = G[p, i]
                    gq = G[q, i]
                    alpha += gp.real * gp.real + gp.imag * gp.imag
                    beta += gq.real * gq.real + gq.imag * gq.imag
                    gamma += gp.conjugate() * gq
                ag = abs(gamma)
                if ag == 0.0 or ag <= tol * math.sqrt(alpha * beta) or min(alpha, beta) <= floor:
                    continue
                rotated = True
                e = gamma / ag
                ec = e.conjugate()
                zeta = (beta - alpha) / (2.0 * ag)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + math.sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                for i in range(m):
                    gp = G[p, i]
                    gq = ec * G[q, i]
                    G[p, i] = c * gp - s * gq
                    G[q, i] = s * gp + c * gq
                if want_vectors:
                    for i in range(n):
                        vp = V[i, p]
                        vq = ec * V[i, q]
                        V[i, p] = c * vp - s * vq
                        V[i, q] = s * vp + c * vq
        if not rotated:
            converged = True
            break
    sigma = np.zeros(n)
    for j in range(n):
        acc = 0.0
        for i in range(m):
            acc += G[j, i].real ** 2 + G[j, i].imag ** 2
        sigma[j] = math.sqrt(acc)
    return G.T.copy(), sigma, V, sweeps, converged


@nb.njit(**_JIT)
def balance(A):
    """Parlett-Reinsch diagonal similarity scaling by powers of two."""
    H = A.copy()
    n = H.shape[0]
    radix = 2.0
    sqrdx = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            c = 0.0
            r = 0.0
            for j in range(n):
                if j != i:
                    c += abs(H[j, i])
                    r += abs(H[i, j])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                g = 1.0 / f
                for j in range(n):
                    H[i, j] *= g
                for j in range(n):
                    H[j, i] *= f
    return H


@nb.njit(**_JIT)
def hessenberg(A):
    """Householder reduction to upper Hessenberg form (similarity)."""
    H = A.copy()
    n = H.shape[0]
    v = np.zeros(n, dtype=np.complex128)
    for k in range(n - 2):
        norm2 = 0.0
        for i in range(k + 1, n):
            norm2 += H[i, k].real ** 2 + H[i, k].imag ** 2
        if norm2 == 0.0:
            continue
        norm = math.sqrt(norm2)
        x0 = H[k + 1, k]
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0.0 else 1.0 + 0.0j
        alpha = -phase * norm
        vnorm2 = 0.0
        for i in range(k + 1, n):
            v[i] = H[i, k]
        v[k + 1] -= alpha
        for i in range(k + 1, n):
            vnorm2 += v[i].real ** 2 + v[i].imag ** 2
        if vnorm2 == 0.0:
            continue
        b = 2.0 / vnorm2
        # H <- P H
        for j in range(k, n):
            s = 0.0j
            for i in range(k + 1, n):
                s += v[i].conjugate() * H[i, j]
            s *= b
            for i in range(k + 1, n):
                H[i, j] -= s * v[i]
        # H <- H P
        for i in range(n):
            s = 0.0j
            for j in range(k + 1, n):
                s += H[i, j] * v[j]
            s *= b
            for j in range(k + 1, n):
                H[i, j] -= s * v[j].conjugate()
        H[k + 1, k] = alpha
        for i in range(k + 2, n):
            H[i, k] = 0.0j
    return H


@nb.njit(**_JIT)
def hessenberg_qr_eigenvalues(H, deflation_tol, max_iter):
    """Single-shift complex QR on a Hessenberg matrix.

    Returns ``(eigs, found, converged)``; on failure ``eigs[hi+1:]`` holds the
    eigenvalues deflated so far and ``found`` their count.
    """
    H = H.copy()
    n = H.shape[0]
    eigs = np.zeros(n, dtype=np.complex128)
    cs = np.zeros(n)
    sn = np.zeros(n, dtype=np.complex128)
    hnorm = 0.0
    for i in range(n):
        for j in range(n):
            hnorm = max(hnorm, abs(H[i, j]))
    hi = n - 1
    its = 0
    total = 0
    while hi >= 0:
        lo = 0
        for k in range(hi, 0, -1):
            scale = abs(H[k - 1, k - 1]) + abs(H[k, k])
            if scale == 0.0:
                scale = hnorm
            if abs(H[k, k - 1]) <= deflation_tol * scale:
                H[k, k - 1] = 0.0j
                lo = k
                break
        if lo == hi:
            eigs[hi] = H[hi, hi]
            hi -= 1
            its = 0
            continue
        if total >= max_iter:
            return eigs, n - 1 - hi, False
        a = H[hi - 1, hi - 1]
        b = H[hi - 1, hi]
        c = H[hi, hi - 1]
        d = H[hi, hi]
        if its == 10 or its == 20:
            mu = d + 0.75 * abs(c.real)
        else:
            half = 0.5 * (a - d)
            disc = np.sqrt(half * half + b * c)
            m1 = d - b * c / (half + disc) if abs(half + disc) > 0.0 else d
            m2 = d - b * c / (half - disc) if abs(half - disc) > 0.0 else d
            mu = m1 if abs(m1 - d) <= abs(m2 - d) else m2
        for k in range(lo, hi + 1):
            H[k, k] -= mu
        for k in range(lo, hi):
            x = H[k, k]
            y = H[k + 1, k]
            ax = abs(x)
            ay = abs(y)
            r = math.hypot(ax, ay)
            if r == 0.0:
                cs[k] = 1.0
                sn[k] = 0.0j
                continue
            if ax == 0.0:
                cc = 0.0
                ss = y.conjugate() / ay
            else:
                cc = ax / r
                ss = x * y.conjugate() / (ax * r)
            cs[k] = cc
            sn[k] = ss
            for j in range(k, hi + 1):
                t1 = H[k, j]
                t2 = H[k + 1, j]
                H[k, j] = cc * t1 + ss * t2
                H[k + 1, j] = -ss.conjugate() * t1 + cc * t2
        for k in range(lo, hi):
            cc = cs[k]
            ss = sn[k]
            for i in range(lo, k + 2):
                t1 = H[i, k]
                t2 = H[i, k + 1]
                H[i, k] = cc * t1 + ss.conjugate() * t2
                H[i, k + 1] = -ss * t1 + cc * t2
        for k in range(lo, hi + 1):
            H[k, k] += mu
        its += 1
        total += 1
    return eigs, n, True


@nb.njit(**_JIT)
def lu_factor(A):
    """Partial-pivoting LU, in place on a copy. Returns (LU, perm, sign)."""
    LU = A.copy()
    n = LU.shape[0]
    perm = np.arange(n)
    sign = 1.0
    for k in range(n):
        p = k
        best = abs(LU[k, k])
        for i in range(k + 1, n):
            v = abs(LU[i, k])
            if v > best:
                best = v
                p = i
        if p != k:
            for j in range(n):
                tmp = LU[k, j]
                LU[k, j] = LU[p, j]
                LU[p, j] = tmp
            tmpi = perm[k]
            perm[k] = perm[p]
            perm[p] = tmpi
            sign = -sign
        piv = LU[k, k]
        if piv == 0.0:
            continue
        for i in range(k + 1, n):
            f = LU[i, k] / piv
            LU[i, k] = f
            for j in range(k + 1, n):
                LU[i, j] -= f * LU[k, j]
    return LU, perm, sign


@nb.njit(**_JIT)
def lu_solve(LU, perm, b):
    n = LU.shape[0]
    x = np.empty(n, dtype=np.complex128)
    for i in range(n):
        x[i] = b[perm[i]]
    for i in range(n):
        s = x[i]
        for j in range(i):
            s -= LU[i, j] * x[j]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for j in range(i + 1, n):
            s -= LU[i, j] * x[j]
        x[i] = s / LU[i, i]
    return x
