"""Index-selective eigenvalues of symmetric tridiagonal matrices by Sturm bisection."""
from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def sturm_count(d, e2, x):
    """Number of eigenvalues strictly below x.

    ``d`` is the diagonal, ``e2`` the squared off-diagonal (length n-1).
    """
    n = d.size
    # LAPACK-style minimum pivot keeps e2/q finite
    pivmin = 2.2250738585072014e-308 * max(1.0, np.max(e2)) if n > 1 else 2.2250738585072014e-308
    count = 0
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0:
        count += 1
    for i in range(1, n):
        q = d[i] - x - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
    return count


@numba.njit(cache=True)
def _bisect_index(d, e2, k, lo, hi, tol):
    # invariant: count(lo) <= k < count(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * max(1.0, abs(mid)) or mid == lo or mid == hi:
            break
        if sturm_count(d, e2, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@numba.njit(cache=True)
def tridiag_eigvals(d, e, indices, tol=1e-15):
    """Eigenvalues number ``indices`` (0-based, ascending) of tridiag(e, d, e)."""
    n = d.size
    e2 = e * e
    lo = np.inf
    hi = -np.inf
    for i in range(n):
        r = 0.0
        if i > 0:
            r += abs(e[i - 1])
        if i < n - 1:
            r += abs(e[i])
        lo = min(lo, d[i] - r)
        hi = max(hi, d[i] + r)
    pad = 1e-12 * max(abs(lo), abs(hi), 1.0)
    lo -= pad
    hi += pad
    out = np.empty(indices.size)
    for j in range(indices.size):
        out[j] = _bisect_index(d, e2, indices[j], lo, hi, tol)
    return out


@numba.njit(cache=True)
def _thomas(a, b, c, r):
    # solves tridiag(a, b, c) x = r; a[0] and c[-1] unused
    n = b.size
    cp = np.empty(n)
    dp = np.empty(n)
    piv = b[0]
    if piv == 0.0:
        piv = 1e-300
    cp[0] = c[0] / piv
    dp[0] = r[0] / piv
    for i in range(1, n):
        piv = b[i] - a[i] * cp[i - 1]
        if piv == 0.0:
            piv = 1e-300
        cp[i] = c[i] / piv
        dp[i] = (r[i] - a[i] * dp[i - 1]) / piv
    x = np.empty(n)
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def tridiag_eigvec(d, e, lam, iters=3):
    """Unit eigenvector for eigenvalue ``lam`` by shifted inverse iteration."""
    n = d.size
    shift = lam + 1e-13 * max(1.0, abs(lam))
    a = np.concatenate([[0.0], e])
    c = np.concatenate([e, [0.0]])
    x = np.ones(n) / np.sqrt(n)
    x[::2] *= -1.0  # avoid being orthogonal to the wanted vector by symmetry
    x += np.linspace(0.0, 1.0, n)
    for _ in range(iters):
        x = _thomas(a, d - shift, c, x)
        x /= np.linalg.norm(x)
    return x
