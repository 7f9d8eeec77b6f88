"""Compiled inner loops for pairwise gauges over a time grid.

Every kernel works on index ranges ``[lo, hi]`` (inclusive) and returns
cumulative arrays indexed by the right endpoint, so that ``out[j - lo]`` is
the gauge of the sub-range ``[lo, j]``.  Greedy stopping times rely on this.

Floating-point order is fixed and shared with the pure-numpy helpers in
:mod:`roughkit.rough_core`: areas are accumulated left to right as
``X <- X + (block + x_{i,k} (x) x_{k,k+1})`` and norms sum squares
sequentially.  Do not reorder these expressions.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _vec_dist(v, i, j):
    s = 0.0
    for a in range(v.shape[1]):
        e = v[j, a] - v[i, a]
        s += e * e
    return np.sqrt(s)


@njit(cache=True)
def area_row(values, blocks, i, hi, out):
    """Fill ``out[r] = ||X_{i,i+r+1}||`` for ``r = 0..hi-i-1``."""
    m = values.shape[1]
    acc = np.zeros((m, m))
    for k in range(i, hi):
        s = 0.0
        for a in range(m):
            xa = values[k, a] - values[i, a]
            for b in range(m):
                acc[a, b] = acc[a, b] + (blocks[k, a, b] + xa * (values[k + 1, b] - values[k, b]))
                s += acc[a, b] * acc[a, b]
        out[k - i] = np.sqrt(s)


@njit(cache=True)
def remainder_row(y, yp, x, i, hi, out):
    """``out[k - i - 1] = ||y_{i,k} - y'_i x_{i,k}||`` for ``k = i+1..hi``."""
    K = y.shape[1]
    m = x.shape[1]
    for k in range(i + 1, hi + 1):
        s = 0.0
        for a in range(K):
            lin = 0.0
            for b in range(m):
                lin += yp[i, a, b] * (x[k, b] - x[i, b])
            e = (y[k, a] - y[i, a]) - lin
            s += e * e
        out[k - i - 1] = np.sqrt(s)


@njit(cache=True)
def _path_row(v, i, hi, out):
    for k in range(i + 1, hi + 1):
        out[k - i - 1] = _vec_dist(v, i, k)


@njit(cache=True)
def _dp_push(V, i, lo, row, length, expo):
    base = V[i - lo]
    for r in range(length):
        cand = base + row[r] ** expo
        if cand > V[i - lo + 1 + r]:
            V[i - lo + 1 + r] = cand


@njit(cache=True)
def path_dp(v, lo, hi, p):
    """Cumulative ``sup_partitions sum ||v_{t_k, t_{k+1}}||^p`` over ``[lo, j]``."""
    L = hi - lo
    V = np.zeros(L + 1)
    row = np.empty(L)
    for i in range(lo, hi):
        _path_row(v, i, hi, row)
        _dp_push(V, i, lo, row, hi - i, p)
    return V


@njit(cache=True)
def area_dp(values, blocks, lo, hi, q):
    L = hi - lo
    V = np.zeros(L + 1)
    row = np.empty(L)
    for i in range(lo, hi):
        area_row(values, blocks, i, hi, row)
        _dp_push(V, i, lo, row, hi - i, q)
    return V


@njit(cache=True)
def remainder_dp(y, yp, x, lo, hi, q):
    L = hi - lo
    V = np.zeros(L + 1)
    row = np.empty(L)
    for i in range(lo, hi):
        remainder_row(y, yp, x, i, hi, row)
        _dp_push(V, i, lo, row, hi - i, q)
    return V


@njit(cache=True)
def _cum_holder(t, lo, hi, expo, rows_kind, v, blocks, y, yp, x):
    L = hi - lo
    colmax = np.zeros(L + 1)
    row = np.empty(L)
    for i in range(lo, hi):
        if rows_kind == 0:
            _path_row(v, i, hi, row)
        elif rows_kind == 1:
            area_row(v, blocks, i, hi, row)
        else:
            remainder_row(y, yp, x, i, hi, row)
        for r in range(hi - i):
            k = i + 1 + r
            val = row[r] / (t[k] - t[i]) ** expo
            if val > colmax[k - lo]:
                colmax[k - lo] = val
    for j in range(1, L + 1):
        if colmax[j - 1] > colmax[j]:
            colmax[j] = colmax[j - 1]
    return colmax


_EMPTY3 = np.zeros((1, 1, 1))
_EMPTY2 = np.zeros((1, 1))


def path_holder(t, v, lo, hi, alpha):
    return _cum_holder(t, lo, hi, alpha, 0, v, _EMPTY3, _EMPTY2, _EMPTY3, _EMPTY2)


def area_holder(t, values, blocks, lo, hi, expo):
    return _cum_holder(t, lo, hi, expo, 1, values, blocks, _EMPTY2, _EMPTY3, _EMPTY2)


def remainder_holder(t, y, yp, x, lo, hi, expo):
    return _cum_holder(t, lo, hi, expo, 2, _EMPTY2, _EMPTY3, y, yp, x)


@njit(cache=True)
def path_weights(v, lo, hi, p):
    """Dense ``W[i, j] = ||v_{i,j}||^p`` (upper triangle) for oracle checks."""
    L = hi - lo
    W = np.zeros((L + 1, L + 1))
    row = np.empty(L)
    for i in range(lo, hi):
        _path_row(v, i, hi, row)
        for r in range(hi - i):
            W[i - lo, i - lo + 1 + r] = row[r] ** p
    return W


@njit(cache=True)
def area_weights(values, blocks, lo, hi, q):
    L = hi - lo
    W = np.zeros((L + 1, L + 1))
    row = np.empty(L)
    for i in range(lo, hi):
        area_row(values, blocks, i, hi, row)
        for r in range(hi - i):
            W[i - lo, i - lo + 1 + r] = row[r] ** q
    return W


@njit(cache=True)
def chen_residual(T, x):
    """Max Frobenius Chen defect over all index triples ``i <= k <= j``."""
    n1 = T.shape[0]
    m = x.shape[1]
    best = 0.0
    d = np.empty(m)
    for i in range(n1):
        for k in range(i, n1):
            for a in range(m):
                d[a] = x[k, a] - x[i, a]
            for j in range(k, n1):
                s = 0.0
                for a in range(m):
                    for b in range(m):
                        e = T[i, j, a, b] - T[i, k, a, b] - T[k, j, a, b] - d[a] * (x[j, b] - x[k, b])
                        s += e * e
                if s > best:
                    best = s
    return np.sqrt(best)
