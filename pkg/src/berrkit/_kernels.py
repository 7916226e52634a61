"""Hot numeric kernels: numba-jitted with pure-numpy fallbacks.

Set ``BERRKIT_PURE_NUMPY=1`` before import to force the numpy path (also used
when numba is not importable). ``benchmarks/bench_kernels.py`` compares both.

All kernels take and return float64 arrays. Band arrays follow the upper
triangular layout used by the factorization views: ``diag[i]`` is entry (i, i),
``sup1[i]`` is (i, i+1) for i < k-1, ``sup2[i]`` is (i, i+2) for i < k-2.
Callers are responsible for rejecting zero diagonals before solving.
"""

import os

import numpy as np

__all__ = [
    "USING_NUMBA",
    "csr_matvec",
    "householder_chain",
    "band_solve_upper",
    "band_solve_upper_t",
    "IMPLEMENTATIONS",
]


def _csr_matvec_np(data, indices, indptr, x):
    out = np.zeros(indptr.shape[0] - 1)
    if data.shape[0] == 0:
        return out
    prod = data * x[indices]
    lengths = np.diff(indptr)
    nonempty = lengths > 0
    # reduceat over the starts of nonempty rows; empty rows contribute nothing
    # to the segments between consecutive nonempty starts.
    out[nonempty] = np.add.reduceat(prod, indptr[:-1][nonempty])
    return out


def _householder_chain_np(vecs, x, ascending):
    y = x.copy()
    m = vecs.shape[0]
    order = range(m) if ascending else range(m - 1, -1, -1)
    for i in order:
        v = vecs[i]
        y -= (2.0 * (v @ y)) * v
    return y


def _band_solve_upper_np(diag, sup1, sup2, rhs):
    k = diag.shape[0]
    x = np.empty(k)
    for i in range(k - 1, -1, -1):
        acc = rhs[i]
        if i + 1 < k:
            acc -= sup1[i] * x[i + 1]
        if i + 2 < k:
            acc -= sup2[i] * x[i + 2]
        x[i] = acc / diag[i]
    return x


def _band_solve_upper_t_np(diag, sup1, sup2, rhs):
    k = diag.shape[0]
    x = np.empty(k)
    for i in range(k):
        acc = rhs[i]
        if i >= 1:
            acc -= sup1[i - 1] * x[i - 1]
        if i >= 2:
            acc -= sup2[i - 2] * x[i - 2]
        x[i] = acc / diag[i]
    return x


_FORCE_NUMPY = os.environ.get("BERRKIT_PURE_NUMPY", "") == "1"
USING_NUMBA = False

_csr_matvec_nb = None
_householder_chain_nb = None
_band_solve_upper_nb = None
_band_solve_upper_t_nb = None

if not _FORCE_NUMPY:
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:
        USING_NUMBA = False

if USING_NUMBA:

    @njit(cache=True)
    def _csr_matvec_nb(data, indices, indptr, x):
        n = indptr.shape[0] - 1
        out = np.zeros(n)
        for i in range(n):
            acc = 0.0
            for j in range(indptr[i], indptr[i + 1]):
                acc += data[j] * x[indices[j]]
            out[i] = acc
        return out

    @njit(cache=True)
    def _householder_chain_nb(vecs, x, ascending):
        m, n = vecs.shape
        y = x.copy()
        if ascending:
            start, stop, step = 0, m, 1
        else:
            start, stop, step = m - 1, -1, -1
        for i in range(start, stop, step):
            dot = 0.0
            for j in range(n):
                dot += vecs[i, j] * y[j]
            dot *= 2.0
            for j in range(n):
                y[j] -= dot * vecs[i, j]
        return y

    @njit(cache=True)
    def _band_solve_upper_nb(diag, sup1, sup2, rhs):
        k = diag.shape[0]
        x = np.empty(k)
        for i in range(k - 1, -1, -1):
            acc = rhs[i]
            if i + 1 < k:
                acc -= sup1[i] * x[i + 1]
            if i + 2 < k:
                acc -= sup2[i] * x[i + 2]
            x[i] = acc / diag[i]
        return x

    @njit(cache=True)
    def _band_solve_upper_t_nb(diag, sup1, sup2, rhs):
        k = diag.shape[0]
        x = np.empty(k)
        for i in range(k):
            acc = rhs[i]
            if i >= 1:
                acc -= sup1[i - 1] * x[i - 1]
            if i >= 2:
                acc -= sup2[i - 2] * x[i - 2]
            x[i] = acc / diag[i]
        return x

    csr_matvec = _csr_matvec_nb
    householder_chain = _householder_chain_nb
    band_solve_upper = _band_solve_upper_nb
    band_solve_upper_t = _band_solve_upper_t_nb
else:
    csr_matvec = _csr_matvec_np
    householder_chain = _householder_chain_np
    band_solve_upper = _band_solve_upper_np
    band_solve_upper_t = _band_solve_upper_t_np

# name -> (numpy impl, numba impl or None); used by tests and the benchmark
IMPLEMENTATIONS = {
    "csr_matvec": (_csr_matvec_np, _csr_matvec_nb),
    "householder_chain": (_householder_chain_np, _householder_chain_nb),
    "band_solve_upper": (_band_solve_upper_np, _band_solve_upper_nb),
    "band_solve_upper_t": (_band_solve_upper_t_np, _band_solve_upper_t_nb),
}
