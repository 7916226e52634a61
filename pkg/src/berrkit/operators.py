"""Matrix-free linear operators and the spectral-norm estimator.

Operators expose ``apply`` / ``apply_adjoint`` plus a cached 2-norm value.
They are immutable after construction with one exception: the norm cache,
which is filled on first use (or pinned via :meth:`LinearOperator.set_opnorm`
when the exact value is known, e.g. for diagonal test problems).
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatchError, ZeroOperatorError

__all__ = [
    "NormEstimate",
    "LinearOperator",
    "DenseOperator",
    "CsrOperator",
    "DiagonalOperator",
    "ShiftedOperator",
    "GaussianPerturbedOperator",
    "HouseholderChainOperator",
    "ConjugatedOperator",
    "CountingOperator",
    "estimate_spectral_norm",
    "norm2",
    "dot",
    "axpy",
]


def _as_vector(v, n, what="vector"):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != n:
        raise DimensionMismatchError(
            f"{what} has shape {v.shape}, expected ({n},)"
        )
    return v


def norm2(v):
    """Euclidean norm (overflow-safe via the underlying BLAS nrm2)."""
    return float(np.linalg.norm(v))


def dot(u, v):
    if u.shape != v.shape:
        raise DimensionMismatchError(f"dot of shapes {u.shape} and {v.shape}")
    return float(u @ v)


def axpy(a, x, y):
    """Return a*x + y as a new vector."""
    if x.shape != y.shape:
        raise DimensionMismatchError(f"axpy of shapes {x.shape} and {y.shape}")
    return a * x + y


@dataclass(frozen=True)
class NormEstimate:
    """Result of power iteration: value <= ||A||_2, with the tolerance asked for."""

    value: float
    relative_tolerance: float
    iterations_used: int


class LinearOperator:
    """Base class. Subclasses implement _apply (and _apply_adjoint if unsymmetric)."""

    def __init__(self, rows, cols, symmetric):
        self.rows = int(rows)
        self.cols = int(cols)
        self.symmetric = bool(symmetric)
        if self.symmetric and self.rows != self.cols:
            raise DimensionMismatchError("symmetric operator must be square")
        self._opnorm_cache = None

    def _apply(self, v):
        raise NotImplementedError

    def _apply_adjoint(self, v):
        raise NotImplementedError

    def apply(self, v):
        v = _as_vector(v, self.cols)
        return self._apply(v)

    def apply_adjoint(self, v):
        v = _as_vector(v, self.rows)
        if self.symmetric:
            return self._apply(v)
        return self._apply_adjoint(v)

    def set_opnorm(self, value):
        """Pin the cached spectral norm to a known exact value."""
        value = float(value)
        if value <= 0.0:
            raise ValueError("operator norm must be positive")
        self._opnorm_cache = NormEstimate(value, 0.0, 0)
        return self

    def opnorm(self, rel_tol=1e-3, max_iter=300, seed=0):
        """Cached spectral-norm value; estimated by power iteration on first use."""
        if self._opnorm_cache is None:
            self._opnorm_cache = estimate_spectral_norm(
                self, rel_tol=rel_tol, max_iter=max_iter, seed=seed
            )
        return self._opnorm_cache.value

    @property
    def shape(self):
        return (self.rows, self.cols)

    def to_dense(self):
        """Materialize as a dense array (tests and small oracles only)."""
        cols = []
        e = np.zeros(self.cols)
        for j in range(self.cols):
            e[j] = 1.0
            cols.append(self.apply(e))
            e[j] = 0.0
        return np.stack(cols, axis=1)


def estimate_spectral_norm(op, rel_tol=1e-3, max_iter=300, seed=0):
    """Power-iteration estimate of ||A||_2.

    Iterates v <- A v for symmetric operators and v <- A^T A v otherwise. The
    per-step estimate is a Rayleigh-type quotient, so it never exceeds the true
    norm and is non-decreasing across iterations. Stops once the relative gain
    stays below rel_tol/2 for three consecutive steps, or at max_iter.

    Parameters
    ----------
    op : LinearOperator
        Nonzero operator.
    rel_tol : float
        Requested relative accuracy; the returned value is >= (1 - rel_tol)
        ||A||_2 with high probability over the Gaussian start.
    max_iter : int
        Hard cap on iterations.
    seed : int
        Seed for the Gaussian start vector.

    Returns
    -------
    NormEstimate
    """
    if not (0.0 < rel_tol < 1.0):
        raise ValueError("rel_tol must be in (0, 1)")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.cols)
    v /= norm2(v)
    est = 0.0
    flat = 0
    used = 0
    for it in range(1, max_iter + 1):
        used = it
        w = op.apply(v)
        nw = norm2(w)
        if nw == 0.0:
            raise ZeroOperatorError("power iteration produced a zero vector")
        if op.symmetric:
            new_est = nw
            v = w / nw
        else:
            z = op.apply_adjoint(w)
            nz = norm2(z)
            if nz == 0.0:
                raise ZeroOperatorError("power iteration produced a zero vector")
            new_est = np.sqrt(nz)
            v = z / nz
        if new_est - est <= 0.5 * rel_tol * new_est:
            flat += 1
            if flat >= 3:
                est = max(est, new_est)
                break
        else:
            flat = 0
        est = max(est, new_est)
    return NormEstimate(est, rel_tol, used)


class DenseOperator(LinearOperator):
    """Operator backed by a dense 2-D array."""

    def __init__(self, a, symmetric=None):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise DimensionMismatchError("dense backing must be 2-D")
        if symmetric is None:
            symmetric = a.shape[0] == a.shape[1] and np.array_equal(a, a.T)
        super().__init__(a.shape[0], a.shape[1], symmetric)
        self.a = a

    def _apply(self, v):
        return self.a @ v

    def _apply_adjoint(self, v):
        return self.a.T @ v

    def to_dense(self):
        return self.a.copy()


class CsrOperator(LinearOperator):
    """Compressed-sparse-row operator; stores the transpose layout as well."""

    def __init__(self, data, indices, indptr, shape, symmetric=False):
        rows, cols = shape
        super().__init__(rows, cols, symmetric)
        self.data = np.asarray(data, dtype=np.float64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        if self.indptr.shape[0] != rows + 1:
            raise DimensionMismatchError("indptr length must be rows + 1")
        if not symmetric:
            td, ti, tp = _csr_transpose(
                self.data, self.indices, self.indptr, rows, cols
            )
            self._tdata, self._tindices, self._tindptr = td, ti, tp

    @classmethod
    def from_coo(cls, rows_idx, cols_idx, values, shape, symmetric=False):
        """Build from triplets; duplicate entries are summed."""
        rows, cols = shape
        rows_idx = np.asarray(rows_idx, dtype=np.int64)
        cols_idx = np.asarray(cols_idx, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        order = np.lexsort((cols_idx, rows_idx))
        r, c, v = rows_idx[order], cols_idx[order], values[order]
        if r.size:
            keep = np.ones(r.size, dtype=bool)
            keep[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
            group = np.cumsum(keep) - 1
            data = np.zeros(int(group[-1]) + 1)
            np.add.at(data, group, v)
            r, c = r[keep], c[keep]
        else:
            data = v
        indptr = np.zeros(rows + 1, dtype=np.int64)
        np.add.at(indptr, r + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(data, c, indptr, shape, symmetric=symmetric)

    def _apply(self, v):
        return _kernels.csr_matvec(self.data, self.indices, self.indptr, v)

    def _apply_adjoint(self, v):
        return _kernels.csr_matvec(self._tdata, self._tindices, self._tindptr, v)

    @property
    def nnz(self):
        return int(self.data.shape[0])


def _csr_transpose(data, indices, indptr, rows, cols):
    nnz = data.shape[0]
    row_of = np.repeat(np.arange(rows, dtype=np.int64), np.diff(indptr))
    order = np.argsort(indices, kind="stable")
    tindices = row_of[order]
    tdata = data[order]
    tindptr = np.zeros(cols + 1, dtype=np.int64)
    np.add.at(tindptr, indices + 1, 1)
    tindptr = np.cumsum(tindptr)
    assert tindptr[-1] == nnz
    return tdata, tindices, tindptr


class DiagonalOperator(LinearOperator):
    """diag(d); the exact norm max|d_i| is cached on construction."""

    def __init__(self, d):
        d = np.asarray(d, dtype=np.float64)
        if d.ndim != 1:
            raise DimensionMismatchError("diagonal backing must be 1-D")
        super().__init__(d.shape[0], d.shape[0], symmetric=True)
        self.d = d
        top = float(np.max(np.abs(d))) if d.size else 0.0
        if top > 0.0:
            self.set_opnorm(top)

    def _apply(self, v):
        return self.d * v


class ShiftedOperator(LinearOperator):
    """base + shift * I, applied with exactly one extra axpy."""

    def __init__(self, base, shift):
        if base.rows != base.cols:
            raise DimensionMismatchError("shift needs a square base operator")
        super().__init__(base.rows, base.cols, base.symmetric)
        self.base = base
        self.shift = float(shift)

    def _apply(self, v):
        return self.base.apply(v) + self.shift * v

    def _apply_adjoint(self, v):
        return self.base.apply_adjoint(v) + self.shift * v


class GaussianPerturbedOperator(LinearOperator):
    """base + coeff * G for a materialized dense G."""

    def __init__(self, base, g, coeff):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != (base.rows, base.cols):
            raise DimensionMismatchError("perturbation shape must match base")
        super().__init__(base.rows, base.cols, symmetric=False)
        self.base = base
        self.g = g
        self.coeff = float(coeff)

    def _apply(self, v):
        return self.base.apply(v) + self.coeff * (self.g @ v)

    def _apply_adjoint(self, v):
        return self.base.apply_adjoint(v) + self.coeff * (self.g.T @ v)


class HouseholderChainOperator(LinearOperator):
    """Orthogonal U = H_0 H_1 ... H_{m-1}, each H_i = I - 2 v_i v_i^T.

    Reflector vectors are unit-norm rows of ``vecs``. Exactly orthogonal up to
    rounding, so the cached norm is pinned to 1.
    """

    def __init__(self, vecs):
        vecs = np.asarray(vecs, dtype=np.float64)
        if vecs.ndim != 2:
            raise DimensionMismatchError("reflector stack must be 2-D")
        n = vecs.shape[1]
        super().__init__(n, n, symmetric=False)
        self.vecs = np.ascontiguousarray(vecs)
        self.set_opnorm(1.0)

    @classmethod
    def random(cls, n, num_reflectors, seed):
        rng = np.random.default_rng(seed)
        vecs = rng.standard_normal((num_reflectors, n))
        if num_reflectors:
            vecs /= np.linalg.norm(vecs, axis=1)[:, None]
        return cls(vecs)

    def _apply(self, v):
        if self.vecs.shape[0] == 0:
            return v.copy()
        return _kernels.householder_chain(self.vecs, v, False)

    def _apply_adjoint(self, v):
        if self.vecs.shape[0] == 0:
            return v.copy()
        return _kernels.householder_chain(self.vecs, v, True)


class ConjugatedOperator(LinearOperator):
    """U A V^T for orthogonal U, V (V = U gives the symmetric conjugation)."""

    def __init__(self, u, base, v=None):
        same = v is None
        v = u if same else v
        if u.cols != base.rows or v.cols != base.cols:
            raise DimensionMismatchError("conjugation shapes do not match")
        super().__init__(u.rows, v.rows, symmetric=base.symmetric and same)
        self.u = u
        self.base = base
        self.v = v
        if base._opnorm_cache is not None and base._opnorm_cache.relative_tolerance == 0.0:
            # orthogonal conjugation preserves the spectral norm exactly
            self.set_opnorm(base._opnorm_cache.value)

    def _apply(self, w):
        return self.u.apply(self.base.apply(self.v.apply_adjoint(w)))

    def _apply_adjoint(self, w):
        return self.v.apply(self.base.apply_adjoint(self.u.apply_adjoint(w)))


class CountingOperator(LinearOperator):
    """Transparent wrapper that counts apply / apply_adjoint calls."""

    def __init__(self, base):
        super().__init__(base.rows, base.cols, base.symmetric)
        self.base = base
        self.matvecs = 0

    def _apply(self, v):
        self.matvecs += 1
        return self.base.apply(v)

    def _apply_adjoint(self, v):
        self.matvecs += 1
        return self.base.apply_adjoint(v)

    def opnorm(self, rel_tol=1e-3, max_iter=300, seed=0):
        return self.base.opnorm(rel_tol=rel_tol, max_iter=max_iter, seed=seed)

    def set_opnorm(self, value):
        self.base.set_opnorm(value)
        return self
