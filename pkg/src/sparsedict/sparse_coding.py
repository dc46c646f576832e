"""Sparse approximation of signals over a fixed dictionary via OMP.

A dictionary is a plain (m, K) float64 array with unit-norm columns; sparse
codes are kept in compressed form (:class:`SparseVector` for one signal,
:class:`SparseCodeMatrix` for a batch). Fixed-sparsity and error-bounded
variants share one compiled kernel, so a batch result is bit-identical to
looping the single-vector call.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .exceptions import InvalidInputError

__all__ = [
    "SparseVector",
    "SparseCodeMatrix",
    "OmpDiagnostics",
    "check_dictionary",
    "omp_fixed_sparsity",
    "omp_error_bound",
    "omp_batch",
]

UNIT_NORM_TOL = 1e-9


@dataclass(frozen=True)
class SparseVector:
    """Sparse coefficient vector: sorted indices and matching values."""

    length: int
    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray   # float64

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise InvalidInputError("indices and values must be 1-D and equal length")
        if idx.size and (idx[0] < 0 or idx[-1] >= self.length):
            raise InvalidInputError("index out of range")
        if idx.size > 1 and np.any(np.diff(idx) <= 0):
            raise InvalidInputError("indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.length)
        out[self.indices] = self.values
        return out


@dataclass
class OmpDiagnostics:
    """Per-signal solver outcome."""

    residual_norm: float
    n_iterations: int
    singular_stop: bool = False
    stalled: bool = False
    cap_hit: bool = False
    selection_order: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))


class SparseCodeMatrix:
    """K x N sparse coefficient matrix stored column-compressed."""

    def __init__(self, K: int, indptr: np.ndarray, indices: np.ndarray,
                 data: np.ndarray):
        self.K = int(K)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        if self.indptr.ndim != 1 or self.indptr[0] != 0:
            raise InvalidInputError("malformed indptr")
        if self.indices.shape != self.data.shape:
            raise InvalidInputError("indices/data length mismatch")

    @property
    def N(self) -> int:
        return self.indptr.size - 1

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    @classmethod
    def from_columns(cls, K: int, columns: list[SparseVector]) -> "SparseCodeMatrix":
        indptr = np.zeros(len(columns) + 1, dtype=np.int64)
        for i, col in enumerate(columns):
            if col.length != K:
                raise InvalidInputError("column length mismatch")
            indptr[i + 1] = indptr[i] + col.nnz
        indices = np.empty(indptr[-1], dtype=np.int64)
        data = np.empty(indptr[-1])
        for i, col in enumerate(columns):
            indices[indptr[i]:indptr[i + 1]] = col.indices
            data[indptr[i]:indptr[i + 1]] = col.values
        return cls(K, indptr, indices, data)

    def column(self, i: int) -> SparseVector:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return SparseVector(self.K, self.indices[lo:hi].copy(), self.data[lo:hi].copy())

    def columns(self) -> list[SparseVector]:
        return [self.column(i) for i in range(self.N)]

    def nnz_per_column(self) -> np.ndarray:
        return np.diff(self.indptr)

    def row_usage(self) -> np.ndarray:
        """Number of columns in which each of the K rows appears."""
        return np.bincount(self.indices, minlength=self.K).astype(np.int64)

    def to_csc(self) -> sp.csc_array:
        return sp.csc_array(
            (self.data, self.indices.astype(np.int32), self.indptr),
            shape=(self.K, self.N),
        )

    def to_dense(self) -> np.ndarray:
        return self.to_csc().toarray()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SparseCodeMatrix)
            and self.K == other.K
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )


def check_dictionary(D: np.ndarray) -> np.ndarray:
    """Validate a dictionary matrix and return it as float64."""
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] < 1 or D.shape[1] < 1:
        raise InvalidInputError("dictionary must be a nonempty 2-D matrix")
    if not np.all(np.isfinite(D)):
        raise InvalidInputError("dictionary contains non-finite entries")
    norms = np.linalg.norm(D, axis=0)
    if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
        raise InvalidInputError("dictionary columns must have unit norm")
    return D


def _check_signal(y: np.ndarray, m: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != m:
        raise InvalidInputError(f"signal length {y.shape[0]} != dictionary rows {m}")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("signal contains non-finite entries")
    return y


def _pack(K: int, idx: np.ndarray, val: np.ndarray, n: int) -> SparseVector:
    order = np.argsort(idx[:n], kind="stable")
    return SparseVector(K, idx[:n][order], val[:n][order])


def _run_single(y, D, s_max, eps):
    D = np.asfortranarray(D)
    G = _kernels.gram_matrix(D)
    idx = np.zeros(s_max, dtype=np.int64)
    val = np.zeros(s_max)
    n, status, rnorm = _kernels.omp_single(D, G, y, s_max, eps, idx, val)
    diag = OmpDiagnostics(
        residual_norm=float(rnorm),
        n_iterations=int(n),
        singular_stop=status == _kernels.STATUS_SINGULAR,
        stalled=status == _kernels.STATUS_STALLED,
        selection_order=idx[:n].copy(),
    )
    return _pack(D.shape[1], idx, val, n), diag


def omp_fixed_sparsity(y, D, s, with_diagnostics: bool = False):
    """OMP with a hard sparsity budget of ``s`` atoms.

    Greedy selection by maximal |correlation|, least-squares refit on the
    support after each selection. Returns a SparseVector with at most ``s``
    nonzeros (fewer when the signal is exhausted or the support Gram turns
    singular).
    """
    D = check_dictionary(D)
    m, K = D.shape
    y = _check_signal(y, m)
    s = int(s)
    if s < 1 or s > min(m, K):
        raise InvalidInputError("sparsity must satisfy 1 <= s <= min(m, K)")
    x, diag = _run_single(y, D, s, 0.0)
    if with_diagnostics:
        return x, diag
    return x


def omp_error_bound(y, D, eps, s_max, with_diagnostics: bool = False):
    """OMP that stops once the residual Euclidean norm drops to ``eps``.

    The support never exceeds ``s_max``; hitting that cap with the residual
    still above ``eps`` is reported through diagnostics, not as an error.
    """
    D = check_dictionary(D)
    m, K = D.shape
    y = _check_signal(y, m)
    eps = float(eps)
    if eps < 0 or not np.isfinite(eps):
        raise InvalidInputError("eps must be a finite nonnegative real")
    s_max = int(s_max)
    if s_max < 1 or s_max > m:
        raise InvalidInputError("s_max must satisfy 1 <= s_max <= m")
    x, diag = _run_single(y, D, s_max, eps)
    diag.cap_hit = diag.n_iterations == s_max and diag.residual_norm > eps
    if with_diagnostics:
        return x, diag
    return x


def omp_batch(Y, D, s=None, eps=None, s_max=None, threads: int = 1,
              with_diagnostics: bool = False):
    """Column-wise OMP over a batch Y (m x N).

    Exactly one mode must be chosen: fixed sparsity (``s``) or error bound
    (``eps`` with ``s_max``). Column i of the result equals the single-vector
    call on column i; ``threads`` only splits the column range across a
    thread pool and never changes the output.
    """
    D = check_dictionary(D)
    m, K = D.shape
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] != m:
        raise InvalidInputError(f"batch must be 2-D with {m} rows")
    if not np.all(np.isfinite(Y)):
        raise InvalidInputError("batch contains non-finite entries")

    if s is not None:
        if eps is not None or s_max is not None:
            raise InvalidInputError("choose either fixed-sparsity or error-bound mode")
        cap = int(s)
        if cap < 1 or cap > min(m, K):
            raise InvalidInputError("sparsity must satisfy 1 <= s <= min(m, K)")
        eps_val = 0.0
        err_mode = False
    elif eps is not None:
        eps_val = float(eps)
        if eps_val < 0 or not np.isfinite(eps_val):
            raise InvalidInputError("eps must be a finite nonnegative real")
        cap = int(s_max) if s_max is not None else m
        if cap < 1 or cap > m:
            raise InvalidInputError("s_max must satisfy 1 <= s_max <= m")
        err_mode = True
    else:
        raise InvalidInputError("one of s or eps is required")

    N = Y.shape[1]
    Yf = np.asfortranarray(Y)
    D = np.asfortranarray(D)
    G = _kernels.gram_matrix(D)
    idx = np.zeros((N, cap), dtype=np.int64)
    val = np.zeros((N, cap))
    counts = np.zeros(N, dtype=np.int64)
    status = np.zeros(N, dtype=np.int64)
    rnorms = np.zeros(N)

    threads = max(1, int(threads))
    if N == 0:
        pass
    elif threads == 1 or N < 2 * threads:
        _kernels.omp_batch_range(D, G, Yf, cap, eps_val, 0, N,
                                 idx, val, counts, status, rnorms)
    else:
        bounds = np.linspace(0, N, threads + 1).astype(np.int64)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_kernels.omp_batch_range, D, G, Yf, cap, eps_val,
                            int(bounds[t]), int(bounds[t + 1]),
                            idx, val, counts, status, rnorms)
                for t in range(threads)
            ]
            for f in futures:
                f.result()

    indptr = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    # Row-major masking keeps entries grouped by column; lexsort then orders
    # indices within each column.
    mask = np.arange(cap) < counts[:, None]
    col_ids = np.repeat(np.arange(N, dtype=np.int64), counts)
    flat_idx = idx[mask]
    flat_val = val[mask]
    order = np.lexsort((flat_idx, col_ids))
    X = SparseCodeMatrix(K, indptr, flat_idx[order], flat_val[order])
    if not with_diagnostics:
        return X
    diags = [
        OmpDiagnostics(
            residual_norm=float(rnorms[i]),
            n_iterations=int(counts[i]),
            singular_stop=status[i] == _kernels.STATUS_SINGULAR,
            stalled=status[i] == _kernels.STATUS_STALLED,
            cap_hit=err_mode and counts[i] == cap and rnorms[i] > eps_val,
        )
        for i in range(N)
    ]
    return X, diags
