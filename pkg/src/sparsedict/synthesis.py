"""Ground-truth generators and sparse-model predicates.

Randomness comes from NumPy's PCG64 via ``np.random.default_rng(seed)``;
independent streams for subtasks are derived with ``SeedSequence.spawn`` so
every generated artifact is reproducible from one 64-bit seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError
from .sparse_coding import SparseCodeMatrix, SparseVector

__all__ = [
    "SyntheticSpec",
    "gen_dictionary",
    "gen_signals",
    "sparse_model_check",
    "composition_bound_check",
]


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic recovery experiment.

    Coefficients on each support are i.i.d. standard normal.
    """

    m: int
    K: int
    N: int
    s: int
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.s <= self.m < self.K <= self.N):
            raise InvalidInputError("require s <= m < K <= N")


def gen_dictionary(m: int, K: int, seed: int) -> np.ndarray:
    """Random dictionary: i.i.d. standard-normal entries, unit-norm columns."""
    if m < 1 or K < 1:
        raise InvalidInputError("m and K must be positive")
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((m, K))
    norms = np.linalg.norm(D, axis=0)
    if np.any(norms == 0):  # probability zero, but keep the invariant hard
        raise InvalidInputError("degenerate zero column generated")
    return D / norms


def gen_signals(D: np.ndarray, N: int, s: int,
                seed: int) -> tuple[np.ndarray, SparseCodeMatrix]:
    """Noiseless s-sparse signals over D.

    Each column gets s distinct uniformly drawn atoms with standard-normal
    coefficients; returns Y = D X exactly together with the ground-truth X.
    """
    D = np.asarray(D, dtype=np.float64)
    m, K = D.shape
    if s > K:
        raise InvalidInputError("s must not exceed the atom count")
    if N < 0:
        raise InvalidInputError("N must be nonnegative")
    rng = np.random.default_rng(seed)
    indptr = np.arange(0, (N + 1) * s, s, dtype=np.int64)
    indices = np.empty(N * s, dtype=np.int64)
    data = np.empty(N * s)
    for i in range(N):
        sup = np.sort(rng.choice(K, size=s, replace=False))
        indices[i * s:(i + 1) * s] = sup
        data[i * s:(i + 1) * s] = rng.standard_normal(s)
    X = SparseCodeMatrix(K, indptr, indices, data)
    Y = D @ X.to_csc()
    return np.asarray(Y), X


def sparse_model_check(y: np.ndarray, D: np.ndarray, x, eps: float,
                       s: int) -> bool:
    """True iff ||x||_0 <= s and ||y - Dx||_2 <= eps."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    D = np.asarray(D, dtype=np.float64)
    if isinstance(x, SparseVector):
        xd = x.to_dense()
        nnz = x.nnz
    else:
        xd = np.asarray(x, dtype=np.float64).reshape(-1)
        nnz = int(np.count_nonzero(xd))
    if D.shape[0] != y.shape[0] or D.shape[1] != xd.shape[0]:
        raise InvalidInputError("inconsistent dimensions")
    return nnz <= s and float(np.linalg.norm(y - D @ xd)) <= eps


def composition_bound_check(D: np.ndarray, Z: np.ndarray, E: np.ndarray,
                            x1: np.ndarray, e1: np.ndarray
                            ) -> tuple[bool, float, float]:
    """Check the two-stage representation bound on a constructed instance.

    With Dtilde = D Z + E and y = Dtilde x1 + e1, verifies that
    ||y - D (Z x1)||_2 <= K*eps2 + eps1, where eps2 = ||x1||_2 * max column
    norm of E and eps1 = ||e1||_2, and that the composed code satisfies
    ||Z x1||_0 <= ||x1||_0 * max_j ||z_j||_0.
    """
    D = np.asarray(D, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    E = np.asarray(E, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64).reshape(-1)
    e1 = np.asarray(e1, dtype=np.float64).reshape(-1)
    m, K = D.shape
    if Z.shape[0] != K or E.shape != (m, Z.shape[1]) or x1.shape[0] != Z.shape[1] \
            or e1.shape[0] != m:
        raise InvalidInputError("inconsistent dimensions")
    x1_norm = float(np.linalg.norm(x1))
    if x1_norm == 0.0:
        raise InvalidInputError("x1 must be nonzero")

    y = (D @ Z + E) @ x1 + e1
    r = Z @ x1
    lhs = float(np.linalg.norm(y - D @ r))
    eps2 = x1_norm * float(np.linalg.norm(E, axis=0).max(initial=0.0))
    eps1 = float(np.linalg.norm(e1))
    rhs = K * eps2 + eps1

    s1 = int(np.count_nonzero(x1))
    s2 = int(np.count_nonzero(Z, axis=0).max(initial=0))
    if np.count_nonzero(r) > s1 * s2:
        raise AssertionError("composed support exceeds the s1*s2 bound")

    # Tiny relative slack absorbs floating-point rounding in the comparison.
    holds = lhs <= rhs * (1 + 1e-12) + 1e-12
    return holds, lhs, rhs
