"""Least-squares (MOD) dictionary update and atom maintenance.

For fixed codes X the update solves min_D ||Y - D X||_F through the normal
equations D (X X^T) = Y X^T with a rank-revealing solve, then renormalizes
columns. Degenerate atoms (unused, zero-norm, or near-duplicates) are swapped
for the worst-represented data columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidInputError
from .sparse_coding import SparseCodeMatrix, check_dictionary

__all__ = [
    "UpdateDiagnostics",
    "ReplacementReport",
    "normalize_columns",
    "mod_update",
    "replace_degenerate_atoms",
]

# Relative singular-value cutoff for the normal-equation solve.
RANK_RCOND = 1e-10
# Atoms whose post-solve norm falls below this (relative to the largest
# column norm) are treated as degenerate.
ZERO_NORM_REL = 1e-12
# |<d_i, d_j>| above this marks the pair as twins.
TWIN_COHERENCE = 0.999


@dataclass
class UpdateDiagnostics:
    """Outcome of one MOD update.

    ``scales`` holds the pre-normalization column norms of the solved
    dictionary, so D_out * scales reconstructs the raw normal-equation
    solution for the non-degenerate atoms.
    """

    residual_fro: float
    unused_atoms: list[int] = field(default_factory=list)
    rank: int = 0
    scales: np.ndarray | None = None


@dataclass
class ReplacementReport:
    replaced: list[int] = field(default_factory=list)
    unreplaced: list[int] = field(default_factory=list)


def normalize_columns(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale each nonzero column to unit norm.

    Returns the normalized matrix and the original column norms; zero columns
    are left untouched and reported with scale 0.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise InvalidInputError("expected a 2-D matrix")
    scales = np.linalg.norm(M, axis=0)
    out = M.copy()
    nz = scales > 0
    out[:, nz] /= scales[nz]
    return out, scales


def mod_update(Y: np.ndarray, X: SparseCodeMatrix,
               D_prev: np.ndarray) -> tuple[np.ndarray, UpdateDiagnostics]:
    """One MOD step: D = Y X^T (X X^T)^-1, then column renormalization.

    The K x K system is solved with an SVD-based least-squares routine
    (rank tolerance RANK_RCOND relative to the largest singular value), so a
    rank-deficient X X^T falls back to the minimum-norm solution. Atoms with
    zero usage or a vanishing post-solve norm keep their previous value and
    are reported as unused; data-driven replacement is a separate step
    (:func:`replace_degenerate_atoms`).
    """
    Y = np.asarray(Y, dtype=np.float64)
    D_prev = check_dictionary(D_prev)
    m, K = D_prev.shape
    if Y.ndim != 2 or Y.shape[0] != m:
        raise InvalidInputError("Y must be m x N")
    if X.K != K or X.N != Y.shape[1]:
        raise InvalidInputError("code matrix shape does not match Y and D")

    usage = X.row_usage()
    if X.nnz == 0:
        diag = UpdateDiagnostics(residual_fro=float(np.linalg.norm(Y)),
                                 unused_atoms=list(range(K)), rank=0)
        return D_prev.copy(), diag

    Xc = X.to_csc()
    XXT = (Xc @ Xc.T).toarray()
    YXT = Y @ Xc.T  # dense result, m x K
    Dt, _res, rank, _sv = np.linalg.lstsq(XXT, YXT.T, rcond=RANK_RCOND)
    D_new = Dt.T

    residual_fro = float(np.linalg.norm(Y - D_new @ Xc))

    norms = np.linalg.norm(D_new, axis=0)
    max_norm = norms.max() if norms.size else 0.0
    dead = (usage == 0) | (norms <= ZERO_NORM_REL * max(max_norm, 1.0))
    D_new[:, dead] = D_prev[:, dead]
    D_out, _ = normalize_columns(D_new)

    diag = UpdateDiagnostics(residual_fro=residual_fro,
                             unused_atoms=list(np.flatnonzero(dead)),
                             rank=int(rank), scales=norms)
    return D_out, diag


def replace_degenerate_atoms(
    D: np.ndarray,
    Y: np.ndarray,
    X: SparseCodeMatrix,
    rng_seed: int = 0,
) -> tuple[np.ndarray, ReplacementReport]:
    """Swap unused, zero-norm, and twin atoms for hard-to-represent data.

    Degenerate atoms are those with zero usage in X, (numerically) zero norm,
    or a twin partner with |<d_i, d_j>| > TWIN_COHERENCE (the lower index of
    the pair is kept). Each is replaced by the normalized data column with
    the largest current residual ||y_i - D x_i||, drawn without repetition in
    descending residual order (ties and ordering are deterministic;
    ``rng_seed`` is accepted for interface stability and future randomized
    tie-breaking).
    """
    del rng_seed
    D = np.asarray(D, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    m, K = D.shape
    if Y.ndim != 2 or Y.shape[0] != m or X.K != K or X.N != Y.shape[1]:
        raise InvalidInputError("inconsistent dimensions")

    usage = X.row_usage()
    norms = np.linalg.norm(D, axis=0)
    degenerate = (usage == 0) | (norms <= ZERO_NORM_REL)

    # Twin detection on the normalized columns; j > i is the one replaced.
    Dn, _ = normalize_columns(D)
    G = np.abs(Dn.T @ Dn)
    np.fill_diagonal(G, 0.0)
    ii, jj = np.nonzero(np.triu(G > TWIN_COHERENCE, k=1))
    for i, j in zip(ii, jj):
        if not degenerate[i]:
            degenerate[j] = True

    targets = np.flatnonzero(degenerate)
    report = ReplacementReport()
    if targets.size == 0:
        return D.copy(), report

    # Residuals are only needed once an atom actually has to be replaced.
    R = Y - D @ X.to_csc()
    res_norms = np.linalg.norm(R, axis=0)
    # Descending residual, ties broken by lower column index.
    candidates = np.lexsort((np.arange(res_norms.size), -res_norms))

    D_out = D.copy()
    col_norms = np.linalg.norm(Y, axis=0)
    ci = 0
    for atom in targets:
        while ci < candidates.size and col_norms[candidates[ci]] == 0.0:
            ci += 1  # zero data columns cannot become unit-norm atoms
        if ci >= candidates.size:
            report.unreplaced.append(int(atom))
            continue
        col_id = candidates[ci]
        ci += 1
        D_out[:, atom] = Y[:, col_id] / col_norms[col_id]
        report.replaced.append(int(atom))
    return D_out, report
