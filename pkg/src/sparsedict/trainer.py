"""Dictionary training: the standard alternating loop and the
split / local-train / merge pipeline.

Standard training alternates batch OMP (fixed sparsity) with a MOD update
and degenerate-atom replacement. Split-and-merge partitions the data into L
disjoint shards, trains an (m, K1) dictionary with sparsity s1 on each,
stacks the local dictionaries scaled by the Frobenius norm of their code
matrices into a new dataset, and trains the (m, K) global dictionary on it
with sparsity s2 = s / s1.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dictionary_update import mod_update, normalize_columns, replace_degenerate_atoms
from .exceptions import InvalidInputError
from .metrics import mse_db
from .sparse_coding import SparseCodeMatrix, omp_batch

__all__ = [
    "TrainConfig",
    "TrainReport",
    "train_standard",
    "split_indices",
    "split_dataset",
    "train_local",
    "merge_dictionaries",
    "train_split_merge",
]

INIT_MODES = ("first-columns", "overcomplete-dct")

_CONFIG_FIELDS = {
    "K", "s", "iterations", "init", "seed", "mode", "L", "K1", "s1", "s2",
    "local_iterations", "merge_iterations",
}


@dataclass
class TrainConfig:
    """Run parameters for either training mode.

    ``init`` is one of "first-columns", "overcomplete-dct", or an explicit
    (m, K) matrix. Split-merge fields (L, K1, s1, s2) are required when
    ``mode`` is "split-merge"; local/merge iteration counts default to the
    global count.
    """

    K: int
    s: int
    iterations: int = 100
    init: str | np.ndarray = "first-columns"
    seed: int = 0
    mode: str = "standard"
    L: int = 1
    K1: int | None = None
    s1: int | None = None
    s2: int | None = None
    local_iterations: int | None = None
    merge_iterations: int | None = None
    threads: int = 1

    def validate(self) -> None:
        if self.K < 1 or self.s < 1 or self.iterations < 1:
            raise InvalidInputError("K, s, iterations must be positive")
        if isinstance(self.init, str):
            if self.init not in INIT_MODES:
                raise InvalidInputError(f"unknown init mode {self.init!r}")
        else:
            M = np.asarray(self.init, dtype=np.float64)
            if M.ndim != 2 or M.shape[1] != self.K:
                raise InvalidInputError("explicit init must be an (m, K) matrix")
        if self.mode == "standard":
            return
        if self.mode != "split-merge":
            raise InvalidInputError(f"unknown mode {self.mode!r}")
        if self.L < 1:
            raise InvalidInputError("L must be >= 1")
        if self.K1 is None or self.s1 is None or self.s2 is None:
            raise InvalidInputError("split-merge mode requires K1, s1 and s2")
        if self.s1 * self.s2 != self.s:
            raise InvalidInputError(
                f"sparsity levels must compose: s1*s2 = {self.s1}*{self.s2} != s = {self.s}")
        if self.K1 > self.K:
            raise InvalidInputError("K1 must not exceed K")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - _CONFIG_FIELDS
        if unknown:
            raise InvalidInputError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        d = {
            "K": self.K, "s": self.s, "iterations": self.iterations,
            "seed": self.seed, "mode": self.mode,
        }
        d["init"] = self.init if isinstance(self.init, str) else "explicit-matrix"
        if self.mode == "split-merge":
            d.update(L=self.L, K1=self.K1, s1=self.s1, s2=self.s2,
                     local_iterations=self.local_iterations,
                     merge_iterations=self.merge_iterations)
        return d


@dataclass
class TrainReport:
    """Timing and quality summary of one training run."""

    final_mse_db: float
    per_iteration_residuals: list[float] = field(default_factory=list)
    wall_time_s: float = 0.0
    split_time_s: float = 0.0
    local_wall_times_s: list[float] = field(default_factory=list)
    merge_wall_time_s: float = 0.0
    critical_path_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "final_mse_db": self.final_mse_db,
            "per_iteration_residuals": list(self.per_iteration_residuals),
            "wall_time_s": self.wall_time_s,
            "split_time_s": self.split_time_s,
            "local_wall_times_s": list(self.local_wall_times_s),
            "merge_wall_time_s": self.merge_wall_time_s,
            "critical_path_s": self.critical_path_s,
        }


def _init_dictionary(Y: np.ndarray, cfg: TrainConfig) -> np.ndarray:
    m, N = Y.shape
    if isinstance(cfg.init, np.ndarray) or not isinstance(cfg.init, str):
        D0 = np.asarray(cfg.init, dtype=np.float64)
        if D0.shape != (m, cfg.K):
            raise InvalidInputError("explicit init has wrong shape")
        D0, _ = normalize_columns(D0)
    elif cfg.init == "first-columns":
        if N < cfg.K:
            raise InvalidInputError("first-columns init needs N >= K")
        D0, _ = normalize_columns(Y[:, :cfg.K])
    else:  # overcomplete-dct
        from .denoising import overcomplete_dct

        p = int(round(np.sqrt(m)))
        if p * p != m:
            raise InvalidInputError("overcomplete-dct init needs a square patch dimension")
        D0 = overcomplete_dct(p, cfg.K)
    # Zero init columns (e.g. blank patches) get deterministic random atoms.
    zero = np.linalg.norm(D0, axis=0) == 0
    if np.any(zero):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
        fill = rng.standard_normal((m, int(zero.sum())))
        D0[:, zero] = fill / np.linalg.norm(fill, axis=0)
    return D0


def train_standard(Y: np.ndarray, cfg: TrainConfig
                   ) -> tuple[np.ndarray, SparseCodeMatrix, TrainReport]:
    """Alternating OMP / MOD training on the whole dataset.

    Runs cfg.iterations rounds of sparse coding (fixed sparsity cfg.s), MOD
    update, and degenerate-atom replacement; returns the final dictionary,
    the codes recomputed against it, and a report.
    """
    cfg.validate()
    if cfg.mode != "standard":
        raise InvalidInputError("train_standard requires mode='standard'")
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] < 1:
        raise InvalidInputError("Y must be a nonempty m x N matrix")

    t0 = time.perf_counter()
    D = _init_dictionary(Y, cfg)
    residuals: list[float] = []
    for it in range(cfg.iterations):
        X = omp_batch(Y, D, s=cfg.s, threads=cfg.threads)
        D, diag = mod_update(Y, X, D)
        D, _rep = replace_degenerate_atoms(D, Y, X, rng_seed=cfg.seed + it)
        residuals.append(diag.residual_fro)
    X = omp_batch(Y, D, s=cfg.s, threads=cfg.threads)
    wall = time.perf_counter() - t0

    report = TrainReport(
        final_mse_db=mse_db(Y, D, X),
        per_iteration_residuals=residuals,
        wall_time_s=wall,
        critical_path_s=wall,
    )
    return D, X, report


def split_indices(N: int, L: int, seed: int) -> list[np.ndarray]:
    """Seeded random partition of range(N) into L blocks.

    A uniform permutation is cut into consecutive blocks of size floor(N/L);
    the first N mod L blocks receive one extra column each.
    """
    if L < 1 or L > N:
        raise InvalidInputError("require 1 <= L <= N")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(N)
    base, extra = divmod(N, L)
    sizes = [base + 1 if t < extra else base for t in range(L)]
    out = []
    start = 0
    for sz in sizes:
        out.append(perm[start:start + sz])
        start += sz
    return out


def split_dataset(Y: np.ndarray, L: int, seed: int) -> list[np.ndarray]:
    """Partition the columns of Y into L disjoint shards (see split_indices)."""
    Y = np.asarray(Y, dtype=np.float64)
    return [Y[:, idx] for idx in split_indices(Y.shape[1], L, seed)]


def train_local(Y_t: np.ndarray, K1: int, s1: int, iterations: int, seed: int,
                init: str | np.ndarray = "first-columns", threads: int = 1
                ) -> tuple[np.ndarray, SparseCodeMatrix]:
    """Train one local dictionary; same contract as train_standard with (K1, s1)."""
    cfg = TrainConfig(K=K1, s=s1, iterations=iterations, init=init, seed=seed,
                      threads=threads)
    D, X, _report = train_standard(Y_t, cfg)
    return D, X


def merge_dictionaries(local_results: list[tuple[np.ndarray, SparseCodeMatrix]],
                       K: int, s2: int, merge_iterations: int, seed: int,
                       init: str | np.ndarray = "first-columns",
                       threads: int = 1) -> np.ndarray:
    """Learn the global dictionary from scaled local dictionaries.

    Builds the merge dataset by stacking ||X_t||_F * D_t column blocks
    (locals with all-zero codes carry no weight and are dropped), then runs
    standard training on it with sparsity s2.
    """
    if not local_results:
        raise InvalidInputError("empty list of local dictionaries")
    blocks = []
    for D_t, X_t in local_results:
        w = float(np.linalg.norm(X_t.data)) if isinstance(X_t, SparseCodeMatrix) \
            else float(np.linalg.norm(np.asarray(X_t)))
        if w > 0.0:
            blocks.append(w * np.asarray(D_t, dtype=np.float64))
    if not blocks:
        raise InvalidInputError("all local code matrices are zero")
    Y_merge = np.concatenate(blocks, axis=1)
    cfg = TrainConfig(K=K, s=s2, iterations=merge_iterations, init=init,
                      seed=seed, threads=threads)
    D, _X, _report = train_standard(Y_merge, cfg)
    return D


def _derive_seeds(seed: int, count: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def _local_task(args):
    Y_t, K1, s1, iterations, seed, init = args
    t0 = time.perf_counter()
    D_t, X_t = train_local(Y_t, K1, s1, iterations, seed, init=init)
    return D_t, X_t, time.perf_counter() - t0


def train_split_merge(Y: np.ndarray, cfg: TrainConfig
                      ) -> tuple[np.ndarray, TrainReport]:
    """Full split / parallel local train / merge pipeline.

    Local trainings run as independent tasks (a process pool when
    cfg.threads > 1) with per-task seeds derived from cfg.seed, and are
    aggregated in task-index order, so the result is deterministic for a
    given seed regardless of worker count.
    """
    cfg.validate()
    if cfg.mode != "split-merge":
        raise InvalidInputError("train_split_merge requires mode='split-merge'")
    Y = np.asarray(Y, dtype=np.float64)
    local_iters = cfg.local_iterations or cfg.iterations
    merge_iters = cfg.merge_iterations or cfg.iterations

    t_start = time.perf_counter()
    shards = split_dataset(Y, cfg.L, cfg.seed)
    split_time = time.perf_counter() - t_start

    seeds = _derive_seeds(cfg.seed, cfg.L + 1)
    # Locals always initialize from the first columns of their own shard;
    # cfg.init (e.g. an overcomplete DCT sized for K) applies to the merge
    # training, whose K1 would not generally fit that init.
    tasks = [(shards[t], cfg.K1, cfg.s1, local_iters, seeds[t],
              "first-columns") for t in range(cfg.L)]
    if cfg.threads > 1 and cfg.L > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.threads, cfg.L)) as pool:
            results = list(pool.map(_local_task, tasks))
    else:
        results = [_local_task(t) for t in tasks]
    local_walls = [r[2] for r in results]

    t_merge = time.perf_counter()
    D = merge_dictionaries([(r[0], r[1]) for r in results], cfg.K, cfg.s2,
                           merge_iters, seeds[cfg.L], init=cfg.init,
                           threads=cfg.threads)
    merge_wall = time.perf_counter() - t_merge
    wall = time.perf_counter() - t_start

    # Evaluation pass (not counted in training wall time).
    X_full = omp_batch(Y, D, s=cfg.s, threads=cfg.threads)
    report = TrainReport(
        final_mse_db=mse_db(Y, D, X_full),
        wall_time_s=wall,
        split_time_s=split_time,
        local_wall_times_s=local_walls,
        merge_wall_time_s=merge_wall,
        critical_path_s=split_time + (max(local_walls) if local_walls else 0.0)
        + merge_wall,
    )
    return D, report
