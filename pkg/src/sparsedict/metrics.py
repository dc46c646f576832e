"""Evaluation metrics and the training cost model with a benchmark harness."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import InvalidInputError
from .sparse_coding import SparseCodeMatrix

__all__ = [
    "MSE_DB_FLOOR",
    "PSNR_CAP",
    "mse_db",
    "atom_recovery",
    "psnr",
    "CostParams",
    "predict_costs",
    "BenchReport",
    "bench_compare",
]

MSE_DB_FLOOR = -300.0
PSNR_CAP = 300.0


def mse_db(Y: np.ndarray, D: np.ndarray, X) -> float:
    """Training error 20*log10(||Y - DX||_F / ||Y||_F), floored at -300 dB."""
    Y = np.asarray(Y, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    y_fro = np.linalg.norm(Y)
    if y_fro == 0.0:
        raise InvalidInputError("||Y||_F is zero")
    if isinstance(X, SparseCodeMatrix):
        R = Y - D @ X.to_csc()
    else:
        R = Y - D @ np.asarray(X, dtype=np.float64)
    ratio = np.linalg.norm(R) / y_fro
    if ratio <= 0.0:
        return MSE_DB_FLOOR
    return float(max(20.0 * np.log10(ratio), MSE_DB_FLOOR))


def atom_recovery(D_true: np.ndarray, D_hat: np.ndarray,
                  threshold: float = 0.98) -> float:
    """Percentage of true atoms matched by some estimated atom.

    A true atom d_i counts as recovered when max_j |d_i^T dhat_j| >= threshold.
    No one-to-one matching is enforced, so a single estimated atom may certify
    several true atoms.
    """
    D_true = np.asarray(D_true, dtype=np.float64)
    D_hat = np.asarray(D_hat, dtype=np.float64)
    if D_true.ndim != 2 or D_hat.ndim != 2 or D_true.shape[0] != D_hat.shape[0]:
        raise InvalidInputError("dictionaries must share the signal dimension")
    corr = np.abs(D_true.T @ D_hat)
    recovered = (corr.max(axis=1) >= threshold).sum()
    return 100.0 * recovered / D_true.shape[1]


def psnr(reference: np.ndarray, test: np.ndarray) -> float:
    """Peak signal-to-noise ratio 20*log10(255 / RMSE), capped at +300 dB."""
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if reference.shape != test.shape:
        raise InvalidInputError("images must have identical dimensions")
    rmse = np.sqrt(np.mean((reference - test) ** 2))
    if rmse == 0.0:
        return PSNR_CAP
    return float(min(20.0 * np.log10(255.0 / rmse), PSNR_CAP))


@dataclass(frozen=True)
class CostParams:
    """Inputs for the per-iteration cost model (constant c normalized to 1)."""

    N: int
    m: int
    K: int
    s: int
    L: int
    K1: int
    s1: int
    s2: int

    def __post_init__(self):
        for name in ("N", "m", "K", "s", "L", "K1", "s1", "s2"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be a positive integer")
        if self.s != self.s1 * self.s2:
            raise InvalidInputError("s must equal s1 * s2")

    @property
    def same_order_assumption(self) -> bool:
        """True when K1*L and N/L are within a factor of 4 of each other."""
        a, b = self.K1 * self.L, self.N / self.L
        return max(a, b) <= 4 * min(a, b)


def predict_costs(p: CostParams) -> tuple[float, float, float]:
    """Per-iteration cost of standard training (T1), one local subproblem
    (T2), and the full split-train-merge pipeline (T_total), in units of the
    model constant."""
    N, m, K, s, L, K1, s1, s2 = (
        float(p.N), float(p.m), float(p.K), float(p.s),
        float(p.L), float(p.K1), float(p.s1), float(p.s2),
    )
    T1 = N * (K * s * m + m**2 + N**2)
    T2 = (N / L) * (K1 * s1 * m + m**2 + (N / L) ** 2)
    T_total = (
        N * (K1 * s1 * m + m**2 + (N / L) ** 2)
        + K1 * L * (K * s2 * m + m**2 + (K1 * L) ** 2)
    )
    return T1, T2, T_total


@dataclass
class BenchReport:
    """Measured comparison of standard vs split-and-merge training."""

    params: dict
    standard_wall_s: float
    split_wall_s: float
    split_phase_s: dict = field(default_factory=dict)
    standard_mse_db: float = 0.0
    split_mse_db: float = 0.0
    standard_recovery_pct: float | None = None
    split_recovery_pct: float | None = None
    speedup: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "BenchReport":
        return cls(**json.loads(text))

    def csv_row(self) -> dict:
        return {
            "L": self.params.get("L"),
            "standard_wall_s": self.standard_wall_s,
            "split_wall_s": self.split_wall_s,
            "speedup": self.speedup,
            "standard_mse_db": self.standard_mse_db,
            "split_mse_db": self.split_mse_db,
        }


def bench_compare(Y: np.ndarray, cfg_standard, cfg_split,
                  D_true: np.ndarray | None = None) -> BenchReport:
    """Run both trainers on the same data and report wall times and quality.

    The two runs execute sequentially so the timings stay uncontaminated.
    Atom recovery is included when a ground-truth dictionary is supplied.
    """
    from .trainer import train_split_merge, train_standard

    if cfg_standard.K != cfg_split.K or cfg_standard.s != cfg_split.s:
        raise InvalidInputError("both configs must target the same (K, s)")

    t0 = time.perf_counter()
    D_std, X_std, rep_std = train_standard(Y, cfg_standard)
    std_wall = time.perf_counter() - t0

    t0 = time.perf_counter()
    D_spl, rep_spl = train_split_merge(Y, cfg_split)
    spl_wall = time.perf_counter() - t0

    report = BenchReport(
        params={
            "N": int(Y.shape[1]), "m": int(Y.shape[0]),
            "K": cfg_split.K, "s": cfg_split.s, "L": cfg_split.L,
            "K1": cfg_split.K1, "s1": cfg_split.s1, "s2": cfg_split.s2,
            "iterations": cfg_standard.iterations,
        },
        standard_wall_s=std_wall,
        split_wall_s=spl_wall,
        split_phase_s={
            "split_s": rep_spl.split_time_s,
            "local_wall_times_s": list(rep_spl.local_wall_times_s),
            "merge_wall_time_s": rep_spl.merge_wall_time_s,
        },
        standard_mse_db=rep_std.final_mse_db,
        split_mse_db=rep_spl.final_mse_db,
        speedup=std_wall / spl_wall if spl_wall > 0 else float("inf"),
    )
    if D_true is not None:
        report.standard_recovery_pct = atom_recovery(D_true, D_std)
        report.split_recovery_pct = atom_recovery(D_true, D_spl)
    return report
