import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make reference.py importable


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_dictionary(rng, m, K):
    D = rng.standard_normal((m, K))
    return D / np.linalg.norm(D, axis=0)


def orthonormal_dictionary(rng, m, K):
    """Dictionary with K <= m orthonormal columns (exact-recovery regime)."""
    assert K <= m
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    return np.ascontiguousarray(Q[:, :K])
