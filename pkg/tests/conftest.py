"""Shared test helpers: independent oracles, kept free of package internals."""

import numpy as np
import pytest


def ref_matmul(a, b):
    """Triple-loop integer matrix product, the independent reference."""
    rows, inner, cols = len(a), len(a[0]), len(b[0])
    out = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        for j in range(cols):
            acc = 0
            for kk in range(inner):
                acc += int(a[i][kk]) * int(b[kk][j])
            out[i][j] = acc
    return out


def random_gemm_operands(rng, m, k, n, lo=-8, hi=8):
    a = rng.integers(lo, hi + 1, size=(m, k))
    b = rng.integers(lo, hi + 1, size=(k, n))
    return a, b


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
