"""Monic probabilists' Hermite polynomials.

H_0 = 1, H_1 = x, H_{k+1}(x) = x H_k(x) - k H_{k-1}(x).  Under a standard
Gaussian these satisfy E[H_j(Z) H_k(Z)] = delta_{jk} k!, which is what turns
products of independent cell increments into multiple-integral evaluations.
"""

from __future__ import annotations

import numpy as np

MAX_DEGREE = 64


def hermite_eval(k: int, x):
    """H_k evaluated pointwise; x may be a scalar or an ndarray."""
    if not isinstance(k, (int, np.integer)) or k < 0:
        raise ValueError(f"degree must be a non-negative integer, got {k!r}")
    if k > MAX_DEGREE:
        raise ValueError(f"degree {k} exceeds the supported maximum {MAX_DEGREE}")
    scalar = np.isscalar(x) or (isinstance(x, np.ndarray) and x.ndim == 0)
    arr = np.asarray(x, dtype=np.float64)
    prev = np.ones_like(arr)
    if k == 0:
        return float(prev) if scalar else prev
    cur = arr.copy()
    for j in range(1, k):
        prev, cur = cur, arr * cur - j * prev
    return float(cur) if scalar else cur


def hermite_table(kmax: int, x: np.ndarray) -> np.ndarray:
    """Stack of H_0(x), ..., H_kmax(x); shape (kmax + 1,) + x.shape."""
    if not isinstance(kmax, (int, np.integer)) or kmax < 0:
        raise ValueError(f"degree must be a non-negative integer, got {kmax!r}")
    if kmax > MAX_DEGREE:
        raise ValueError(f"degree {kmax} exceeds the supported maximum {MAX_DEGREE}")
    arr = np.asarray(x, dtype=np.float64)
    out = np.empty((kmax + 1,) + arr.shape, dtype=np.float64)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = arr
    for j in range(1, kmax):
        out[j + 1] = arr * out[j] - j * out[j - 1]
    return out
