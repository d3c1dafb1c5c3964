"""Shared test utilities: statistical two-sample test used by the walker checks."""

import numpy as np


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    n, m = len(a), len(b)
    everything = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, everything, side="right") / n
    cdf_b = np.searchsorted(b, everything, side="right") / m
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    n_e = n * m / (n + m)
    lam = (np.sqrt(n_e) + 0.12 + 0.11 / np.sqrt(n_e)) * d
    j = np.arange(1, 101)
    p = 2.0 * np.sum((-1.0) ** (j - 1) * np.exp(-2.0 * (j * lam) ** 2))
    return d, float(min(max(p, 0.0), 1.0))
