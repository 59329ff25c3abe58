"""Empirical uniform (Kolmogorov) and 1-Wasserstein distances between samples."""

from __future__ import annotations

import math

import numpy as np
from scipy import special, stats

from .errors import InvalidInput
from .utils import ceil_rank

KS_FLOOR_CONSTANT = 1.36


def as_sample(values) -> np.ndarray:  # type: ignore[no-untyped-def]
    sample = np.asarray(values, dtype=float).ravel()
    if sample.size < 1:
        raise InvalidInput("样本为空")
    if not np.all(np.isfinite(sample)):
        raise InvalidInput("样本含非有限值")
    return sample


def ks_two_sample(a, b) -> float:  # type: ignore[no-untyped-def]
    result = stats.ks_2samp(as_sample(a), as_sample(b), method="asymp")
    return float(result.statistic)


def ks_vs_normal(a) -> float:  # type: ignore[no-untyped-def]
    """sup_x |F_m(x) - Phi(x)|, checking both one-sided limits at every jump."""
    ordered = np.sort(as_sample(a))
    m = ordered.size
    cdf = special.ndtr(ordered)
    upper = np.arange(1, m + 1) / m - cdf
    lower = cdf - np.arange(0, m) / m
    return float(max(upper.max(), lower.max()))


def wasserstein1(a, b) -> float:  # type: ignore[no-untyped-def]
    left = np.sort(as_sample(a))
    right = np.sort(as_sample(b))
    if left.size == right.size:
        return float(np.mean(np.abs(left - right)))
    return float(stats.wasserstein_distance(left, right))


def empirical_quantile(a, beta: float) -> float:  # type: ignore[no-untyped-def]
    ordered = np.sort(as_sample(a))
    return float(ordered[ceil_rank(beta, ordered.size) - 1])


def ks_noise_floor(m_a: int, m_b: int | None = None) -> float:
    """Two-sample DKW scale 1.36 sqrt(1/m_a + 1/m_b); one-sample when m_b is None."""
    if m_a < 1 or (m_b is not None and m_b < 1):
        raise InvalidInput("样本量必须为正")
    inverse = 1.0 / m_a + (1.0 / m_b if m_b is not None else 0.0)
    return KS_FLOOR_CONSTANT * math.sqrt(inverse)
