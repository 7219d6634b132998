"""Retrieval quality measures for binary (+1/-1) networks.

All information quantities are in bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Raised when vectors that must align have different lengths."""


def _check_pair(state, pattern):
    s = np.asarray(state)
    p = np.asarray(pattern)
    if s.shape[-1] != p.shape[-1]:
        raise DimensionError(f"state has length {s.shape[-1]}, pattern has {p.shape[-1]}")
    return s, p


def overlap(state, pattern) -> float:
    """m = (1/N) sum_i xi_i sigma_i."""
    s, p = _check_pair(state, pattern)
    n = s.shape[-1]
    return float(np.dot(s.astype(np.int64), p.astype(np.int64))) / n


def hamming(state, pattern) -> float:
    """D = (1/N) sum_i |xi_i - sigma_i|^2, which equals 2(1 - m)."""
    s, p = _check_pair(state, pattern)
    d = s.astype(np.int64) - p.astype(np.int64)
    return float(np.dot(d, d)) / s.shape[-1]


def conditional_entropy(m: float) -> float:
    """Entropy S[sigma|xi] of the binary channel with overlap m."""
    if not -1.0 <= m <= 1.0:
        raise ValueError(f"overlap must lie in [-1, 1], got {m}")
    h = 0.0
    for p in ((1.0 + m) / 2.0, (1.0 - m) / 2.0):
        if p > 0.0:  # 0 log 0 = 0
            h -= p * math.log2(p)
    return h


def mutual_information(m: float) -> float:
    """MI = S[sigma] - S[sigma|xi], with S[sigma] = 1 bit for unbiased neurons."""
    return max(0.0, 1.0 - conditional_entropy(m))


def info_rate(alpha: float, m: float) -> float:
    """Information per synapse, i = alpha * MI(m)."""
    if alpha < 0:
        raise ValueError(f"load must be non-negative, got {alpha}")
    return alpha * mutual_information(m)


@dataclass(frozen=True)
class RetrievalMetrics:
    m: float
    D: float
    MI: float
    alpha: float
    i: float

    @classmethod
    def from_overlap(cls, m: float, alpha: float) -> "RetrievalMetrics":
        mi = mutual_information(m)
        return cls(m=m, D=2.0 * (1.0 - m), MI=mi, alpha=alpha, i=alpha * mi)


def retrieval_metrics(state, pattern, alpha: float) -> RetrievalMetrics:
    return RetrievalMetrics.from_overlap(overlap(state, pattern), alpha)
