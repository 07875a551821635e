"""Evaluation metrics: rank-biased overlap, selection accuracy, error stats, P@n."""

from __future__ import annotations

import math
from typing import Hashable, Sequence

import numpy as np


def _check_ranking(r: Sequence[Hashable], name: str):
    if len(set(r)) != len(r):
        raise ValueError(f"{name} contains duplicate items")


def rbo(r1: Sequence[Hashable], r2: Sequence[Hashable], p: float = 0.9) -> float:
    """Extrapolated rank-biased overlap evaluated at depth k = min(len(r1), len(r2)).

    RBO_ext = (X_k / k) p^k + (1 - p) / p * sum_{d=1..k} (X_d / d) p^d, where X_d
    is the size of the overlap of the two depth-d prefixes.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"RBO persistence p must lie in (0, 1), got {p}")
    _check_ranking(r1, "r1")
    _check_ranking(r2, "r2")
    k = min(len(r1), len(r2))
    if k == 0:
        return 0.0
    seen1: set = set()
    seen2: set = set()
    overlap = 0
    acc = 0.0
    for d in range(1, k + 1):
        a, b = r1[d - 1], r2[d - 1]
        if a == b:
            overlap += 1
        else:
            overlap += (a in seen2) + (b in seen1)
        seen1.add(a)
        seen2.add(b)
        acc += overlap / d * p ** d
    value = overlap / k * p ** k + (1.0 - p) / p * acc
    return float(min(1.0, max(0.0, value)))


def acc(kept_pred, kept_true, total_features: int) -> float:
    """(#correctly dropped + #correctly kept) / N."""
    if total_features <= 0:
        raise ValueError("total_features must be positive")
    universe = set(range(total_features))
    kept_pred, kept_true = set(kept_pred), set(kept_true)
    if not (kept_pred <= universe and kept_true <= universe):
        raise ValueError("kept sets must be subsets of the feature indices")
    tp = len((universe - kept_pred) & (universe - kept_true))
    tn = len(kept_pred & kept_true)
    return (tp + tn) / total_features


def error_stats(a, b) -> dict[str, float]:
    """MAE, MSE and RMSE between two equal-length score vectors."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("need at least one pair")
    diff = np.abs(a - b)
    mse = float(np.mean(diff ** 2))
    return {"mae": float(np.mean(diff)), "mse": mse, "rmse": math.sqrt(mse)}


def precision_at_n(r1: Sequence[Hashable], r2: Sequence[Hashable], n: int) -> float:
    """Share of the top-n of ``r1`` that also appears in the top-n of ``r2``."""
    if n < 1 or n > len(r1) or n > len(r2):
        raise ValueError(f"n={n} out of range for rankings of length {len(r1)}, {len(r2)}")
    _check_ranking(r1, "r1")
    _check_ranking(r2, "r2")
    return len(set(r1[:n]) & set(r2[:n])) / n
