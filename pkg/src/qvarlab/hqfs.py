"""Variance-threshold feature selection, quantum (HQFS / ML-HQFS) and classical."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datasets import Dataset
from .variance import EstimatorConfig, classical_variance, qvar


@dataclass
class FeatureSelectionResult:
    variances: np.ndarray
    kept: list[int]
    dropped: list[int]
    ranking: list[int]
    threshold: float
    estimates: list[dict] = field(default_factory=list)


def feature_ranking(variances) -> list[int]:
    """Feature indices by ascending variance, ties by index."""
    v = np.asarray(variances, dtype=float)
    return [int(i) for i in np.lexsort((np.arange(v.size), v))]


def _as_dataset(data) -> Dataset:
    return data if isinstance(data, Dataset) else Dataset(np.asarray(data, dtype=float))


def _select(variances: np.ndarray, t: float, estimates=None) -> FeatureSelectionResult:
    dropped = [j for j, v in enumerate(variances) if v <= t]
    kept = [j for j in range(variances.size) if variances[j] > t]
    return FeatureSelectionResult(variances, kept, dropped, feature_ranking(variances), t,
                                  estimates or [])


def _check_threshold(t: float):
    if not t >= 0:
        raise ValueError(f"threshold must be >= 0, got {t}")


def hqfs(data, t: float, config: EstimatorConfig | None = None) -> FeatureSelectionResult:
    """Drop every feature whose QVAR variance estimate is <= t.

    Each column gets its own oracle and its own seed spawned from
    ``config.seed``, so the outcome does not depend on evaluation order.
    """
    _check_threshold(t)
    data = _as_dataset(data)
    config = config or EstimatorConfig()
    n = data.shape[1]
    seeds = config.child_seeds(n)
    variances = np.empty(n)
    estimates = []
    for j in range(n):
        est = qvar(data.records[:, j], s=config.s, method=config.method, shots=config.shots,
                   rng_seed=seeds[j],
                   schedule=list(config.schedule) if config.schedule else None,
                   backend=config.backend)
        variances[j] = est.variance
        estimates.append(est.as_dict())
    return _select(variances, t, estimates)


def classical_feature_selection(data, t: float) -> FeatureSelectionResult:
    _check_threshold(t)
    data = _as_dataset(data)
    variances = np.array([classical_variance(col) for col in data.records.T])
    return _select(variances, t)


def sample_records(data, sample_size: int = 16, num_trials: int = 1,
                   seed: int | None = None) -> list[Dataset]:
    """Draw ``num_trials`` subsets of ``sample_size`` records without replacement.

    Used by experiment loops that score features on small record samples.
    """
    data = _as_dataset(data)
    M = data.shape[0]
    if not 2 <= sample_size <= M:
        raise ValueError(f"sample_size must lie in [2, {M}], got {sample_size}")
    if num_trials < 1:
        raise ValueError("num_trials must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    for _ in range(num_trials):
        rows = np.sort(rng.choice(M, size=sample_size, replace=False))
        out.append(Dataset(data.records[rows], list(data.feature_names)))
    return out
