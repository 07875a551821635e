"""Angle-based outlier detection: classical ABOD oracles and the QVAR-based QODA.

For a pivot record p every record is translated by x_p and mapped onto the
unit sphere with the inverse stereographic projection (ISP).  Classical ABOD
scores a pivot by the variance of the angles between the translated records;
QODA replaces the angles by the componentwise differences of the projected
records, which a single Hadamard on a branch qubit puts into superposition,
and estimates their spread with QVAR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sim
from .sim import Circuit
from .variance import EstimatorConfig, build_qvar_oracle, estimate_amplitude

ARCCOS_SLACK = 1e-12


@dataclass
class ProjectedDataset:
    pivot: int
    vectors: np.ndarray  # M x (N+1), unit rows

    @property
    def num_records(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass
class BoundEntry:
    pivot: int
    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return self.rhs - self.lhs


@dataclass
class DifferencePrep:
    """Output of :func:`build_difference_stateprep`.

    ``circuit`` prepares, on the d=1 branch, amplitude ``c * (x_j - x_i)_k`` on
    index ``(j * rows + i) * cols + k`` of the ``idx`` register.
    """

    circuit: Circuit
    flag: int
    c: float
    rows: int  # padded record count, 2**m
    cols: int  # padded component count, 2**n'
    padded: np.ndarray = field(repr=False)


@dataclass
class OutlierResult:
    scores: np.ndarray
    ranking: list[int]
    outliers: list[int]
    threshold: float | None
    comparison: dict[str, np.ndarray] = field(default_factory=dict)
    details: list[dict] = field(default_factory=list)


def isp(v) -> np.ndarray:
    """Inverse stereographic projection of R^N onto the unit sphere in R^(N+1)."""
    v = np.asarray(v, dtype=float)
    sq = float(v @ v)
    return np.append(2.0 * v, sq - 1.0) / (1.0 + sq)


def _isp_rows(V: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", V, V)[:, None]
    return np.hstack([2.0 * V, sq - 1.0]) / (1.0 + sq)


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError("expected a records x features matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError("data contains non-finite entries")
    return X


def translate_and_project(X, p: int) -> ProjectedDataset:
    """Rows isp(x_i - x_p); the pivot itself lands on the south pole."""
    X = _as_matrix(X)
    if not 0 <= p < X.shape[0]:
        raise ValueError(f"pivot {p} outside [0, {X.shape[0]})")
    return ProjectedDataset(p, _isp_rows(X - X[p]))


def _angles_from_cos(cos: np.ndarray) -> np.ndarray:
    return np.arccos(np.clip(cos, -1.0 - ARCCOS_SLACK, 1.0 + ARCCOS_SLACK).clip(-1.0, 1.0))


def classical_angles(P: ProjectedDataset) -> np.ndarray:
    """Angles between projected rows over pairs i < j with i, j != pivot."""
    keep = np.delete(np.arange(P.num_records), P.pivot)
    V = P.vectors[keep]
    iu = np.triu_indices(len(keep), k=1)
    return _angles_from_cos((V @ V.T)[iu])


def _pair_angles(W: np.ndarray) -> np.ndarray:
    # angles between rows of W over i < j, skipping zero rows
    norms = np.linalg.norm(W, axis=1)
    W = W[norms > 0] / norms[norms > 0, None]
    iu = np.triu_indices(W.shape[0], k=1)
    return _angles_from_cos((W @ W.T)[iu])


def classical_abod_scores(X, mode: str = "angle", space: str = "raw") -> np.ndarray:
    """Per-pivot variance of the pairwise angles (or their cosines).

    ``space="raw"`` measures angles between the translated records x_i - x_p;
    ``space="projected"`` between their ISP images.  Pairs i < j, i, j != p.
    """
    X = _as_matrix(X)
    M = X.shape[0]
    if M < 3:
        raise ValueError("ABOD needs at least three records")
    if mode not in ("angle", "cosine"):
        raise ValueError(f"unknown mode {mode!r}")
    if space not in ("raw", "projected"):
        raise ValueError(f"unknown space {space!r}")
    scores = np.empty(M)
    for p in range(M):
        if space == "raw":
            theta = _pair_angles(np.delete(X - X[p], p, axis=0))
        else:
            theta = classical_angles(translate_and_project(X, p))
        vals = theta if mode == "angle" else np.cos(theta)
        scores[p] = vals.var() if vals.size else 0.0
    return scores


def classical_delta_variance(P: ProjectedDataset) -> float:
    """Variance of the pairwise projected differences over i, j != pivot.

    The differences are antisymmetric, so their mean vanishes and the
    variance is the mean of squares over (M-1)^2 (N+1) entries.
    """
    M = P.num_records
    if M < 2:
        raise ValueError("need at least two records")
    V = np.delete(P.vectors, P.pivot, axis=0)
    diff = V[:, None, :] - V[None, :, :]
    return float((diff ** 2).sum() / ((M - 1) ** 2 * P.dim))


def ordered_pair_angles(P: ProjectedDataset) -> np.ndarray:
    """All (M-1)^2 angles theta_ij, i, j != pivot, including i == j."""
    V = np.delete(P.vectors, P.pivot, axis=0)
    return _angles_from_cos(V @ V.T).ravel()


def check_bound(P: ProjectedDataset) -> BoundEntry:
    """Both sides of Var(Delta) <= (Var(theta) + E[theta]^2) / (N+1)."""
    if P.num_records < 3:
        raise ValueError("the bound needs at least three records")
    theta = ordered_pair_angles(P)
    rhs = (theta.var() + theta.mean() ** 2) / P.dim
    return BoundEntry(P.pivot, classical_delta_variance(P), float(rhs))


def bound_report(X) -> list[BoundEntry]:
    X = _as_matrix(X)
    return [check_bound(translate_and_project(X, p)) for p in range(X.shape[0])]


def _bits(size: int) -> int:
    return max(1, math.ceil(math.log2(size)))


def encoded_rows(P: ProjectedDataset, include_pivot: bool = False) -> np.ndarray:
    """Projected rows handed to the circuit.

    By default the pivot's own south-pole row is left out, so the differences
    range over i, j != p like the Delta vector of the angle bound.
    """
    return P.vectors if include_pivot else np.delete(P.vectors, P.pivot, axis=0)


def padded_matrix(P: ProjectedDataset, include_pivot: bool = False) -> np.ndarray:
    """Encoded rows zero-padded to 2**m rows and 2**n' columns."""
    V = encoded_rows(P, include_pivot)
    M, K = V.shape
    out = np.zeros((1 << _bits(M), 1 << _bits(K)))
    out[:M, :K] = V
    return out


def difference_tensor(P: ProjectedDataset, include_pivot: bool = False) -> np.ndarray:
    """diff[j, i, k] = (x_j - x_i)_k over the padded matrix."""
    W = padded_matrix(P, include_pivot)
    return W[:, None, :] - W[None, :, :]


def mean_square_difference(P: ProjectedDataset, include_pivot: bool = False) -> float:
    """Brute-force mean of squared padded differences over every (j, i, k) cell."""
    W = padded_matrix(P, include_pivot)
    rows, cols = W.shape
    total = 0.0
    for j in range(rows):
        for i in range(rows):
            for k in range(cols):
                total += (W[j, k] - W[i, k]) ** 2
    return total / (rows * rows * cols)


def build_difference_stateprep(P: ProjectedDataset, max_qubits: int = sim.MAX_QUBITS,
                               include_pivot: bool = False) -> DifferencePrep:
    """Branch-qubit circuit putting every projected difference into amplitudes.

    Register layout (LSB first): k (n' qubits), i (m), j (m), then the flag d.
    The data state |D> = sum_ik x_ik |i>|k> / ||X|| is loaded onto (i, k) on
    one branch of d and onto (j, k) on the other, the free row register is
    spread uniformly, and a final Hadamard on d interferes the branches.
    """
    W = padded_matrix(P, include_pivot)
    rows, cols = W.shape
    m, nk = _bits(rows), _bits(cols)
    width = 2 * m + nk + 1
    # the QVAR oracle wrapped around it adds 2 * (2m + n') + 1 more
    if width + 2 * (width - 1) + 1 > max_qubits:
        raise sim.BudgetError(f"difference circuit for {W.shape} exceeds {max_qubits} qubits")
    k_reg = tuple(range(nk))
    i_reg = tuple(range(nk, nk + m))
    j_reg = tuple(range(nk + m, nk + 2 * m))
    d = nk + 2 * m
    data = W.reshape(-1)  # index i * cols + k
    norm = float(np.linalg.norm(data))
    if norm == 0.0:
        raise ValueError("projected data is identically zero")
    c = Circuit(width, registers={"idx": k_reg + i_reg + j_reg, "d": (d,)})
    c.append(sim.h(d))
    on_i = [sim.h(q) for q in j_reg] + [sim.amplitude_encode(data, k_reg + i_reg)]
    on_j = [sim.h(q) for q in i_reg] + [sim.amplitude_encode(data, k_reg + j_reg)]
    c.extend(g.with_control(d) for g in on_i)
    c.append(sim.x(d))
    c.extend(g.with_control(d) for g in on_j)
    c.append(sim.h(d))
    coeff = -1.0 / (2.0 * math.sqrt(rows) * norm)
    return DifferencePrep(c, d, coeff, rows, cols, W)


def difference_scale(prep: DifferencePrep) -> float:
    """Factor turning the raw QVAR estimate into the mean squared difference.

    The d=1 amplitudes are c * diff with zero mean, so the good-state
    probability is c^2 / 4 times the mean of squares.
    """
    return 4.0 / prep.c ** 2


def quantum_outlier_factor(P: ProjectedDataset, config: EstimatorConfig | None = None,
                           rng_seed: int | None = None,
                           include_pivot: bool = False) -> tuple[float, dict]:
    """QODA score v_p of one pivot and the estimator metadata."""
    config = config or EstimatorConfig()
    prep = build_difference_stateprep(P, include_pivot=include_pivot)
    oracle = build_qvar_oracle(prep.circuit, extra_good={prep.flag: 1}, index="idx")
    est = estimate_amplitude(oracle.circuit, oracle.good, config.method, config.s,
                             config.shots, rng_seed,
                             list(config.schedule) if config.schedule else None,
                             config.backend)
    scale = difference_scale(prep)
    return scale * est.a_hat, {"a_hat": est.a_hat, "scale": scale,
                               "oracle_calls": est.oracle_calls,
                               "qubits": oracle.num_qubits}


def rank_ascending(scores) -> list[int]:
    scores = np.asarray(scores, dtype=float)
    return [int(i) for i in np.lexsort((np.arange(scores.size), scores))]


def qoda(X, threshold: float | None = None, config: EstimatorConfig | None = None,
         contamination: float | None = None, compare_classical: bool = False,
         include_pivot: bool = False) -> OutlierResult:
    """Score every record as pivot and flag the low scorers.

    Records with score <= ``threshold`` are outliers.  Without a threshold the
    lowest ``ceil(contamination * M)`` scores are flagged.
    """
    X = _as_matrix(X)
    M = X.shape[0]
    if M < 3:
        raise ValueError("QODA needs at least three records")
    config = config or EstimatorConfig()
    seeds = config.child_seeds(M)
    scores = np.empty(M)
    details = []
    for p in range(M):
        scores[p], info = quantum_outlier_factor(translate_and_project(X, p), config, seeds[p],
                                                 include_pivot)
        details.append(info)
    ranking = rank_ascending(scores)
    if threshold is not None:
        outliers = [p for p in range(M) if scores[p] <= threshold]
    elif contamination is not None:
        if not 0 < contamination < 1:
            raise ValueError("contamination must lie in (0, 1)")
        outliers = sorted(ranking[:outlier_count(contamination, M)])
    else:
        raise ValueError("give either a threshold or a contamination fraction")
    result = OutlierResult(scores, ranking, outliers, threshold, details=details)
    if compare_classical:
        result.comparison = classical_comparison(X)
    return result


def outlier_count(contamination: float, M: int) -> int:
    # round first so that e.g. 0.02 * 500 does not ceil to 11
    return int(math.ceil(round(contamination * M, 9)))


def classical_comparison(X) -> dict[str, np.ndarray]:
    """Classical per-pivot scores.

    ``angle`` uses the angles between projected records, the quantity the
    difference heuristic is bounded against; ``angle_raw`` those between the
    translated records before projection.
    """
    X = _as_matrix(X)
    delta = np.array([classical_delta_variance(translate_and_project(X, p))
                      for p in range(X.shape[0])])
    return {"angle": classical_abod_scores(X, "angle", "projected"),
            "angle_raw": classical_abod_scores(X, "angle", "raw"), "delta": delta}
