"""Synthetic generators, CSV ingestion and JSON result persistence.

All randomness goes through numpy's PCG64 seeded from a ``SeedSequence``;
each generated column (or block) gets its own spawned child stream, so a
column's values do not depend on how many other columns are drawn.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

OUTLIER_BOX = 6.0


class DatasetError(ValueError):
    """Malformed input data; the message names the offending row/column."""


@dataclass
class Dataset:
    records: np.ndarray  # M x N
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        X = np.asarray(self.records, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise DatasetError("records must form a matrix")
        if X.shape[0] < 2:
            raise DatasetError(f"need at least 2 records, got {X.shape[0]}")
        if not np.all(np.isfinite(X)):
            r, c = np.argwhere(~np.isfinite(X))[0]
            raise DatasetError(f"non-finite value at row {r}, column {c}")
        self.records = X
        if not self.feature_names:
            self.feature_names = [f"f{j}" for j in range(X.shape[1])]
        if len(self.feature_names) != X.shape[1]:
            raise DatasetError("one name per feature column is required")

    @property
    def shape(self) -> tuple[int, int]:
        return self.records.shape


@dataclass(frozen=True)
class SynthFsSpec:
    records: int = 32
    informative: int = 7
    uninformative: int = 3
    noise_sigma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if min(self.records, self.informative, self.uninformative) < 0:
            raise ValueError("counts must be non-negative")
        if self.noise_sigma <= 0:
            raise ValueError("noise_sigma must be positive")


@dataclass(frozen=True)
class SynthOdSpec:
    records: int = 500
    dims: int = 20
    contamination: float = 0.02
    seed: int = 0
    # reject uniform outliers closer than this to every inlier (0 disables)
    min_outlier_distance: float = 0.0

    def __post_init__(self):
        if self.records < 1 or self.dims < 1:
            raise ValueError("records and dims must be positive")
        if not 0.0 < self.contamination < 1.0:
            raise ValueError("contamination must lie in (0, 1)")
        if self.min_outlier_distance < 0:
            raise ValueError("min_outlier_distance must be >= 0")


def gen_fs(spec: SynthFsSpec) -> Dataset:
    """Informative columns ~ U[-1, 1], uninformative ~ N(0, sigma^2).

    Columns are ordered informative first; names carry the role.
    """
    ncols = spec.informative + spec.uninformative
    streams = np.random.SeedSequence(spec.seed).spawn(ncols)
    cols = []
    for j, ss in enumerate(streams):
        rng = np.random.Generator(np.random.PCG64(ss))
        if j < spec.informative:
            cols.append(rng.uniform(-1.0, 1.0, spec.records))
        else:
            cols.append(rng.normal(0.0, spec.noise_sigma, spec.records))
    names = [f"inf{j}" for j in range(spec.informative)] + [
        f"uninf{j}" for j in range(spec.uninformative)]
    X = np.column_stack(cols) if cols else np.empty((spec.records, 0))
    return Dataset(X, names)


def gen_od(spec: SynthOdSpec) -> tuple[Dataset, list[int]]:
    """Gaussian inliers N(0, I) plus ceil(c * M) uniform outliers on [-6, 6]^dims.

    Rows are shuffled; the returned labels are the outlier row indices.
    """
    n_out = int(math.ceil(round(spec.contamination * spec.records, 9)))
    n_in = spec.records - n_out
    s_in, s_out, s_perm = np.random.SeedSequence(spec.seed).spawn(3)
    inliers = np.random.Generator(np.random.PCG64(s_in)).standard_normal((n_in, spec.dims))
    rng_out = np.random.Generator(np.random.PCG64(s_out))
    outliers = np.empty((n_out, spec.dims))
    for r in range(n_out):
        for _ in range(10_000):
            cand = rng_out.uniform(-OUTLIER_BOX, OUTLIER_BOX, spec.dims)
            if spec.min_outlier_distance == 0.0 or n_in == 0 or np.min(
                    np.linalg.norm(inliers - cand, axis=1)) >= spec.min_outlier_distance:
                break
        else:
            raise ValueError("could not place an outlier at the requested distance")
        outliers[r] = cand
    X = np.vstack([inliers, outliers])
    perm = np.random.Generator(np.random.PCG64(s_perm)).permutation(spec.records)
    X = X[perm]
    labels = sorted(int(i) for i in np.flatnonzero(perm >= n_in))
    return Dataset(X, [f"x{j}" for j in range(spec.dims)]), labels


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path) -> Dataset:
    """Read a rectangular numeric CSV with an optional single header line."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DatasetError(f"{path}: no data")
    header = None
    if not all(_is_number(c.strip()) for c in rows[0]):
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    if not rows:
        raise DatasetError(f"{path}: header but no data rows")
    width = len(header) if header else len(rows[0])
    data = np.empty((len(rows), width))
    first = 2 if header else 1
    for r, row in enumerate(rows):
        line = r + first
        if len(row) != width:
            raise DatasetError(f"{path}: line {line} has {len(row)} fields, expected {width}")
        for c, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise DatasetError(f"{path}: line {line}, column {c + 1}: not a number: {cell!r}") from None
            if not math.isfinite(value):
                raise DatasetError(f"{path}: line {line}, column {c + 1}: non-finite value {cell!r}")
            data[r, c] = value
    return Dataset(data, header or [])


def save_csv(path, data: Dataset) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(data.feature_names)
        for row in data.records:
            w.writerow([repr(float(v)) for v in row])


def save_labels(path, labels) -> None:
    Path(path).write_text("".join(f"{int(i)}\n" for i in labels))


def load_labels(path) -> list[int]:
    return [int(line) for line in Path(path).read_text().split()]


RESULT_KEYS = ("task", "config", "estimates", "ranking", "metrics", "seed")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def make_result(task: str, config: dict, estimates, ranking, metrics: dict | None = None,
                seed: int | None = None, **extra) -> dict:
    if task not in ("qvar", "hqfs", "qoda"):
        raise ValueError(f"unknown task {task!r}")
    doc = {"task": task, "config": config, "estimates": estimates, "ranking": ranking,
           "metrics": metrics or {}, "seed": seed}
    doc.update(extra)
    return _jsonable(doc)


def validate_result(doc: dict) -> None:
    missing = [k for k in RESULT_KEYS if k not in doc]
    if missing:
        raise DatasetError(f"result document lacks keys {missing}")
    if doc["task"] not in ("qvar", "hqfs", "qoda"):
        raise DatasetError(f"unknown task {doc['task']!r}")
    if not isinstance(doc["config"], dict) or not isinstance(doc["metrics"], dict):
        raise DatasetError("config and metrics must be objects")
    if not isinstance(doc["estimates"], list) or not isinstance(doc["ranking"], list):
        raise DatasetError("estimates and ranking must be arrays")


def save_results(path, result: dict) -> None:
    doc = _jsonable(result)
    validate_result(doc)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_results(path) -> dict:
    doc = json.loads(Path(path).read_text())
    validate_result(doc)
    return doc
