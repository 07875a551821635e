"""Quantum variance estimation (QVAR) and its applications to feature selection and
angle-based outlier detection, on an exact state-vector simulator."""

from .amplitude import AmplitudeEstimate, GoodState, canonical_ae, exact_amplitude, mlae
from .datasets import (Dataset, DatasetError, SynthFsSpec, SynthOdSpec, gen_fs, gen_od,
                       load_csv, load_results, save_results)
from .hqfs import classical_feature_selection, feature_ranking
from .metrics import acc, error_stats, precision_at_n, rbo
from .qoda import classical_abod_scores
from .sim import BudgetError, Circuit, Gate, StateVector, run_circuit
from .variance import (EstimatorConfig, VarianceEstimate, build_qvar_oracle,
                       classical_variance, qvar)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeEstimate", "BudgetError", "Circuit", "Dataset", "DatasetError",
    "EstimatorConfig", "Gate", "GoodState", "StateVector", "SynthFsSpec", "SynthOdSpec",
    "VarianceEstimate", "acc", "build_qvar_oracle", "canonical_ae", "classical_abod_scores",
    "classical_feature_selection", "classical_variance", "error_stats", "exact_amplitude",
    "feature_ranking", "gen_fs", "gen_od", "load_csv", "load_results", "mlae",
    "precision_at_n", "qvar", "rbo", "run_circuit", "save_results",
]
