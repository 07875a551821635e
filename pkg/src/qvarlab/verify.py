"""Self-check suite behind ``qvarlab verify``: quick invariant groups with pass/fail."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import amplitude as ae
from . import qoda as qd
from . import sim
from .datasets import SynthOdSpec, gen_od
from .variance import build_qvar_oracle, classical_variance, qvar


@dataclass
class CheckResult:
    group: str
    passed: bool
    detail: str


def _rng(seed: int, salt: int) -> np.random.Generator:
    return np.random.default_rng([seed, salt])


def check_amplitude_identity(seed: int) -> CheckResult:
    """Good amplitudes equal (d'_t - mean d') / (2N); their mass equals Var(d') / (4N)."""
    rng = _rng(seed, 1)
    worst = 0.0
    for n_bits in (1, 2, 3, 4):
        N = 2 ** n_bits
        for _ in range(5):
            d = rng.normal(size=N)
            oracle = build_qvar_oracle(sim.amplitude_encode(d))
            state = sim.run_circuit(oracle.circuit).tensor()
            nq = oracle.num_qubits
            idx: list = [slice(None)] * nq
            for q, b in oracle.good.constraints:
                idx[nq - 1 - q] = b
            # the free axes are the index register, most significant first
            amps = state[tuple(idx)].reshape(-1)
            dp = d * math.sqrt(N) / np.linalg.norm(d)
            expect = (dp - dp.mean()) / (2 * N)
            worst = max(worst, float(np.max(np.abs(amps - expect))))
            prob = sim.marginal_probability(sim.run_circuit(oracle.circuit),
                                            oracle.good.as_dict())
            worst = max(worst, abs(prob - classical_variance(dp) / (4 * N)))
    return CheckResult("prop1", bool(worst <= 1e-10), f"max deviation {worst:.2e}")


def check_variance_recovery(seed: int) -> CheckResult:
    rng = _rng(seed, 2)
    worst = 0.0
    for _ in range(20):
        v = rng.normal(scale=rng.uniform(0.1, 5), size=int(rng.integers(2, 20)))
        worst = max(worst, abs(qvar(v).variance - classical_variance(v)))
    return CheckResult("qvar", bool(worst <= 1e-9), f"max |qvar - var| {worst:.2e}")


def check_difference_bound(seed: int) -> CheckResult:
    entries = 0
    worst = math.inf
    for k in range(3):
        X, _ = gen_od(SynthOdSpec(records=20, dims=2 + k, contamination=0.1, seed=seed * 10 + k))
        for e in qd.bound_report(X.records):
            entries += 1
            worst = min(worst, e.gap)
    return CheckResult("prop2", bool(worst >= -1e-12),
                       f"{entries} pivots, smallest gap {worst:.2e}")


def check_ae_success_rate(seed: int) -> CheckResult:
    """Single-readout canonical AE, s = 5, against the 8/pi^2 success bound."""
    s, trials = 5, 40
    M = 2 ** s
    bound = math.pi / M + math.pi ** 2 / M ** 2
    rng = _rng(seed, 3)
    hits = 0
    for _ in range(trials):
        A = sim.Circuit(2, [sim.amplitude_encode(rng.normal(size=4))])
        good = {0: 1}
        a = ae.exact_amplitude(A, good).a_hat
        est = ae.canonical_ae(A, good, s, shots=1, rng_seed=int(rng.integers(2 ** 32)))
        hits += abs(est.a_hat - a) <= bound
    return CheckResult("ae", bool(hits / trials >= 8 / math.pi ** 2),
                       f"{hits}/{trials} within pi/2^s + pi^2/2^2s")


def check_qoda_equivalence(seed: int) -> CheckResult:
    rng = _rng(seed, 4)
    X = rng.normal(size=(4, 1))
    worst = 0.0
    for p in range(4):
        P = qd.translate_and_project(X, p)
        v, _ = qd.quantum_outlier_factor(P)
        worst = max(worst, abs(v - qd.mean_square_difference(P)))
    return CheckResult("qoda", bool(worst <= 1e-9), f"max |v_p - brute force| {worst:.2e}")


GROUPS: dict[str, Callable[[int], CheckResult]] = {
    "prop1": check_amplitude_identity,
    "qvar": check_variance_recovery,
    "prop2": check_difference_bound,
    "ae": check_ae_success_rate,
    "qoda": check_qoda_equivalence,
}


def run_checks(groups=None, seed: int = 0) -> list[CheckResult]:
    names = list(GROUPS) if not groups else list(groups)
    unknown = [g for g in names if g not in GROUPS]
    if unknown:
        raise ValueError(f"unknown check group(s) {unknown}; choose from {list(GROUPS)}")
    return [GROUPS[g](seed) for g in names]
