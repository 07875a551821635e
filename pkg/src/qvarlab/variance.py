"""QVAR: variance of amplitude-encoded data through amplitude estimation.

The oracle splits an ancilla ``a`` into two branches.  The a=0 branch keeps
the data on the index register ``i``; the a=1 branch swaps the data into ``q``
and spreads ``i`` and ``e`` uniformly, which carries the mean.  After the
branches interfere, the configuration a=1, e=1...1, q=0...0 holds
(d_t - mean) / (2N) on index t, so its probability is Var(d') / (4N) where
d' is the data scaled to sum(d'^2) = N.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import amplitude as ae
from . import sim
from .amplitude import AmplitudeEstimate, GoodState
from .sim import Circuit, Gate

METHODS = ("exact", "canonical", "mlae")


@dataclass
class QvarOracle:
    circuit: Circuit
    layout: dict[str, tuple[int, ...]]
    good: GoodState
    n: int

    @property
    def num_qubits(self) -> int:
        return self.circuit.num_qubits


@dataclass
class VarianceEstimate:
    variance: float
    a_hat: float
    rescale: float
    method: str
    s: int | None = None
    shots: int = 0
    oracle_calls: int = 0
    padded_from: int = 0
    schedule: list[int] | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "variance": self.variance, "a_hat": self.a_hat, "rescale": self.rescale,
            "method": self.method, "s": self.s, "shots": self.shots,
            "oracle_calls": self.oracle_calls, "padded_from": self.padded_from,
            "schedule": self.schedule,
        }


@dataclass(frozen=True)
class EstimatorConfig:
    """How to turn an oracle into a number: method plus its knobs.

    ``shots == 0`` means exact outcome probabilities.  For ``mlae`` without an
    explicit ``schedule`` the powers are ``schedule_for(s)``.
    """

    method: str = "exact"
    s: int = 6
    shots: int = 0
    schedule: tuple[int, ...] | None = None
    seed: int | None = None
    backend: str = "auto"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.method == "canonical" and self.s < 1:
            raise ValueError("canonical AE needs s >= 1")
        if self.shots < 0:
            raise ValueError("shots must be >= 0")
        if self.schedule is not None:
            object.__setattr__(self, "schedule", tuple(int(m) for m in self.schedule))

    def child_seeds(self, count: int) -> list[int | None]:
        """Independent per-task seeds derived from ``seed``, stable in ``count`` order."""
        if self.seed is None:
            return [None] * count
        children = np.random.SeedSequence(self.seed).spawn(count)
        return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]

    def as_dict(self) -> dict:
        return {"method": self.method, "s": self.s, "shots": self.shots,
                "schedule": list(self.schedule) if self.schedule is not None else None,
                "seed": self.seed, "backend": self.backend}


def _prep_circuit(state_prep: Gate | Circuit, index: str) -> Circuit:
    if isinstance(state_prep, Gate):
        if not state_prep.targets:
            raise ValueError("state preparation acts on no qubits")
        width = max(state_prep.qubits) + 1
        return Circuit(width, [state_prep], {index: tuple(sorted(state_prep.targets))})
    if index not in state_prep.registers:
        raise ValueError(f"state-preparation circuit must declare an {index!r} register")
    return state_prep


def build_qvar_oracle(state_prep: Gate | Circuit, extra_good: dict[int, int] | None = None,
                      index: str = "i") -> QvarOracle:
    """Wrap ``state_prep`` (a gate on n index qubits, or a circuit whose register
    ``index`` is the data index, possibly with registers of its own) in the
    QVAR oracle.

    The preparation keeps its qubit numbers; a, e and q are appended after it.
    ``extra_good`` adds constraints on the preparation's own qubits to the
    good-state predicate.
    """
    prep = _prep_circuit(state_prep, index)
    idx = prep.registers[index]
    n = len(idx)
    if n == 0:
        raise ValueError("QVAR needs at least one index qubit")
    base = prep.num_qubits
    a = base
    e = tuple(range(base + 1, base + 1 + n))
    q = tuple(range(base + 1 + n, base + 1 + 2 * n))
    registers = dict(prep.registers)
    for name in ("a", "e", "q"):
        if name in registers:
            raise ValueError(f"state-preparation register {name!r} collides with the oracle")
    registers.update({"a": (a,), "e": e, "q": q})
    c = Circuit(base + 1 + 2 * n, list(prep.gates), registers)
    c.append(sim.h(a))
    for ek in e:
        c.append(sim.cnot(a, ek))
        c.append(sim.x(ek))
    for ik, qk in zip(idx, q):
        c.append(sim.cswap(a, ik, qk))
    for ik in idx:
        c.append(sim.ch(a, ik))
    for ek in e:
        c.append(sim.ch(a, ek))
    c.append(sim.h(a))
    for qk in q:
        c.append(sim.h(qk))
    constraints = [(a, 1)] + [(ek, 1) for ek in e] + [(qk, 0) for qk in q]
    for qb, bit in (extra_good or {}).items():
        if qb in (a,) + e + q or qb in idx:
            raise ValueError(f"extra constraint on qubit {qb} collides with the QVAR registers")
        constraints.append((qb, bit))
    layout = {"a": (a,), "e": e, "q": q, "i": idx}
    return QvarOracle(c, layout, GoodState(tuple(constraints)), n)


def estimate_amplitude(A: Circuit, good: GoodState, method: str = "exact", s: int = 6,
                       shots: int = 0, rng_seed: int | None = None,
                       schedule: list[int] | None = None, backend: str = "auto") -> AmplitudeEstimate:
    """Dispatch to one of the amplitude estimators."""
    if method == "exact":
        return ae.exact_amplitude(A, good)
    if method == "canonical":
        return ae.canonical_ae(A, good, s, shots=shots, rng_seed=rng_seed, backend=backend)
    if method == "mlae":
        if schedule is None:
            schedule = ae.schedule_for(s)
        return ae.mlae(A, good, schedule, shots_per_round=shots, rng_seed=rng_seed, backend=backend)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def qvar_from_stateprep(A: Gate | Circuit, n: int | None = None, s: int = 6,
                        method: str = "exact", shots: int = 0, rng_seed: int | None = None,
                        schedule: list[int] | None = None, extra_good: dict[int, int] | None = None,
                        index: str = "i", backend: str = "auto") -> AmplitudeEstimate:
    """Raw good-state estimate Var(d')/(4N) for an index-register preparation.

    No classical rescaling is applied; callers that know the data scale own it.
    """
    oracle = build_qvar_oracle(A, extra_good, index)
    if n is not None and n != oracle.n:
        raise ValueError(f"index register has {oracle.n} qubits, expected {n}")
    return estimate_amplitude(oracle.circuit, oracle.good, method, s, shots, rng_seed,
                              schedule, backend)


def classical_variance(values) -> float:
    """Population variance (1/N normalization), two-pass."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("variance of an empty sequence")
    mean = v.sum() / v.size
    dev = v - mean
    return float((dev @ dev) / v.size)


def pad_with_mean(values) -> np.ndarray:
    """Extend to the next power of two with copies of the sample mean."""
    v = np.asarray(values, dtype=float).ravel()
    size = 1 << max(0, int(np.ceil(np.log2(v.size))))
    if size == v.size:
        return v.copy()
    return np.concatenate([v, np.full(size - v.size, v.mean())])


def qvar(values, s: int = 6, method: str = "exact", shots: int = 0,
         rng_seed: int | None = None, schedule: list[int] | None = None,
         backend: str = "auto") -> VarianceEstimate:
    """Estimate the population variance of ``values`` with the QVAR oracle."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 2:
        raise ValueError("QVAR needs at least two values")
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    padded = pad_with_mean(v)
    norm2 = float(padded @ padded)
    if method == "mlae" and schedule is None:
        schedule = ae.schedule_for(s)
    if norm2 == 0.0:
        return VarianceEstimate(0.0, 0.0, 1.0, method, s, shots, 0, v.size, schedule)
    rescale = 4.0 * norm2 * padded.size / v.size
    est = qvar_from_stateprep(sim.amplitude_encode(padded), s=s, method=method, shots=shots,
                              rng_seed=rng_seed, schedule=schedule, backend=backend)
    return VarianceEstimate(rescale * est.a_hat, est.a_hat, rescale, method,
                            est.s if method == "canonical" else s, shots, est.oracle_calls,
                            v.size, est.schedule)
