"""Amplitude estimation: canonical phase-estimation AE and maximum-likelihood AE.

Both estimators have two interchangeable backends:

``circuit``
    builds and simulates the actual circuits (phase register, controlled
    Grover powers, inverse QFT; or Q^m A for MLAE).
``analytic``
    simulates only A to get the exact good-state probability ``a`` and then
    uses the fact that Q acts as a rotation by 2*theta_a on the two-dimensional
    good/bad subspace, which fixes the outcome distributions in closed form.

``auto`` picks the circuit backend while the register fits ``CIRCUIT_QUBITS``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import sim
from .sim import Circuit, Gate

CIRCUIT_QUBITS = 14
THETA_EPS = 1e-9
GRID_POINTS = 4096
THETA_XTOL = 1e-10
DEFAULT_SCHEDULE = (0, 1, 2, 4, 8)
DEFAULT_SHOTS_PER_ROUND = 128


@dataclass(frozen=True)
class GoodState:
    """Basis configurations with ``qubit == bit`` for every listed constraint."""

    constraints: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.constraints:
            raise ValueError("a good-state predicate needs at least one constraint")
        qubits = [q for q, _ in self.constraints]
        if len(set(qubits)) != len(qubits):
            raise ValueError("duplicate qubit in good-state predicate")
        if any(b not in (0, 1) for _, b in self.constraints):
            raise ValueError("required bits must be 0 or 1")

    @classmethod
    def of(cls, constraint: Mapping[int, int] | Sequence[tuple[int, int]]) -> "GoodState":
        items = constraint.items() if isinstance(constraint, Mapping) else constraint
        return cls(tuple((int(q), int(b)) for q, b in items))

    def as_dict(self) -> dict[int, int]:
        return dict(self.constraints)

    def check(self, circuit: Circuit):
        for q, _ in self.constraints:
            if not 0 <= q < circuit.num_qubits:
                raise ValueError(f"good-state qubit {q} is outside the circuit")


@dataclass
class AmplitudeEstimate:
    a_hat: float
    method: str
    s: int | None = None
    schedule: list[int] | None = None
    shots: int = 0
    # canonical: 2^s - 1 Grover steps plus one A per readout; mlae: sum (2m+1) A per shot
    oracle_calls: int = 0
    backend: str = ""
    a_exact: float | None = None
    distribution: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.a_hat = float(min(1.0, max(0.0, self.a_hat)))


def _as_good(good) -> GoodState:
    return good if isinstance(good, GoodState) else GoodState.of(good)


def _phase_flip(constraints: Sequence[tuple[int, int]]) -> list[Gate]:
    """Gates multiplying by -1 exactly the basis states matching ``constraints``."""
    (t, bit), rest = constraints[0], tuple(constraints[1:])
    flip = Gate(sim.Z, (t,), rest)
    if bit == 1:
        return [flip]
    return [sim.x(t), flip, sim.x(t)]


def grover_operator(A: Circuit, good) -> Circuit:
    """Q = -A S_0 A^dagger S_good over the qubits of A."""
    good = _as_good(good)
    good.check(A)
    n = A.num_qubits
    q = Circuit(n, registers=dict(A.registers))
    q.extend(_phase_flip(good.constraints))
    q.extend(sim.adjoint(A).gates)
    q.extend(_phase_flip([(k, 0) for k in range(n)]))
    q.extend(A.gates)
    q.append(sim.gphase(np.pi))
    return q


def exact_amplitude(A: Circuit, good) -> AmplitudeEstimate:
    """Good-state probability of A|0> read straight from the simulator."""
    good = _as_good(good)
    good.check(A)
    a = sim.projected_probability(A, good.as_dict())
    return AmplitudeEstimate(a, "exact", oracle_calls=1, backend="statevector", a_exact=a)


def _theta(a: float) -> float:
    return float(np.arcsin(np.sqrt(min(1.0, max(0.0, a)))))


def _fejer(delta: np.ndarray, s: int) -> np.ndarray:
    """Probability of reading y when the scaled phase is y + delta."""
    M = 2 ** s
    delta = np.asarray(delta, dtype=float)
    num = np.sin(np.pi * delta) ** 2
    den = (M * np.sin(np.pi * delta / M)) ** 2
    out = np.ones_like(delta)
    nz = np.abs(np.sin(np.pi * delta / M)) > 1e-15
    out[nz] = num[nz] / den[nz]
    return out


def canonical_distribution(a: float, s: int) -> np.ndarray:
    """Exact distribution of the phase-register readout for amplitude ``a``."""
    M = 2 ** s
    omega = _theta(a) / np.pi  # eigenphases of Q are +-omega (in turns)
    y = np.arange(M)
    dist = 0.5 * (_fejer(M * omega - y, s) + _fejer(-M * omega - y, s))
    return dist / dist.sum()


def _circuit_distribution(A: Circuit, good: GoodState, s: int) -> np.ndarray:
    n = A.num_qubits
    phase = list(range(n, n + s))
    Q = grover_operator(A, good)
    circ = Circuit(n + s, registers={"phase": tuple(phase)})
    circ.extend(A.gates)
    circ.extend(sim.h(p) for p in phase)
    for k, p in enumerate(phase):
        cq = sim.controlled(Q, p)
        for _ in range(2 ** k):
            circ.extend(cq.gates)
    M = 2 ** s
    xy = np.outer(np.arange(M), np.arange(M))
    iqft = np.exp(-2j * np.pi * xy / M) / np.sqrt(M)
    circ.append(sim.unitary(iqft, phase, label="iqft"))
    state = sim.run_circuit(circ)
    return sim.register_distribution(state, phase)


def _pick_backend(backend: str, width: int) -> str:
    if backend == "auto":
        return "circuit" if width <= CIRCUIT_QUBITS else "analytic"
    if backend not in ("circuit", "analytic"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def canonical_ae(A: Circuit, good, s: int, shots: int = 0, rng_seed: int | None = None,
                 backend: str = "auto") -> AmplitudeEstimate:
    """Phase-estimation AE with ``s`` readout qubits.

    With ``shots == 0`` the most likely readout is used; otherwise ``shots``
    readouts are sampled and the most frequent value of ``sin^2(pi y / 2^s)``
    wins (y and 2^s - y give the same estimate and are pooled).
    """
    if s < 1:
        raise ValueError("canonical AE needs s >= 1")
    if shots < 0:
        raise ValueError("shots must be >= 0")
    good = _as_good(good)
    good.check(A)
    backend = _pick_backend(backend, A.num_qubits + s)
    M = 2 ** s
    a_exact = None
    if backend == "circuit":
        dist = _circuit_distribution(A, good, s)
    else:
        a_exact = sim.projected_probability(A, good.as_dict())
        dist = canonical_distribution(a_exact, s)
    # pool y with its mirror 2^s - y
    folded = np.zeros(M // 2 + 1)
    for y, p in enumerate(dist):
        folded[min(y, M - y)] += p
    if shots == 0:
        y_hat = int(np.argmax(folded))
    else:
        rng = np.random.default_rng(rng_seed)
        counts = rng.multinomial(shots, np.clip(folded, 0, None) / folded.sum())
        y_hat = int(np.argmax(counts))
    a_hat = np.sin(np.pi * y_hat / M) ** 2
    return AmplitudeEstimate(a_hat, "canonical", s=s, shots=shots,
                             oracle_calls=M * max(shots, 1), backend=backend,
                             a_exact=a_exact, distribution=dist)


def _grover_power_probs(A: Circuit, good: GoodState, schedule: Sequence[int]) -> np.ndarray:
    """Good-state probability of Q^m A|0> for each m, by direct simulation."""
    Q = grover_operator(A, good)
    state = sim.run_circuit(A)
    done = 0
    probs = []
    for m in sorted(set(schedule)):
        for _ in range(m - done):
            state = sim.run_circuit(Q, state)
        done = m
        probs.append((m, sim.marginal_probability(state, good.as_dict())))
    lookup = dict(probs)
    return np.array([lookup[m] for m in schedule])


def _neg_log_likelihood(theta: float, ms: np.ndarray, hits: np.ndarray, totals: np.ndarray) -> float:
    theta = min(max(theta, THETA_EPS), np.pi / 2 - THETA_EPS)
    angle = (2 * ms + 1) * theta
    p = np.clip(np.sin(angle) ** 2, 1e-300, 1.0)
    q = np.clip(np.cos(angle) ** 2, 1e-300, 1.0)
    return float(-(hits * np.log(p) + (totals - hits) * np.log(q)).sum())


def mle_amplitude(schedule: Sequence[int], hits: Sequence[float], totals: Sequence[float]) -> float:
    """Maximum-likelihood amplitude from good counts ``hits`` out of ``totals``.

    A dense grid over theta in [eps, pi/2 - eps] locates the peak, which is then
    refined by a bounded scalar minimization between the neighbouring grid points.
    """
    ms = np.asarray(schedule, dtype=float)
    hits = np.asarray(hits, dtype=float)
    totals = np.asarray(totals, dtype=float)
    lo, hi = THETA_EPS, np.pi / 2 - THETA_EPS
    grid = np.linspace(lo, hi, GRID_POINTS)
    angle = np.outer(grid, 2 * ms + 1)
    with np.errstate(divide="ignore"):
        ll = (hits * np.log(np.clip(np.sin(angle) ** 2, 1e-300, 1))
              + (totals - hits) * np.log(np.clip(np.cos(angle) ** 2, 1e-300, 1))).sum(axis=1)
    i = int(np.argmax(ll))
    left, right = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
    res = minimize_scalar(_neg_log_likelihood, bounds=(left, right), method="bounded",
                          args=(ms, hits, totals), options={"xatol": THETA_XTOL})
    theta = float(res.x) if res.fun <= -ll[i] else float(grid[i])
    # the clamp only guards the logarithms; a peak on it means the boundary itself
    if theta - lo < 2 * THETA_XTOL:
        return 0.0
    if hi - theta < 2 * THETA_XTOL:
        return 1.0
    return float(np.sin(theta) ** 2)


def mlae(A: Circuit, good, schedule: Sequence[int] = DEFAULT_SCHEDULE,
         shots_per_round: int = DEFAULT_SHOTS_PER_ROUND, rng_seed: int | None = None,
         backend: str = "auto") -> AmplitudeEstimate:
    """Maximum-likelihood AE over the Grover powers in ``schedule``.

    ``shots_per_round == 0`` feeds the exact probabilities into the likelihood.
    """
    schedule = [int(m) for m in schedule]
    if not schedule:
        raise ValueError("MLAE needs a non-empty schedule")
    if any(m < 0 for m in schedule):
        raise ValueError("schedule entries must be >= 0")
    if shots_per_round < 0:
        raise ValueError("shots_per_round must be >= 0")
    good = _as_good(good)
    good.check(A)
    backend = _pick_backend(backend, A.num_qubits)
    a_exact = None
    if backend == "circuit":
        probs = _grover_power_probs(A, good, schedule)
    else:
        a_exact = sim.projected_probability(A, good.as_dict())
        th = _theta(a_exact)
        probs = np.sin((2 * np.asarray(schedule) + 1) * th) ** 2
    probs = np.clip(probs, 0.0, 1.0)
    if shots_per_round == 0:
        hits, totals = probs, np.ones(len(schedule))
    else:
        rng = np.random.default_rng(rng_seed)
        hits = rng.binomial(shots_per_round, probs).astype(float)
        totals = np.full(len(schedule), float(shots_per_round))
    a_hat = mle_amplitude(schedule, hits, totals)
    calls = sum((2 * m + 1) * max(shots_per_round, 1) for m in schedule)
    return AmplitudeEstimate(a_hat, "mlae", schedule=schedule, shots=shots_per_round,
                             oracle_calls=calls, backend=backend, a_exact=a_exact)


def schedule_for(s: int) -> list[int]:
    """Exponential MLAE schedule [0, 1, 2, ..., 2^(s-1)] indexed by ``s``."""
    if s < 0:
        raise ValueError("s must be >= 0")
    return [0] + [2 ** j for j in range(s)]
