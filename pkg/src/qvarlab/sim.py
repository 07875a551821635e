"""Dense state-vector simulator for the small gate set used by the QVAR circuits.

Qubit 0 is the least significant bit of a basis index.  Internally a state of
``q`` qubits is held as a tensor of shape ``(2,) * q`` in C order, so qubit ``k``
lives on tensor axis ``q - 1 - k`` and ``tensor.reshape(-1)`` is the usual
amplitude vector.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

STATE_ATOL = 1e-10
PREP_ATOL = 1e-12
MAX_QUBITS = 27

_SQRT1_2 = 1.0 / np.sqrt(2.0)

# gate kinds understood by the kernel
H, X, Z, SWAP, GPHASE, UNITARY = "h", "x", "z", "swap", "gphase", "unitary"
_SELF_INVERSE = {H, X, Z, SWAP}


class BudgetError(ValueError):
    """Raised when a circuit needs more qubits than the simulator allows."""


@dataclass(frozen=True, eq=False)
class Gate:
    """One operation: a base kind on ``targets`` under (qubit, polarity) ``controls``.

    ``matrix`` holds the dense unitary for ``unitary`` gates (state preparation
    included) and ``phase`` the angle of a ``gphase`` gate.  ``label`` is cosmetic.
    """

    kind: str
    targets: tuple[int, ...]
    controls: tuple[tuple[int, int], ...] = ()
    matrix: np.ndarray | None = None
    phase: float = 0.0
    label: str = ""
    payload: np.ndarray | None = None

    def __post_init__(self):
        qubits = list(self.targets) + [c for c, _ in self.controls]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"{self.name}: targets and controls must be disjoint, got {qubits}")
        if any(q < 0 for q in qubits):
            raise ValueError(f"{self.name}: negative qubit index in {qubits}")
        if any(b not in (0, 1) for _, b in self.controls):
            raise ValueError(f"{self.name}: control polarity must be 0 or 1")
        arity = {H: 1, X: 1, Z: 1, SWAP: 2, GPHASE: 0}
        if self.kind in arity and len(self.targets) != arity[self.kind]:
            raise ValueError(f"{self.kind} gate takes {arity[self.kind]} targets")
        if self.kind == UNITARY:
            dim = 2 ** len(self.targets)
            if self.matrix is None or self.matrix.shape != (dim, dim):
                raise ValueError(f"{self.name}: matrix must be {dim}x{dim}")
        elif self.kind not in arity:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    @property
    def name(self) -> str:
        return self.label or self.kind

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + tuple(c for c, _ in self.controls)

    def with_control(self, qubit: int, polarity: int = 1) -> "Gate":
        return Gate(self.kind, self.targets, self.controls + ((qubit, polarity),),
                    self.matrix, self.phase, self.label, self.payload)

    def inverse(self) -> "Gate":
        if self.kind in _SELF_INVERSE:
            return self
        if self.kind == GPHASE:
            return Gate(GPHASE, (), self.controls, phase=-self.phase, label=self.label)
        return Gate(UNITARY, self.targets, self.controls, self.matrix.conj().T,
                    label=self.label + "_dg" if self.label else "", payload=self.payload)

    def shifted(self, mapping: Mapping[int, int] | Sequence[int]) -> "Gate":
        """Relabel qubits through ``mapping`` (old index -> new index)."""
        m = mapping.__getitem__
        return Gate(self.kind, tuple(m(t) for t in self.targets),
                    tuple((m(c), b) for c, b in self.controls),
                    self.matrix, self.phase, self.label, self.payload)


def h(q: int) -> Gate:
    return Gate(H, (q,))


def x(q: int) -> Gate:
    return Gate(X, (q,))


def z(q: int) -> Gate:
    return Gate(Z, (q,))


def cnot(control: int, target: int) -> Gate:
    return Gate(X, (target,), ((control, 1),))


def ch(control: int, target: int) -> Gate:
    return Gate(H, (target,), ((control, 1),))


def cswap(control: int, a: int, b: int) -> Gate:
    return Gate(SWAP, (a, b), ((control, 1),))


def gphase(phase: float) -> Gate:
    return Gate(GPHASE, (), phase=phase)


def unitary(matrix: np.ndarray, targets: Sequence[int], label: str = "") -> Gate:
    """Dense gate; ``targets[0]`` is the least significant bit of the matrix index."""
    return Gate(UNITARY, tuple(targets), matrix=np.asarray(matrix, dtype=complex), label=label)


def _householder_completion(v: np.ndarray) -> np.ndarray:
    # Real orthogonal matrix whose first column is the unit vector v.
    dim = v.size
    w = -v.astype(float)
    w[0] += 1.0
    norm2 = float(w @ w)
    if norm2 < 1e-30:
        return np.eye(dim)
    return np.eye(dim) - 2.0 * np.outer(w, w) / norm2


def amplitude_encode(values: Sequence[float], targets: Sequence[int] | None = None) -> Gate:
    """State preparation gate mapping |0...0> to sum_t v_t/||v|| |t>.

    The unitary is a Householder reflection, so its first column is the
    normalized data and the remaining columns are an arbitrary completion.
    """
    v = np.asarray(values, dtype=float).ravel()
    n = int(np.log2(v.size)) if v.size else 0
    if v.size == 0 or 2 ** n != v.size:
        raise ValueError(f"amplitude encoding needs a power-of-two length, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("amplitude encoding needs finite values")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("cannot amplitude-encode the zero vector")
    v = v / norm
    if targets is None:
        targets = range(n)
    targets = tuple(targets)
    if len(targets) != n:
        raise ValueError(f"payload of length {v.size} needs {n} targets, got {len(targets)}")
    return Gate(UNITARY, targets, matrix=_householder_completion(v).astype(complex),
                label="prep", payload=v)


@dataclass
class Circuit:
    """Ordered gate list over ``num_qubits`` with named register ranges."""

    num_qubits: int
    gates: list[Gate] = field(default_factory=list)
    registers: dict[str, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.num_qubits < 0:
            raise ValueError("num_qubits must be non-negative")
        seen: set[int] = set()
        for name, qubits in self.registers.items():
            qubits = tuple(qubits)
            self.registers[name] = qubits
            if any(q < 0 or q >= self.num_qubits for q in qubits):
                raise ValueError(f"register {name!r} leaves the circuit: {qubits}")
            if seen & set(qubits):
                raise ValueError(f"register {name!r} overlaps another register")
            seen |= set(qubits)
        for g in self.gates:
            self._check(g)

    def _check(self, gate: Gate):
        if any(q >= self.num_qubits for q in gate.qubits):
            raise ValueError(f"{gate.name} touches qubit outside [0, {self.num_qubits})")

    def append(self, gate: Gate) -> "Circuit":
        self._check(gate)
        self.gates.append(gate)
        return self

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def compose(self, other: "Circuit", qubits: Sequence[int] | None = None) -> "Circuit":
        """Append ``other`` with its qubit ``k`` wired to ``qubits[k]``."""
        if qubits is None:
            qubits = range(other.num_qubits)
        qubits = list(qubits)
        if len(qubits) != other.num_qubits:
            raise ValueError("qubit map does not match the composed circuit")
        return self.extend(g.shifted(qubits) for g in other.gates)

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)


def controlled(circuit: Circuit, control: int, polarity: int = 1) -> Circuit:
    """Every gate gains one more control.  ``control`` may lie beyond the circuit."""
    if any(control in g.qubits for g in circuit.gates) or any(
            control in r for r in circuit.registers.values()):
        raise ValueError(f"control qubit {control} collides with the circuit")
    width = max(circuit.num_qubits, control + 1)
    return Circuit(width, [g.with_control(control, polarity) for g in circuit.gates],
                   dict(circuit.registers))


def adjoint(circuit: Circuit) -> Circuit:
    return Circuit(circuit.num_qubits, [g.inverse() for g in reversed(circuit.gates)],
                   dict(circuit.registers))


class StateVector:
    """Amplitudes of ``num_qubits`` qubits; the only mutable simulator object."""

    def __init__(self, amplitudes: np.ndarray | Sequence[complex]):
        amps = np.array(amplitudes, dtype=complex).ravel()
        n = int(np.log2(amps.size)) if amps.size else -1
        if n < 0 or 2 ** n != amps.size:
            raise ValueError(f"state length must be a power of two, got {amps.size}")
        self.num_qubits = n
        self.amplitudes = amps

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        if num_qubits > MAX_QUBITS:
            raise BudgetError(f"{num_qubits} qubits exceeds the simulator budget of {MAX_QUBITS}")
        amps = np.zeros(2 ** num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(amps)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "StateVector":
        s = cls.zero(num_qubits)
        s.amplitudes[0] = 0.0
        s.amplitudes[index] = 1.0
        return s

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def __repr__(self):
        return f"StateVector(num_qubits={self.num_qubits})"


def _apply(tensor: np.ndarray, gate: Gate, axis_of) -> None:
    """Apply ``gate`` in place; ``axis_of(q)`` gives the tensor axis of qubit q."""
    # length-1 slices keep every selection a view, even when all axes are fixed
    idx: list = [slice(None)] * tensor.ndim
    for c, b in gate.controls:
        idx[axis_of(c)] = slice(b, b + 1)
    view = tensor[tuple(idx)] if gate.controls else tensor
    vax = axis_of

    kind = gate.kind
    if kind == GPHASE:
        view *= np.exp(1j * gate.phase)
        return
    if kind == UNITARY:
        k = len(gate.targets)
        # C-order reshape: the leading matrix axis is the most significant target
        axes = [vax(t) for t in reversed(gate.targets)]
        u = gate.matrix.reshape((2,) * (2 * k))
        out = np.tensordot(u, view, axes=(list(range(k, 2 * k)), axes))
        view[...] = np.moveaxis(out, list(range(k)), axes)
        return
    if kind == SWAP:
        a, b = vax(gate.targets[0]), vax(gate.targets[1])
        i01: list = [slice(None)] * view.ndim
        i10: list = [slice(None)] * view.ndim
        i01[a], i01[b] = slice(0, 1), slice(1, 2)
        i10[a], i10[b] = slice(1, 2), slice(0, 1)
        tmp = view[tuple(i01)].copy()
        view[tuple(i01)] = view[tuple(i10)]
        view[tuple(i10)] = tmp
        return
    t = vax(gate.targets[0])
    i0: list = [slice(None)] * view.ndim
    i1: list = [slice(None)] * view.ndim
    i0[t], i1[t] = slice(0, 1), slice(1, 2)
    s0, s1 = view[tuple(i0)], view[tuple(i1)]
    if kind == Z:
        s1 *= -1.0
    elif kind == X:
        tmp = s0.copy()
        s0[...] = s1
        s1[...] = tmp
    else:  # H
        tmp = s0.copy()
        s0 += s1
        s0 *= _SQRT1_2
        s1 *= -1.0
        s1 += tmp
        s1 *= _SQRT1_2


def _check_gate(gate: Gate, num_qubits: int) -> None:
    if any(q >= num_qubits for q in gate.qubits):
        raise ValueError(f"{gate.name} touches qubit outside [0, {num_qubits})")
    if gate.payload is not None and abs(np.linalg.norm(gate.payload) - 1.0) > PREP_ATOL:
        raise ValueError(f"{gate.name}: state-preparation payload is not unit norm")


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Return a new state with ``gate`` applied."""
    _check_gate(gate, state.num_qubits)
    out = state.copy()
    n = out.num_qubits
    _apply(out.tensor(), gate, lambda q: n - 1 - q)
    return out


def run_circuit(circuit: Circuit, initial: StateVector | None = None) -> StateVector:
    """Apply the gates in order to ``initial`` (default |0...0>)."""
    if initial is None:
        initial = StateVector.zero(circuit.num_qubits)
    if initial.num_qubits != circuit.num_qubits:
        raise ValueError(f"circuit has {circuit.num_qubits} qubits, state has {initial.num_qubits}")
    state = initial.copy()
    n = state.num_qubits
    tensor = state.tensor()
    for g in circuit.gates:
        _check_gate(g, n)
        _apply(tensor, g, lambda q: n - 1 - q)
    return state


def _constraint_items(constraint) -> list[tuple[int, int]]:
    items = constraint.items() if isinstance(constraint, Mapping) else constraint
    return [(int(q), int(b)) for q, b in items]


def marginal_probability(state: StateVector, constraint) -> float:
    """Probability that the qubits in ``constraint`` (qubit -> bit) read as given."""
    items = _constraint_items(constraint)
    n = state.num_qubits
    idx: list = [slice(None)] * n
    for q, b in items:
        if not 0 <= q < n:
            raise ValueError(f"constraint on qubit {q} outside [0, {n})")
        idx[n - 1 - q] = b
    sub = state.tensor()[tuple(idx)]
    return float(np.vdot(sub, sub).real)


def register_distribution(state: StateVector, register: Sequence[int]) -> np.ndarray:
    """Exact distribution of the integer read from ``register`` (register[0] = LSB)."""
    n = state.num_qubits
    probs = np.abs(state.tensor()) ** 2
    keep = [n - 1 - q for q in register]
    other = tuple(a for a in range(n) if a not in keep)
    marg = probs.sum(axis=other) if other else probs
    # order the remaining axes so the most significant register qubit leads
    remaining = sorted(keep)
    order = [remaining.index(n - 1 - q) for q in reversed(register)]
    return np.transpose(marg, order).reshape(-1)


def sample_counts(state: StateVector, register: Sequence[int], shots: int,
                  rng_seed: int | None = None) -> Counter:
    """Multinomial sample of ``register`` values from the exact marginal."""
    if shots < 1:
        raise ValueError("shots must be positive")
    dist = register_distribution(state, register)
    dist = np.clip(dist, 0.0, None)
    dist = dist / dist.sum()
    rng = np.random.default_rng(rng_seed)
    draws = rng.multinomial(shots, dist)
    return Counter({int(v): int(c) for v, c in enumerate(draws) if c})


def projected_probability(circuit: Circuit, constraint) -> float:
    """Probability of ``constraint`` on circuit|0...0>, computed frugally.

    Qubits are allocated on first use (untouched qubits are still |0>) and a
    constrained qubit is projected onto its required bit right after the last
    gate that references it.  The projector commutes with everything that
    follows, so the result equals ``marginal_probability(run_circuit(c), ...)``
    while the live tensor stays smaller than the full register.
    """
    items = dict(_constraint_items(constraint))
    for q in items:
        if not 0 <= q < circuit.num_qubits:
            raise ValueError(f"constraint on qubit {q} outside [0, {circuit.num_qubits})")
    last_use: dict[int, int] = {}
    for pos, g in enumerate(circuit.gates):
        _check_gate(g, circuit.num_qubits)
        for q in g.qubits:
            last_use[q] = pos
    # never-touched qubits stay |0>
    for q, b in items.items():
        if q not in last_use and b != 0:
            return 0.0
    release: dict[int, list[int]] = {}
    for q in items:
        if q in last_use:
            release.setdefault(last_use[q], []).append(q)

    tensor = np.ones((), dtype=complex)
    live: list[int] = []  # live[k] is the qubit on tensor axis k

    def axis_of(q):
        return live.index(q)

    for pos, g in enumerate(circuit.gates):
        for q in g.qubits:
            if q not in live:
                if len(live) + 1 > MAX_QUBITS:
                    raise BudgetError(f"more than {MAX_QUBITS} live qubits")
                tensor = np.stack([tensor, np.zeros_like(tensor)], axis=-1)
                live.append(q)
        _apply(tensor, g, axis_of)
        for q in release.get(pos, ()):
            ax = live.index(q)
            idx: list = [slice(None)] * tensor.ndim
            idx[ax] = items[q]
            tensor = np.ascontiguousarray(tensor[tuple(idx)])
            live.pop(ax)
    return float(np.vdot(tensor, tensor).real)
