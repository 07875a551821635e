import itertools
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qvarlab import sim
from qvarlab.sim import BudgetError, Circuit, Gate, StateVector

I2 = np.eye(2)
HM = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
XM = np.array([[0, 1], [1, 0]])
ZM = np.diag([1, -1])
P0 = np.diag([1, 0])
P1 = np.diag([0, 1])


def dense(gate: Gate, n: int) -> np.ndarray:
    """Full 2^n matrix of ``gate`` built independently from Kronecker products."""
    dim = 2 ** n
    if gate.kind == "gphase":
        base = np.exp(1j * gate.phase) * np.eye(dim)
    elif gate.kind == "swap":
        a, b = gate.targets
        base = np.zeros((dim, dim))
        for idx in range(dim):
            ba, bb = (idx >> a) & 1, (idx >> b) & 1
            out = idx & ~(1 << a) & ~(1 << b) | (bb << a) | (ba << b)
            base[out, idx] = 1
    else:
        single = {"h": HM, "x": XM, "z": ZM}
        if gate.kind in single:
            ops = {gate.targets[0]: single[gate.kind]}
            # kron order: most significant qubit first
            base = reduce(np.kron, [ops.get(q, I2) for q in reversed(range(n))])
        else:
            base = np.zeros((dim, dim), dtype=complex)
            k = len(gate.targets)
            for col in range(dim):
                sub = sum(((col >> t) & 1) << j for j, t in enumerate(gate.targets))
                for row_sub in range(2 ** k):
                    row = col
                    for j, t in enumerate(gate.targets):
                        row = row & ~(1 << t) | (((row_sub >> j) & 1) << t)
                    base[row, col] += gate.matrix[row_sub, sub]
    if not gate.controls:
        return base
    proj = np.ones(dim)
    for idx in range(dim):
        proj[idx] = all(((idx >> c) & 1) == b for c, b in gate.controls)
    P = np.diag(proj)
    return P @ base + (np.eye(dim) - P)


def basis(n, idx):
    return StateVector.basis(n, idx)


class TestGateSemantics:
    def test_hadamard_on_zero(self):
        out = sim.apply_gate(StateVector.zero(1), sim.h(0))
        np.testing.assert_allclose(out.amplitudes, [2 ** -0.5, 2 ** -0.5], atol=1e-15)

    def test_x_on_zero(self):
        out = sim.apply_gate(StateVector.zero(1), sim.x(0))
        np.testing.assert_allclose(out.amplitudes, [0, 1])

    def test_cswap_swaps_under_control(self):
        # control qubit 2 = 1, qubits (1, 0) = (0, 1)  ->  (1, 0)
        state = basis(3, 0b101)
        out = sim.apply_gate(state, sim.cswap(2, 0, 1))
        assert abs(out.amplitudes[0b110]) == pytest.approx(1.0)

    def test_cswap_idle_without_control(self):
        out = sim.apply_gate(basis(3, 0b001), sim.cswap(2, 0, 1))
        assert abs(out.amplitudes[0b001]) == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_exhaustive_against_dense_matrices(self, n):
        rng = np.random.default_rng(n)
        gates = []
        for q in range(n):
            gates += [sim.h(q), sim.x(q), sim.z(q)]
        for a, b in itertools.permutations(range(n), 2):
            gates += [sim.cnot(a, b), sim.ch(a, b), Gate("x", (b,), ((a, 0),))]
        for c, a, b in itertools.permutations(range(n), 3):
            gates.append(sim.cswap(c, a, b))
        for k in range(1, n + 1):
            targets = tuple(rng.permutation(n)[:k])
            u, _ = np.linalg.qr(rng.normal(size=(2 ** k, 2 ** k))
                                + 1j * rng.normal(size=(2 ** k, 2 ** k)))
            gates.append(sim.unitary(u, targets))
            if k < n:
                ctl = next(q for q in range(n) if q not in targets)
                gates.append(sim.unitary(u, targets).with_control(ctl, 1))
        gates.append(sim.gphase(0.7))
        for g in gates:
            M = dense(g, n)
            for idx in range(2 ** n):
                out = sim.apply_gate(basis(n, idx), g).amplitudes
                np.testing.assert_allclose(out, M[:, idx], atol=1e-12, err_msg=g.name)

    def test_gate_validation(self):
        with pytest.raises(ValueError):
            Gate("x", (0,), ((0, 1),))
        with pytest.raises(ValueError):
            Gate("swap", (0,))
        with pytest.raises(ValueError):
            Gate("x", (0,), ((1, 2),))
        with pytest.raises(ValueError):
            sim.unitary(np.eye(2), (0, 1))

    def test_out_of_range_qubit(self):
        with pytest.raises(ValueError):
            sim.apply_gate(StateVector.zero(2), sim.x(2))

    def test_non_unit_payload_rejected(self):
        g = sim.amplitude_encode([1.0, 1.0])
        bad = Gate(g.kind, g.targets, matrix=g.matrix, payload=np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            sim.apply_gate(StateVector.zero(1), bad)


class TestAmplitudeEncoding:
    @pytest.mark.parametrize("values,expected", [
        ([1, 0], [1, 0]),
        ([1, 1], [2 ** -0.5, 2 ** -0.5]),
        ([3, 4], [0.6, 0.8]),
    ])
    def test_examples(self, values, expected):
        out = sim.run_circuit(Circuit(1, [sim.amplitude_encode(values)]))
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_random_payload(self, n):
        v = np.random.default_rng(n).normal(size=2 ** n)
        out = sim.run_circuit(Circuit(n, [sim.amplitude_encode(v)]))
        np.testing.assert_allclose(out.amplitudes, v / np.linalg.norm(v), atol=1e-12)

    def test_unitary_completion(self):
        g = sim.amplitude_encode(np.arange(1.0, 9.0))
        np.testing.assert_allclose(g.matrix @ g.matrix.conj().T, np.eye(8), atol=1e-12)

    @pytest.mark.parametrize("bad", [[0, 0], [1, 2, 3], [], [1, np.nan]])
    def test_rejects_bad_input(self, bad):
        with pytest.raises(ValueError):
            sim.amplitude_encode(bad)

    def test_adjoint_returns_to_zero(self):
        c = Circuit(2, [sim.amplitude_encode([1, -2, 3, 0.5])])
        back = sim.run_circuit(sim.adjoint(c), sim.run_circuit(c))
        np.testing.assert_allclose(back.amplitudes, [1, 0, 0, 0], atol=1e-12)


class TestCircuit:
    def test_empty_circuit_is_identity(self):
        s = StateVector(np.array([0.6, 0.8j]))
        np.testing.assert_array_equal(sim.run_circuit(Circuit(1), s).amplitudes, s.amplitudes)

    def test_double_hadamard(self):
        out = sim.run_circuit(Circuit(1, [sim.h(0), sim.h(0)]))
        np.testing.assert_allclose(out.amplitudes, [1, 0], atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sim.run_circuit(Circuit(2), StateVector.zero(3))

    def test_registers_validated(self):
        with pytest.raises(ValueError):
            Circuit(2, registers={"a": (0, 1), "b": (1,)})
        with pytest.raises(ValueError):
            Circuit(2, registers={"a": (2,)})
        with pytest.raises(ValueError):
            Circuit(1, [sim.x(1)])

    def test_controlled_x(self):
        c = sim.controlled(Circuit(1, [sim.x(0)]), 1)
        out = sim.run_circuit(c, basis(2, 0b10))
        assert abs(out.amplitudes[0b11]) == pytest.approx(1.0)

    def test_controlled_empty(self):
        assert len(sim.controlled(Circuit(1), 1)) == 0

    def test_controlled_stateprep(self):
        c = sim.controlled(Circuit(1, [sim.amplitude_encode([1, 1])]), 1)
        start = sim.run_circuit(Circuit(2, [sim.h(1)]))
        out = sim.run_circuit(c, start)
        r = 2 ** -0.5
        # |0>_c|0> / sqrt2 + |1>_c|+> / sqrt2 ; index = c * 2 + target
        np.testing.assert_allclose(out.amplitudes, [r, 0, 0.5, 0.5], atol=1e-12)

    def test_controlled_collision(self):
        with pytest.raises(ValueError):
            sim.controlled(Circuit(2, [sim.x(1)]), 1)

    def test_adjoint_of_h(self):
        adj = sim.adjoint(Circuit(1, [sim.h(0)]))
        assert [g.kind for g in adj] == ["h"]

    def test_compose_relabels(self):
        inner = Circuit(1, [sim.x(0)])
        outer = Circuit(3).compose(inner, [2])
        assert outer.gates[0].targets == (2,)


def random_circuit(rng, n, depth):
    gates = []
    for _ in range(depth):
        kind = rng.integers(6)
        qs = [int(q) for q in rng.permutation(n)]
        if kind == 0:
            gates.append(sim.h(qs[0]))
        elif kind == 1:
            gates.append(sim.x(qs[0]))
        elif kind == 2 and n > 1:
            gates.append(sim.ch(qs[0], qs[1]))
        elif kind == 3 and n > 2:
            gates.append(sim.cswap(qs[0], qs[1], qs[2]))
        elif kind == 4:
            gates.append(sim.gphase(float(rng.uniform(0, 6))))
        else:
            k = min(n, 2)
            u, _ = np.linalg.qr(rng.normal(size=(2 ** k, 2 ** k)))
            gates.append(sim.unitary(u, qs[:k]))
    return Circuit(n, gates)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 50), st.integers(0, 2 ** 32 - 1))
def test_unitarity_round_trip(n, depth, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    s = StateVector(amps / np.linalg.norm(amps))
    c = random_circuit(rng, n, depth)
    mid = sim.run_circuit(c, s)
    assert mid.norm() == pytest.approx(1.0, abs=1e-10)
    back = sim.run_circuit(sim.adjoint(c), mid)
    np.testing.assert_allclose(back.amplitudes, s.amplitudes, atol=1e-10)


class TestReadout:
    def test_marginal_plus(self):
        s = sim.run_circuit(Circuit(1, [sim.h(0)]))
        assert sim.marginal_probability(s, {0: 0}) == pytest.approx(0.5)

    def test_marginal_full_constraint(self):
        s = basis(3, 0b110)
        assert sim.marginal_probability(s, {0: 0, 1: 1, 2: 1}) == pytest.approx(1.0)
        assert sim.marginal_probability(s, {0: 1, 1: 1, 2: 1}) == 0.0

    def test_marginal_range(self):
        with pytest.raises(ValueError):
            sim.marginal_probability(basis(2, 0), {2: 0})

    def test_register_distribution_order(self):
        s = basis(3, 0b011)
        # register (q2, q0): value = q2 + 2 * q0 = 2
        dist = sim.register_distribution(s, [2, 0])
        assert dist[2] == pytest.approx(1.0)

    def test_sample_basis_state(self):
        counts = sim.sample_counts(basis(2, 3), [0, 1], 500, rng_seed=1)
        assert counts == {3: 500}

    def test_sample_plus_frequency(self):
        s = sim.run_circuit(Circuit(1, [sim.h(0)]))
        counts = sim.sample_counts(s, [0], 10 ** 6, rng_seed=3)
        # 5 sigma of a fair coin at 10^6 shots is 0.0025
        assert abs(counts[0] / 10 ** 6 - 0.5) < 0.0025

    def test_sample_deterministic(self):
        s = sim.run_circuit(Circuit(2, [sim.h(0), sim.h(1)]))
        assert sim.sample_counts(s, [0, 1], 100, 7) == sim.sample_counts(s, [0, 1], 100, 7)

    def test_sample_needs_shots(self):
        with pytest.raises(ValueError):
            sim.sample_counts(basis(1, 0), [0], 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_projected_probability_matches_full_marginal(self, seed):
        rng = np.random.default_rng(seed)
        c = random_circuit(rng, 6, 30)
        constraint = {int(q): int(rng.integers(2)) for q in rng.permutation(6)[:3]}
        full = sim.marginal_probability(sim.run_circuit(c), constraint)
        assert sim.projected_probability(c, constraint) == pytest.approx(full, abs=1e-12)

    def test_projected_probability_untouched_qubit(self):
        c = Circuit(3, [sim.h(0)])
        assert sim.projected_probability(c, {2: 1}) == 0.0
        assert sim.projected_probability(c, {2: 0, 0: 1}) == pytest.approx(0.5)


def test_budget():
    with pytest.raises(BudgetError):
        StateVector.zero(sim.MAX_QUBITS + 1)
