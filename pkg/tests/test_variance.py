import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qvarlab import sim
from qvarlab.sim import Circuit
from qvarlab.variance import (EstimatorConfig, build_qvar_oracle, classical_variance,
                              pad_with_mean, qvar, qvar_from_stateprep)


def good_amplitudes(oracle):
    """Amplitudes on the good configuration, indexed by the i register value."""
    state = sim.run_circuit(oracle.circuit).tensor()
    nq = oracle.num_qubits
    idx: list = [slice(None)] * nq
    for q, b in oracle.good.constraints:
        idx[nq - 1 - q] = b
    return state[tuple(idx)].reshape(-1)


def scaled(d):
    d = np.asarray(d, dtype=float)
    return d * math.sqrt(d.size) / np.linalg.norm(d)


class TestOracle:
    def test_layout(self):
        o = build_qvar_oracle(sim.amplitude_encode(np.ones(8)))
        assert o.n == 3
        assert o.num_qubits == 3 * 3 + 1
        regs = [set(o.layout[r]) for r in "aeqi"]
        assert set.union(*regs) == set(range(10))
        assert sum(len(r) for r in regs) == 10
        assert {q for q, _ in o.good.constraints} == set(o.layout["a"] + o.layout["e"]
                                                         + o.layout["q"])

    def test_constant_data_has_no_good_amplitude(self):
        o = build_qvar_oracle(sim.amplitude_encode([1, 1]))
        np.testing.assert_allclose(good_amplitudes(o), 0, atol=1e-15)

    def test_alternating_data(self):
        o = build_qvar_oracle(sim.amplitude_encode([1, -1]))
        prob = sim.marginal_probability(sim.run_circuit(o.circuit), o.good.as_dict())
        assert prob == pytest.approx(1 / 8, abs=1e-12)

    def test_two_qubit_amplitudes(self):
        d = scaled([math.sqrt(2), -math.sqrt(2), 0, 0])
        o = build_qvar_oracle(sim.amplitude_encode(d))
        np.testing.assert_allclose(good_amplitudes(o), (d - d.mean()) / 8, atol=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    @pytest.mark.parametrize("seed", range(5))
    def test_amplitude_identity(self, n, seed):
        N = 2 ** n
        d = scaled(np.random.default_rng(seed).normal(size=N))
        o = build_qvar_oracle(sim.amplitude_encode(d))
        np.testing.assert_allclose(good_amplitudes(o), (d - d.mean()) / (2 * N), atol=1e-10)
        prob = sim.marginal_probability(sim.run_circuit(o.circuit), o.good.as_dict())
        assert prob == pytest.approx(classical_variance(d) / (4 * N), abs=1e-10)

    def test_qubit_budget_with_canonical_ae(self):
        o = build_qvar_oracle(sim.amplitude_encode(np.arange(1.0, 5.0)))
        s = 3
        assert o.num_qubits + s == 3 * 2 + s + 1

    def test_collision_rejected(self):
        prep = Circuit(2, [sim.h(0)], {"i": (0,), "a": (1,)})
        with pytest.raises(ValueError):
            build_qvar_oracle(prep)

    def test_extra_good_collision(self):
        with pytest.raises(ValueError):
            build_qvar_oracle(sim.amplitude_encode([1, 2]), extra_good={0: 1})


class TestFromStatePrep:
    def test_uniform(self):
        prep = Circuit(2, [sim.h(0), sim.h(1)], {"i": (0, 1)})
        assert qvar_from_stateprep(prep).a_hat == pytest.approx(0.0, abs=1e-15)

    def test_basis_vector(self):
        est = qvar_from_stateprep(sim.amplitude_encode([1, 0, 0, 0]))
        assert est.a_hat == pytest.approx(0.046875, abs=1e-12)

    def test_register_size_checked(self):
        with pytest.raises(ValueError):
            qvar_from_stateprep(sim.amplitude_encode([1, 0, 0, 0]), n=3)


class TestQvar:
    def test_constant(self):
        assert qvar([2.5] * 4).variance == pytest.approx(0.0, abs=1e-12)

    def test_zero_vector_skips_circuit(self):
        est = qvar([0.0, 0.0, 0.0])
        assert est.variance == 0.0 and est.oracle_calls == 0

    def test_pm_one(self):
        est = qvar([1, -1])
        assert est.a_hat == pytest.approx(1 / 8)
        assert est.rescale == pytest.approx(8)
        assert est.variance == pytest.approx(1.0)
        assert est.variance == pytest.approx(est.rescale * est.a_hat)

    @pytest.mark.parametrize("N", [4, 8, 16])
    @pytest.mark.parametrize("seed", range(7))
    def test_matches_classical(self, N, seed):
        v = np.random.default_rng(seed).normal(loc=0.3, size=N)
        assert qvar(v).variance == pytest.approx(classical_variance(v), abs=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=33))
    def test_matches_classical_any_length(self, values):
        est = qvar(values)
        assert est.variance == pytest.approx(classical_variance(values), abs=1e-9,
                                             rel=1e-9)
        assert est.padded_from == len(values)

    def test_shift(self):
        v = np.array([0.4, -1.2, 2.0, 0.7, 0.1])
        for c in (0.0, 3.0, -10.0):
            assert qvar(v + c).variance == pytest.approx(classical_variance(v + c), abs=1e-9)

    def test_estimators_close_to_truth(self):
        v = np.random.default_rng(2).uniform(-1, 1, 16)
        truth = classical_variance(v)
        ml = qvar(v, method="mlae", s=6, shots=0)
        assert ml.variance == pytest.approx(truth, rel=1e-3)
        can = qvar(v, method="canonical", s=6)
        # resolution of a 6-qubit phase register, scaled back to the variance
        assert abs(can.variance - truth) <= can.rescale * (math.pi / 64 + math.pi ** 2 / 4096)

    def test_errors(self):
        with pytest.raises(ValueError):
            qvar([1.0])
        with pytest.raises(ValueError):
            qvar([1.0, np.inf])
        with pytest.raises(ValueError):
            qvar([1.0, 2.0], method="magic")


class TestClassical:
    def test_examples(self):
        assert classical_variance([7.0]) == 0.0
        assert classical_variance([1, -1]) == 1.0
        assert classical_variance([1, 2, 3, 4]) == pytest.approx(1.25)

    def test_empty(self):
        with pytest.raises(ValueError):
            classical_variance([])

    def test_padding_keeps_mean_and_deviations(self):
        v = np.array([1.0, 2.0, 6.0])
        p = pad_with_mean(v)
        assert p.size == 4 and p.mean() == pytest.approx(v.mean())
        assert ((p - p.mean()) ** 2).sum() == pytest.approx(((v - v.mean()) ** 2).sum())


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            EstimatorConfig(method="x")
        with pytest.raises(ValueError):
            EstimatorConfig(method="canonical", s=0)
        with pytest.raises(ValueError):
            EstimatorConfig(shots=-1)

    def test_child_seeds_stable(self):
        c = EstimatorConfig(seed=4)
        assert c.child_seeds(3) == c.child_seeds(3)
        assert len(set(c.child_seeds(5))) == 5
        assert EstimatorConfig().child_seeds(2) == [None, None]
