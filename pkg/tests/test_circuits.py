import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from rspcast import circuits
from rspcast.circuits import CoefficientError
from rspcast.hilbert import HilbertError, condition, entanglement_entropy, fidelity_up_to_global_phase

R2 = 1 / math.sqrt(2)
unit = st.floats(0.0, 1.0, allow_nan=False)


def amplitudes_equal(state, kets, tol=1e-12):
    expected = oracle.normalize(kets)
    return all(abs(state.amplitude(*d) - expected.get(d, 0)) < tol
               for d in np.ndindex(*state.dims))


@given(unit)
def test_basic_direct_matches_oracle(a):
    b = math.sqrt(1 - a * a)
    assert amplitudes_equal(circuits.resource_basic(a, b).state, oracle.basic_resource(a, b))


@settings(max_examples=25, deadline=None)
@given(unit)
def test_basic_circuit_matches_direct(a):
    b = math.sqrt(1 - a * a)
    direct = circuits.resource_basic(a, b).state
    circuit = circuits.resource_basic(a, b, "circuit").state
    assert fidelity_up_to_global_phase(direct, circuit) > 1 - 1e-10


def test_basic_labels_and_partition():
    r = circuits.resource_basic(R2, R2)
    assert r.state.layout.labels == ("a", "b", "c")
    assert r.sender == (0,) and r.receivers == ((1,), (2,))


@pytest.mark.parametrize("coeffs", [(0.9, 0.5), (-0.6, 0.8), (0.6j, 0.8)])
def test_coefficient_validation(coeffs):
    with pytest.raises(CoefficientError):
        circuits.resource_basic(*coeffs)


def test_unknown_method():
    with pytest.raises(ValueError):
        circuits.resource_basic(R2, R2, "magic")


def test_diff_bases_circuit():
    a = circuits.resource_diff_bases()
    b = circuits.resource_diff_bases("circuit")
    assert fidelity_up_to_global_phase(a.state, b.state) > 1 - 1e-10


@pytest.mark.parametrize("n", range(1, 9))
def test_dicke_states(n):
    for k in range(n + 1):
        d = circuits.dicke_state(n, k)
        support = d.nonzero()
        assert len(support) == math.comb(n, k)
        assert all(digits.count(0) == k for digits in support)


def test_dicke_rejects_bad_labels():
    with pytest.raises(HilbertError):
        circuits.dicke_state(3, 4)


@pytest.mark.parametrize("n", range(1, 9))
def test_n_party_direct_matches_oracle(n):
    a, b = 0.6, 0.8
    assert amplitudes_equal(circuits.resource_n_party(a, b, n).state, oracle.n_party_resource(a, b, n))


@pytest.mark.parametrize("n", range(1, 9))
def test_n_party_circuit_matches_direct(n):
    direct = circuits.resource_n_party(R2, R2, n).state
    circuit = circuits.resource_n_party(R2, R2, n, "circuit").state
    assert fidelity_up_to_global_phase(direct, circuit) > 1 - 1e-10


def test_n_party_circuit_stage_counts_ones_before_reflection():
    stages = circuits.n_party_circuit_stages(3)
    shifted = stages["shifted"]
    for digits, amp in shifted.nonzero().items():
        assert digits[0] == sum(digits[1:])
    for digits, amp in stages["relabelled"].nonzero().items():
        assert digits[0] == digits[1:].count(0)


def test_n_party_limits():
    with pytest.raises(HilbertError):
        circuits.resource_n_party(R2, R2, 9)
    with pytest.raises(HilbertError):
        circuits.resource_n_party(R2, R2, 0)
    with pytest.raises(CoefficientError):
        circuits.resource_n_party(0.6, 0.8, 3, "circuit")


@pytest.mark.parametrize("n", [2, 5, 8])
def test_qudit_level_selects_dicke_state(n):
    r = circuits.resource_n_party(0.6, 0.8, n)
    for k in range(n + 1):
        rest = condition(r.state, 0, np.eye(n + 1)[k])
        target = circuits.dicke_state(n, k)
        assert abs(abs(np.vdot(target.amplitudes, rest.amplitudes)) - 1) < 1e-10


@pytest.mark.parametrize("n", range(1, 9))
def test_n_party_entropy_bounded(n):
    r = circuits.resource_n_party(R2, R2, n)
    assert entanglement_entropy(r.state, [0]) <= math.log2(n + 1) + 1e-10


def test_diff_states_constructions_agree():
    direct = circuits.resource_diff_states()
    assert amplitudes_equal(direct.state, oracle.diff_states_resource())
    for method in ("qudit_circuit", "two_qubit_circuit"):
        built = circuits.resource_diff_states(method)
        assert fidelity_up_to_global_phase(direct.state, built.state) > 1 - 1e-10


def test_two_qubit_register_index_map():
    reg = circuits.diff_states_two_qubit_register()
    assert reg.layout.labels == ("a1", "a2", "b", "c")
    for (a1, a2, b, c), amp in reg.nonzero().items():
        assert (a1, a2) == (b, c)
        assert circuits.resource_diff_states().state.amplitude(2 * a1 + a2, b, c) == pytest.approx(amp)


def test_diff_states_entropy_is_two_bits():
    r = circuits.resource_diff_states()
    assert entanglement_entropy(r.state, r.sender) == pytest.approx(2.0, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_qutrit_direct_matches_oracle(seed):
    v = np.abs(np.random.default_rng(seed).normal(size=3))
    a, b, g = v / np.linalg.norm(v)
    assert amplitudes_equal(circuits.resource_qutrit(a, b, g).state, oracle.qutrit_resource(a, b, g))


def test_qutrit_circuit_stages():
    stages = circuits.qutrit_circuit_stages()
    shifted_levels = {(b, c): a for (a, b, c) in stages["shifted"].nonzero()}
    assert shifted_levels == {(b, c): b + c for b in range(3) for c in range(3)}
    corrected_levels = {(b, c): a for (a, b, c) in stages["corrected"].nonzero()}
    assert corrected_levels == circuits.QUTRIT_LEVELS
    direct = circuits.resource_qutrit()
    assert fidelity_up_to_global_phase(direct.state, stages["corrected"]) > 1 - 1e-10


def test_qutrit_circuit_needs_uniform_coefficients():
    with pytest.raises(CoefficientError):
        circuits.resource_qutrit(0.6, 0.8, 0.0, "circuit")


def test_singlet():
    s = circuits.singlet()
    assert s.amplitude(0, 1) == pytest.approx(R2)
    assert s.amplitude(1, 0) == pytest.approx(-R2)
