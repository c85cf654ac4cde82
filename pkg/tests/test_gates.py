import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracle
from rspcast import gates
from rspcast.hilbert import HilbertError, apply_local, basis_state, fidelity_up_to_global_phase, measure
from rspcast.verification import all_bases, all_operators, random_state

W = cmath.exp(2j * math.pi / 3)
angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


def test_every_constructor_passes_its_kind_check():
    for op in all_operators():
        m = op.matrix
        if op.kind == "unitary":
            assert np.allclose(m.conj().T @ m, np.eye(len(m)), atol=1e-10), op.name
        else:
            assert np.allclose(m @ m, m, atol=1e-10), op.name


def test_operator_validation():
    with pytest.raises(HilbertError):
        gates.LocalOperator((2,), np.array([[1, 1], [0, 1]]))
    with pytest.raises(HilbertError):
        gates.LocalOperator((2,), np.eye(3))
    with pytest.raises(HilbertError):
        gates.LocalOperator((2,), np.eye(2), kind="nonsense")


def test_dagger_power_and_composition():
    v = gates.shift_down_qutrit()
    assert np.allclose((v @ v.dagger).matrix, np.eye(3))
    assert np.allclose(v.power(3).matrix, np.eye(3))


@pytest.mark.parametrize("d", range(2, 10))
def test_shift_cycles(d):
    s = gates.shift(d, 1)
    for j in range(d):
        assert np.argmax(np.abs(s.matrix[:, j])) == (j + 1) % d
    assert np.allclose(s.power(d).matrix, np.eye(d))


def test_shift_down_qutrit_action():
    v = gates.shift_down_qutrit().matrix
    assert [int(np.argmax(np.abs(v[:, j]))) for j in range(3)] == [2, 0, 1]


@pytest.mark.parametrize("c,t", [(0, 0), (0, 2), (1, 0), (1, 2), (2, 1)])
def test_controlled_w_action(c, t):
    out = apply_local(basis_state((3, 3), c, t), gates.controlled_w(), [0, 1])
    assert out.amplitude(c, (t + c) % 3) == pytest.approx(1)


def test_controlled_shift_negative_power():
    cv = gates.controlled_shift(2, 3, -1)
    out = apply_local(basis_state((2, 3), 1, 0), cv, [0, 1])
    assert out.amplitude(1, 2) == pytest.approx(1)
    out = apply_local(basis_state((2, 3), 0, 1), cv, [0, 1])
    assert out.amplitude(0, 1) == pytest.approx(1)


def test_controlled_controlled_shift_only_fires_on_listed_controls():
    shifts = {(0, 2): 1, (2, 0): 1, (1, 2): 2, (2, 1): 2}
    ccs = gates.controlled_controlled_shift(shifts)
    for b in range(3):
        for c in range(3):
            out = apply_local(basis_state((3, 3, 6), b, c, 1), ccs, [0, 1, 2])
            assert out.amplitude(b, c, (1 + shifts.get((b, c), 0)) % 6) == pytest.approx(1)


@given(angles)
def test_sender_phase_basic_entries(theta):
    m = np.diag(gates.sender_phase_basic(theta).matrix)
    assert np.allclose(m, [cmath.exp(2j * theta), cmath.exp(-2j * theta), 1])


@given(angles, st.integers(1, 8))
def test_sender_phase_n_entries(theta, n):
    m = np.diag(gates.sender_phase_n(theta, n).matrix)
    assert np.allclose(m, [cmath.exp(1j * (2 * k - n) * theta) for k in range(n + 1)])


@given(angles, angles)
def test_sender_phase_qutrit_carries_product_phases(t1, t2):
    m = np.diag(gates.sender_phase_qutrit(t1, t2).matrix)
    phase = [0, t1, t2]
    for (i, j), level in oracle.QUTRIT_LEVEL.items():
        assert abs(m[level] - cmath.exp(1j * (phase[i] + phase[j]))) < 1e-12


def test_controlled_sender_phase_blocks():
    op = gates.controlled_sender_phase(0.3, 1.1).matrix
    assert np.allclose(op[:3, :3], gates.sender_phase_basic(0.3).matrix)
    assert np.allclose(op[3:, 3:], gates.sender_phase_basic(1.1).matrix)
    assert np.allclose(op[:3, 3:], 0)


def test_all_bases_are_orthonormal():
    for basis in all_bases():
        gram = basis.vectors.conj() @ basis.vectors.T
        assert np.allclose(gram, np.eye(basis.dim), atol=1e-12)


def test_qutrit_basis_vectors():
    v = gates.qutrit_basis().vectors * math.sqrt(3)
    assert np.allclose(v, [[1, 1, 1], [W, W.conjugate(), 1], [W.conjugate(), W, 1]])
    assert gates.qutrit_basis().labels == ("u0", "u1", "u2")


def test_six_level_basis_entries_have_uniform_modulus():
    v = gates.six_level_basis().vectors
    assert np.allclose(np.abs(v), 1 / math.sqrt(6))


def test_fourier_matches_oracle():
    for d in range(2, 10):
        assert np.allclose(gates.fourier_basis(d).vectors, oracle.dft(d))
    with pytest.raises(HilbertError):
        gates.fourier_basis(1)


def test_fourier3_and_qutrit_basis_give_same_statistics():
    rng = np.random.default_rng(4)
    for _ in range(10):
        s = random_state((3,), rng)
        pf = sorted(measure(s, gates.fourier_basis(3)).probabilities)
        pq = sorted(measure(s, gates.qutrit_basis()).probabilities)
        assert np.allclose(pf, pq, atol=1e-12)


@given(angles)
def test_equatorial_basis_offsets(theta):
    for offset in (math.pi / 2, -math.pi / 2):
        b = gates.equatorial_basis(theta, 0, offset)
        assert abs(np.vdot(b.vectors[0], b.vectors[1])) < 1e-12


@given(angles)
def test_sigma_z_is_a_quarter_turn_of_the_angle(theta):
    psi = gates.equatorial_qubit(theta)
    flipped = apply_local(psi, gates.pauli_z(), [0])
    expected = cmath.exp(0.5j * math.pi) * gates.equatorial_qubit(theta - math.pi / 2).amplitudes
    assert np.allclose(flipped.amplitudes, expected, atol=1e-12)


def test_basic_corrections():
    u1, u2 = gates.correction_basic(1).matrix, gates.correction_basic(2).matrix
    assert np.allclose(np.diag(u1), [cmath.exp(1j * math.pi / 3), cmath.exp(-1j * math.pi / 3)])
    assert np.allclose(u1 @ u2, np.eye(2))
    assert np.allclose(gates.correction_basic(0).matrix, np.eye(2))
    with pytest.raises(HilbertError):
        gates.correction_basic(3)


def test_rotated_correction_is_hadamard_conjugate():
    h = gates.hadamard().matrix
    for m in range(3):
        assert np.allclose(gates.correction_basic_x(m).matrix, h @ gates.correction_basic(m).matrix @ h)


def test_n_party_correction_agrees_with_basic_up_to_phase():
    for m in range(3):
        a, b = gates.correction_n(m, 2).matrix, gates.correction_basic(m).matrix
        ratio = np.diag(a) / np.diag(b)
        assert np.allclose(ratio, ratio[0])
    with pytest.raises(HilbertError):
        gates.correction_n(3, 2)


def test_diff_state_corrections():
    ub, uc = gates.correction_diff(3)
    assert np.allclose(np.diag(ub.matrix), [1, -1])
    assert np.allclose(np.diag(uc.matrix), [1, -1j])


def test_qutrit_corrections_for_first_three_outcomes():
    assert np.allclose(np.diag(gates.correction_qutrit(0).matrix), [1, 1, 1])
    assert np.allclose(np.diag(gates.correction_qutrit(1).matrix), [1, W, W.conjugate()])
    assert np.allclose(np.diag(gates.correction_qutrit(2).matrix),
                       [1, cmath.exp(-2j * math.pi / 3), cmath.exp(2j * math.pi / 3)])


@pytest.mark.parametrize("m", range(6))
def test_qutrit_phase_system_matches_oracle(m):
    chi, residual = gates.qutrit_correction_phases(m)
    chi_o, residual_o = oracle.qutrit_phase_system(list(gates.six_level_basis().vectors[m]))
    assert np.allclose(np.exp(1j * chi), np.exp(1j * np.array(chi_o)))
    assert residual == pytest.approx(residual_o, abs=1e-12)


@pytest.mark.parametrize("m", [3, 4, 5])
def test_qutrit_phase_system_is_inconsistent_for_sign_alternating_outcomes(m):
    # the (-1)^j factor on these rows cannot be split into per-receiver phases
    _, residual = gates.qutrit_correction_phases(m)
    assert residual == pytest.approx(math.pi, abs=1e-12)


def test_projector_p():
    p = gates.projector_p()
    assert p.kind == "projector"
    assert np.allclose(np.diag(p.matrix), [0, 1, 1, 0])


def test_equatorial_states():
    assert fidelity_up_to_global_phase(gates.equatorial_qubit(0), gates.equatorial_qubit(math.pi)) == pytest.approx(1)
    q = gates.equatorial_qutrit(0.4, 1.2, 0.6, 0.0, 0.8)
    assert np.allclose(q.amplitudes, [0.6, 0, 0.8 * cmath.exp(1.2j)])
