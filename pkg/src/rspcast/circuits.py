"""Resource states, each built by direct transcription and by a gate circuit."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import gates
from .hilbert import (
    ALGEBRA_TOL,
    HilbertError,
    StateVector,
    SubsystemLayout,
    apply_local,
    basis_state,
    from_kets,
    make_state,
    tensor_all,
)

MAX_PARTIES = 8
R2 = 1 / math.sqrt(2)
R3 = 1 / math.sqrt(3)


class CoefficientError(HilbertError):
    pass


@dataclass(frozen=True, eq=False)
class ResourceState:
    state: StateVector
    sender: tuple[int, ...]
    receivers: tuple[tuple[int, ...], ...]
    construction: str
    provenance: str

    def __post_init__(self):
        held = list(self.sender) + [i for r in self.receivers for i in r]
        if sorted(held) != list(range(len(self.state.layout))):
            raise HilbertError("sender and receiver subsystems must partition the layout")


def check_coefficients(*coeffs: float) -> tuple[float, ...]:
    """Real, non-negative, unit-norm coefficient tuple."""
    out = []
    for c in coeffs:
        if isinstance(c, complex) or not np.isreal(c):
            raise CoefficientError(f"coefficients must be real, got {c!r}")
        if c < 0:
            raise CoefficientError(f"coefficients must be non-negative, got {c!r}")
        out.append(float(c))
    norm = sum(c * c for c in out)
    if abs(norm - 1.0) > ALGEBRA_TOL:
        raise CoefficientError(f"squared coefficients sum to {norm:.12g}, not 1")
    return tuple(out)


def _check_method(method: str, allowed: tuple[str, ...]) -> None:
    if method not in allowed:
        raise ValueError(f"unknown construction method {method!r}; expected one of {allowed}")


def _qubit(alpha: float, beta: float) -> StateVector:
    return make_state((2,), [alpha, beta])


def _plus() -> StateVector:
    return make_state((2,), [R2, R2])


def resource_basic(alpha: float, beta: float, method: str = "direct") -> ResourceState:
    alpha, beta = check_coefficients(alpha, beta)
    _check_method(method, ("direct", "circuit"))
    layout = SubsystemLayout((3, 2, 2), ("a", "b", "c"))
    if method == "direct":
        state = from_kets(layout, {
            (0, 0, 0): alpha ** 2,
            (1, 1, 1): beta ** 2,
            (2, 0, 1): alpha * beta,
            (2, 1, 0): alpha * beta,
        })
    else:
        state = tensor_all([basis_state((3,), 0), _qubit(alpha, beta), _qubit(alpha, beta)])
        state = StateVector(layout, state.amplitudes)
        cv = gates.controlled_shift(2, 3, -1, name="C-V")
        state = apply_local(state, cv, (1, 0))
        state = apply_local(state, cv, (2, 0))
    return ResourceState(state, (0,), ((1,), (2,)), method, "two-receiver template")


def resource_diff_bases(method: str = "direct") -> ResourceState:
    """Template at alpha = beta = 1/sqrt2 with Charlie's qubit in the x basis."""
    _check_method(method, ("direct", "circuit"))
    layout = SubsystemLayout((3, 2, 2), ("a", "b", "c"))
    if method == "direct":
        plus, minus = (R2, R2), (R2, -R2)
        kets: dict[tuple[int, ...], complex] = {}

        def add(a, b, cvec, weight=0.5):
            for c, amp in enumerate(cvec):
                kets[(a, b, c)] = kets.get((a, b, c), 0) + weight * amp

        add(0, 0, plus)
        add(1, 1, minus)
        add(2, 0, minus)
        add(2, 1, plus)
        state = from_kets(layout, kets)
    else:
        state = apply_local(resource_basic(R2, R2, "circuit").state, gates.hadamard(), (2,))
    return ResourceState(state, (0,), ((1,), (2,)), method, "different-bases template")


def dicke_state(N: int, k: int) -> StateVector:
    """Symmetric N-qubit state with k qubits in |0> and N-k in |1>."""
    if not 0 <= k <= N or N < 1:
        raise HilbertError(f"invalid Dicke labels N={N}, k={k}")
    amps = np.zeros(2 ** N, dtype=complex)
    for ones in itertools.combinations(range(N), N - k):
        amps[sum(1 << (N - 1 - q) for q in ones)] = 1
    return make_state((2,) * N, amps / math.sqrt(math.comb(N, k)))


def _n_party_layout(N: int) -> SubsystemLayout:
    return SubsystemLayout((N + 1,) + (2,) * N, ("a",) + tuple(f"r{i + 1}" for i in range(N)))


def n_party_circuit_stages(N: int) -> dict[str, StateVector]:
    """Intermediate states of the N-party preparation circuit.

    The per-qubit Controlled-Shift gates leave the qudit at the number of
    |1> qubits, N - k. The final reflection |j> -> |N - j> relabels the
    qudit so level k pairs with the Dicke state holding k zeros.
    """
    layout = _n_party_layout(N)
    state = StateVector(layout, tensor_all([basis_state((N + 1,), 0)] + [_plus()] * N).amplitudes)
    stages = {"input": state}
    cs = gates.controlled_shift(2, N + 1, 1)
    for q in range(1, N + 1):
        state = apply_local(state, cs, (q, 0))
    stages["shifted"] = state
    reflect = np.zeros((N + 1, N + 1))
    for j in range(N + 1):
        reflect[N - j, j] = 1
    stages["relabelled"] = apply_local(state, gates.LocalOperator((N + 1,), reflect, name="R"), (0,))
    return stages


def resource_n_party(alpha: float, beta: float, N: int, method: str = "direct") -> ResourceState:
    if not 1 <= N <= MAX_PARTIES:
        raise HilbertError(f"N must be in 1..{MAX_PARTIES}, got {N}")
    alpha, beta = check_coefficients(alpha, beta)
    _check_method(method, ("direct", "circuit"))
    layout = _n_party_layout(N)
    if method == "direct":
        amps = np.zeros(layout.total, dtype=complex)
        for k in range(N + 1):
            level = np.zeros(N + 1)
            level[k] = 1
            weight = alpha ** k * beta ** (N - k) * math.sqrt(math.comb(N, k))
            amps += weight * np.kron(level, dicke_state(N, k).amplitudes)
        state = make_state(layout, amps)
    else:
        if abs(alpha - R2) > ALGEBRA_TOL or abs(beta - R2) > ALGEBRA_TOL:
            raise CoefficientError("the N-party circuit prepares alpha = beta = 1/sqrt2 only")
        state = n_party_circuit_stages(N)["relabelled"]
    receivers = tuple((i,) for i in range(1, N + 1))
    return ResourceState(state, (0,), receivers, method, f"N-party Dicke resource, N={N}")


def diff_states_two_qubit_register() -> StateVector:
    """Two-qubit sender register (a1, a2, b, c) after the two C-NOT gates."""
    layout = SubsystemLayout((2, 2, 2, 2), ("a1", "a2", "b", "c"))
    state = StateVector(layout, tensor_all([basis_state((2, 2), 0, 0), _plus(), _plus()]).amplitudes)
    state = apply_local(state, gates.cnot(), (2, 0))
    return apply_local(state, gates.cnot(), (3, 1))


def resource_diff_states(method: str = "direct") -> ResourceState:
    """Four-level sender entangled with two qubits.

    The two-qubit variant is returned in the four-level layout; with a1 as
    the more significant digit the map |a1 a2> -> |2 a1 + a2> leaves the
    amplitude vector unchanged.
    """
    _check_method(method, ("direct", "qudit_circuit", "two_qubit_circuit"))
    layout = SubsystemLayout((4, 2, 2), ("a", "b", "c"))
    if method == "direct":
        state = from_kets(layout, {(k, k >> 1, k & 1): 0.5 for k in range(4)})
    elif method == "qudit_circuit":
        state = StateVector(layout, tensor_all([basis_state((4,), 0), _plus(), _plus()]).amplitudes)
        cs = gates.controlled_shift(2, 4, 1)
        state = apply_local(state, cs, (1, 0))
        state = apply_local(state, cs, (1, 0))
        state = apply_local(state, cs, (2, 0))
    else:
        state = StateVector(layout, diff_states_two_qubit_register().amplitudes)
    return ResourceState(state, (0,), ((1,), (2,)), method, "different-states template")


# receiver pair (b, c) -> sender level for the qutrit resource
QUTRIT_LEVELS = {
    (0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 2,
    (0, 2): 3, (2, 0): 3, (2, 2): 4, (1, 2): 5, (2, 1): 5,
}


def qutrit_circuit_stages() -> dict[str, StateVector]:
    layout = SubsystemLayout((6, 3, 3), ("a", "b", "c"))
    uniform = make_state((3,), [R3, R3, R3])
    state = StateVector(layout, tensor_all([basis_state((6,), 0), uniform, uniform]).amplitudes)
    stages = {"input": state}
    cs = gates.controlled_shift(3, 6, 1)
    state = apply_local(state, cs, (1, 0))
    state = apply_local(state, cs, (2, 0))
    stages["shifted"] = state
    ccs = gates.controlled_controlled_shift({(0, 2): 1, (2, 0): 1, (1, 2): 2, (2, 1): 2})
    stages["corrected"] = apply_local(state, ccs, (1, 2, 0))
    return stages


def resource_qutrit(alpha: float = R3, beta: float = R3, gamma: float = R3,
                    method: str = "direct") -> ResourceState:
    alpha, beta, gamma = check_coefficients(alpha, beta, gamma)
    _check_method(method, ("direct", "circuit"))
    layout = SubsystemLayout((6, 3, 3), ("a", "b", "c"))
    if method == "direct":
        coeff = (alpha, beta, gamma)
        state = from_kets(layout, {
            (level, b, c): coeff[b] * coeff[c] for (b, c), level in QUTRIT_LEVELS.items()
        })
    else:
        if max(abs(x - R3) for x in (alpha, beta, gamma)) > ALGEBRA_TOL:
            raise CoefficientError("the qutrit circuit prepares uniform coefficients only")
        state = qutrit_circuit_stages()["corrected"]
    return ResourceState(state, (0,), ((1,), (2,)), method, "six-level qutrit template")


def singlet() -> StateVector:
    return from_kets(SubsystemLayout((2, 2), ("a", "b")), {(0, 1): R2, (1, 0): -R2})
