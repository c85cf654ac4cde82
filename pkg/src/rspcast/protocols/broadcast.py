"""Sender-to-receivers state broadcast protocols."""

from __future__ import annotations

import cmath
import math
from typing import Callable, Sequence

from .. import gates
from ..circuits import (
    MAX_PARTIES,
    ResourceState,
    check_coefficients,
    resource_basic,
    resource_diff_bases,
    resource_diff_states,
    resource_n_party,
    resource_qutrit,
    singlet,
)
from ..gates import LocalOperator
from ..hilbert import (
    ALGEBRA_TOL,
    HilbertError,
    MeasurementBasis,
    StateVector,
    SubsystemLayout,
    apply_local,
    computational_basis,
    condition,
    fidelity_up_to_global_phase,
    make_state,
    measure,
    partial_trace,
    relative_phase,
    state_fidelity,
    tensor_all,
)
from .transcript import (
    Accounting,
    FinalState,
    MessageStats,
    OutcomeRecord,
    ProtocolTranscript,
    Session,
)

Corrections = Callable[[int], Sequence[LocalOperator | None]]


def _label(basis: MeasurementBasis, m: int) -> str:
    return basis.labels[m] if basis.labels else str(m)


def deliver(
    session: Session,
    state: StateVector,
    sender: str,
    basis: MeasurementBasis,
    receivers: Sequence[str],
    corrections: Corrections,
    targets: Sequence[StateVector],
    prefix: tuple[int, ...] = (),
    prefix_probability: float = 1.0,
    record_outcomes: bool = True,
) -> tuple[list[float], dict[tuple[int, ...], StateVector]]:
    """Measure the sender's subsystem, broadcast the outcome, correct, verify.

    ``receivers`` are party names in the order of the remaining subsystems
    once the measured one is removed; ``targets`` lines up with them.
    Returns the exact outcome probabilities and, per recorded branch, the
    corrected state of the unmeasured subsystems.
    """
    result, full = session.measure(state, sender, basis, branch=prefix)
    joint_target = tensor_all(list(targets))
    delivered = {}
    for branch in result.branches:
        if branch.state is None:
            continue
        path = prefix + (branch.outcome,)
        msg = session.message(sender, receivers, branch.outcome, basis.dim, branch=path)
        current = branch.state
        applied = []
        for party, op in zip(receivers, corrections(branch.outcome)):
            label = session.holdings[party][0]
            if op is None:
                applied.append(f"{party}:I")
                continue
            index = current.layout.index_of(label)
            current = session.apply(current, party, op, [index], kind="correct", branch=path)
            applied.append(f"{party}:{op.name}")
        rest = condition(current, branch.target, branch.vector)
        delivered[path] = rest
        finals = []
        fid = fidelity_up_to_global_phase(rest, joint_target)
        finals.append(FinalState(
            "+".join(receivers), rest.dims, tuple(complex(x) for x in rest.amplitudes),
            tuple(complex(x) for x in joint_target.amplitudes), fid, relative_phase(joint_target, rest),
        ))
        if len(receivers) > 1:
            for i, (party, target) in enumerate(zip(receivers, targets)):
                rho = partial_trace(rest, [i])
                finals.append(FinalState(
                    party, rho.layout.dims, tuple(complex(x) for x in rho.dominant_state().amplitudes),
                    tuple(complex(x) for x in target.amplitudes), state_fidelity(rho, target),
                ))
        session.verify_step(",".join(receivers), f"fidelity {fid:.15f} against target", branch=path)
        success = session.check(f"fidelity{list(path)}", 1.0 - fid)
        if record_outcomes:
            session.outcomes.append(OutcomeRecord(
                path, _label(basis, branch.outcome), prefix_probability * branch.probability, success,
                msg, tuple(applied), tuple(finals),
            ))
    return list(full.probabilities), delivered


def _probability_checks(session: Session, probs: Sequence[float], expected: float,
                        name: str = "outcome") -> None:
    session.check(f"{name}_probability_sum", sum(probs) - 1.0)
    session.check(f"{name}_equiprobable", max(abs(p - expected) for p in probs))


def _setup(session: Session, resource: ResourceState, receivers: Sequence[str]) -> StateVector:
    state = session.prepare("alice", resource)
    labels = state.layout.labels
    for party, idx in zip(receivers, resource.receivers):
        for i in idx:
            session.distribute(labels[i], "alice", party)
    return state


def run_single_receiver_rsp(theta: float, mode: str = "enumerate", seed: int | None = None,
                            tol: float = ALGEBRA_TOL) -> ProtocolTranscript:
    """Equatorial qubit to one receiver over a singlet."""
    session = Session("single", {"theta": theta}, mode, seed, tol)
    resource = ResourceState(singlet(), (0,), ((1,),), "direct", "singlet")
    state = _setup(session, resource, ["bob"])
    target = gates.equatorial_qubit(theta)
    probs, _ = deliver(
        session, state, "alice", gates.equatorial_basis(theta, 0), ["bob"],
        lambda m: [gates.pauli_z() if m == 0 else None], [target],
    )
    _probability_checks(session, probs, 0.5)
    session.accounting = Accounting(1, 2, 1, (MessageStats(2, tuple(probs)),))
    return session.finish()


def run_basic_broadcast(alpha: float, beta: float, theta: float, mode: str = "enumerate",
                        seed: int | None = None, tol: float = ALGEBRA_TOL) -> ProtocolTranscript:
    alpha, beta = check_coefficients(alpha, beta)
    session = Session("basic", {"alpha": alpha, "beta": beta, "theta": theta}, mode, seed, tol)
    state = _setup(session, resource_basic(alpha, beta), ["bob", "charlie"])
    state = session.apply(state, "alice", gates.sender_phase_basic(theta), [0])
    target = gates.equatorial_qubit(theta, alpha, beta)
    probs, _ = deliver(
        session, state, "alice", gates.qutrit_basis(0), ["bob", "charlie"],
        lambda m: [gates.correction_basic(m)] * 2, [target, target],
    )
    _probability_checks(session, probs, 1 / 3)
    session.accounting = Accounting(2, 2, 1, (MessageStats(3, tuple(probs)),))
    return session.finish()


def x_rotated_equatorial(theta: float) -> StateVector:
    """(e^{i theta}|+x> + e^{-i theta}|-x>)/sqrt2 written out in the z basis."""
    return make_state((2,), [math.cos(theta), 1j * math.sin(theta)])


def run_diff_bases(theta: float, mode: str = "enumerate", seed: int | None = None,
                   tol: float = ALGEBRA_TOL) -> ProtocolTranscript:
    session = Session("diff-bases", {"theta": theta}, mode, seed, tol)
    state = _setup(session, resource_diff_bases(), ["bob", "charlie"])
    state = session.apply(state, "alice", gates.sender_phase_basic(theta), [0])
    probs, _ = deliver(
        session, state, "alice", gates.qutrit_basis(0), ["bob", "charlie"],
        lambda m: [gates.correction_basic(m), gates.correction_basic_x(m)],
        [gates.equatorial_qubit(theta), x_rotated_equatorial(theta)],
    )
    _probability_checks(session, probs, 1 / 3)
    session.accounting = Accounting(2, 2, 1, (MessageStats(3, tuple(probs)),))
    return session.finish()


def angle_register(theta: float) -> StateVector:
    """Qutrit carrying an angle unknown to the sender."""
    return make_state(
        SubsystemLayout((3,), ("d",)),
        [cmath.exp(2j * theta) / math.sqrt(3), 1 / math.sqrt(3), cmath.exp(-2j * theta) / math.sqrt(3)],
    )


def run_probabilistic_unknown_angle(alpha: float, beta: float, theta_hidden: float,
                                    mode: str = "enumerate", seed: int | None = None,
                                    tol: float = ALGEBRA_TOL) -> ProtocolTranscript:
    """Broadcast an angle handed to the sender in a qutrit; succeeds when d reads 0.

    Failed branches are recorded and end the run; no correction is attempted.
    """
    alpha, beta = check_coefficients(alpha, beta)
    session = Session("probabilistic", {"alpha": alpha, "beta": beta, "theta_hidden": theta_hidden},
                      mode, seed, tol)
    resource = resource_basic(alpha, beta)
    abc = _setup(session, resource, ["bob", "charlie"])
    d = session.prepare_state("source", angle_register(theta_hidden), "angle-encoding qutrit")
    session.distribute("d", "source", "alice")
    state = tensor_all([abc, d])
    state = session.apply(state, "alice", gates.controlled_w(), [0, 3])
    result, full = session.measure(state, "alice", computational_basis(3, 3))
    success = full.branch(0)
    session.check("success_probability", success.probability - 1 / 3)
    session.check("failure_probability", sum(b.probability for b in full.branches[1:]) - 2 / 3)

    postselected = condition(success.state, 3, success.vector)
    expected = apply_local(resource.state, gates.sender_phase_basic(theta_hidden), [0])
    session.check("postselected_state", 1.0 - fidelity_up_to_global_phase(postselected, expected))
    session.extras["postselected_fidelity"] = fidelity_up_to_global_phase(postselected, expected)

    target = gates.equatorial_qubit(theta_hidden, alpha, beta)
    conditional = None
    for branch in result.branches:
        if branch.outcome != 0:
            session.verify_step("alice", "ancilla not |0>: run abandoned", branch=(branch.outcome,))
            session.outcomes.append(OutcomeRecord((branch.outcome,), f"d={branch.outcome}",
                                                  branch.probability, False))
            continue
        conditional, _ = deliver(
            session, postselected, "alice", gates.qutrit_basis(0), ["bob", "charlie"],
            lambda m: [gates.correction_basic(m)] * 2, [target, target],
            prefix=(0,), prefix_probability=branch.probability,
        )
    if conditional is None:
        conditional = list(measure(postselected, gates.qutrit_basis(0)).probabilities)
    _probability_checks(session, conditional, 1 / 3, name="message")
    session.accounting = Accounting(2, 2, 2, (MessageStats(3, tuple(conditional)),))
    return session.finish()


def run_n_party(alpha: float, beta: float, theta: float, N: int, mode: str = "enumerate",
                seed: int | None = None, tol: float = ALGEBRA_TOL) -> ProtocolTranscript:
    if not 1 <= N <= MAX_PARTIES:
        raise HilbertError(f"N must be in 1..{MAX_PARTIES}, got {N}")
    alpha, beta = check_coefficients(alpha, beta)
    session = Session("nparty", {"alpha": alpha, "beta": beta, "theta": theta, "n": N}, mode, seed, tol)
    receivers = [f"party{i + 1}" for i in range(N)]
    state = _setup(session, resource_n_party(alpha, beta, N), receivers)
    state = session.apply(state, "alice", gates.sender_phase_n(theta, N), [0])
    target = gates.equatorial_qubit(theta, alpha, beta)
    probs, _ = deliver(
        session, state, "alice", gates.fourier_basis(N + 1, 0), receivers,
        lambda m: [gates.correction_n(m, N)] * N, [target] * N,
    )
    _probability_checks(session, probs, 1 / (N + 1))
    session.accounting = Accounting(N, 2, 1, (MessageStats(N + 1, tuple(probs)),))
    return session.finish()


def run_diff_states(theta1: float, theta2: float, mode: str = "enumerate", seed: int | None = None,
                    tol: float = ALGEBRA_TOL) -> ProtocolTranscript:
    session = Session("diff-states", {"theta1": theta1, "theta2": theta2}, mode, seed, tol)
    state = _setup(session, resource_diff_states(), ["bob", "charlie"])
    state = session.apply(state, "alice", gates.sender_phase_diff(theta1, theta2), [0])
    probs, _ = deliver(
        session, state, "alice", gates.fourier_basis(4, 0), ["bob", "charlie"],
        lambda j: list(gates.correction_diff(j)),
        [gates.equatorial_qubit(theta1), gates.equatorial_qubit(theta2)],
    )
    _probability_checks(session, probs, 1 / 4)
    session.extras["note"] = "entanglement equals the teleportation cost; only classical cost is reduced"
    session.accounting = Accounting(2, 2, 1, (MessageStats(4, tuple(probs)),))
    return session.finish()


def run_qutrit_broadcast(theta1: float, theta2: float, alpha: float = 1 / math.sqrt(3),
                         beta: float = 1 / math.sqrt(3), gamma: float = 1 / math.sqrt(3),
                         mode: str = "enumerate", seed: int | None = None,
                         tol: float = ALGEBRA_TOL) -> ProtocolTranscript:
    alpha, beta, gamma = check_coefficients(alpha, beta, gamma)
    session = Session("qutrit", {"theta1": theta1, "theta2": theta2, "alpha": alpha, "beta": beta,
                                 "gamma": gamma}, mode, seed, tol)
    state = _setup(session, resource_qutrit(alpha, beta, gamma), ["bob", "charlie"])
    state = session.apply(state, "alice", gates.sender_phase_qutrit(theta1, theta2), [0])
    for m in range(6):
        _, residual = gates.qutrit_correction_phases(m)
        session.check(f"correction_consistency[{m}]", residual)
    target = gates.equatorial_qutrit(theta1, theta2, alpha, beta, gamma)
    probs, _ = deliver(
        session, state, "alice", gates.six_level_basis(0), ["bob", "charlie"],
        lambda m: [gates.correction_qutrit(m)] * 2, [target, target],
    )
    _probability_checks(session, probs, 1 / 6)
    session.accounting = Accounting(2, 3, 1, (MessageStats(6, tuple(probs)),))
    return session.finish()
