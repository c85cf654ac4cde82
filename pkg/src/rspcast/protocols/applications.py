"""Uses of the broadcast: keyed qubit transfer, voting, Bell pairs, controlled entanglement."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .. import gates
from ..circuits import resource_basic
from ..hilbert import (
    ALGEBRA_TOL,
    StateVector,
    SubsystemLayout,
    apply_local,
    condition,
    entanglement_entropy,
    fidelity_up_to_global_phase,
    from_kets,
    make_state,
    measure,
    partial_trace,
    relative_phase,
    tensor_all,
    trace_distance,
)
from .broadcast import _setup, deliver, run_n_party
from .transcript import (
    Accounting,
    FinalState,
    MessageStats,
    OutcomeRecord,
    ProtocolTranscript,
    Session,
    Step,
)

R2 = 1 / math.sqrt(2)
EAVESDROPPER_TOL = 1e-6


def _amps(state: StateVector) -> tuple[complex, ...]:
    return tuple(complex(x) for x in state.amplitudes)


def _final(holder: str, state: StateVector, target: StateVector) -> FinalState:
    return FinalState(holder, state.dims, _amps(state), _amps(target),
                      fidelity_up_to_global_phase(state, target), relative_phase(target, state))


def eavesdropper_average(phi: float, grid_points: int) -> np.ndarray:
    """Midpoint-rule average over theta in [0, pi) of |psi(theta+phi)><psi(theta+phi)|."""
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    thetas = (np.arange(grid_points) + 0.5) * math.pi / grid_points
    rho = np.zeros((2, 2), dtype=complex)
    for theta in thetas:
        v = gates.equatorial_qubit(theta + phi).amplitudes
        rho += np.outer(v, v.conj())
    return rho / grid_points


def run_encrypted_transfer(theta_key: float, phi_message: float, grid_points: int = 256,
                           mode: str = "enumerate", seed: int | None = None,
                           tol: float = ALGEBRA_TOL) -> ProtocolTranscript:
    """Bob sends Charlie an equatorial qubit keyed by the broadcast angle.

    Alice first broadcasts psi(theta_key) to both. Bob rotates his copy by
    phi_message and hands it to Charlie, who projects onto the odd-parity
    subspace and relabels |10> -> |11> to leave the message on qubit b.
    """
    session = Session("encrypted", {"theta_key": theta_key, "phi_message": phi_message,
                                    "grid_points": grid_points}, mode, seed, tol)
    state = _setup(session, resource_basic(R2, R2), ["bob", "charlie"])
    state = session.apply(state, "alice", gates.sender_phase_basic(theta_key), [0])
    key = gates.equatorial_qubit(theta_key)
    probs, delivered = deliver(
        session, state, "alice", gates.qutrit_basis(0), ["bob", "charlie"],
        lambda m: [gates.correction_basic(m)] * 2, [key, key], record_outcomes=False,
    )
    session.check("key_probability_sum", sum(probs) - 1.0)

    message_target = gates.equatorial_qubit(phi_message)
    rotated_target = gates.equatorial_qubit(theta_key + phi_message)
    projector = gates.projector_p()
    relabel = gates.cnot()
    for path, bc in delivered.items():
        m = path[0]
        session.reassign("b", "bob")
        bc = session.apply(bc, "bob", gates.z_rotation(phi_message), [0], branch=path)
        sent = partial_trace(bc, [0]).dominant_state()
        session.check(f"rotated_key[{m}]", 1.0 - fidelity_up_to_global_phase(sent, rotated_target))
        session.distribute("b", "bob", "charlie")
        result, full = session.measure_projector(bc, "charlie", projector, [0, 1], branch=path)
        fired = full.branch(1).probability
        session.check(f"projector_probability[{m}]", fired - 0.5)
        for branch in result.branches:
            sub = path + (branch.outcome,)
            prob = probs[m] * branch.probability
            if branch.outcome == 0:
                session.verify_step("charlie", "projector did not fire; message lost", branch=sub)
                session.outcomes.append(OutcomeRecord(sub, f"{m}:P=0", prob, False))
                continue
            out = session.apply(branch.state, "charlie", relabel, [0, 1], branch=sub)
            msg = condition(out, 1, [0, 1])
            final = _final("charlie:b", msg, message_target)
            ok = session.check(f"message_fidelity[{m}]", 1.0 - final.fidelity)
            session.verify_step("charlie", f"message fidelity {final.fidelity:.15f}", branch=sub)
            session.outcomes.append(OutcomeRecord(sub, f"{m}:P=1", prob, ok,
                                                  corrections=("charlie:relabel",), final_states=(final,)))

    rho = eavesdropper_average(phi_message, grid_points)
    distance = trace_distance(rho, np.eye(2) / 2)
    session.check("eavesdropper_trace_distance", distance, EAVESDROPPER_TOL)
    session.extras["eavesdropper_trace_distance"] = distance
    session.accounting = Accounting(2, 2, 2, (MessageStats(3, tuple(probs)),))
    return session.finish()


def _deliver_one(theta: float, seed: int) -> StateVector:
    """Equatorial qubit handed to a single receiver by the one-party broadcast."""
    t = run_n_party(R2, R2, theta, 1, mode="sample", seed=seed)
    (rec,) = t.outcomes
    return make_state((2,), rec.final_states[0].amplitudes)


def run_voting(votes: Sequence[int], theta: float, decoys_per_voter: int = 2, seed: int = 0,
               tamper: Iterable[tuple[int, int]] = (), tol: float = ALGEBRA_TOL) -> ProtocolTranscript:
    """Votes encoded as identity / sigma_z on an equatorial qubit only Alice can read.

    Each voter gets an independent vote angle plus ``decoys_per_voter``
    decoy qubits whose angles Alice announces. ``tamper`` lists
    ``(voter, decoy)`` pairs hit by an extra sigma_z in transit.
    """
    votes = [int(v) for v in votes]
    if any(v not in (0, 1) for v in votes):
        raise ValueError(f"votes must be bits, got {votes}")
    tamper = {(int(i), int(j)) for i, j in tamper}
    session = Session("voting", {"votes": votes, "theta": theta, "decoys": decoys_per_voter,
                                 "tamper": sorted(list(t) for t in tamper)}, "sample", seed, tol)
    session.add_party("alice")
    rng = np.random.default_rng(seed)
    z = gates.pauli_z()
    decoded, flagged = [], []
    for i, vote in enumerate(votes):
        voter = f"voter{i + 1}"
        session.add_party(voter)
        angle = float((theta + rng.uniform(0, math.pi)) % math.pi)
        decoy_angles = [float(a) for a in rng.uniform(0, math.pi, decoys_per_voter)]
        qubit = _deliver_one(angle, int(rng.integers(2 ** 63)))
        session.steps.append(_step("distribute", "alice", f"vote qubit to {voter}", (i,)))

        for j, a in enumerate(decoy_angles):
            decoy = _deliver_one(a, int(rng.integers(2 ** 63)))
            if (i, j) in tamper:
                decoy = _apply(decoy, z)
                session.steps.append(_step("sender-op", "eve", f"sigma_z on decoy {j} of {voter}", (i, j)))
            session.steps.append(_step("message", "alice", f"announce decoy angle {a:.17g}", (i, j)))
            res = measure(decoy, gates.equatorial_basis(a, 0, -math.pi / 2), "sample",
                          int(rng.integers(2 ** 63)))
            if res.branches[0].outcome != 0:
                flagged.append([i, j])
                session.steps.append(_step("verify", voter, f"decoy {j} discrepancy", (i, j)))

        unflipped = gates.equatorial_qubit(angle)
        flipped = _apply(unflipped, z)
        session.check(f"orthogonality[{i}]", fidelity_up_to_global_phase(unflipped, flipped), 1e-12)
        returned = _apply(qubit, z) if vote else qubit
        if vote:
            session.ops[voter].append(z.name)
        session.steps.append(_step("correct" if vote else "verify", voter,
                                   "apply sigma_z" if vote else "leave qubit", (i,)))
        res = measure(returned, gates.equatorial_basis(angle, 0, -math.pi / 2), "enumerate")
        outcome = max(res.branches, key=lambda b: b.probability)
        decoded.append(outcome.outcome)
        session.check(f"decoded[{i}]", float(outcome.outcome != vote) + (1.0 - outcome.probability))
        expected = flipped if vote else unflipped
        session.outcomes.append(OutcomeRecord((i,), f"{voter}:vote", outcome.probability,
                                              outcome.outcome == vote,
                                              final_states=(_final(voter, returned, expected),)))
    session.check("tamper_detection", float(sorted(map(tuple, flagged)) != sorted(tamper)), 0.0)
    session.extras.update({"decoded": decoded, "flagged": flagged})
    return session.finish()


def _apply(state: StateVector, op) -> StateVector:
    return apply_local(state, op, [0])


def _step(kind: str, party: str, detail: str, branch: tuple[int, ...]) -> Step:
    return Step(kind, party, detail, branch=branch)


def bell_targets() -> list[StateVector]:
    layout = SubsystemLayout((2, 2), ("b", "c"))
    return [
        from_kets(layout, {(0, 0): R2, (1, 1): R2}),
        from_kets(layout, {(0, 0): R2, (1, 1): -R2}),
        from_kets(layout, {(0, 1): R2, (1, 0): R2}),
    ]


def run_bell_sharing(mode: str = "enumerate", seed: int | None = None,
                     tol: float = ALGEBRA_TOL) -> ProtocolTranscript:
    session = Session("bell", {}, mode, seed, tol)
    state = _setup(session, resource_basic(R2, R2), ["bob", "charlie"])
    basis = gates.plus_minus_two_basis(0)
    result, full = session.measure(state, "alice", basis)
    for m, expected in enumerate((0.25, 0.25, 0.5)):
        session.check(f"probability[{m}]", full.branch(m).probability - expected)
    targets = bell_targets()
    for branch in result.branches:
        path = (branch.outcome,)
        msg = session.message("alice", ["bob", "charlie"], branch.outcome, 3, branch=path)
        bc = branch.remainder()
        final = _final("bob+charlie", bc, targets[branch.outcome])
        entropy = entanglement_entropy(bc, [0])
        ok = session.check(f"bell_fidelity[{branch.outcome}]", 1.0 - final.fidelity)
        ok &= session.check(f"receiver_entropy[{branch.outcome}]", entropy - 1.0)
        session.verify_step("bob,charlie", f"Bell fidelity {final.fidelity:.15f}, entropy {entropy:.15f}",
                            branch=path)
        session.outcomes.append(OutcomeRecord(path, basis.labels[branch.outcome], branch.probability,
                                              ok, msg, final_states=(final,)))
    session.accounting = Accounting(2, 2, 1, (MessageStats(3, full.probabilities),))
    return session.finish()


def controlled_target(theta0: float, theta1: float) -> StateVector:
    """(|0>|psi0>|psi0> + |1>|psi1>|psi1>)/sqrt2 on (a', b, c), built directly."""
    p0, p1 = gates.equatorial_qubit(theta0).amplitudes, gates.equatorial_qubit(theta1).amplitudes
    amps = np.concatenate([np.kron(p0, p0), np.kron(p1, p1)]) * R2
    return make_state(SubsystemLayout((2, 2, 2), ("a'", "b", "c")), amps)


def run_controlled_entanglement(theta0: float, theta1: float, mode: str = "enumerate",
                                seed: int | None = None, tol: float = ALGEBRA_TOL) -> ProtocolTranscript:
    session = Session("controlled", {"theta0": theta0, "theta1": theta1}, mode, seed, tol)
    abc = _setup(session, resource_basic(R2, R2), ["bob", "charlie"])
    aux = session.prepare_state("alice", make_state(SubsystemLayout((2,), ("a'",)), [R2, R2]),
                                "control qubit a' in |+x>")
    state = tensor_all([aux, abc])
    state = session.apply(state, "alice", gates.controlled_sender_phase(theta0, theta1), [0, 1])
    expected = controlled_target(theta0, theta1)
    p0 = gates.equatorial_qubit(theta0).amplitudes
    p1 = gates.equatorial_qubit(theta1).amplitudes
    pair0, pair1 = np.kron(p0, p0), np.kron(p1, p1)

    result, full = session.measure(state, "alice", gates.qutrit_basis(1))
    session.check("outcome_equiprobable", max(abs(p - 1 / 3) for p in full.probabilities))
    corrections = {}
    x_probs = []
    for branch in result.branches:
        path = (branch.outcome,)
        m = branch.outcome
        session.message("alice", ["bob", "charlie"], m, 3, branch=path)
        op = gates.correction_basic(m)
        corrections[m] = op.name
        current = branch.state
        for party, idx in (("bob", 2), ("charlie", 3)):
            current = session.apply(current, party, op, [idx], kind="correct", branch=path)
        shared = condition(current, 1, branch.vector)
        final = _final("a'+bob+charlie", shared, expected)
        session.verify_step("alice,bob,charlie", f"controlled state fidelity {final.fidelity:.15f}",
                            branch=path)
        ok = session.check(f"controlled_state_fidelity[{m}]", 1.0 - final.fidelity)

        xres, xfull = session.measure(shared, "alice", gates.x_basis(0), branch=path)
        x_probs = list(xfull.probabilities)
        for xb in xres.branches:
            if xb.state is None:
                continue
            sub = path + (xb.outcome,)
            sign = 1 if xb.outcome == 0 else -1
            direct = pair0 + sign * pair1
            bc_target = make_state(SubsystemLayout((2, 2), ("b", "c")), direct / np.linalg.norm(direct))
            bc = xb.remainder()
            fin = _final("bob+charlie", bc, bc_target)
            leaf_ok = session.check(f"x_branch_fidelity[{m},{xb.outcome}]", 1.0 - fin.fidelity)
            session.extras.setdefault("bc_entropy", {})[f"{m},{xb.outcome}"] = entanglement_entropy(bc, [0])
            x_msg = session.message("alice", ["bob", "charlie"], xb.outcome, 2, branch=sub)
            session.outcomes.append(OutcomeRecord(
                sub, f"u{m}:{'+x' if sign > 0 else '-x'}", branch.probability * xb.probability,
                ok and leaf_ok, x_msg, (f"bob:{op.name}", f"charlie:{op.name}"), (final, fin),
            ))
    session.extras["corrections"] = {str(k): v for k, v in sorted(corrections.items())}
    session.accounting = Accounting(2, 2, 2, (MessageStats(3, full.probabilities),
                                              MessageStats(2, tuple(x_probs))))
    return session.finish()
