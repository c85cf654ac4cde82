"""Transcript records and the per-run session that produces them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ..circuits import ResourceState
from ..gates import LocalOperator
from ..hilbert import (
    ALGEBRA_TOL,
    HilbertError,
    MeasurementBasis,
    MeasurementResult,
    StateVector,
    apply_local,
    measure,
    measure_projector,
)

SCHEMA_VERSION = 1


class LocalityError(HilbertError):
    """An operation touched subsystems its party does not hold."""


class IncompleteTranscript(ValueError):
    pass


@dataclass(frozen=True)
class Party:
    name: str
    held: tuple[str, ...]
    applied_ops: tuple[str, ...] = ()


@dataclass(frozen=True)
class ClassicalMessage:
    sender: str
    recipients: tuple[str, ...]
    payload: int
    alphabet_size: int

    def __post_init__(self):
        if not 0 <= self.payload < self.alphabet_size:
            raise ValueError(f"payload {self.payload} outside alphabet of size {self.alphabet_size}")


@dataclass(frozen=True)
class Step:
    kind: str  # prepare | distribute | sender-op | measure | message | correct | verify
    party: str
    detail: str
    operator: str = ""
    subsystems: tuple[str, ...] = ()
    branch: tuple[int, ...] = ()


@dataclass(frozen=True)
class FinalState:
    """A delivered state and its comparison with an independently built target.

    ``phase`` is the exact relative phase to the target, or ``None`` for
    reduced (single-receiver) states where no global phase is defined.
    """

    holder: str
    dims: tuple[int, ...]
    amplitudes: tuple[complex, ...]
    target: tuple[complex, ...]
    fidelity: float
    phase: float | None = None


@dataclass(frozen=True)
class OutcomeRecord:
    path: tuple[int, ...]
    label: str
    probability: float
    success: bool
    message: ClassicalMessage | None = None
    corrections: tuple[str, ...] = ()
    final_states: tuple[FinalState, ...] = ()


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    passed: bool


@dataclass(frozen=True)
class ResourceRecord:
    provenance: str
    construction: str
    dims: tuple[int, ...]
    labels: tuple[str, ...]
    sender: tuple[int, ...]
    amplitudes: tuple[complex, ...]


@dataclass(frozen=True)
class MessageStats:
    """Distribution of one classical broadcast, from exact branch probabilities."""

    alphabet_size: int
    probabilities: tuple[float, ...]


@dataclass(frozen=True)
class Accounting:
    receivers: int
    local_dim: int
    measurement_count: int
    messages: tuple[MessageStats, ...]


@dataclass(frozen=True)
class ProtocolTranscript:
    protocol: str
    parameters: dict[str, Any]
    mode: str
    seed: int | None
    resource: ResourceRecord | None
    parties: tuple[Party, ...]
    steps: tuple[Step, ...]
    outcomes: tuple[OutcomeRecord, ...]
    checks: tuple[Check, ...]
    accounting: Accounting | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def verified(self) -> bool:
        return all(c.passed for c in self.checks)

    def outcome(self, *path: int) -> OutcomeRecord:
        for rec in self.outcomes:
            if rec.path == tuple(path):
                return rec
        raise KeyError(path)

    def failed_checks(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


def _complex_list(values) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in values]


def _complex_tuple(pairs) -> tuple[complex, ...]:
    return tuple(complex(re, im) for re, im in pairs)


def transcript_to_dict(t: ProtocolTranscript) -> dict[str, Any]:
    def final(fs: FinalState):
        return {
            "holder": fs.holder, "dims": list(fs.dims),
            "amplitudes": _complex_list(fs.amplitudes), "target": _complex_list(fs.target),
            "fidelity": fs.fidelity, "phase": fs.phase,
        }

    def message(m: ClassicalMessage | None):
        if m is None:
            return None
        return {"from": m.sender, "to": list(m.recipients), "payload": m.payload,
                "alphabet_size": m.alphabet_size}

    out: dict[str, Any] = {
        "schema": SCHEMA_VERSION,
        "protocol": t.protocol,
        "parameters": t.parameters,
        "mode": t.mode,
        "seed": t.seed,
        "resource": None,
        "parties": [{"name": p.name, "held": list(p.held), "applied_ops": list(p.applied_ops)}
                    for p in t.parties],
        "steps": [{"kind": s.kind, "party": s.party, "detail": s.detail, "operator": s.operator,
                   "subsystems": list(s.subsystems), "branch": list(s.branch)} for s in t.steps],
        "outcomes": [{
            "path": list(o.path), "label": o.label, "probability": o.probability,
            "success": o.success, "message": message(o.message),
            "corrections": list(o.corrections),
            "final_states": [final(fs) for fs in o.final_states],
        } for o in t.outcomes],
        "checks": [{"name": c.name, "residual": c.residual, "passed": c.passed} for c in t.checks],
        "accounting": None,
        "extras": t.extras,
        "verified": t.verified,
    }
    if t.resource is not None:
        r = t.resource
        out["resource"] = {
            "provenance": r.provenance, "construction": r.construction, "dims": list(r.dims),
            "labels": list(r.labels), "sender": list(r.sender),
            "amplitudes": _complex_list(r.amplitudes),
        }
    if t.accounting is not None:
        a = t.accounting
        out["accounting"] = {
            "receivers": a.receivers, "local_dim": a.local_dim,
            "measurement_count": a.measurement_count,
            "messages": [{"alphabet_size": m.alphabet_size, "probabilities": list(m.probabilities)}
                         for m in a.messages],
        }
    return out


def transcript_from_dict(d: dict[str, Any]) -> ProtocolTranscript:
    if d.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported transcript schema {d.get('schema')!r}")

    def message(m):
        if m is None:
            return None
        return ClassicalMessage(m["from"], tuple(m["to"]), m["payload"], m["alphabet_size"])

    resource = None
    if d["resource"] is not None:
        r = d["resource"]
        resource = ResourceRecord(r["provenance"], r["construction"], tuple(r["dims"]),
                                  tuple(r["labels"]), tuple(r["sender"]),
                                  _complex_tuple(r["amplitudes"]))
    accounting = None
    if d["accounting"] is not None:
        a = d["accounting"]
        accounting = Accounting(a["receivers"], a["local_dim"], a["measurement_count"], tuple(
            MessageStats(m["alphabet_size"], tuple(m["probabilities"])) for m in a["messages"]
        ))
    return ProtocolTranscript(
        protocol=d["protocol"],
        parameters=d["parameters"],
        mode=d["mode"],
        seed=d["seed"],
        resource=resource,
        parties=tuple(Party(p["name"], tuple(p["held"]), tuple(p["applied_ops"])) for p in d["parties"]),
        steps=tuple(Step(s["kind"], s["party"], s["detail"], s["operator"], tuple(s["subsystems"]),
                         tuple(s["branch"])) for s in d["steps"]),
        outcomes=tuple(OutcomeRecord(
            tuple(o["path"]), o["label"], o["probability"], o["success"], message(o["message"]),
            tuple(o["corrections"]),
            tuple(FinalState(fs["holder"], tuple(fs["dims"]), _complex_tuple(fs["amplitudes"]),
                             _complex_tuple(fs["target"]), fs["fidelity"], fs["phase"])
                  for fs in o["final_states"]),
        ) for o in d["outcomes"]),
        checks=tuple(Check(c["name"], c["residual"], c["passed"]) for c in d["checks"]),
        accounting=accounting,
        extras=d["extras"],
    )


class Session:
    """Mutable bookkeeping for one protocol run.

    Parties hold subsystems by label, so the locality audit survives
    subsystems being removed after measurement.
    """

    def __init__(self, protocol: str, parameters: dict[str, Any], mode: str = "enumerate",
                 seed: int | None = None, tol: float = ALGEBRA_TOL):
        if mode not in ("enumerate", "sample"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "sample" and seed is None:
            raise ValueError("sample mode requires a seed")
        self.protocol = protocol
        self.parameters = dict(parameters)
        self.mode = mode
        self.seed = seed
        self.tol = tol
        self._rng = np.random.default_rng(seed) if seed is not None else None
        self.holdings: dict[str, list[str]] = {}
        self.ops: dict[str, list[str]] = {}
        self.steps: list[Step] = []
        self.outcomes: list[OutcomeRecord] = []
        self.checks: list[Check] = []
        self.resource: ResourceRecord | None = None
        self.accounting: Accounting | None = None
        self.extras: dict[str, Any] = {}

    def add_party(self, name: str, held: Sequence[str] = ()) -> None:
        self.holdings.setdefault(name, []).extend(held)
        self.ops.setdefault(name, [])

    def owner(self, label: str) -> str:
        for name, held in self.holdings.items():
            if label in held:
                return name
        raise LocalityError(f"subsystem {label!r} is not held by anyone")

    def prepare(self, party: str, resource: ResourceState) -> StateVector:
        layout = resource.state.layout
        labels = layout.labels or tuple(str(i) for i in range(len(layout)))
        self.add_party(party, labels)
        self.resource = ResourceRecord(
            resource.provenance, resource.construction, layout.dims, labels,
            resource.sender, tuple(complex(x) for x in resource.state.amplitudes),
        )
        self.steps.append(Step("prepare", party, resource.provenance, subsystems=labels))
        return resource.state

    def prepare_state(self, party: str, state: StateVector, detail: str) -> StateVector:
        labels = state.layout.labels or ()
        self.add_party(party, labels)
        self.steps.append(Step("prepare", party, detail, subsystems=labels))
        return state

    def distribute(self, label: str, sender: str, receiver: str) -> None:
        if label not in self.holdings.get(sender, []):
            raise LocalityError(f"{sender} does not hold {label!r}")
        self.holdings[sender].remove(label)
        self.add_party(receiver, [label])
        self.steps.append(Step("distribute", sender, f"send {label} to {receiver}", subsystems=(label,)))

    def reassign(self, label: str, party: str) -> None:
        """Rewind a subsystem to ``party`` when replaying a different branch."""
        for held in self.holdings.values():
            if label in held:
                held.remove(label)
        self.add_party(party, [label])
        self.steps.append(Step("rewind", party, f"return {label} to {party}", subsystems=(label,)))

    def _labels(self, state: StateVector, targets: Sequence[int]) -> tuple[str, ...]:
        labels = state.layout.labels
        if labels is None:
            raise HilbertError("session states must carry subsystem labels")
        return tuple(labels[t] for t in targets)

    def _audit(self, party: str, labels: Sequence[str]) -> None:
        stray = [lab for lab in labels if lab not in self.holdings.get(party, [])]
        if stray:
            raise LocalityError(f"{party} acted on {stray} which it does not hold")

    def apply(self, state: StateVector, party: str, op: LocalOperator, targets: Sequence[int],
              kind: str = "sender-op", branch: tuple[int, ...] = ()) -> StateVector:
        labels = self._labels(state, targets)
        self._audit(party, labels)
        self.ops[party].append(op.name)
        self.steps.append(Step(kind, party, f"apply {op.name}", op.name, labels, branch))
        return apply_local(state, op, targets)

    def next_seed(self) -> int | None:
        if self._rng is None:
            return None
        return int(self._rng.integers(0, 2 ** 63))

    def measure(self, state: StateVector, party: str, basis: MeasurementBasis,
                branch: tuple[int, ...] = ()) -> tuple[MeasurementResult, MeasurementResult]:
        """Returns (result in session mode, full enumeration)."""
        labels = self._labels(state, [basis.target])
        self._audit(party, labels)
        name = ",".join(basis.labels) if basis.labels else "computational"
        self.steps.append(Step("measure", party, f"measure {labels[0]} in {{{name}}}",
                               subsystems=labels, branch=branch))
        full = measure(state, basis, "enumerate")
        if self.mode == "enumerate":
            return full, full
        return measure(state, basis, "sample", self.next_seed()), full

    def measure_projector(self, state: StateVector, party: str, projector: LocalOperator,
                          targets: Sequence[int], branch: tuple[int, ...] = ()
                          ) -> tuple[MeasurementResult, MeasurementResult]:
        labels = self._labels(state, targets)
        self._audit(party, labels)
        self.steps.append(Step("measure", party, f"measure projector {projector.name}",
                               projector.name, labels, branch))
        full = measure_projector(state, projector, targets, "enumerate")
        if self.mode == "enumerate":
            return full, full
        return measure_projector(state, projector, targets, "sample", self.next_seed()), full

    def message(self, sender: str, recipients: Sequence[str], payload: int, alphabet: int,
                branch: tuple[int, ...] = ()) -> ClassicalMessage:
        msg = ClassicalMessage(sender, tuple(recipients), payload, alphabet)
        self.steps.append(Step("message", sender, f"broadcast {payload} of {alphabet} to "
                               + ",".join(recipients), branch=branch))
        return msg

    def check(self, name: str, residual: float, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        residual = float(abs(residual))
        passed = bool(residual <= tol) and math.isfinite(residual)
        self.checks.append(Check(name, residual, passed))
        return passed

    def verify_step(self, party: str, detail: str, branch: tuple[int, ...] = ()) -> None:
        self.steps.append(Step("verify", party, detail, branch=branch))

    def finish(self) -> ProtocolTranscript:
        return ProtocolTranscript(
            protocol=self.protocol,
            parameters=self.parameters,
            mode=self.mode,
            seed=self.seed,
            resource=self.resource,
            parties=tuple(Party(n, tuple(h), tuple(self.ops.get(n, ()))) for n, h in self.holdings.items()),
            steps=tuple(self.steps),
            outcomes=tuple(self.outcomes),
            checks=tuple(self.checks),
            accounting=self.accounting,
            extras=self.extras,
        )
