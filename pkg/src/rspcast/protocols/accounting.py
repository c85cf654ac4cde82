"""Entanglement and classical-communication accounting against teleportation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..circuits import resource_basic
from ..hilbert import ALGEBRA_TOL, SubsystemLayout, StateVector, entanglement_entropy
from .transcript import IncompleteTranscript, ProtocolTranscript


@dataclass(frozen=True)
class CostRow:
    entanglement_ebits: float
    classical_bits: float
    measurement_count: int


@dataclass(frozen=True)
class ResourceReport(CostRow):
    baseline: CostRow
    equiprobable: bool


def message_bits(alphabet_size: int, probabilities, tol: float = ALGEBRA_TOL) -> tuple[float, bool]:
    """log2 of the alphabet when the symbols are equiprobable, Shannon entropy otherwise.

    A broadcast costs the same regardless of how many receivers hear it.
    """
    probs = np.asarray(probabilities, dtype=float)
    if len(probs) != alphabet_size:
        raise IncompleteTranscript("message statistics do not cover the alphabet")
    if np.max(np.abs(probs - 1 / alphabet_size)) <= tol:
        return math.log2(alphabet_size), True
    probs = probs[probs > 0]
    return float(-np.sum(probs * np.log2(probs))), False


def teleportation_baseline(receivers: int, local_dim: int = 2) -> CostRow:
    """One maximally entangled pair, one Bell measurement, 2 log2(d) bits per receiver."""
    per = math.log2(local_dim)
    return CostRow(receivers * per, 2 * receivers * per, receivers)


def resource_report(transcript: ProtocolTranscript) -> ResourceReport:
    if transcript.resource is None or transcript.accounting is None:
        raise IncompleteTranscript(f"{transcript.protocol} transcript carries no resource accounting")
    r, acc = transcript.resource, transcript.accounting
    state = StateVector(SubsystemLayout(r.dims, r.labels), np.array(r.amplitudes))
    ebits = entanglement_entropy(state, r.sender)
    bits, equi = 0.0, True
    for msg in acc.messages:
        b, e = message_bits(msg.alphabet_size, msg.probabilities)
        bits += b
        equi &= e
    return ResourceReport(ebits, bits, acc.measurement_count,
                          teleportation_baseline(acc.receivers, acc.local_dim), equi)


def entropy_closed_form(p: float) -> float:
    """Sender-side entropy of the two-receiver template with p = alpha**2."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")

    def xlog(x: float) -> float:
        return x * math.log2(x) if x > 0 else 0.0

    return -2 * xlog(p) - 2 * xlog(1 - p) - 2 * p * (1 - p) + 0.0  # no signed zero


def entropy_numerical(p: float) -> float:
    res = resource_basic(math.sqrt(p), math.sqrt(1 - p))
    return entanglement_entropy(res.state, res.sender)


@dataclass(frozen=True)
class SweepRow:
    p: float
    closed_form: float
    numerical: float

    @property
    def difference(self) -> float:
        return abs(self.closed_form - self.numerical)


def entropy_sweep(p_from: float = 0.0, p_to: float = 1.0, steps: int = 101) -> list[SweepRow]:
    if not 0.0 <= p_from < p_to <= 1.0:
        raise ValueError(f"need 0 <= p_from < p_to <= 1, got [{p_from}, {p_to}]")
    if steps < 2:
        raise ValueError("steps must be at least 2")
    rows = []
    for p in np.linspace(p_from, p_to, steps):
        p = float(p)
        rows.append(SweepRow(p, entropy_closed_form(p), entropy_numerical(p)))
    return rows
