"""Invariant suite behind ``rspcast verify``.

Every invariant yields ``(label, residual)`` pairs; a pair passes when the
residual is at most the invariant's tolerance. Lookups go through module
attributes at call time so a patched constructor shows up in the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from . import circuits, gates, hilbert
from . import protocols as P
from .protocols.transcript import ProtocolTranscript

Residuals = Iterator[tuple[str, float]]
SUITES = ("hilbert", "gates", "circuits", "protocols")


@dataclass(frozen=True)
class Invariant:
    name: str
    suite: str
    run: Callable[[], Residuals]
    tol: float | None = None  # None: use the suite-wide tolerance


@dataclass(frozen=True)
class InvariantResult:
    name: str
    suite: str
    passed: int
    failed: int
    worst: float
    failures: tuple[str, ...]
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.error is None


REGISTRY: list[Invariant] = []


def invariant(name: str, suite: str, tol: float | None = None):
    def wrap(fn):
        REGISTRY.append(Invariant(name, suite, fn, tol))
        return fn
    return wrap


def _rng(salt: int) -> np.random.Generator:
    return np.random.default_rng(20_000 + salt)


def random_state(layout, rng: np.random.Generator) -> hilbert.StateVector:
    layout = hilbert.as_layout(layout)
    v = rng.normal(size=layout.total) + 1j * rng.normal(size=layout.total)
    return hilbert.make_state(layout, v / np.linalg.norm(v))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _unit_pair(rng: np.random.Generator) -> tuple[float, float]:
    a = float(rng.uniform(0, 1))
    return a, math.sqrt(1 - a * a)


def _unit_triple(rng: np.random.Generator) -> tuple[float, float, float]:
    v = np.abs(rng.normal(size=3))
    v /= np.linalg.norm(v)
    return float(v[0]), float(v[1]), float(v[2])


PROTOCOL_LAYOUTS = [(2, 2), (3, 2, 2), (3, 2, 2, 3), (2, 3, 2, 2), (4, 2, 2), (2, 2, 2, 2), (6, 3, 3)] + [
    (n + 1,) + (2,) * n for n in range(1, circuits.MAX_PARTIES + 1)
]


def all_bases() -> list[hilbert.MeasurementBasis]:
    return ([gates.qutrit_basis(), gates.six_level_basis(), gates.plus_minus_two_basis(), gates.x_basis(),
             gates.equatorial_basis(0.37)] + [gates.fourier_basis(d) for d in range(2, 10)])


# --- hilbert -----------------------------------------------------------------

@invariant("unitarity_preservation", "hilbert")
def _unitarity() -> Residuals:
    rng = _rng(1)
    for layout in PROTOCOL_LAYOUTS[:7]:
        for trial in range(5):
            state = random_state(layout, rng)
            target = int(rng.integers(len(layout)))
            d = layout[target]
            op = gates.LocalOperator((d,), random_unitary(d, rng), name="random")
            out = hilbert.apply_local(state, op, [target])
            yield f"{layout}#{trial}", abs(np.linalg.norm(out.amplitudes) - 1)


@invariant("measurement_completeness", "hilbert")
def _completeness() -> Residuals:
    rng = _rng(2)
    for basis in all_bases():
        worst = 0.0
        for _ in range(100):
            state = random_state((basis.dim, 2), rng)
            res = hilbert.measure(state, basis)
            worst = max(worst, abs(sum(res.probabilities) - 1))
        yield f"dim{basis.dim}:{','.join(basis.labels or ())}", worst


@invariant("partial_trace_consistency", "hilbert")
def _partial_trace() -> Residuals:
    rng = _rng(3)
    for layout in PROTOCOL_LAYOUTS[:7]:
        state = random_state(layout, rng)
        n = len(layout)
        for cut in range(1, n):
            side = list(range(cut))
            rest = list(range(cut, n))
            rho = hilbert.partial_trace(state, side)
            yield f"{layout}:trace[{cut}]", abs(np.trace(rho.entries) - 1)
            s1 = hilbert.von_neumann_entropy(rho)
            s2 = hilbert.von_neumann_entropy(hilbert.partial_trace(state, rest))
            yield f"{layout}:schmidt[{cut}]", abs(s1 - s2)


@invariant("entropy_oracle", "hilbert")
def _entropy_oracle() -> Residuals:
    for p in np.linspace(0, 1, 101):
        yield f"p={p:.2f}", abs(P.entropy_closed_form(float(p)) - P.entropy_numerical(float(p)))


@invariant("index_roundtrip", "hilbert", tol=0.0)
def _index_roundtrip() -> Residuals:
    for dims in PROTOCOL_LAYOUTS:
        layout = hilbert.SubsystemLayout(dims)
        bad = sum(layout.flatten(layout.unflatten(i)) != i for i in range(layout.total))
        yield str(dims), float(bad)


# --- gates -------------------------------------------------------------------

def all_operators() -> list[gates.LocalOperator]:
    rng = _rng(4)
    t = [float(x) for x in rng.uniform(-math.pi, math.pi, 2)]
    ops = [
        gates.shift_down_qutrit(), gates.controlled_w(), gates.hadamard(), gates.pauli_z(), gates.cnot(),
        gates.sender_phase_basic(t[0]), gates.sender_phase_diff(*t), gates.sender_phase_qutrit(*t),
        gates.controlled_sender_phase(*t), gates.z_rotation(t[0]), gates.projector_p(),
        gates.controlled_controlled_shift({(0, 2): 1, (2, 0): 1, (1, 2): 2, (2, 1): 2}),
    ]
    ops += [gates.controlled_shift(2, d, p) for d in range(2, 10) for p in (-1, 1, 2)]
    ops += [gates.sender_phase_n(t[0], n) for n in range(1, 9)]
    ops += [gates.correction_basic(m) for m in range(3)] + [gates.correction_basic_x(m) for m in range(3)]
    ops += [gates.correction_n(m, n) for n in range(1, 9) for m in range(n + 1)]
    ops += [op for j in range(4) for op in gates.correction_diff(j)]
    ops += [gates.correction_qutrit(m) for m in range(6)]
    return ops


@invariant("operator_kind", "gates")
def _operator_kind() -> Residuals:
    for op in all_operators():
        m = op.matrix
        if op.kind == "unitary":
            res = np.abs(m.conj().T @ m - np.eye(len(m))).max()
        else:
            res = max(np.abs(m @ m - m).max(), np.abs(m - m.conj().T).max())
        yield op.name, float(res)


def _wrap(x: float) -> float:
    return (x + math.pi) % (2 * math.pi) - math.pi


def qutrit_table_residual(m: int) -> float:
    """Largest violation of the six branch-phase constraints by correction_qutrit(m)."""
    op = gates.correction_qutrit(m)
    chi = np.angle(np.diag(op.matrix))
    coeff = gates.six_level_basis().vectors[m]
    args = np.angle(coeff / coeff[0])
    return max(abs(_wrap(chi[j] + chi[k] - args[level])) for level, (j, k) in gates.QUTRIT_PAIRS.items())


for _m in range(6):
    invariant(f"correction_qutrit[u{_m}]", "gates")(lambda m=_m: iter([(f"u{m}", qutrit_table_residual(m))]))


@invariant("basis_correction_compatibility", "gates")
def _compatibility() -> Residuals:
    """Per branch, measured-vector phase times receiver corrections must be constant."""
    cases = []
    pairs_basic = {0: (0, 0), 1: (1, 1), 2: (0, 1)}
    for m in range(3):
        cb = np.diag(gates.correction_basic(m).matrix)
        phases = [np.conj(gates.qutrit_basis().vectors[m][a]) * cb[b] * cb[c]
                  for a, (b, c) in list(pairs_basic.items()) + [(2, (1, 0))]]
        cases.append((f"basic[u{m}]", phases))
    for j in range(4):
        ub, uc = (np.diag(op.matrix) for op in gates.correction_diff(j))
        phases = [np.conj(gates.fourier_basis(4).vectors[j][k]) * ub[k >> 1] * uc[k & 1] for k in range(4)]
        cases.append((f"diff[u{j}]", phases))
    for n in range(1, 9):
        for m in range(n + 1):
            u = np.diag(gates.correction_n(m, n).matrix)
            phases = [np.conj(gates.fourier_basis(n + 1).vectors[m][k]) * u[0] ** k * u[1] ** (n - k)
                      for k in range(n + 1)]
            cases.append((f"nparty[N={n},u{m}]", phases))
    for label, phases in cases:
        phases = np.asarray(phases)
        yield label, float(np.abs(phases / phases[0] - 1).max())


@invariant("fourier3_matches_qutrit_basis", "gates")
def _fourier3() -> Residuals:
    rng = _rng(5)
    f3, q = gates.fourier_basis(3), gates.qutrit_basis()
    for trial in range(20):
        state = random_state((3,), rng)
        pf = sorted(hilbert.measure(state, f3).probabilities)
        pq = sorted(hilbert.measure(state, q).probabilities)
        yield f"#{trial}", float(np.abs(np.subtract(pf, pq)).max())


# --- circuits ----------------------------------------------------------------

def _cross(a: circuits.ResourceState, b: circuits.ResourceState) -> float:
    return 1 - hilbert.fidelity_up_to_global_phase(a.state, b.state)


@invariant("cross_method_equality", "circuits")
def _cross_method() -> Residuals:
    for a in np.linspace(0, 1, 21):
        b = math.sqrt(max(0.0, 1 - a * a))
        yield f"basic[alpha={a:.2f}]", _cross(circuits.resource_basic(a, b), circuits.resource_basic(a, b, "circuit"))
    yield "diff_bases", _cross(circuits.resource_diff_bases(), circuits.resource_diff_bases("circuit"))
    r = 1 / math.sqrt(2)
    for n in range(1, circuits.MAX_PARTIES + 1):
        yield f"nparty[N={n}]", _cross(circuits.resource_n_party(r, r, n), circuits.resource_n_party(r, r, n, "circuit"))
    for method in ("qudit_circuit", "two_qubit_circuit"):
        yield f"diff_states[{method}]", _cross(circuits.resource_diff_states(), circuits.resource_diff_states(method))
    yield "qutrit", _cross(circuits.resource_qutrit(), circuits.resource_qutrit(method="circuit"))


@invariant("entanglement_values", "circuits")
def _entanglement_values() -> Residuals:
    rd = circuits.resource_diff_states()
    yield "diff_states=2", abs(hilbert.entanglement_entropy(rd.state, rd.sender) - 2.0)
    r = 1 / math.sqrt(2)
    rb = circuits.resource_basic(r, r)
    yield "basic(1/sqrt2)=1.5", abs(hilbert.entanglement_entropy(rb.state, rb.sender) - 1.5)
    rng = _rng(6)
    for n in range(1, circuits.MAX_PARTIES + 1):
        for _ in range(3):
            a, b = _unit_pair(rng)
            res = circuits.resource_n_party(a, b, n)
            excess = hilbert.entanglement_entropy(res.state, res.sender) - math.log2(n + 1)
            yield f"nparty[N={n}]<=log2(N+1)", max(0.0, excess)


@invariant("dicke_correlation", "circuits")
def _dicke() -> Residuals:
    rng = _rng(7)
    for n in range(1, circuits.MAX_PARTIES + 1):
        a = float(rng.uniform(0.2, 0.95))
        b = math.sqrt(1 - a * a)
        res = circuits.resource_n_party(a, b, n)
        for k in range(n + 1):
            cond = hilbert.condition(res.state, 0, np.eye(n + 1)[k])
            yield f"N={n},k={k}", 1 - hilbert.fidelity_up_to_global_phase(
                hilbert.StateVector(hilbert.SubsystemLayout((2,) * n), cond.amplitudes), circuits.dicke_state(n, k))


# --- protocols ---------------------------------------------------------------

DRAWS = 50


def _protocol_draws(name: str, rng: np.random.Generator) -> Iterator[ProtocolTranscript]:
    for i in range(DRAWS):
        t1, t2 = (float(x) for x in rng.uniform(0, math.pi, 2))
        if name == "basic":
            yield P.run_basic_broadcast(*_unit_pair(rng), t1)
        elif name == "diff-bases":
            yield P.run_diff_bases(t1)
        elif name == "nparty":
            yield P.run_n_party(*_unit_pair(rng), t1, 1 + i % circuits.MAX_PARTIES)
        elif name == "diff-states":
            yield P.run_diff_states(t1, t2)
        elif name == "qutrit":
            yield P.run_qutrit_broadcast(t1, t2, *_unit_triple(rng))
        elif name == "controlled":
            yield P.run_controlled_entanglement(t1, t2)


def _fidelity_residuals(name: str, salt: int, outcome: int | None = None) -> Residuals:
    rng = _rng(salt)
    worst: dict[str, float] = {}
    for t in _protocol_draws(name, rng):
        for rec in t.outcomes:
            if outcome is not None and rec.path[0] != outcome:
                continue
            key = f"{name}[u{rec.path[0]}]"
            res = max((1 - fs.fidelity for fs in rec.final_states), default=1.0)
            worst[key] = max(worst.get(key, 0.0), res)
    yield from sorted(worst.items())


for _i, _name in enumerate(("basic", "diff-bases", "nparty", "diff-states", "controlled")):
    invariant(f"deterministic_success[{_name}]", "protocols")(
        lambda n=_name, s=_i: _fidelity_residuals(n, 100 + s))
for _m in range(6):
    invariant(f"deterministic_success[qutrit,u{_m}]", "protocols")(
        lambda m=_m: _fidelity_residuals("qutrit", 110, m))


@invariant("equiprobable_outcomes", "protocols")
def _equiprobable() -> Residuals:
    rng = _rng(8)
    for i in range(10):
        t1, t2 = (float(x) for x in rng.uniform(0, math.pi, 2))
        runs = {
            "basic": (P.run_basic_broadcast(*_unit_pair(rng), t1), 3),
            "nparty": (P.run_n_party(*_unit_pair(rng), t1, 1 + i % 8), 2 + i % 8),
            "diff-states": (P.run_diff_states(t1, t2), 4),
            "qutrit": (P.run_qutrit_broadcast(t1, t2, *_unit_triple(rng)), 6),
        }
        for name, (t, m) in runs.items():
            (stats,) = t.accounting.messages
            yield f"{name}#{i}", float(np.abs(np.asarray(stats.probabilities) - 1 / m).max())


def locality_violations(t: ProtocolTranscript) -> int:
    """Replay a transcript's steps and count operations on subsystems the actor lacks."""
    holdings: dict[str, set[str]] = {}
    bad = 0
    for step in t.steps:
        if step.kind == "prepare":
            holdings.setdefault(step.party, set()).update(step.subsystems)
        elif step.kind in ("distribute", "rewind"):
            receiver = step.detail.rsplit(" to ", 1)[-1]
            for held in holdings.values():
                held.difference_update(step.subsystems)
            holdings.setdefault(receiver, set()).update(step.subsystems)
        elif step.kind in ("sender-op", "correct", "measure") and step.subsystems:
            if not set(step.subsystems) <= holdings.get(step.party, set()):
                bad += 1
    return bad


@invariant("locality_audit", "protocols", tol=0.0)
def _locality() -> Residuals:
    runs = [P.run_single_receiver_rsp(0.3), P.run_basic_broadcast(0.6, 0.8, 0.4), P.run_diff_bases(0.2),
            P.run_probabilistic_unknown_angle(0.6, 0.8, 1.1), P.run_n_party(0.6, 0.8, 0.5, 4),
            P.run_diff_states(0.3, 1.2), P.run_qutrit_broadcast(0.2, 0.9), P.run_encrypted_transfer(0.4, 0.7, 16),
            P.run_bell_sharing(), P.run_controlled_entanglement(0.1, 1.3)]
    for t in runs:
        yield t.protocol, float(locality_violations(t))


@invariant("probabilistic_failures", "protocols")
def _probabilistic() -> Residuals:
    rng = _rng(9)
    for i in range(20):
        t = P.run_probabilistic_unknown_angle(*_unit_pair(rng), float(rng.uniform(0, math.pi)))
        failed = sum(r.probability for r in t.outcomes if len(r.path) == 1)
        corrected = sum(len(r.corrections) for r in t.outcomes if len(r.path) == 1)
        yield f"#{i}", abs(failed - 2 / 3) + corrected


@invariant("resource_dominance", "protocols", tol=0.0)
def _dominance() -> Residuals:
    rng = _rng(10)
    same_state = []
    for _ in range(5):
        same_state.append(P.run_basic_broadcast(*_unit_pair(rng), 0.3))
    same_state += [P.run_n_party(*_unit_pair(rng), 0.3, n) for n in range(2, 9)]
    for t in same_state + [P.run_diff_states(0.1, 0.2), P.run_qutrit_broadcast(0.1, 0.2), P.run_n_party(0.6, 0.8, 0.3, 1)]:
        rep = P.resource_report(t)
        strict = t in same_state
        over_e = rep.entanglement_ebits - rep.baseline.entanglement_ebits + (1e-12 if strict else -1e-12)
        over_b = rep.classical_bits - rep.baseline.classical_bits + 1e-12
        yield f"{t.protocol}{t.parameters.get('n', '')}", float(max(0.0, over_e) + max(0.0, over_b))


@invariant("sample_enumerate_consistency", "protocols", tol=3.0)
def _sampling() -> Residuals:
    """Largest deviation of empirical outcome frequency, in standard errors."""
    n = 10_000
    counts = np.zeros(3)
    for seed in range(n):
        t = P.run_basic_broadcast(0.6, 0.8, 0.9, mode="sample", seed=seed)
        counts[t.outcomes[0].path[0]] += 1
    se = math.sqrt((1 / 3) * (2 / 3) / n)
    for m in range(3):
        yield f"u{m}", abs(counts[m] / n - 1 / 3) / se


def run_suite(suite: str = "all", tol: float = hilbert.ALGEBRA_TOL,
              select: str | None = None) -> list[InvariantResult]:
    """Run every registered invariant of ``suite``; ``select`` filters names by substring."""
    if suite != "all" and suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected 'all' or one of {SUITES}")
    results = []
    for inv in REGISTRY:
        if suite != "all" and inv.suite != suite:
            continue
        if select is not None and select not in inv.name:
            continue
        limit = tol if inv.tol is None else inv.tol
        passed, failures, worst = 0, [], 0.0
        try:
            for label, residual in inv.run():
                residual = float(residual)
                worst = max(worst, residual)
                if residual <= limit and math.isfinite(residual):
                    passed += 1
                else:
                    failures.append(f"{label}: {residual:.3e}")
            results.append(InvariantResult(inv.name, inv.suite, passed, len(failures), worst, tuple(failures)))
        except Exception as exc:  # report, never raise
            results.append(InvariantResult(inv.name, inv.suite, passed, len(failures) + 1, worst,
                                           tuple(failures), f"{type(exc).__name__}: {exc}"))
    return results
