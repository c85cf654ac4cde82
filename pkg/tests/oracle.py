"""Independent reference simulator for the test-suite.

States are plain ``{digits: amplitude}`` dicts and every step is written
out by hand from the protocol algebra, so nothing here shares code with
the package under test. Only the eigenvalue call for entropies uses numpy.
"""

from __future__ import annotations

import cmath
import itertools
import math
from math import comb

import numpy as np

Ket = dict[tuple[int, ...], complex]
W = cmath.exp(2j * math.pi / 3)


def norm2(k: Ket) -> float:
    return sum(abs(a) ** 2 for a in k.values())


def normalize(k: Ket) -> Ket:
    n = math.sqrt(norm2(k))
    return {d: a / n for d, a in k.items()}


def inner(k1: Ket, k2: Ket) -> complex:
    return sum(a.conjugate() * k2.get(d, 0) for d, a in k1.items())


def fidelity(k1: Ket, k2: Ket) -> float:
    return abs(inner(normalize(k1), normalize(k2))) ** 2


def product(*kets: Ket) -> Ket:
    out: Ket = {(): 1}
    for k in kets:
        out = {d1 + d2: a1 * a2 for d1, a1 in out.items() for d2, a2 in k.items()}
    return out


def phase_at(k: Ket, pos: int, phases) -> Ket:
    """Multiply by exp(i * phases[digit]) on subsystem ``pos``."""
    return {d: a * cmath.exp(1j * phases[d[pos]]) for d, a in k.items()}


def project_first(k: Ket, vec) -> Ket:
    """<vec|_0 k, unnormalized, with subsystem 0 removed."""
    out: Ket = {}
    for d, a in k.items():
        out[d[1:]] = out.get(d[1:], 0) + vec[d[0]].conjugate() * a
    return out


def reduced_entropy(k: Ket, keep: tuple[int, ...]) -> float:
    rows: dict[tuple, dict[tuple, complex]] = {}
    for d, a in k.items():
        key = tuple(d[i] for i in keep)
        rest = tuple(d[i] for i in range(len(d)) if i not in keep)
        rows.setdefault(key, {})[rest] = a
    keys = sorted(rows)
    rho = np.array([[sum(rows[r].get(x, 0) * rows[c].get(x, 0).conjugate() for x in rows[r])
                     for c in keys] for r in keys])
    ev = np.linalg.eigvalsh(rho)
    return float(-sum(e * math.log2(e) for e in ev if e > 1e-12))


# --- states ------------------------------------------------------------------

def qubit(theta: float, alpha: float = 1 / math.sqrt(2), beta: float = 1 / math.sqrt(2)) -> Ket:
    return {(0,): alpha * cmath.exp(1j * theta), (1,): beta * cmath.exp(-1j * theta)}


def qutrit(t1: float, t2: float, a: float, b: float, g: float) -> Ket:
    return {(0,): a, (1,): b * cmath.exp(1j * t1), (2,): g * cmath.exp(1j * t2)}


def basic_resource(alpha: float, beta: float) -> Ket:
    return {(0, 0, 0): alpha ** 2, (1, 1, 1): beta ** 2, (2, 0, 1): alpha * beta, (2, 1, 0): alpha * beta}


def entropy_formula(p: float) -> float:
    """E(p) from the Schmidt weights p^2, (1-p)^2, 2p(1-p) of the template."""
    ws = [p * p, (1 - p) ** 2, 2 * p * (1 - p)]
    return -sum(w * math.log2(w) for w in ws if w > 0)


def n_party_resource(alpha: float, beta: float, n: int) -> Ket:
    out: Ket = {}
    for bits in itertools.product((0, 1), repeat=n):
        k = bits.count(0)
        out[(k,) + bits] = alpha ** k * beta ** (n - k)
    return out


def diff_states_resource() -> Ket:
    return {(2 * b + c, b, c): 0.5 for b in (0, 1) for c in (0, 1)}


QUTRIT_LEVEL = {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 2, (0, 2): 3, (2, 0): 3, (2, 2): 4, (1, 2): 5, (2, 1): 5}


def qutrit_resource(a: float, b: float, g: float) -> Ket:
    c = (a, b, g)
    return {(lvl, i, j): c[i] * c[j] for (i, j), lvl in QUTRIT_LEVEL.items()}


# --- bases -------------------------------------------------------------------

def dft(d: int) -> list[list[complex]]:
    return [[cmath.exp(2j * math.pi * m * k / d) / math.sqrt(d) for k in range(d)] for m in range(d)]


def qutrit_sender_basis() -> list[list[complex]]:
    s = 1 / math.sqrt(3)
    return [[s, s, s], [W * s, W.conjugate() * s, s], [W.conjugate() * s, W * s, s]]


# --- protocol runs -----------------------------------------------------------

def run(resource: Ket, sender_phases, basis, corrections) -> list[tuple[float, Ket]]:
    """Sender phase, sender measurement, per-receiver diagonal corrections.

    ``corrections(m)`` returns one phase list per receiver. Returns the
    outcome probability and normalized receiver state per outcome.
    """
    state = phase_at(resource, 0, sender_phases)
    out = []
    for m, vec in enumerate(basis):
        rest = project_first(state, vec)
        p = norm2(rest)
        for pos, phases in enumerate(corrections(m)):
            rest = phase_at(rest, pos, phases)
        out.append((p, normalize(rest) if p > 1e-14 else {}))
    return out


def basic_corrections(m: int):
    s = {0: 0, 1: 1, 2: -1}[m] * math.pi / 3
    return [[s, -s], [s, -s]]


def run_basic(alpha: float, beta: float, theta: float):
    return run(basic_resource(alpha, beta), [2 * theta, -2 * theta, 0], qutrit_sender_basis(), basic_corrections)


def run_n_party(alpha: float, beta: float, theta: float, n: int):
    def corr(m):
        return [[2 * math.pi * m / (n + 1), 0]] * n
    return run(n_party_resource(alpha, beta, n), [(2 * k - n) * theta for k in range(n + 1)], dft(n + 1), corr)


def run_diff_states(t1: float, t2: float):
    phases = [t1 + t2, t1 - t2, t2 - t1, -t1 - t2]
    return run(diff_states_resource(), phases, dft(4),
               lambda j: [[0, math.pi * j], [0, math.pi * j / 2]])


def qutrit_phase_system(coeffs) -> tuple[list[float], float]:
    """Receiver phases chi with chi_i + chi_j = arg c(level(i, j)), and the worst violation."""
    arg = [cmath.phase(c / coeffs[0]) for c in coeffs]
    chi = [0.0, arg[QUTRIT_LEVEL[(0, 1)]], arg[QUTRIT_LEVEL[(0, 2)]]]
    worst = 0.0
    for (i, j), lvl in QUTRIT_LEVEL.items():
        r = (chi[i] + chi[j] - arg[lvl] + math.pi) % (2 * math.pi) - math.pi
        worst = max(worst, abs(r))
    return chi, worst
