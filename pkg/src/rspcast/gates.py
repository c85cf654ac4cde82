"""Operators, measurement bases and target states used by the protocols.

Multi-subsystem operators list their control subsystem(s) first in ``dims``;
callers pass targets to :func:`rspcast.hilbert.apply_local` in that order.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .hilbert import ALGEBRA_TOL, HilbertError, MeasurementBasis, StateVector, make_state

OMEGA = cmath.exp(2j * math.pi / 3)


@dataclass(frozen=True, eq=False)
class LocalOperator:
    dims: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)
    kind: str = "unitary"
    name: str = ""

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        mat = np.array(self.matrix, dtype=complex)
        n = math.prod(dims)
        if mat.shape != (n, n):
            raise HilbertError(f"{self.name}: matrix shape {mat.shape} does not match dims {dims}")
        if self.kind == "unitary":
            if not np.allclose(mat.conj().T @ mat, np.eye(n), atol=ALGEBRA_TOL, rtol=0):
                raise HilbertError(f"{self.name}: matrix is not unitary")
        elif self.kind == "projector":
            if not (np.allclose(mat @ mat, mat, atol=ALGEBRA_TOL, rtol=0)
                    and np.allclose(mat, mat.conj().T, atol=ALGEBRA_TOL, rtol=0)):
                raise HilbertError(f"{self.name}: matrix is not an orthogonal projector")
        else:
            raise HilbertError(f"unknown operator kind {self.kind!r}")
        mat.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", mat)

    @property
    def dagger(self) -> LocalOperator:
        return LocalOperator(self.dims, self.matrix.conj().T, self.kind, f"{self.name}^-1")

    def __matmul__(self, other: LocalOperator) -> LocalOperator:
        if self.dims != other.dims:
            raise HilbertError("cannot compose operators on different dims")
        kind = "unitary" if self.kind == other.kind == "unitary" else "projector"
        return LocalOperator(self.dims, self.matrix @ other.matrix, kind, f"{self.name}*{other.name}")

    def power(self, k: int) -> LocalOperator:
        return LocalOperator(self.dims, np.linalg.matrix_power(self.matrix, k), self.kind, f"{self.name}^{k}")


def diagonal(phases, name: str) -> LocalOperator:
    """Single-subsystem diagonal unitary ``diag(exp(i*phases))``."""
    phases = np.asarray(phases, dtype=float)
    return LocalOperator((len(phases),), np.diag(np.exp(1j * phases)), name=name)


def identity(*dims: int) -> LocalOperator:
    return LocalOperator(dims, np.eye(math.prod(dims)), name="I")


def shift(d: int, k: int = 1, name: str | None = None) -> LocalOperator:
    """|j> -> |j + k mod d>."""
    mat = np.zeros((d, d))
    for j in range(d):
        mat[(j + k) % d, j] = 1
    return LocalOperator((d,), mat, name=name or f"X_{d}^{k}")


def shift_down_qutrit() -> LocalOperator:
    return shift(3, -1, name="V")


def hadamard() -> LocalOperator:
    return LocalOperator((2,), np.array([[1, 1], [1, -1]]) / math.sqrt(2), name="H")


def pauli_z() -> LocalOperator:
    return LocalOperator((2,), np.diag([1, -1]), name="sigma_z")


def cnot() -> LocalOperator:
    """Control first, target second."""
    return controlled_shift(2, 2, 1, name="CNOT")


def z_rotation(phi: float) -> LocalOperator:
    """Equatorial rotation taking psi(theta) to psi(theta + phi)."""
    return diagonal([phi, -phi], name=f"Rz({phi:.6g})")


def controlled_shift(
    control_dim: int = 2, target_dim: int = 2, power_per_one: int = 1, name: str | None = None
) -> LocalOperator:
    """|c>|j> -> |c>|j + c*power_per_one mod target_dim>."""
    if target_dim < 2 or control_dim < 2:
        raise HilbertError("controlled_shift needs dimensions >= 2")
    n = control_dim * target_dim
    mat = np.zeros((n, n))
    for c in range(control_dim):
        for j in range(target_dim):
            mat[c * target_dim + (j + c * power_per_one) % target_dim, c * target_dim + j] = 1
    return LocalOperator(
        (control_dim, target_dim), mat,
        name=name or f"C-shift[{control_dim}->{target_dim}]^{power_per_one}",
    )


def controlled_w() -> LocalOperator:
    return controlled_shift(3, 3, 1, name="C-W")


def controlled_controlled_shift(shifts: dict[tuple[int, int], int], control_dims=(3, 3), target_dim=6,
                                name: str = "CC-shift") -> LocalOperator:
    """Two controls, one target: |b>|c>|j> -> |b>|c>|j + shifts[(b, c)] mod target_dim>."""
    db, dc = control_dims
    n = db * dc * target_dim
    mat = np.zeros((n, n))
    for b in range(db):
        for c in range(dc):
            s = shifts.get((b, c), 0)
            base = (b * dc + c) * target_dim
            for j in range(target_dim):
                mat[base + (j + s) % target_dim, base + j] = 1
    return LocalOperator((db, dc, target_dim), mat, name=name)


def sender_phase_basic(theta: float) -> LocalOperator:
    return diagonal([2 * theta, -2 * theta, 0.0], name=f"U_a({theta:.6g})")


def sender_phase_n(theta: float, N: int) -> LocalOperator:
    return diagonal([(2 * k - N) * theta for k in range(N + 1)], name=f"U_a^N={N}({theta:.6g})")


def sender_phase_diff(theta1: float, theta2: float) -> LocalOperator:
    return diagonal(
        [theta1 + theta2, theta1 - theta2, -(theta1 - theta2), -(theta1 + theta2)],
        name=f"U_a({theta1:.6g},{theta2:.6g})",
    )


def sender_phase_qutrit(theta1: float, theta2: float) -> LocalOperator:
    return diagonal(
        [0.0, theta1, 2 * theta1, theta2, 2 * theta2, theta1 + theta2],
        name=f"U_a6({theta1:.6g},{theta2:.6g})",
    )


def controlled_sender_phase(theta0: float, theta1: float) -> LocalOperator:
    """Qubit a' (first) selects the sender phase applied to qutrit a (second)."""
    mat = np.zeros((6, 6), dtype=complex)
    mat[:3, :3] = sender_phase_basic(theta0).matrix
    mat[3:, 3:] = sender_phase_basic(theta1).matrix
    return LocalOperator((2, 3), mat, name=f"C-U_a({theta0:.6g},{theta1:.6g})")


def fourier_basis(d: int, target: int = 0) -> MeasurementBasis:
    """|u_m> = sum_k exp(2 pi i m k / d) |k> / sqrt(d)."""
    if d < 2:
        raise HilbertError("fourier_basis needs d >= 2")
    k = np.arange(d)
    vecs = np.exp(2j * np.pi * np.outer(k, k) / d) / math.sqrt(d)
    return MeasurementBasis(target, vecs, tuple(f"u{m}" for m in range(d)))


def qutrit_basis(target: int = 0) -> MeasurementBasis:
    """Sender's qutrit basis of the two-receiver protocol, outcomes ordered u0, u1, u2."""
    w, wb = OMEGA, OMEGA.conjugate()
    vecs = np.array([[1, 1, 1], [w, wb, 1], [wb, w, 1]]) / math.sqrt(3)
    return MeasurementBasis(target, vecs, ("u0", "u1", "u2"))


def six_level_basis(target: int = 0) -> MeasurementBasis:
    """The six sender vectors of the qutrit broadcast."""
    w, wb = OMEGA, OMEGA.conjugate()
    head = [[w ** j for j in range(3)], [wb ** j for j in range(3)]]
    vecs = np.array([
        [1, 1, 1, 1, 1, 1],
        head[0] + [wb, w, 1],
        head[1] + [w, wb, 1],
        [(-1) ** j for j in range(6)],
        [(-1) ** j * w ** j for j in range(3)] + [-wb, w, -1],
        [(-1) ** j * wb ** j for j in range(3)] + [-w, wb, -1],
    ]) / math.sqrt(6)
    return MeasurementBasis(target, vecs, tuple(f"u{m}" for m in range(6)))


def plus_minus_two_basis(target: int = 0) -> MeasurementBasis:
    """{(|0>+|1>)/sqrt2, (|0>-|1>)/sqrt2, |2>} on a qutrit."""
    r = 1 / math.sqrt(2)
    return MeasurementBasis(target, np.array([[r, r, 0], [r, -r, 0], [0, 0, 1]]), ("+", "-", "2"))


def x_basis(target: int = 0) -> MeasurementBasis:
    r = 1 / math.sqrt(2)
    return MeasurementBasis(target, np.array([[r, r], [r, -r]]), ("+x", "-x"))


def equatorial_basis(theta: float, target: int = 0, offset: float = math.pi / 2) -> MeasurementBasis:
    """{psi(theta), psi(theta + offset)}; offset ±pi/2 gives an orthonormal pair."""
    vecs = np.array([equatorial_qubit(theta).amplitudes, equatorial_qubit(theta + offset).amplitudes])
    return MeasurementBasis(target, vecs, (f"psi({theta:.6g})", f"psi({theta + offset:.6g})"))


def correction_basic(outcome: int) -> LocalOperator:
    if outcome not in (0, 1, 2):
        raise HilbertError(f"basic-protocol outcome must be 0, 1 or 2, got {outcome}")
    sign = {0: 0, 1: 1, 2: -1}[outcome]
    return diagonal([sign * math.pi / 3, -sign * math.pi / 3], name=f"U_b[{outcome}]")


def correction_basic_x(outcome: int) -> LocalOperator:
    """Charlie's correction in the rotated basis: H U_b H."""
    h = hadamard().matrix
    return LocalOperator((2,), h @ correction_basic(outcome).matrix @ h, name=f"U_c[{outcome}]")


def correction_n(m: int, N: int) -> LocalOperator:
    if not 0 <= m <= N:
        raise HilbertError(f"outcome {m} out of range for N={N}")
    return diagonal([2 * math.pi * m / (N + 1), 0.0], name=f"U_m[{m};N={N}]")


def correction_diff(j: int) -> tuple[LocalOperator, LocalOperator]:
    if j not in range(4):
        raise HilbertError(f"different-states outcome must be 0..3, got {j}")
    return (
        diagonal([0.0, math.pi * j], name=f"U_b{j}"),
        diagonal([0.0, math.pi * j / 2], name=f"U_c{j}"),
    )


# sender level -> unordered receiver pair it carries
QUTRIT_PAIRS = {0: (0, 0), 1: (0, 1), 2: (1, 1), 3: (0, 2), 4: (2, 2), 5: (1, 2)}


def _wrap(x: float) -> float:
    return (x + math.pi) % (2 * math.pi) - math.pi


def qutrit_correction_phases(m: int, basis: MeasurementBasis | None = None) -> tuple[np.ndarray, float]:
    """Solve chi_j + chi_k = arg c_m(level(j, k)) with chi_0 = 0.

    The singly-excited levels 1 and 3 fix chi_1 and chi_2; the other four
    constraints are checked. Returns the phases and the largest wrapped
    constraint residual (0 when the system is consistent).
    """
    basis = basis or six_level_basis()
    if m not in range(basis.dim):
        raise HilbertError(f"qutrit outcome must be 0..5, got {m}")
    coeff = basis.vectors[m]
    args = np.angle(coeff / coeff[0])
    chi = np.array([0.0, args[1], args[3]])
    residual = max(abs(_wrap(chi[j] + chi[k] - args[level])) for level, (j, k) in QUTRIT_PAIRS.items())
    return chi, float(residual)


def correction_qutrit(m: int) -> LocalOperator:
    """Receiver correction for outcome m (same for both receivers)."""
    chi, _ = qutrit_correction_phases(m)
    return diagonal(chi, name=f"U_q[{m}]")


def projector_p() -> LocalOperator:
    """|01><01| + |10><10| on two qubits."""
    return LocalOperator((2, 2), np.diag([0, 1, 1, 0]), kind="projector", name="P")


def equatorial_qubit(theta: float, alpha: float = 1 / math.sqrt(2), beta: float = 1 / math.sqrt(2)) -> StateVector:
    return make_state((2,), [alpha * cmath.exp(1j * theta), beta * cmath.exp(-1j * theta)])


def equatorial_qutrit(
    theta1: float, theta2: float,
    alpha: float = 1 / math.sqrt(3), beta: float = 1 / math.sqrt(3), gamma: float = 1 / math.sqrt(3),
) -> StateVector:
    return make_state((3,), [alpha, beta * cmath.exp(1j * theta1), gamma * cmath.exp(1j * theta2)])
