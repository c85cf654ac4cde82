"""Dense state vectors over mixed-dimension subsystems.

Flat amplitude indices are mixed-radix with subsystem 0 as the most
significant digit, so ``|a, b, c>`` on dims ``(3, 2, 2)`` lives at
``a * 4 + b * 2 + c``. This matches the left-to-right ket order used when
transcribing states by hand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .gates import LocalOperator

ALGEBRA_TOL = 1e-10
NORM_ACCEPT_TOL = 1e-8
EIGEN_FLOOR = 1e-12
MAX_TOTAL_DIM = 1_000_000


class HilbertError(ValueError):
    """Raised for malformed states, layouts, operators or bases."""


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SubsystemLayout:
    dims: tuple[int, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise HilbertError("layout needs at least one subsystem")
        if any(d < 2 for d in dims):
            raise HilbertError(f"every subsystem dimension must be >= 2, got {dims}")
        if math.prod(dims) > MAX_TOTAL_DIM:
            raise HilbertError(f"total dimension {math.prod(dims)} exceeds {MAX_TOTAL_DIM}")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != len(dims):
                raise HilbertError("one label per subsystem is required")
            if len(set(labels)) != len(labels):
                raise HilbertError(f"subsystem labels must be distinct, got {labels}")
            object.__setattr__(self, "labels", labels)

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    def __len__(self) -> int:
        return len(self.dims)

    def index_of(self, label: str) -> int:
        if self.labels is None or label not in self.labels:
            raise HilbertError(f"no subsystem labelled {label!r}")
        return self.labels.index(label)

    def flatten(self, digits: Sequence[int]) -> int:
        if len(digits) != len(self.dims):
            raise HilbertError("multi-index length does not match layout")
        flat = 0
        for digit, dim in zip(digits, self.dims):
            if not 0 <= digit < dim:
                raise HilbertError(f"digit {digit} out of range for dimension {dim}")
            flat = flat * dim + int(digit)
        return flat

    def unflatten(self, flat: int) -> tuple[int, ...]:
        if not 0 <= flat < self.total:
            raise HilbertError(f"flat index {flat} out of range")
        digits = []
        for dim in reversed(self.dims):
            flat, digit = divmod(flat, dim)
            digits.append(digit)
        return tuple(reversed(digits))

    def sub(self, indices: Sequence[int]) -> SubsystemLayout:
        labels = None if self.labels is None else tuple(self.labels[i] for i in indices)
        return SubsystemLayout(tuple(self.dims[i] for i in indices), labels)

    def __add__(self, other: SubsystemLayout) -> SubsystemLayout:
        if (self.labels is None) != (other.labels is None):
            labels = None
        else:
            labels = None if self.labels is None else self.labels + other.labels
        return SubsystemLayout(self.dims + other.dims, labels)


def as_layout(layout: SubsystemLayout | Sequence[int]) -> SubsystemLayout:
    if isinstance(layout, SubsystemLayout):
        return layout
    return SubsystemLayout(tuple(layout))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state. Build with :func:`make_state`."""

    layout: SubsystemLayout
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.size != self.layout.total:
            raise HilbertError(
                f"{amps.size} amplitudes given for total dimension {self.layout.total}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > ALGEBRA_TOL:
            raise HilbertError(f"state norm {norm!r} deviates from 1")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.layout.dims

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def amplitude(self, *digits: int) -> complex:
        return complex(self.amplitudes[self.layout.flatten(digits)])

    def nonzero(self, tol: float = ALGEBRA_TOL) -> dict[tuple[int, ...], complex]:
        """Map of multi-index to amplitude for every amplitude above ``tol``."""
        return {
            self.layout.unflatten(int(i)): complex(self.amplitudes[i])
            for i in np.flatnonzero(np.abs(self.amplitudes) > tol)
        }


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    layout: SubsystemLayout
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = _frozen(self.entries)
        n = self.layout.total
        if rho.shape != (n, n):
            raise HilbertError(f"density matrix shape {rho.shape} does not match dimension {n}")
        if not np.allclose(rho, rho.conj().T, atol=ALGEBRA_TOL, rtol=0):
            raise HilbertError("density matrix is not Hermitian")
        trace = complex(np.trace(rho))
        if abs(trace - 1.0) > ALGEBRA_TOL:
            raise HilbertError(f"density matrix trace {trace} deviates from 1")
        if np.linalg.eigvalsh(rho).min() < -ALGEBRA_TOL:
            raise HilbertError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "entries", rho)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def dominant_state(self) -> StateVector:
        """Leading eigenvector as a state; exact when the reduced state is pure."""
        _, vecs = np.linalg.eigh(self.entries)
        vec = vecs[:, -1]
        pivot = vec[np.argmax(np.abs(vec))]
        return StateVector(self.layout, vec * (abs(pivot) / pivot))


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """Complete orthonormal basis for one subsystem; ``vectors[m]`` is outcome m."""

    target: int
    vectors: np.ndarray = field(repr=False)
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        vecs = _frozen(self.vectors)
        if vecs.ndim != 2 or vecs.shape[0] != vecs.shape[1]:
            raise HilbertError(
                f"basis must contain as many vectors as the dimension, got shape {vecs.shape}"
            )
        gram = vecs.conj() @ vecs.T
        if not np.allclose(gram, np.eye(len(vecs)), atol=ALGEBRA_TOL, rtol=0):
            raise HilbertError("basis vectors are not orthonormal")
        if self.labels is not None and len(self.labels) != len(vecs):
            raise HilbertError("one label per basis vector is required")
        object.__setattr__(self, "vectors", vecs)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def at(self, target: int) -> MeasurementBasis:
        return MeasurementBasis(target, self.vectors, self.labels)


def computational_basis(dim: int, target: int) -> MeasurementBasis:
    return MeasurementBasis(target, np.eye(dim))


@dataclass(frozen=True, eq=False)
class Branch:
    """One measurement outcome.

    ``state`` keeps the measured subsystem collapsed onto ``vector``; it is
    ``None`` for outcomes of probability zero.
    """

    outcome: int
    probability: float
    state: StateVector | None
    target: int
    vector: np.ndarray = field(repr=False)

    def remainder(self) -> StateVector:
        """State of the unmeasured subsystems (the collapsed one removed)."""
        if self.state is None:
            raise HilbertError(f"outcome {self.outcome} has probability zero")
        return condition(self.state, self.target, self.vector)


@dataclass(frozen=True, eq=False)
class MeasurementResult:
    branches: tuple[Branch, ...]
    mode: str
    seed: int | None = None

    def __post_init__(self):
        if self.mode == "enumerate":
            total = sum(b.probability for b in self.branches)
            if abs(total - 1.0) > ALGEBRA_TOL:
                raise HilbertError(f"branch probabilities sum to {total}")

    @property
    def probabilities(self) -> tuple[float, ...]:
        return tuple(b.probability for b in self.branches)

    def branch(self, outcome: int) -> Branch:
        for b in self.branches:
            if b.outcome == outcome:
                return b
        raise KeyError(outcome)


def make_state(
    layout: SubsystemLayout | Sequence[int],
    amplitudes: Iterable[complex] | np.ndarray,
    tol: float = NORM_ACCEPT_TOL,
) -> StateVector:
    """Validate amplitudes against ``layout``, renormalizing within ``tol``."""
    layout = as_layout(layout)
    amps = np.asarray(list(amplitudes) if not isinstance(amplitudes, np.ndarray) else amplitudes,
                      dtype=complex).reshape(-1)
    if amps.size != layout.total:
        raise HilbertError(f"{amps.size} amplitudes given for total dimension {layout.total}")
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1.0) > tol:
        raise HilbertError(f"state norm {norm:.12g} outside tolerance {tol:g} of 1")
    return StateVector(layout, amps / norm)


def basis_state(layout: SubsystemLayout | Sequence[int], *digits: int) -> StateVector:
    layout = as_layout(layout)
    amps = np.zeros(layout.total, dtype=complex)
    amps[layout.flatten(digits)] = 1.0
    return StateVector(layout, amps)


def from_kets(layout: SubsystemLayout | Sequence[int], kets: dict[tuple[int, ...], complex]) -> StateVector:
    """Build a state from a ``{multi-index: amplitude}`` map."""
    layout = as_layout(layout)
    amps = np.zeros(layout.total, dtype=complex)
    for digits, amp in kets.items():
        amps[layout.flatten(digits)] += amp
    return make_state(layout, amps)


def tensor(s1: StateVector, s2: StateVector) -> StateVector:
    return StateVector(s1.layout + s2.layout, np.kron(s1.amplitudes, s2.amplitudes))


def tensor_all(states: Sequence[StateVector]) -> StateVector:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def _check_targets(layout: SubsystemLayout, targets: Sequence[int]) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise HilbertError(f"repeated subsystem in {targets}")
    if any(not 0 <= t < len(layout) for t in targets):
        raise HilbertError(f"subsystem index out of range in {targets}")
    return targets


def _apply_matrix(tensor_: np.ndarray, matrix: np.ndarray, targets: tuple[int, ...]) -> np.ndarray:
    k = len(targets)
    moved = np.moveaxis(tensor_, targets, range(k))
    flat = moved.reshape(math.prod(moved.shape[:k]), -1)
    out = (matrix @ flat).reshape(moved.shape)
    return np.moveaxis(out, range(k), targets)


def apply_local(state: StateVector, op: LocalOperator, targets: Sequence[int]) -> StateVector:
    """Apply ``op`` to the listed subsystems, in the order ``op.dims`` expects.

    Projector-kind operators are refused here; use :func:`measure_projector`
    since their output is not normalized.
    """
    targets = _check_targets(state.layout, targets)
    target_dims = tuple(state.dims[t] for t in targets)
    if tuple(op.dims) != target_dims:
        raise HilbertError(f"operator {op.name!r} acts on dims {op.dims}, targets have {target_dims}")
    if op.kind != "unitary":
        raise HilbertError(f"operator {op.name!r} is a {op.kind}; apply it through measure_projector")
    out = _apply_matrix(state.tensor(), op.matrix, targets)
    return StateVector(state.layout, out.reshape(-1))


def _branch_from(
    state: StateVector, target: int, outcome: int, vector: np.ndarray
) -> tuple[float, StateVector | None]:
    moved = np.moveaxis(state.tensor(), target, 0)
    rest = np.tensordot(vector.conj(), moved, axes=(0, 0))
    prob = float(np.vdot(rest, rest).real)
    if prob <= EIGEN_FLOOR:
        return max(prob, 0.0), None
    collapsed = np.multiply.outer(vector, rest / math.sqrt(prob))
    return prob, StateVector(state.layout, np.moveaxis(collapsed, 0, target).reshape(-1))


def measure(
    state: StateVector,
    basis: MeasurementBasis,
    mode: str = "enumerate",
    seed: int | None = None,
) -> MeasurementResult:
    """Projective measurement of one subsystem.

    ``enumerate`` returns every branch with its exact probability; ``sample``
    draws a single branch with ``numpy.random.default_rng(seed)``.
    """
    target = _check_targets(state.layout, [basis.target])[0]
    if basis.dim != state.dims[target]:
        raise HilbertError(
            f"basis of dimension {basis.dim} cannot measure subsystem of dimension {state.dims[target]}"
        )
    branches = []
    for m, vec in enumerate(basis.vectors):
        prob, post = _branch_from(state, target, m, vec)
        branches.append(Branch(m, prob, post, target, vec))
    if mode == "enumerate":
        return MeasurementResult(tuple(branches), "enumerate")
    if mode == "sample":
        if seed is None:
            raise HilbertError("sample mode requires a seed")
        probs = np.array([b.probability for b in branches])
        pick = int(np.random.default_rng(seed).choice(len(branches), p=probs / probs.sum()))
        return MeasurementResult((branches[pick],), "sample", seed)
    raise HilbertError(f"unknown measurement mode {mode!r}")


def measure_projector(
    state: StateVector,
    projector: LocalOperator,
    targets: Sequence[int],
    mode: str = "enumerate",
    seed: int | None = None,
) -> MeasurementResult:
    """Two-outcome measurement {I - P, P}; outcome 1 means the projector fired.

    Branch vectors are empty since the collapsed subsystems are not removed.
    """
    if projector.kind != "projector":
        raise HilbertError(f"operator {projector.name!r} is not a projector")
    targets = _check_targets(state.layout, targets)
    target_dims = tuple(state.dims[t] for t in targets)
    if tuple(projector.dims) != target_dims:
        raise HilbertError(f"projector acts on dims {projector.dims}, targets have {target_dims}")
    branches = []
    complement = np.eye(len(projector.matrix)) - projector.matrix
    for outcome, mat in ((0, complement), (1, projector.matrix)):
        out = _apply_matrix(state.tensor(), mat, targets).reshape(-1)
        prob = float(np.vdot(out, out).real)
        post = StateVector(state.layout, out / math.sqrt(prob)) if prob > EIGEN_FLOOR else None
        branches.append(Branch(outcome, max(prob, 0.0), post, -1, np.zeros(0)))
    if mode == "enumerate":
        return MeasurementResult(tuple(branches), "enumerate")
    if mode == "sample":
        if seed is None:
            raise HilbertError("sample mode requires a seed")
        probs = np.array([b.probability for b in branches])
        pick = int(np.random.default_rng(seed).choice(2, p=probs / probs.sum()))
        return MeasurementResult((branches[pick],), "sample", seed)
    raise HilbertError(f"unknown measurement mode {mode!r}")


def condition(state: StateVector, target: int, vector: Sequence[complex]) -> StateVector:
    """Project ``target`` onto ``vector`` and drop it, renormalizing the rest."""
    target = _check_targets(state.layout, [target])[0]
    if len(state.layout) < 2:
        raise HilbertError("cannot remove the only subsystem")
    vec = np.asarray(vector, dtype=complex)
    rest = np.tensordot(vec.conj(), np.moveaxis(state.tensor(), target, 0), axes=(0, 0))
    norm = float(np.linalg.norm(rest))
    if norm <= math.sqrt(EIGEN_FLOOR):
        raise HilbertError("conditioning vector has zero overlap with the state")
    keep = [i for i in range(len(state.layout)) if i != target]
    return StateVector(state.layout.sub(keep), rest.reshape(-1) / norm)


def permute(state: StateVector, order: Sequence[int]) -> StateVector:
    """Reorder subsystems so that new subsystem i is old subsystem ``order[i]``."""
    order = _check_targets(state.layout, order)
    if len(order) != len(state.layout):
        raise HilbertError("permutation must list every subsystem")
    return StateVector(state.layout.sub(order), np.transpose(state.tensor(), order).reshape(-1))


def partial_trace(state: StateVector, keep: Sequence[int]) -> DensityMatrix:
    keep = _check_targets(state.layout, keep)
    if not keep:
        raise HilbertError("keep at least one subsystem")
    traced = [i for i in range(len(state.layout)) if i not in keep]
    psi = np.transpose(state.tensor(), keep + tuple(traced))
    kept_dim = math.prod(state.dims[i] for i in keep)
    psi = psi.reshape(kept_dim, -1)
    rho = psi @ psi.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(state.layout.sub(keep), rho / np.trace(rho).real)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy in bits; eigenvalues below 1e-12 are dropped."""
    evals = rho.eigenvalues()
    evals = evals[evals > EIGEN_FLOOR]
    return float(-np.sum(evals * np.log2(evals))) + 0.0  # no signed zero


def entanglement_entropy(state: StateVector, side: Sequence[int]) -> float:
    return von_neumann_entropy(partial_trace(state, side))


def overlap(s1: StateVector, s2: StateVector) -> complex:
    if s1.dims != s2.dims:
        raise HilbertError(f"layout mismatch {s1.dims} vs {s2.dims}")
    return complex(np.vdot(s1.amplitudes, s2.amplitudes))


def fidelity_up_to_global_phase(s1: StateVector, s2: StateVector) -> float:
    return min(1.0, abs(overlap(s1, s2)) ** 2)


def relative_phase(reference: StateVector, state: StateVector) -> float:
    """Phase φ with ``state ≈ e^{iφ} reference`` (meaningful when fidelity is 1)."""
    return float(np.angle(overlap(reference, state)))


def state_fidelity(rho: DensityMatrix, target: StateVector) -> float:
    """<t|ρ|t> for a pure target."""
    if rho.layout.dims != target.dims:
        raise HilbertError(f"layout mismatch {rho.layout.dims} vs {target.dims}")
    t = target.amplitudes
    return float(np.real(t.conj() @ rho.entries @ t))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return float(0.5 * np.abs(np.linalg.eigvalsh(np.asarray(rho) - np.asarray(sigma))).sum())
