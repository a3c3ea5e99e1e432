"""Gate library and a small circuit engine for pure and mixed states.

Measurement outcomes follow the sigma_z eigenvalue convention: a Z-basis
readout of |0> is reported as +1, |1> as -1 (X basis: |+> is +1).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import qcore
from .exceptions import DimensionError, PostselectionError
from .qcore import DensityMatrix, StateVector

POSTSELECT_MIN_PROB = 1e-12

_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    dtype=complex,
)


def ry(theta: float) -> np.ndarray:
    """Real rotation sending |0> to cos(theta)|0> + sin(theta)|1>."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def phase(phi: float) -> np.ndarray:
    return np.array([[1, 0], [0, np.exp(1j * phi)]], dtype=complex)


class GateName(str, Enum):
    H = "H"
    X = "X"
    Z = "Z"
    CNOT = "CNOT"
    RY = "RY"
    PHASE = "PHASE"


_ARITY = {GateName.H: 1, GateName.X: 1, GateName.Z: 1, GateName.CNOT: 2, GateName.RY: 1, GateName.PHASE: 1}
_N_PARAMS = {GateName.RY: 1, GateName.PHASE: 1}


@dataclass(frozen=True)
class Gate:
    """A named gate; ``RY`` and ``PHASE`` carry one angle in radians."""

    name: GateName
    params: tuple[float, ...] = ()

    def __post_init__(self):
        name = GateName(self.name)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.params) != _N_PARAMS.get(name, 0):
            raise ValueError(f"gate {name.value} takes {_N_PARAMS.get(name, 0)} parameter(s), got {self.params}")

    @property
    def arity(self) -> int:
        return _ARITY[self.name]

    @property
    def matrix(self) -> np.ndarray:
        name = self.name
        if name is GateName.H:
            return qcore.H.copy()
        if name is GateName.X:
            return qcore.X.copy()
        if name is GateName.Z:
            return qcore.Z.copy()
        if name is GateName.CNOT:
            return _CNOT.copy()
        if name is GateName.RY:
            return ry(self.params[0])
        return phase(self.params[0])

    def inverse(self) -> "Gate":
        if self.name in (GateName.RY, GateName.PHASE):
            return Gate(self.name, (-self.params[0],))
        return self


@dataclass(frozen=True)
class CircuitOp:
    """A gate placed on specific qubits (control first for CNOT)."""

    gate: Gate
    targets: tuple[int, ...]

    def __post_init__(self):
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        if len(targets) != self.gate.arity:
            raise DimensionError(f"{self.gate.name.value} acts on {self.gate.arity} qubit(s), got targets {targets}")
        if len(set(targets)) != len(targets):
            raise DimensionError(f"target qubits must be distinct, got {targets}")

    def inverse(self) -> "CircuitOp":
        return CircuitOp(self.gate.inverse(), self.targets)


# terse constructors used by the scheme circuits
def h(q: int) -> CircuitOp:
    return CircuitOp(Gate(GateName.H), (q,))


def x(q: int) -> CircuitOp:
    return CircuitOp(Gate(GateName.X), (q,))


def z(q: int) -> CircuitOp:
    return CircuitOp(Gate(GateName.Z), (q,))


def cnot(control: int, target: int) -> CircuitOp:
    return CircuitOp(Gate(GateName.CNOT), (control, target))


def rot_y(q: int, theta: float) -> CircuitOp:
    return CircuitOp(Gate(GateName.RY, (theta,)), (q,))


def phase_gate(q: int, phi: float) -> CircuitOp:
    return CircuitOp(Gate(GateName.PHASE, (phi,)), (q,))


def controlled_ry(control: int, target: int, theta: float) -> list[CircuitOp]:
    """Controlled RY(theta) expressed with RY and CNOT only."""
    return [
        rot_y(target, theta / 2),
        cnot(control, target),
        rot_y(target, -theta / 2),
        cnot(control, target),
    ]


class Basis(str, Enum):
    Z = "Z"
    X = "X"


@dataclass(frozen=True)
class MeasureRecord:
    qubit: int
    basis: Basis
    outcome: int
    probability: float

    def __post_init__(self):
        if self.outcome not in (1, -1):
            raise ValueError(f"outcome must be +1 or -1, got {self.outcome}")
        if not -1e-12 <= self.probability <= 1 + 1e-12:
            raise ValueError(f"probability {self.probability} outside [0, 1]")


class Branch(NamedTuple):
    """One outcome of a projective single-qubit measurement.

    ``state`` is the renormalized collapsed state, or ``None`` when the branch
    has (numerically) zero probability; ``possible`` flags that case.
    """

    outcome: int
    probability: float
    state: StateVector | DensityMatrix | None
    possible: bool


def _check_targets(targets: Sequence[int], n_qubits: int) -> None:
    for t in targets:
        if not 0 <= t < n_qubits:
            raise DimensionError(f"qubit index {t} out of range for {n_qubits} qubits")


def _apply_to_tensor(data: np.ndarray, n_qubits: int, mat: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply ``mat`` to the leading qubit axes of ``data`` (shape ``(2**n, ...)``)."""
    extra = data.shape[1:]
    k = len(targets)
    psi = data.reshape((2,) * n_qubits + extra)
    gate = mat.reshape((2,) * (2 * k))
    moved = np.tensordot(gate, psi, axes=(list(range(k, 2 * k)), list(targets)))
    # tensordot put the gate's output axes first; move them back into place
    moved = np.moveaxis(moved, list(range(k)), list(targets))
    return moved.reshape(data.shape)


def embed(op: CircuitOp, n_qubits: int) -> np.ndarray:
    """Full ``2**n x 2**n`` unitary of ``op`` acting inside an ``n_qubits`` register."""
    _check_targets(op.targets, n_qubits)
    dim = 2**n_qubits
    return _apply_to_tensor(np.eye(dim, dtype=complex), n_qubits, op.gate.matrix, op.targets)


def apply(state: StateVector | DensityMatrix, op: CircuitOp) -> StateVector | DensityMatrix:
    """Apply one gate. Density matrices are conjugated, rho -> U rho U^dagger."""
    n = state.n_qubits
    _check_targets(op.targets, n)
    mat = op.gate.matrix
    if isinstance(state, StateVector):
        return StateVector(_apply_to_tensor(state.amplitudes, n, mat, op.targets))
    left = _apply_to_tensor(state.matrix, n, mat, op.targets)
    both = _apply_to_tensor(left.conj().T, n, mat, op.targets).conj().T
    return DensityMatrix(both)


def run(state: StateVector | DensityMatrix, ops: Iterable[CircuitOp]) -> StateVector | DensityMatrix:
    for op in ops:
        state = apply(state, op)
    return state


def inverse(ops: Sequence[CircuitOp]) -> list[CircuitOp]:
    """Circuit undoing ``ops``."""
    return [op.inverse() for op in reversed(ops)]


def _basis_projector(basis: Basis, outcome: int) -> np.ndarray:
    label = {(Basis.Z, 1): "0", (Basis.Z, -1): "1", (Basis.X, 1): "+", (Basis.X, -1): "-"}[(basis, outcome)]
    ket = StateVector.from_label(label).amplitudes
    return np.outer(ket, ket.conj())


def measure_branch(state: StateVector | DensityMatrix, qubit: int, basis: Basis | str = Basis.Z) -> list[Branch]:
    """Both outcomes of a projective measurement of ``qubit``.

    Collapsed states keep all qubits. Zero-probability branches are returned
    with ``state=None`` and ``possible=False`` rather than dropped.
    """
    basis = Basis(basis)
    n = state.n_qubits
    _check_targets([qubit], n)
    branches = []
    for outcome in (1, -1):
        proj = _basis_projector(basis, outcome)
        if isinstance(state, StateVector):
            vec = _apply_to_tensor(state.amplitudes, n, proj, [qubit])
            prob = float(np.real(np.vdot(vec, vec)))
            collapsed = StateVector(vec / np.sqrt(prob)) if prob > POSTSELECT_MIN_PROB else None
        else:
            left = _apply_to_tensor(state.matrix, n, proj, [qubit])
            mat = _apply_to_tensor(left.conj().T, n, proj, [qubit]).conj().T
            prob = float(np.real(np.trace(mat)))
            collapsed = DensityMatrix(mat / prob) if prob > POSTSELECT_MIN_PROB else None
        branches.append(Branch(outcome, prob, collapsed, collapsed is not None))
    return branches


def measure_records(state: StateVector | DensityMatrix, qubit: int, basis: Basis | str = Basis.Z) -> list[MeasureRecord]:
    basis = Basis(basis)
    return [
        MeasureRecord(qubit, basis, b.outcome, min(1.0, max(0.0, b.probability)))
        for b in measure_branch(state, qubit, basis)
    ]


def project_out(state: StateVector, qubit: int, target: StateVector) -> StateVector:
    """Unnormalized ``(<target|_qubit ⊗ 1) |state>`` over the remaining qubits."""
    n = state.n_qubits
    _check_targets([qubit], n)
    if target.n_qubits != 1:
        raise DimensionError("post-selection target must be a single-qubit state")
    if n < 2:
        raise DimensionError("cannot post-select the only qubit of a register")
    psi = state.amplitudes.reshape((2,) * n)
    reduced = np.tensordot(target.amplitudes.conj(), psi, axes=([0], [qubit]))
    return StateVector(reduced.reshape(-1))


def postselect(state: StateVector, qubit: int, target: StateVector) -> tuple[float, StateVector]:
    """Project ``qubit`` onto ``target`` and drop it.

    Returns the success probability and the renormalized state of the other
    qubits. Raises :class:`PostselectionError` when the probability is below
    ``POSTSELECT_MIN_PROB``.
    """
    reduced = project_out(state, qubit, target)
    prob = reduced.norm() ** 2
    if prob < POSTSELECT_MIN_PROB:
        raise PostselectionError(f"post-selection of qubit {qubit} has probability {prob:.3e}")
    return prob, reduced.normalize()
