"""Measurement operators, quantum instruments and POVMs for spin-product readout.

Local outcome labels are strings of ``+``/``-`` (one character per party);
the global outcome of a label is the product of its local signs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .exceptions import InvariantError, ShapeError
from .qcore import ATOL, ZZ, DensityMatrix, StateVector, projector, purity

SHAPE_ATOL = 1e-8

PI00, PI01, PI10, PI11 = (projector(b) for b in ("00", "01", "10", "11"))
EVEN = PI00 + PI11
ODD = PI01 + PI10


def _freeze(mat) -> np.ndarray:
    arr = np.array(mat, dtype=complex)
    arr.flags.writeable = False
    return arr


def product_rule(label: str) -> int:
    """Global outcome of a local label: ``"+-"`` -> -1, ``"--"`` -> +1, ``"+"`` -> +1."""
    if not label or any(ch not in "+-" for ch in label):
        raise ValueError(f"label must be a nonempty string of '+'/'-', got {label!r}")
    return -1 if label.count("-") % 2 else 1


def completeness_residual(operators: Sequence[np.ndarray]) -> float:
    """max |sum K^dagger K - 1|."""
    ops = np.asarray(operators)
    total = np.einsum("kji,kjl->il", ops.conj(), ops)
    return float(np.max(np.abs(total - np.eye(ops.shape[1]))))


@dataclass(frozen=True)
class MeasurementOperatorSet:
    """Labelled measurement (Kraus) operators ``{M_label}``."""

    labels: tuple[str, ...]
    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.operators):
            raise ValueError("need exactly one operator per label")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate labels in {self.labels}")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "operators", tuple(_freeze(m) for m in self.operators))
        res = completeness_residual(self.operators)
        if res > ATOL:
            raise InvariantError(f"measurement operators are not complete (residual {res:.3e})")

    def __getitem__(self, label: str) -> np.ndarray:
        return self.operators[self.labels.index(label)]

    def as_dict(self) -> dict[str, np.ndarray]:
        return dict(zip(self.labels, self.operators))

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]


@dataclass(frozen=True)
class QuantumInstrument:
    """Map from a global outcome to the Kraus list of its quantum operation."""

    kraus_sets: Mapping[int, tuple[np.ndarray, ...]]

    def __post_init__(self):
        sets = {int(r): tuple(_freeze(k) for k in ks) for r, ks in sorted(self.kraus_sets.items(), reverse=True)}
        if not sets or not all(sets.values()):
            raise ValueError("every outcome needs at least one Kraus operator")
        object.__setattr__(self, "kraus_sets", sets)
        res = completeness_residual([k for ks in sets.values() for k in ks])
        if res > ATOL:
            raise InvariantError(f"instrument is not trace preserving (residual {res:.3e})")

    @property
    def outcomes(self) -> tuple[int, ...]:
        return tuple(self.kraus_sets)

    @property
    def dim(self) -> int:
        return next(iter(self.kraus_sets.values()))[0].shape[0]

    def operation(self, outcome: int, rho: np.ndarray) -> np.ndarray:
        """Unnormalized ``I_r[rho] = sum_k K rho K^dagger``."""
        return sum(k @ rho @ k.conj().T for k in self.kraus_sets[outcome])

    def superoperators(self) -> dict[int, np.ndarray]:
        return {r: superoperator(ks) for r, ks in self.kraus_sets.items()}


@dataclass(frozen=True)
class POVM:
    effects: Mapping[int, np.ndarray]

    def __post_init__(self):
        effects = {int(r): _freeze(e) for r, e in sorted(self.effects.items(), reverse=True)}
        object.__setattr__(self, "effects", effects)
        stack = np.array(list(effects.values()))
        adj = stack.conj().transpose(0, 2, 1)
        herm = np.max(np.abs(stack - adj), axis=(1, 2))
        lows = np.linalg.eigvalsh((stack + adj) / 2)[:, 0]
        for r, h, lo in zip(effects, herm, lows):
            if h > ATOL:
                raise InvariantError(f"effect {r:+d} is not Hermitian")
            if lo < -1e-9:
                raise InvariantError(f"effect {r:+d} is not positive semidefinite")
        if np.max(np.abs(stack.sum(axis=0) - np.eye(stack.shape[1]))) > ATOL:
            raise InvariantError("POVM effects do not sum to the identity")

    def __getitem__(self, outcome: int) -> np.ndarray:
        return self.effects[outcome]

    def probabilities(self, rho: StateVector | DensityMatrix) -> dict[int, float]:
        mat = rho.to_density().matrix if isinstance(rho, StateVector) else rho.matrix
        return {r: float(np.real(np.trace(e @ mat))) for r, e in self.effects.items()}


def _check_theta(theta: float) -> None:
    if not -1e-12 <= theta <= np.pi / 4 + 1e-12:
        raise ValueError(f"theta must lie in [0, pi/4], got {theta!r}")


def build_nmem_operators(theta: float) -> MeasurementOperatorSet:
    """Analytic operators of the CNOT-coupled non-maximally entangled meter.

    ``M_{++} = M_{--} = (cos t * EVEN + sin t * ODD) / sqrt 2`` and
    ``M_{+-} = M_{-+} = (sin t * EVEN + cos t * ODD) / sqrt 2``, where EVEN
    and ODD project on the +1 and -1 eigenspaces of sigma_z sigma_z.
    """
    _check_theta(theta)
    c, s = np.cos(theta), np.sin(theta)
    same = (c * EVEN + s * ODD) / np.sqrt(2)
    diff = (s * EVEN + c * ODD) / np.sqrt(2)
    return MeasurementOperatorSet(("++", "+-", "-+", "--"), (same, diff, diff, same))


def nmem_effective_operators(theta: float) -> dict[int, np.ndarray]:
    """One operator per global outcome: ``M_+`` and ``M_-``."""
    _check_theta(theta)
    c, s = np.cos(theta), np.sin(theta)
    return {1: c * EVEN + s * ODD, -1: s * EVEN + c * ODD}


def build_mem_operators(theta: float) -> MeasurementOperatorSet:
    """Operators of the maximally entangled meter after local rotations, ``theta = theta2 - theta1``."""
    c, s = np.cos(theta), np.sin(theta)
    r2 = np.sqrt(2)
    return MeasurementOperatorSet(
        ("++", "+-", "-+", "--"),
        (
            (c * EVEN + s * (PI01 - PI10)) / r2,
            (c * ODD + s * (PI00 - PI11)) / r2,
            (c * ODD - s * (PI00 - PI11)) / r2,
            (c * EVEN - s * (PI01 - PI10)) / r2,
        ),
    )


def coarse_grain(
    ops: MeasurementOperatorSet,
    rule: Callable[[str], int] | Mapping[str, int] = product_rule,
) -> QuantumInstrument:
    """Group operators by global outcome, discarding the local labels."""
    grouped: dict[int, list[np.ndarray]] = {}
    for label, op in zip(ops.labels, ops.operators):
        if isinstance(rule, Mapping):
            if label not in rule:
                raise ValueError(f"label map has no entry for {label!r}")
            outcome = rule[label]
        else:
            outcome = rule(label)
        grouped.setdefault(int(outcome), []).append(op)
    return QuantumInstrument({r: tuple(ks) for r, ks in grouped.items()})


def identity_instrument(dim: int = 4) -> QuantumInstrument:
    return QuantumInstrument({1: (np.eye(dim, dtype=complex),)})


def povm_of(instr: QuantumInstrument) -> POVM:
    """Effects ``E_r = I_r^*[1] = sum_k K^dagger K``."""
    return POVM({r: sum(k.conj().T @ k for k in ks) for r, ks in instr.kraus_sets.items()})


def strength_of(povm: POVM, observable: np.ndarray | None = None) -> float:
    """Strength ``s`` of a POVM of the form ``E_{+-1} = (1 +- s O) / 2``.

    ``O`` defaults to sigma_z sigma_z; pass ``qcore.Z`` for the one-qubit
    case. The value is signed: a negative strength means the outcome labels
    are swapped relative to the eigenvalues of ``O``.
    """
    obs = ZZ if observable is None else np.asarray(observable, dtype=complex)
    dim = obs.shape[0]
    if set(povm.effects) != {1, -1} or povm[1].shape != obs.shape:
        raise ShapeError("strength_of needs a two-outcome POVM matching the observable")
    s = float(np.real(np.trace(povm[1] @ obs))) / (dim / 2)
    ident = np.eye(dim)
    residual = max(
        np.max(np.abs(povm[1] - (ident + s * obs) / 2)),
        np.max(np.abs(povm[-1] - (ident - s * obs) / 2)),
    )
    if residual > SHAPE_ATOL:
        raise ShapeError(f"POVM is not of the spin-product form (residual {residual:.3e})")
    return s


@dataclass(frozen=True)
class InstrumentOutcome:
    """Probability and normalized post-measurement state of one outcome.

    ``state`` is ``None`` when the outcome has zero probability.
    """

    probability: float
    state: DensityMatrix | None

    @property
    def possible(self) -> bool:
        return self.state is not None


def apply_instrument(
    instr: QuantumInstrument, rho: StateVector | DensityMatrix, min_prob: float = 1e-14
) -> dict[int, InstrumentOutcome]:
    """Outcome statistics and normalized post-measurement states."""
    if isinstance(rho, StateVector):
        mat = np.outer(rho.amplitudes, rho.amplitudes.conj())
    else:
        mat = rho.matrix
    if mat.shape[0] != instr.dim:
        raise ValueError(f"instrument acts on dimension {instr.dim}, state has {mat.shape[0]}")
    out = {}
    for r in instr.outcomes:
        branch = instr.operation(r, mat)
        prob = float(np.real(np.trace(branch)))
        state = DensityMatrix(branch / prob) if prob > min_prob else None
        out[r] = InstrumentOutcome(max(prob, 0.0), state)
    return out


def purity_drop(
    outcomes: Mapping[int, InstrumentOutcome], initial: StateVector | DensityMatrix
) -> float:
    """Initial purity minus the probability-weighted purity of the post-measurement states."""
    final = sum(o.probability * purity(o.state) for o in outcomes.values() if o.possible)
    return purity(initial) - final


def superoperator(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """Matrix ``S`` with ``vec(sum K rho K^dagger) = S vec(rho)`` for row-major ``vec``."""
    return sum(np.kron(k, k.conj()) for k in kraus)


def superoperator_distance(a: Mapping[int, np.ndarray], b: Mapping[int, np.ndarray]) -> float:
    """Max-abs entry difference between two outcome-indexed superoperator families."""
    if set(a) != set(b):
        raise ValueError(f"outcome sets differ: {sorted(a)} vs {sorted(b)}")
    return float(max(np.max(np.abs(a[r] - b[r])) for r in a))


def kraus_from_superoperator(sop: np.ndarray, atol: float = 1e-12) -> tuple[np.ndarray, ...]:
    """Kraus operators of a completely positive map given by its superoperator.

    Goes through the Choi matrix; eigenvalues below ``atol`` are dropped.
    """
    d2 = sop.shape[0]
    d = int(round(np.sqrt(d2)))
    # S[(i,j),(k,l)] = sum K_ik conj(K_jl); reshuffle to C[(i,k),(j,l)]
    choi = sop.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d2, d2)
    vals, vecs = np.linalg.eigh((choi + choi.conj().T) / 2)
    if vals.min() < -1e-8:
        raise InvariantError(f"map is not completely positive (Choi eigenvalue {vals.min():.3e})")
    kraus = [np.sqrt(v) * vecs[:, i].reshape(d, d) for i, v in enumerate(vals) if v > atol]
    if not kraus:
        kraus = [np.zeros((d, d), dtype=complex)]
    return tuple(kraus)
