"""Quantum-state primitives for few-qubit simulation.

Conventions used throughout the package:

* Qubit 0 is the most significant bit of a basis index, so the amplitude of
  ``|q0 q1 ... q(n-1)>`` lives at ``int("q0q1...", 2)``.
* Operators are plain complex ``numpy`` arrays. States are wrapped in the
  immutable :class:`StateVector` and :class:`DensityMatrix` containers whose
  backing arrays are made read-only.
* Vectorization of matrices (used for superoperators) is row-major.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Union

import numpy as np

from .exceptions import DimensionError, InvariantError, NormalizationError

ATOL = 1e-10
DERIVED_ATOL = 1e-9
PSD_ATOL = 1e-9
MAX_DIM = 2**10

# Hermiticity/PSD validation of every DensityMatrix; cheap at this scale but
# kept opt-in for tight loops.
DEBUG = os.environ.get("SPINPROD_DEBUG", "") not in ("", "0")

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
ZZ = np.kron(Z, Z)

_SINGLE_KETS = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "r": np.array([1, 1j], dtype=complex) / np.sqrt(2),
    "l": np.array([1, -1j], dtype=complex) / np.sqrt(2),
}


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.flags.writeable = False
    return arr


def projector(bits: str) -> np.ndarray:
    """Computational-basis projector, e.g. ``projector("01")`` is |01><01|."""
    dim = 2 ** len(bits)
    out = np.zeros((dim, dim), dtype=complex)
    idx = int(bits, 2)
    out[idx, idx] = 1.0
    return out


def _vnorm(vec: np.ndarray) -> float:
    # cheaper than np.linalg.norm for the short vectors used here
    return math.sqrt(np.vdot(vec, vec).real)


def canonical_phase(vec: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Return ``vec`` times the global phase making its first nonzero entry real and >= 0."""
    vec = np.asarray(vec, dtype=complex)
    mags = np.abs(vec)
    idx = int(np.argmax(mags > atol))
    if mags[idx] <= atol:
        return vec.copy()
    return vec * (mags[idx] / vec[idx])


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state of ``n_qubits`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or not _is_power_of_two(amps.size) or amps.size < 2:
            raise DimensionError(f"state length must be a power of two >= 2, got shape {amps.shape}")
        if amps.size > MAX_DIM:
            raise DimensionError(f"state dimension {amps.size} exceeds MAX_DIM={MAX_DIM}")
        if not np.isfinite(amps).all():
            raise InvariantError("state amplitudes must be finite")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def from_label(cls, label: str) -> "StateVector":
        """Product state from single-qubit labels in ``01+-rl`` (``r`` is |+i>)."""
        try:
            kets = [_SINGLE_KETS[ch] for ch in label]
        except KeyError as exc:
            raise ValueError(f"unknown qubit label {exc.args[0]!r} in {label!r}") from None
        return cls(reduce(np.kron, kets))

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return _vnorm(self.amplitudes)

    def normalize(self) -> "StateVector":
        n = self.norm()
        if n == 0:
            raise NormalizationError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n)

    def is_normalized(self, atol: float = ATOL) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= atol

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def canonical(self) -> "StateVector":
        return StateVector(canonical_phase(self.amplitudes))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def allclose(self, other: "StateVector", atol: float = DERIVED_ATOL, up_to_phase: bool = False) -> bool:
        a, b = self.amplitudes, other.amplitudes
        if a.shape != b.shape:
            return False
        if up_to_phase:
            a, b = canonical_phase(a), canonical_phase(b)
        return bool(np.allclose(a, b, atol=atol, rtol=0))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits}, amplitudes={np.round(self.amplitudes, 6).tolist()})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density operator on ``n_qubits`` qubits.

    Unnormalized post-measurement branches (trace in (0, 1]) are allowed; use
    :meth:`normalize` to condition on the branch.
    """

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or not _is_power_of_two(mat.shape[0]) or mat.shape[0] < 2:
            raise DimensionError(f"density matrix must be square with power-of-two side, got {mat.shape}")
        if mat.shape[0] > MAX_DIM:
            raise DimensionError(f"dimension {mat.shape[0]} exceeds MAX_DIM={MAX_DIM}")
        if not np.isfinite(mat).all():
            raise InvariantError("density matrix entries must be finite")
        object.__setattr__(self, "matrix", _frozen(mat))
        if DEBUG:
            self.validate()

    @classmethod
    def from_state(cls, psi: StateVector) -> "DensityMatrix":
        return psi.to_density()

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        dim = 2**n_qubits
        return cls(np.eye(dim, dtype=complex) / dim)

    @property
    def n_qubits(self) -> int:
        return self.matrix.shape[0].bit_length() - 1

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def normalize(self) -> "DensityMatrix":
        tr = self.trace()
        if tr <= 0:
            raise NormalizationError("cannot normalize a density matrix with non-positive trace")
        return DensityMatrix(self.matrix / tr)

    def validate(self, atol: float = ATOL, psd_atol: float = PSD_ATOL) -> "DensityMatrix":
        """Check Hermiticity, positivity and trace <= 1; return self."""
        mat = self.matrix
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm > atol:
            raise InvariantError(f"density matrix not Hermitian (residual {herm:.3e})")
        lo = np.linalg.eigvalsh((mat + mat.conj().T) / 2).min()
        if lo < -psd_atol:
            raise InvariantError(f"density matrix not positive semidefinite (min eigenvalue {lo:.3e})")
        tr = self.trace()
        if tr > 1 + atol:
            raise InvariantError(f"density matrix trace {tr!r} exceeds 1")
        return self

    def allclose(self, other: "DensityMatrix", atol: float = DERIVED_ATOL) -> bool:
        return self.matrix.shape == other.matrix.shape and bool(
            np.allclose(self.matrix, other.matrix, atol=atol, rtol=0)
        )

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self):
        return f"DensityMatrix(n_qubits={self.n_qubits}, trace={self.trace():.6g})"


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``psi = lambda0 |a0 b0> + lambda1 |a1 b1>`` with ``lambda0 >= lambda1 >= 0``."""

    lambda0: float
    lambda1: float
    basis_a: tuple[StateVector, StateVector]
    basis_b: tuple[StateVector, StateVector]

    def reconstruct(self) -> StateVector:
        a, b = self.basis_a, self.basis_b
        mat = self.lambda0 * np.outer(a[0].amplitudes, b[0].amplitudes)
        mat += self.lambda1 * np.outer(a[1].amplitudes, b[1].amplitudes)
        return StateVector(mat.reshape(-1))

    @property
    def coefficients(self) -> tuple[float, float]:
        return self.lambda0, self.lambda1


Tensorable = Union[np.ndarray, StateVector, DensityMatrix]


def _tensor2(a: Tensorable, b: Tensorable) -> Tensorable:
    kind = type(a)
    if type(b) is not kind and not (isinstance(a, np.ndarray) and isinstance(b, np.ndarray)):
        raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")
    arr_a, arr_b = np.asarray(a), np.asarray(b)
    if arr_a.ndim != arr_b.ndim:
        raise DimensionError("cannot tensor a vector with a matrix")
    for arr in (arr_a, arr_b):
        if not all(_is_power_of_two(s) for s in arr.shape):
            raise DimensionError(f"tensor factors must have power-of-two dimensions, got {arr.shape}")
    dim = arr_a.shape[0] * arr_b.shape[0]
    if dim > MAX_DIM:
        raise DimensionError(f"tensor product dimension {dim} exceeds MAX_DIM={MAX_DIM}")
    out = np.kron(arr_a, arr_b)
    if kind is StateVector:
        return StateVector(out)
    if kind is DensityMatrix:
        return DensityMatrix(out)
    return out


def tensor(*factors: Tensorable) -> Tensorable:
    """Kronecker product with the leftmost factor on the most significant qubits.

    Works on operators (ndarrays), state vectors and density matrices; all
    factors must be of the same kind.
    """
    if not factors:
        raise ValueError("tensor() needs at least one factor")
    return reduce(_tensor2, factors)


def _as_density(rho: StateVector | DensityMatrix) -> DensityMatrix:
    return rho.to_density() if isinstance(rho, StateVector) else rho


def partial_trace(rho: StateVector | DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the qubits in ``keep`` (kept in ascending order)."""
    rho = _as_density(rho)
    n = rho.n_qubits
    keep = sorted(set(keep))
    if not keep:
        raise DimensionError("keep must be nonempty")
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"qubit indices {keep} out of range for {n} qubits")
    traced = [q for q in range(n) if q not in keep]
    tensor_ = rho.matrix.reshape((2,) * (2 * n))
    # contract ket axis q with bra axis q for every traced qubit
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    ket = list(letters[:n])
    bra = list(letters[n : 2 * n])
    for q in traced:
        bra[q] = ket[q]
    out = "".join(ket[q] for q in keep) + "".join(bra[q] for q in keep)
    reduced = np.einsum("".join(ket) + "".join(bra) + "->" + out, tensor_)
    dim = 2 ** len(keep)
    return DensityMatrix(reduced.reshape(dim, dim))


def _eigvec_2x2(mat: np.ndarray, value: float) -> np.ndarray:
    a, b, d = mat[0, 0].real, mat[0, 1], mat[1, 1].real
    v1 = np.array([b, value - a], dtype=complex)
    v2 = np.array([value - d, np.conj(b)], dtype=complex)
    n1, n2 = _vnorm(v1), _vnorm(v2)
    return v1 / n1 if n1 >= n2 else v2 / n2


def schmidt(psi: StateVector) -> SchmidtDecomposition:
    """Schmidt decomposition of a normalized two-qubit pure state.

    Solves the 2x2 reduced-density eigenproblem in closed form. Basis vectors
    are returned with their first nonzero component real and nonnegative on
    Alice's side; Bob's vectors absorb the remaining phase.
    """
    if psi.n_qubits != 2:
        raise DimensionError(f"schmidt() needs a two-qubit state, got {psi.n_qubits} qubits")
    if abs(psi.norm() - 1.0) > 1e-8:
        raise NormalizationError(f"schmidt() needs a normalized state (norm {psi.norm():.3e})")
    coeffs = psi.amplitudes.reshape(2, 2)
    rho_a = coeffs @ coeffs.conj().T
    a, b, d = rho_a[0, 0].real, rho_a[0, 1], rho_a[1, 1].real
    # eigenvalue gap from the entries directly; sqrt(1 - 4 det) loses half the digits
    gap = np.hypot(a - d, 2 * abs(b))
    p0 = (a + d + gap) / 2.0

    if gap < 1e-14:
        # degenerate spectrum: any basis diagonalizes rho_a
        a0 = np.array([1, 0], dtype=complex)
    else:
        a0 = canonical_phase(_eigvec_2x2(rho_a, p0))
    a1 = canonical_phase(np.array([-np.conj(a0[1]), np.conj(a0[0])], dtype=complex))

    # Schmidt coefficients as norms of the projected Bob vectors keep the
    # reconstruction exact to rounding
    u0, u1 = a0.conj() @ coeffs, a1.conj() @ coeffs
    lam0, lam1 = _vnorm(u0), _vnorm(u1)
    if lam1 > lam0:
        a0, a1, u0, u1, lam0, lam1 = a1, a0, u1, u0, lam1, lam0
    b0 = u0 / lam0
    # b1 is the exact complement of b0; dividing u1 by a tiny lam1 would
    # amplify rounding and break orthogonality near product states
    b1 = np.array([-np.conj(b0[1]), np.conj(b0[0])], dtype=complex)
    overlap = np.vdot(b1, u1)
    lam1 = abs(overlap)
    if lam1 > 0:
        b1 = b1 * (overlap / lam1)
    return SchmidtDecomposition(
        lambda0=float(lam0),
        lambda1=float(lam1),
        basis_a=(StateVector(a0), StateVector(a1)),
        basis_b=(StateVector(b0), StateVector(b1)),
    )


def concurrence(psi: StateVector) -> float:
    """Concurrence ``2 * lambda0 * lambda1`` of a pure two-qubit state."""
    dec = schmidt(psi)
    return float(min(1.0, 2.0 * dec.lambda0 * dec.lambda1))


def purity(rho: StateVector | DensityMatrix) -> float:
    """Tr(rho^2)."""
    if isinstance(rho, StateVector):
        return float(np.real(np.vdot(rho.amplitudes, rho.amplitudes)) ** 2)
    mat = rho.matrix
    return float(np.real(np.einsum("ij,ji->", mat, mat)))


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((mat + mat.conj().T) / 2)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(a: StateVector | DensityMatrix, b: StateVector | DensityMatrix) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(a) b sqrt(a)))**2``; reduces to overlaps for pure inputs."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return abs(a.inner(b)) ** 2
    if isinstance(a, StateVector):
        a, b = b, a
    if isinstance(b, StateVector):
        return float(np.real(np.vdot(b.amplitudes, a.matrix @ b.amplitudes)))
    sa = _psd_sqrt(a.matrix)
    inner = _psd_sqrt(sa @ b.matrix @ sa)
    return float(np.real(np.trace(inner)) ** 2)


def random_statevector(n_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state."""
    dim = 2**n_qubits
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(vec / _vnorm(vec))


def is_unitary(mat: np.ndarray, atol: float = 1e-12) -> bool:
    mat = np.asarray(mat)
    return bool(np.allclose(mat.conj().T @ mat, np.eye(mat.shape[0]), atol=atol, rtol=0))
