"""Circuit-level simulations of the spin-product measurement schemes.

Register layouts (qubit 0 most significant):

* single qubit: ``[S, M]``
* NMEM / MEM: ``[S_A, S_B, M_A, M_B]``
* erasure: ``[S_A, S_B, M_A, M_B, L]`` with ``L`` Bob's local meter
* meter filter: ``[M_A, M_B, anc]`` with ``anc`` Alice's local ancilla

Every runner returns a :class:`SchemeRun` whose branch probabilities are
computed exactly from amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from . import circuit as qc
from .exceptions import PostselectionError, ReconstructionError
from .meastheory import (
    InstrumentOutcome,
    QuantumInstrument,
    kraus_from_superoperator,
    product_rule,
    purity_drop,
)
from .qcore import (
    DensityMatrix,
    StateVector,
    concurrence,
    partial_trace,
    tensor,
)

BELL_PHI_PLUS = StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2))


class Scheme(str, Enum):
    SINGLE = "single"
    NMEM = "nmem"
    MEM = "mem"
    ERASURE = "erasure"


@dataclass(frozen=True)
class MeterSpec:
    """Two-qubit meter ``(cos t|00> + e^{i phi} sin t|01> + sin t|10> + cos t|11>) / sqrt 2``.

    ``phi = 0`` is the ideal non-maximally entangled meter; ``phi = pi`` has
    the same entanglement as a Bell state.
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not -1e-12 <= self.theta <= np.pi / 4 + 1e-12:
            raise ValueError(f"meter theta must lie in [0, pi/4], got {self.theta!r}")
        if not -1e-12 <= self.phi <= np.pi + 1e-12:
            raise ValueError(f"meter phi must lie in [0, pi], got {self.phi!r}")

    @property
    def strength(self) -> float:
        return float(np.cos(2 * self.theta))

    @property
    def alpha(self) -> float:
        """Schmidt angle of the phi = 0 meter, ``cos(a)|++> + sin(a)|-->``."""
        return np.pi / 4 - self.theta

    @property
    def concurrence(self) -> float:
        """Closed-form concurrence ``|cos^2 t - e^{i phi} sin^2 t|``."""
        c2, s2 = np.cos(self.theta) ** 2, np.sin(self.theta) ** 2
        return float(abs(c2 - np.exp(1j * self.phi) * s2))


@dataclass(frozen=True)
class SchemeRun:
    """Result of one scheme simulation on a pure input.

    ``outcome_table`` maps each local label to the joint probability of that
    branch (including any post-selection) and the normalized system state.
    Retained probabilities sum to ``success_probability``.
    ``failures`` records the probability lost at each post-selection stage.
    """

    scheme: Scheme
    meter: MeterSpec | None
    input_state: StateVector
    outcome_table: Mapping[str, InstrumentOutcome]
    success_probability: float = 1.0
    rule: Callable[[str], int] = product_rule
    params: Mapping[str, float] = field(default_factory=dict)
    failures: Mapping[str, float] = field(default_factory=dict)

    def unnormalized(self, label: str) -> np.ndarray:
        out = self.outcome_table[label]
        dim = 2**self.input_state.n_qubits
        if not out.possible:
            return np.zeros((dim, dim), dtype=complex)
        return out.probability * out.state.matrix

    def global_branches(self, conditional: bool = False) -> dict[int, np.ndarray]:
        """Unnormalized coarse-grained output ``I_r[rho]`` per global outcome.

        With ``conditional=True`` the branches are divided by the success
        probability, i.e. conditioned on all post-selections succeeding.
        """
        out: dict[int, np.ndarray] = {}
        for label in self.outcome_table:
            r = self.rule(label)
            out[r] = out.get(r, 0) + self.unnormalized(label)
        if conditional:
            out = {r: m / self.success_probability for r, m in out.items()}
        return dict(sorted(out.items(), reverse=True))

    def global_outcomes(self, conditional: bool = True) -> dict[int, InstrumentOutcome]:
        res = {}
        for r, mat in self.global_branches(conditional).items():
            prob = float(np.real(np.trace(mat)))
            res[r] = InstrumentOutcome(prob, DensityMatrix(mat / prob) if prob > 1e-14 else None)
        return res

    def delta_gamma(self) -> float:
        """Purity drop of the coarse-grained, success-conditioned measurement."""
        return purity_drop(self.global_outcomes(conditional=True), self.input_state)


def _check_system(psi: StateVector, n: int) -> None:
    if psi.n_qubits != n:
        raise ValueError(f"expected a {n}-qubit system state, got {psi.n_qubits} qubits")
    if not psi.is_normalized():
        raise ValueError("system state must be normalized")


def _label(outcomes: Sequence[int]) -> str:
    return "".join("+" if o == 1 else "-" for o in outcomes)


def _readout(state: StateVector, meters: Sequence[int], keep: Sequence[int], scale: float = 1.0) -> dict[str, InstrumentOutcome]:
    """Z-measure ``meters`` in order and return per-label system states on ``keep``."""
    table: dict[str, InstrumentOutcome] = {}

    def recurse(st: StateVector | None, prob: float, depth: int, outcomes: list[int]):
        if depth == len(meters):
            if st is None:
                table[_label(outcomes)] = InstrumentOutcome(0.0, None)
            else:
                table[_label(outcomes)] = InstrumentOutcome(prob * scale, partial_trace(st, keep))
            return
        if st is None:
            for o in (1, -1):
                recurse(None, 0.0, depth + 1, outcomes + [o])
            return
        for branch in qc.measure_branch(st, meters[depth], qc.Basis.Z):
            recurse(branch.state, prob * branch.probability, depth + 1, outcomes + [branch.outcome])

    recurse(state, 1.0, 0, [])
    return table


def prepare_meter(spec: MeterSpec) -> StateVector:
    """Exact meter state for the given angles."""
    c, s = np.cos(spec.theta), np.sin(spec.theta)
    amps = np.array([c, np.exp(1j * spec.phi) * s, s, c]) / np.sqrt(2)
    return StateVector(amps)


def filter_circuit(theta: float) -> list[qc.CircuitOp]:
    """Alice-local filter turning a Bell meter into the ``theta`` meter.

    Register ``[M_A, M_B, anc]``. In Alice's ``|+>/|->`` basis the ancilla is
    rotated by ``a`` or ``pi/2 - a`` (``a = pi/4 - theta``); keeping ancilla
    ``|0>`` applies ``cos(a)|+><+| + sin(a)|-><-|`` to the meter.
    """
    a = np.pi / 4 - theta
    ops = [qc.h(0), qc.rot_y(2, a)]
    ops += qc.controlled_ry(0, 2, np.pi / 2 - 2 * a)
    ops.append(qc.h(0))
    return ops


def prepare_meter_by_filter(theta: float) -> tuple[float, StateVector]:
    """Probabilistic preparation of the ideal meter from a Bell pair.

    Returns the success probability (1/2 for every ``theta``) and the meter
    on success.
    """
    MeterSpec(theta)
    start = tensor(BELL_PHI_PLUS, StateVector.from_label("0"))
    out = qc.run(start, filter_circuit(theta))
    return qc.postselect(out, 2, StateVector.from_label("0"))


def run_single_qubit(theta: float, psi: StateVector) -> SchemeRun:
    """One-qubit sigma_z measurement: meter ``R(theta)|0>``, CNOT system -> meter, read meter."""
    _check_system(psi, 1)
    state = tensor(psi, StateVector.from_label("0"))
    state = qc.run(state, [qc.rot_y(1, theta), qc.cnot(0, 1)])
    return SchemeRun(
        scheme=Scheme.SINGLE,
        meter=None,
        input_state=psi,
        outcome_table=_readout(state, [1], [0]),
        params={"theta": float(theta)},
    )


def _coupled_readout(psi: StateVector, meter: StateVector, pre_ops: Sequence[qc.CircuitOp] = ()) -> dict[str, InstrumentOutcome]:
    state = tensor(psi, meter)
    state = qc.run(state, [*pre_ops, qc.cnot(0, 2), qc.cnot(1, 3)])
    return _readout(state, [2, 3], [0, 1])


def run_nmem(meter: MeterSpec, psi: StateVector) -> SchemeRun:
    """Shared two-qubit meter, local CNOTs system -> meter, local Z readouts.

    ``meter.phi`` may be nonzero, which simulates the over-entangled
    generalization of the meter with the same circuit.
    """
    _check_system(psi, 2)
    return SchemeRun(
        scheme=Scheme.NMEM,
        meter=meter,
        input_state=psi,
        outcome_table=_coupled_readout(psi, prepare_meter(meter)),
        params={"theta": meter.theta, "phi": meter.phi},
    )


def run_mem(theta1: float, theta2: float, psi: StateVector) -> SchemeRun:
    """Bell meter, local rotations ``R_A(theta1)``, ``R_B(theta2)``, then the NMEM coupling and readout."""
    _check_system(psi, 2)
    rotations = [qc.rot_y(2, theta1), qc.rot_y(3, theta2)]
    return SchemeRun(
        scheme=Scheme.MEM,
        meter=None,
        input_state=psi,
        outcome_table=_coupled_readout(psi, BELL_PHI_PLUS, rotations),
        params={"theta1": float(theta1), "theta2": float(theta2), "theta": float(theta2 - theta1)},
    )


def run_erasure(meter_theta: float, psi: StateVector) -> SchemeRun:
    """Five-qubit quantum-erasure scheme.

    1. strong CNOT coupling of both systems to a shared Bell meter;
    2. Alice post-selects her meter qubit on ``|0>``;
    3. Bob weakly couples his meter qubit to a local meter ``R(meter_theta)|0>``;
    4. Bob post-selects his meter qubit on ``|+>``; the local meter is read out.

    Labels are the local-meter outcomes ``"+"``/``"-"``. A failed
    post-selection leaves all branches at probability zero.
    """
    _check_system(psi, 2)
    state = tensor(psi, BELL_PHI_PLUS, StateVector.from_label("0"))
    state = qc.run(state, [qc.cnot(0, 2), qc.cnot(1, 3)])
    failures = {}
    params = {"theta": float(meter_theta)}
    empty = {"+": InstrumentOutcome(0.0, None), "-": InstrumentOutcome(0.0, None)}
    try:
        p_alice, state = qc.postselect(state, 2, StateVector.from_label("0"))
    except PostselectionError:
        return SchemeRun(Scheme.ERASURE, None, psi, empty, 0.0, params=params, failures={"alice_postselect": 1.0})
    failures["alice_postselect"] = 1.0 - p_alice
    # register is now [S_A, S_B, M_B, L]
    state = qc.run(state, [qc.rot_y(3, meter_theta), qc.cnot(2, 3)])
    try:
        p_erase, state = qc.postselect(state, 2, StateVector.from_label("+"))
    except PostselectionError:
        failures["erasure_postselect"] = p_alice
        return SchemeRun(Scheme.ERASURE, None, psi, empty, 0.0, params=params, failures=failures)
    failures["erasure_postselect"] = p_alice * (1.0 - p_erase)
    success = p_alice * p_erase
    return SchemeRun(
        scheme=Scheme.ERASURE,
        meter=None,
        input_state=psi,
        outcome_table=_readout(state, [2], [0, 1], scale=success),
        success_probability=success,
        params=params,
        failures=failures,
    )


_SINGLE_LABELS = ("0", "1", "+", "r")


def tomography_inputs(n_qubits: int = 2) -> list[StateVector]:
    """Products of ``{|0>, |1>, |+>, |+i>}``; their projectors span all operators."""
    labels = [""]
    for _ in range(n_qubits):
        labels = [lab + ch for lab in labels for ch in _SINGLE_LABELS]
    return [StateVector.from_label(lab) for lab in labels]


def _validation_inputs(n_qubits: int) -> list[StateVector]:
    rng = np.random.default_rng(20200101)
    out = []
    for _ in range(3):
        vec = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
        out.append(StateVector(vec / np.linalg.norm(vec)))
    return out


def reconstruct_superoperators(
    runner: Callable[[StateVector], SchemeRun],
    n_qubits: int = 2,
    conditional: bool = True,
    atol: float = 1e-8,
) -> dict[int, np.ndarray]:
    """Linear-inversion process tomography of a scheme, one superoperator per global outcome.

    The runner is evaluated on :func:`tomography_inputs`; the reconstruction
    is then checked against three fixed random inputs and a
    :class:`ReconstructionError` raised if any output deviates by more than
    ``atol``.
    """
    inputs = tomography_inputs(n_qubits)
    rhos = np.array([np.outer(p.amplitudes, p.amplitudes.conj()).reshape(-1) for p in inputs]).T
    outputs: dict[int, list[np.ndarray]] = {}
    for psi in inputs:
        for r, mat in runner(psi).global_branches(conditional).items():
            outputs.setdefault(r, []).append(mat.reshape(-1))
    inv = np.linalg.inv(rhos)
    sops = {r: np.array(cols).T @ inv for r, cols in outputs.items()}

    residual = 0.0
    for psi in _validation_inputs(n_qubits):
        vec = np.outer(psi.amplitudes, psi.amplitudes.conj()).reshape(-1)
        for r, mat in runner(psi).global_branches(conditional).items():
            residual = max(residual, float(np.max(np.abs(sops[r] @ vec - mat.reshape(-1)))))
    if residual > atol:
        raise ReconstructionError(f"scheme is not a fixed linear map on the inputs (residual {residual:.3e})")
    return dict(sorted(sops.items(), reverse=True))


def instrument_from_run(
    runner: Callable[[StateVector], SchemeRun],
    n_qubits: int = 2,
    conditional: bool = True,
) -> QuantumInstrument:
    """Quantum instrument reconstructed from simulated runs (Kraus form via the Choi matrix)."""
    sops = reconstruct_superoperators(runner, n_qubits, conditional)
    return QuantumInstrument({r: kraus_from_superoperator(s) for r, s in sops.items()})


def meter_concurrence(spec: MeterSpec) -> float:
    """Concurrence of the prepared meter, computed from its Schmidt decomposition."""
    return concurrence(prepare_meter(spec))
