"""Randomized and gridded invariant suites behind ``spinprod verify``.

Each suite returns the largest violation it saw; a suite passes when that
residual does not exceed its tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analysis
from . import circuit as qc
from . import meastheory as mt
from . import schemes
from .qcore import (
    ZZ,
    StateVector,
    concurrence,
    fidelity,
    partial_trace,
    purity,
    random_statevector,
    schmidt,
)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)


@dataclass(frozen=True)
class Suite:
    name: str
    tolerance: float
    func: Callable[[np.random.Generator, int], float]


SUITES: list[Suite] = []


def suite(name: str, tolerance: float):
    def register(func):
        SUITES.append(Suite(name, tolerance, func))
        return func

    return register


def _thetas(n: int) -> np.ndarray:
    return np.linspace(0.0, np.pi / 4, n)


def _nmem_runner(theta: float, phi: float = 0.0):
    meter = schemes.MeterSpec(theta, phi)
    return lambda psi: schemes.run_nmem(meter, psi)


def _random_gate_op(rng: np.random.Generator, n: int) -> qc.CircuitOp:
    kind = rng.integers(6)
    q = int(rng.integers(n))
    if kind == 0:
        return qc.h(q)
    if kind == 1:
        return qc.x(q)
    if kind == 2:
        return qc.z(q)
    if kind == 3:
        return qc.rot_y(q, rng.uniform(-np.pi, np.pi))
    if kind == 4:
        return qc.phase_gate(q, rng.uniform(-np.pi, np.pi))
    a, b = rng.choice(n, size=2, replace=False)
    return qc.cnot(int(a), int(b))


@suite("schmidt_reconstruction", 1e-9)
def _schmidt(rng, cases):
    worst = 0.0
    for _ in range(cases):
        psi = random_statevector(2, rng)
        dec = schmidt(psi)
        worst = max(
            worst,
            float(np.max(np.abs(dec.reconstruct().amplitudes - psi.amplitudes))),
            abs(dec.lambda0**2 + dec.lambda1**2 - 1),
            max(0.0, dec.lambda1 - dec.lambda0),
        )
    return worst


@suite("product_purity_iff_unentangled", 1e-9)
def _product_purity(rng, cases):
    worst = 0.0
    for i in range(cases):
        if i % 2:
            psi = random_statevector(2, rng)
        else:
            a, b = random_statevector(1, rng), random_statevector(1, rng)
            psi = StateVector(np.kron(a.amplitudes, b.amplitudes))
        c = concurrence(psi)
        p = purity(partial_trace(psi, [0]))
        # reduced purity is 1 - C^2 / 2 for a pure two-qubit state
        worst = max(worst, abs(p - (1 - c * c / 2)), max(0.0, p - 1))
    return worst


@suite("gate_unitarity", 1e-12)
def _unitarity(rng, cases):
    worst = 0.0
    for _ in range(cases):
        op = _random_gate_op(rng, 2)
        u = op.gate.matrix
        worst = max(worst, float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))))
    return worst


@suite("apply_preserves_norm", 1e-12)
def _norm(rng, cases):
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 6))
        psi = random_statevector(n, rng)
        op = _random_gate_op(rng, n) if n > 1 else qc.rot_y(0, rng.uniform(-np.pi, np.pi))
        worst = max(worst, abs(qc.apply(psi, op).norm() - 1))
    return worst


@suite("circuit_inverse_roundtrip", 1e-10)
def _inverse(rng, cases):
    worst = 0.0
    for _ in range(max(1, cases // 10)):
        n = int(rng.integers(2, 6))
        ops = [_random_gate_op(rng, n) for _ in range(12)]
        psi = random_statevector(n, rng)
        back = qc.run(qc.run(psi, ops), qc.inverse(ops))
        worst = max(worst, float(np.max(np.abs(back.amplitudes - psi.amplitudes))))
    return worst


@suite("measure_branch_probabilities", 1e-10)
def _branches(rng, cases):
    worst = 0.0
    for _ in range(max(1, cases // 10)):
        n = int(rng.integers(1, 5))
        psi = random_statevector(n, rng)
        basis = qc.Basis.Z if rng.integers(2) else qc.Basis.X
        plus, minus = qc.measure_branch(psi, int(rng.integers(n)), basis)
        worst = max(worst, abs(plus.probability + minus.probability - 1))
        worst = max(worst, abs(plus.state.inner(minus.state)))
    return worst


@suite("povm_completeness", 1e-10)
def _completeness(rng, cases):
    worst = 0.0
    for _ in range(cases):
        theta = rng.uniform(0, np.pi / 4)
        for ops in (mt.build_nmem_operators(theta), mt.build_mem_operators(rng.uniform(-np.pi, np.pi))):
            povm = mt.povm_of(mt.coarse_grain(ops))
            worst = max(worst, float(np.max(np.abs(povm[1] + povm[-1] - np.eye(4)))))
    return worst


@suite("instrument_trace_preservation", 1e-10)
def _trace_preservation(rng, cases):
    worst = 0.0
    for _ in range(cases):
        instr = mt.coarse_grain(mt.build_mem_operators(rng.uniform(-np.pi, np.pi)))
        psi = random_statevector(2, rng)
        total = sum(o.probability for o in mt.apply_instrument(instr, psi).values())
        worst = max(worst, abs(total - 1))
    return worst


@suite("density_matrix_hermitian_psd", 1e-9)
def _hermitian_psd(rng, cases):
    worst = 0.0
    for _ in range(cases):
        instr = mt.coarse_grain(mt.build_mem_operators(rng.uniform(-np.pi, np.pi)))
        for out in mt.apply_instrument(instr, random_statevector(2, rng)).values():
            mat = out.state.matrix
            worst = max(
                worst,
                float(np.max(np.abs(mat - mat.conj().T))),
                max(0.0, -float(np.linalg.eigvalsh(mat).min())),
                abs(out.state.trace() - 1),
            )
    return worst


@suite("nmem_operator_identity", 1e-14)
def _nmem_identity(rng, cases):
    worst = 0.0
    for theta in rng.uniform(0, np.pi / 4, size=100):
        ops = mt.build_nmem_operators(theta)
        worst = max(worst, float(np.max(np.abs(ops["++"] - ops["--"]))), float(np.max(np.abs(ops["+-"] - ops["-+"]))))
    return worst


@suite("effective_operator_equivalence", 1e-12)
def _effective(rng, cases):
    worst = 0.0
    for _ in range(max(1, cases // 10)):
        theta = rng.uniform(0, np.pi / 4)
        instr = mt.coarse_grain(mt.build_nmem_operators(theta))
        eff = mt.nmem_effective_operators(theta)
        psi = random_statevector(2, rng)
        rho = np.outer(psi.amplitudes, psi.amplitudes.conj())
        for r in (1, -1):
            worst = max(worst, float(np.max(np.abs(instr.operation(r, rho) - eff[r] @ rho @ eff[r].conj().T))))
    return worst


@suite("eigenstate_preservation", 1e-12)
def _eigenstates(rng, cases):
    worst = 0.0
    for theta in _thetas(11)[:-1]:
        instr = mt.coarse_grain(mt.build_nmem_operators(theta))
        for label in ("00", "01", "10", "11"):
            psi = StateVector.from_label(label)
            for out in mt.apply_instrument(instr, psi).values():
                if out.possible:
                    worst = max(worst, 1 - fidelity(out.state, psi))
    return worst


@suite("entanglement_non_breaking", 1e-9)
def _non_breaking(rng, cases):
    worst = 0.0
    bell = schemes.BELL_PHI_PLUS
    for theta in _thetas(10):
        out = mt.apply_instrument(mt.coarse_grain(mt.build_nmem_operators(theta)), bell)[1]
        vals, vecs = np.linalg.eigh(out.state.matrix)
        post = StateVector(vecs[:, -1])
        worst = max(worst, 1 - vals[-1], 1 - concurrence(post))
    return worst


@suite("povm_law_circuit", 1e-10)
def _povm_law(rng, cases):
    worst = 0.0
    for theta in _thetas(50):
        povm = mt.povm_of(schemes.instrument_from_run(_nmem_runner(theta)))
        s = np.cos(2 * theta)
        for r in (1, -1):
            worst = max(worst, float(np.max(np.abs(povm[r] - (np.eye(4) + r * s * ZZ) / 2))))
    return worst


@suite("circuit_vs_analytic_instruments", 1e-10)
def _circuit_vs_analytic(rng, cases):
    worst = 0.0
    for theta in _thetas(25):
        nmem = schemes.reconstruct_superoperators(_nmem_runner(theta))
        worst = max(worst, mt.superoperator_distance(nmem, mt.coarse_grain(mt.build_nmem_operators(theta)).superoperators()))
        mem = schemes.reconstruct_superoperators(lambda psi: schemes.run_mem(0.0, theta, psi))
        worst = max(worst, mt.superoperator_distance(mem, mt.coarse_grain(mt.build_mem_operators(theta)).superoperators()))
    return worst


@suite("erasure_equivalence", 1e-9)
def _erasure(rng, cases):
    worst = 0.0
    for theta in _thetas(10):
        erasure = schemes.reconstruct_superoperators(lambda psi: schemes.run_erasure(theta, psi))
        nmem = mt.coarse_grain(mt.build_nmem_operators(theta)).superoperators()
        worst = max(worst, mt.superoperator_distance(erasure, nmem))
    return worst


@suite("filter_success_probability", 1e-12)
def _filter(rng, cases):
    worst = 0.0
    for theta in _thetas(10):
        prob, meter = schemes.prepare_meter_by_filter(theta)
        target = schemes.prepare_meter(schemes.MeterSpec(theta))
        worst = max(worst, abs(prob - 0.5), 1 - fidelity(meter, target))
    return worst


@suite("strength_equals_concurrence", 1e-10)
def _strength_law(rng, cases):
    worst = 0.0
    for theta in _thetas(25):
        meter = schemes.MeterSpec(theta)
        worst = max(worst, abs(schemes.meter_concurrence(meter) - analysis.simulated_strength(meter)))
    return worst


@suite("mem_purity_drop_closed_form", 1e-10)
def _mem_noise(rng, cases):
    worst = 0.0
    plus = StateVector.from_label("++")
    for theta in _thetas(25):
        s = np.cos(2 * theta)
        dg = schemes.run_mem(0.0, theta, plus).delta_gamma()
        worst = max(worst, abs(dg - (1 - s * s) / 2))
    return worst


@suite("phi_meter_purity_drop_grid", 1e-10)
def _phi_grid(rng, cases):
    worst = 0.0
    for theta in _thetas(20):
        for phi in np.linspace(0, np.pi, 20):
            meter = schemes.MeterSpec(theta, phi)
            dg = analysis.simulated_delta_gamma(meter)
            worst = max(worst, abs(dg - analysis.delta_gamma(meter.strength, phi)))
    return worst


@suite("phase_relation_random_pairs", 1e-9)
def _phase_relation(rng, cases):
    worst = 0.0
    for _ in range(15):
        c, s = np.sort(rng.uniform(0, 1, size=2))[::-1]
        meter = analysis.meter_for(c, s)
        worst = max(
            worst,
            abs(schemes.meter_concurrence(meter) - c),
            abs(analysis.simulated_strength(meter) - s),
            abs(analysis.simulated_delta_gamma(meter) - analysis.delta_gamma(s, meter.phi)),
        )
    return worst


@suite("noise_surface_feasibility", 1e-12)
def _surface(rng, cases):
    worst = 0.0
    for p in analysis.noise_surface(41, 41):
        if p.feasible != (p.concurrence >= p.strength - analysis.FEASIBLE_ATOL):
            worst = max(worst, 1.0)
        if p.feasible and p.concurrence == p.strength:
            worst = max(worst, p.delta_gamma)
    return worst


def run_suites(seed: int = 0, cases: int = 2000, tolerance: float | None = None) -> list[SuiteResult]:
    """Run every suite with its own generator derived from ``seed``."""
    results = []
    for index, s in enumerate(SUITES):
        rng = np.random.default_rng([seed, index])
        residual = float(s.func(rng, cases))
        results.append(SuiteResult(s.name, residual, s.tolerance if tolerance is None else tolerance))
    return results


def format_report(results: list[SuiteResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'suite':<{width}}  status  max_residual  tolerance"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.residual:.3e}     {r.tolerance:.1e}")
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} suites passed")
    return "\n".join(lines) + "\n"
