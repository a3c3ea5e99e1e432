"""Strength/entanglement/noise relations and the noise-surface sweep."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .exceptions import InfeasibleError, InvariantError
from .meastheory import povm_of, strength_of
from .schemes import MeterSpec, instrument_from_run, meter_concurrence, run_nmem
from .qcore import StateVector

FEASIBLE_ATOL = 1e-12
PLUS_PLUS = StateVector.from_label("++")


@dataclass(frozen=True)
class NoisePoint:
    """One cell of the noise surface; ``phi``/``delta_gamma`` are None when infeasible."""

    concurrence: float
    strength: float
    phi: float | None
    delta_gamma: float | None
    feasible: bool

    def as_dict(self) -> dict:
        return asdict(self)


def theta_for_strength(strength: float) -> float:
    """Meter angle in [0, pi/4] with ``cos(2 theta) = strength``."""
    if not 0.0 <= strength <= 1.0:
        raise ValueError(f"strength must lie in [0, 1], got {strength!r}")
    return 0.5 * float(np.arccos(strength))


def phi_for(concurrence: float, strength: float) -> float:
    """Meter phase giving strength ``strength`` from a meter of concurrence ``concurrence``.

    Solves ``cos^2(phi/2) = (1 - C^2) / (1 - S^2)``. Raises
    :class:`InfeasibleError` when ``C < S``; for ``C = S = 1`` returns 0.
    """
    c, s = float(concurrence), float(strength)
    if not (0.0 <= c <= 1.0 and 0.0 <= s <= 1.0):
        raise ValueError(f"concurrence and strength must lie in [0, 1], got C={c!r}, S={s!r}")
    if c < s - FEASIBLE_ATOL:
        raise InfeasibleError(f"concurrence {c} is below the requested strength {s}")
    if s >= 1.0:
        return 0.0
    ratio = min(1.0, max(0.0, (1.0 - c * c) / (1.0 - s * s)))
    return 2.0 * float(np.arccos(np.sqrt(ratio)))


def delta_gamma(strength: float, phi: float) -> float:
    """Purity lost on |++> by a measurement of the given strength and meter phase."""
    c2 = np.cos(phi / 2) ** 2
    return 0.5 * (1.0 - (c2 + strength * (1.0 - c2)) ** 2)


def simulated_delta_gamma(meter: MeterSpec, psi: StateVector = PLUS_PLUS) -> float:
    """Purity drop measured by running the meter circuit on ``psi``."""
    return run_nmem(meter, psi).delta_gamma()


def simulated_strength(meter: MeterSpec) -> float:
    """POVM strength of the meter circuit, via process reconstruction."""
    instr = instrument_from_run(lambda psi: run_nmem(meter, psi))
    return strength_of(povm_of(instr))


def strength_concurrence_check(theta: float, atol: float = 1e-10) -> tuple[float, float]:
    """Concurrence of the ideal meter and the strength of the simulated measurement.

    Raises :class:`InvariantError` if they differ by more than ``atol``.
    """
    meter = MeterSpec(theta)
    c = meter_concurrence(meter)
    s = simulated_strength(meter)
    if abs(c - s) > atol:
        raise InvariantError(f"concurrence {c} != strength {s} at theta={theta}")
    return c, s


def noise_point(concurrence: float, strength: float) -> NoisePoint:
    try:
        phi = phi_for(concurrence, strength)
    except InfeasibleError:
        return NoisePoint(float(concurrence), float(strength), None, None, False)
    return NoisePoint(float(concurrence), float(strength), phi, float(delta_gamma(strength, phi)), True)


def noise_surface(grid_c: int = 101, grid_s: int = 101) -> list[NoisePoint]:
    """Noise surface on a uniform [0, 1]^2 grid, concurrence-major order."""
    if grid_c < 2 or grid_s < 2:
        raise ValueError("grid resolutions must be at least 2")
    cs = np.linspace(0.0, 1.0, grid_c)
    ss = np.linspace(0.0, 1.0, grid_s)
    return [noise_point(c, s) for c in cs for s in ss]


def meter_for(concurrence: float, strength: float) -> MeterSpec:
    """Meter reaching ``strength`` with exactly ``concurrence`` worth of entanglement."""
    return MeterSpec(theta_for_strength(strength), phi_for(concurrence, strength))
