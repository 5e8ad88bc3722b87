"""Transport figures of merit."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qops
from .lindblad import Trajectory


@dataclass(frozen=True)
class EfficiencyRecord:
    p3_integral: float
    eta_eff: float
    horizon: float
    sweep_coords: dict = field(default_factory=dict)


def population(rho: np.ndarray, site: int) -> float:
    """Excitation probability of ``site`` (1-based)."""
    rho = np.asarray(rho)
    n = qops.n_qubits(rho.shape[0])
    proj = qops.site_operator(n, site, qops.NUMBER)
    return float(np.real(np.trace(rho @ proj)))


def integrated_population(traj: Trajectory, site: int = 3) -> float:
    """Trapezoidal integral of the site population over the record grid, in 1/omega_0."""
    if len(traj.t) < 2:
        raise ValueError("need at least two recorded samples")
    return float(np.trapezoid(traj.population(site), traj.t))


def efficiency(p3: float, gamma_d: float) -> float:
    """Transport efficiency from the integrated drain-site population."""
    if gamma_d <= 0:
        raise ValueError("drain rate must be positive")
    return 2.0 * gamma_d * p3


def efficiency_record(traj: Trajectory, gamma_d: float, site: int = 3, **coords) -> EfficiencyRecord:
    p3 = integrated_population(traj, site)
    return EfficiencyRecord(p3, efficiency(p3, gamma_d), float(traj.ct[-1]), dict(coords))
