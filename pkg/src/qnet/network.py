"""Four-site driven network: geometry, energy ladder and lab-frame Hamiltonian.

Units: hbar = 1 and omega_0 = 1.  Rates and frequencies are multiples of
omega_0, times are in 1/omega_0.  The hopping scale ``c`` converts to the
dimensionless time ``ct`` used for reporting.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import qops

OMEGA_0 = 1.0
C_DEFAULT = OMEGA_0 / 100


@dataclass(frozen=True)
class SiteSpec:
    label: int
    coord: tuple[int, int]
    omega: float = OMEGA_0

    def __post_init__(self):
        object.__setattr__(self, "coord", tuple(int(v) for v in self.coord))
        if len(self.coord) != 2 or min(self.coord) < 0:
            raise ValueError(f"site {self.label}: coordinates must be two natural numbers")


@dataclass(frozen=True)
class DriveSpec:
    """Periodic on-site drive plus the static energy ladder.

    ``eta_d`` is the dimensionless amplitude, so the on-site modulation has
    strength ``eta_d * omega_d``.  The ladder step must satisfy
    ``delta_omega == r * omega_d``.
    """

    eta_d: float = 0.0
    omega_d: float = OMEGA_0 / 4
    phi_x: float = math.pi
    phi_y: float = math.pi
    r: int = 1
    delta_omega: float = OMEGA_0 / 4
    theta1: int = 1
    theta2: int = 0

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise ValueError("r must be a positive integer")
        if abs(self.delta_omega - self.r * self.omega_d) >= 1e-12:
            raise ValueError(
                f"resonance condition violated: delta_omega={self.delta_omega} "
                f"!= r*omega_d={self.r * self.omega_d}"
            )
        # theta2 = 0 is the ladder used throughout (energy ladder along x)
        if self.theta1 < 0 or self.theta2 < 0:
            raise ValueError("ladder integers must be non-negative")


@dataclass(frozen=True)
class NetworkSpec:
    sites: tuple[SiteSpec, ...]
    drive: DriveSpec = field(default_factory=DriveSpec)
    hopping: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        n = len(self.sites)
        if [s.label for s in self.sites] != list(range(1, n + 1)):
            raise ValueError("site labels must be 1..N in order")
        if len({s.coord for s in self.sites}) != n:
            raise ValueError("site coordinates must be unique")
        hop = np.asarray(self.hopping, dtype=float)
        if hop.shape != (n, n):
            raise ValueError(f"hopping table must be {n}x{n}")
        if np.any(np.diag(hop) != 0) or np.any(hop != hop.T) or np.any(hop < 0):
            raise ValueError("hopping table must be symmetric, non-negative, zero diagonal")
        object.__setattr__(self, "hopping", tuple(tuple(float(v) for v in row) for row in hop))
        if hop.max(initial=0.0) > OMEGA_0 / 10:
            warnings.warn(
                "hopping rate exceeds omega_0/10; the rotating-wave picture of the "
                "drive is not expected to hold",
                stacklevel=3,
            )

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def dim(self) -> int:
        return 2**self.n_sites

    @property
    def hopping_matrix(self) -> np.ndarray:
        return np.array(self.hopping)

    @property
    def c(self) -> float:
        """Reference hopping scale (largest rate), used to express time as ``ct``."""
        c = max(max(row) for row in self.hopping)
        return c if c > 0 else 1.0

    def site(self, j: int) -> SiteSpec:
        if not 1 <= j <= self.n_sites:
            raise KeyError(f"unknown site {j}")
        return self.sites[j - 1]

    def with_drive(self, **changes) -> "NetworkSpec":
        return replace(self, drive=replace(self.drive, **changes))

    def with_drive_strength(self, rescaled: float) -> "NetworkSpec":
        """Set the drive from the rescaled strength ``eta_d * omega_d / c``."""
        return self.with_drive(eta_d=rescaled * self.c / self.drive.omega_d)

    @property
    def drive_strength(self) -> float:
        return self.drive.eta_d * self.drive.omega_d / self.c

    @cached_property
    def _ops(self) -> dict:
        n = self.n_sites
        return {
            "plus": [qops.site_operator(n, j, qops.SIGMA_PLUS) for j in range(1, n + 1)],
            "minus": [qops.site_operator(n, j, qops.SIGMA_MINUS) for j in range(1, n + 1)],
            "number": [qops.site_operator(n, j, qops.NUMBER) for j in range(1, n + 1)],
        }


SQUARE_COORDS = ((0, 0), (1, 0), (1, 1), (0, 1))


def default_network(
    c: float = C_DEFAULT,
    drive_strength: float = 0.0,
    omega_d: float = OMEGA_0 / 4,
    phi_x: float = math.pi,
    phi_y: float = math.pi,
    theta: tuple[int, int] = (1, 0),
    r: int = 1,
) -> NetworkSpec:
    """The square network with all six pairs coupled at rate ``c``.

    ``drive_strength`` is the rescaled value ``eta_d * omega_d / c``.
    """
    sites = tuple(SiteSpec(j + 1, xy, OMEGA_0) for j, xy in enumerate(SQUARE_COORDS))
    hop = np.full((4, 4), c) - c * np.eye(4)
    drive = DriveSpec(
        eta_d=drive_strength * c / omega_d,
        omega_d=omega_d,
        phi_x=phi_x,
        phi_y=phi_y,
        r=r,
        delta_omega=r * omega_d,
        theta1=theta[0],
        theta2=theta[1],
    )
    return NetworkSpec(sites, drive, tuple(map(tuple, hop)))


def ladder_offset(spec: NetworkSpec, j: int) -> float:
    i1, i2 = spec.site(j).coord
    d = spec.drive
    return d.delta_omega * (d.theta1 * i1 + d.theta2 * i2)


def site_phase(spec: NetworkSpec, j: int) -> float:
    i1, i2 = spec.site(j).coord
    return i1 * spec.drive.phi_x + i2 * spec.drive.phi_y


def static_energy(spec: NetworkSpec, j: int) -> float:
    return spec.site(j).omega + ladder_offset(spec, j)


def onsite_coefficient(spec: NetworkSpec, j: int, t: float) -> float:
    d = spec.drive
    return static_energy(spec, j) + d.eta_d * d.omega_d * math.cos(d.omega_d * t + site_phase(spec, j))


def number_operator(spec: NetworkSpec) -> np.ndarray:
    return sum(spec._ops["number"])


def hopping_hamiltonian(spec: NetworkSpec) -> np.ndarray:
    ops = spec._ops
    h = np.zeros((spec.dim, spec.dim), dtype=complex)
    hop = spec.hopping
    for j in range(spec.n_sites):
        for k in range(j + 1, spec.n_sites):
            if hop[j][k]:
                term = ops["plus"][j] @ ops["minus"][k]
                h += hop[j][k] * (term + term.conj().T)
    return h


def static_hamiltonian(spec: NetworkSpec) -> np.ndarray:
    """Time-independent part: bare energies, ladder and hopping."""
    h = hopping_hamiltonian(spec)
    for j in range(1, spec.n_sites + 1):
        h = h + static_energy(spec, j) * spec._ops["number"][j - 1]
    return h


def hamiltonian(spec: NetworkSpec, t: float) -> np.ndarray:
    """Full lab-frame Hamiltonian at time ``t``."""
    h = hopping_hamiltonian(spec)
    for j in range(1, spec.n_sites + 1):
        h = h + onsite_coefficient(spec, j, t) * spec._ops["number"][j - 1]
    return h


def max_frequency(spec: NetworkSpec) -> float:
    """Fastest scale of the drive-plus-carrier problem, sets the default step."""
    d = spec.drive
    return max(s.omega for s in spec.sites) + max(
        ladder_offset(spec, j) for j in range(1, spec.n_sites + 1)
    ) + abs(d.eta_d * d.omega_d)
