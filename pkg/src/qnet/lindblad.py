"""Master-equation propagation with source, drain and dephasing.

The dissipators follow the printed operator forms literally: each is an
anticommutator plus a *doubled* sandwich term, so a pumped site fills at rate
``2 * gamma_s`` and the drain empties at ``2 * gamma_d``.

Vectorisation is column-major, ``vec(A rho B) = (B.T kron A) vec(rho)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.integrate
import scipy.sparse

from . import network as nw
from . import qops
from ._kernels import rk4_propagate

TRACE_TOL = 1e-8
HERM_TOL = 1e-10
POSITIVITY_TOL = 1e-8
_POST_CHUNK = 4096


class IntegrationError(RuntimeError):
    """The propagator failed (adaptive step underflow and similar)."""


class PositivityError(IntegrationError):
    """A recorded state has an eigenvalue below -1e-8."""


@dataclass(frozen=True)
class DissipatorSpec:
    gamma_s: float = 0.0
    gamma_d: float = 0.0
    gamma_deph: tuple[float, ...] = ()
    source_site: int = 1
    drain_site: int = 3

    def __post_init__(self):
        object.__setattr__(self, "gamma_deph", tuple(float(g) for g in self.gamma_deph))
        if self.gamma_s < 0 or self.gamma_d < 0 or any(g < 0 for g in self.gamma_deph):
            raise ValueError("rates must be non-negative")
        if self.source_site == self.drain_site:
            raise ValueError("source and drain must be different sites")

    def dephasing(self, n_sites: int) -> tuple[float, ...]:
        if not self.gamma_deph:
            return (0.0,) * n_sites
        if len(self.gamma_deph) != n_sites:
            raise ValueError(f"expected {n_sites} dephasing rates, got {len(self.gamma_deph)}")
        return self.gamma_deph


def default_dissipators(c: float = nw.C_DEFAULT, gamma: float = 0.0, drain: float | None = None) -> DissipatorSpec:
    """Uniform dephasing ``gamma`` and drain ``c/100`` (or ``drain``) with source twice the drain."""
    gamma_d = c / 100 if drain is None else drain
    return DissipatorSpec(gamma_s=2 * gamma_d, gamma_d=gamma_d, gamma_deph=(gamma,) * 4)


@dataclass(frozen=True)
class IntegratorSpec:
    """Integrator settings.

    ``dt`` is the largest allowed step in 1/omega_0; the actual step divides
    the record interval evenly.  ``None`` selects ``2 pi / omega_max / 160``.
    The record interval is ``record_every`` steps when given, otherwise the
    spacing closest to ``record_interval`` (in ct units).
    """

    method: str = "rk4"
    dt: float | None = None
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    record_every: int | None = None
    record_interval: float = 0.002
    steps_per_period: int = 160

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown integrator {self.method!r}")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.record_every is not None and self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.record_interval <= 0:
            raise ValueError("record_interval must be positive")


@dataclass
class Trajectory:
    """Recorded observables on the record grid.

    ``t`` is in 1/omega_0 and ``ct`` in units of the network's hopping scale.
    """

    t: np.ndarray
    ct: np.ndarray
    populations: np.ndarray
    pair: tuple[int, int]
    pair_states: np.ndarray
    trace_drift: np.ndarray
    min_eig: np.ndarray
    herm_residual: np.ndarray
    dt: float
    states: np.ndarray | None = None
    observables: dict[str, np.ndarray] = field(default_factory=dict)

    def population(self, site: int) -> np.ndarray:
        return self.populations[:, site - 1]

    @property
    def diagnostics(self) -> dict[str, float]:
        return {
            "max_trace_drift": float(np.max(np.abs(self.trace_drift))),
            "min_eig": float(np.min(self.min_eig)),
            "max_herm_residual": float(np.max(self.herm_residual)),
        }


# ---------------------------------------------------------------------------
# superoperators


def _left(a: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(a.shape[0]), a)


def _right(b: np.ndarray) -> np.ndarray:
    return np.kron(b.T, np.eye(b.shape[0]))


def _dissipator_terms(net: nw.NetworkSpec, dis: DissipatorSpec):
    """(rate, anticommutator operator, sandwich left, sandwich right) tuples."""
    ops = net._ops
    for site in (dis.source_site, dis.drain_site):
        if not 1 <= site <= net.n_sites:
            raise ValueError(f"dissipator site {site} outside the {net.n_sites}-site network")
    s, d = dis.source_site - 1, dis.drain_site - 1
    terms = [
        (dis.gamma_s, ops["minus"][s] @ ops["plus"][s], ops["plus"][s], ops["minus"][s]),
        (dis.gamma_d, ops["plus"][d] @ ops["minus"][d], ops["minus"][d], ops["plus"][d]),
    ]
    for k, g in enumerate(dis.dephasing(net.n_sites)):
        n_k = ops["number"][k]
        terms.append((g, n_k, n_k, n_k))
    return [t for t in terms if t[0]]


def dissipator(rho: np.ndarray, net: nw.NetworkSpec, dis: DissipatorSpec) -> np.ndarray:
    out = np.zeros_like(rho, dtype=complex)
    for rate, anti, a, b in _dissipator_terms(net, dis):
        out += rate * (-(anti @ rho + rho @ anti) + 2.0 * a @ rho @ b)
    return out


def master_rhs(rho: np.ndarray, t: float, net: nw.NetworkSpec, dis: DissipatorSpec) -> np.ndarray:
    """Time derivative of ``rho`` under the full lab-frame master equation."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (net.dim, net.dim):
        raise ValueError(f"state shape {rho.shape} does not match {net.dim}-dim network")
    h = nw.hamiltonian(net, t)
    return -1j * (h @ rho - rho @ h) + dissipator(rho, net, dis)


def _static_liouvillian(net: nw.NetworkSpec, dis: DissipatorSpec) -> np.ndarray:
    h = nw.static_hamiltonian(net)
    L = -1j * (_left(h) - _right(h))
    for rate, anti, a, b in _dissipator_terms(net, dis):
        L += rate * (-_left(anti) - _right(anti) + 2.0 * np.kron(b.T, a))
    return L


def _drive_weights(net: nw.NetworkSpec) -> np.ndarray:
    """(n_sites, dim**2) array of n_j(a) - n_j(b) for vec index a + b*dim."""
    dim, n = net.dim, net.n_sites
    bits = (np.arange(dim)[:, None] >> (n - 1 - np.arange(n))) & 1  # (dim, n)
    diff = bits[:, None, :] - bits[None, :, :]  # [a, b, j]
    return diff.transpose(2, 1, 0).reshape(n, dim * dim).astype(float)


def _drive_amplitudes(net: nw.NetworkSpec) -> tuple[np.ndarray, np.ndarray]:
    d = net.drive
    amps = np.full(net.n_sites, d.eta_d * d.omega_d)
    phases = np.array([nw.site_phase(net, j) for j in range(1, net.n_sites + 1)])
    return amps, phases


def liouvillian_matrix(net: nw.NetworkSpec, dis: DissipatorSpec, t: float) -> np.ndarray:
    """Superoperator L(t) with vec(master_rhs(rho, t)) = L vec(rho)."""
    L = _static_liouvillian(net, dis)
    amps, phases = _drive_amplitudes(net)
    g = amps * np.cos(net.drive.omega_d * t + phases)
    L[np.diag_indices_from(L)] += -1j * (g @ _drive_weights(net))
    return L


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


# ---------------------------------------------------------------------------
# time grid


def time_grid(t_end: float, net: nw.NetworkSpec, integ: IntegratorSpec) -> tuple[int, int, float]:
    """Resolve ``(n_records, substeps_per_record, dt)`` covering ``[0, t_end]`` exactly."""
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    dt_max = integ.dt
    if dt_max is None:
        dt_max = 2 * math.pi / nw.max_frequency(net) / integ.steps_per_period
    if integ.record_every is not None:
        m = integ.record_every
        n_rec = max(1, math.ceil(t_end / (m * dt_max) - 1e-9))
    else:
        n_rec = max(1, round(t_end * net.c / integ.record_interval))
        m = max(1, math.ceil(t_end / n_rec / dt_max - 1e-9))
    return n_rec, m, t_end / (n_rec * m)


# ---------------------------------------------------------------------------
# propagation


def _sector_indices(rho0: np.ndarray, net: nw.NetworkSpec) -> np.ndarray:
    """vec indices of every excitation-difference sector present in ``rho0``.

    The Hamiltonian conserves excitation number and each jump operator moves
    ket and bra together, so N(ket) - N(bra) is conserved elementwise.
    """
    dim = net.dim
    N = qops.excitation_numbers(net.n_sites)
    diff = N[:, None] - N[None, :]  # [a, b]
    present = set(np.unique(diff[np.abs(rho0) > 0]).tolist()) or {0}
    present |= {-k for k in present}
    mask = np.isin(diff, sorted(present))
    return np.flatnonzero(mask.T.reshape(-1))  # column-major order of vec


class _Reduced:
    """Liouvillian restricted to the sectors a given initial state occupies."""

    def __init__(self, net: nw.NetworkSpec, dis: DissipatorSpec, rho0: np.ndarray):
        dim = net.dim
        self.dim = dim
        self.idx = _sector_indices(rho0, net)
        L = _static_liouvillian(net, dis)
        sub = L[np.ix_(self.idx, self.idx)]
        self.csr = scipy.sparse.csr_matrix(sub)
        self.dense = sub
        self.weights = np.ascontiguousarray(_drive_weights(net)[:, self.idx])
        self.amps, self.phases = _drive_amplitudes(net)
        self.omega_d = net.drive.omega_d
        a, b = self.idx % dim, self.idx // dim
        pos = {v: i for i, v in enumerate(self.idx)}
        self.perm = np.array([pos[bb + aa * dim] for aa, bb in zip(a, b)], dtype=np.int64)
        self.v0 = vec(rho0)[self.idx].astype(complex)

    def rhs(self, t: float, v: np.ndarray) -> np.ndarray:
        g = self.amps * np.cos(self.omega_d * t + self.phases)
        return self.dense @ v - 1j * (g @ self.weights) * v

    def expand(self, snaps: np.ndarray) -> np.ndarray:
        full = np.zeros((snaps.shape[0], self.dim * self.dim), dtype=complex)
        full[:, self.idx] = snaps
        return full.reshape(-1, self.dim, self.dim).transpose(0, 2, 1)


def evolve(
    rho0: np.ndarray,
    net: nw.NetworkSpec,
    dis: DissipatorSpec,
    integ: IntegratorSpec | None = None,
    t_end: float = 1.0,
    observers: Mapping[str, Callable[[np.ndarray], float]] | None = None,
    pair: tuple[int, int] = (2, 4),
    keep_states: bool = False,
    strict: bool = True,
) -> Trajectory:
    """Propagate ``rho0`` over ``[0, t_end]`` (``t_end`` in 1/omega_0).

    With ``strict`` a recorded eigenvalue below -1e-8 raises
    :class:`PositivityError`; otherwise it is only reported in the
    trajectory diagnostics.
    """
    integ = integ or IntegratorSpec()
    rho0 = qops.validate_density(rho0)
    if rho0.shape != (net.dim, net.dim):
        raise ValueError(f"state shape {rho0.shape} does not match {net.dim}-dim network")
    n_rec, m, dt = time_grid(t_end, net, integ)
    red = _Reduced(net, dis, rho0)
    times = np.arange(n_rec + 1) * (m * dt)

    if integ.method == "rk4":
        snaps = rk4_propagate(
            red.csr.indptr.astype(np.int64),
            red.csr.indices.astype(np.int64),
            red.csr.data.astype(np.complex128),
            red.weights,
            red.amps,
            red.omega_d,
            red.phases,
            red.perm,
            red.v0,
            dt,
            n_rec,
            m,
        )
    else:
        sol = scipy.integrate.solve_ivp(
            red.rhs,
            (0.0, times[-1]),
            red.v0,
            method="RK45",
            t_eval=times,
            rtol=integ.rel_tol,
            atol=integ.abs_tol,
        )
        if sol.status != 0:
            raise IntegrationError(f"adaptive integration failed: {sol.message}")
        snaps = sol.y.T
        dt = float(np.mean(np.diff(sol.t))) if len(sol.t) > 1 else times[-1]

    if not np.all(np.isfinite(snaps)):
        raise IntegrationError(f"state diverged with dt={dt:.3g}; reduce the step")
    n_out = snaps.shape[0]
    herm = np.empty(n_out)
    trace = np.empty(n_out)
    min_eig = np.empty(n_out)
    populations = np.empty((n_out, net.n_sites))
    pair_states = np.empty((n_out, 2 ** len(pair), 2 ** len(pair)), dtype=complex)
    kept = [] if keep_states else None
    obs = {name: np.empty(n_out) for name in (observers or {})}
    bits = (np.arange(net.dim)[:, None] >> (net.n_sites - 1 - np.arange(net.n_sites))) & 1
    # full 16x16 states are rebuilt a block at a time to bound memory on long runs
    for lo in range(0, n_out, _POST_CHUNK):
        sl = slice(lo, lo + _POST_CHUNK)
        rhos = red.expand(snaps[sl])
        rhos_h = 0.5 * (rhos + rhos.conj().transpose(0, 2, 1))
        herm[sl] = np.max(np.abs(rhos - rhos_h), axis=(1, 2)) * 2.0
        trace[sl] = np.trace(rhos, axis1=1, axis2=2).real
        min_eig[sl] = np.linalg.eigvalsh(rhos_h)[:, 0]
        populations[sl] = np.einsum("tii->ti", rhos_h).real @ bits
        pair_states[sl] = qops.partial_trace(rhos_h, pair)
        for name, fn in (observers or {}).items():
            obs[name][sl] = [fn(r) for r in rhos_h]
        if kept is not None:
            kept.append(rhos_h)
    traj = Trajectory(
        t=times,
        ct=times * net.c,
        populations=populations,
        pair=tuple(pair),
        pair_states=pair_states,
        trace_drift=trace - 1.0,
        min_eig=min_eig,
        herm_residual=herm,
        dt=dt,
        states=np.concatenate(kept) if kept is not None else None,
        observables=obs,
    )
    worst = traj.diagnostics["min_eig"]
    if worst < -POSITIVITY_TOL:
        msg = f"state lost positivity: min eigenvalue {worst:.3g}"
        if strict:
            raise PositivityError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return traj
