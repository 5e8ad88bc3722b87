"""Effective couplings of the driven network in the rotating-wave picture.

Moving to the frame that removes the on-site energies, each hopping term
picks up the factor ``exp(i(Phi_j - Phi_k))``.  The Jacobi-Anger expansion of
the drive phase plus the ladder resonance ``delta_omega = r omega_d`` keeps a
single Bessel series per pair, which :func:`bessel_F` evaluates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import network as nw

MAX_ORDER = 200
MAX_ARG = 50.0
S_MAX = 400
_BIG = 1e250
SMALL_ARG = 1e-5


class TruncationError(ArithmeticError):
    """Bessel series tail bound not reached within the order cap."""


@dataclass(frozen=True)
class EffectiveCoupling:
    pair: tuple[int, int]
    tau: complex
    chi: int
    delta_phi: float


def _miller(n_max: int, x: float) -> np.ndarray:
    """J_0..J_n_max at ``x > 0`` by normalised downward recurrence."""
    top = max(n_max, int(math.ceil(x)))
    start = top + 20 + int(math.sqrt(60.0 * max(top, 1)))
    start += start % 2
    out = np.zeros(n_max + 1)
    j_next, j_cur = 0.0, 1.0
    norm = 0.0
    two_over_x = 2.0 / x
    for k in range(start, 0, -1):
        j_prev = k * two_over_x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > _BIG:
            j_cur /= _BIG
            j_next /= _BIG
            out /= _BIG
            norm /= _BIG
        # j_cur now holds J_{k-1}
        if k - 1 <= n_max:
            out[k - 1] = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
    norm += j_cur  # J_0 term of 1 = J_0 + 2 sum J_2k
    return out / norm


def _small_x(n_max: int, x: float) -> np.ndarray:
    """Two-term power series; the recurrence would overflow on 2/x."""
    h = 0.5 * x
    out = np.empty(n_max + 1)
    lead = 1.0
    for n in range(n_max + 1):
        if n:
            lead *= h / n
        out[n] = lead * (1.0 - h * h / (n + 1))
    return out


def bessel_j_array(n_max: int, x: float) -> np.ndarray:
    """J_0(x)..J_n_max(x) for real ``x``."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if abs(x) > MAX_ARG or n_max > S_MAX + MAX_ORDER:
        raise ValueError(f"argument {x} or order {n_max} outside the validated range")
    if x == 0.0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    out = _small_x(n_max, abs(x)) if abs(x) < SMALL_ARG else _miller(n_max, abs(x))
    if x < 0:
        out[1::2] *= -1.0
    return out


def bessel_j(s: int, x: float) -> float:
    """Bessel function of the first kind, integer order ``s``."""
    s = int(s)
    if abs(s) > MAX_ORDER or abs(x) > MAX_ARG:
        raise ValueError(f"order {s} or argument {x} outside |s|<=200, |x|<=50")
    value = bessel_j_array(abs(s), x)[abs(s)]
    if s < 0 and s % 2:
        value = -value
    return float(value)


def _signed(arr: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Look up J_s for signed orders from a non-negative order table."""
    vals = arr[np.abs(s)]
    return np.where((s < 0) & (s % 2 == 1), -vals, vals)


def _tail_bound(x: float, S: int) -> float:
    """Bound on sum_{|s|>S} |J_s(x)| from |J_s(x)| <= (x/2)^s / s!  (s > x)."""
    x = abs(x)
    if x == 0.0:
        return 0.0
    ratio = x / (2.0 * (S + 2))
    if ratio >= 1.0:
        return math.inf
    log_term = (S + 1) * (math.log(x) - math.log(2.0)) - math.lgamma(S + 2)
    return 2.0 * math.exp(log_term) / (1.0 - ratio)


def bessel_F(chi: int, xi: float, zeta: float, theta: float, tol: float = 1e-14) -> complex:
    """Sum over s of J_s(xi) J_{s+chi}(zeta) exp(i (s + chi/2) theta)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    chi = int(chi)
    S = int(math.ceil(max(abs(xi), abs(zeta)))) + 30
    # |J| <= 1 so the neglected terms are bounded by the xi tail alone
    while _tail_bound(xi, S) >= tol:
        S += 10
        if S > S_MAX:
            raise TruncationError(f"tail bound {tol} not reached by |s| <= {S_MAX}")
    s = np.arange(-S, S + 1)
    j_xi = bessel_j_array(S, xi)
    j_zeta = bessel_j_array(S + abs(chi), zeta)
    terms = _signed(j_xi, s) * _signed(j_zeta, s + chi)
    phase = np.exp(1j * (s + chi / 2.0) * theta)
    return complex(np.sum(terms * phase))


def f_index(r: int, j: Sequence[int], k: Sequence[int], theta: Sequence[int]) -> int:
    """Drive-harmonic order bridging the ladder detuning between sites j and k."""
    if r < 1:
        raise ValueError("r must be a positive integer")
    return int(r * ((theta[0] * j[0] + theta[1] * j[1]) - (theta[0] * k[0] + theta[1] * k[1])))


def pair_order(spec: nw.NetworkSpec, j: int, k: int) -> int:
    d = spec.drive
    return f_index(d.r, spec.site(j).coord, spec.site(k).coord, (d.theta1, d.theta2))


def phase_diff(spec: nw.NetworkSpec, j: int, k: int) -> float:
    return nw.site_phase(spec, j) - nw.site_phase(spec, k)


def effective_coupling(spec: nw.NetworkSpec, j: int, k: int) -> EffectiveCoupling:
    """Coupling multiplying sigma_j^+ sigma_k^- in the rotating-wave Hamiltonian."""
    if j == k:
        raise ValueError("pair needs two distinct sites")
    chi = pair_order(spec, j, k)
    dphi = phase_diff(spec, j, k)
    eta = spec.drive.eta_d
    c_jk = spec.hopping[j - 1][k - 1]
    F = bessel_F(chi, eta, eta, dphi) if c_jk else 0.0
    phase = np.exp(-1j * chi / 2.0 * (nw.site_phase(spec, j) + nw.site_phase(spec, k)))
    return EffectiveCoupling((j, k), complex(c_jk * F * phase), chi, dphi)


def rwa_hamiltonian(spec: nw.NetworkSpec) -> np.ndarray:
    ops = spec._ops
    h = np.zeros((spec.dim, spec.dim), dtype=complex)
    for j in range(1, spec.n_sites + 1):
        for k in range(j + 1, spec.n_sites + 1):
            tau = effective_coupling(spec, j, k).tau
            if tau:
                term = tau * ops["plus"][j - 1] @ ops["minus"][k - 1]
                h += term + term.conj().T
    return h


def frame_phases(spec: nw.NetworkSpec, t: float) -> np.ndarray:
    """Per-site phase Phi_j(t), an antiderivative of the on-site energy."""
    d = spec.drive
    return np.array(
        [
            nw.static_energy(spec, j) * t + d.eta_d * math.sin(d.omega_d * t + nw.site_phase(spec, j))
            for j in range(1, spec.n_sites + 1)
        ]
    )


def to_rotating_frame(spec: nw.NetworkSpec, rho: np.ndarray, t: float) -> np.ndarray:
    """Lab-frame state to the frame rotating with the on-site energies."""
    phases = frame_phases(spec, t)
    bits = (np.arange(spec.dim)[:, None] >> (spec.n_sites - 1 - np.arange(spec.n_sites))) & 1
    diag = np.exp(1j * bits @ phases)
    return diag[:, None] * rho * diag.conj()[None, :]


def suppression_map(
    pair: tuple[int, int],
    eta_grid: Sequence[float],
    dphi_grid: Sequence[float],
    spec: nw.NetworkSpec | None = None,
) -> np.ndarray:
    """|F| for the pair's order at r = 1; rows follow eta, columns follow dphi."""
    if len(eta_grid) == 0 or len(dphi_grid) == 0:
        raise ValueError("grids must be nonempty")
    spec = spec or nw.default_network()
    d = spec.drive
    chi = f_index(1, spec.site(pair[0]).coord, spec.site(pair[1]).coord, (d.theta1, d.theta2))
    out = np.empty((len(eta_grid), len(dphi_grid)))
    for a, eta in enumerate(eta_grid):
        for b, dphi in enumerate(dphi_grid):
            out[a, b] = abs(bessel_F(chi, eta, eta, dphi))
    return out
