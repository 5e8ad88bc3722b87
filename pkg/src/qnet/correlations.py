"""Two-qubit correlation measures: entanglement of formation and discord.

All entropies are in bits, so a Bell pair has EoF = discord = 1.  The
functions accept a single 4x4 state or a stack of shape ``(n, 4, 4)``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterator

import numpy as np

from . import qops
from .lindblad import Trajectory

THETA_POINTS = 64
PHI_POINTS = 32
REFINE_TOL = 1e-7
_CHUNK = 128

_SY_SY = np.kron(qops.SIGMA_Y, qops.SIGMA_Y)
_PAULIS = np.stack([qops.IDENTITY_2, qops.SIGMA_X, qops.SIGMA_Y, qops.SIGMA_Z])


def _as_stack(rho) -> tuple[np.ndarray, bool]:
    rho = np.asarray(rho, dtype=complex)
    single = rho.ndim == 2
    rho = rho[None] if single else rho
    if rho.shape[-2:] != (4, 4):
        raise ValueError("expected two-qubit density matrices (4x4)")
    if np.max(np.abs(rho - rho.conj().transpose(0, 2, 1)), initial=0.0) > qops.HERMITIAN_TOL:
        raise qops.InvalidStateError("state is not Hermitian")
    if np.max(np.abs(np.trace(rho, axis1=1, axis2=2) - 1.0), initial=0.0) > 1e-8:
        raise qops.InvalidStateError("state trace differs from 1")
    return 0.5 * (rho + rho.conj().transpose(0, 2, 1)), single


def _unstack(values: np.ndarray, single: bool):
    return float(values[0]) if single else values


def _xlog2x(p: np.ndarray) -> np.ndarray:
    safe = np.where(p > qops.EIG_FLOOR, p, 1.0)
    return np.where(p > qops.EIG_FLOOR, p * np.log2(safe), 0.0)


def binary_entropy(p):
    p = np.asarray(p, dtype=float)
    return -_xlog2x(p) - _xlog2x(1.0 - p)


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w[..., None, :]) @ v.conj().transpose(0, 2, 1)


def concurrence(rho):
    """Wootters concurrence.

    The spin-flip spectrum is taken from the Hermitian form
    ``sqrt(rho) rho_tilde sqrt(rho)``, whose eigenvalues are the squares of
    the Wootters lambdas.
    """
    rho, single = _as_stack(rho)
    tilde = _SY_SY @ rho.conj() @ _SY_SY
    s = _psd_sqrt(rho)
    m = s @ tilde @ s
    m = 0.5 * (m + m.conj().transpose(0, 2, 1))
    lam = np.sqrt(np.clip(np.linalg.eigvalsh(m), 0.0, None))[:, ::-1]
    c = np.maximum(0.0, lam[:, 0] - lam[:, 1] - lam[:, 2] - lam[:, 3])
    return _unstack(np.minimum(c, 1.0), single)


def eof_from_concurrence(c):
    c = np.clip(np.asarray(c, dtype=float), 0.0, 1.0)
    return binary_entropy(0.5 * (1.0 + np.sqrt(1.0 - c**2)))


def eof(rho):
    """Entanglement of formation in bits."""
    c = concurrence(rho)
    return float(eof_from_concurrence(c)) if np.isscalar(c) else eof_from_concurrence(c)


def _entropies(rho: np.ndarray) -> np.ndarray:
    return -np.sum(_xlog2x(np.linalg.eigvalsh(rho)), axis=-1)


def _marginals(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = rho.reshape(-1, 2, 2, 2, 2)
    return np.einsum("nikjk->nij", t), np.einsum("nkikj->nij", t)


def mutual_information(rho):
    rho, single = _as_stack(rho)
    a, b = _marginals(rho)
    return _unstack(_entropies(a) + _entropies(b) - _entropies(rho), single)


def _directions(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def _conditional_entropy(blocks: np.ndarray, n: np.ndarray) -> np.ndarray:
    """sum_pm p_pm S(rho_other | pm) for each state and measurement direction.

    ``blocks[b, k]`` is tr_measured[(sigma_k x 1) rho] as a 2x2 matrix on the
    unmeasured qubit; ``n`` has shape ``(b, K, 3)``.
    """
    t = np.einsum("bkc,bcij->bkij", n, blocks[:, 1:])
    base = blocks[:, 0][:, None]
    total = np.zeros(t.shape[:2])
    for sign in (1.0, -1.0):
        m = 0.5 * (base + sign * t)
        a, d = m[..., 0, 0].real, m[..., 1, 1].real
        off = np.abs(m[..., 0, 1])
        tr = a + d
        disc = np.sqrt((a - d) ** 2 + 4.0 * off**2)
        l1, l2 = 0.5 * (tr + disc), 0.5 * (tr - disc)
        # p S(m/p) = -sum l log l + p log p
        total += -_xlog2x(l1) - _xlog2x(l2) + _xlog2x(tr)
    return total


def _pauli_blocks(rho: np.ndarray, measured: int) -> np.ndarray:
    t = rho.reshape(-1, 2, 2, 2, 2)  # [n, m_ket, o_ket, m_bra, o_bra] when measured == 0
    if measured == 1:
        t = t.transpose(0, 2, 1, 4, 3)
    # tr_M[(P x 1) rho] = sum_{ij} P[j, i] rho[i o, j o']
    return np.einsum("kji,niajb->nkab", _PAULIS, t)


@dataclass
class DiscordResult:
    value: np.ndarray
    raw: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    converged: np.ndarray


def discord_details(rho, measured: int = 0, refine_rounds: int = 12) -> DiscordResult:
    """Discord with projective measurements on qubit ``measured`` (0 or 1).

    A 64 x 32 grid over the measurement hemisphere picks a starting
    direction; a shrinking 9 x 9 local grid then refines it until the
    objective changes by less than 1e-7 between rounds.
    """
    if measured not in (0, 1):
        raise ValueError("measured must be 0 or 1")
    rho, _ = _as_stack(rho)
    out = {k: [] for k in ("value", "raw", "theta", "phi", "converged")}
    theta_grid = np.linspace(0.0, np.pi / 2, THETA_POINTS)
    phi_grid = np.linspace(0.0, 2 * np.pi, PHI_POINTS, endpoint=False)
    tg, pg = np.meshgrid(theta_grid, phi_grid, indexing="ij")
    tg, pg = tg.reshape(-1), pg.reshape(-1)
    offsets = np.linspace(-1.0, 1.0, 9)
    off_t, off_p = (o.reshape(-1) for o in np.meshgrid(offsets, offsets, indexing="ij"))
    for start in range(0, rho.shape[0], _CHUNK):
        chunk = rho[start : start + _CHUNK]
        nb = chunk.shape[0]
        a, b = _marginals(chunk)
        s_meas = _entropies(a if measured == 0 else b)
        base = s_meas - _entropies(chunk)
        blocks = _pauli_blocks(chunk, measured)
        n = np.broadcast_to(_directions(tg, pg), (nb, tg.size, 3))
        vals = _conditional_entropy(blocks, n)
        best = np.argmin(vals, axis=1)
        bt, bp = tg[best], pg[best]
        bv = vals[np.arange(nb), best]
        span_t, span_p = theta_grid[1] - theta_grid[0], phi_grid[1] - phi_grid[0]
        gain = np.full(nb, np.inf)
        for _ in range(refine_rounds):
            ct = bt[:, None] + span_t * off_t[None]
            cp = bp[:, None] + span_p * off_p[None]
            vals = _conditional_entropy(blocks, _directions(ct, cp))
            k = np.argmin(vals, axis=1)
            nv = vals[np.arange(nb), k]
            improved = nv < bv
            gain = np.where(improved, bv - nv, 0.0)
            bt = np.where(improved, ct[np.arange(nb), k], bt)
            bp = np.where(improved, cp[np.arange(nb), k], bp)
            bv = np.minimum(nv, bv)
            span_t /= 4.0
            span_p /= 4.0
        raw = base + bv
        out["raw"].append(raw)
        out["value"].append(np.maximum(raw, 0.0))
        out["theta"].append(bt)
        out["phi"].append(bp)
        out["converged"].append(gain < REFINE_TOL)
    return DiscordResult(**{k: np.concatenate(v) for k, v in out.items()})


def discord(rho, measured: int = 0):
    """Quantum discord in bits, measuring qubit ``measured`` of the pair."""
    single = np.asarray(rho).ndim == 2
    return _unstack(discord_details(rho, measured).value, single)


@dataclass(frozen=True)
class CorrelationSample:
    ct: float
    eof: float
    discord_2: float
    discord_4: float
    mutual_info: float


@dataclass
class CorrelationSeries:
    """Correlation measures of the recorded pair state along a trajectory.

    ``discord_2`` measures the first site of the pair and ``discord_4`` the
    second (sites 2 and 4 for the control pair).
    """

    ct: np.ndarray
    eof: np.ndarray
    discord_2: np.ndarray
    discord_4: np.ndarray
    mutual_info: np.ndarray

    def __len__(self) -> int:
        return len(self.ct)

    def __getitem__(self, i: int) -> CorrelationSample:
        return CorrelationSample(*(float(getattr(self, f.name)[i]) for f in fields(self)))

    def __iter__(self) -> Iterator[CorrelationSample]:
        return (self[i] for i in range(len(self)))


def correlation_series(traj: Trajectory, every: int = 1) -> CorrelationSeries:
    if traj.pair_states is None or len(traj.pair_states) == 0:
        raise ValueError("trajectory carries no reduced pair states")
    rho = traj.pair_states[::every]
    return CorrelationSeries(
        ct=traj.ct[::every].copy(),
        eof=eof(rho),
        discord_2=discord(rho, 0),
        discord_4=discord(rho, 1),
        mutual_info=mutual_information(rho),
    )


def time_average(series: CorrelationSeries, horizon: float | None = None) -> CorrelationSample:
    """Trapezoidal time mean of every measure over ``[ct_0, horizon]``."""
    if len(series) == 0:
        raise ValueError("empty series")
    ct = np.asarray(series.ct)
    horizon = ct[-1] if horizon is None else horizon
    if horizon > ct[-1] + 1e-9:
        raise ValueError(f"series ends at ct={ct[-1]}, before horizon {horizon}")
    sel = ct <= horizon + 1e-9
    names = ("eof", "discord_2", "discord_4", "mutual_info")
    x = ct[sel]
    if len(x) < 2:
        return CorrelationSample(float(horizon), *(float(getattr(series, n)[0]) for n in names))
    avg = [np.trapezoid(np.asarray(getattr(series, n))[sel], x) / (x[-1] - x[0]) for n in names]
    return CorrelationSample(float(horizon), *map(float, avg))
