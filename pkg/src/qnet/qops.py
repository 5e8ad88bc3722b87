"""Dense operator algebra for small qubit registers.

Basis convention: |g> is index 0 and |e> is index 1.  For an ``n``-site
register the basis index is ``sum_j bit_j * 2**(n - j)`` with site 1 the most
significant factor.  Entropies are in bits.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.linalg

SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |e><g|
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
NUMBER = SIGMA_PLUS @ SIGMA_MINUS  # |e><e|
IDENTITY_2 = np.eye(2, dtype=complex)

HERMITIAN_TOL = 1e-10
EIG_FLOOR = 1e-12
NEGATIVE_EIG_TOL = 1e-8


class InvalidStateError(ValueError):
    """Raised when a matrix is not a valid density matrix."""


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product with ``a`` as the more significant factor."""
    return np.kron(np.asarray(a), np.asarray(b))


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


def site_operator(n_sites: int, site: int, local: np.ndarray) -> np.ndarray:
    """Embed a 2x2 operator at ``site`` (1-based) of an ``n_sites`` register."""
    if not 1 <= site <= n_sites:
        raise ValueError(f"site {site} outside 1..{n_sites}")
    local = np.asarray(local, dtype=complex)
    if local.shape != (2, 2):
        raise ValueError("local operator must be 2x2")
    left = np.eye(2 ** (site - 1), dtype=complex)
    right = np.eye(2 ** (n_sites - site), dtype=complex)
    return np.kron(np.kron(left, local), right)


def basis_state(bits: str | Sequence[int]) -> np.ndarray:
    """Ket for a bit string such as ``"gegg"`` or ``[0, 1, 0, 0]``."""
    if isinstance(bits, str):
        lookup = {"g": 0, "e": 1, "0": 0, "1": 1}
        try:
            bits = [lookup[ch] for ch in bits]
        except KeyError as exc:
            raise ValueError(f"bad basis label {exc.args[0]!r}") from None
    index = 0
    for b in bits:
        index = 2 * index + int(b)
    ket = np.zeros(2 ** len(bits), dtype=complex)
    ket[index] = 1.0
    return ket


def ket2dm(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex).reshape(-1)
    return np.outer(ket, ket.conj())


def excitation_numbers(n_sites: int) -> np.ndarray:
    """Number of excited sites for every basis index."""
    idx = np.arange(2**n_sites)
    return np.array([bin(i).count("1") for i in idx])


def n_qubits(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def partial_trace(rho: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduced state on the 1-based sites in ``keep``, in the order listed.

    ``rho`` may carry leading batch axes, e.g. shape ``(T, 16, 16)``.
    """
    rho = np.asarray(rho)
    dim = rho.shape[-1]
    n = n_qubits(dim)
    keep = [int(k) for k in keep]
    if not keep or len(set(keep)) != len(keep) or any(not 1 <= k <= n for k in keep):
        raise ValueError(f"invalid site list {keep} for {n} sites")
    batch = rho.shape[:-2]
    nb = len(batch)
    t = rho.reshape(batch + (2,) * (2 * n))
    traced = [s for s in range(1, n + 1) if s not in keep]
    # ket axis of site s is nb + s - 1, bra axis is nb + n + s - 1
    letters = "abcdefghijklmnopqrstuvwxyz"
    bl = "ABCDEFGHIJ"[:nb]
    ket = [letters[s - 1] for s in range(1, n + 1)]
    bra = [letters[n + s - 1] for s in range(1, n + 1)]
    for s in traced:
        bra[s - 1] = ket[s - 1]
    out = bl + "".join(ket[k - 1] for k in keep) + "".join(bra[k - 1] for k in keep)
    red = np.einsum(f"{bl}{''.join(ket)}{''.join(bra)}->{out}", t)
    d = 2 ** len(keep)
    return red.reshape(batch + (d, d))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) < tol)


def hermitian_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns)."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    if not is_hermitian(m):
        raise ValueError("matrix is not Hermitian within 1e-10")
    w, v = np.linalg.eigh(m)
    return w, v


def expm(m: np.ndarray) -> np.ndarray:
    """Matrix exponential (Pade scaling-and-squaring)."""
    return scipy.linalg.expm(np.asarray(m, dtype=complex))


def validate_density(rho: np.ndarray, tol_trace: float = 1e-8) -> np.ndarray:
    """Return ``rho`` as a complex array or raise :class:`InvalidStateError`."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError("density matrix must be square")
    n_qubits(rho.shape[0])
    if not is_hermitian(rho):
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol_trace:
        raise InvalidStateError(f"trace {np.trace(rho).real:.3g} differs from 1")
    if np.linalg.eigvalsh(rho)[0] < -NEGATIVE_EIG_TOL:
        raise InvalidStateError("density matrix has a negative eigenvalue")
    return rho


def entropy_of_spectrum(eigs: np.ndarray) -> np.ndarray:
    """-sum p log2 p along the last axis, with 0 log 0 = 0."""
    p = np.where(eigs > EIG_FLOOR, eigs, 1.0)
    return -np.sum(np.where(eigs > EIG_FLOOR, eigs * np.log2(p), 0.0), axis=-1)


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy in bits."""
    rho = np.asarray(rho, dtype=complex)
    eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if eigs[0] < -NEGATIVE_EIG_TOL:
        raise InvalidStateError(f"negative eigenvalue {eigs[0]:.3g}")
    return float(entropy_of_spectrum(eigs))
