"""Dense complex linear algebra for finite-dimensional quantum states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_TOL = 1e-10
UNIT_NORM_TOL = 1e-10


class Eigensystem(NamedTuple):
    """Eigenvalues in ascending order with orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


class PsdCheck(NamedTuple):
    is_psd: bool
    min_eigenvalue: float


@dataclass(frozen=True)
class SchmidtDecomposition:
    """Canonical bipartite form |v> = sum_k c_k |e_k> (x) |f_k>.

    ``coefficients`` are nonnegative and descending with unit square sum.
    ``basis_left`` and ``basis_right`` hold complete orthonormal bases as
    columns; columns beyond the number of coefficients pair with weight zero.
    """

    coefficients: np.ndarray
    basis_left: np.ndarray
    basis_right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        d1 = self.basis_left.shape[0]
        d2 = self.basis_right.shape[0]
        v = np.zeros(d1 * d2, dtype=complex)
        for k, c in enumerate(self.coefficients):
            v += c * np.kron(self.basis_left[:, k], self.basis_right[:, k])
        return v


def seeded_rng(seed, *stream: int) -> np.random.Generator:
    """Counter-based generator; extra stream indices derive independent substreams.

    ``seed`` may be an int or a tuple of ints, so per-trial streams can be
    addressed as (master_seed, trial_index).
    """
    if isinstance(seed, (tuple, list)):
        entropy = tuple(int(s) for s in seed)
    else:
        entropy = (int(seed),)
    entropy = entropy + tuple(int(s) for s in stream)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with index convention (i_a, i_b) -> i_a * dim_b + i_b."""
    return np.kron(np.asarray(a), np.asarray(b))


def partial_trace(m: np.ndarray, keep: int, dims: tuple[int, int]) -> np.ndarray:
    """Trace out one tensor factor of a square matrix on a bipartite space.

    ``keep=0`` keeps the first factor, ``keep=1`` the second.
    """
    d1, d2 = int(dims[0]), int(dims[1])
    m = np.asarray(m)
    if m.shape != (d1 * d2, d1 * d2):
        raise ValueError(f"matrix shape {m.shape} does not match dims {d1}x{d2}")
    r = m.reshape(d1, d2, d1, d2)
    if keep == 0:
        return np.einsum("ikjk->ij", r)
    if keep == 1:
        return np.einsum("kikj->ij", r)
    raise ValueError("keep must be 0 or 1")


def hermitian_eig(m: np.ndarray, atol: float = HERMITICITY_TOL) -> Eigensystem:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    The input is symmetrized as (m + m^dagger)/2 before decomposition;
    deviations from Hermiticity beyond ``atol`` raise ValueError.
    """
    m = np.asarray(m, dtype=complex)
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > atol:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    w, v = np.linalg.eigh((m + m.conj().T) / 2.0)
    return Eigensystem(w, v)


def is_psd(m: np.ndarray, tol: float = 1e-10) -> PsdCheck:
    """Positive semidefiniteness check with the minimum eigenvalue reported."""
    m = np.asarray(m, dtype=complex)
    w = np.linalg.eigvalsh((m + m.conj().T) / 2.0)
    lam_min = float(w[0])
    return PsdCheck(lam_min >= -tol, lam_min)


def schmidt_decompose(v: np.ndarray, dims: tuple[int, int]) -> SchmidtDecomposition:
    """Schmidt decomposition of a unit vector on a bipartite space."""
    d1, d2 = int(dims[0]), int(dims[1])
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.shape[0] != d1 * d2:
        raise ValueError(f"vector length {v.shape[0]} does not match dims {d1}x{d2}")
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"vector is not normalized (norm {nrm!r})")
    u, s, vh = np.linalg.svd(v.reshape(d1, d2), full_matrices=True)
    right = vh.T.copy()  # columns f_k with entries f_k[j] = vh[k, j]
    # fix global phases: largest-magnitude component of each e_k real positive
    for k in range(d1):
        j = int(np.argmax(np.abs(u[:, k])))
        a = u[j, k]
        if abs(a) > 0:
            phase = a / abs(a)
            u[:, k] /= phase
            if k < d2:
                right[:, k] *= phase
    for k in range(d1, d2):
        j = int(np.argmax(np.abs(right[:, k])))
        a = right[j, k]
        if abs(a) > 0:
            right[:, k] /= a / abs(a)
    coeffs = np.zeros(min(d1, d2))
    coeffs[: s.shape[0]] = s
    return SchmidtDecomposition(coeffs, u, right)


def random_pure_state(dim: int, seed) -> np.ndarray:
    """Haar-random unit vector (normalized complex Gaussian), deterministic per seed."""
    g = seeded_rng(seed)
    v = g.standard_normal(dim) + 1j * g.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_density_matrix(dim: int, rank: int, seed) -> np.ndarray:
    """Random state G G^dagger / tr(G G^dagger) with G of shape dim x rank."""
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must be in [1, {dim}], got {rank}")
    g = seeded_rng(seed)
    a = g.standard_normal((dim, rank)) + 1j * g.standard_normal((dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def check_density_matrix(
    rho: np.ndarray,
    herm_tol: float = 1e-12,
    eig_tol: float = EIGENVALUE_TOL,
    trace_tol: float = TRACE_TOL,
) -> None:
    """Raise ValueError unless ``rho`` is Hermitian, PSD, and unit trace."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"state must be square, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValueError("state contains non-finite entries")
    dev = np.max(np.abs(rho - rho.conj().T))
    if dev > herm_tol:
        raise ValueError(f"state is not Hermitian (max deviation {dev:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"state trace is {tr!r}, expected 1")
    lam_min = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)[0])
    if lam_min < -eig_tol:
        raise ValueError(f"state has negative eigenvalue {lam_min:.3e}")


def clamped_eigenvalues(rho: np.ndarray) -> np.ndarray:
    """Eigenvalues ascending with small negative drift clamped to zero."""
    w = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    return np.clip(w, 0.0, None)
