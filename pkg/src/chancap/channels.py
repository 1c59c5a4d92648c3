"""Quantum channels as Kraus families: validation, action, and named constructions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import hermitian_eig, partial_trace, seeded_rng

TRACE_PRESERVING_TOL = 1e-10
CHOI_PSD_TOL = 1e-10
KRAUS_CUTOFF = 1e-14


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Completely positive trace-preserving map stored as Kraus operators.

    ``kraus`` has shape (num_kraus, d_out, d_in). Trace preservation
    sum_j K_j^dagger K_j = I is enforced at construction.
    """

    kraus: np.ndarray
    atol: float = field(default=TRACE_PRESERVING_TOL, compare=False)

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim != 3 or k.shape[0] < 1:
            raise ValueError("kraus must be a nonempty stack of d_out x d_in matrices")
        if not np.all(np.isfinite(k)):
            raise ValueError("kraus operators contain non-finite entries")
        object.__setattr__(self, "kraus", k)
        gram = np.einsum("mij,mik->jk", k.conj(), k)
        dev = np.max(np.abs(gram - np.eye(self.d_in)))
        if dev > self.atol:
            raise ValueError(f"channel is not trace preserving (max deviation {dev:.3e})")

    @property
    def d_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def d_out(self) -> int:
        return self.kraus.shape[1]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Channel action sum_j K_j rho K_j^dagger."""
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.d_in, self.d_in):
            raise ValueError(f"state shape {rho.shape} does not match input dimension {self.d_in}")
        return np.einsum("mbi,ij,mcj->bc", self.kraus, rho, self.kraus.conj())

    def apply_extended(self, rho: np.ndarray) -> np.ndarray:
        """Action of id (x) T on a state of an auxiliary copy of the input paired with it."""
        d = self.d_in
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (d * d, d * d):
            raise ValueError(
                f"state shape {rho.shape} does not match extended dimension {d * d}"
            )
        r = rho.reshape(d, d, d, d)  # (a', a, b', b) with primes on the row side
        out = np.einsum("mxa,paqb,myb->pxqy", self.kraus, r, self.kraus.conj())
        return out.reshape(d * self.d_out, d * self.d_out)

    def choi(self) -> np.ndarray:
        """Normalized Choi state: id (x) T applied to the maximally entangled state."""
        d = self.d_in
        omega = np.zeros(d * d, dtype=complex)
        omega[:: d + 1] = 1.0 / np.sqrt(d)
        return self.apply_extended(np.outer(omega, omega.conj()))

    def check_complete_positivity(self, tol: float = CHOI_PSD_TOL) -> float:
        """Minimum Choi eigenvalue; raises if below -tol."""
        lam_min = float(np.linalg.eigvalsh(self.choi())[0])
        if lam_min < -tol:
            raise ValueError(f"channel is not completely positive (Choi min eig {lam_min:.3e})")
        return lam_min


def identity_channel(d: int) -> QuantumChannel:
    return QuantumChannel(np.eye(d, dtype=complex)[None, :, :])


def depolarizing_channel(d: int, p: float) -> QuantumChannel:
    """Mix the input with the maximally mixed state: rho -> (1-p) rho + p tr(rho) I/d.

    The map is completely positive for 0 <= p <= d^2/(d^2 - 1); outside this
    range a ValueError is raised.
    """
    if d < 2:
        raise ValueError("depolarizing channel needs dimension >= 2")
    p_max = d * d / (d * d - 1.0)
    if not 0.0 <= p <= p_max + 1e-12:
        raise ValueError(f"p={p} outside the completely positive range [0, {p_max}]")
    dd = d * d
    omega = np.zeros(dd, dtype=complex)
    omega[:: d + 1] = 1.0 / np.sqrt(d)
    choi = (1.0 - p) * np.outer(omega, omega.conj()) + (p / dd) * np.eye(dd)
    return kraus_from_choi(choi, d, d)


def kraus_from_choi(choi: np.ndarray, d_in: int, d_out: int) -> QuantumChannel:
    """Rebuild a Kraus family from a normalized Choi state via eigendecomposition."""
    w, v = hermitian_eig(np.asarray(choi, dtype=complex))
    ops = []
    for lam, col in zip(w, v.T):
        if lam > KRAUS_CUTOFF:
            ops.append(np.sqrt(d_in * lam) * col.reshape(d_in, d_out).T)
    if not ops:
        raise ValueError("Choi matrix has no positive eigenvalues")
    return QuantumChannel(np.stack(ops))


def replacement_channel(sigma: np.ndarray, d_in: int) -> QuantumChannel:
    """Constant channel mapping every input to ``sigma`` (scaled by the input trace)."""
    w, v = hermitian_eig(np.asarray(sigma, dtype=complex))
    ops = []
    for lam, col in zip(w, v.T):
        if lam > KRAUS_CUTOFF:
            for i in range(d_in):
                k = np.zeros((sigma.shape[0], d_in), dtype=complex)
                k[:, i] = np.sqrt(lam) * col
                ops.append(k)
    return QuantumChannel(np.stack(ops))


def random_channel(d_in: int, d_out: int, kraus_count: int | None = None, seed=0) -> QuantumChannel:
    """Haar-random channel from a random Stinespring isometry.

    ``kraus_count`` is the environment dimension; the default d_in * d_out
    gives a generic full-rank environment.
    """
    if kraus_count is None:
        kraus_count = d_in * d_out
    if kraus_count < 1:
        raise ValueError("kraus_count must be >= 1")
    g = seeded_rng(seed)
    a = g.standard_normal((d_out * kraus_count, d_in)) + 1j * g.standard_normal(
        (d_out * kraus_count, d_in)
    )
    q, r = np.linalg.qr(a)
    diag = r.diagonal().copy()
    diag[diag == 0] = 1.0
    q = q * (diag / np.abs(diag))  # canonical phase fix, keeps sampling deterministic
    return QuantumChannel(q.reshape(kraus_count, d_out, d_in))


def choi_partial_trace_residual(channel: QuantumChannel) -> float:
    """Max deviation of the Choi output marginal from I/d_in (trace-preservation witness)."""
    marg = partial_trace(channel.choi(), 0, (channel.d_in, channel.d_out))
    return float(np.max(np.abs(marg - np.eye(channel.d_in) / channel.d_in)))


def channel_to_json(channel: QuantumChannel) -> str:
    """Serialize to the interchange format: [re, im] pairs, row-major matrices."""
    payload = {
        "d_in": channel.d_in,
        "d_out": channel.d_out,
        "kraus": [
            [[[float(z.real), float(z.imag)] for z in row] for row in op]
            for op in channel.kraus
        ],
    }
    return json.dumps(payload)


def channel_from_json(text: str, atol: float = TRACE_PRESERVING_TOL) -> QuantumChannel:
    """Parse the interchange format; validates shapes and trace preservation."""
    payload = json.loads(text)
    try:
        d_in = int(payload["d_in"])
        d_out = int(payload["d_out"])
        raw = payload["kraus"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"channel JSON missing required field: {exc}") from exc
    if not isinstance(raw, list) or not raw:
        raise ValueError("channel JSON field 'kraus' must be a nonempty array")
    ops = np.empty((len(raw), d_out, d_in), dtype=complex)
    for m, op in enumerate(raw):
        if len(op) != d_out or any(len(row) != d_in for row in op):
            raise ValueError(
                f"kraus operator {m} has wrong shape, expected {d_out}x{d_in}"
            )
        for b, row in enumerate(op):
            for a, entry in enumerate(row):
                if not (isinstance(entry, list) and len(entry) == 2):
                    raise ValueError(
                        f"kraus operator {m} entry ({b},{a}) is not a [re, im] pair"
                    )
                ops[m, b, a] = complex(entry[0], entry[1])
    return QuantumChannel(ops, atol=atol)
