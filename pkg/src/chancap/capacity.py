"""Capacity solvers with convergence certificates.

The entanglement-assisted capacity is a concave maximization over input
states, solved by entropic mirror ascent with a first-order optimality gap.
The Holevo quantity is a minimax problem solved by alternating a multi-start
sphere ascent (inner supremum) with barycenter updates of the reference state
over an accumulated witness ensemble whose positions and weights are improved
monotonically in the certified lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .channels import QuantumChannel, depolarizing_channel
from .linalg import seeded_rng

LN2 = float(np.log(2.0))
DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 5000
DEFAULT_RESTARTS = 32
ARMIJO = 1e-4
STEP_FLOOR = 1e-8
LOG_FLOOR = 1e-30
BARYCENTER_MIX = 1e-12
RATIO_CUTOFF_BITS = 1e-9


@dataclass
class CapacityEstimate:
    """Solver output: value in bits and nats, optimality gap, and witnesses."""

    value_nats: float
    gap_bound: float
    iterations: int
    converged: bool
    argmax_state: np.ndarray | None = None
    witnesses: list[np.ndarray] | None = None
    barycenter: np.ndarray | None = None
    value_bits: float = field(init=False)

    def __post_init__(self):
        self.value_bits = self.value_nats / LN2


class SweepPoint(NamedTuple):
    p: float
    ce_bits: float
    ch_bits: float
    ratio: float | None


def _clamped_log_eigh(m: np.ndarray):
    """Eigendecomposition with eigenvalues floored for safe logarithms."""
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return w, np.log(np.clip(w, LOG_FLOOR, None)), v


def _log_matrix(m: np.ndarray) -> np.ndarray:
    _, logs, v = _clamped_log_eigh(m)
    return (v * logs) @ v.conj().T


def _entropy_from_eigs(w: np.ndarray) -> float:
    w = w[w > 0]
    return float(-np.sum(w * np.log(w)))


def _environment_gram(channel: QuantumChannel, rho: np.ndarray) -> np.ndarray:
    """Environment output W with W[j, k] = tr(K_j rho K_k^dagger)."""
    a = channel.kraus @ rho
    return np.einsum("jbc,kbc->jk", a, channel.kraus.conj())


def _mutual_information_nats(channel: QuantumChannel, rho: np.ndarray) -> float:
    """Objective S(rho) + S(T(rho)) - S(W) (equal to the divergence form)."""
    w_in = np.clip(np.linalg.eigvalsh(rho), 0.0, None)
    w_out = np.clip(np.linalg.eigvalsh(channel.apply(rho)), 0.0, None)
    w_env = np.clip(np.linalg.eigvalsh(_environment_gram(channel, rho)), 0.0, None)
    return _entropy_from_eigs(w_in) + _entropy_from_eigs(w_out) - _entropy_from_eigs(w_env)


def _adjoint_apply(channel: QuantumChannel, x: np.ndarray) -> np.ndarray:
    """Adjoint map sum_j K_j^dagger X K_j."""
    z = np.einsum("mbi,bc->mic", channel.kraus.conj(), x)
    return np.einsum("mic,mcj->ij", z, channel.kraus)


def mutual_information_gradient(channel: QuantumChannel, rho: np.ndarray) -> np.ndarray:
    """Euclidean gradient of the mutual information with respect to the input state.

    Rank-deficient inputs are first mixed with 1e-12 of the maximally mixed
    state so the logarithm is defined.
    """
    rho = np.asarray(rho, dtype=complex)
    d = channel.d_in
    if float(np.linalg.eigvalsh(rho)[0]) < 1e-12:
        rho = (rho + 1e-12 * np.eye(d) / d) / (1.0 + 1e-12)
    ln_rho = _log_matrix(rho)
    ln_out = _log_matrix(channel.apply(rho))
    ln_env = _log_matrix(_environment_gram(channel, rho))
    z = np.einsum("kj,kbi->jbi", ln_env, channel.kraus.conj())
    env_term = np.einsum("jbi,jbl->il", z, channel.kraus)
    grad = -ln_rho - _adjoint_apply(channel, ln_out) + env_term - np.eye(d)
    return (grad + grad.conj().T) / 2.0


def _state_from_logits(h: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((h + h.conj().T) / 2.0)
    e = np.exp(w - w[-1])
    e /= e.sum()
    return (v * e) @ v.conj().T


def entanglement_assisted_capacity(
    channel: QuantumChannel,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> CapacityEstimate:
    """Maximize the channel mutual information over input states.

    Entropic mirror ascent: the state is kept as exp(H)/tr exp(H) and H moves
    along the Euclidean gradient with a backtracking step. The reported gap is
    lambda_max(grad) - tr(rho grad), a global optimality certificate for this
    concave objective; convergence means gap <= tol (in nats).
    """
    d = channel.d_in
    h = np.zeros((d, d), dtype=complex)
    rho = np.eye(d, dtype=complex) / d
    value = _mutual_information_nats(channel, rho)
    gap = float("inf")
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        grad = mutual_information_gradient(channel, rho)
        gap = float(np.linalg.eigvalsh(grad)[-1] - np.trace(rho @ grad).real)
        if gap <= tol:
            converged = True
            break
        step = 1.0
        accepted = False
        while step >= STEP_FLOOR:
            h_try = h + step * grad
            rho_try = _state_from_logits(h_try)
            value_try = _mutual_information_nats(channel, rho_try)
            gain = float(np.trace(grad @ (rho_try - rho)).real)
            if value_try >= value + ARMIJO * gain:
                h, rho, value = h_try, rho_try, value_try
                accepted = True
                break
            step /= 2.0
        if not accepted:
            break  # stalled below the step floor; gap reported honestly
        w = np.linalg.eigvalsh(h)
        h -= w[-1] * np.eye(d)  # keep logits bounded
    if not converged:
        grad = mutual_information_gradient(channel, rho)
        gap = float(np.linalg.eigvalsh(grad)[-1] - np.trace(rho @ grad).real)
        converged = gap <= tol
    return CapacityEstimate(
        value_nats=max(0.0, value),
        gap_bound=gap,
        iterations=iterations,
        converged=converged,
        argmax_state=rho,
    )


def _batch_outputs(channel: QuantumChannel, states: np.ndarray) -> np.ndarray:
    amps = np.einsum("mbi,ri->rmb", channel.kraus, states)
    return np.einsum("rmb,rmc->rbc", amps, amps.conj())


def _batch_values(channel: QuantumChannel, ln_sigma: np.ndarray, states: np.ndarray):
    outs = _batch_outputs(channel, states)
    w = np.clip(np.linalg.eigvalsh(outs), 0.0, None)
    self_part = np.sum(w * np.log(np.clip(w, LOG_FLOOR, None)), axis=1)
    cross = np.einsum("rbc,cb->r", outs, ln_sigma).real
    return self_part - cross


def _batch_divergence_grads(channel: QuantumChannel, ln_sigma: np.ndarray, states: np.ndarray):
    """Wirtinger gradients of D(T(psi psi*)||sigma) for a batch of unit vectors."""
    amps = np.einsum("mbi,ri->rmb", channel.kraus, states)
    outs = np.einsum("rmb,rmc->rbc", amps, amps.conj())
    w, v = np.linalg.eigh(outs)
    logs = np.log(np.clip(w, LOG_FLOOR, None))
    ln_outs = (v * logs[:, None, :]) @ v.conj().transpose(0, 2, 1)
    x = ln_outs - ln_sigma[None, :, :]
    z = np.einsum("rbc,rmc->rmb", x, amps)
    return np.einsum("rmb,mbi->ri", z, channel.kraus.conj())


def _sphere_ascent(
    channel: QuantumChannel,
    ln_sigma: np.ndarray,
    starts: np.ndarray,
    max_steps: int = 300,
    grad_tol: float = 1e-6,
):
    """Batched projected gradient ascent of D(T(psi)||sigma) on the unit sphere.

    Each row carries its own adaptive step; rows retire once their tangent
    gradient is below ``grad_tol`` or no ascent step is accepted. Returns the
    final (values, states) for every row.
    """
    psi = starts / np.linalg.norm(starts, axis=1, keepdims=True)
    vals = _batch_values(channel, ln_sigma, psi)
    steps = np.ones(len(psi))
    active = np.ones(len(psi), dtype=bool)
    for _ in range(max_steps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        grads = _batch_divergence_grads(channel, ln_sigma, psi[idx])
        overlap = np.einsum("ri,ri->r", psi[idx].conj(), grads)
        tangent = grads - overlap[:, None] * psi[idx]
        norms = np.linalg.norm(tangent, axis=1)
        done = norms <= grad_tol
        active[idx[done]] = False
        idx = idx[~done]
        if idx.size == 0:
            continue
        tangent = tangent[~done]
        norms = norms[~done]
        alpha = steps[idx].copy()
        pending = np.ones(idx.size, dtype=bool)
        for _ in range(25):
            if not pending.any():
                break
            sub = np.flatnonzero(pending)
            cand = psi[idx[sub]] + alpha[sub, None] * tangent[sub]
            cand /= np.linalg.norm(cand, axis=1, keepdims=True)
            cand_vals = _batch_values(channel, ln_sigma, cand)
            ok = cand_vals >= vals[idx[sub]] + ARMIJO * alpha[sub] * norms[sub] ** 2
            accepted = idx[sub[ok]]
            psi[accepted] = cand[ok]
            vals[accepted] = cand_vals[ok]
            pending[sub[ok]] = False
            alpha[sub[~ok]] /= 2.0
        steps[idx] = np.minimum(alpha * 2.0, 1e3)
        active[idx[pending & (alpha < 1e-14)]] = False  # stuck at float precision
    return vals, psi


def max_output_divergence(
    channel: QuantumChannel,
    sigma: np.ndarray,
    restarts: int = 8,
    seed=0,
    extra_starts: np.ndarray | None = None,
    max_steps: int = 300,
    grad_tol: float = 1e-6,
):
    """Heuristic supremum of D(T(psi)||sigma) over pure inputs.

    Multi-start projected gradient ascent on the unit sphere, vectorized over
    the restarts. Returns (best value in nats, best input vector); ties are
    broken by the lowest start index.
    """
    d = channel.d_in
    g = seeded_rng(seed)
    starts = g.standard_normal((restarts, d)) + 1j * g.standard_normal((restarts, d))
    if extra_starts is not None and len(extra_starts):
        starts = np.concatenate([np.asarray(extra_starts, dtype=complex), starts])
    ln_sigma = _log_matrix(np.asarray(sigma, dtype=complex))
    vals, psi = _sphere_ascent(channel, ln_sigma, starts, max_steps=max_steps, grad_tol=grad_tol)
    best = int(np.argmax(vals))
    return float(vals[best]), psi[best]


def _mixture_divergence(outs: np.ndarray, weights: np.ndarray) -> float:
    """Ensemble mixture divergence with floored logs (a valid lower bound)."""
    w_out = np.clip(np.linalg.eigvalsh(outs), 0.0, None)
    self_terms = np.sum(w_out * np.log(np.clip(w_out, LOG_FLOOR, None)), axis=1)
    avg = np.einsum("r,rij->ij", weights, outs)
    ln_avg = _log_matrix(avg)
    cross = np.einsum("rbc,cb->r", outs, ln_avg).real
    return float(weights @ (self_terms - cross))


def _ensemble_weights(
    outs: np.ndarray,
    floor_state: np.ndarray,
    tol: float,
    init: np.ndarray | None = None,
):
    """Optimal weights over a fixed output alphabet.

    Multiplicative updates with an SLSQP polish; maximizes the mixture
    divergence (the restricted-alphabet capacity in nats). Returns
    (weights, mixture divergence at those weights).
    """
    m = outs.shape[0]
    if init is not None and len(init) == m and init.min() >= 0 and init.sum() > 0:
        p = np.clip(init, 1e-16, None)
        p = p / p.sum()
    else:
        p = np.full(m, 1.0 / m)
    if m == 1:
        return p, 0.0
    w_list = np.clip(np.linalg.eigvalsh(outs), 0.0, None)
    self_terms = np.sum(w_list * np.log(np.clip(w_list, LOG_FLOOR, None)), axis=1)

    def divergences(weights: np.ndarray) -> np.ndarray:
        avg = np.einsum("r,rij->ij", weights, outs)
        avg = (1.0 - BARYCENTER_MIX) * avg + BARYCENTER_MIX * floor_state
        ln_avg = _log_matrix(avg)
        return self_terms - np.einsum("rbc,cb->r", outs, ln_avg).real

    reached = False
    for _ in range(200):
        dvals = divergences(p)
        chi = float(p @ dvals)
        if dvals.max() - chi <= tol:
            reached = True
            break
        p = p * np.exp(dvals - dvals.max())
        p /= p.sum()
    if not reached:
        def neg_chi(q):
            dvals = divergences(q)
            return -float(q @ dvals), 1.0 - dvals

        res = optimize.minimize(
            neg_chi,
            p,
            jac=True,
            method="SLSQP",
            bounds=[(0.0, 1.0)] * m,
            constraints=[{"type": "eq", "fun": lambda q: q.sum() - 1.0, "jac": lambda q: np.ones(m)}],
            options={"maxiter": 200, "ftol": 1e-14},
        )
        q = np.clip(res.x, 0.0, None)
        if q.sum() > 0:
            q /= q.sum()
            if _mixture_divergence(outs, q) > _mixture_divergence(outs, p):
                p = q
    chi_exact = _mixture_divergence(outs, p)
    return p, chi_exact


def _improve_positions(
    channel: QuantumChannel,
    witnesses: np.ndarray,
    weights: np.ndarray,
    chi: float,
    anchor: np.ndarray,
    ba_tol: float,
    sweeps: int = 3,
):
    """Move witness states along divergence-ascent tangents, line-searched on
    the ensemble mixture divergence so the lower bound never decreases."""
    if len(witnesses) < 2:
        return witnesses, weights, chi
    for _ in range(sweeps):
        outs = _batch_outputs(channel, witnesses)
        avg = np.einsum("r,rij->ij", weights, outs)
        avg = (1.0 - BARYCENTER_MIX) * avg + BARYCENTER_MIX * anchor
        ln_avg = _log_matrix(avg)
        grads = _batch_divergence_grads(channel, ln_avg, witnesses)
        overlap = np.einsum("ri,ri->r", witnesses.conj(), grads)
        tangent = grads - overlap[:, None] * witnesses
        slope = float(weights @ np.linalg.norm(tangent, axis=1) ** 2)
        if slope <= 1e-16:
            break
        step = 1.0
        moved = False
        while step >= 1e-10:
            cand = witnesses + step * tangent
            cand /= np.linalg.norm(cand, axis=1, keepdims=True)
            chi_cand = _mixture_divergence(_batch_outputs(channel, cand), weights)
            if chi_cand >= chi + ARMIJO * step * slope:
                witnesses = cand
                chi = chi_cand
                moved = True
                break
            step /= 2.0
        if not moved:
            break
        weights, chi_new = _ensemble_weights(
            _batch_outputs(channel, witnesses), anchor, ba_tol, init=weights
        )
        chi = max(chi, chi_new)
    return witnesses, weights, chi


def holevo_quantity(
    channel: QuantumChannel,
    tol: float = DEFAULT_TOL,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
    seed=0,
) -> CapacityEstimate:
    """Minimax divergence solver for the Holevo quantity.

    Alternates the multi-start inner supremum at the current reference state
    with barycenter updates over a witness ensemble whose weights and
    positions are optimized for the certified mixture-divergence lower bound.
    The value is the inner supremum at the final reference; the gap is that
    value minus the best lower bound. The inner problem is non-concave, so
    the supremum is heuristic and the gap is reported honestly.
    """
    d = channel.d_in
    image_anchor = channel.apply(np.eye(d, dtype=complex) / d)
    sigma = image_anchor
    witnesses = np.zeros((0, d), dtype=complex)
    weights = np.zeros(0)
    chi_best = 0.0
    value_best = float("inf")
    sigma_best = sigma
    gap = float("inf")
    converged = False
    iterations = 0
    ba_tol = min(1e-11, 0.02 * tol)
    grad_tol = min(1e-6, max(1e-9, np.sqrt(tol) / 30.0))
    for iterations in range(1, max_iter + 1):
        g = seeded_rng(seed, iterations)
        fresh = g.standard_normal((restarts, d)) + 1j * g.standard_normal((restarts, d))
        starts = np.concatenate([witnesses, fresh]) if len(witnesses) else fresh
        ln_sigma = _log_matrix(sigma)
        vals, states = _sphere_ascent(channel, ln_sigma, starts, grad_tol=grad_tol)
        best = int(np.argmax(vals))
        value = float(vals[best])
        if value < value_best:  # keep the best reference seen, not the last
            value_best = value
            sigma_best = sigma
        if not any(abs(np.vdot(states[best], wv)) ** 2 >= 1.0 - 1e-10 for wv in witnesses):
            witnesses = np.concatenate([witnesses, states[best][None, :]])
        outs = _batch_outputs(channel, witnesses)
        init = None
        if len(weights) and len(weights) + 1 == len(witnesses):
            init = np.concatenate([weights * (1.0 - 1.0 / len(witnesses)), [1.0 / len(witnesses)]])
        weights, chi = _ensemble_weights(outs, image_anchor, ba_tol, init=init)
        witnesses, weights, chi = _improve_positions(
            channel, witnesses, weights, chi, image_anchor, ba_tol
        )
        chi_best = max(chi_best, chi)
        gap = value_best - chi_best
        if gap <= tol:
            converged = True
            break
        keep = weights > 1e-14
        if keep.sum() and not keep.all():
            witnesses = witnesses[keep]
            weights = weights[keep] / weights[keep].sum()
        outs = _batch_outputs(channel, witnesses)
        sigma = (1.0 - BARYCENTER_MIX) * np.einsum(
            "r,rij->ij", weights, outs
        ) + BARYCENTER_MIX * image_anchor
    return CapacityEstimate(
        value_nats=max(0.0, value_best),
        gap_bound=gap,
        iterations=iterations,
        converged=converged,
        witnesses=list(witnesses),
        barycenter=sigma_best,
    )


def depolarizing_capacity_sweep(
    d: int = 2,
    p_grid=None,
    tol: float = 1e-10,
    restarts: int = 8,
    max_iter: int = 2000,
    seed=0,
) -> list[SweepPoint]:
    """Both capacities of the depolarizing family over a grid of mixing weights.

    The default grid is 81 uniform points on the completely positive range
    plus the near-total-noise probe 0.999. The ratio is reported as None
    where the Holevo quantity falls below 1e-9 bits (0/0 region).
    """
    if p_grid is None:
        p_max = d * d / (d * d - 1.0)
        p_grid = sorted(set(float(p) for p in np.linspace(0.0, p_max, 81)) | {0.999})
    rows = []
    for p in p_grid:
        chan = depolarizing_channel(d, float(p))
        ce = entanglement_assisted_capacity(chan, tol=tol, max_iter=max_iter)
        ch = holevo_quantity(chan, tol=tol, restarts=restarts, max_iter=max_iter, seed=seed)
        ratio = None
        if ch.value_bits > RATIO_CUTOFF_BITS:
            ratio = ce.value_bits / ch.value_bits
        rows.append(SweepPoint(float(p), ce.value_bits, ch.value_bits, ratio))
    return rows
