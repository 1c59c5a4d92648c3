"""Instance-by-instance certification of the capacity-ratio bound.

For a channel and a pure bipartite input this module builds the reference
output state (a barycenter of channel outputs over the Schmidt basis family),
checks the operator dominance certificates, evaluates every intermediate
upper bound of the chain

    mutual information <= reference divergence <= quadratic bound
        <= decomposed bound <= entropy bound <= capacity bound,

and compares both capacities against the dimension-dependent prefactor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .capacity import (
    entanglement_assisted_capacity,
    holevo_quantity,
    max_output_divergence,
)
from .channels import QuantumChannel
from .entropy import log_derivative_form, lower_bound_factor, relative_entropy
from .linalg import SchmidtDecomposition, schmidt_decompose

CHAIN_TOL = 1e-7  # nats; all chain quantities are closed-form eigenbasis evaluations
COND_TOL = 1e-9


@dataclass
class ChainReport:
    """All intermediate bound values for one (channel, pure input) instance, in nats."""

    mutual_info_nats: float
    reference_divergence_nats: float
    quadratic_bound_nats: float
    decomposed_bound_nats: float
    entropy_bound_nats: float
    capacity_bound_nats: float
    support_margins: list[float]
    total_weight: float
    dominance: float
    prefactor: float
    monotone_ok: bool

    def chain(self) -> tuple[float, ...]:
        return (
            self.mutual_info_nats,
            self.reference_divergence_nats,
            self.quadratic_bound_nats,
            self.decomposed_bound_nats,
            self.entropy_bound_nats,
            self.capacity_bound_nats,
        )


@dataclass
class RatioBoundCheck:
    """Capacity pair with the prefactor slack for one channel."""

    ce_bits: float
    ch_bits: float
    prefactor: float
    slack_bits: float
    ce_converged: bool
    ch_converged: bool


def family_total_weight(d_in: int) -> float:
    """Total weight 4 d - 3 of the projector and superposition output family."""
    return 4.0 * d_in - 3.0


def barycenter_dominance(d_in: int) -> float:
    """Dominance constant 2 d - 3/2 achieved by the output barycenter."""
    return 2.0 * d_in - 1.5


def capacity_ratio_prefactor(d_in: int) -> float:
    """Dimension-dependent factor bounding the capacity ratio.

    Evaluates (4d - 3)(2d - 5/2)^2 / ((2d - 3/2) ln(2d - 3/2) - 2d + 5/2);
    requires d >= 2 (for d = 1 both capacities vanish and no factor is needed).
    """
    if d_in < 2:
        raise ValueError("the prefactor is defined for input dimension >= 2")
    d = float(d_in)
    num = (4.0 * d - 3.0) * (2.0 * d - 2.5) ** 2
    den = (2.0 * d - 1.5) * math.log(2.0 * d - 1.5) - 2.0 * d + 2.5
    return num / den


def superposition_state(basis: np.ndarray, k: int, l: int, a: int) -> np.ndarray:
    """Unit vector (f_k + i^a f_l)/sqrt(2) from columns of an orthonormal basis."""
    return (basis[:, k] + (1j**a) * basis[:, l]) / np.sqrt(2.0)


def superposition_family(basis: np.ndarray):
    """All phase superpositions over ordered basis pairs: ((k, l, a), vector)."""
    d = basis.shape[1]
    for k, l in permutations(range(d), 2):
        for a in range(4):
            yield (k, l, a), superposition_state(basis, k, l, a)


def output_barycenter(channel: QuantumChannel, sd: SchmidtDecomposition) -> np.ndarray:
    """Weighted average of channel outputs over the Schmidt-basis state family.

    The weights are the squared Schmidt coefficients for the basis projectors
    and pair sums for the superpositions, normalized by the total weight; the
    result is the divergence-minimizing reference for the decomposed chain.
    """
    basis = sd.basis_right
    d = basis.shape[1]
    if d != channel.d_in:
        raise ValueError(
            f"basis dimension {d} does not match channel input dimension {channel.d_in}"
        )
    alpha2 = np.zeros(d)
    alpha2[: sd.coefficients.shape[0]] = sd.coefficients**2
    total = family_total_weight(d)
    acc = np.zeros((channel.d_out, channel.d_out), dtype=complex)
    for k in range(d):
        proj_out = channel.apply(np.outer(basis[:, k], basis[:, k].conj()))
        weight = alpha2[k] + 2.0 * sum(alpha2[k] + alpha2[l] for l in range(d) if l != k)
        acc += weight * proj_out
    return acc / total


def support_margins(
    channel: QuantumChannel, sd: SchmidtDecomposition, sigma: np.ndarray
) -> list[float]:
    """Minimum eigenvalues of k sigma - T(state) over the whole state family.

    Lists the basis projectors first, then the phase superpositions over
    ordered pairs; every entry must be >= -1e-9 for the dominance certificate.
    """
    basis = sd.basis_right
    d = basis.shape[1]
    k_dom = barycenter_dominance(d)
    anchor = k_dom * np.asarray(sigma, dtype=complex)
    margins = []
    for k in range(d):
        out = channel.apply(np.outer(basis[:, k], basis[:, k].conj()))
        margins.append(float(np.linalg.eigvalsh(anchor - out)[0]))
    for _, vec in superposition_family(basis):
        out = channel.apply(np.outer(vec, vec.conj()))
        margins.append(float(np.linalg.eigvalsh(anchor - out)[0]))
    return margins


def _as_pure_vector(state, d_sq: int) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        if state.shape[0] != d_sq:
            raise ValueError(f"state vector length {state.shape[0]}, expected {d_sq}")
        return state
    if state.ndim == 2 and state.shape == (d_sq, d_sq):
        w, v = np.linalg.eigh(state)
        if abs(np.trace(state @ state).real - 1.0) > 1e-8:
            raise ValueError("pure state required")
        return v[:, -1]
    raise ValueError(f"state must be a vector or square matrix of dimension {d_sq}")


def chain_report(
    channel: QuantumChannel,
    state,
    tau=None,
    tol: float = CHAIN_TOL,
    sup_restarts: int = 8,
    sup_seed=0,
) -> ChainReport:
    """Evaluate every link of the upper-bound chain on one pure bipartite input.

    ``state`` is a vector on the doubled input space (or a rank-one density
    matrix). ``tau`` is the reference for the final capacity bound and
    defaults to the constructed barycenter. The supremum in the last link is
    estimated by multi-start ascent and maximized with the directly evaluated
    family terms, which keeps the final inequality sound even if the ascent
    under-finds.
    """
    d = channel.d_in
    if d < 2:
        raise ValueError("the bound chain is defined for input dimension >= 2")
    v = _as_pure_vector(state, d * d)
    sd = schmidt_decompose(v, (d, d))
    basis = sd.basis_right
    alpha2 = np.zeros(d)
    alpha2[: sd.coefficients.shape[0]] = sd.coefficients**2

    sigma = output_barycenter(channel, sd)
    k_dom = barycenter_dominance(d)
    total = family_total_weight(d)
    g = lower_bound_factor(k_dom)
    margins = support_margins(channel, sd, sigma)

    rho = np.outer(v, v.conj())
    # marginals of the pure input; the auxiliary factor sits on the row index
    rho_left = np.einsum("ab,cb->ac", v.reshape(d, d), v.conj().reshape(d, d))
    rho_right = np.einsum("ba,bc->ac", v.reshape(d, d), v.conj().reshape(d, d))
    joint = channel.apply_extended(rho)

    mutual = relative_entropy(joint, np.kron(rho_left, channel.apply(rho_right))).value
    reference = np.kron(rho_left, sigma)
    anchored = relative_entropy(joint, reference).value
    quadratic = log_derivative_form(reference, joint - reference)

    proj_outs = [
        channel.apply(np.outer(basis[:, k], basis[:, k].conj())) for k in range(d)
    ]
    family = list(superposition_family(basis))
    family_outs = [channel.apply(np.outer(vec, vec.conj())) for _, vec in family]

    decomposed = sum(
        alpha2[k] * log_derivative_form(sigma, proj_outs[k] - sigma) for k in range(d)
    )
    decomposed += 0.5 * sum(
        max(alpha2[k], alpha2[l]) * log_derivative_form(sigma, out - sigma)
        for ((k, l, _), _), out in zip(family, family_outs)
    )

    entropy_sum = sum(
        alpha2[k] * relative_entropy(proj_outs[k], sigma).value for k in range(d)
    )
    entropy_sum += 0.5 * sum(
        (alpha2[k] + alpha2[l]) * relative_entropy(out, sigma).value
        for ((k, l, _), _), out in zip(family, family_outs)
    )
    entropy_bound = entropy_sum / g

    tau = sigma if tau is None else np.asarray(tau, dtype=complex)
    sup_value, _ = max_output_divergence(
        channel, tau, restarts=sup_restarts, seed=sup_seed
    )
    family_at_tau = [relative_entropy(out, tau).value for out in proj_outs + family_outs]
    capacity_bound = (total / g) * max([sup_value] + family_at_tau)

    chain = (mutual, anchored, quadratic, decomposed, entropy_bound, capacity_bound)
    monotone = all(chain[i] <= chain[i + 1] + tol for i in range(len(chain) - 1))
    return ChainReport(
        mutual_info_nats=mutual,
        reference_divergence_nats=anchored,
        quadratic_bound_nats=quadratic,
        decomposed_bound_nats=decomposed,
        entropy_bound_nats=entropy_bound,
        capacity_bound_nats=capacity_bound,
        support_margins=margins,
        total_weight=total,
        dominance=k_dom,
        prefactor=capacity_ratio_prefactor(d),
        monotone_ok=monotone,
    )


def verify_ratio_bound(
    channel: QuantumChannel,
    tol: float = 1e-7,
    restarts: int = 32,
    max_iter: int = 5000,
    seed=0,
) -> RatioBoundCheck:
    """Solve both capacities and report the prefactor slack for one channel.

    slack = prefactor(d_in) * C_H - C_E in bits; the bound holds when slack
    is at least -2 times the solver tolerance converted to bits.
    """
    ce = entanglement_assisted_capacity(channel, tol=tol, max_iter=max_iter)
    ch = holevo_quantity(channel, tol=tol, restarts=restarts, max_iter=max_iter, seed=seed)
    pre = capacity_ratio_prefactor(channel.d_in)
    slack = pre * ch.value_bits - ce.value_bits
    return RatioBoundCheck(
        ce_bits=ce.value_bits,
        ch_bits=ch.value_bits,
        prefactor=pre,
        slack_bits=slack,
        ce_converged=ce.converged,
        ch_converged=ch.converged,
    )
