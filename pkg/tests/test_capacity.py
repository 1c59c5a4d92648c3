import math

import numpy as np

from chancap import (
    depolarizing_capacity_sweep,
    depolarizing_channel,
    entanglement_assisted_capacity,
    holevo_quantity,
    identity_channel,
    mutual_information_gradient,
    random_channel,
    random_density_matrix,
    replacement_channel,
    seeded_rng,
)
from chancap.capacity import LN2, _mutual_information_nats

# closed forms for the depolarizing family, derived independently of the solvers:
# the assisted value comes from the maximally mixed input (the covariant
# average of any maximizer is again a maximizer, and averaging cannot lower a
# concave objective), with the joint spectrum (1-3p/4, p/4, p/4, p/4); the
# unassisted lower-bound value comes from the antipodal two-state ensemble,
# which meets the minimax value at the maximally mixed reference.


def binary_entropy_bits(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def depolarizing_assisted_bits(d: int, p: float) -> float:
    eigs = [1 - p + p / d**2] + [p / d**2] * (d * d - 1)
    return 2 * math.log2(d) + sum(x * math.log2(x) for x in eigs if x > 0)


def depolarizing_holevo_bits(p: float) -> float:
    return 1.0 - binary_entropy_bits(p / 2.0)


def random_traceless_direction(dim, seed):
    eta = random_density_matrix(dim, dim, seed) - np.eye(dim) / dim
    return eta / np.linalg.norm(eta)


class TestAssistedCapacity:
    def test_noiseless_qubit(self):
        est = entanglement_assisted_capacity(identity_channel(2))
        assert est.converged
        assert abs(est.value_bits - 2.0) < 1e-4

    def test_fully_depolarizing(self):
        est = entanglement_assisted_capacity(depolarizing_channel(2, 1.0))
        assert abs(est.value_bits) < 1e-6

    def test_depolarizing_grid_matches_closed_form(self):
        for p in np.linspace(0.0, 4.0 / 3.0, 9):
            est = entanglement_assisted_capacity(depolarizing_channel(2, float(p)))
            assert abs(est.value_bits - depolarizing_assisted_bits(2, float(p))) < 1e-4

    def test_estimate_invariants(self):
        est = entanglement_assisted_capacity(random_channel(2, 3, seed=1))
        assert est.value_bits == est.value_nats / LN2
        assert est.converged and est.gap_bound <= 1e-7
        assert -1e-6 <= est.value_bits <= 2 * math.log2(2) + 1e-6
        np.testing.assert_allclose(np.trace(est.argmax_state), 1.0, atol=1e-10)


class TestGradient:
    def test_identity_channel_symmetric_point(self):
        g = mutual_information_gradient(identity_channel(3), np.eye(3) / 3)
        off = g - np.trace(g) / 3 * np.eye(3)
        assert np.max(np.abs(off)) < 1e-10

    def test_matches_central_differences(self):
        for trial in range(10):
            din, dout = [(2, 2), (2, 3), (3, 2), (3, 3)][trial % 4]
            chan = random_channel(din, dout, seed=(2, trial))
            rho = 0.5 * random_density_matrix(din, din, (3, trial)) + 0.5 * np.eye(din) / din
            eta = random_traceless_direction(din, (4, trial))
            g = mutual_information_gradient(chan, rho)
            eps = 1e-5
            fd = (
                _mutual_information_nats(chan, rho + eps * eta)
                - _mutual_information_nats(chan, rho - eps * eta)
            ) / (2 * eps)
            assert abs(float(np.trace(g @ eta).real) - fd) < 1e-5

    def test_constant_channel_gradient_vanishes_on_traceless(self):
        sigma = random_density_matrix(2, 2, 5)
        chan = replacement_channel(sigma, 2)
        rho = random_density_matrix(2, 2, 6)
        g = mutual_information_gradient(chan, rho)
        eta = random_traceless_direction(2, 7)
        assert abs(float(np.trace(g @ eta).real)) < 1e-9
        assert abs(_mutual_information_nats(chan, rho)) < 1e-10


class TestHolevoQuantity:
    def test_noiseless_qubit(self):
        est = holevo_quantity(identity_channel(2))
        assert est.converged
        assert abs(est.value_bits - 1.0) < 1e-4

    def test_fully_depolarizing(self):
        est = holevo_quantity(depolarizing_channel(2, 1.0))
        assert abs(est.value_bits) < 1e-6

    def test_depolarizing_grid_matches_closed_form(self):
        for p in np.linspace(0.0, 4.0 / 3.0, 9):
            est = holevo_quantity(depolarizing_channel(2, float(p)))
            assert abs(est.value_bits - depolarizing_holevo_bits(float(p))) < 1e-3

    def test_witnesses_reported(self):
        est = holevo_quantity(random_channel(2, 2, seed=8), seed=9)
        assert est.witnesses and est.barycenter is not None
        for w in est.witnesses:
            assert abs(np.linalg.norm(w) - 1.0) < 1e-9

    def test_value_range(self):
        for trial in range(6):
            din, dout = [(2, 3), (3, 2), (3, 3)][trial % 3]
            chan = random_channel(din, dout, seed=(40, trial))
            ch = holevo_quantity(chan, seed=(41, trial))
            assert -1e-6 <= ch.value_bits <= math.log2(min(din, dout)) + 1e-6
            ce = entanglement_assisted_capacity(chan)
            assert -1e-6 <= ce.value_bits <= 2 * math.log2(min(din, dout)) + 1e-6


class TestSolverProperties:
    def test_assistance_never_hurts(self):
        for trial in range(15):
            din, dout = [(2, 2), (3, 2), (2, 3)][trial % 3]
            chan = random_channel(din, dout, seed=(10, trial))
            ce = entanglement_assisted_capacity(chan)
            ch = holevo_quantity(chan, seed=(11, trial))
            assert ce.value_nats >= ch.value_nats - 1e-6

    def test_basis_change_invariance(self):
        chan = random_channel(2, 2, seed=12)
        g = seeded_rng(13)
        u_in, _ = np.linalg.qr(g.standard_normal((2, 2)) + 1j * g.standard_normal((2, 2)))
        u_out, _ = np.linalg.qr(g.standard_normal((2, 2)) + 1j * g.standard_normal((2, 2)))
        rotated = type(chan)(np.einsum("ab,mbc,cd->mad", u_out, chan.kraus, u_in))
        tol = 1e-7
        ce1 = entanglement_assisted_capacity(chan, tol=tol)
        ce2 = entanglement_assisted_capacity(rotated, tol=tol)
        assert abs(ce1.value_nats - ce2.value_nats) <= 2 * tol
        ch1 = holevo_quantity(chan, tol=tol, seed=14)
        ch2 = holevo_quantity(rotated, tol=tol, seed=14)
        assert abs(ch1.value_nats - ch2.value_nats) <= 2 * tol

    def test_deterministic(self):
        chan = random_channel(3, 2, seed=15)
        a = holevo_quantity(chan, seed=16)
        b = holevo_quantity(chan, seed=16)
        assert a.value_nats == b.value_nats and a.gap_bound == b.gap_bound
        c = entanglement_assisted_capacity(chan)
        d = entanglement_assisted_capacity(chan)
        assert c.value_nats == d.value_nats


class TestSweep:
    def test_anchor_rows(self):
        rows = depolarizing_capacity_sweep(p_grid=[0.0, 0.999, 1.0])
        by_p = {r.p: r for r in rows}
        r0 = by_p[0.0]
        assert abs(r0.ce_bits - 2.0) < 1e-4 and abs(r0.ch_bits - 1.0) < 1e-4
        assert abs(r0.ratio - 2.0) < 1e-4
        r1 = by_p[1.0]
        assert r1.ce_bits < 1e-6 and r1.ch_bits < 1e-6 and r1.ratio is None
        ra = by_p[0.999]
        assert abs(ra.ratio - 3.0) / 3.0 < 0.05

    def test_monotone_decrease_up_to_total_noise(self):
        grid = list(np.linspace(0.0, 1.0, 21))
        rows = depolarizing_capacity_sweep(p_grid=grid)
        for a, b in zip(rows, rows[1:]):
            assert b.ce_bits <= a.ce_bits + 1e-9
            assert b.ch_bits <= a.ch_bits + 1e-9

    def test_default_grid_has_probe_point(self):
        rows = depolarizing_capacity_sweep(p_grid=None, max_iter=5)  # grid shape only
        ps = [r.p for r in rows]
        assert len(ps) == 82 and any(abs(p - 0.999) < 1e-12 for p in ps)
        assert ps == sorted(ps)
