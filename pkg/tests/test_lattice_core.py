from math import sqrt

import numpy as np

from ptbreather import LatticeState, Params
from ptbreather.exceptions import DomainError, InvalidStateError, ValidationError
from ptbreather.lattice_core import (
    charge_q,
    diagnose,
    energy_h,
    energy_lower_bounds,
    extended_energy,
    gauge_rotate,
    hamiltonian_gradient,
    lambda_e,
    laplacian,
    local_charge,
    local_charge_flux,
    norm_balance_residual,
    pt_apply,
    rhs,
)
from ptbreather.utils import trans
from tests import BaseTest

PARAMS = Params(omega=0.75, gamma=0.5, epsilon=0.05, e_freq=2.635366)


class TestParams(BaseTest):

    def test_band_edge(self):
        self.assert_close(PARAMS.e0, sqrt(5.0) / 4.0)

    def test_pt_broken_regime(self):
        with self.assertRaises(DomainError):
            _ = Params(omega=0.5, gamma=0.5).e0

        with self.assertRaises(DomainError):
            _ = Params(omega=-0.2, gamma=0.5).e0

    def test_rejects_negative_gamma(self):
        try:
            Params(omega=0.75, gamma=-1.0)
            assert False

        except ValidationError as e:
            self.assert_json(
                e.get_errors(),
                {
                    'gamma': [trans('en.min.numeric', attributes={'attribute': 'gamma', 'min': 0})],
                }
            )

    def test_rejects_nan(self):
        with self.assertRaises(ValidationError):
            Params(omega=float('nan'), gamma=0.5)

    def test_copies(self):
        params = PARAMS.with_epsilon(0.0).with_e_freq(3.0)

        self.assert_true(params.epsilon == 0.0 and params.e_freq == 3.0)
        self.assert_true(PARAMS.epsilon == 0.05)
        self.assert_json(params.to_dict(), {'omega': 0.75, 'gamma': 0.5, 'epsilon': 0.0, 'e_freq': 3.0})


class TestLatticeState(BaseTest):

    def test_size_mismatch(self):
        with self.assertRaises(InvalidStateError):
            LatticeState(2, np.zeros(5), np.zeros(4))

    def test_non_finite(self):
        with self.assertRaises(InvalidStateError):
            LatticeState(1, [0.0, np.inf, 0.0], [0.0, 0.0, 0.0])

    def test_read_only(self):
        state = LatticeState.zeros(2)

        with self.assertRaises(ValueError):
            state.u[0] = 1.0

    def test_pt_symmetry(self):
        u = np.array([0.1 + 0.2j, 0.5 - 0.1j, 0.1 + 0.2j])

        self.assert_true(LatticeState(1, u, np.conj(u)).is_pt_symmetric())
        self.assert_false(LatticeState(1, u, u).is_pt_symmetric())
        self.assert_false(LatticeState(1, u[::-1] + [0, 0, 0.1], np.conj(u[::-1] + [0, 0, 0.1])).is_pt_symmetric())

    def test_padding(self):
        state = LatticeState.single_site(1, 0.3, 0.4).padded(3)

        self.assert_true(state.size == 7)
        self.assert_close(state.u[state.center], 0.3)
        self.assert_close(state.norm_sq(), 0.25)

    def test_padding_cannot_shrink(self):
        with self.assertRaises(InvalidStateError):
            LatticeState.zeros(3).padded(1)

    def test_lattice_mismatch(self):
        with self.assertRaises(InvalidStateError):
            LatticeState.zeros(1).plus(LatticeState.zeros(2))


class TestFunctionals(BaseTest):

    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_laplacian_dirichlet(self):
        self.assert_close(laplacian(np.array([1.0, 1.0, 1.0])), [-1.0, 0.0, -1.0])

    def test_zero_is_an_equilibrium(self):
        derivative = rhs(LatticeState.zeros(3), PARAMS)

        self.assert_true(derivative.norm() == 0.0)

    def test_functionals_are_real(self):
        for _ in range(5):
            state = LatticeState.random(6, self.rng)

            self.assert_true(np.isfinite(energy_h(state, PARAMS)))
            self.assert_true(np.isfinite(charge_q(state)))

    def test_norm_balance(self):
        for _ in range(10):
            state = LatticeState.random(8, self.rng)

            self.assert_true(abs(norm_balance_residual(state, PARAMS)) <= 1e-10)

    def test_gauge_invariance(self):
        state = LatticeState.random(4, self.rng)
        rotated = gauge_rotate(state, 1.3)

        self.assert_close(energy_h(rotated, PARAMS), energy_h(state, PARAMS), rtol=1e-12, atol=1e-12)
        self.assert_close(charge_q(rotated), charge_q(state), rtol=1e-12, atol=1e-12)

    def test_positive_regime_bound(self):
        params = Params(omega=0.75, gamma=0.5, epsilon=0.05)

        for _ in range(20):
            state = LatticeState.random(5, self.rng)
            bounds = energy_lower_bounds(state, params)

            self.assert_true(energy_h(state, params) >= bounds.positive_regime - 1e-12)

    def test_negative_regime_bound(self):
        params = Params(omega=-3.0, gamma=0.5, epsilon=0.05)

        for scale in (0.05, 0.3, 1.0):
            state = LatticeState.random(5, self.rng, scale=scale)
            bounds = energy_lower_bounds(state, params)

            self.assert_true(-energy_h(state, params) >= bounds.negative_regime - 1e-12)

    def test_quartic_bound_is_attained(self):
        params = Params(omega=-3.0, gamma=0.0)
        state = LatticeState.single_site(0, 0.5, 0.5)

        self.assert_close(-energy_h(state, params), energy_lower_bounds(state, params).negative_regime)

    def test_lyapunov_and_extended_energy(self):
        state = LatticeState.random(3, self.rng)
        record = diagnose(state, PARAMS, t=1.5)

        self.assert_close(lambda_e(state, PARAMS), energy_h(state, PARAMS) - PARAMS.e_freq * local_charge(state))
        self.assert_close(extended_energy(state, PARAMS), energy_h(state, PARAMS) - PARAMS.e_freq * charge_q(state))
        self.assert_true(record.t == 1.5)
        self.assert_close(record.lambda_e, lambda_e(state, PARAMS))

    def test_gradient_matches_energy(self):
        state = LatticeState.random(3, self.rng)
        direction = LatticeState.random(3, self.rng)
        step = 1e-5

        gradient = hamiltonian_gradient(state, PARAMS)
        # dH along (du, dv) is 2 Re sum(dH/du du + dH/dv dv)
        predicted = 2.0 * float(np.real(np.sum(gradient[:, 1] * direction.u + gradient[:, 3] * direction.v)))
        measured = (
            energy_h(state.plus(direction, step), PARAMS) - energy_h(state.plus(direction, -step), PARAMS)
        ) / (2.0 * step)

        self.assert_close(measured, predicted, rtol=1e-7, atol=1e-8)

    def test_local_charge_flux(self):
        state = LatticeState.random(4, self.rng)
        derivative = rhs(state, PARAMS)
        c = state.center
        u0, v0 = state.u[c], state.v[c]
        du0, dv0 = derivative.u[c], derivative.v[c]
        rate = 2.0 * float(np.real(du0 * np.conj(v0) + u0 * np.conj(dv0)))

        self.assert_close(local_charge_flux(state, PARAMS), rate, rtol=1e-10, atol=1e-12)

    def test_local_charge_flux_needs_neighbours(self):
        with self.assertRaises(InvalidStateError):
            local_charge_flux(LatticeState.zeros(0), PARAMS)

    def test_zero_exterior(self):
        state = LatticeState.random(5, self.rng)
        padded = state.padded(8)
        original, extended = rhs(state, PARAMS), rhs(padded, PARAMS)
        h = energy_h(state, PARAMS)

        self.assert_true(np.array_equal(extended.u[3:-3], original.u))
        self.assert_true(np.array_equal(extended.v[3:-3], original.v))
        self.assert_close(energy_h(padded, PARAMS), h, atol=1e-14 * (1.0 + abs(h)), rtol=0.0)
        self.assert_close(charge_q(padded), charge_q(state), atol=1e-14, rtol=1e-14)

    def test_pt_apply(self):
        state = LatticeState.random(2, self.rng)

        self.assert_close(pt_apply(state).u, state.v)
        self.assert_close(pt_apply(state, conjugate=True).v, np.conj(state.u))
        self.assert_close(energy_h(pt_apply(state, conjugate=True), PARAMS), energy_h(state, PARAMS), atol=1e-12)
