from math import pi

import numpy as np

from ptbreather import LatticeState, Params
from ptbreather.dynamics import (
    alpha_dot_direct,
    alpha_dot_eval,
    delta_rate_check,
    energy_bound_check,
    exit_time,
    fit_scaling_exponent,
    integrate,
    metastability_sweep,
    modulation_decompose,
    perturbed_breather,
    pt_trajectory_check,
    step_rk4,
)
from ptbreather.exceptions import DecompositionError, InvalidStateError, ValidationError
from ptbreather.lattice_core import gauge_rotate, to_extended
from ptbreather.spectral import sigma_phi
from ptbreather.stationary import solve_breather, solve_correction
from tests import BaseTest

REFERENCE = Params(omega=0.75, gamma=0.5, e_freq=2.635366)


def _advance(state: LatticeState, params: Params, dt: float, steps: int) -> LatticeState:
    for _ in range(steps):
        state = step_rk4(state, params, dt)

    return state


class TestIntegrator(BaseTest):

    def test_zero_state_stays_zero(self):
        trajectory = integrate(LatticeState.zeros(3), REFERENCE.with_epsilon(0.05), 1.0, dt=1e-2, keep_states=True)

        self.assert_true(trajectory.states[-1].norm() == 0.0)
        self.assert_true(trajectory.h_drift() == 0.0)

    def test_dimer_is_periodic(self):
        profile = solve_breather(REFERENCE, n_half=2)
        period = 2.0 * pi / REFERENCE.e_freq
        trajectory = integrate(profile.state(), REFERENCE, period, dt=period / 4000, sample_every=period,
                               keep_states=True)

        self.assert_close(trajectory.times()[-1], period)
        self.assert_close(trajectory.states[-1].u, profile.state().u, atol=1e-8, rtol=0.0)

    def test_stationary_phase_rotation(self):
        profile = solve_breather(REFERENCE.with_epsilon(0.05), n_half=6)
        t = 0.5
        state = _advance(profile.state(), profile.params, 1e-3, 500)

        self.assert_close(state.u, np.exp(-1j * REFERENCE.e_freq * t) * profile.u_profile, atol=1e-9, rtol=0.0)

    def test_fourth_order(self):
        params = REFERENCE.with_epsilon(0.05)
        state0 = LatticeState.random(3, np.random.default_rng(3), scale=0.3)
        reference = _advance(state0, params, 1e-3, 1000)

        coarse = _advance(state0, params, 0.05, 20).plus(reference, -1.0).norm()
        fine = _advance(state0, params, 0.025, 40).plus(reference, -1.0).norm()

        self.assert_true(10.0 <= coarse / fine <= 22.0)

    def test_conservation(self):
        params = REFERENCE.with_epsilon(0.05)
        trajectory = integrate(LatticeState.random(6, np.random.default_rng(5), scale=0.3), params, 2.0, dt=1e-3)

        self.assert_true(trajectory.h_drift() < 1e-8)
        self.assert_true(trajectory.q_drift() < 1e-8)

    def test_sampling(self):
        trajectory = integrate(LatticeState.random(2, np.random.default_rng(1), scale=0.1), REFERENCE, 1.0,
                               dt=1e-2, sample_every=0.25)

        self.assert_close(trajectory.times(), [0.0, 0.25, 0.5, 0.75, 1.0], atol=1e-12)

    def test_stop_condition(self):
        trajectory = integrate(LatticeState.random(2, np.random.default_rng(1), scale=0.1), REFERENCE, 1.0,
                               dt=1e-2, sample_every=0.25, stop=lambda state, t: t > 0.49)

        self.assert_close(trajectory.times()[-1], 0.5, atol=1e-12)

    def test_rejects_step(self):
        with self.assertRaises(ValidationError):
            step_rk4(LatticeState.zeros(1), REFERENCE, 0.0)


class TestEnergyBounds(BaseTest):

    def test_positive_regime(self):
        params = Params(omega=0.75, gamma=0.5, epsilon=0.05)
        trajectory = integrate(LatticeState.random(6, np.random.default_rng(2), scale=0.3), params, 5.0, dt=1e-3)
        report = energy_bound_check(trajectory, params)

        self.assert_true(report.regime == 'positive')
        self.assert_true(report.holds)

    def test_small_data_in_the_negative_regime(self):
        params = Params(omega=-3.0, gamma=0.5, epsilon=0.05)
        state = LatticeState.random(6, np.random.default_rng(4), scale=0.05)
        trajectory = integrate(state, params, 5.0, dt=1e-3)
        report = energy_bound_check(trajectory, params)

        self.assert_true(report.regime == 'negative')
        self.assert_true(report.holds)

    def test_no_regime(self):
        params = Params(omega=0.6, gamma=0.5, epsilon=0.05)
        trajectory = integrate(LatticeState.random(2, np.random.default_rng(4), scale=0.1), params, 0.1, dt=1e-3)

        self.assert_true(energy_bound_check(trajectory, params).regime is None)


class TestPTFlow(BaseTest):

    def test_defect_is_round_off(self):
        rng = np.random.default_rng(8)
        u = 0.3 * (rng.standard_normal(9) + 1j * rng.standard_normal(9))

        self.assert_true(pt_trajectory_check(LatticeState(4, u, np.conj(u)), REFERENCE.with_epsilon(0.05), 1.0) <= 1e-8)

    def test_rejects_asymmetric_data(self):
        with self.assertRaises(InvalidStateError):
            pt_trajectory_check(LatticeState.random(2, np.random.default_rng(0)), REFERENCE, 0.1)


class TestModulation(BaseTest):

    @classmethod
    def setUpClass(cls):
        cls.profile = solve_breather(REFERENCE.with_epsilon(0.05), n_half=8)

    def test_breather_itself(self):
        modstate = modulation_decompose(self.profile.state(), self.profile)

        self.assert_close(modstate.alpha, 0.0, atol=1e-12)
        self.assert_true(modstate.phi.norm() <= 1e-12)

    def test_recovers_the_phase(self):
        state = gauge_rotate(perturbed_breather(self.profile, 0.01, seed=2), -0.3)
        modstate = modulation_decompose(state, self.profile)

        self.assert_close(modstate.alpha, 0.3, atol=1e-10)
        self.assert_close(modstate.phi.norm(), 0.01, rtol=1e-9)
        self.assert_true(modstate.ortho_residual <= 1e-12)

    def test_far_from_the_orbit(self):
        with self.assertRaises(DecompositionError):
            modulation_decompose(perturbed_breather(self.profile, 0.5), self.profile, nu0=0.1)

    def test_perturbation_is_orthogonal(self):
        state = perturbed_breather(self.profile, 0.02, seed=4)
        phi = state.plus(self.profile.state(), -1.0)
        kernel = sigma_phi(self.profile.state()).entries

        self.assert_close(phi.norm(), 0.02, rtol=1e-12)
        self.assert_true(abs(np.vdot(to_extended(phi), kernel)) <= 1e-12)

    def test_rate_at_the_breather(self):
        modstate = modulation_decompose(self.profile.state(), self.profile)

        self.assert_close(alpha_dot_eval(self.profile, modstate), REFERENCE.e_freq, atol=1e-9)
        self.assert_close(alpha_dot_direct(self.profile.state(), self.profile, modstate), REFERENCE.e_freq, atol=1e-9)

    def test_rate_formulas_agree(self):
        state = gauge_rotate(perturbed_breather(self.profile, 0.05, seed=6), 1.1)
        modstate = modulation_decompose(state, self.profile)

        self.assert_close(
            alpha_dot_eval(self.profile, modstate),
            alpha_dot_direct(state, self.profile, modstate),
            rtol=1e-8,
        )

    def test_rate_matches_the_phase_drift(self):
        state0 = perturbed_breather(self.profile, 0.01, seed=9)
        dt = 1e-3
        before = modulation_decompose(_advance(state0, self.profile.params, dt, 100), self.profile)
        after = modulation_decompose(_advance(state0, self.profile.params, dt, 102), self.profile)
        measured = (np.angle(np.exp(1j * (after.alpha - before.alpha)))) / (2.0 * dt)
        middle = modulation_decompose(_advance(state0, self.profile.params, dt, 101), self.profile)

        self.assert_close(alpha_dot_eval(self.profile, middle), measured, rtol=1e-5)

    def test_rate_deviation_is_linear_in_delta(self):
        def deviation(delta: float) -> float:
            state0 = perturbed_breather(self.profile, delta, seed=3)
            trajectory = integrate(state0, self.profile.params, 2.0, dt=1e-3, sample_every=0.1, keep_states=True)
            rates = [alpha_dot_eval(self.profile, modulation_decompose(state, self.profile))
                     for state in trajectory.states]
            return float(np.max(np.abs(np.array(rates) - REFERENCE.e_freq)))

        self.assert_close(deviation(0.01) / deviation(0.005), 2.0, rtol=0.1)


class TestMetastability(BaseTest):

    def test_scaling_fit(self):
        epsilons = [0.04, 0.02, 0.01, 0.005]
        times = [3.0 * eps ** -0.5 * (1.0 + 0.01 * (-1) ** i) for i, eps in enumerate(epsilons)]
        fit = fit_scaling_exponent(epsilons, times)

        self.assert_close(fit.exponent, -0.5, atol=0.02)
        self.assert_true(fit.ci_low < fit.exponent < fit.ci_high)

    def test_no_exit_without_coupling(self):
        self.assert_true(exit_time(REFERENCE, 0.01, 0.2, 2.0, n_half=4) == 2.0)

    def test_sweep_is_inconclusive_on_short_runs(self):
        report = metastability_sweep(REFERENCE, [0.0, 0.0], 0.01, 0.2, 1.0, n_half=4)
        document = report.to_dict()

        self.assert_true(report.inconclusive)
        self.assert_json(document, 't0_measured', [1.0, 1.0])
        self.assert_true(np.isnan(report.scaling_exponent))

    def test_censored_runs_give_no_exponent(self):
        report = metastability_sweep(REFERENCE, [0.04, 0.01], 0.01, 0.2, 1.0, n_half=4)

        self.assert_true(report.inconclusive)
        self.assert_true(np.isnan(report.scaling_exponent))
        self.assert_true(np.isnan(report.exponent_ci[0]) and np.isnan(report.exponent_ci[1]))

    def test_exits_past_the_pt_threshold(self):
        # omega - gamma - 4 eps < 0: the background is PT-broken and perturbations grow
        report = metastability_sweep(REFERENCE, [0.08, 0.1], 0.01, 0.2, 200.0, n_half=8)

        self.assert_false(report.inconclusive)
        self.assert_true(bool(np.all(report.t0_measured < 200.0)))
        self.assert_true(np.isfinite(report.scaling_exponent))

    def test_sweep_rejects_large_delta(self):
        with self.assertRaises(InvalidStateError):
            metastability_sweep(REFERENCE, [0.01], 0.3, 0.2, 1.0)

    def test_delta_rate_without_coupling(self):
        profile = solve_breather(REFERENCE, n_half=4)
        state0 = perturbed_breather(profile, 0.01, seed=1)
        trajectory = integrate(state0, REFERENCE, 0.5, dt=1e-3, sample_every=0.05, keep_states=True)
        report = delta_rate_check(trajectory, profile, solve_correction(profile))

        self.assert_true(report.max_rate == 0.0)
        self.assert_true(report.c_e == 0.0)
        self.assert_true(float(np.max(np.abs(report.rate_fd))) <= 1e-8)

    def test_delta_rate_with_coupling(self):
        profile = solve_breather(REFERENCE.with_epsilon(0.02), n_half=8)
        state0 = perturbed_breather(profile, 0.01, seed=1)
        trajectory = integrate(state0, profile.params, 0.5, dt=1e-3, sample_every=0.05, keep_states=True)
        report = delta_rate_check(trajectory, profile, solve_correction(profile))

        self.assert_true(report.c_e > 0.0)
        self.assert_true(report.gronwall['epsilon'])
        self.assert_true(report.gronwall['sqrt_epsilon'])
        self.assert_true(report.phi_tilde_size > 0.0)
        self.assert_close(report.delta[0], 0.0, atol=2e-3)

    def test_delta_rate_needs_states(self):
        profile = solve_breather(REFERENCE, n_half=2)
        trajectory = integrate(profile.state(), REFERENCE, 0.1, dt=1e-3)

        with self.assertRaises(InvalidStateError):
            delta_rate_check(trajectory, profile, solve_correction(profile))
