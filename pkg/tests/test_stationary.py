from math import log, sqrt

import numpy as np

from ptbreather import LatticeState, Params
from ptbreather.exceptions import NoRealSolutionError, OutOfBranchError, UnsupportedBranchError, ValidationError
from ptbreather.lattice_core import lambda_e
from ptbreather.stationary import (
    branch_theta,
    central_jacobian,
    delta_of,
    delta_zero,
    dimer_branch_e,
    dimer_solve,
    expansion_terms,
    fit_decay_rate,
    offsite_jacobian_eigenvalues,
    perturbation_split,
    predicted_decay_rate,
    quadratic_term,
    rewritten_expansion,
    solve_breather,
    solve_correction,
    stationary_residual,
)
from tests import BaseTest

REFERENCE = Params(omega=0.75, gamma=0.5, e_freq=2.635366)


def _random_perturbation(n_half: int, seed: int) -> LatticeState:
    rng = np.random.default_rng(seed)
    state = LatticeState.random(n_half, rng)
    return state.scaled(1.0 / state.norm())


class TestDimerBranch(BaseTest):

    def test_band_edge(self):
        self.assert_close(dimer_branch_e(0.0, REFERENCE), sqrt(5.0) / 4.0)

    def test_reference_point(self):
        self.assert_close(dimer_branch_e(0.5, REFERENCE), 2.635366, atol=1e-6, rtol=0.0)

    def test_reference_solution(self):
        solution = dimer_solve(REFERENCE)

        self.assert_close(solution.amplitude, 0.5, atol=1e-6, rtol=0.0)
        self.assert_close(solution.theta, 0.144870, atol=1e-5, rtol=0.0)

    def test_round_trip(self):
        for amplitude in np.linspace(0.01, 2.0, 40):
            solution = dimer_solve(REFERENCE.with_e_freq(dimer_branch_e(amplitude, REFERENCE)))

            self.assert_close(solution.amplitude, amplitude, atol=1e-9, rtol=0.0)

    def test_branch_is_monotone(self):
        values = [dimer_branch_e(a, REFERENCE) for a in np.linspace(0.0, 2.0, 101)]

        self.assert_true(bool(np.all(np.diff(values) > 0.0)))

    def test_negative_frequency_phase(self):
        solution = dimer_solve(REFERENCE.with_e_freq(-2.635366))

        self.assert_close(solution.amplitude, 0.5, atol=1e-6, rtol=0.0)
        self.assert_true(np.cos(2.0 * solution.theta) < 0.0 <= np.sin(2.0 * solution.theta))

    def test_theta_relations(self):
        amplitude = 0.8
        e_freq = dimer_branch_e(amplitude, REFERENCE)
        theta = branch_theta(amplitude, REFERENCE, e_freq)

        self.assert_close(np.sin(2.0 * theta), 0.5 / (0.75 + 4.0 * amplitude ** 2))
        self.assert_close(np.cos(2.0 * theta), e_freq / (0.75 + 8.0 * amplitude ** 2))

    def test_dimer_is_stationary(self):
        solution = dimer_solve(REFERENCE)
        u = np.array([solution.u0])

        self.assert_true(float(np.max(np.abs(stationary_residual(u, REFERENCE)))) <= 1e-12)

    def test_out_of_branch(self):
        with self.assertRaises(OutOfBranchError):
            dimer_solve(REFERENCE.with_e_freq(0.5))

    def test_unsupported_branch(self):
        with self.assertRaises(UnsupportedBranchError):
            dimer_solve(Params(omega=-3.0, gamma=0.5, e_freq=4.0))

    def test_no_real_solution(self):
        with self.assertRaises(NoRealSolutionError):
            dimer_branch_e(-0.1, REFERENCE)

        with self.assertRaises(NoRealSolutionError):
            dimer_branch_e(0.1, Params(omega=-0.5, gamma=0.6))

    def test_jacobians(self):
        lower, upper = offsite_jacobian_eigenvalues(REFERENCE)
        jacobian = central_jacobian(REFERENCE, dimer_solve(REFERENCE))

        self.assert_close([lower, upper], [2.635366 - sqrt(5.0) / 4.0, 2.635366 + sqrt(5.0) / 4.0])
        self.assert_true(abs(np.linalg.det(jacobian)) > 1e-3)


class TestBreather(BaseTest):

    @classmethod
    def setUpClass(cls):
        cls.params = REFERENCE.with_epsilon(0.05)
        cls.profile = solve_breather(cls.params, n_half=20)

    def test_residual(self):
        residual = float(np.max(np.abs(stationary_residual(self.profile.u_profile, self.params))))

        self.assert_true(self.profile.residual <= 1e-12)
        self.assert_true(residual <= 1e-12)

    def test_symmetry(self):
        self.assert_true(self.profile.symmetry_defect() <= 1e-12)
        self.assert_true(self.profile.state().is_pt_symmetric())

    def test_decay_rate(self):
        slope, _ = fit_decay_rate(self.profile)
        predicted = log(predicted_decay_rate(self.params))

        self.assert_true(abs(slope - predicted) <= 0.1 * abs(predicted))
        self.assert_true(slope <= log(self.params.epsilon))

    def test_metadata(self):
        self.assert_json(self.profile.metadata, {'solver': 'newton', 'tol': 1e-12})
        self.assert_close(self.profile.metadata['dimer_amplitude'], 0.5, atol=1e-6, rtol=0.0)

    def test_anti_continuum_limit(self):
        profile = solve_breather(REFERENCE, n_half=3)

        self.assert_true(profile.residual <= 1e-12)
        self.assert_true(float(np.max(np.abs(np.delete(profile.u_profile, 3)))) == 0.0)

    def test_truncation_does_not_move_the_core(self):
        direct = solve_breather(REFERENCE.with_epsilon(0.02), n_half=10)
        padded = solve_breather(REFERENCE.with_epsilon(0.02), n_half=12)

        self.assert_close(padded.u_profile[2:-2], direct.u_profile, atol=1e-12, rtol=0.0)

    def test_rejects_bad_arguments(self):
        with self.assertRaises(ValidationError):
            solve_breather(self.params, n_half=-1)

        with self.assertRaises(ValidationError):
            solve_breather(self.params, tol=0.0)


class TestCorrection(BaseTest):

    def test_zero_coupling(self):
        correction = solve_correction(solve_breather(REFERENCE, n_half=5))

        self.assert_true(float(np.max(np.abs(correction.a_profile))) == 0.0)
        self.assert_json(correction.metadata, {'iterations': 0})

    def test_scaling_in_epsilon(self):
        coarse = solve_correction(solve_breather(REFERENCE.with_epsilon(0.02), n_half=10))
        fine = solve_correction(solve_breather(REFERENCE.with_epsilon(0.01), n_half=10))
        center = 10

        self.assert_true(coarse.residual <= 1e-12 and fine.residual <= 1e-12)
        ratio_center = abs(coarse.a_profile[center]) / abs(fine.a_profile[center])
        ratio_neighbour = abs(coarse.a_profile[center + 1]) / abs(fine.a_profile[center + 1])

        self.assert_close(ratio_center, 4.0, rtol=0.3)
        self.assert_close(ratio_neighbour, 2.0, rtol=0.3)

    def test_delta_zero_scales_with_epsilon_squared(self):
        ratios = []

        for epsilon in (0.02, 0.01):
            profile = solve_breather(REFERENCE.with_epsilon(epsilon), n_half=10)
            ratios.append(abs(delta_zero(profile, solve_correction(profile))))

        self.assert_true(3.0 <= ratios[0] / ratios[1] <= 5.3)

    def test_correction_is_pt_symmetric(self):
        correction = solve_correction(solve_breather(REFERENCE.with_epsilon(0.05), n_half=10))

        self.assert_true(correction.state().is_pt_symmetric(tol=1e-9))


class TestExpansion(BaseTest):

    @classmethod
    def setUpClass(cls):
        cls.profile = solve_breather(REFERENCE.with_epsilon(0.05), n_half=8)
        cls.phi = _random_perturbation(8, 11)

    def test_identity(self):
        terms = expansion_terms(self.profile, self.phi)

        self.assert_close(terms.total(), terms.delta, rtol=1e-12, atol=1e-12)
        self.assert_close(terms.delta, delta_of(self.profile, self.phi))

    def test_identity_over_random_perturbations(self):
        rng = np.random.default_rng(21)

        for index in range(100):
            phi = LatticeState.random(8, rng)
            phi = phi.scaled((1e-3, 1e-1, 1.0)[index % 3] / phi.norm())
            whole = expansion_terms(self.profile, phi)
            half = expansion_terms(self.profile, phi.scaled(0.5))

            scale = abs(whole.delta) + abs(whole.n1) + abs(whole.n2)
            self.assert_true(abs(whole.total() - whole.delta) <= 1e-10 * scale)

            for power, name in enumerate(('n1', 'n2', 'n3', 'n4'), start=1):
                value = getattr(whole, name)
                error = abs(value - 2.0 ** power * getattr(half, name))
                self.assert_true(error <= 1e-9 * abs(value) + 1e-12)

    def test_homogeneity(self):
        small = expansion_terms(self.profile, self.phi.scaled(0.5))
        large = expansion_terms(self.profile, self.phi)

        self.assert_close(large.n1, 2.0 * small.n1, rtol=1e-9, atol=1e-10)
        self.assert_close(large.n2, 4.0 * small.n2, rtol=1e-9, atol=1e-10)
        self.assert_close(large.n3, 8.0 * small.n3, rtol=1e-8, atol=1e-10)
        self.assert_close(large.n4, 16.0 * small.n4, rtol=1e-8, atol=1e-10)

    def test_quadratic_term_matches_second_difference(self):
        step = 1e-3
        even = delta_of(self.profile, self.phi.scaled(step)) + delta_of(self.profile, self.phi.scaled(-step))

        self.assert_close(even / (2.0 * step ** 2), quadratic_term(self.profile, self.phi), rtol=1e-5, atol=1e-5)

    def test_quartic_part_is_nonnegative(self):
        for seed in range(5):
            self.assert_true(expansion_terms(self.profile, _random_perturbation(8, seed)).n4 >= 0.0)

    def test_linear_part_vanishes_at_zero_coupling(self):
        profile = solve_breather(REFERENCE, n_half=8)

        self.assert_close(expansion_terms(profile, self.phi).n1, 0.0, atol=1e-12)

    def test_rewritten_expansion(self):
        correction = solve_correction(self.profile)
        phi_tilde = perturbation_split(self.phi.scaled(0.1), correction)
        rewritten = rewritten_expansion(self.profile, correction, phi_tilde)

        self.assert_close(rewritten.d1, 0.0, atol=1e-10)
        self.assert_close(rewritten.d4, expansion_terms(self.profile, phi_tilde).n4, rtol=1e-6, atol=1e-12)
        self.assert_close(rewritten.delta0, delta_zero(self.profile, correction), atol=1e-14)

        total = rewritten.delta0 + rewritten.d1 + rewritten.d2 + rewritten.d3 + rewritten.d4
        base = self.profile.state()
        self.assert_close(total, lambda_e(base.plus(self.phi.scaled(0.1)), self.profile.params)
                          - lambda_e(base, self.profile.params), rtol=1e-9, atol=1e-13)

    def test_split_restores_phi(self):
        correction = solve_correction(self.profile)
        phi_tilde = perturbation_split(self.phi, correction)

        self.assert_close(phi_tilde.plus(correction.state()).u, self.phi.u, atol=1e-15)
