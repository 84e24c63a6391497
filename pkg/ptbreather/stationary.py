"""Dimer branch, breather continuation in epsilon, the near-identity correction and the
expansion of the Lyapunov difference.
"""
import logging
from dataclasses import dataclass, field
from math import atan2, sqrt, cos, sin
from typing import Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import brentq, newton

from ptbreather.decorators import validate
from ptbreather.exceptions import (
    ContinuationError,
    NearBifurcationError,
    NoRealSolutionError,
    OutOfBranchError,
    UnsupportedBranchError,
)
from ptbreather.enums import HessianKind
from ptbreather.lattice_core import LatticeState, Params, hessian_at, lambda_e, laplacian, to_extended
from ptbreather.utils import trans

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_EPS_MAX = 0.2
NEAR_BIFURCATION_TOL = 1e-8


@dataclass(frozen=True)
class DimerSolution:
    """The central dimer U_0 = A e^{i theta} at epsilon = 0."""
    amplitude: float
    theta: float
    e_freq: float

    @property
    def u0(self) -> complex:
        return self.amplitude * complex(cos(self.theta), sin(self.theta))


@dataclass(frozen=True, eq=False)
class BreatherProfile:
    """A converged stationary solution U; V = conj(U) is implied.
    """
    params: Params
    n_half: int
    u_profile: np.ndarray = field(repr=False)
    residual: float
    metadata: dict = field(default_factory=dict)

    def state(self) -> LatticeState:
        return LatticeState(self.n_half, self.u_profile, np.conj(self.u_profile))

    @property
    def center(self) -> int:
        return self.n_half

    def symmetry_defect(self) -> float:
        """max |U_{-n} - U_n|."""
        return float(np.max(np.abs(self.u_profile - self.u_profile[::-1])))

    def decay_constant(self) -> float:
        """max over n != 0 of |U_n| / epsilon^|n|, the fitted constant of the decay bound.
        """
        eps = self.params.epsilon
        if eps == 0.0:
            return 0.0

        n = np.abs(np.arange(-self.n_half, self.n_half + 1))
        mask = n > 0
        return float(np.max(np.abs(self.u_profile[mask]) / eps ** n[mask]))


@dataclass(frozen=True, eq=False)
class CorrectionTerm:
    """The correction a with b = conj(a), removing the linear part of the Lyapunov difference.
    """
    a_profile: np.ndarray = field(repr=False)
    residual: float
    metadata: dict = field(default_factory=dict)

    def state(self) -> LatticeState:
        """rho as a two-component perturbation (a, conj(a))."""
        n_half = (self.a_profile.size - 1) // 2
        return LatticeState(n_half, self.a_profile, np.conj(self.a_profile))

    def bound_constants(self, epsilon: float) -> Tuple[float, float]:
        """(|a_0| / eps^2, max_{n != 0} |a_n| / eps^|n|)."""
        if epsilon == 0.0:
            return 0.0, 0.0

        n_half = (self.a_profile.size - 1) // 2
        n = np.abs(np.arange(-n_half, n_half + 1))
        mask = n > 0
        center = abs(self.a_profile[n_half]) / epsilon ** 2
        return float(center), float(np.max(np.abs(self.a_profile[mask]) / epsilon ** n[mask]))


@dataclass(frozen=True)
class ExpansionTerms:
    n1: float
    n2: float
    n3: float
    n4: float
    delta: float

    def total(self) -> float:
        return self.n1 + self.n2 + self.n3 + self.n4


@dataclass(frozen=True)
class RewrittenExpansion:
    """The difference split around Phi + rho: delta = delta0 + d1 + d2 + d3 + d4 in powers of phi_tilde.

    d1 vanishes because rho removes the linear part.
    """
    delta0: float
    d1: float
    d2: float
    d3: float
    d4: float


def e0(params: Params) -> float:
    """sqrt(omega^2 - gamma^2).

    Raises:
        DomainError -- |omega| <= gamma.
    """
    return params.e0


def dimer_branch_e(amplitude: float, params: Params) -> float:
    """The nonnegative E on the dimer branch through amplitude A.

    Raises:
        NoRealSolutionError
    """
    if amplitude < 0:
        raise NoRealSolutionError(trans('en.lattice.rejected_amplitude', attributes={'amplitude': amplitude}))

    inner = params.omega + 4.0 * amplitude ** 2

    if inner == 0.0 or abs(params.gamma) > abs(inner):
        raise NoRealSolutionError(
            trans('en.lattice.no_real_solution', attributes={'amplitude': amplitude}),
            details={'amplitude': amplitude, 'omega': params.omega, 'gamma': params.gamma}
        )

    return abs(params.omega + 8.0 * amplitude ** 2) * sqrt(1.0 - (params.gamma / inner) ** 2)


def _branch_gap(amplitude: float, params: Params, target_sq: float) -> float:
    outer = params.omega + 8.0 * amplitude ** 2
    inner = params.omega + 4.0 * amplitude ** 2
    return outer ** 2 * (1.0 - (params.gamma / inner) ** 2) - target_sq


def _branch_gap_prime(amplitude: float, params: Params, target_sq: float) -> float:
    outer = params.omega + 8.0 * amplitude ** 2
    inner = params.omega + 4.0 * amplitude ** 2
    return 16.0 * amplitude * outer * (2.0 - params.gamma ** 2 * params.omega / inner ** 3)


def branch_theta(amplitude: float, params: Params, e_freq: float) -> float:
    """The phase with sin(2 theta) = gamma / (omega + 4A^2) and cos(2 theta) = E / (omega + 8A^2)."""
    return 0.5 * atan2(
        params.gamma / (params.omega + 4.0 * amplitude ** 2),
        e_freq / (params.omega + 8.0 * amplitude ** 2)
    )


def dimer_solve(params: Params) -> DimerSolution:
    """Invert the branch relation for the amplitude at frequency params.e_freq.

    Supports omega > gamma and |E| > E0. theta lies in [0, pi/2) with
    sin(2 theta) >= 0 and sign(cos 2 theta) = sign(E).

    Raises:
        UnsupportedBranchError -- omega < -gamma.
        DomainError -- |omega| <= gamma.
        OutOfBranchError -- |E| <= E0.
    """
    if params.omega < -params.gamma:
        raise UnsupportedBranchError(
            trans('en.lattice.unsupported_branch', attributes={'omega': params.omega, 'gamma': params.gamma})
        )

    band_edge = params.e0
    e_freq = params.e_freq

    if abs(e_freq) <= band_edge:
        raise OutOfBranchError(
            trans('en.lattice.out_of_branch', attributes={'e_freq': e_freq, 'e0': band_edge}),
            details={'e_freq': e_freq, 'e0': band_edge}
        )

    target_sq = e_freq ** 2
    upper = 1.0
    while _branch_gap(upper, params, target_sq) < 0.0:
        upper *= 2.0

    amplitude = brentq(_branch_gap, 0.0, upper, args=(params, target_sq), xtol=1e-15, rtol=4.0 * np.finfo(float).eps)

    if amplitude > 0.0:
        amplitude = newton(
            _branch_gap, amplitude, fprime=_branch_gap_prime, args=(params, target_sq), tol=1e-15, maxiter=20, disp=False
        )

    theta = branch_theta(amplitude, params, e_freq)
    logger.debug('dimer: A=%.15g theta=%.15g at E=%.15g', amplitude, theta, e_freq)

    return DimerSolution(amplitude=float(amplitude), theta=float(theta), e_freq=e_freq)


def offsite_jacobian_eigenvalues(params: Params) -> Tuple[float, float]:
    """E - E0 and E + E0, the eigenvalues of the decoupled off-centre linearization."""
    band_edge = params.e0
    return params.e_freq - band_edge, params.e_freq + band_edge


def central_jacobian(params: Params, dimer: DimerSolution) -> np.ndarray:
    """The 2x2 Jacobian of the central-site equation at U_0 = A e^{i theta}, epsilon = 0."""
    u0 = dimer.u0
    diagonal = -6.0 * (u0 ** 2 + np.conj(u0) ** 2)
    off = -params.omega - 12.0 * abs(u0) ** 2
    return np.array([
        [params.e_freq - 1j * params.gamma + diagonal, off],
        [off, params.e_freq + 1j * params.gamma + diagonal],
    ])


def predicted_decay_rate(params: Params) -> float:
    """epsilon times the dominant eigenvalue modulus of the off-site transfer map.

    Far from the centre the stationary equation linearizes to
    (E - i gamma) U_n - (omega - 2 eps) conj(U_n) = eps conj(U_{n-1}),
    so |U_n| / |U_{n-1}| tends to eps * |mu| for the dominant eigenvalue mu of
    the real-linear map W -> M^{-1} conj(W).
    """
    shifted = params.omega - 2.0 * params.epsilon
    matrix = np.array([
        [params.e_freq - shifted, params.gamma],
        [-params.gamma, params.e_freq + shifted],
    ])
    transfer = np.linalg.solve(matrix, np.diag([1.0, -1.0]))
    return params.epsilon * float(np.max(np.abs(np.linalg.eigvals(transfer))))


def _euler_lagrange(u: np.ndarray, params: Params, e_weights: np.ndarray) -> np.ndarray:
    """eps Lap(conj u) + i gamma u + omega conj u + 6|u|^2 conj u + 2 u^3 - e_weights * u."""
    conj_u = np.conj(u)
    return (
        params.epsilon * laplacian(conj_u)
        + 1j * params.gamma * u
        + params.omega * conj_u
        + 6.0 * np.abs(u) ** 2 * conj_u
        + 2.0 * u ** 3
        - e_weights * u
    )


def _real_jacobian(u: np.ndarray, params: Params, e_weights: np.ndarray) -> np.ndarray:
    """Jacobian of the residual on the split (Re u, Im u).

    dF = A du + B d(conj u), A diagonal, B = eps L + diag(omega + 12|u|^2).
    """
    size = u.size
    a_diag = -e_weights + 1j * params.gamma + 6.0 * (u ** 2 + np.conj(u) ** 2)
    b_matrix = params.epsilon * (
        np.diag(np.full(size, -2.0)) + np.diag(np.ones(size - 1), 1) + np.diag(np.ones(size - 1), -1)
    ) + np.diag(params.omega + 12.0 * np.abs(u) ** 2)

    a_matrix = np.diag(a_diag)
    plus = a_matrix + b_matrix
    minus = a_matrix - b_matrix

    return np.block([
        [plus.real, -minus.imag],
        [plus.imag, minus.real],
    ])


def _newton(seed: np.ndarray, params: Params, e_weights: np.ndarray, tol: float, max_iter: int) -> Tuple[np.ndarray, float, int]:
    """Newton iteration on the real-imaginary split.

    Returns:
        Tuple[np.ndarray, float, int] -- The iterate, its residual and the iteration count.

    Raises:
        ContinuationError -- No convergence within max_iter.
        NearBifurcationError -- Singular Jacobian.
    """
    u = np.array(seed, dtype=complex)
    size = u.size
    residual = float(np.max(np.abs(_euler_lagrange(u, params, e_weights))))

    for iteration in range(1, max_iter + 1):
        if residual <= tol:
            return u, residual, iteration - 1

        value = _euler_lagrange(u, params, e_weights)

        try:
            step = linalg.solve(_real_jacobian(u, params, e_weights), -np.concatenate([value.real, value.imag]))

        except linalg.LinAlgError as e:
            raise NearBifurcationError(
                trans('en.lattice.near_bifurcation', attributes={'e_freq': params.e_freq, 'e0': params.e0}),
                details={'epsilon': params.epsilon}
            ) from e

        u = u + step[:size] + 1j * step[size:]
        residual = float(np.max(np.abs(_euler_lagrange(u, params, e_weights))))
        logger.debug('newton eps=%.6g iteration=%d residual=%.3e', params.epsilon, iteration, residual)

        if not np.isfinite(residual) or residual > 1e6:
            break

    if residual <= tol:
        return u, residual, max_iter

    raise ContinuationError(
        trans('en.lattice.continuation', attributes={'epsilon': params.epsilon, 'residual': residual}),
        details={'epsilon': params.epsilon, 'residual': residual}
    )


def stationary_residual(profile_u: np.ndarray, params: Params) -> np.ndarray:
    """The defect of the stationary PT-reduced equation at every site."""
    return _euler_lagrange(profile_u, params, np.full(profile_u.size, params.e_freq))


def _check_away_from_band_edge(params: Params) -> None:
    lower, upper = offsite_jacobian_eigenvalues(params)

    if min(abs(lower), abs(upper)) < NEAR_BIFURCATION_TOL * (1.0 + abs(params.e_freq)):
        raise NearBifurcationError(
            trans('en.lattice.near_bifurcation', attributes={'e_freq': params.e_freq, 'e0': params.e0}),
            details={'e_freq': params.e_freq, 'e0': params.e0}
        )


@validate(n_half='required|integer|min:0', tol='required|numeric|gt:0', eps_max='required|numeric|min:0')
def solve_breather(params: Params, n_half: int = 20, tol: float = DEFAULT_TOL, eps_max: float = DEFAULT_EPS_MAX,
                   max_iter: int = 50) -> BreatherProfile:
    """Continue the central dimer to coupling params.epsilon by Newton's method.

    Direct Newton from the epsilon = 0 seed first; on failure, epsilon is
    stepped geometrically from 0 with step halving.

    Raises:
        ContinuationError
        NearBifurcationError
        OutOfBranchError, UnsupportedBranchError, DomainError -- from the dimer solve.
    """
    if params.e0 > 0.0 and abs(abs(params.e_freq) - params.e0) < NEAR_BIFURCATION_TOL * (1.0 + abs(params.e_freq)):
        raise NearBifurcationError(
            trans('en.lattice.near_bifurcation', attributes={'e_freq': params.e_freq, 'e0': params.e0})
        )

    dimer = dimer_solve(params)
    _check_away_from_band_edge(params)

    if params.epsilon > eps_max:
        raise ContinuationError(
            trans('en.lattice.continuation', attributes={'epsilon': params.epsilon, 'residual': 'n/a'}),
            details={'epsilon': params.epsilon, 'eps_max': eps_max}
        )

    size = 2 * n_half + 1
    seed = np.zeros(size, dtype=complex)
    seed[n_half] = dimer.u0
    e_weights = np.full(size, params.e_freq)
    steps = 0

    if params.epsilon == 0.0:
        u, residual, iterations = seed, float(np.max(np.abs(stationary_residual(seed, params)))), 0

    else:
        try:
            u, residual, iterations = _newton(seed, params, e_weights, tol, max_iter)

        except ContinuationError:
            logger.info('direct Newton failed at eps=%.6g, stepping in epsilon', params.epsilon)
            u, residual, iterations, steps = _step_in_epsilon(seed, params, e_weights, tol, max_iter)

    jacobian = central_jacobian(params, dimer)
    metadata = {
        'solver': 'newton',
        'iterations': int(iterations),
        'continuation_steps': int(steps),
        'tol': tol,
        'dimer_amplitude': dimer.amplitude,
        'dimer_theta': dimer.theta,
        'central_jacobian_det': float(abs(np.linalg.det(jacobian))),
    }
    logger.info('breather eps=%.6g N=%d residual=%.3e iterations=%d', params.epsilon, n_half, residual, iterations)

    return BreatherProfile(params=params, n_half=n_half, u_profile=_frozen(u), residual=residual, metadata=metadata)


def _step_in_epsilon(seed: np.ndarray, params: Params, e_weights: np.ndarray, tol: float, max_iter: int):
    target = params.epsilon
    current_eps = 0.0
    current_u = seed
    step = target / 2.0
    steps = 0
    residual, iterations = 0.0, 0

    while current_eps < target:
        trial_eps = min(target, current_eps + step)

        try:
            current_u, residual, iterations = _newton(current_u, params.with_epsilon(trial_eps), e_weights, tol, max_iter)
            current_eps = trial_eps
            steps += 1
            step *= 2.0

        except ContinuationError:
            step /= 2.0

            if step < 1e-6 * target:
                raise

    return current_u, residual, iterations, steps


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex, copy=True)
    array.setflags(write=False)
    return array


def fit_decay_rate(profile: BreatherProfile, n_min: int = 2, n_max: int = 6) -> Tuple[float, float]:
    """Least-squares slope and intercept of log|U_n| against |n| over n_min <= |n| <= n_max.

    exp(slope) is the geometric decay rate.
    """
    n = np.arange(-profile.n_half, profile.n_half + 1)
    mask = (np.abs(n) >= n_min) & (np.abs(n) <= n_max)
    slope, intercept = np.polyfit(np.abs(n[mask]), np.log(np.abs(profile.u_profile[mask])), 1)
    return float(slope), float(intercept)


@validate(tol='required|numeric|gt:0')
def solve_correction(profile: BreatherProfile, tol: float = DEFAULT_TOL, max_iter: int = 50) -> CorrectionTerm:
    """Solve for the correction a that makes Phi + rho critical for the Lyapunov function.

    u = U + a solves the Euler-Lagrange equation of Lambda_E under v = conj(u);
    the frequency enters only at the central site.

    Raises:
        ContinuationError
        NearBifurcationError
    """
    params = profile.params
    size = profile.u_profile.size
    e_weights = np.zeros(size)
    e_weights[profile.center] = params.e_freq

    if params.epsilon == 0.0:
        return CorrectionTerm(a_profile=_frozen(np.zeros(size)), residual=0.0, metadata={'iterations': 0})

    u, residual, iterations = _newton(profile.u_profile, params, e_weights, tol, max_iter)
    a = u - profile.u_profile
    c_center, c_tail = CorrectionTerm(a_profile=_frozen(a), residual=residual).bound_constants(params.epsilon)
    logger.info('correction eps=%.6g |a0|/eps^2=%.4g tail constant=%.4g', params.epsilon, c_center, c_tail)

    return CorrectionTerm(
        a_profile=_frozen(a),
        residual=residual,
        metadata={'iterations': int(iterations), 'center_constant': c_center, 'tail_constant': c_tail}
    )


def delta_of(profile: BreatherProfile, phi: LatticeState, params: Optional[Params] = None) -> float:
    """Lambda_E(Phi + phi) - Lambda_E(Phi)."""
    params = params or profile.params
    base = profile.state()
    return lambda_e(base.plus(phi), params) - lambda_e(base, params)


def linear_term(profile: BreatherProfile, phi: LatticeState, params: Optional[Params] = None) -> float:
    """E sum_{n != 0} (conj(V_n) u_n + V_n conj(u_n) + conj(U_n) v_n + U_n conj(v_n))."""
    params = params or profile.params
    big_u = profile.u_profile
    big_v = np.conj(big_u)
    terms = np.conj(big_v) * phi.u + big_v * np.conj(phi.u) + np.conj(big_u) * phi.v + big_u * np.conj(phi.v)
    mask = np.ones(terms.size, dtype=bool)
    mask[profile.center] = False
    return float(params.e_freq * np.real(np.sum(terms[mask])))


def quadratic_term(profile: BreatherProfile, phi: LatticeState, params: Optional[Params] = None) -> float:
    """Half the extended Hessian form plus the off-centre frequency cross term."""
    params = params or profile.params
    hessian = hessian_at(profile.state(), params, HessianKind.EXTENDED)
    vector = to_extended(phi)
    form = 0.5 * np.real(np.vdot(vector, hessian @ vector))

    cross = phi.u * np.conj(phi.v) + np.conj(phi.u) * phi.v
    mask = np.ones(cross.size, dtype=bool)
    mask[profile.center] = False
    return float(form + params.e_freq * np.real(np.sum(cross[mask])))


def expansion_terms(profile: BreatherProfile, phi: LatticeState, params: Optional[Params] = None) -> ExpansionTerms:
    """The linear, quadratic, cubic and quartic parts of the Lyapunov difference at phi.

    The cubic and quartic parts come from the remainder R(s) = Delta(s phi) - s N1 - s^2 N2
    sampled at s = +1 and s = -1.
    """
    params = params or profile.params
    n1 = linear_term(profile, phi, params)
    n2 = quadratic_term(profile, phi, params)
    delta_plus = delta_of(profile, phi, params)
    delta_minus = delta_of(profile, phi.scaled(-1.0), params)

    remainder_plus = delta_plus - n1 - n2
    remainder_minus = delta_minus + n1 - n2

    return ExpansionTerms(
        n1=n1,
        n2=n2,
        n3=0.5 * (remainder_plus - remainder_minus),
        n4=0.5 * (remainder_plus + remainder_minus),
        delta=delta_plus,
    )


def delta_zero(profile: BreatherProfile, correction: CorrectionTerm, params: Optional[Params] = None) -> float:
    """The phi_tilde-independent constant N1(rho) + N2(rho) + N3(rho) + N4(rho)."""
    return expansion_terms(profile, correction.state(), params).total()


def perturbation_split(phi: LatticeState, correction: CorrectionTerm) -> LatticeState:
    """phi_tilde = phi - rho."""
    return phi.plus(correction.state(), scale=-1.0)


def rewritten_expansion(profile: BreatherProfile, correction: CorrectionTerm, phi_tilde: LatticeState,
                        params: Optional[Params] = None) -> RewrittenExpansion:
    """Expand Delta(phi_tilde + rho) in powers of phi_tilde.

    The polynomial D(s) = Delta(s phi_tilde + rho) - Delta0 is sampled at
    s = +-1, +-2; odd and even parts give the four coefficients exactly.
    """
    params = params or profile.params
    rho = correction.state()
    delta0 = delta_of(profile, rho, params)

    def shifted(s: float) -> float:
        return delta_of(profile, rho.plus(phi_tilde, scale=s), params) - delta0

    odd_1 = 0.5 * (shifted(1.0) - shifted(-1.0))
    odd_2 = 0.5 * (shifted(2.0) - shifted(-2.0))
    even_1 = 0.5 * (shifted(1.0) + shifted(-1.0))
    even_2 = 0.5 * (shifted(2.0) + shifted(-2.0))

    d3 = (odd_2 - 2.0 * odd_1) / 6.0
    d4 = (even_2 - 4.0 * even_1) / 12.0

    return RewrittenExpansion(delta0=delta0, d1=odd_1 - d3, d2=even_1 - d4, d3=d3, d4=d4)
