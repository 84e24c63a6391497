"""Time integration, modulation of perturbed breathers and the metastability experiments.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import pi
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.optimize import newton

from ptbreather.decorators import validate
from ptbreather.exceptions import (
    BlowUpError,
    DecompositionError,
    DegenerateDecompositionError,
    InvalidStateError,
)
from ptbreather.lattice_core import (
    DiagnosticRecord,
    LatticeState,
    Params,
    _rhs_arrays,
    diagnose,
    hamiltonian_gradient,
    hessian_at,
    lambda_e,
    local_charge_flux,
    pt_apply,
    to_extended,
)
from ptbreather.spectral import sigma_phi, symplectic_matrix
from ptbreather.stationary import BreatherProfile, CorrectionTerm, perturbation_split, solve_breather
from ptbreather.utils import trans

logger = logging.getLogger(__name__)

DEFAULT_DT = 1e-3
DRIFT_TOL = 1e-8
SCAN_POINTS = 64
GRONWALL_MARGIN = 1.1


@dataclass(frozen=True, eq=False)
class Trajectory:
    records: List[DiagnosticRecord]
    dt: float
    t_end: float
    states: List[LatticeState] = field(default_factory=list, repr=False)

    def times(self) -> np.ndarray:
        return np.array([record.t for record in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(record, name) for record in self.records])

    def h_drift(self) -> float:
        """max |H(t) - H(0)| / (1 + |H(0)|)."""
        values = self.column('energy_h')
        return float(np.max(np.abs(values - values[0])) / (1.0 + abs(values[0])))

    def q_drift(self) -> float:
        values = self.column('charge_q')
        return float(np.max(np.abs(values - values[0])) / (1.0 + abs(values[0])))


@dataclass(frozen=True, eq=False)
class ModulationState:
    """psi = e^{-i alpha} (Phi + phi) with phi orthogonal to sigma Phi."""
    alpha: float
    phi: LatticeState = field(repr=False)
    ortho_residual: float


@dataclass(frozen=True, eq=False)
class DeltaRateReport:
    times: np.ndarray = field(repr=False)
    delta: np.ndarray = field(repr=False)
    rate_fd: np.ndarray = field(repr=False)
    rate_flux: np.ndarray = field(repr=False)
    envelope: np.ndarray = field(repr=False)
    c_e: float
    max_rate: float
    phi_tilde_size: float
    gronwall: Dict[str, bool]


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    intercept: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True, eq=False)
class MetastabilityReport:
    epsilons: np.ndarray = field(repr=False)
    delta_init: float
    nu_exit: float
    t0_measured: np.ndarray = field(repr=False)
    scaling_exponent: float
    exponent_ci: Tuple[float, float]
    t_max: float
    inconclusive: bool = False

    def to_dict(self) -> dict:
        return {
            'epsilons': [float(value) for value in self.epsilons],
            'delta_init': self.delta_init,
            'nu_exit': self.nu_exit,
            't0_measured': [float(value) for value in self.t0_measured],
            'scaling_exponent': self.scaling_exponent,
            'exponent_ci': [float(value) for value in self.exponent_ci],
            't_max': self.t_max,
            'inconclusive': self.inconclusive,
        }


@dataclass(frozen=True)
class EnergyBoundReport:
    """regime is 'positive' (omega > gamma + 4 eps), 'negative' (omega < -gamma) or None."""
    regime: Optional[str]
    max_ratio: float
    holds: bool


def _rk4_arrays(u: np.ndarray, v: np.ndarray, params: Params, dt: float):
    k1u, k1v = _rhs_arrays(u, v, params)
    k2u, k2v = _rhs_arrays(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v, params)
    k3u, k3v = _rhs_arrays(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v, params)
    k4u, k4v = _rhs_arrays(u + dt * k3u, v + dt * k3v, params)

    return (
        u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )


def _check_finite(u: np.ndarray, v: np.ndarray, t: float) -> None:
    if not np.isfinite(np.sum(np.abs(u)) + np.sum(np.abs(v))):
        raise BlowUpError(trans('en.lattice.blow_up', attributes={'t': t}), details={'t': t})


@validate(dt='required|numeric|gt:0')
def step_rk4(state: LatticeState, params: Params, dt: float, t: float = 0.0) -> LatticeState:
    """One classical Runge-Kutta step.

    Raises:
        BlowUpError -- non-finite result; the time stamp is t + dt.
    """
    u, v = _rk4_arrays(state.u, state.v, params, dt)
    _check_finite(u, v, t + dt)
    return LatticeState(state.n_half, u, v)


def default_dt(state: LatticeState, params: Params) -> float:
    """0.01 min(1, 1/|E|, 1/(|omega| + ||psi||^2)), capped at 1e-3."""
    scales = [1.0, 1.0 / (abs(params.omega) + state.norm_sq())]

    if params.e_freq != 0.0:
        scales.append(1.0 / abs(params.e_freq))

    return min(DEFAULT_DT, 0.01 * min(scales))


def _run(state0: LatticeState, params: Params, t_end: float, dt: float, sample_every: float,
         keep_states: bool, stop: Optional[Callable[[LatticeState, float], bool]]) -> Trajectory:
    n_steps = int(round(abs(t_end) / abs(dt)))
    stride = max(1, int(round(sample_every / abs(dt))))
    u, v = np.array(state0.u), np.array(state0.v)
    records = [diagnose(state0, params, 0.0)]
    states = [state0] if keep_states else []

    for step in range(1, n_steps + 1):
        u, v = _rk4_arrays(u, v, params, dt)
        t = step * dt
        _check_finite(u, v, t)

        if step % stride == 0 or step == n_steps:
            state = LatticeState(state0.n_half, u, v)
            records.append(diagnose(state, params, t))

            if keep_states:
                states.append(state)

            if stop is not None and stop(state, t):
                break

    return Trajectory(records=records, dt=dt, t_end=t_end, states=states)


@validate(t_end='required|numeric|min:0', sample_every='required|numeric|gt:0')
def integrate(state0: LatticeState, params: Params, t_end: float, dt: Optional[float] = None,
              sample_every: float = 0.1, keep_states: bool = False, drift_tol: Optional[float] = DRIFT_TOL,
              max_halvings: int = 3, stop: Optional[Callable[[LatticeState, float], bool]] = None) -> Trajectory:
    """Integrate from t = 0 to t_end with fixed-step RK4, recording diagnostics every `sample_every`.

    When the relative H-drift exceeds `drift_tol`, dt is halved and the run
    repeated, at most `max_halvings` times. `stop(state, t)` ends the run at
    a sample.

    Raises:
        BlowUpError
    """
    dt = default_dt(state0, params) if dt is None else dt

    if dt <= 0.0:
        raise InvalidStateError(trans('en.lattice.invalid_state', attributes={'reason': 'dt must be positive'}))

    trajectory = _run(state0, params, t_end, dt, sample_every, keep_states, stop)

    for _ in range(max_halvings):
        if drift_tol is None or trajectory.h_drift() <= drift_tol:
            break

        logger.warning('H drift %.3e above %.1e at dt=%.3g, halving dt', trajectory.h_drift(), drift_tol, dt)
        dt *= 0.5
        trajectory = _run(state0, params, t_end, dt, sample_every, keep_states, stop)

    logger.info('integrated to t=%.6g dt=%.3g H drift=%.3e Q drift=%.3e',
                trajectory.records[-1].t, dt, trajectory.h_drift(), trajectory.q_drift())
    return trajectory


def _overlap(state: LatticeState, profile: BreatherProfile) -> complex:
    """sum(conj(U) psi_u + conj(V) psi_v)."""
    big_u = profile.u_profile
    return complex(np.sum(np.conj(big_u) * state.u + big_u * state.v))


def _ortho_residual(phi: LatticeState, profile: BreatherProfile) -> float:
    """|<sigma Phi, phi>| on the extended space."""
    return float(abs(np.vdot(to_extended(phi), sigma_phi(profile.state()).entries)))


def modulation_decompose(state: LatticeState, profile: BreatherProfile, nu0: Optional[float] = None) -> ModulationState:
    """Find alpha with e^{i alpha} psi - Phi orthogonal to sigma Phi.

    The seed is the closest of 64 equally spaced phases; the scalar Newton
    solve runs on Im(e^{i alpha} c), c the overlap of psi with Phi.

    Raises:
        DecompositionError -- the closest orbit point is farther than nu0 or no root in the basin.
    """
    base = profile.state()
    overlap = _overlap(state, profile)
    phases = np.linspace(-pi, pi, SCAN_POINTS, endpoint=False)
    distances = [state.scaled(np.exp(1j * a)).plus(base, scale=-1.0).norm() for a in phases]
    nearest = int(np.argmin(distances))

    if nu0 is not None and distances[nearest] > nu0 or abs(overlap) == 0.0:
        raise DecompositionError(
            trans('en.lattice.decomposition', attributes={'distance': distances[nearest], 'limit': nu0}),
            details={'distance': float(distances[nearest])}
        )

    alpha = newton(
        lambda a: (np.exp(1j * a) * overlap).imag,
        phases[nearest],
        fprime=lambda a: (np.exp(1j * a) * overlap).real,
        tol=1e-15,
        maxiter=50,
        disp=False,
    )

    if (np.exp(1j * alpha) * overlap).real <= 0.0:
        raise DecompositionError(
            trans('en.lattice.decomposition', attributes={'distance': distances[nearest], 'limit': nu0}),
            details={'distance': float(distances[nearest]), 'alpha': float(alpha)}
        )

    alpha = float(np.angle(np.exp(1j * alpha)))
    phi = state.scaled(np.exp(1j * alpha)).plus(base, scale=-1.0)
    return ModulationState(alpha=alpha, phi=phi, ortho_residual=_ortho_residual(phi, profile))


def modulation_remainder(profile: BreatherProfile, phi: LatticeState, params: Optional[Params] = None) -> np.ndarray:
    """N(phi) = S [grad H_E(Phi + phi) - H''_E phi] on the extended space."""
    params = params or profile.params
    base = profile.state()
    gradient = hamiltonian_gradient(base.plus(phi), params, e_freq=params.e_freq).reshape(-1)
    linear = hessian_at(base, params) @ to_extended(phi)
    return symplectic_matrix(base.size) @ (gradient - linear)


def alpha_dot_eval(profile: BreatherProfile, modstate: ModulationState, params: Optional[Params] = None) -> float:
    """d(alpha)/dt from projecting the evolution onto sigma Phi.

    alpha' - E = [<H''_E S sigma Phi, phi> + <sigma Phi, N(phi)>] / [||Phi||^2 + <Phi, phi>]

    Raises:
        DegenerateDecompositionError -- the denominator is below 0.1 ||Phi||^2.
    """
    params = params or profile.params
    base = profile.state()
    kernel = sigma_phi(base).entries
    phi_ext = to_extended(modstate.phi)
    base_ext = to_extended(base)

    norm_sq = float(np.real(np.vdot(base_ext, base_ext)))
    denominator = norm_sq + float(np.real(np.vdot(phi_ext, base_ext)))

    if denominator < 0.1 * norm_sq:
        raise DegenerateDecompositionError(
            trans('en.lattice.degenerate_decomposition', attributes={'denominator': denominator, 'limit': 0.1 * norm_sq}),
            details={'denominator': denominator}
        )

    hessian = hessian_at(base, params)
    pairing = symplectic_matrix(base.size)
    numerator = np.vdot(phi_ext, hessian @ (pairing @ kernel)) + np.vdot(
        modulation_remainder(profile, modstate.phi, params), kernel
    )
    return params.e_freq + float(np.real(numerator)) / denominator


def alpha_dot_direct(state: LatticeState, profile: BreatherProfile, modstate: ModulationState,
                     params: Optional[Params] = None) -> float:
    """The same rate in two-component form: -Im sum(conj(Phi) F(w)) / Re sum(conj(Phi) w), w = e^{i alpha} psi."""
    params = params or profile.params
    w = state.scaled(np.exp(1j * modstate.alpha))
    du, dv = _rhs_arrays(w.u, w.v, params)
    big_u = profile.u_profile
    numerator = np.sum(np.conj(big_u) * du + big_u * dv)
    denominator = np.sum(np.conj(big_u) * w.u + big_u * w.v)
    return float(-numerator.imag / denominator.real)


def perturbed_breather(profile: BreatherProfile, delta: float, seed: int = 0) -> LatticeState:
    """Phi + phi with phi a fixed-seed complex Gaussian of norm delta orthogonal to sigma Phi."""
    rng = np.random.default_rng(seed)
    size = profile.u_profile.size
    phi = LatticeState(
        profile.n_half,
        rng.standard_normal(size) + 1j * rng.standard_normal(size),
        rng.standard_normal(size) + 1j * rng.standard_normal(size),
    )

    base = profile.state()
    twist = _overlap(phi, profile).imag / base.norm_sq()
    phi = phi.plus(base, scale=-1j * twist)
    return base.plus(phi.scaled(delta / phi.norm()))


def _near_centre_norms(phi_tilde: LatticeState) -> np.ndarray:
    return phi_tilde.site_norms()[phi_tilde.center - 1:phi_tilde.center + 2]


def _flux_envelope(phi_tilde: LatticeState, epsilon: float) -> float:
    norms = _near_centre_norms(phi_tilde)
    return epsilon * (epsilon + float(np.sum(norms)) + float(np.sum(norms ** 2)))


def delta_rate_check(trajectory: Trajectory, profile: BreatherProfile, correction: CorrectionTerm,
                     params: Optional[Params] = None) -> DeltaRateReport:
    """Compare dDelta/dt along a trajectory with the flux envelope and the linear-growth estimate.

    dDelta/dt is taken by finite differences of Lambda_E(psi(t)) and also
    from the exact balance -E * (local charge flux). C_E is the fitted
    constant max |dDelta/dt| / envelope.

    The linear-growth estimate C_E eps (eps + 3 s + 3 s^2) t is tested for
    s ~ eps and s ~ sqrt(eps). s is never taken below the measured
    max |phi_tilde_n(t)| over |n| <= 1, since rho alone puts O(eps)
    entries next to the centre.
    """
    params = params or profile.params
    if len(trajectory.states) < 3:
        raise InvalidStateError(trans('en.lattice.invalid_state', attributes={'reason': 'trajectory states not kept'}))

    times = np.array([record.t for record in trajectory.records])
    reference = lambda_e(profile.state(), params)
    delta = np.array([lambda_e(state, params) - reference for state in trajectory.states])
    rate_flux = np.array([-params.e_freq * local_charge_flux(state, params) for state in trajectory.states])
    rate_fd = np.gradient(delta, times)

    phi_tildes = [perturbation_split(modulation_decompose(state, profile).phi, correction)
                  for state in trajectory.states]
    envelope = np.array([_flux_envelope(phi_tilde, params.epsilon) for phi_tilde in phi_tildes])
    measured = max(float(np.max(_near_centre_norms(phi_tilde))) for phi_tilde in phi_tildes)

    scale = np.where(envelope > 0.0, envelope, 1.0)
    c_e = float(np.max(np.abs(rate_flux) / scale)) if params.epsilon > 0.0 else 0.0
    growth = np.abs(delta - delta[0])

    gronwall = {}
    for name, nominal in (('epsilon', params.epsilon), ('sqrt_epsilon', np.sqrt(params.epsilon))):
        size = max(nominal, measured)
        # the margin covers the envelope between samples
        bound = GRONWALL_MARGIN * c_e * params.epsilon * (params.epsilon + 3.0 * size + 3.0 * size ** 2) * times
        gronwall[name] = bool(np.all(growth <= bound + 1e-12 * (1.0 + np.abs(delta[0]))))

    return DeltaRateReport(
        times=times,
        delta=delta,
        rate_fd=rate_fd,
        rate_flux=rate_flux,
        envelope=envelope,
        c_e=c_e,
        max_rate=float(np.max(np.abs(rate_flux))),
        phi_tilde_size=measured,
        gronwall=gronwall,
    )


def energy_bound_check(trajectory: Trajectory, params: Params) -> EnergyBoundReport:
    """The global bound for omega > gamma + 4 eps and the small-data bound for omega < -gamma.

    positive: max (omega - gamma - 4 eps) ||psi(t)||^2 / H(0), holds when <= 1 + 1e-8;
    negative: max ||psi(t)||^2 / ||psi(0)||^2, holds when <= 2.
    """
    norm_sq = trajectory.column('norm_sq')

    if params.omega > params.gamma + 4.0 * params.epsilon:
        h0 = trajectory.records[0].energy_h
        ratio = float(np.max((params.omega - params.gamma - 4.0 * params.epsilon) * norm_sq) / h0) if h0 > 0 else 0.0
        return EnergyBoundReport(regime='positive', max_ratio=ratio, holds=ratio <= 1.0 + DRIFT_TOL)

    if params.omega < -params.gamma:
        ratio = float(np.max(norm_sq) / norm_sq[0]) if norm_sq[0] > 0 else 0.0
        return EnergyBoundReport(regime='negative', max_ratio=ratio, holds=ratio <= 2.0)

    return EnergyBoundReport(regime=None, max_ratio=float('nan'), holds=True)


def pt_trajectory_check(state0: LatticeState, params: Params, t_end: float, dt: float = DEFAULT_DT) -> float:
    """max over t of |psi(t) - PT psi(-t)| for PT-symmetric data v = conj(u).

    The forward and backward runs use the same fixed step.

    Raises:
        InvalidStateError -- state0 is not PT-symmetric.
    """
    scale = 1.0 + float(np.max(np.abs(state0.u)))
    if np.max(np.abs(state0.v - np.conj(state0.u))) > 1e-10 * scale:
        raise InvalidStateError(trans('en.lattice.invalid_state', attributes={'reason': 'initial data is not PT-symmetric'}))

    u_fwd, v_fwd = np.array(state0.u), np.array(state0.v)
    u_bwd, v_bwd = np.array(state0.u), np.array(state0.v)
    defect = 0.0

    for _ in range(int(round(t_end / dt))):
        u_fwd, v_fwd = _rk4_arrays(u_fwd, v_fwd, params, dt)
        u_bwd, v_bwd = _rk4_arrays(u_bwd, v_bwd, params, -dt)
        image = pt_apply(LatticeState(state0.n_half, u_bwd, v_bwd), conjugate=True)
        defect = max(defect, float(np.max(np.abs(u_fwd - image.u))), float(np.max(np.abs(v_fwd - image.v))))

    return defect


def fit_scaling_exponent(epsilons: Sequence[float], times: Sequence[float]) -> ScalingFit:
    """Slope of log t0 against log eps with a 95% confidence interval."""
    x = np.log(np.asarray(epsilons, dtype=float))
    y = np.log(np.asarray(times, dtype=float))
    result = stats.linregress(x, y)

    if x.size < 3:
        return ScalingFit(float(result.slope), float(result.intercept), float('nan'), float('nan'))

    half_width = float(stats.t.ppf(0.975, x.size - 2) * result.stderr)
    return ScalingFit(float(result.slope), float(result.intercept),
                      float(result.slope - half_width), float(result.slope + half_width))


def exit_time(params: Params, delta: float, nu_exit: float, t_max: float, n_half: int = 20,
              dt: Optional[float] = None, seed: int = 0, sample_every: float = 0.5) -> float:
    """First sampled time with ||phi(t)|| > nu_exit, or t_max."""
    profile = solve_breather(params, n_half=n_half)
    state0 = perturbed_breather(profile, delta, seed)
    exits = []

    def leaves(state: LatticeState, t: float) -> bool:
        try:
            departed = modulation_decompose(state, profile).phi.norm() > nu_exit

        except DecompositionError:
            departed = True

        if departed:
            exits.append(t)

        return departed

    integrate(state0, params, t_max, dt=dt, sample_every=sample_every, drift_tol=None, stop=leaves)
    t0 = exits[0] if exits else t_max
    logger.info('eps=%.6g exit time %.6g', params.epsilon, t0)
    return t0


def _exit_time_job(arguments: tuple) -> float:
    return exit_time(*arguments)


@validate(delta='required|numeric|gt:0', nu_exit='required|numeric|gt:0', t_max='required|numeric|gt:0')
def metastability_sweep(params_base: Params, epsilons: Sequence[float], delta: float, nu_exit: float, t_max: float,
                        n_half: int = 20, dt: Optional[float] = None, seed: int = 0, sample_every: float = 0.5,
                        workers: int = 1) -> MetastabilityReport:
    """Exit times of the perturbed breather over a list of couplings.

    Runs are independent; with workers > 1 they execute in a process pool
    and are collected in the given order. The exponent is fitted over the
    positive couplings.
    """
    if delta >= nu_exit:
        raise InvalidStateError(trans('en.lattice.invalid_state', attributes={'reason': 'delta must be below nu_exit'}))

    jobs = [(params_base.with_epsilon(eps), delta, nu_exit, t_max, n_half, dt, seed, sample_every) for eps in epsilons]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            t0 = list(executor.map(_exit_time_job, jobs))

    else:
        t0 = [_exit_time_job(job) for job in jobs]

    epsilons = np.asarray(epsilons, dtype=float)
    t0 = np.asarray(t0, dtype=float)
    inconclusive = bool(np.all(t0 >= t_max))

    if inconclusive:
        logger.warning('no run left the nu=%.3g ball before t_max=%.6g, increase t_max', nu_exit, t_max)

    positive = epsilons > 0.0
    censored = bool(np.any(t0[positive] >= t_max))

    if np.sum(positive) >= 2 and not censored:
        fit = fit_scaling_exponent(epsilons[positive], t0[positive])

    else:
        # a run that never left the ball only bounds t0 from below
        fit = ScalingFit(float('nan'), float('nan'), float('nan'), float('nan'))

    return MetastabilityReport(
        epsilons=epsilons,
        delta_init=delta,
        nu_exit=nu_exit,
        t0_measured=t0,
        scaling_exponent=fit.exponent,
        exponent_ci=(fit.ci_low, fit.ci_high),
        t_max=t_max,
        inconclusive=inconclusive,
    )
