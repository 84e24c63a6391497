"""The invariant suite behind the `check` command."""
import logging
from dataclasses import dataclass
from math import log, pi, sqrt
from typing import Callable, List, Tuple

import numpy as np

from ptbreather.cli.config import ExperimentConfig
from ptbreather.exceptions import LatticeError
from ptbreather.lattice_core import (
    LatticeState,
    Params,
    charge_q,
    energy_h,
    gauge_rotate,
    local_charge,
    local_charge_flux,
    norm_balance_residual,
    rhs,
)
from ptbreather.spectral import (
    assemble_hessian,
    coercivity_on_constrained,
    dimer_block,
    dimer_block_eigenvalues,
    finite_difference_hessian,
    gamma_threshold,
    kernel_residual,
    max_relative_error,
    scan_stability_threshold,
)
from ptbreather.stationary import (
    delta_zero,
    dimer_branch_e,
    dimer_solve,
    expansion_terms,
    fit_decay_rate,
    predicted_decay_rate,
    solve_breather,
    solve_correction,
)
from ptbreather.dynamics import (
    alpha_dot_eval,
    energy_bound_check,
    integrate,
    metastability_sweep,
    modulation_decompose,
    perturbed_breather,
    pt_trajectory_check,
    step_rk4,
)

logger = logging.getLogger(__name__)

REFERENCE = Params(omega=0.75, gamma=0.5)
REFERENCE_AMPLITUDE = 0.5
REFERENCE_E = 2.635366
EXPANSION_NORMS = (1e-3, 1e-1, 1.0)
HOMOGENEITY_FLOOR = 1e-12


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _dimer_band_edge(config: ExperimentConfig) -> Tuple[bool, str]:
    value = dimer_branch_e(0.0, REFERENCE)
    return abs(value - sqrt(5.0) / 4.0) <= 1e-12, f'E(0)={value:.15g}'


def _dimer_reference(config: ExperimentConfig) -> Tuple[bool, str]:
    value = dimer_branch_e(REFERENCE_AMPLITUDE, REFERENCE)
    return abs(value - REFERENCE_E) <= 1e-5, f'E(1/2)={value:.10g}'


def _dimer_round_trip(config: ExperimentConfig) -> Tuple[bool, str]:
    worst = 0.0

    for amplitude in np.linspace(0.01, 2.0, 200):
        solution = dimer_solve(REFERENCE.with_e_freq(dimer_branch_e(amplitude, REFERENCE)))
        worst = max(worst, abs(solution.amplitude - amplitude))

    return worst <= 1e-9, f'max |A - A(E(A))|={worst:.3e}'


def _block_eigenvalues(config: ExperimentConfig) -> Tuple[bool, str]:
    worst = 0.0
    positive = True

    for amplitude in np.linspace(0.04, 2.0, 50):
        closed = np.sort(dimer_block_eigenvalues(REFERENCE, amplitude))
        numeric = np.linalg.eigvalsh(dimer_block(REFERENCE, amplitude))
        worst = max(worst, float(np.max(np.abs(closed - numeric))))
        positive = positive and bool(np.all(closed[1:] > 0.0))

    passed = worst <= 1e-10 and positive and REFERENCE.omega - REFERENCE.gamma > 0.0
    return passed, f'max eigenvalue error={worst:.3e}'


def _breather(config: ExperimentConfig) -> Tuple[bool, str]:
    profile = solve_breather(config.params, n_half=config.n_half, tol=config.tol, eps_max=config.eps_max)
    slope, _ = fit_decay_rate(profile)
    predicted = log(predicted_decay_rate(config.params))
    passed = (
        profile.residual <= config.tol
        and abs(slope - predicted) <= 0.1 * abs(predicted)
        and slope <= log(config.params.epsilon)
    )
    return passed, f'residual={profile.residual:.3e} slope={slope:.6g} predicted={predicted:.6g}'


def _kernel_and_hessian(config: ExperimentConfig) -> Tuple[bool, str]:
    profile = solve_breather(config.params, n_half=min(config.n_half, 10), tol=config.tol, eps_max=config.eps_max)
    residual = kernel_residual(profile)
    error = max_relative_error(assemble_hessian(profile).entries, finite_difference_hessian(profile))
    return residual <= 1e-8 and error < 1e-6, f'kernel residual={residual:.3e} oracle error={error:.3e}'


def _coercivity(config: ExperimentConfig) -> Tuple[bool, str]:
    params = REFERENCE.with_e_freq(REFERENCE_E)
    at_zero = coercivity_on_constrained(solve_breather(params, n_half=10))
    expected = min(dimer_block_eigenvalues(params, REFERENCE_AMPLITUDE)[3], params.omega - params.gamma)
    coupled = params.with_epsilon(0.02)
    at_coupling = coercivity_on_constrained(solve_breather(coupled, n_half=10))
    # the coupling lowers the off-site band edge to omega - gamma - 4 eps
    band_edge = coupled.omega - coupled.gamma - 4.0 * coupled.epsilon
    passed = abs(at_zero - expected) <= 1e-10 and abs(at_coupling - band_edge) <= 0.1 * at_zero
    return passed, f'C2(0)={at_zero:.10g} C2(0.02)={at_coupling:.10g} band edge={band_edge:.6g}'


def _conservation(config: ExperimentConfig) -> Tuple[bool, str]:
    rng = np.random.default_rng(config.seed)
    h_drift, q_drift = 0.0, 0.0

    for _ in range(10):
        state = LatticeState.random(5, rng, scale=0.3)
        trajectory = integrate(state, config.params, 50.0, dt=config.dt, sample_every=0.5, drift_tol=None)
        h_drift, q_drift = max(h_drift, trajectory.h_drift()), max(q_drift, trajectory.q_drift())

    return h_drift < 1e-8 and q_drift < 1e-8, f'H drift={h_drift:.3e} Q drift={q_drift:.3e}'


def _norm_balance(config: ExperimentConfig) -> Tuple[bool, str]:
    rng = np.random.default_rng(config.seed)
    worst = max(abs(norm_balance_residual(LatticeState.random(10, rng), config.params)) for _ in range(10))
    return worst <= 1e-10, f'max residual={worst:.3e}'


def _pt_flow(config: ExperimentConfig) -> Tuple[bool, str]:
    rng = np.random.default_rng(config.seed)
    u = 0.3 * (rng.standard_normal(11) + 1j * rng.standard_normal(11))
    defect = pt_trajectory_check(LatticeState(5, u, np.conj(u)), config.params, 1.0, dt=config.dt)
    return defect <= 1e-8, f'max defect={defect:.3e}'


def _threshold(config: ExperimentConfig) -> Tuple[bool, str]:
    omega, epsilon = config.params.omega, config.params.epsilon
    scanned = scan_stability_threshold(omega, epsilon)
    expected = gamma_threshold(omega, epsilon)
    return abs(scanned - expected) <= 1.5e-4, f'scanned={scanned:.6g} formula={expected:.6g}'


def _expansion(config: ExperimentConfig) -> Tuple[bool, str]:
    profile = solve_breather(config.params, n_half=8, tol=config.tol, eps_max=config.eps_max)
    rng = np.random.default_rng(config.seed)
    identity, homogeneity = 0.0, 0.0

    for index in range(100):
        phi = LatticeState.random(profile.n_half, rng)
        phi = phi.scaled(EXPANSION_NORMS[index % len(EXPANSION_NORMS)] / phi.norm())
        whole = expansion_terms(profile, phi)
        half = expansion_terms(profile, phi.scaled(0.5))

        scale = abs(whole.delta) + abs(whole.n1) + abs(whole.n2)
        identity = max(identity, abs(whole.total() - whole.delta) / scale)

        for power, name in enumerate(('n1', 'n2', 'n3', 'n4'), start=1):
            value = getattr(whole, name)
            error = abs(value - 2.0 ** power * getattr(half, name))
            # the floor absorbs round-off in the cubic and quartic parts of tiny perturbations
            homogeneity = max(homogeneity, error / (1e-9 * abs(value) + HOMOGENEITY_FLOOR))

    return identity <= 1e-10 and homogeneity <= 1.0, f"identity={identity:.3e} homogeneity/tolerance={homogeneity:.3g}"


def _reality_and_gauge(config: ExperimentConfig) -> Tuple[bool, str]:
    rng = np.random.default_rng(config.seed)
    worst = 0.0

    # energy_h and charge_q raise when the imaginary residue is not round-off
    for _ in range(20):
        state = LatticeState.random(5, rng)
        rotated = gauge_rotate(state, float(rng.uniform(0.0, 2.0 * pi)))
        h, q = energy_h(state, config.params), charge_q(state)
        worst = max(
            worst,
            abs(energy_h(rotated, config.params) - h) / (1.0 + abs(h)),
            abs(charge_q(rotated) - q) / (1.0 + abs(q)),
        )

    return worst <= 1e-12, f'max gauge defect={worst:.3e}'


def _exterior(config: ExperimentConfig) -> Tuple[bool, str]:
    rng = np.random.default_rng(config.seed)
    state = LatticeState.random(5, rng)
    padded = state.padded(8)
    inner = slice(3, -3)

    h, q = energy_h(state, config.params), charge_q(state)
    h_defect = abs(energy_h(padded, config.params) - h) / (1.0 + abs(h))
    q_defect = abs(charge_q(padded) - q) / (1.0 + abs(q))
    original, extended = rhs(state, config.params), rhs(padded, config.params)
    # the interior vector field is elementwise, so it must agree bit for bit
    exact = np.array_equal(extended.u[inner], original.u) and np.array_equal(extended.v[inner], original.v)

    passed = exact and h_defect <= 1e-14 and q_defect <= 1e-14
    return passed, f'H defect={h_defect:.3e} Q defect={q_defect:.3e} interior rhs exact={exact}'


def _correction_scaling(config: ExperimentConfig) -> Tuple[bool, str]:
    coarse = solve_breather(config.params.with_epsilon(0.02), n_half=10)
    fine = solve_breather(config.params.with_epsilon(0.01), n_half=10)
    coarse_rho, fine_rho = solve_correction(coarse), solve_correction(fine)

    a0_ratio = abs(coarse_rho.a_profile[coarse.center]) / abs(fine_rho.a_profile[fine.center])
    delta0_ratio = abs(delta_zero(coarse, coarse_rho)) / abs(delta_zero(fine, fine_rho))

    passed = 3.0 <= a0_ratio <= 5.3 and 3.0 <= delta0_ratio <= 5.3
    return passed, f'|a0| ratio={a0_ratio:.4g} |Delta0| ratio={delta0_ratio:.4g}'


def _energy_bounds(config: ExperimentConfig) -> Tuple[bool, str]:
    rng = np.random.default_rng(config.seed)
    details = []
    passed = True

    if config.params.omega > config.params.gamma + 4.0 * config.params.epsilon:
        state = LatticeState.random(10, rng, scale=0.3)
        report = energy_bound_check(integrate(state, config.params, 50.0, dt=config.dt), config.params)
        passed = passed and report.holds
        details.append(f'positive ratio={report.max_ratio:.6g}')

    negative = Params(omega=-3.0, gamma=0.5, epsilon=config.params.epsilon)
    state = LatticeState.random(5, rng)
    state = state.scaled(0.05 * sqrt(abs(negative.omega) - negative.gamma) / state.norm())
    report = energy_bound_check(integrate(state, negative, 50.0, dt=config.dt), negative)
    details.append(f'small-data ratio={report.max_ratio:.6g}')

    return passed and report.holds, ' '.join(details)


def _local_flux(config: ExperimentConfig) -> Tuple[bool, str]:
    rng = np.random.default_rng(config.seed)
    step = 1e-4
    worst = 0.0

    for _ in range(10):
        state = LatticeState.random(5, rng, scale=0.5)
        middle = step_rk4(state, config.params, step)
        later = step_rk4(middle, config.params, step)
        measured = (local_charge(later) - local_charge(state)) / (2.0 * step)
        flux = local_charge_flux(middle, config.params)
        worst = max(worst, abs(measured - flux) / (1.0 + abs(flux)))

    return worst <= 1e-6, f'max flux defect={worst:.3e}'


def _alpha_rate(config: ExperimentConfig) -> Tuple[bool, str]:
    profile = solve_breather(config.params, n_half=8, tol=config.tol, eps_max=config.eps_max)
    state = perturbed_breather(profile, config.delta, seed=config.seed)
    step = 1e-3
    worst = 0.0

    for _ in range(5):
        middle = step_rk4(state, config.params, step)
        later = step_rk4(middle, config.params, step)
        turn = modulation_decompose(later, profile).alpha - modulation_decompose(state, profile).alpha
        drift = float(np.angle(np.exp(1j * turn))) / (2.0 * step)
        rate = alpha_dot_eval(profile, modulation_decompose(middle, profile))
        worst = max(worst, abs(rate - drift) / abs(rate))

        for _ in range(500):
            state = step_rk4(state, config.params, step)

    return worst <= 1e-5, f'max relative alpha rate defect={worst:.3e}'


def _metastability(config: ExperimentConfig) -> Tuple[bool, str]:
    epsilons = config.sweep or [0.04, 0.02, 0.01, 0.005]
    report = metastability_sweep(
        config.params, epsilons, config.delta, config.nu, config.t_max, n_half=config.n_half, seed=config.seed,
        workers=config.workers,
    )
    passed = not report.inconclusive and -0.8 <= report.scaling_exponent <= -0.3
    return passed, f'exponent={report.scaling_exponent:.4g} t0={list(report.t0_measured)}'


CHECKS: List[Tuple[str, Callable[[ExperimentConfig], Tuple[bool, str]]]] = [
    ('dimer band edge', _dimer_band_edge),
    ('dimer reference point', _dimer_reference),
    ('dimer round trip', _dimer_round_trip),
    ('block eigenvalues', _block_eigenvalues),
    ('breather continuation', _breather),
    ('kernel and Hessian oracle', _kernel_and_hessian),
    ('constrained coercivity', _coercivity),
    ('H and Q conservation', _conservation),
    ('norm balance', _norm_balance),
    ('PT symmetry of the flow', _pt_flow),
    ('PT threshold scan', _threshold),
    ('expansion identity and homogeneity', _expansion),
    ('reality and gauge invariance', _reality_and_gauge),
    ('zero exterior', _exterior),
    ('correction and Delta0 scaling', _correction_scaling),
    ('energy bounds', _energy_bounds),
    ('local charge flux', _local_flux),
    ('phase rate', _alpha_rate),
]

FULL_CHECKS = [
    ('metastability scaling', _metastability),
]


def run_checks(config: ExperimentConfig, full: bool = False) -> List[CheckResult]:
    results = []

    for name, check in CHECKS + (FULL_CHECKS if full else []):
        try:
            passed, detail = check(config)

        except (LatticeError, ArithmeticError, ValueError) as e:
            passed, detail = False, f'{e.__class__.__name__}: {e}'

        logger.info('%s: %s (%s)', name, 'pass' if passed else 'FAIL', detail)
        results.append(CheckResult(name=name, passed=bool(passed), detail=detail))

    return results


def format_table(results: List[CheckResult]) -> str:
    width = max(len(result.name) for result in results)
    lines = [f"{'check'.ljust(width)}  status  detail"]

    for result in results:
        lines.append(f"{result.name.ljust(width)}  {'pass' if result.passed else 'FAIL':6}  {result.detail}")

    return '\n'.join(lines)
