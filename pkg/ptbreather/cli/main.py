import json
import logging
import sys
from argparse import ArgumentParser, Namespace
from typing import List, Optional

import numpy as np

from ptbreather.cli.checks import format_table, run_checks
from ptbreather.cli.config import ExperimentConfig, load_config
from ptbreather.cli.writers import ProfileFile, RunDirectory
from ptbreather.dynamics import alpha_dot_eval, integrate, metastability_sweep, modulation_decompose, perturbed_breather
from ptbreather.enums import Command, ExitCode
from ptbreather.exceptions import InvariantFailure, LatticeError, SchemaError, UnsupportedBranchError, ValidationError
from ptbreather.spectral import dimer_block_eigenvalues, hessian_inertia, spectral_report
from ptbreather.stationary import (
    BreatherProfile,
    branch_theta,
    dimer_branch_e,
    fit_decay_rate,
    predicted_decay_rate,
    solve_breather,
    solve_correction,
)
from ptbreather.utils import env, trans

logger = logging.getLogger(__name__)

DEFAULT_SWEEP = [0.04, 0.02, 0.01, 0.005]


def _profile(config: ExperimentConfig, args: Namespace) -> BreatherProfile:
    if getattr(args, 'profile', None):
        return ProfileFile.read(args.profile).to_profile()

    return solve_breather(config.params, n_half=config.n_half, tol=config.tol, eps_max=config.eps_max)


def cmd_branch(config: ExperimentConfig, run: RunDirectory, args: Namespace) -> dict:
    params = config.params

    if params.omega <= params.gamma:
        raise UnsupportedBranchError(
            trans('en.lattice.unsupported_branch', attributes={'omega': params.omega, 'gamma': params.gamma})
        )

    rows = []
    for amplitude in np.linspace(0.0, config.a_max, config.n_points):
        e_freq = dimer_branch_e(amplitude, params)
        mus = dimer_block_eigenvalues(params, amplitude)[1:] if amplitude > 0.0 else (float('nan'),) * 3
        rows.append([amplitude, e_freq, -e_freq, branch_theta(amplitude, params, e_freq), *mus])

    run.csv('branch.csv', ['A', 'E_plus', 'E_minus', 'theta', 'mu1', 'mu2', 'mu3'], rows)
    return {'e0': params.e0, 'points': len(rows)}


def cmd_breather(config: ExperimentConfig, run: RunDirectory, args: Namespace) -> dict:
    profile = solve_breather(config.params, n_half=config.n_half, tol=config.tol, eps_max=config.eps_max)
    correction = solve_correction(profile, tol=config.tol)
    sites = np.arange(-profile.n_half, profile.n_half + 1)

    run.profile('profile.json', profile)
    run.csv('decay.csv', ['n', 're_U', 'im_U', 'abs_U'], (
        [n, z.real, z.imag, abs(z)] for n, z in zip(sites, profile.u_profile)
    ))
    run.csv('correction.csv', ['n', 're_a', 'im_a', 'abs_a'], (
        [n, z.real, z.imag, abs(z)] for n, z in zip(sites, correction.a_profile)
    ))

    summary = {'residual': profile.residual, 'decay_constant': profile.decay_constant(), **profile.metadata}
    if config.params.epsilon > 0.0:
        slope, intercept = fit_decay_rate(profile)
        summary.update({
            'decay_slope': slope,
            'decay_intercept': intercept,
            'predicted_slope': float(np.log(predicted_decay_rate(config.params))),
            'correction_constants': list(correction.bound_constants(config.params.epsilon)),
        })

    return summary


def cmd_spectrum(config: ExperimentConfig, run: RunDirectory, args: Namespace) -> dict:
    profile = _profile(config, args)
    report = spectral_report(profile)
    inertia = hessian_inertia(profile)

    run.json('spectrum.json', {
        **report.to_dict(),
        'inertia': {'positive': inertia.positive, 'negative': inertia.negative, 'zero': inertia.zero},
    })
    run.csv('eigenvalues.csv', ['index', 'mu'], enumerate(report.eigenvalues))
    return {'kernel_residual': report.kernel_residual, 'coercivity_c2': report.coercivity_c2}


def cmd_evolve(config: ExperimentConfig, run: RunDirectory, args: Namespace) -> dict:
    profile = _profile(config, args)
    state0 = perturbed_breather(profile, config.delta, config.seed)
    trajectory = integrate(state0, profile.params, config.t_end, dt=config.dt, keep_states=True)

    rows = []
    for record, state in zip(trajectory.records, trajectory.states):
        modstate = modulation_decompose(state, profile)
        rows.append([
            record.t, record.energy_h, record.charge_q, record.lambda_e, record.norm_sq,
            modstate.phi.norm(), modstate.alpha, alpha_dot_eval(profile, modstate),
        ])

    run.csv('trajectory.csv', ['t', 'H', 'Q', 'Lambda_E', 'norm_sq', 'phi_norm', 'alpha', 'alpha_dot'], rows)
    return {'h_drift': trajectory.h_drift(), 'q_drift': trajectory.q_drift(), 'dt': trajectory.dt}


def cmd_metastab(config: ExperimentConfig, run: RunDirectory, args: Namespace) -> dict:
    epsilons = config.sweep or DEFAULT_SWEEP
    report = metastability_sweep(
        config.params, epsilons, config.delta, config.nu, config.t_max,
        n_half=config.n_half, dt=config.dt, seed=config.seed, workers=config.workers,
    )

    run.json('metastab.json', report.to_dict())
    run.csv('exits.csv', ['epsilon', 't0'], zip(report.epsilons, report.t0_measured))
    return {'scaling_exponent': report.scaling_exponent, 'inconclusive': report.inconclusive}


def cmd_check(config: ExperimentConfig, run: RunDirectory, args: Namespace) -> dict:
    results = run_checks(config, full=args.full)
    print(format_table(results))
    run.csv('checks.csv', ['check', 'passed', 'detail'], ([r.name, r.passed, r.detail] for r in results))

    failed = [result.name for result in results if not result.passed]
    if failed:
        raise InvariantFailure(trans('en.lattice.invariant', attributes={'name': ', '.join(failed)}),
                               details={'failed': failed})

    return {'checks': len(results)}


HANDLERS = {
    Command.BRANCH: cmd_branch,
    Command.BREATHER: cmd_breather,
    Command.SPECTRUM: cmd_spectrum,
    Command.EVOLVE: cmd_evolve,
    Command.METASTAB: cmd_metastab,
    Command.CHECK: cmd_check,
}


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON experiment configuration')
    common.add_argument('--out', help='root directory of the run outputs')
    common.add_argument('--seed', type=int)
    common.add_argument('--omega', type=float)
    common.add_argument('--gamma', type=float)
    common.add_argument('--epsilon', type=float)
    common.add_argument('--e-freq', type=float, dest='e_freq')
    common.add_argument('--n-half', type=int, dest='n_half')
    common.add_argument('--dt', type=float)
    common.add_argument('--t-end', type=float, dest='t_end')
    common.add_argument('--tol', type=float)

    parser = ArgumentParser(prog='ptbreather', description='Breathers of the PT-symmetric dNLS lattice.')
    commands = parser.add_subparsers(dest='command', required=True)

    for command in Command:
        sub = commands.add_parser(command.value, parents=[common])

        if command in (Command.SPECTRUM, Command.EVOLVE):
            sub.add_argument('--profile', help='read the breather from a profile file instead of solving')

        if command is Command.CHECK:
            sub.add_argument('--full', action='store_true', help='also run the metastability sweep')

    return parser


def _overrides(args: Namespace) -> dict:
    return {
        'command': args.command,
        'output_dir': args.out,
        'seed': args.seed,
        'params.omega': args.omega,
        'params.gamma': args.gamma,
        'params.epsilon': args.epsilon,
        'params.e_freq': args.e_freq,
        'n_half': args.n_half,
        'dt': args.dt,
        't_end': args.t_end,
        'tol': args.tol,
    }


def _fail(error: Exception, code: ExitCode, details: Optional[dict] = None) -> int:
    sys.stderr.write(json.dumps({
        'error': error.__class__.__name__,
        'message': str(error),
        'details': details or {},
        'exit_code': code.value,
    }, sort_keys=True, default=str) + '\n')
    return code.value


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=str(env('PTBREATHER_LOG_LEVEL', 'WARNING')).upper(),
        format='%(asctime)s %(name)s %(levelname)s %(message)s',
    )

    try:
        config = load_config(args.config, _overrides(args))

    except ValidationError as e:
        return _fail(e, ExitCode.VALIDATION, e.get_errors())

    except (OSError, ValueError) as e:
        return _fail(e, ExitCode.VALIDATION)

    run_dir = RunDirectory(config.output_dir, config.command.value, config.to_dict(), config.digest())

    try:
        summary = HANDLERS[config.command](config, run_dir, args)

    except (ValidationError, SchemaError) as e:
        return _fail(e, ExitCode.VALIDATION, e.get_errors() if isinstance(e, ValidationError) else e.get_details())

    except InvariantFailure as e:
        return _fail(e, ExitCode.INVARIANT, e.get_details())

    except LatticeError as e:
        return _fail(e, ExitCode.SOLVER, e.get_details())

    except (ArithmeticError, ValueError) as e:
        # numerical library failures outside the lattice error hierarchy
        logger.debug('unexpected solver failure', exc_info=True)
        return _fail(e, ExitCode.SOLVER)

    run_dir.close(summary)
    logger.info('wrote %s', run_dir.path)
    print(run_dir.path)
    return ExitCode.SUCCESS.value


def run() -> None:
    sys.exit(main())


if __name__ == '__main__':
    run()
