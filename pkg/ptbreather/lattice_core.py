"""Parameters, lattice states and the functionals of the PT-symmetric dNLS lattice.

The lattice is truncated to the sites -n_half..n_half with zero amplitudes
outside (Dirichlet exterior). Every function here is pure.

The extended vector holds (u, conj u, v, conj v) per site, interleaved, so the
component k of site j sits at index 4 j + k. Entry (i, k) of a Hessian is the
derivative of the i-th gradient component (dH/d conj(phi_i)) along phi_k; the
second variation is then half the Hermitian form phi^dagger M phi.
"""
import logging
from dataclasses import dataclass, field, replace
from math import sqrt
from typing import Optional

import numpy as np

from ptbreather.enums import HessianKind
from ptbreather.exceptions import DomainError, InvalidStateError, LatticeError
from ptbreather.utils import trans
from ptbreather.validator import Validator

logger = logging.getLogger(__name__)

REALITY_TOL = 1e-12

PARAMS_RULES = {
    'omega': 'required|numeric|finite',
    'gamma': 'required|numeric|finite|min:0',
    'epsilon': 'required|numeric|finite|min:0',
    'e_freq': 'required|numeric|finite',
}


@dataclass(frozen=True)
class Params:
    """Detuning omega, gain-loss gamma, coupling epsilon and breather frequency e_freq.

    gamma = 0 is accepted here (the conservative limit of the dimer); the
    experiment configuration requires gamma > 0.
    """
    omega: float
    gamma: float
    epsilon: float = 0.0
    e_freq: float = 0.0

    def __post_init__(self):
        validator = Validator(
            {
                'omega': self.omega,
                'gamma': self.gamma,
                'epsilon': self.epsilon,
                'e_freq': self.e_freq,
            },
            PARAMS_RULES
        )

        # It raises the ValidationError
        validator.validate()

        for name in ('omega', 'gamma', 'epsilon', 'e_freq'):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def e0(self) -> float:
        """The band edge sqrt(omega^2 - gamma^2) of the zero equilibrium.

        Raises:
            DomainError -- |omega| <= gamma (PT-broken regime).
        """
        if abs(self.omega) <= self.gamma:
            raise DomainError(
                trans('en.lattice.pt_broken', attributes={'omega': self.omega, 'gamma': self.gamma}),
                details={'omega': self.omega, 'gamma': self.gamma}
            )

        return sqrt(self.omega ** 2 - self.gamma ** 2)

    def with_epsilon(self, epsilon: float) -> 'Params':
        return replace(self, epsilon=epsilon)

    def with_e_freq(self, e_freq: float) -> 'Params':
        return replace(self, e_freq=e_freq)

    def to_dict(self) -> dict:
        return {'omega': self.omega, 'gamma': self.gamma, 'epsilon': self.epsilon, 'e_freq': self.e_freq}


def _as_complex_array(values, name: str) -> np.ndarray:
    array = np.array(values, dtype=np.complex128, copy=True)

    if array.ndim != 1:
        raise InvalidStateError(
            trans('en.lattice.invalid_state', attributes={'reason': f'{name} must be one-dimensional'})
        )

    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class LatticeState:
    """The complex amplitudes (u, v) on the sites -n_half..n_half.
    """
    n_half: int
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = _as_complex_array(self.u, 'u')
        v = _as_complex_array(self.v, 'v')
        size = 2 * int(self.n_half) + 1

        if self.n_half < 0 or u.shape != (size,) or v.shape != (size,):
            raise InvalidStateError(
                trans('en.lattice.invalid_state', attributes={'reason': f'expected {size} sites per component'}),
                details={'n_half': self.n_half, 'u_size': u.size, 'v_size': v.size}
            )

        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise InvalidStateError(
                trans('en.lattice.invalid_state', attributes={'reason': 'non-finite amplitudes'})
            )

        object.__setattr__(self, 'n_half', int(self.n_half))
        object.__setattr__(self, 'u', u)
        object.__setattr__(self, 'v', v)

    @classmethod
    def zeros(cls, n_half: int) -> 'LatticeState':
        size = 2 * n_half + 1
        return cls(n_half, np.zeros(size, dtype=complex), np.zeros(size, dtype=complex))

    @classmethod
    def single_site(cls, n_half: int, u0: complex = 0.0, v0: complex = 0.0, site: int = 0) -> 'LatticeState':
        """A state supported on one site.
        """
        state = cls.zeros(n_half)
        u = state.u.copy()
        v = state.v.copy()
        u[site + n_half] = u0
        v[site + n_half] = v0
        return cls(n_half, u, v)

    @classmethod
    def random(cls, n_half: int, rng: np.random.Generator, scale: float = 1.0) -> 'LatticeState':
        """Complex Gaussian amplitudes with standard deviation `scale` per component.
        """
        size = 2 * n_half + 1
        u = rng.normal(size=size) + 1j * rng.normal(size=size)
        v = rng.normal(size=size) + 1j * rng.normal(size=size)
        return cls(n_half, scale * u / sqrt(2.0), scale * v / sqrt(2.0))

    @property
    def size(self) -> int:
        return 2 * self.n_half + 1

    @property
    def center(self) -> int:
        """The array index of site n = 0."""
        return self.n_half

    def sites(self) -> np.ndarray:
        return np.arange(-self.n_half, self.n_half + 1)

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.u) ** 2) + np.sum(np.abs(self.v) ** 2))

    def norm(self) -> float:
        return sqrt(self.norm_sq())

    def site_norms(self) -> np.ndarray:
        """sqrt(|u_n|^2 + |v_n|^2) per site."""
        return np.sqrt(np.abs(self.u) ** 2 + np.abs(self.v) ** 2)

    def is_pt_symmetric(self, tol: float = 1e-10) -> bool:
        """v_n = conj(u_n) and u_{-n} = u_n within tol.
        """
        scale = 1.0 + float(np.max(np.abs(self.u), initial=0.0))
        conjugate_ok = np.max(np.abs(self.v - np.conj(self.u)), initial=0.0) <= tol * scale
        parity_ok = np.max(np.abs(self.u - self.u[::-1]), initial=0.0) <= tol * scale
        return bool(conjugate_ok and parity_ok)

    def padded(self, n_half: int) -> 'LatticeState':
        """The same state on a larger lattice, zero-padded.
        """
        if n_half < self.n_half:
            raise InvalidStateError(
                trans('en.lattice.invalid_state', attributes={'reason': 'padding cannot shrink the lattice'})
            )

        width = n_half - self.n_half
        return LatticeState(n_half, np.pad(self.u, width), np.pad(self.v, width))

    def plus(self, other: 'LatticeState', scale: float = 1.0) -> 'LatticeState':
        """self + scale * other on the same lattice.
        """
        if other.n_half != self.n_half:
            raise InvalidStateError(
                trans('en.lattice.lattice_mismatch', attributes={'n_half': self.n_half, 'other': other.n_half})
            )

        return LatticeState(self.n_half, self.u + scale * other.u, self.v + scale * other.v)

    def scaled(self, factor: complex) -> 'LatticeState':
        return LatticeState(self.n_half, factor * self.u, factor * self.v)

    def inner_real(self, other: 'LatticeState') -> float:
        """Re sum(conj(self) * other) over both components."""
        return float(np.real(np.vdot(self.u, other.u) + np.vdot(self.v, other.v)))

    def to_dict(self) -> dict:
        return {
            'n_half': self.n_half,
            'u': [[float(z.real), float(z.imag)] for z in self.u],
            'v': [[float(z.real), float(z.imag)] for z in self.v],
        }


@dataclass(frozen=True)
class DiagnosticRecord:
    t: float
    energy_h: float
    charge_q: float
    lambda_e: float
    norm_sq: float
    local_charge: float


def laplacian(x: np.ndarray) -> np.ndarray:
    """x_{n+1} - 2 x_n + x_{n-1} with zero exterior values."""
    padded = np.pad(x, 1)
    return padded[2:] - 2.0 * x + padded[:-2]


def _as_real(value: complex, scale: float, name: str) -> float:
    """The real part of a functional, after checking that its imaginary residue is round-off.

    Raises:
        LatticeError
    """
    if abs(value.imag) > REALITY_TOL * (1.0 + scale):
        raise LatticeError(f'{name} has a non-negligible imaginary part {value.imag!r}')

    return float(value.real)


def _rhs_arrays(u: np.ndarray, v: np.ndarray, params: Params):
    abs_u2 = np.abs(u) ** 2
    abs_v2 = np.abs(v) ** 2
    eps = params.epsilon

    nonlinear_u = 2.0 * ((2.0 * abs_u2 + abs_v2) * v + u ** 2 * np.conj(v))
    nonlinear_v = 2.0 * ((abs_u2 + 2.0 * abs_v2) * u + np.conj(u) * v ** 2)

    du = -1j * (eps * laplacian(v) + params.omega * v + nonlinear_u) + params.gamma * u
    dv = -1j * (eps * laplacian(u) + params.omega * u + nonlinear_v) - params.gamma * v
    return du, dv


def rhs(state: LatticeState, params: Params) -> LatticeState:
    """The vector field (du/dt, dv/dt) of the amplitude equations.

    Returned as a LatticeState holding the derivatives.
    """
    du, dv = _rhs_arrays(state.u, state.v, params)

    if not (np.all(np.isfinite(du)) and np.all(np.isfinite(dv))):
        raise InvalidStateError(trans('en.lattice.invalid_state', attributes={'reason': 'non-finite derivative'}))

    return LatticeState(state.n_half, du, dv)


def _energy_terms(u: np.ndarray, v: np.ndarray, params: Params) -> complex:
    density = np.abs(u) ** 2 + np.abs(v) ** 2
    cross = u * np.conj(v) + np.conj(u) * v
    coupling = np.sum(np.abs(np.diff(np.pad(u, 1))) ** 2) + np.sum(np.abs(np.diff(np.pad(v, 1))) ** 2)

    return complex(
        np.sum(density ** 2 + cross ** 2 + params.omega * density)
        - params.epsilon * coupling
        + np.sum(1j * params.gamma * (u * np.conj(v) - np.conj(u) * v))
    )


def energy_h(state: LatticeState, params: Params) -> float:
    """The conserved energy H, including the coupling across the boundary bonds.
    """
    value = _energy_terms(state.u, state.v, params)
    return _as_real(value, abs(value.real), 'H')


def charge_q(state: LatticeState) -> float:
    """The conserved charge Q = sum(u conj(v) + conj(u) v)."""
    value = complex(np.sum(state.u * np.conj(state.v) + np.conj(state.u) * state.v))
    return _as_real(value, abs(value.real), 'Q')


def local_charge(state: LatticeState) -> float:
    """The central-site part u_0 conj(v_0) + conj(u_0) v_0 of Q."""
    u0 = state.u[state.center]
    v0 = state.v[state.center]
    return float((u0 * np.conj(v0) + np.conj(u0) * v0).real)


def lambda_e(state: LatticeState, params: Params) -> float:
    """The Lyapunov function H - E (u_0 conj(v_0) + conj(u_0) v_0)."""
    return energy_h(state, params) - params.e_freq * local_charge(state)


def extended_energy(state: LatticeState, params: Params) -> float:
    """H_E = H - E Q; breathers are its critical points."""
    return energy_h(state, params) - params.e_freq * charge_q(state)


def local_charge_flux(state: LatticeState, params: Params) -> float:
    """d/dt of the central-site charge, from the neighbour exchange alone.

    Raises:
        InvalidStateError -- the lattice has no neighbours of the centre.
    """
    if state.n_half < 1:
        raise InvalidStateError(trans('en.lattice.invalid_state', attributes={'reason': 'n_half must be at least 1'}))

    c = state.center
    u0, v0 = state.u[c], state.v[c]
    su = state.u[c + 1] + state.u[c - 1]
    sv = state.v[c + 1] + state.v[c - 1]

    value = -1j * params.epsilon * (
        np.conj(u0) * su - u0 * np.conj(su) + np.conj(v0) * sv - v0 * np.conj(sv)
    )
    return _as_real(complex(value), abs(value.real), 'local charge flux')


def norm_balance_residual(state: LatticeState, params: Params) -> float:
    """d/dt(|u|^2 + |v|^2) from the vector field minus 2 gamma sum(|u_n|^2 - |v_n|^2).

    The coupling, detuning and nonlinear contributions cancel, so the
    residual is round-off.
    """
    du, dv = _rhs_arrays(state.u, state.v, params)
    rate = 2.0 * float(np.real(np.vdot(state.u, du) + np.vdot(state.v, dv)))
    imbalance = 2.0 * params.gamma * float(np.sum(np.abs(state.u) ** 2 - np.abs(state.v) ** 2))
    return rate - imbalance


def gauge_rotate(state: LatticeState, alpha: float) -> LatticeState:
    """(u, v) -> e^{i alpha} (u, v)."""
    return state.scaled(np.exp(1j * alpha))


def pt_apply(state: LatticeState, conjugate: bool = False) -> LatticeState:
    """Swap u and v; with `conjugate`, also conjugate (the time-reversal part at a fixed time).
    """
    if conjugate:
        return LatticeState(state.n_half, np.conj(state.v), np.conj(state.u))

    return LatticeState(state.n_half, state.v, state.u)


def hamiltonian_gradient(state: LatticeState, params: Params, e_freq: Optional[float] = None) -> np.ndarray:
    """The gradient (dH/d conj(u), dH/du, dH/d conj(v), dH/dv) per site, shape (2N+1, 4).

    Read off the cross-gradient form i du/dt = dH/d conj(v), i dv/dt = dH/d conj(u).
    With `e_freq`, returns the gradient of H - e_freq * Q instead.
    """
    du, dv = _rhs_arrays(state.u, state.v, params)
    grad_conj_u = 1j * dv
    grad_conj_v = 1j * du

    if e_freq is not None:
        grad_conj_u = grad_conj_u - e_freq * state.v
        grad_conj_v = grad_conj_v - e_freq * state.u

    return np.stack([grad_conj_u, np.conj(grad_conj_u), grad_conj_v, np.conj(grad_conj_v)], axis=1)


@dataclass(frozen=True)
class EnergyBounds:
    """Right-hand sides of the two energy lower bounds.

    H >= positive_regime when omega > gamma + 4 epsilon;
    -H >= negative_regime when omega < -gamma. The quartic part of H is at most
    2 ||psi||^4 (a single site with u = v real attains it), hence the factor 2.
    """
    positive_regime: float
    negative_regime: float


def energy_lower_bounds(state: LatticeState, params: Params) -> EnergyBounds:
    norm_sq = state.norm_sq()
    return EnergyBounds(
        positive_regime=(params.omega - params.gamma - 4.0 * params.epsilon) * norm_sq,
        negative_regime=(abs(params.omega) - params.gamma) * norm_sq - 2.0 * norm_sq ** 2,
    )


def diagnose(state: LatticeState, params: Params, t: float = 0.0) -> DiagnosticRecord:
    """All monitored quantities of one state."""
    h = energy_h(state, params)
    central = local_charge(state)
    return DiagnosticRecord(
        t=float(t),
        energy_h=h,
        charge_q=charge_q(state),
        lambda_e=h - params.e_freq * central,
        norm_sq=state.norm_sq(),
        local_charge=central,
    )


def to_extended(state: LatticeState) -> np.ndarray:
    """(u, v) -> the interleaved (u, conj u, v, conj v) vector."""
    return np.stack([state.u, np.conj(state.u), state.v, np.conj(state.v)], axis=1).reshape(-1)


def from_extended(vector: np.ndarray) -> LatticeState:
    blocks = np.asarray(vector).reshape(-1, 4)
    return LatticeState((blocks.shape[0] - 1) // 2, blocks[:, 0], blocks[:, 2])


def _site_block(u: complex, v: complex, params: Params, e_freq: float) -> np.ndarray:
    """Second derivatives of the on-site part of H - e_freq * Q."""
    ub, vb = np.conj(u), np.conj(v)
    diagonal = params.omega + 4.0 * (abs(u) ** 2 + abs(v) ** 2)
    pair = 2.0 * (u ** 2 + v ** 2)
    mixed = 4.0 * (u * vb + ub * v)
    gain = 1j * params.gamma

    return np.array([
        [diagonal, pair, mixed - gain - e_freq, 4.0 * u * v],
        [np.conj(pair), diagonal, 4.0 * ub * vb, mixed + gain - e_freq],
        [mixed + gain - e_freq, 4.0 * u * v, diagonal, pair],
        [4.0 * ub * vb, mixed - gain - e_freq, np.conj(pair), diagonal],
    ], dtype=complex)


def hessian_at(state: LatticeState, params: Params, kind: HessianKind = HessianKind.EXTENDED) -> np.ndarray:
    """The dense Hessian of H_E (extended) or Lambda_E (modified) at any state.

    The modified kind keeps the frequency only in the central block.
    """
    size = state.size
    coupling = params.epsilon * (
        np.diag(np.full(size, -2.0)) + np.diag(np.ones(size - 1), 1) + np.diag(np.ones(size - 1), -1)
    )
    entries = np.kron(coupling, np.eye(4)).astype(complex)

    for site in range(size):
        e_freq = params.e_freq if kind is HessianKind.EXTENDED or site == state.center else 0.0
        entries[4 * site:4 * site + 4, 4 * site:4 * site + 4] += _site_block(state.u[site], state.v[site], params, e_freq)

    return entries
