"""Spectra of the Hessians of the extended energy and of the Lyapunov function, the gauge
kernel, the finite-difference oracle and the linear stability of the zero state.
"""
import logging
from dataclasses import dataclass, field
from math import pi
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from ptbreather.decorators import validate
from ptbreather.enums import HessianKind
from ptbreather.exceptions import CoercivityViolation, NoRealSolutionError
from ptbreather.lattice_core import (
    LatticeState,
    Params,
    _site_block,
    hamiltonian_gradient,
    hessian_at,
    to_extended,
)
from ptbreather.stationary import BreatherProfile, dimer_branch_e, dimer_solve
from ptbreather.utils import trans

logger = logging.getLogger(__name__)

SIGMA = np.array([1.0, -1.0, 1.0, -1.0])
ZERO_MODE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class HessianMatrix:
    kind: HessianKind
    entries: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def block(self, site: int) -> np.ndarray:
        """The 4x4 diagonal block of array site `site` (0-based)."""
        return self.entries[4 * site:4 * site + 4, 4 * site:4 * site + 4]

    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh(self.entries)

    def form(self, vector: np.ndarray) -> float:
        """phi^dagger M phi."""
        return float(np.real(np.vdot(vector, self.entries @ vector)))


@dataclass(frozen=True)
class KernelVector:
    """sigma Phi, per site (U, -conj U, V, -conj V)."""
    entries: np.ndarray = field(repr=False)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))


@dataclass(frozen=True, eq=False)
class SpectralReport:
    eigenvalues: np.ndarray = field(repr=False)
    kernel_residual: float
    coercivity_c2: float

    def to_dict(self) -> dict:
        return {
            'eigenvalues': [float(value) for value in self.eigenvalues],
            'kernel_residual': self.kernel_residual,
            'coercivity_c2': self.coercivity_c2,
        }


@dataclass(frozen=True)
class Inertia:
    positive: int
    negative: int
    zero: int


def sigma_phi(state: LatticeState) -> KernelVector:
    return KernelVector(np.tile(SIGMA, state.size) * to_extended(state))


def symplectic_matrix(size: int) -> np.ndarray:
    """The real symmetric pairing S with i d(psi)/dt = S grad H and S grad Q = sigma psi."""
    block = np.zeros((4, 4))
    block[0, 2] = block[2, 0] = 1.0
    block[1, 3] = block[3, 1] = -1.0
    return np.kron(np.eye(size), block)


def assemble_hessian(profile: BreatherProfile, kind: HessianKind = HessianKind.EXTENDED,
                     params: Optional[Params] = None) -> HessianMatrix:
    params = params or profile.params
    entries = hessian_at(profile.state(), params, kind)
    logger.debug('assembled %s Hessian of dimension %d', kind.value, entries.shape[0])
    return HessianMatrix(kind=kind, entries=entries)


def dimer_block(params: Params, amplitude: float) -> np.ndarray:
    """The central block of the modified Hessian at epsilon = 0 for the branch point A.

    Raises:
        NoRealSolutionError -- A <= 0 or no real frequency at A.
    """
    if amplitude <= 0.0:
        raise NoRealSolutionError(trans('en.lattice.rejected_amplitude', attributes={'amplitude': amplitude}))

    at_branch = params.with_epsilon(0.0).with_e_freq(dimer_branch_e(amplitude, params))
    u0 = dimer_solve(at_branch).u0
    return _site_block(u0, np.conj(u0), at_branch, at_branch.e_freq)


def dimer_block_eigenvalues(params: Params, amplitude: float) -> Tuple[float, float, float, float]:
    """The closed forms (0, mu1, mu2, mu3) of the central block spectrum.

    Raises:
        NoRealSolutionError -- A <= 0.
    """
    if amplitude <= 0.0:
        raise NoRealSolutionError(trans('en.lattice.rejected_amplitude', attributes={'amplitude': amplitude}))

    a2 = amplitude ** 2
    omega, gamma = params.omega, params.gamma
    root = np.sqrt((omega - 4.0 * a2) ** 2 + 16.0 * omega * a2 * gamma ** 2 / (omega + 4.0 * a2) ** 2)

    return 0.0, 2.0 * (omega + 4.0 * a2), float(omega + 12.0 * a2 + root), float(omega + 12.0 * a2 - root)


def kernel_residual_at(state: LatticeState, params: Params) -> float:
    """||H''_E sigma Phi|| / ||sigma Phi|| at a given state."""
    kernel = sigma_phi(state)
    return float(np.linalg.norm(hessian_at(state, params) @ kernel.entries) / kernel.norm)


def kernel_residual(profile: BreatherProfile) -> float:
    return kernel_residual_at(profile.state(), profile.params)


def coercivity_on_constrained(profile: BreatherProfile, params: Optional[Params] = None) -> float:
    """The minimum of the modified Hessian restricted to the orthogonal complement of sigma Phi.

    The returned C2 bounds the quadratic part from below: N2(phi) >= C2 ||phi||^2.

    Raises:
        CoercivityViolation -- C2 <= 0.
    """
    params = params or profile.params
    entries = assemble_hessian(profile, HessianKind.MODIFIED, params).entries
    kernel = sigma_phi(profile.state()).entries

    basis = linalg.null_space(kernel.conj()[np.newaxis, :])
    projected = basis.conj().T @ entries @ basis
    c2 = float(linalg.eigvalsh(projected)[0])
    logger.info('constrained coercivity eps=%.6g C2=%.10g', params.epsilon, c2)

    if c2 <= 0.0:
        raise CoercivityViolation(trans('en.lattice.coercivity', attributes={'c2': c2}), details={'c2': c2})

    return c2


def hessian_inertia(profile: BreatherProfile, kind: HessianKind = HessianKind.EXTENDED) -> Inertia:
    """Counts of positive, negative and near-zero eigenvalues (|mu| < 1e-8 ||M||)."""
    eigenvalues = assemble_hessian(profile, kind).eigenvalues()
    threshold = ZERO_MODE_TOL * max(1.0, float(np.max(np.abs(eigenvalues))))
    zero = np.abs(eigenvalues) < threshold

    return Inertia(
        positive=int(np.sum((eigenvalues > 0) & ~zero)),
        negative=int(np.sum((eigenvalues < 0) & ~zero)),
        zero=int(np.sum(zero)),
    )


def spectral_report(profile: BreatherProfile) -> SpectralReport:
    return SpectralReport(
        eigenvalues=assemble_hessian(profile, HessianKind.MODIFIED).eigenvalues(),
        kernel_residual=kernel_residual(profile),
        coercivity_c2=coercivity_on_constrained(profile),
    )


@validate(step='required|numeric|gt:0')
def finite_difference_hessian(profile: BreatherProfile, step: float = 1e-2, params: Optional[Params] = None) -> np.ndarray:
    """The Hessian of H_E from differences of the gradient map.

    Each of Re and Im of every u_n, v_n is perturbed with the 4-point central
    stencil, which is exact for the cubic gradient up to round-off. The
    Wirtinger columns follow as d/dz = (D_x - i D_y) / 2 and d/d conj z = (D_x + i D_y) / 2.
    """
    params = params or profile.params
    base = profile.state()
    size = base.size
    entries = np.zeros((4 * size, 4 * size), dtype=complex)

    def gradient(state: LatticeState) -> np.ndarray:
        return hamiltonian_gradient(state, params, e_freq=params.e_freq).reshape(-1)

    def derivative(direction: LatticeState) -> np.ndarray:
        values = [gradient(base.plus(direction, scale=s * step)) for s in (2.0, 1.0, -1.0, -2.0)]
        return (-values[0] + 8.0 * values[1] - 8.0 * values[2] + values[3]) / (12.0 * step)

    for site in range(size):
        for component, column in ((0, 4 * site), (2, 4 * site + 2)):
            unit = np.zeros(size, dtype=complex)
            unit[site] = 1.0
            zeros = np.zeros(size, dtype=complex)
            pair = (unit, zeros) if component == 0 else (zeros, unit)

            d_real = derivative(LatticeState(base.n_half, *pair))
            d_imag = derivative(LatticeState(base.n_half, 1j * pair[0], 1j * pair[1]))

            entries[:, column] = 0.5 * (d_real - 1j * d_imag)
            entries[:, column + 1] = 0.5 * (d_real + 1j * d_imag)

    return entries


def max_relative_error(reference: np.ndarray, estimate: np.ndarray, floor: float = 1e-6) -> float:
    """max |A - F| / max(|A|, floor * max|A|) over the nonzero entries of A."""
    magnitude = np.abs(reference)
    nonzero = magnitude > 0.0

    if not np.any(nonzero):
        return float(np.max(np.abs(estimate)))

    scale = np.maximum(magnitude, floor * float(np.max(magnitude)))
    return float(np.max(np.abs(reference - estimate)[nonzero] / scale[nonzero]))


@validate(k=f'required|numeric|between:0,{pi!r}')
def zero_equilibrium_dispersion(params: Params, k: float) -> Tuple[complex, complex]:
    """lambda(k) = +-sqrt((omega - eps w_k)^2 - gamma^2), w_k = 4 sin^2(k/2).

    Both are real iff the plane wave of wavenumber k is linearly stable.
    """
    detuning = params.omega - 4.0 * params.epsilon * np.sin(0.5 * k) ** 2
    root = np.sqrt(complex(detuning ** 2 - params.gamma ** 2))
    return root, -root


def gamma_threshold(omega: float, epsilon: float) -> float:
    """min over k of |omega - eps w_k|: omega - 4 eps for omega > 4 eps, |omega| for omega < 0."""
    edge = omega - 4.0 * epsilon

    if omega * edge <= 0.0:
        return 0.0

    return min(abs(omega), abs(edge))


def scan_stability_threshold(omega: float, epsilon: float, n_k: int = 257, gamma_step: float = 1e-4,
                             gamma_max: Optional[float] = None) -> float:
    """The largest gamma on the grid 0, step, 2 step, ... for which every k in [0, pi] is stable.

    The k-grid includes both band ends.
    """
    gamma_max = abs(omega) + 1.0 if gamma_max is None else gamma_max
    k = np.linspace(0.0, pi, n_k)
    detuning_sq = (omega - 4.0 * epsilon * np.sin(0.5 * k) ** 2) ** 2
    gammas = gamma_step * np.arange(int(np.floor(gamma_max / gamma_step)) + 1)

    unstable = np.any(detuning_sq[np.newaxis, :] - gammas[:, np.newaxis] ** 2 < 0.0, axis=1)
    stable_count = int(np.argmax(unstable)) if np.any(unstable) else gammas.size
    threshold = float(gammas[stable_count - 1]) if stable_count > 0 else 0.0
    logger.info('stability threshold omega=%.6g eps=%.6g gamma0~%.6g', omega, epsilon, threshold)
    return threshold
