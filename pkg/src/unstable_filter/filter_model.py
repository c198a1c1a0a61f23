"""Sideband response of the optomechanical filter.

Time dependence is ``exp(-i*Omega*t)`` throughout; ``Omega`` is the sideband
offset from the filter-cavity resonance. The closed-form functions implement
the resolved-sideband (rotating-wave) model; :func:`exact_response` keeps the
counter-rotating coupling to the sideband at ``omega_0 + 2*omega_m``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .linalg import SingularSystemError, solve_on_grid

__all__ = [
    "DegenerateParameterError",
    "FilterTransfer",
    "ExactFilterResponse",
    "rwa_transfer",
    "thermal_transfer",
    "negative_dispersion_approx",
    "mech_susceptibility",
    "filter_transfer",
    "exact_response",
    "mech_inverse_susceptibility",
    "mech_damping",
    "spring_compensating_shift",
]


class DegenerateParameterError(ZeroDivisionError):
    """Pole on the evaluation point: gamma_m == gamma_opt at Omega == 0."""


def _check_rates(gamma_m, gamma_opt):
    if np.any(np.asarray(gamma_opt) <= 0):
        raise ValueError("gamma_opt must be > 0")
    if np.any(np.asarray(gamma_m) < 0):
        raise ValueError("gamma_m must be >= 0")


def _pole(omega, gamma_m, gamma_opt):
    den = omega + 1j * (gamma_m - gamma_opt)
    if np.any(den == 0):
        raise DegenerateParameterError(
            "gamma_m == gamma_opt puts the filter pole at Omega = 0")
    return den


def rwa_transfer(omega, gamma_m, gamma_opt):
    """Signal transfer a_in -> a_out of the filter (phase-insensitive amplifier)."""
    _check_rates(gamma_m, gamma_opt)
    omega = np.asarray(omega, dtype=float)
    return (omega + 1j * (gamma_m + gamma_opt)) / _pole(omega, gamma_m, gamma_opt)


def thermal_transfer(omega, gamma_m, gamma_opt):
    """Transfer of the mechanical bath operator b_th^dagger(-Omega) into a_out."""
    _check_rates(gamma_m, gamma_opt)
    omega = np.asarray(omega, dtype=float)
    return 2 * np.sqrt(gamma_m * gamma_opt) / _pole(omega, gamma_m, gamma_opt)


def negative_dispersion_approx(omega, gamma_opt):
    """Low-frequency form ``-exp(-2i Omega / gamma_opt)`` of the lossless filter."""
    if np.any(np.asarray(gamma_opt) <= 0):
        raise ValueError("gamma_opt must be > 0")
    return -np.exp(-2j * np.asarray(omega, dtype=float) / gamma_opt)


def mech_susceptibility(omega, gamma_m, gamma_opt):
    """Effective mechanical susceptibility; pole at ``i(gamma_opt - gamma_m)``.

    ``gamma_opt = 0`` is allowed here (bare oscillator).
    """
    if np.any(np.asarray(gamma_m) < 0) or np.any(np.asarray(gamma_opt) < 0):
        raise ValueError("rates must be >= 0")
    den = 1j * np.asarray(omega, dtype=float) + gamma_m - gamma_opt
    if np.any(den == 0):
        raise DegenerateParameterError(
            "gamma_m == gamma_opt puts the mechanical pole at Omega = 0")
    return -1.0 / den


@dataclass(frozen=True)
class FilterTransfer:
    grid: np.ndarray
    t_signal: np.ndarray
    n_thermal: np.ndarray

    def commutator_residual(self):
        return np.abs(np.abs(self.t_signal) ** 2 - np.abs(self.n_thermal) ** 2 - 1)


def filter_transfer(grid, gamma_m, gamma_opt):
    grid = np.asarray(grid, dtype=float)
    return FilterTransfer(grid, rwa_transfer(grid, gamma_m, gamma_opt),
                          thermal_transfer(grid, gamma_m, gamma_opt))


# -- exact (non-RWA) response ------------------------------------------------

def mech_inverse_susceptibility(sigma, omega_m, gamma_m):
    """``(omega_m^2 - sigma^2 - 2i Gamma(sigma) sigma) / (2 omega_m)`` in
    displacement units of the zero-point amplitude.

    The viscous width is normalised so that the amplitude decay rate at
    resonance is ``gamma_m`` (matching the rotating-wave equations).
    """
    sigma = np.asarray(sigma, dtype=float)
    return ((omega_m - sigma) * (omega_m + sigma) - 2j * gamma_m * sigma) / (2 * omega_m)


def mech_damping(sigma, omega_m, gamma_m):
    """Amplitude damping rate of the oscillator at frequency ``sigma``."""
    return gamma_m * np.abs(np.asarray(sigma, dtype=float)) / omega_m


def spring_compensating_shift(g, gamma_f, omega_m):
    """Pump detuning that cancels the static optical spring of the
    counter-rotating sideband.

    With the pump at ``omega_0 + omega_m + shift`` the far sideband at
    ``2*(omega_m + shift)`` pulls the mechanical resonance by roughly
    ``g**2 / (2 omega_m)``; the returned shift puts the effective resonance back
    on the pump-cavity difference frequency.
    """
    def residual(shift):
        wp = omega_m + shift
        return (omega_m - wp) * (omega_m + wp) / (2 * omega_m) \
            + 2 * g * g * wp / (gamma_f ** 2 + 4 * wp * wp)

    estimate = g * g / (2 * omega_m)
    if estimate == 0:
        return 0.0
    return brentq(residual, 0.0, 4 * estimate + 1e-12, xtol=1e-14, rtol=1e-15)


@dataclass(frozen=True)
class ExactFilterResponse:
    grid: np.ndarray
    t_lower: np.ndarray
    t_upper_conj: np.ndarray
    n_thermal: np.ndarray
    phase_error: np.ndarray

    def commutator_residual(self):
        return np.abs(np.abs(self.t_lower) ** 2 - np.abs(self.t_upper_conj) ** 2
                      - np.abs(self.n_thermal) ** 2 - 1)


def _exact_solve(omega, gamma_f, gamma_m, g, omega_m, pump_shift, backend):
    wp = omega_m + pump_shift
    n = omega.size
    sigma = omega - wp
    a = np.zeros((n, 3, 3), dtype=complex)
    # unknowns: lower sideband a(Omega), conjugate upper sideband a(2 wp - Omega)^dag,
    # oscillator displacement at sigma = Omega - wp
    a[:, 0, 0] = gamma_f - 1j * omega
    a[:, 0, 2] = -1j * g
    a[:, 1, 1] = gamma_f - 1j * omega + 2j * wp
    a[:, 1, 2] = 1j * g
    a[:, 2, 0] = 1j * g
    a[:, 2, 1] = 1j * g
    a[:, 2, 2] = -1j * mech_inverse_susceptibility(sigma, omega_m, gamma_m)
    b = np.zeros((n, 3, 3), dtype=complex)
    b[:, 0, 0] = np.sqrt(2 * gamma_f)
    b[:, 1, 1] = np.sqrt(2 * gamma_f)
    b[:, 2, 2] = np.sqrt(2 * mech_damping(sigma, omega_m, gamma_m))
    x = solve_on_grid(a, b, omega, backend=backend)
    out = np.sqrt(2 * gamma_f) * x[:, 0, :]
    out[:, 0] -= 1.0
    return out


def exact_response(rates, omega_m, grid, pump_shift=0.0, backend=None):
    """Filter response without the rotating-wave approximation.

    Parameters
    ----------
    rates : DerivedRates
        Only ``gamma_f``, ``gamma_m``, ``g`` and ``gamma_opt`` are used.
    omega_m : float
        Mechanical angular frequency.
    grid : array
        Sideband angular frequencies (rad/s), positive and ascending.
    pump_shift : float
        Extra pump detuning on top of ``omega_m`` (see
        :func:`spring_compensating_shift`).
    """
    grid = np.asarray(grid, dtype=float)
    out = _exact_solve(grid, rates.gamma_f, rates.gamma_m, rates.g, omega_m, pump_shift, backend)

    # continue the phase branch from Omega = 0 where possible
    try:
        origin = _exact_solve(np.zeros(1), rates.gamma_f, rates.gamma_m, rates.g,
                              omega_m, pump_shift, backend)[:, 0]
    except SingularSystemError:
        origin = None
    raw = np.angle(-out[:, 0])
    if origin is not None:
        raw = np.unwrap(np.concatenate([np.angle(-origin), raw]))[1:]
    else:
        raw = np.unwrap(raw)
    phase_error = raw + 2 * np.arctan(grid / rates.gamma_opt)
    return ExactFilterResponse(grid, out[:, 0], out[:, 1], out[:, 2], phase_error)
