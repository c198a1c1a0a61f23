"""Four-sideband, finite-test-mass solve of the filtered detector.

Per sideband frequency ``Omega`` the unknowns are

====  ==========================================================
0     d(Omega)                interferometer, upper sideband
1     d(-Omega)^dagger        interferometer, lower sideband (conj.)
2     a(Omega)                filter, near the carrier
3     a(-Omega)^dagger
4     a(2 wp - Omega)^dagger  filter, far sideband of the pump
5     a(2 wp + Omega)
6     x(Omega - wp)           oscillator, in zero-point units
7     x(Omega + wp)
8     G0 X(Omega)             test-mass displacement times coupling
====  ==========================================================

with ``wp = omega_m + pump_shift`` the pump offset from the filter resonance.
Inputs are ``d_in`` (both sidebands), the far-sideband vacuum entering the
filter, the two mechanical bath components and the strain ``h``. The
interferometer carries only the ``omega_0 +/- Omega`` sidebands; light at
``omega_0 + 2 wp +/- Omega`` leaves the filter through its coupling mirror at
rate ``gamma_f``.
"""
from dataclasses import dataclass

import numpy as np

from .coupled import NoiseBudget, thermal_occupation
from .filter_model import mech_damping, mech_inverse_susceptibility, spring_compensating_shift
from .linalg import solve_on_grid
from .params import CONSTANTS, derive_rates

__all__ = [
    "INPUTS",
    "PORT_SIGNATURE",
    "FullSystem",
    "assemble",
    "solve",
    "symplectic_residual",
    "total_noise",
    "filter_block",
]

D_U, D_L, A_U, A_L, F_U, F_L, X_1, X_2, Y_TM = range(9)
INPUTS = ("d_in_upper", "d_in_lower_conj", "filter_far_conj", "filter_far",
          "bath_conj", "bath", "strain")
#: +1 for annihilation-type input ports, -1 for conjugated ones
PORT_SIGNATURE = np.array([1, -1, -1, 1, -1, 1])
VACUUM_PORTS = slice(0, 4)
THERMAL_PORTS = slice(4, 6)


def _fill_filter(lhs, rhs, omega, g, gamma_f, gamma_m, omega_m, wp, near, far, mech,
                 far_in, bath_in, conj):
    """Rows of one filter chain (near field, far field, oscillator).

    ``conj`` selects the mirror chain (``a(-Omega)^dagger``, ``a(2wp+Omega)``,
    ``x(Omega+wp)``), which is the complex conjugate of the direct chain
    evaluated at ``-Omega``.
    """
    s = -1.0 if conj else 1.0
    sigma = omega - s * wp
    lhs[:, near, near] += -1j * omega
    lhs[:, near, mech] = -1j * s * g
    lhs[:, far, far] = gamma_f - 1j * omega + 2j * s * wp
    lhs[:, far, mech] = 1j * s * g
    rhs[:, far, far_in] = np.sqrt(2 * gamma_f)
    lhs[:, mech, near] = 1j * s * g
    lhs[:, mech, far] = 1j * s * g
    lhs[:, mech, mech] = -1j * s * mech_inverse_susceptibility(sigma, omega_m, gamma_m)
    rhs[:, mech, bath_in] = np.sqrt(2 * mech_damping(sigma, omega_m, gamma_m))


@dataclass(frozen=True)
class FullSystem:
    grid: np.ndarray
    lhs: np.ndarray      # (n, 9, 9)
    inputs: np.ndarray   # (n, 9, 7)
    gamma_srm: float
    pump_shift: float


def _assemble(rates, omega_m, M, L_arm, hbar, grid, pump_shift, backaction):
    grid = np.asarray(grid, dtype=float)
    n = grid.size
    lhs = np.zeros((n, 9, 9), dtype=complex)
    rhs = np.zeros((n, 9, 7), dtype=complex)
    wp = omega_m + pump_shift
    g, ws, gs = rates.g, rates.omega_s, rates.gamma_srm

    _fill_filter(lhs, rhs, grid, g, rates.gamma_f, rates.gamma_m, omega_m, wp,
                 A_U, F_U, X_1, 2, 4, conj=False)
    _fill_filter(lhs, rhs, grid, g, rates.gamma_f, rates.gamma_m, omega_m, wp,
                 A_L, F_L, X_2, 3, 5, conj=True)
    # photon exchange between the differential mode and the filter
    lhs[:, A_U, D_U] = 1j * ws
    lhs[:, A_L, D_L] = -1j * ws

    lhs[:, D_U, D_U] = gs - 1j * grid
    lhs[:, D_U, A_U] = 1j * ws
    lhs[:, D_U, Y_TM] = -1j
    lhs[:, D_L, D_L] = gs - 1j * grid
    lhs[:, D_L, A_L] = -1j * ws
    lhs[:, D_L, Y_TM] = 1j
    rhs[:, D_U, 0] = np.sqrt(2 * gs)
    rhs[:, D_L, 1] = np.sqrt(2 * gs)

    # free test mass: -M Omega^2 X = hbar G0 (d + d^dag) - M Omega^2 L h
    lhs[:, Y_TM, Y_TM] = 1.0
    if backaction and np.isfinite(M):
        kappa = hbar * rates.G0_Larm ** 2 / (M * grid ** 2 * L_arm ** 2)
        lhs[:, Y_TM, D_U] = kappa
        lhs[:, Y_TM, D_L] = kappa
    rhs[:, Y_TM, 6] = rates.G0_Larm
    return FullSystem(grid, lhs, rhs, gs, pump_shift)


def assemble(filt, ifo, grid, consts=CONSTANTS, compensate_spring=True, backaction=True):
    """Build the per-frequency linear systems.

    ``compensate_spring`` retunes the pump so the static optical spring of the
    far sideband does not detune the oscillator (see
    :func:`~unstable_filter.filter_model.spring_compensating_shift`).
    ``backaction=False`` removes the radiation-pressure force on the test
    mass, leaving the signal drive intact.
    """
    rates = derive_rates(filt, ifo, consts)
    shift = spring_compensating_shift(rates.g, rates.gamma_f, filt.omega_m) \
        if compensate_spring else 0.0
    return _assemble(rates, filt.omega_m, ifo.M, ifo.L_arm, consts.hbar, grid, shift, backaction)


def solve(system, backend=None):
    """Output coefficients for every input port.

    Returns ``(upper, lower_conj, phase)``, each ``(n, 7)``: the two sidebands of
    ``d_out`` and the homodyne phase quadrature
    ``(d_out(Omega) - d_out(-Omega)^dagger) / (i sqrt(2))``.
    """
    x = solve_on_grid(system.lhs, system.inputs, system.grid, backend=backend)
    root = np.sqrt(2 * system.gamma_srm)
    upper = -root * x[:, D_U, :]
    lower = -root * x[:, D_L, :]
    upper[:, 0] += 1.0
    lower[:, 1] += 1.0
    phase = (upper - lower) / (1j * np.sqrt(2))
    return upper, lower, phase


def symplectic_residual(coeffs, signature=+1):
    """Deviation from ``sum_k sign_k |c_k|^2 = signature`` over the noise ports."""
    c = coeffs[:, :6]
    return np.abs((PORT_SIGNATURE * np.abs(c) ** 2).sum(axis=1) - signature)


def total_noise(filt, ifo, grid, T_envir=None, consts=CONSTANTS, compensate_spring=True,
                backend=None):
    """Strain-referred quantum + thermal noise of the phase-quadrature readout.

    ``shot_asd`` is computed with radiation pressure switched off;
    ``radiation_pressure_asd`` is the part of the vacuum noise that reaches
    the output through the test mass; ``total_asd`` is the full correlated
    sum of every input port.
    """
    if T_envir is None:
        T_envir = filt.T_envir
    if not (T_envir >= 0):
        raise ValueError("T_envir must be >= 0")
    full = assemble(filt, ifo, grid, consts, compensate_spring, backaction=True)
    free = assemble(filt, ifo, grid, consts, compensate_spring, backaction=False)
    y_full = solve(full, backend)[2]
    y_free = solve(free, backend)[2]

    n_th = thermal_occupation(T_envir, filt.omega_m, consts)
    signal = y_full[:, 6]
    sig = np.abs(signal)

    def asd(power):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(sig == 0, np.inf, np.sqrt(power) / sig)

    vac_full = (np.abs(y_full[:, VACUUM_PORTS]) ** 2).sum(axis=1)
    therm = n_th * (np.abs(y_full[:, THERMAL_PORTS]) ** 2).sum(axis=1)
    shot = (np.abs(y_free[:, VACUUM_PORTS]) ** 2).sum(axis=1)
    rp = (np.abs(y_full[:, VACUUM_PORTS] - y_free[:, VACUUM_PORTS]) ** 2).sum(axis=1)
    flagged = tuple(float(w) for w in full.grid[sig == 0])
    return NoiseBudget(
        grid=full.grid,
        signal_tf=signal,
        shot_asd=asd(shot),
        thermal_asd=asd(therm),
        total_asd=asd(vac_full + therm),
        radiation_pressure_asd=asd(rp),
        flagged=flagged,
    )


def filter_block(rates, omega_m, grid, pump_shift=0.0, backend=None):
    """The filter chain alone, with its own input port at rate ``gamma_f``.

    Built from the same row helper as :func:`assemble`; returns the
    ``(n, 3)`` output coefficients for (near input, far input, bath) in the
    layout of :func:`~unstable_filter.filter_model.exact_response`.
    """
    grid = np.asarray(grid, dtype=float)
    n = grid.size
    lhs = np.zeros((n, 3, 3), dtype=complex)
    rhs = np.zeros((n, 3, 3), dtype=complex)
    _fill_filter(lhs, rhs, grid, rates.g, rates.gamma_f, rates.gamma_m, omega_m,
                 omega_m + pump_shift, 0, 1, 2, 1, 2, conj=False)
    lhs[:, 0, 0] += rates.gamma_f
    rhs[:, 0, 0] = np.sqrt(2 * rates.gamma_f)
    x = solve_on_grid(lhs, rhs, grid, backend=backend)
    out = np.sqrt(2 * rates.gamma_f) * x[:, 0, :]
    out[:, 0] -= 1.0
    return out
