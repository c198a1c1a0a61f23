"""Three-mode interferometer + filter model in the sideband picture.

State ordering is ``(a, b^dagger, d)``: filter cavity field, conjugate
mechanical mode, differential interferometer mode. With time dependence
``exp(-i Omega t)`` every response is the solution of
``(-i Omega I - A) x = inputs``.

Noise normalisation: vacuum sidebands have unit spectral density and the
signal quadrature is read by homodyne, which adds the two signal sidebands
coherently. Strain spectra are single-sided; see ``docs/conventions.md``.
"""
from dataclasses import dataclass, field

import numpy as np

from .linalg import solve_on_grid
from .params import CONSTANTS

__all__ = [
    "StateSpaceModel",
    "TransferSet",
    "NoiseBudget",
    "log_grid",
    "build_model",
    "open_loop_eigs",
    "transfer_functions",
    "thermal_occupation",
    "sensitivity",
    "conventional_sensitivity",
    "mizuno_integral",
]

#: homodyne readout of the signal quadrature doubles signal power relative to
#: the (incoherently added) sideband noise
HOMODYNE_POWER_GAIN = 2.0


def log_grid(f_min=10.0, f_max=1e4, points_per_decade=100):
    """Logarithmic grid of angular frequencies (rad/s) spanning ``[f_min, f_max]`` Hz."""
    if not (0 < f_min < f_max):
        raise ValueError("need 0 < f_min < f_max, got %r, %r" % (f_min, f_max))
    if points_per_decade < 1:
        raise ValueError("points_per_decade must be >= 1")
    decades = np.log10(f_max / f_min)
    n = int(round(decades * points_per_decade)) + 1
    return 2 * np.pi * np.logspace(np.log10(f_min), np.log10(f_max), n)


@dataclass(frozen=True)
class StateSpaceModel:
    a_matrix: np.ndarray
    input_b: np.ndarray
    readout_d: np.ndarray
    noise_map: np.ndarray   # columns: d_in, b_th^dagger
    signal_map: np.ndarray  # per unit strain
    gamma_srm: float

    @property
    def output_row(self):
        """Row mapping the state onto d_out (direct d_in feedthrough excluded)."""
        return -np.sqrt(2 * self.gamma_srm) * self.readout_d


def build_model(rates):
    g, ws, gm, gs = rates.g, rates.omega_s, rates.gamma_m, rates.gamma_srm
    a = np.array([
        [0, 1j * g, -1j * ws],
        [-1j * g, -gm, 0],
        [-1j * ws, 0, -gs],
    ], dtype=complex)
    noise = np.zeros((3, 2), dtype=complex)
    noise[2, 0] = np.sqrt(2 * gs)
    noise[1, 1] = np.sqrt(2 * gm)
    signal = np.array([0, 0, 1j * rates.G0_Larm], dtype=complex)
    return StateSpaceModel(
        a_matrix=a,
        input_b=np.array([0, 1, 0], dtype=complex),
        readout_d=np.array([0, 0, 1], dtype=complex),
        noise_map=noise,
        signal_map=signal,
        gamma_srm=gs,
    )


def open_loop_eigs(model):
    """Eigenvalues of the dynamics matrix and whether any lies in the right half plane."""
    eigs = np.linalg.eigvals(model.a_matrix)
    return eigs, bool(np.any(eigs.real > 0))


@dataclass(frozen=True)
class TransferSet:
    grid: np.ndarray
    signal_tf: np.ndarray
    shot_tf: np.ndarray
    thermal_tf: np.ndarray
    actuation_tf: np.ndarray = None


def _resolvent_stack(a_matrix, grid):
    n = a_matrix.shape[0]
    return -1j * grid[:, None, None] * np.eye(n) - a_matrix[None, :, :]


def transfer_functions(model, grid, backend=None):
    """h, d_in, b_th^dagger (and actuation) -> d_out on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    cols = np.column_stack([model.noise_map, model.signal_map, model.input_b])
    x = solve_on_grid(_resolvent_stack(model.a_matrix, grid),
                      np.broadcast_to(cols, (grid.size,) + cols.shape), grid, backend=backend)
    out = np.einsum("k,nkm->nm", model.output_row, x)
    return TransferSet(
        grid=grid,
        signal_tf=out[:, 2],
        shot_tf=1.0 + out[:, 0],
        thermal_tf=out[:, 1],
        actuation_tf=out[:, 3],
    )


def thermal_occupation(T_envir, omega_m, consts=CONSTANTS):
    """Bath spectral density 2 k_B T / (hbar omega_m) + 1."""
    return 2 * consts.k_B * T_envir / (consts.hbar * omega_m) + 1.0


@dataclass(frozen=True)
class NoiseBudget:
    """Strain-referred amplitude spectral densities (1/sqrt(Hz)) on ``grid``.

    ``radiation_pressure_asd`` is only filled by the four-sideband solver; there
    ``total_asd`` comes from the full correlated solve rather than a
    quadrature sum.
    """

    grid: np.ndarray
    signal_tf: np.ndarray
    shot_asd: np.ndarray
    thermal_asd: np.ndarray
    total_asd: np.ndarray
    radiation_pressure_asd: np.ndarray = None
    flagged: tuple = field(default_factory=tuple)

    @property
    def frequency_hz(self):
        return self.grid / (2 * np.pi)

    def check(self, quadrature_sum=True, rtol=1e-9):
        """List of violated invariants (empty when healthy)."""
        problems = []
        for name in ("shot_asd", "thermal_asd", "total_asd", "radiation_pressure_asd"):
            v = getattr(self, name)
            if v is None:
                continue
            if not np.all(np.isfinite(v)):
                problems.append("%s has non-finite entries" % name)
            elif name in ("shot_asd", "total_asd") and not np.all(v > 0):
                problems.append("%s has non-positive entries" % name)
            elif np.any(v < 0):
                problems.append("%s has negative entries" % name)
        if quadrature_sum and self.radiation_pressure_asd is None:
            lhs = self.total_asd ** 2
            rhs = self.shot_asd ** 2 + self.thermal_asd ** 2
            finite = np.isfinite(lhs) & np.isfinite(rhs)
            if not np.allclose(lhs[finite], rhs[finite], rtol=rtol, atol=0):
                problems.append("total_asd^2 != shot_asd^2 + thermal_asd^2")
        return problems


def _refer_to_strain(noise_tf, signal_tf):
    sig = np.abs(signal_tf)
    with np.errstate(divide="ignore", invalid="ignore"):
        asd = np.abs(noise_tf) / (np.sqrt(HOMODYNE_POWER_GAIN) * sig)
    return np.where(sig == 0, np.inf, asd)


def sensitivity(model, grid, T_envir=0.0, omega_m=None, consts=CONSTANTS, backend=None,
                pickoff=0.0):
    """Shot and filter-thermal noise of the (formally open-loop) filtered detector.

    ``omega_m`` is only needed when ``T_envir > 0``. ``pickoff`` is the amplitude
    fraction diverted to the in-loop sensor; by default it is neglected,
    otherwise the science port loses ``pickoff**2`` of the power and gains the
    same amount of vacuum.
    """
    if not (T_envir >= 0):
        raise ValueError("T_envir must be >= 0")
    if not (0 <= pickoff < 1):
        raise ValueError("pickoff must lie in [0, 1)")
    tf = transfer_functions(model, grid, backend=backend)
    if T_envir > 0:
        if omega_m is None:
            raise ValueError("omega_m is required for T_envir > 0")
        n_th = thermal_occupation(T_envir, omega_m, consts)
    else:
        n_th = 1.0
    eta = 1.0 - pickoff ** 2
    shot_tf = np.sqrt(eta * np.abs(tf.shot_tf) ** 2 + pickoff ** 2)
    shot = _refer_to_strain(shot_tf, np.sqrt(eta) * tf.signal_tf)
    thermal = _refer_to_strain(tf.thermal_tf * np.sqrt(n_th), tf.signal_tf)
    total = np.sqrt(shot ** 2 + thermal ** 2)
    flagged = tuple(float(w) for w in tf.grid[tf.signal_tf == 0])
    return NoiseBudget(tf.grid, tf.signal_tf, shot, thermal, total, flagged=flagged)


def conventional_sensitivity(ifo, grid, consts=CONSTANTS, ideal=False):
    """Shot-noise-only budget of a single-mode detector without the filter.

    ``ideal=True`` removes the propagation phase lag (perfect compensation),
    leaving a flat response at the peak sensitivity.
    """
    grid = np.asarray(grid, dtype=float)
    omega_0 = 2 * np.pi * consts.c / ifo.lambda_0
    g0_l = omega_0 * np.sqrt(2 * ifo.P_arm * ifo.L_arm / (consts.hbar * omega_0 * consts.c))
    gamma = consts.c * ifo.T_SRM / (4 * ifo.L_arm)
    den = gamma - (0.0 if ideal else 1j) * grid
    den = np.broadcast_to(den, grid.shape).astype(complex)
    signal = -np.sqrt(2 * gamma) * 1j * g0_l / den
    reflection = 1.0 - 2 * gamma / den
    shot = _refer_to_strain(reflection, signal)
    zeros = np.zeros_like(shot)
    return NoiseBudget(grid, signal, shot, zeros, shot.copy())


def mizuno_integral(budget, tails=True):
    """Integrated inverse shot-noise power, ``int dOmega / S_h``.

    The trapezoid covers the grid. With ``tails`` the two ends are extended
    analytically: below the grid ``1/S_h`` is continued as an even quadratic
    in ``Omega`` through the first two samples (spectra are even in
    ``Omega``), above it as the power law through the last two samples.
    """
    w = np.asarray(budget.grid, dtype=float)
    inv = 1.0 / np.asarray(budget.shot_asd, dtype=float) ** 2
    total = np.trapezoid(inv, w) if hasattr(np, "trapezoid") else np.trapz(inv, w)
    if not tails or w.size < 2:
        return float(total)
    w0, w1 = w[0], w[1]
    curv = (inv[1] - inv[0]) / (w1 * w1 - w0 * w0)
    const = inv[0] - curv * w0 * w0
    low = const * w0 + curv * w0 ** 3 / 3
    if low < 0:
        low = inv[0] * w0
    slope = np.log(inv[-1] / inv[-2]) / np.log(w[-1] / w[-2])
    high = -inv[-1] * w[-1] / (slope + 1) if slope < -1 else 0.0
    return float(total + low + high)
