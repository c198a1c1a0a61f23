"""Observer-based stabilisation of the filtered detector.

Conventions: plant ``x' = A x + B u``, in-loop measurement ``y = D x``;
observer ``xh' = A xh + B u + L (y - D xh)``, feedback ``u = -K xh``. With
``s = -i Omega`` the controller transfer ``y -> u`` is
``C(Omega) = -K (-i Omega I - A + B K + L D)^{-1} L``.
"""
from dataclasses import dataclass

import numpy as np

from .coupled import transfer_functions
from .linalg import solve_on_grid

__all__ = [
    "UncontrollableError",
    "UnstableDesignError",
    "FrequencyResponse",
    "ControllerDesign",
    "observability_rank",
    "controllability_rank",
    "place_poles",
    "observer_gains",
    "default_targets",
    "design_controller",
    "published_gains",
    "evaluate_gains",
    "controller_tf",
    "closed_loop_matrix",
    "closed_loop_eigs",
    "youla_controller",
    "youla_closed_loop_matrix",
    "snr_invariance",
]

RANK_RTOL = 1e-9


class UncontrollableError(np.linalg.LinAlgError):
    pass


class UnstableDesignError(ValueError):
    pass


@dataclass(frozen=True)
class FrequencyResponse:
    grid: np.ndarray
    values: np.ndarray


def _col(v):
    return np.asarray(v, dtype=complex).reshape(-1, 1)


def _row(v):
    return np.asarray(v, dtype=complex).reshape(1, -1)


def _numerical_rank(m):
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def _scale(a):
    s = np.abs(a).max()
    return s if s > 0 else 1.0


def observability_rank(a, d_row):
    a = np.asarray(a, dtype=complex)
    # normalise so powers of A stay comparable
    an = a / _scale(a)
    d = _row(d_row)
    blocks = [d]
    for _ in range(a.shape[0] - 1):
        blocks.append(blocks[-1] @ an)
    return _numerical_rank(np.vstack(blocks))


def controllability_rank(a, b_col):
    a = np.asarray(a, dtype=complex)
    an = a / _scale(a)
    b = _col(b_col)
    blocks = [b]
    for _ in range(a.shape[0] - 1):
        blocks.append(an @ blocks[-1])
    return _numerical_rank(np.hstack(blocks))


def place_poles(a, b_col, targets):
    """Single-input pole placement over the complex field (Ackermann).

    Returns the row ``K`` with ``eig(A - B K) = targets``.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    targets = np.asarray(targets, dtype=complex)
    if targets.shape != (n,):
        raise ValueError("need %d target poles, got %d" % (n, targets.size))
    rank = controllability_rank(a, b_col)
    if rank < n:
        raise UncontrollableError(
            "(A, B) is not controllable: controllability rank %d < %d" % (rank, n))
    s = _scale(a)
    an = a / s
    b = _col(b_col)
    ctrb = np.hstack([np.linalg.matrix_power(an, k) @ b for k in range(n)])
    # desired characteristic polynomial evaluated at the scaled A
    coeffs = np.poly(targets / s)
    p_of_a = np.zeros_like(an)
    for c in coeffs:
        p_of_a = p_of_a @ an + c * np.eye(n)
    e_last = np.zeros((1, n), dtype=complex)
    e_last[0, -1] = 1.0
    # K_scaled = e_n^T ctrb^{-1} p(A_scaled); solve rather than invert
    k_scaled = np.linalg.solve(ctrb.T, e_last.T).T @ p_of_a
    return s * k_scaled


def observer_gains(a, d_row, targets):
    """Column ``L`` with ``eig(A - L D) = targets``, by duality."""
    a = np.asarray(a, dtype=complex)
    k = place_poles(a.conj().T, _row(d_row).conj().T, np.conj(targets))
    return k.conj().T


def default_targets(a):
    """Three poles at ``p, p +/- i|p|`` with ``p = -2 * (largest open-loop real part)``."""
    eigs = np.linalg.eigvals(a)
    p = -2.0 * max(abs(eigs.real.max()), np.abs(eigs).max() * 1e-3)
    return np.array([p, p + 1j * abs(p), p - 1j * abs(p)])


@dataclass(frozen=True)
class ControllerDesign:
    K: np.ndarray             # (1, n)
    L: np.ndarray             # (n, 1)
    epsilon: float
    placed_poles_K: np.ndarray
    placed_poles_L: np.ndarray

    def __post_init__(self):
        if not (0 < self.epsilon <= 1):
            raise ValueError("epsilon must lie in (0, 1]")


def _stable(eigs):
    return bool(np.all(np.asarray(eigs).real < 0))


def design_controller(a, b_col, d_row, targets_k=None, targets_l=None, epsilon=0.1):
    """Observer-based design by pole placement; rejects unstable results.

    Observer poles default to twice the feedback poles.
    """
    a = np.asarray(a, dtype=complex)
    if targets_k is None:
        targets_k = default_targets(a)
    if targets_l is None:
        # coincident controller/observer poles make the closed-loop spectrum ill-conditioned
        targets_l = 2.0 * np.asarray(targets_k)
    if not (_stable(targets_k) and _stable(targets_l)):
        raise UnstableDesignError("target poles must have negative real parts")
    k = place_poles(a, b_col, targets_k)
    l_gain = observer_gains(a, d_row, targets_l)
    design = ControllerDesign(k, l_gain, epsilon, np.asarray(targets_k, dtype=complex),
                              np.asarray(targets_l, dtype=complex))
    eig_k = np.linalg.eigvals(a - _col(b_col) @ k)
    eig_l = np.linalg.eigvals(a - l_gain @ _row(d_row))
    if not (_stable(eig_k) and _stable(eig_l)):
        raise UnstableDesignError("placed design is not stable: %s / %s" % (eig_k, eig_l))
    return design


def published_gains(epsilon=0.1):
    """Published gains ``K = 3e5/eps (-i, 1, -1)``, ``L = 5e5/eps (i, 1.2, 1)^T``."""
    k = 3e5 / epsilon * np.array([[-1j, 1, -1]], dtype=complex)
    l_gain = 5e5 / epsilon * np.array([[1j], [1.2], [1]], dtype=complex)
    return k, l_gain


def evaluate_gains(a, b_col, d_row, k, l_gain):
    """Stability report for arbitrary gains (nothing is asserted)."""
    a = np.asarray(a, dtype=complex)
    eig_k = np.linalg.eigvals(a - _col(b_col) @ _row(k))
    eig_l = np.linalg.eigvals(a - _col(l_gain) @ _row(d_row))
    cl = closed_loop_eigs(a, b_col, d_row, k, l_gain)
    return {
        "eig_A_minus_BK": eig_k,
        "eig_A_minus_LD": eig_l,
        "closed_loop": cl,
        "stable": _stable(eig_k) and _stable(eig_l) and _stable(cl),
    }


def _observer_matrix(a, b_col, d_row, k, l_gain):
    return np.asarray(a, dtype=complex) - _col(b_col) @ _row(k) - _col(l_gain) @ _row(d_row)


def controller_tf(a, b_col, d_row, k, l_gain, grid, backend=None):
    grid = np.asarray(grid, dtype=float)
    ac = _observer_matrix(a, b_col, d_row, k, l_gain)
    n = ac.shape[0]
    lhs = -1j * grid[:, None, None] * np.eye(n) - ac
    x = solve_on_grid(lhs, np.broadcast_to(_col(l_gain)[:, 0], (grid.size, n)), grid,
                      backend=backend)
    return FrequencyResponse(grid, -(x @ _row(k)[0]))


def closed_loop_matrix(a, b_col, d_row, k, l_gain):
    a = np.asarray(a, dtype=complex)
    bk = _col(b_col) @ _row(k)
    ld = _col(l_gain) @ _row(d_row)
    return np.block([[a, -bk], [ld, a - bk - ld]])


def closed_loop_eigs(a, b_col, d_row, k, l_gain):
    return np.linalg.eigvals(closed_loop_matrix(a, b_col, d_row, k, l_gain))


def _q_values(q, grid):
    """Frequency samples of the Youla parameter.

    ``q`` is a scalar (static), a ``FrequencyResponse`` on ``grid``, or a
    state-space tuple ``(Aq, Bq, Cq, Dq)``.
    """
    if isinstance(q, FrequencyResponse):
        if q.grid.shape != grid.shape or not np.allclose(q.grid, grid):
            raise ValueError("Q sampled on a different grid")
        return np.asarray(q.values, dtype=complex)
    if isinstance(q, tuple):
        aq, bq, cq, dq = (np.atleast_2d(np.asarray(m, dtype=complex)) for m in q)
        if np.any(np.linalg.eigvals(aq).real >= 0):
            raise ValueError("Q realisation is not stable")
        m = aq.shape[0]
        lhs = -1j * grid[:, None, None] * np.eye(m) - aq
        x = solve_on_grid(lhs, np.broadcast_to(bq[:, 0], (grid.size, m)), grid)
        return dq[0, 0] + x @ cq[0]
    return np.full(grid.shape, complex(q))


def youla_controller(design, a, b_col, d_row, q, grid, backend=None):
    """Member of the family of stabilising controllers indexed by stable ``q``.

    The observer is augmented with ``v = Q (y - D xh)`` added to the
    control, which yields
    ``C = -K R L + (1 - K R B)(1 + Q D R B)^{-1} Q (1 - D R L)``
    with ``R = (s I - A + B K + L D)^{-1}``; ``q = 0`` gives the base controller.
    """
    grid = np.asarray(grid, dtype=float)
    qv = _q_values(q, grid)
    if not np.all(np.isfinite(qv)):
        raise ValueError("Q is unbounded on the grid")
    ac = _observer_matrix(a, b_col, d_row, design.K, design.L)
    n = ac.shape[0]
    lhs = -1j * grid[:, None, None] * np.eye(n) - ac
    rhs = np.broadcast_to(np.column_stack([_col(design.L), _col(b_col)]), (grid.size, n, 2))
    x = solve_on_grid(lhs, rhs, grid, backend=backend)
    k = _row(design.K)[0]
    d = _row(d_row)[0]
    krl, krb = x[:, :, 0] @ k, x[:, :, 1] @ k
    drl, drb = x[:, :, 0] @ d, x[:, :, 1] @ d
    values = -krl + (1 - krb) * qv * (1 - drl) / (1 + qv * drb)
    return FrequencyResponse(grid, values)


def youla_closed_loop_matrix(design, a, b_col, d_row, q_ss):
    """State matrix of plant + Youla controller for ``q_ss = (Aq, Bq, Cq, Dq)``.

    Its spectrum is ``eig(A-BK) U eig(A-LD) U eig(Aq)`` for any stable ``Aq``.
    """
    a = np.asarray(a, dtype=complex)
    b = _col(b_col)
    d = _row(d_row)
    k = _row(design.K)
    l_gain = _col(design.L)
    aq, bq, cq, dq = (np.atleast_2d(np.asarray(m, dtype=complex)) for m in q_ss)
    n, m = a.shape[0], aq.shape[0]
    # r = y - D xh = D (x - xh);  v = Cq z + Dq r;  u = -K xh + v
    ac = a - b @ k - l_gain @ d
    top = np.hstack([a + b @ dq @ d, -b @ k - b @ dq @ d, b @ cq])
    mid = np.hstack([l_gain @ d + b @ dq @ d, ac - b @ dq @ d, b @ cq])
    bot = np.hstack([bq @ d, -bq @ d, aq])
    return np.vstack([top, mid, bot])


def snr_invariance(model, design, grid, T_envir=0.0, omega_m=None, backend=None):
    """Largest relative change of the signal-referred noise when the loop closes.

    The in-loop sensor is the heterodyne pickoff of ``d_out``; normalised to
    the readout convention it measures ``D x - d_in / sqrt(2 gamma_srm)``, so
    the loop sees signal and noise in the same proportion as the science
    output. The closed loop is solved as one state-space system (plant plus
    controller states), not through the algebraic shortcut.
    """
    from .coupled import thermal_occupation

    grid = np.asarray(grid, dtype=float)
    n_th = thermal_occupation(T_envir, omega_m) if T_envir > 0 else 1.0
    weights = np.array([1.0, n_th])

    def referred(signal, noise):
        power = (np.abs(noise) ** 2 * weights).sum(axis=1)
        return np.sqrt(power) / np.abs(signal)

    open_tf = transfer_functions(model, grid, backend=backend)
    open_ref = referred(open_tf.signal_tf,
                        np.column_stack([open_tf.shot_tf, open_tf.thermal_tf]))

    a = model.a_matrix
    n = a.shape[0]
    b = _col(model.input_b)
    d = _row(model.readout_d)
    k = _row(design.K)
    l_gain = _col(design.L)
    big = np.block([[a, -b @ k], [l_gain @ d, a - b @ k - l_gain @ d]])
    # inputs: d_in, b_th^dagger, h; the sensor noise term enters the observer only
    sensor_noise = np.zeros((2 * n, 3), dtype=complex)
    sensor_noise[n:, 0] = (-1.0 / np.sqrt(2 * model.gamma_srm)) * l_gain[:, 0]
    inputs = np.zeros((2 * n, 3), dtype=complex)
    inputs[:n, :2] = model.noise_map
    inputs[:n, 2] = model.signal_map
    inputs += sensor_noise
    lhs = -1j * grid[:, None, None] * np.eye(2 * n) - big
    x = solve_on_grid(lhs, np.broadcast_to(inputs, (grid.size, 2 * n, 3)), grid, backend=backend)
    out = np.einsum("k,nkm->nm", model.output_row, x[:, :n, :])
    closed_ref = referred(out[:, 2], np.column_stack([1.0 + out[:, 0], out[:, 1]]))
    return float(np.max(np.abs(closed_ref / open_ref - 1.0)))
