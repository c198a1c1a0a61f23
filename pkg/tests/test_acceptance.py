"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the terminal summary (see
conftest.py) so they show up without ``-s``.
"""
import math
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from unstable_filter.cli import cmd_sensitivity, spectrum_distance
from unstable_filter.config import load_config
from unstable_filter.control import (
    closed_loop_eigs,
    controllability_rank,
    design_controller,
    evaluate_gains,
    observability_rank,
    published_gains,
    snr_invariance,
)
from unstable_filter.coupled import (
    build_model,
    conventional_sensitivity,
    log_grid,
    mizuno_integral,
    open_loop_eigs,
    sensitivity,
)
from unstable_filter.filter_model import rwa_transfer, thermal_transfer
from unstable_filter.params import derive_rates, nominal_filter, nominal_ifo, thermal_bound
from unstable_filter.rigorous import total_noise

RESULTS = []
B = np.array([0, 1, 0], dtype=complex)
D = np.array([0, 0, 1], dtype=complex)
C_LIGHT = 299792458.0


def report(number, title, ok, detail, elapsed, budget=None):
    within = budget is None or elapsed < budget
    passed = bool(ok and within)
    timing = "%.3fs" % elapsed + ("" if budget is None else " (limit %gs)" % budget)
    line = "criterion %2d %-30s %s  %s  [%s]" % (number, title, "PASS" if passed else "FAIL",
                                               detail, timing)
    RESULTS.append(line)
    print(line)
    assert ok, detail
    assert within, "runtime %.3fs over the %gs limit" % (elapsed, budget)


@pytest.fixture(scope="module")
def nominal():
    filt, ifo = nominal_filter(), nominal_ifo()
    rates = derive_rates(filt, ifo)
    return filt, ifo, rates, build_model(rates)


def test_criterion_01_commutator():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    n = 10_000
    omega = rng.uniform(-1e6, 1e6, n)
    gamma_opt = 10 ** rng.uniform(0, 6, n)
    gamma_m = gamma_opt * rng.uniform(0, 0.999, n)
    res = np.abs(np.abs(rwa_transfer(omega, gamma_m, gamma_opt)) ** 2
                 - np.abs(thermal_transfer(omega, gamma_m, gamma_opt)) ** 2 - 1)
    elapsed = time.perf_counter() - t0
    worst = res.max()
    report(1, "commutator preservation", worst <= 1e-10,
           "max residual %.2e over %d points" % (worst, n), elapsed, 1.0)


def test_criterion_02_thermal_bound():
    t0 = time.perf_counter()
    value = thermal_bound(2 * math.pi * 100)
    elapsed = time.perf_counter() - t0
    report(2, "thermal bound", abs(value / 6.0e-10 - 1) <= 0.05,
           "T/Q_m = %.4e K" % value, elapsed)


def test_criterion_03_phase_compensation():
    t0 = time.perf_counter()
    gamma_opt = C_LIGHT / 4000.0
    grid = log_grid(10, 1e3)
    lhs = np.unwrap(np.angle(-rwa_transfer(grid, 0.0, gamma_opt))) + 2 * grid * 4000.0 / C_LIGHT
    bound = 2 / 3 * (grid / gamma_opt) ** 3 + 1e-12
    elapsed = time.perf_counter() - t0
    margin = (lhs - bound).max()
    report(3, "phase compensation", np.all(lhs <= bound),
           "max(residual - cubic bound) = %.2e rad" % margin, elapsed)


def test_criterion_04_open_loop_instability(nominal):
    t0 = time.perf_counter()
    model = nominal[3]
    eigs, _ = open_loop_eigs(model)
    n_unstable = int(np.sum(eigs.real > 0))
    trace = np.trace(model.a_matrix)
    trace_res = abs(eigs.sum() - trace) / abs(trace)
    elapsed = time.perf_counter() - t0
    report(4, "open-loop instability", n_unstable == 1 and trace_res <= 1e-10,
           "%d unstable root(s), trace residual %.1e" % (n_unstable, trace_res), elapsed)


def test_criterion_05_ranks(nominal):
    t0 = time.perf_counter()
    a = nominal[3].a_matrix
    obs, ctrb = observability_rank(a, D), controllability_rank(a, B)
    elapsed = time.perf_counter() - t0
    report(5, "observability/controllability", obs == 3 and ctrb == 3,
           "ranks %d/%d" % (obs, ctrb), elapsed)


def test_criterion_06_stabilization(nominal):
    t0 = time.perf_counter()
    a = nominal[3].a_matrix
    design = design_controller(a, B, D)
    ek = np.linalg.eigvals(a - np.outer(B, design.K[0]))
    el = np.linalg.eigvals(a - design.L @ D[None, :])
    placement = max(spectrum_distance(ek, design.placed_poles_K),
                    spectrum_distance(el, design.placed_poles_L))
    cl = closed_loop_eigs(a, B, D, design.K, design.L)
    separation = spectrum_distance(cl, np.concatenate([ek, el]))
    published = evaluate_gains(a, B, D, *published_gains(0.1))
    elapsed = time.perf_counter() - t0
    report(6, "stabilization", placement <= 1e-6 and separation <= 1e-9,
           "placement %.1e, separation %.1e, published gains %s" % (
               placement, separation, "stable" if published["stable"] else "UNSTABLE (recorded)"),
           elapsed, 1.0)


def test_criterion_07_snr_invariance(nominal):
    t0 = time.perf_counter()
    model = nominal[3]
    design = design_controller(model.a_matrix, B, D)
    dev = snr_invariance(model, design, log_grid())
    elapsed = time.perf_counter() - t0
    report(7, "SNR invariance", dev <= 1e-6, "max relative deviation %.2e" % dev, elapsed, 5.0)


def test_criterion_08_mizuno(nominal):
    t0 = time.perf_counter()
    ifo = nominal[1]
    grid = log_grid(1, 1e5)
    values = [mizuno_integral(conventional_sensitivity(replace(ifo, T_SRM=t), grid))
              for t in np.logspace(-3, -1, 5)]
    spread = max(values) / min(values) - 1
    elapsed = time.perf_counter() - t0
    report(8, "Mizuno invariance", spread <= 0.01,
           "spread %.3f%% for T_SRM 1e-3..1e-1" % (100 * spread), elapsed, 5.0)


def test_criterion_09_bandwidth(nominal):
    t0 = time.perf_counter()
    ifo, model = nominal[1], nominal[3]
    grid = log_grid()
    filt = sensitivity(model, grid)
    conv = conventional_sensitivity(ifo, grid)
    band = grid <= 2 * math.pi * 2000
    flat_db = 20 * np.log10(filt.shot_asd[band].max() / filt.shot_asd[band].min())
    peak = filt.shot_asd[0] / conv.shot_asd[0]
    elapsed = time.perf_counter() - t0
    report(9, "bandwidth enhancement", flat_db <= 3.0 and abs(peak - 1) <= 0.01,
           "flatness %.3f dB, lowest-bin ratio %.4f" % (flat_db, peak), elapsed, 5.0)


def test_criterion_10_rwa_consistency(nominal):
    t0 = time.perf_counter()
    filt, ifo, rates, model = nominal
    grid = log_grid(10, 1e3)
    heavy = total_noise(filt, replace(ifo, M=1e6), grid, T_envir=0.0)
    rwa = sensitivity(model, grid)
    dev = np.abs(heavy.shot_asd / rwa.shot_asd - 1).max()
    light = total_noise(filt, ifo, log_grid(), T_envir=0.0)
    rise = light.total_asd[0] / light.shot_asd[0]
    elapsed = time.perf_counter() - t0
    report(10, "RWA consistency", dev <= 0.01 and rise > 1,
           "M=1e6 max deviation %.3f%%, M=40 total/shot at 10 Hz %.2f" % (100 * dev, rise),
           elapsed, 30.0)


def test_criterion_11_thermal_ordering(nominal):
    t0 = time.perf_counter()
    filt, ifo, rates, model = nominal
    grid = log_grid()
    bound = thermal_bound(rates.gamma_srm) * filt.Q_m
    temps = (0.0, bound, 10 * bound)
    rwa = [sensitivity(model, grid, t, filt.omega_m).total_asd for t in temps]
    full = [total_noise(filt, ifo, grid, T_envir=t).total_asd for t in temps]
    ok = all(np.all(b >= a) for seq in (rwa, full) for a, b in zip(seq, seq[1:]))
    elapsed = time.perf_counter() - t0
    report(11, "thermal ordering", ok,
           "T = 0, %.3g K, %.3g K; worst mid-band degradation at bound %.3f" % (
               bound, 10 * bound, (rwa[1] / rwa[0]).max()), elapsed, 10.0)


def test_criterion_12_determinism(tmp_path):
    t0 = time.perf_counter()
    cfg = load_config(environ={})
    for sub in ("run1", "run2"):
        cmd_sensitivity(cfg, str(tmp_path / sub))
    names = sorted(os.listdir(tmp_path / "run1"))
    same = names == sorted(os.listdir(tmp_path / "run2")) and all(
        (tmp_path / "run1" / n).read_bytes() == (tmp_path / "run2" / n).read_bytes()
        for n in names)
    elapsed = time.perf_counter() - t0
    report(12, "determinism", same, "%d files byte-identical" % len(names), elapsed)
