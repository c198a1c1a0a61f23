"""Command-line front end.

Every subcommand prints a JSON report on stdout and exits 0 only if all hard
checks pass. On failure the list of failed checks is also printed to stderr
as ``{"ok": false, "failures": [...]}`` and the exit code is 1 (2 for
configuration errors).
"""
import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import __version__
from .config import ConfigError, build_config, control_targets, load_config, with_value
from .control import (
    ControllerDesign,
    UncontrollableError,
    UnstableDesignError,
    closed_loop_eigs,
    controllability_rank,
    design_controller,
    evaluate_gains,
    observability_rank,
    published_gains,
    snr_invariance,
)
from .coupled import (
    build_model,
    conventional_sensitivity,
    mizuno_integral,
    open_loop_eigs,
    sensitivity,
)
from .export import budget_columns, dumps, write_json, write_table
from .filter_model import exact_response, rwa_transfer, spring_compensating_shift
from .linalg import SingularSystemError
from .params import CONSTANTS, thermal_bound, validate_regime

PLACEMENT_RTOL = 1e-6
SEPARATION_RTOL = 1e-9
SNR_RTOL = 1e-6
TRACE_RTOL = 1e-10


def _backend(cfg):
    return None if cfg.backend == "auto" else cfg.backend


def spectrum_distance(x, y):
    """Largest mismatch between two eigenvalue sets after optimal pairing,
    relative to the largest magnitude present."""
    x, y = np.asarray(x, dtype=complex), np.asarray(y, dtype=complex)
    if x.size != y.size:
        return math.inf
    cost = np.abs(x[:, None] - y[None, :])
    rows, cols = linear_sum_assignment(cost)
    scale = max(np.abs(x).max(), np.abs(y).max(), 1e-300)
    return float(cost[rows, cols].max() / scale)


def _regime(cfg):
    return validate_regime(cfg.rates, cfg.filter.omega_m, cfg.grid.f_max)


# -- subcommands ---------------------------------------------------------------

def cmd_validate(cfg, out=None, fmt="csv", strict=False):
    rates = cfg.rates
    regime = _regime(cfg)
    bound = thermal_bound(rates.gamma_srm)
    report = {
        "rates": rates.as_dict(),
        "regime": regime.as_dict(),
        "thermal_bound_K_per_Q": bound,
        "thermal_bound_K": bound * cfg.filter.Q_m,
        "T_envir_below_bound": cfg.filter.T_envir <= bound * cfg.filter.Q_m,
    }
    failures = regime.failures() if strict else []
    return report, failures


def conventional_bandwidth_hz(budget):
    """-3 dB point (power) of a shot-noise curve relative to its lowest bin."""
    ratio = (budget.shot_asd / budget.shot_asd[0]) ** 2
    above = np.flatnonzero(ratio >= 2.0)
    if above.size == 0:
        return math.inf
    i = above[0]
    f = budget.frequency_hz
    # interpolate in log-frequency
    t = (2.0 - ratio[i - 1]) / (ratio[i] - ratio[i - 1])
    return float(np.exp(np.log(f[i - 1]) + t * (np.log(f[i]) - np.log(f[i - 1]))))


def cmd_sensitivity(cfg, out, fmt="csv", rigorous=False):
    grid = cfg.omega_grid()
    backend = _backend(cfg)
    rates = cfg.rates
    budgets = {
        "filtered": sensitivity(build_model(rates), grid, cfg.filter.T_envir,
                                cfg.filter.omega_m, backend=backend, pickoff=cfg.pickoff),
        "conventional_broadband": conventional_sensitivity(
            replace(cfg.ifo, T_SRM=cfg.T_SRM_broadband), grid),
        "conventional_narrowband": conventional_sensitivity(cfg.ifo, grid),
        "ideal": conventional_sensitivity(cfg.ifo, grid, ideal=True),
    }
    if rigorous:
        from .rigorous import total_noise
        budgets["filtered_rigorous"] = total_noise(cfg.filter, cfg.ifo, grid,
                                                   backend=backend)
    os.makedirs(out, exist_ok=True)
    failures, files, flagged = [], {}, {}
    for name, budget in budgets.items():
        for problem in budget.check():
            failures.append("%s: %s" % (name, problem))
        flagged[name] = [w / (2 * math.pi) for w in budget.flagged]
        files[name] = os.path.basename(
            write_table(os.path.join(out, name), budget_columns(budget), fmt))

    filt, narrow = budgets["filtered"], budgets["conventional_narrowband"]
    f = filt.frequency_hz
    band = f <= 2000.0
    properties = {
        "narrowband_bandwidth_Hz": conventional_bandwidth_hz(narrow),
        "gamma_srm_over_2pi_Hz": rates.gamma_srm / (2 * math.pi),
        "filtered_over_narrowband_lowest_bin": float(filt.shot_asd[0] / narrow.shot_asd[0]),
        "filtered_flatness_dB_to_2kHz": float(
            20 * np.log10(filt.shot_asd[band].max() / filt.shot_asd[band].min())),
        "mizuno_integral": {k: mizuno_integral(b) for k, b in budgets.items()
                            if k != "filtered_rigorous"},
    }
    manifest = {
        "rates": rates.as_dict(),
        "regime": _regime(cfg).as_dict(),
        "files": files,
        "flagged_Hz": flagged,
        "properties": properties,
        "T_envir": cfg.filter.T_envir,
        "T_SRM": cfg.ifo.T_SRM,
        "T_SRM_broadband": cfg.T_SRM_broadband,
        "rows": int(grid.size),
    }
    write_json(os.path.join(out, "manifest.json"), manifest)
    return manifest, failures


def stability_report(cfg):
    model = build_model(cfg.rates)
    a = model.a_matrix
    eigs, unstable = open_loop_eigs(model)
    trace_res = abs(eigs.sum() - np.trace(a)) / max(np.abs(a).max(), 1e-300)
    return {
        "eigenvalues": eigs,
        "unstable": unstable,
        "n_unstable": int(np.sum(eigs.real > 0)),
        "trace_residual": float(trace_res),
        "controllability_rank": controllability_rank(a, model.input_b),
        "observability_rank": observability_rank(a, model.readout_d),
        "state_dimension": int(a.shape[0]),
        "regime": _regime(cfg).as_dict(),
    }


def cmd_stability(cfg, out, fmt="csv"):
    report = stability_report(cfg)
    failures = []
    if report["trace_residual"] > TRACE_RTOL:
        failures.append("trace identity violated (%.3e)" % report["trace_residual"])
    os.makedirs(out, exist_ok=True)
    write_json(os.path.join(out, "stability.json"), report)
    return report, failures


def cmd_controller(cfg, out, fmt="csv"):
    rates = cfg.rates
    model = build_model(rates)
    a, b, d = model.a_matrix, model.input_b, model.readout_d
    grid = cfg.omega_grid()
    backend = _backend(cfg)
    eps = cfg.control.epsilon
    failures = []

    k_pub, l_pub = published_gains(eps)
    published = evaluate_gains(a, b, d, k_pub, l_pub)
    report = {
        "mode": cfg.control.poles if isinstance(cfg.control.poles, str) else "targets",
        "epsilon": eps,
        "ranks": {"controllability": controllability_rank(a, b),
                  "observability": observability_rank(a, d)},
        "open_loop_eigenvalues": open_loop_eigs(model)[0],
        "published_gains": {"K": k_pub, "L": l_pub, **published},
    }

    if cfg.control.poles == "published":
        k, l_gain, design = k_pub, l_pub, None
        report["stable"] = published["stable"]
        if not published["stable"]:
            failures.append("published gains do not stabilise this plant")
    else:
        try:
            design = design_controller(a, b, d, targets_k=control_targets(cfg), epsilon=eps)
        except (UncontrollableError, UnstableDesignError) as exc:
            report["error"] = str(exc)
            return report, ["design: %s" % exc]
        k, l_gain = design.K, design.L
        eig_k = np.linalg.eigvals(a - np.outer(b, k[0]))
        eig_l = np.linalg.eigvals(a - l_gain @ d[None, :])
        placement = max(spectrum_distance(eig_k, design.placed_poles_K),
                        spectrum_distance(eig_l, design.placed_poles_L))
        cl = closed_loop_eigs(a, b, d, k, l_gain)
        separation = spectrum_distance(cl, np.concatenate([eig_k, eig_l]))
        report.update({
            "target_poles_K": design.placed_poles_K,
            "target_poles_L": design.placed_poles_L,
            "eig_A_minus_BK": eig_k,
            "eig_A_minus_LD": eig_l,
            "closed_loop_eigenvalues": cl,
            "placement_residual": placement,
            "separation_residual": separation,
            "stable": bool(np.all(cl.real < 0)),
        })
        if placement > PLACEMENT_RTOL:
            failures.append("pole placement residual %.3e" % placement)
        if separation > SEPARATION_RTOL:
            failures.append("separation principle residual %.3e" % separation)
        if not report["stable"]:
            failures.append("closed loop unstable")

    report["K"], report["L"] = k, l_gain
    if report["stable"]:
        used = design or ControllerDesign(k, l_gain, eps, np.array([]), np.array([]))
        dev = snr_invariance(model, used, grid, cfg.filter.T_envir, cfg.filter.omega_m,
                             backend=backend)
        report["snr_max_relative_deviation"] = dev
        if dev > SNR_RTOL:
            failures.append("closed loop changes the SNR by %.3e" % dev)
    os.makedirs(out, exist_ok=True)
    write_json(os.path.join(out, "controller.json"), report)
    return report, failures


def _is_increasing(x):
    return bool(np.all(np.diff(x) > 0))


def increasing_above_hz(freq_hz, values):
    """Lowest grid frequency from which ``values`` increase strictly to the end."""
    flat = np.flatnonzero(np.diff(values) <= 0)
    if flat.size == 0:
        return float(freq_hz[0])
    i = flat[-1] + 1
    return float(freq_hz[i]) if i < len(freq_hz) - 1 else math.inf


def cmd_phase(cfg, out, fmt="csv"):
    rates = cfg.rates
    grid = cfg.omega_grid()
    backend = _backend(cfg)
    shift = spring_compensating_shift(rates.g, rates.gamma_f, cfg.filter.omega_m)
    plain = exact_response(rates, cfg.filter.omega_m, grid, backend=backend)
    comp = exact_response(rates, cfg.filter.omega_m, grid, pump_shift=shift, backend=backend)
    rwa = np.unwrap(np.angle(-rwa_transfer(grid, rates.gamma_m, rates.gamma_opt))) \
        + 2 * np.arctan(grid / rates.gamma_opt)
    prop = 2 * grid * cfg.ifo.L_arm / CONSTANTS.c
    residual = np.unwrap(np.angle(-rwa_transfer(grid, rates.gamma_m, rates.gamma_opt))) + prop
    os.makedirs(out, exist_ok=True)
    path = write_table(os.path.join(out, "phase"), {
        "frequency_Hz": grid / (2 * math.pi),
        "phase_error": plain.phase_error,
        "phase_error_compensated": comp.phase_error,
        "phase_error_rwa": rwa,
        "residual_vs_propagation_rwa": residual,
    }, fmt)
    report = {
        "file": os.path.basename(path),
        "pump_shift": shift,
        "max_abs_phase_error": float(np.abs(plain.phase_error).max()),
        "max_abs_phase_error_compensated": float(np.abs(comp.phase_error).max()),
        "abs_phase_error_increasing": _is_increasing(np.abs(plain.phase_error)),
        "abs_phase_error_compensated_increasing": _is_increasing(np.abs(comp.phase_error)),
        "abs_residual_rwa_increasing": _is_increasing(np.abs(residual)),
        "abs_phase_error_compensated_increasing_above_Hz": increasing_above_hz(
            grid / (2 * math.pi), np.abs(comp.phase_error)),
        "commutator_residual_max": float(comp.commutator_residual().max()),
    }
    failures = []
    if not np.all(np.isfinite(plain.phase_error)) or not np.all(np.isfinite(comp.phase_error)):
        failures.append("non-finite phase error")
    return report, failures


def cmd_thermal(cfg, out, fmt="csv"):
    rates = cfg.rates
    grid = cfg.omega_grid()
    model = build_model(rates)
    os.makedirs(out, exist_ok=True)
    temps = sorted(cfg.temperatures)
    files, totals, failures = [], [], []
    for temp in temps:
        budget = sensitivity(model, grid, temp, cfg.filter.omega_m, backend=_backend(cfg),
                             pickoff=cfg.pickoff)
        failures += ["T=%g: %s" % (temp, p) for p in budget.check()]
        stem = os.path.join(out, "thermal_T%.6eK" % temp)
        files.append(os.path.basename(write_table(stem, budget_columns(budget), fmt)))
        totals.append(budget.total_asd)
    ordered = all(np.all(hi >= lo) for lo, hi in zip(totals, totals[1:]))
    if not ordered:
        failures.append("total ASD not non-decreasing in temperature")
    bound = thermal_bound(rates.gamma_srm) * cfg.filter.Q_m
    report = {
        "temperatures_K": temps,
        "thermal_bound_K": bound,
        "files": files,
        "non_decreasing": ordered,
        "max_degradation": [float(np.max(t / totals[0])) for t in totals],
    }
    return report, failures


def cmd_sweep(cfg, out, fmt="csv", param=None, values=(), curve="filtered"):
    if not values:
        raise ConfigError("--values", "no sweep values given")
    grid = None
    rows = {}
    summary, failures = [], []
    for value in values:
        sub = build_config(with_value(cfg.raw, param, value))
        grid = sub.omega_grid()
        if curve == "filtered":
            budget = sensitivity(build_model(sub.rates), grid, sub.filter.T_envir,
                                 sub.filter.omega_m, backend=_backend(sub), pickoff=sub.pickoff)
        else:
            budget = conventional_sensitivity(sub.ifo, grid)
        failures += ["%s=%g: %s" % (param, value, p) for p in budget.check()]
        cols = budget_columns(budget)
        rows.setdefault("value", []).extend([value] * grid.size)
        for k, v in cols.items():
            rows.setdefault(k, []).extend(np.asarray(v).tolist())
        summary.append({"value": value, "mizuno_integral": mizuno_integral(budget),
                        "peak_shot_asd": float(budget.shot_asd.min())})
    os.makedirs(out, exist_ok=True)
    path = write_table(os.path.join(out, "sweep"), rows, fmt)
    integrals = np.array([s["mizuno_integral"] for s in summary])
    report = {
        "param": param,
        "curve": curve,
        "file": os.path.basename(path),
        "points": summary,
        "mizuno_relative_spread": float(integrals.max() / integrals.min() - 1),
    }
    write_json(os.path.join(out, "sweep_summary.json"), report)
    return report, failures


# -- argument handling -----------------------------------------------------------

def _sweep_values(args):
    if args.values:
        try:
            return [float(v) for v in args.values.split(",")]
        except ValueError:
            raise ConfigError("--values", "expected comma-separated numbers") from None
    if args.range:
        start, stop, num = args.range
        num = int(num)
        if args.log:
            return np.logspace(math.log10(start), math.log10(stop), num).tolist()
        return np.linspace(start, stop, num).tolist()
    raise ConfigError("--values", "give --values or --range")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="unstable-filter",
        description="Filtered GW detector: noise budgets, stability and control reports.")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file (default: shipped nominal config)")
    common.add_argument("--out", help="output directory (default: [run] outputs)")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="table format")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="derived rates and regime checks")
    p.add_argument("--strict", action="store_true", help="fail when a regime check fails")
    p = sub.add_parser("sensitivity", parents=[common], help="noise budget curves")
    p.add_argument("--rigorous", action="store_true",
                   help="also write the four-sideband finite-mass curve")
    sub.add_parser("stability", parents=[common], help="open-loop eigenvalues and ranks")
    sub.add_parser("controller", parents=[common], help="stabilising controller report")
    sub.add_parser("phase", parents=[common], help="phase error of the exact filter")
    sub.add_parser("thermal", parents=[common], help="total ASD per bath temperature")
    p = sub.add_parser("sweep", parents=[common], help="sweep one numeric config key")
    p.add_argument("--param", required=True, help="section.key, e.g. ifo.T_SRM")
    p.add_argument("--values", help="comma-separated values")
    p.add_argument("--range", nargs=3, type=float, metavar=("START", "STOP", "NUM"))
    p.add_argument("--log", action="store_true", help="log-spaced --range")
    p.add_argument("--curve", choices=("filtered", "conventional"), default="filtered")
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "sensitivity": cmd_sensitivity,
    "stability": cmd_stability,
    "controller": cmd_controller,
    "phase": cmd_phase,
    "thermal": cmd_thermal,
    "sweep": cmd_sweep,
}


def _fail(failures, code):
    sys.stderr.write(json.dumps({"ok": False, "failures": failures}, sort_keys=True) + "\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = args.out or cfg.outputs
        extra = {}
        if args.command == "validate":
            extra["strict"] = args.strict
        elif args.command == "sensitivity":
            extra["rigorous"] = args.rigorous
        elif args.command == "sweep":
            with_value(cfg.raw, args.param, 0.0)   # reject unknown keys early
            extra.update(param=args.param, values=_sweep_values(args), curve=args.curve)
        report, failures = COMMANDS[args.command](cfg, out, args.format, **extra)
    except ConfigError as exc:
        return _fail([str(exc)], 2)
    except (OSError, SingularSystemError) as exc:
        return _fail([str(exc)], 1)
    report = {"command": args.command, "ok": not failures, "failures": failures, **report}
    sys.stdout.write(dumps(report))
    if failures:
        return _fail(failures, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
