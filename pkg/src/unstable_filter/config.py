"""INI configuration for the command-line runs.

All values are SI (rad/s for ``omega_m``, W, m, kg, K). ``P_c = auto`` solves the
pump power for ``gamma_opt = c / L_arm``; ``T_SRM = auto`` sets the detector
bandwidth to ``bandwidth_Hz``. Any key can be overridden from the environment
as ``UF__<SECTION>__<KEY>=value`` (case-insensitive).
"""
import configparser
import math
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .params import (
    CONSTANTS,
    FilterParams,
    IfoParams,
    ParameterError,
    derive_rates,
    required_power,
    srm_transmissivity,
    thermal_bound,
)

ENV_PREFIX = "UF__"
MIN_POINTS_PER_DECADE = 10

# section -> {canonical key: kind}; kind "float" keys may be swept
SCHEMA = {
    "filter": {
        "L_f": "float", "finesse": "float", "omega_m": "float", "mass_m": "float",
        "Q_m": "float", "T_envir": "float", "P_c": "auto_float", "lambda_0": "float",
    },
    "ifo": {
        "L_arm": "float", "P_arm": "float", "M": "float", "T_SRM": "auto_float",
        "bandwidth_Hz": "float", "T_SRM_broadband": "float",
    },
    "grid": {"f_min": "float", "f_max": "float", "points_per_decade": "int"},
    "control": {"epsilon": "float", "poles": "poles", "include_pickoff": "bool"},
    "run": {"temperatures": "temperatures", "outputs": "str", "backend": "str"},
}


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is ``section.key``."""

    def __init__(self, key, message):
        self.key = key
        super().__init__("%s: %s" % (key, message))


@dataclass(frozen=True)
class GridSpec:
    f_min: float
    f_max: float
    points_per_decade: int


@dataclass(frozen=True)
class ControlSpec:
    epsilon: float
    poles: object   # "auto", "published" or a tuple of complex targets


@dataclass(frozen=True)
class RunConfig:
    filter: FilterParams
    ifo: IfoParams
    grid: GridSpec
    control: ControlSpec
    temperatures: tuple
    outputs: str
    T_SRM_broadband: float
    backend: str = "auto"
    pickoff: float = 0.0
    raw: dict = field(default=None, compare=False, repr=False)

    @property
    def rates(self):
        return derive_rates(self.filter, self.ifo)

    def omega_grid(self):
        from .coupled import log_grid
        return log_grid(self.grid.f_min, self.grid.f_max, self.grid.points_per_decade)


def _canonical(section, key):
    sec = section.lower()
    if sec not in SCHEMA:
        raise ConfigError("%s.%s" % (section, key), "unknown section")
    for name in SCHEMA[sec]:
        if name.lower() == key.lower():
            return sec, name
    raise ConfigError("%s.%s" % (sec, key), "unknown key")


def default_config_text():
    return resources.files("unstable_filter").joinpath("data/nominal.ini").read_text()


def _read_raw(text):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    parser.read_string(text)
    raw = {sec: {} for sec in SCHEMA}
    for section in parser.sections():
        for key, value in parser.items(section):
            sec, name = _canonical(section, key)
            raw[sec][name] = value.strip()
    return raw


def _apply_env(raw, environ):
    for var, value in sorted(environ.items()):
        if not var.upper().startswith(ENV_PREFIX):
            continue
        parts = var[len(ENV_PREFIX):].split("__")
        if len(parts) != 2:
            raise ConfigError(var, "expected %s<SECTION>__<KEY>" % ENV_PREFIX)
        sec, name = _canonical(*parts)
        raw[sec][name] = value.strip()


def _float(raw, sec, name):
    key = "%s.%s" % (sec, name)
    if name not in raw[sec]:
        raise ConfigError(key, "missing")
    try:
        return float(raw[sec][name])
    except ValueError:
        raise ConfigError(key, "not a number: %r" % raw[sec][name]) from None


def _is_auto(raw, sec, name):
    return raw[sec].get(name, "auto").lower() == "auto"


def _parse_poles(text):
    text = text.strip()
    if text.lower() in ("auto", "published"):
        return text.lower()
    if text.lower() == "paper-gains":  # accepted alias
        return "published"
    try:
        poles = tuple(complex(p.replace(" ", "")) for p in text.split(","))
    except ValueError:
        raise ConfigError("control.poles", "expected auto, published or 3 complex numbers") from None
    if len(poles) != 3:
        raise ConfigError("control.poles", "need exactly 3 targets, got %d" % len(poles))
    return poles


def build_config(raw):
    """Turn a ``{section: {key: string}}`` mapping into a validated RunConfig."""
    try:
        ifo_kw = {k: _float(raw, "ifo", k) for k in ("L_arm", "P_arm", "M")}
        bandwidth = _float(raw, "ifo", "bandwidth_Hz") if "bandwidth_Hz" in raw["ifo"] else 100.0
        if _is_auto(raw, "ifo", "T_SRM"):
            ifo_kw["T_SRM"] = srm_transmissivity(2 * math.pi * bandwidth, ifo_kw["L_arm"])
        else:
            ifo_kw["T_SRM"] = _float(raw, "ifo", "T_SRM")
        lam = _float(raw, "filter", "lambda_0") if "lambda_0" in raw["filter"] else 1064e-9
        ifo = IfoParams(lambda_0=lam, **ifo_kw)

        f_kw = {k: _float(raw, "filter", k)
                for k in ("L_f", "finesse", "omega_m", "mass_m", "Q_m", "T_envir")}
        if _is_auto(raw, "filter", "P_c"):
            probe = FilterParams(P_c=1.0, lambda_0=lam, **f_kw)
            f_kw["P_c"] = required_power(CONSTANTS.c / ifo.L_arm, probe)
        else:
            f_kw["P_c"] = _float(raw, "filter", "P_c")
        filt = FilterParams(lambda_0=lam, **f_kw)
    except ParameterError as exc:
        sec = "ifo" if exc.name in SCHEMA["ifo"] else "filter"
        raise ConfigError("%s.%s" % (sec, exc.name), str(exc)) from None

    broadband = _float(raw, "ifo", "T_SRM_broadband") if "T_SRM_broadband" in raw["ifo"] else 0.2
    if not (0 < broadband < 1):
        raise ConfigError("ifo.T_SRM_broadband", "must lie in (0, 1)")

    f_min, f_max = _float(raw, "grid", "f_min"), _float(raw, "grid", "f_max")
    if not (0 < f_min < f_max):
        raise ConfigError("grid.f_min", "need 0 < f_min < f_max")
    try:
        ppd = int(raw["grid"].get("points_per_decade", "100"))
    except ValueError:
        raise ConfigError("grid.points_per_decade", "not an integer") from None
    if ppd < MIN_POINTS_PER_DECADE:
        raise ConfigError("grid.points_per_decade", "must be >= %d" % MIN_POINTS_PER_DECADE)

    eps = _float(raw, "control", "epsilon") if "epsilon" in raw["control"] else 0.1
    if not (0 < eps <= 1):
        raise ConfigError("control.epsilon", "must lie in (0, 1]")
    poles = _parse_poles(raw["control"].get("poles", "auto"))
    flag = raw["control"].get("include_pickoff", "false").lower()
    if flag not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
        raise ConfigError("control.include_pickoff", "expected true or false")
    pickoff = eps if flag in ("true", "yes", "1", "on") else 0.0

    temps_text = raw["run"].get("temperatures", "auto")
    if temps_text.lower() == "auto":
        bound = thermal_bound(derive_rates(filt, ifo).gamma_srm) * filt.Q_m
        # a lossless oscillator has no bath coupling, so one temperature suffices
        temps = (0.0, bound, 10 * bound) if math.isfinite(bound) else (0.0,)
    else:
        try:
            temps = tuple(float(t) for t in temps_text.split(","))
        except ValueError:
            raise ConfigError("run.temperatures", "expected auto or a list of K") from None
    if not all(0 <= t < math.inf for t in temps):
        raise ConfigError("run.temperatures", "temperatures must be finite and >= 0")

    backend = raw["run"].get("backend", "auto").lower()
    if backend not in ("auto", "cython", "python"):
        raise ConfigError("run.backend", "expected auto, cython or python")

    return RunConfig(
        filter=filt, ifo=ifo, grid=GridSpec(f_min, f_max, ppd),
        control=ControlSpec(eps, poles), temperatures=temps,
        outputs=raw["run"].get("outputs", "out"), T_SRM_broadband=broadband,
        backend=backend, pickoff=pickoff, raw=raw,
    )


def load_config(path=None, environ=None, overrides=None):
    """Read ``path`` on top of the shipped nominal config, then apply env and
    explicit overrides.

    Keys missing from ``path`` keep their nominal values. ``overrides`` maps
    ``"section.key"`` to a value.
    """
    raw = _read_raw(default_config_text())
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
        try:
            user = _read_raw(text)
        except configparser.Error as exc:
            raise ConfigError("--config", str(exc).splitlines()[0]) from None
        for sec, values in user.items():
            raw[sec].update(values)
    _apply_env(raw, os.environ if environ is None else environ)
    for key, value in (overrides or {}).items():
        raw = with_value(raw, key, value)
    return build_config(raw)


def split_key(key):
    if "." not in key:
        raise ConfigError(key, "expected section.key")
    return _canonical(*key.split(".", 1))


def with_value(raw, key, value):
    """Copy of ``raw`` with ``section.key`` set; the key must be numeric."""
    sec, name = split_key(key)
    if SCHEMA[sec][name] not in ("float", "auto_float", "int"):
        raise ConfigError("%s.%s" % (sec, name), "not a numeric key")
    out = {s: dict(v) for s, v in raw.items()}
    out[sec][name] = repr(float(value)) if not isinstance(value, str) else value
    return out


def control_targets(cfg):
    """Target poles as an array, or None for the default/published-gain modes."""
    if isinstance(cfg.control.poles, tuple):
        return np.array(cfg.control.poles, dtype=complex)
    return None
