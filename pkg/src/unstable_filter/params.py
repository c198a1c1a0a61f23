"""Physical parameters, derived rates and operating-regime checks.

All quantities are SI; angular frequencies are in rad/s.
"""
import math
from dataclasses import asdict, dataclass, field

import scipy.constants

__all__ = [
    "ParameterError",
    "PhysicalConstants",
    "CONSTANTS",
    "FilterParams",
    "IfoParams",
    "DerivedRates",
    "RegimeCheck",
    "RegimeReport",
    "derive_rates",
    "required_power",
    "validate_regime",
    "thermal_bound",
    "srm_transmissivity",
    "nominal_ifo",
    "nominal_filter",
    "NOMINAL_BANDWIDTH_HZ",
]

#: detector bandwidth the nominal parameter set is built around (Hz)
NOMINAL_BANDWIDTH_HZ = 100.0

# regime thresholds; the resolved-sideband conditions only say "much larger than"
RESOLVED_SIDEBAND_RATIO = 20.0
SIGNAL_BAND_RATIO = 20.0
ANTIDAMPING_RATIO = 100.0


class ParameterError(ValueError):
    """Invalid physical parameter; ``name`` is the offending field."""

    def __init__(self, name, value, requirement):
        self.name = name
        self.value = value
        super().__init__("%s = %r: must be %s" % (name, value, requirement))


def _positive(name, value):
    try:
        ok = value > 0 and not math.isnan(value)
    except TypeError:
        ok = False
    if not ok:
        raise ParameterError(name, value, "> 0")


def _finite_positive(name, value):
    _positive(name, value)
    if math.isinf(value):
        raise ParameterError(name, value, "finite")


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = scipy.constants.c
    hbar: float = scipy.constants.hbar
    k_B: float = scipy.constants.k


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class FilterParams:
    """Optomechanical filter.

    ``Q_m`` may be ``inf`` (lossless oscillator), ``T_envir`` may be 0 and
    ``P_c = 0`` switches the pump (and so the coupling ``g``) off; every other
    field must be finite and strictly positive.
    """

    L_f: float
    finesse: float
    omega_m: float
    mass_m: float
    Q_m: float
    T_envir: float
    P_c: float
    lambda_0: float = 1064e-9

    def __post_init__(self):
        for name in ("L_f", "finesse", "omega_m", "mass_m", "lambda_0"):
            _finite_positive(name, getattr(self, name))
        if not (0 <= self.P_c < math.inf):
            raise ParameterError("P_c", self.P_c, "finite and >= 0")
        if not (self.Q_m >= 1):
            raise ParameterError("Q_m", self.Q_m, ">= 1")
        if not (self.T_envir >= 0) or math.isinf(self.T_envir):
            raise ParameterError("T_envir", self.T_envir, "finite and >= 0")


@dataclass(frozen=True)
class IfoParams:
    """Main interferometer (single differential mode)."""

    L_arm: float
    P_arm: float
    M: float
    T_SRM: float
    lambda_0: float = 1064e-9

    def __post_init__(self):
        for name in ("L_arm", "P_arm", "lambda_0"):
            _finite_positive(name, getattr(self, name))
        # M = inf switches radiation pressure off
        _positive("M", self.M)
        if not (0 < self.T_SRM < 1):
            raise ParameterError("T_SRM", self.T_SRM, "in (0, 1)")


@dataclass(frozen=True)
class DerivedRates:
    gamma_f: float
    gamma_m: float
    x_q: float
    g: float
    gamma_opt: float
    gamma_srm: float
    omega_s: float
    omega_0: float
    G0_Larm: float

    def as_dict(self):
        return asdict(self)


def _gamma_opt_per_watt(filt, consts):
    """gamma_opt produced by 1 W of intra-cavity power (gamma_opt is linear in P_c)."""
    return _filter_rates(filt, consts, power=1.0)[3]


def _filter_rates(filt, consts, power):
    omega_0 = 2 * math.pi * consts.c / filt.lambda_0
    gamma_f = math.pi * consts.c / (2 * filt.finesse * filt.L_f)
    x_q = math.sqrt(consts.hbar / (2 * filt.mass_m * filt.omega_m))
    a_bar = math.sqrt(2 * power * filt.L_f / (consts.hbar * omega_0 * consts.c))
    g0 = omega_0 * a_bar / filt.L_f
    g = g0 * x_q
    return omega_0, gamma_f, x_q, g * g / gamma_f, g


def srm_transmissivity(bandwidth, L_arm, consts=CONSTANTS):
    """Inverse of gamma_srm = c T_SRM / (4 L_arm); ``bandwidth`` in rad/s."""
    return 4 * L_arm * bandwidth / consts.c


def derive_rates(filt, ifo, consts=CONSTANTS):
    """Compute every rate the models need from the raw parameters."""
    if not isinstance(filt, FilterParams) or not isinstance(ifo, IfoParams):
        raise TypeError("derive_rates expects FilterParams and IfoParams")
    if not math.isclose(filt.lambda_0, ifo.lambda_0, rel_tol=1e-12):
        raise ParameterError("lambda_0", (filt.lambda_0, ifo.lambda_0),
                             "identical for filter and interferometer")
    omega_0, gamma_f, x_q, gamma_opt, g = _filter_rates(filt, consts, filt.P_c)
    gamma_m = 0.0 if math.isinf(filt.Q_m) else filt.omega_m / filt.Q_m
    d_bar = math.sqrt(2 * ifo.P_arm * ifo.L_arm / (consts.hbar * omega_0 * consts.c))
    return DerivedRates(
        gamma_f=gamma_f,
        gamma_m=gamma_m,
        x_q=x_q,
        g=g,
        gamma_opt=gamma_opt,
        gamma_srm=consts.c * ifo.T_SRM / (4 * ifo.L_arm),
        omega_s=math.sqrt(consts.c * gamma_f / ifo.L_arm),
        omega_0=omega_0,
        # G0 * L_arm = omega_0 * d_bar
        G0_Larm=omega_0 * d_bar,
    )


def required_power(target_gamma_opt, filt, consts=CONSTANTS):
    """Intra-cavity pump power giving ``gamma_opt = target_gamma_opt``.

    Only ``filt``'s geometry, oscillator and wavelength matter; its own ``P_c``
    is ignored.
    """
    _finite_positive("target_gamma_opt", target_gamma_opt)
    return target_gamma_opt / _gamma_opt_per_watt(filt, consts)


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    ratio: float
    threshold: float

    @property
    def passed(self):
        return self.ratio >= self.threshold


@dataclass(frozen=True)
class RegimeReport:
    checks: tuple = field(default_factory=tuple)

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self):
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self):
        return {
            "ok": self.ok,
            "checks": [
                {"name": c.name, "ratio": c.ratio, "threshold": c.threshold, "passed": c.passed}
                for c in self.checks
            ],
        }


def validate_regime(rates, omega_m, f_max):
    """Check the resolved-sideband ordering omega_m >> gamma_f >> Omega and
    that optical anti-damping dominates the intrinsic damping.

    ``omega_m`` is passed separately because it is an input, not a derived
    rate.
    """
    _finite_positive("f_max", f_max)
    omega_max = 2 * math.pi * f_max
    antidamping = math.inf if rates.gamma_m == 0 else rates.gamma_opt / rates.gamma_m
    return RegimeReport(checks=(
        RegimeCheck("resolved_sideband", omega_m / rates.gamma_f, RESOLVED_SIDEBAND_RATIO),
        RegimeCheck("signal_band", rates.gamma_f / omega_max, SIGNAL_BAND_RATIO),
        RegimeCheck("antidamping", antidamping, ANTIDAMPING_RATIO),
    ))


def thermal_bound(gamma_srm, consts=CONSTANTS):
    """Largest T_envir / Q_m (K) keeping filter thermal noise below shot noise."""
    if not (gamma_srm >= 0):
        raise ParameterError("gamma_srm", gamma_srm, ">= 0")
    return consts.hbar * gamma_srm / (8 * consts.k_B)


def nominal_ifo(consts=CONSTANTS, **overrides):
    """4 km arms, 40 kg test masses, SRM set for a 100 Hz detector bandwidth.

    ``P_arm = 800 kW`` is a conventional Advanced-LIGO-like value.
    """
    L_arm = overrides.pop("L_arm", 4000.0)
    kw = dict(
        L_arm=L_arm,
        P_arm=800e3,
        M=40.0,
        T_SRM=srm_transmissivity(2 * math.pi * NOMINAL_BANDWIDTH_HZ, L_arm, consts),
    )
    kw.update(overrides)
    return IfoParams(**kw)


def nominal_filter(L_arm=4000.0, consts=CONSTANTS, **overrides):
    """1 cm filter cavity, finesse 1e5, 10 MHz / 0.1 mg oscillator.

    Unless ``P_c`` is overridden it is solved so that ``gamma_opt = c / L_arm``,
    the phase-cancellation condition.
    """
    kw = dict(
        L_f=0.01,
        finesse=1e5,
        omega_m=2 * math.pi * 10e6,
        mass_m=1e-7,
        Q_m=1e9,
        T_envir=0.0,
        P_c=1.0,
    )
    kw.update(overrides)
    filt = FilterParams(**kw)
    if "P_c" not in overrides:
        filt = FilterParams(**{**asdict(filt), "P_c": required_power(consts.c / L_arm, filt, consts)})
    return filt

