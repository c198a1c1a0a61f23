import math

import pytest

from unstable_filter.config import ConfigError, build_config, load_config, with_value
from unstable_filter.params import nominal_filter, nominal_ifo, thermal_bound


def test_shipped_config_is_nominal():
    cfg = load_config(environ={})
    assert cfg.filter == nominal_filter()
    assert cfg.ifo == nominal_ifo()
    assert cfg.grid.points_per_decade == 100
    assert cfg.control.poles == "auto" and cfg.control.epsilon == 0.1
    assert cfg.T_SRM_broadband == 0.2
    assert cfg.pickoff == 0.0
    assert cfg.omega_grid().size == 301


def test_auto_temperatures():
    cfg = load_config(environ={})
    bound = thermal_bound(cfg.rates.gamma_srm) * cfg.filter.Q_m
    assert cfg.temperatures == pytest.approx((0.0, bound, 10 * bound))


def test_env_override_case_insensitive():
    cfg = load_config(environ={"uf__Filter__q_M": "1e7", "UF__GRID__F_MAX": "2000"})
    assert cfg.filter.Q_m == 1e7
    assert cfg.grid.f_max == 2000


def test_partial_file_overlays_nominal(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[ifo]\nM = 1e6\n[control]\npoles = -1e5, -1e5+1e5j, -1e5-1e5j\n")
    cfg = load_config(str(p), environ={})
    assert cfg.ifo.M == 1e6
    assert cfg.filter == nominal_filter()
    assert cfg.control.poles == (-1e5, -1e5 + 1e5j, -1e5 - 1e5j)


@pytest.mark.parametrize("text,key", [
    ("[grid]\npoints_per_decade = 5\n", "grid.points_per_decade"),
    ("[grid]\nf_min = 100\nf_max = 10\n", "grid.f_min"),
    ("[filter]\nQ_m = abc\n", "filter.Q_m"),
    ("[filter]\nQ_m = 0.1\n", "filter.Q_m"),
    ("[ifo]\nT_SRM = 2\n", "ifo.T_SRM"),
    ("[ifo]\nwidth = 2\n", "ifo.width"),
    ("[control]\nepsilon = 0\n", "control.epsilon"),
    ("[control]\npoles = -1, -2\n", "control.poles"),
    ("[control]\ninclude_pickoff = maybe\n", "control.include_pickoff"),
    ("[run]\ntemperatures = -1\n", "run.temperatures"),
    ("[run]\nbackend = gpu\n", "run.backend"),
])
def test_errors_name_the_key(tmp_path, text, key):
    p = tmp_path / "bad.ini"
    p.write_text(text)
    with pytest.raises(ConfigError) as err:
        load_config(str(p), environ={})
    assert err.value.key == key
    assert key in str(err.value)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/cfg.ini", environ={})


def test_with_value_rejects_non_numeric():
    raw = load_config(environ={}).raw
    with pytest.raises(ConfigError, match="not a numeric key"):
        with_value(raw, "control.poles", 1.0)
    with pytest.raises(ConfigError, match="unknown key"):
        with_value(raw, "filter.nope", 1.0)
    changed = build_config(with_value(raw, "ifo.T_SRM", 0.01))
    assert changed.ifo.T_SRM == 0.01
    assert load_config(environ={}).ifo.T_SRM != 0.01   # original untouched


def test_pickoff_toggle():
    cfg = load_config(environ={"UF__CONTROL__INCLUDE_PICKOFF": "true",
                               "UF__CONTROL__EPSILON": "0.2"})
    assert cfg.pickoff == 0.2


def test_explicit_power():
    cfg = load_config(environ={}, overrides={"filter.P_c": 100.0})
    assert cfg.filter.P_c == 100.0
    assert cfg.rates.gamma_opt < 299792458.0 / 4000


def test_lossless_config():
    cfg = load_config(environ={"UF__FILTER__Q_M": "inf", "UF__IFO__M": "inf"})
    assert math.isinf(cfg.filter.Q_m) and math.isinf(cfg.ifo.M)
