import json
import math

import pytest

from mellinshift.config import ConfigError, RunConfig, load_config, parse_tau
from mellinshift.fredholm import DEFAULT_TAUS
from mellinshift.grid import GridSpec


@pytest.mark.parametrize("value, expected", [
    (20, 20.0), ("e^3", math.exp(3)), (" e ^ 2.5 ", math.exp(2.5)), ("7.5", 7.5),
])
def test_parse_tau(value, expected):
    assert parse_tau(value) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("value", [1, 0.5, "e^0", "e^-1", "abc", float("inf"), "nan"])
def test_parse_tau_rejects(value):
    with pytest.raises(ConfigError):
        parse_tau(value)


def test_defaults():
    cfg = load_config()
    assert cfg == RunConfig()
    assert cfg.taus() == DEFAULT_TAUS
    assert cfg.grid(GridSpec(20, 1024)) == GridSpec(20, 1024, 2.0)
    assert "out" not in cfg.echo()


def test_file_then_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"p": 3, "im_gamma": 0.5, "symbol": {"n_x": 4}, "verify": {"ladder": [64, 128]}}))
    cfg = load_config(path, {"im_gamma": -0.2, "symbol.theta": 0.25, "grid_n": 512, "alpha": None})
    assert cfg.p == 3 and cfg.im_gamma == -0.2
    assert cfg.symbol.n_x == 4 and cfg.symbol.theta == 0.25
    assert cfg.verify.ladder == [64, 128]
    assert cfg.grid(GridSpec(20, 1024)) == GridSpec(20, 512, 3.0)
    assert cfg.alpha == "identity"


@pytest.mark.parametrize("data", [
    {"p": 1}, {"grid_n": 8}, {"i": 1.5}, {"symbol": {"bogus": 1}}, {"alpha": ""},
    {"alpha": {"omega": "t", "extra": 1}}, {"verify": {"ladder": [64]}}, {"tau_ladder": []},
])
def test_schema_violations(tmp_path, data):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ConfigError):
        load_config(path)


def test_derived_objects_raise_config_error():
    with pytest.raises(ConfigError):
        load_config(overrides={"re_gamma": 0.7}).params()
    with pytest.raises(ConfigError):
        load_config(overrides={"alpha": "log(("}).shifts()
    with pytest.raises(ConfigError):
        load_config(overrides={"grid_n": 48}).grid(GridSpec(20, 1024))
    with pytest.raises(ConfigError):
        load_config(overrides={"tau_ladder": ["e^1", 0.3]})
