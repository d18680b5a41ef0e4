"""Run configuration: a JSON file plus command-line overrides (flags win)."""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import jsonschema

from .fredholm import DEFAULT_TAUS
from .grid import GridSpec
from .shifts import Shift, ShiftError, shift_from_spec
from .symbols import AdmissibleParams, ParameterError

__all__ = ["ConfigError", "RunConfig", "CONFIG_SCHEMA", "load_config", "parse_tau"]


class ConfigError(ValueError):
    pass


_shift_spec = {
    "oneOf": [
        {"type": "string", "minLength": 1},
        {
            "type": "object",
            "properties": {
                "omega": {"type": "string"},
                "preset": {"type": "string"},
                "name": {"type": "string"},
                "omega_range": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            },
            "additionalProperties": False,
        },
    ]
}

_number_list = {"type": "array", "items": {"type": "number"}, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "p": {"type": "number", "exclusiveMinimum": 1},
        "re_gamma": {"type": "number"},
        "im_gamma": {"type": "number"},
        "alpha": _shift_spec,
        "beta": _shift_spec,
        "i": {"type": "integer"},
        "j": {"type": "integer"},
        "grid_n": {"type": "integer", "minimum": 16},
        "grid_u": {"type": "number", "exclusiveMinimum": 0},
        "tau_ladder": {"type": "array", "items": {"type": ["number", "string"]}, "minItems": 1},
        "threads": {"type": "integer", "minimum": 1},
        "out": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "symbol": {
            "type": "object",
            "properties": {
                "t_min": {"type": "number", "exclusiveMinimum": 0},
                "t_max": {"type": "number", "exclusiveMinimum": 0},
                "n_t": {"type": "integer", "minimum": 1},
                "x_min": {"type": "number"},
                "x_max": {"type": "number"},
                "n_x": {"type": "integer", "minimum": 1},
                "t_values": _number_list,
                "x_values": _number_list,
                "theta": {"type": "number", "minimum": 0, "maximum": 1},
            },
            "additionalProperties": False,
        },
        "verify": {
            "type": "object",
            "properties": {
                "fixture": {"type": "string"},
                "ladder": {"type": "array", "items": {"type": "integer", "minimum": 16}, "minItems": 2},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_TAU_RE = re.compile(r"^\s*e\s*\^\s*([0-9.eE+-]+)\s*$")


def parse_tau(value) -> float:
    """A ladder entry: a number or ``"e^k"``; must exceed 1."""
    if isinstance(value, str):
        m = _TAU_RE.match(value)
        try:
            tau = math.exp(float(m.group(1))) if m else float(value)
        except ValueError:
            raise ConfigError(f"bad tau value {value!r}") from None
    else:
        tau = float(value)
    if not tau > 1 or not math.isfinite(tau):
        raise ConfigError(f"tau must be a finite number > 1, got {value!r}")
    return tau


@dataclass
class SymbolOptions:
    t_min: float = 1e-3
    t_max: float = 1e3
    n_t: int = 7
    x_min: float = -4.0
    x_max: float = 4.0
    n_x: int = 9
    t_values: list[float] | None = None
    x_values: list[float] | None = None
    theta: float = 1.0


@dataclass
class VerifyOptions:
    fixture: str | None = None
    ladder: list[int] | None = None


@dataclass
class RunConfig:
    p: float = 2.0
    re_gamma: float = 0.0
    im_gamma: float = 0.0
    alpha: object = "identity"
    beta: object = "identity"
    i: int = 1
    j: int = 0
    grid_n: int | None = None
    grid_u: float | None = None
    tau_ladder: list = field(default_factory=lambda: list(DEFAULT_TAUS))
    threads: int | None = None
    out: str | None = None
    seed: int = 0
    symbol: SymbolOptions = field(default_factory=SymbolOptions)
    verify: VerifyOptions = field(default_factory=VerifyOptions)

    # -- derived objects; each raises ConfigError on bad input

    def params(self) -> AdmissibleParams:
        try:
            return AdmissibleParams(self.p, complex(self.re_gamma, self.im_gamma))
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None

    def shifts(self) -> tuple[Shift, Shift]:
        try:
            return shift_from_spec(self.alpha), shift_from_spec(self.beta)
        except ShiftError as exc:
            raise ConfigError(f"invalid shift: {exc}") from None

    def grid(self, default: GridSpec) -> GridSpec:
        try:
            return GridSpec(self.grid_u if self.grid_u is not None else default.U,
                            self.grid_n if self.grid_n is not None else default.N, self.p)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def taus(self) -> tuple[float, ...]:
        return tuple(parse_tau(v) for v in self.tau_ladder)

    def echo(self) -> dict:
        out = asdict(self)
        out.pop("out")
        return out


def _from_mapping(data: dict) -> RunConfig:
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None
    data = dict(data)
    sym = SymbolOptions(**data.pop("symbol", {}))
    ver = VerifyOptions(**data.pop("verify", {}))
    return RunConfig(symbol=sym, verify=ver, **data)


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Read ``path`` (JSON) if given, then apply non-``None`` ``overrides``.

    Override keys are top-level field names, or ``symbol.<name>`` /
    ``verify.<name>`` for the nested sections.
    """
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if "." in key:
            section, name = key.split(".", 1)
            data.setdefault(section, {})[name] = value
        else:
            data[key] = value
    cfg = _from_mapping(data)
    cfg.taus()  # validate early
    return cfg


assert {f.name for f in fields(RunConfig)} == set(CONFIG_SCHEMA["properties"])
