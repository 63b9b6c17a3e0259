"""Scenario configuration: strict TOML parsing, validation, serialization.

Configs are TOML with one table per concern; unknown keys anywhere are
rejected so typos cannot silently change a run.  parse -> serialize -> parse
is the identity on the validated structure.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

SCENARIO_KINDS = ("fisher", "kinematic", "fourier", "maxwell", "consistency",
                  "sweep")

# key -> allowed types, per table; None marks a scalar top-level key
_SCHEMA = {
    None: {"kind": str, "seed": int},
    "model": {"family": str, "channels": int, "obs_dim": int,
              "theta": list, "covariance": (int, float, list)},
    "metric": {"kind": str, "dim": int},
    "method": {"name": str, "draws": int, "nodes": int},
    "estimator": {"name": str, "value": list, "tau": (int, float)},
    "grid": {"extents": list, "points": list, "boundary": str},
    "field": {"constructor": str, "widths": list, "centers": list,
              "modes": list, "epsilon": list, "mode": list,
              "proportionality": (int, float), "phase": (int, float)},
    "boost": {"beta": (int, float), "axis": int},
    "constants": {"hbar": (int, float), "c": (int, float)},
    "fourier": {"external_mass_squared": (int, float)},
    "sweep": {"n_max": int},
    "tolerances": {
        "mc_se_factor": (int, float), "regularity": (int, float),
        "form_identity": (int, float), "consistency": (int, float),
        "parseval": (int, float), "roundtrip": (int, float),
        "fourier_information": (int, float), "capacity_rel": (int, float),
        "residual": (int, float), "normalization": (int, float),
        "boost_rel": (int, float), "identity_rel": (int, float),
        "external_offset": (int, float),
    },
    "output": {"json": str, "csv": str},
}

_TABLES_BY_KIND = {
    "fisher": {"model", "metric", "method", "estimator", "tolerances", "output"},
    "sweep": {"model", "metric", "method", "sweep", "tolerances", "output"},
    "consistency": {"model", "metric", "method", "grid", "tolerances", "output"},
    "kinematic": {"metric", "grid", "field", "boost", "tolerances", "output"},
    "fourier": {"grid", "field", "constants", "fourier", "tolerances", "output"},
    "maxwell": {"grid", "field", "tolerances", "output"},
}


class ConfigError(ValueError):
    """Invalid configuration; message carries the offending table and key."""


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    seed: int
    data: dict

    def table(self, name: str, required: bool = False) -> dict:
        if name in self.data:
            return self.data[name]
        if required:
            raise ConfigError(f"scenario kind {self.kind!r} requires [{name}]")
        return {}


def _check_types(table: str | None, entries: dict) -> None:
    allowed = _SCHEMA[table]
    where = f"[{table}]" if table else "top level"
    for key, value in entries.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")
        types = allowed[key]
        if not isinstance(value, types if isinstance(types, tuple) else (types,)):
            raise ConfigError(
                f"key {key!r} in {where} has type {type(value).__name__}, "
                f"expected {types}")
        # TOML booleans are ints in python only via bool; reject bools where
        # a number is expected
        if isinstance(value, bool):
            raise ConfigError(f"key {key!r} in {where} must not be boolean")


def validate(raw: dict) -> ScenarioConfig:
    scalars = {k: v for k, v in raw.items() if not isinstance(v, dict)}
    tables = {k: v for k, v in raw.items() if isinstance(v, dict)}
    _check_types(None, scalars)
    if "kind" not in scalars:
        raise ConfigError("missing required top-level key 'kind'")
    kind = scalars["kind"]
    if kind not in SCENARIO_KINDS:
        raise ConfigError(f"unknown scenario kind {kind!r}; "
                          f"expected one of {SCENARIO_KINDS}")
    allowed_tables = _TABLES_BY_KIND[kind]
    for name, body in tables.items():
        if name not in allowed_tables:
            raise ConfigError(
                f"table [{name}] not allowed for scenario kind {kind!r}")
        _check_types(name, body)
    data = dict(scalars)
    data.update(tables)
    return ScenarioConfig(kind=kind, seed=int(scalars.get("seed", 0)), data=data)


def load_config(path) -> ScenarioConfig:
    text = Path(path).read_text()
    return loads_config(text)


def loads_config(text: str) -> ScenarioConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc
    return validate(raw)


# ---------------------------------------------------------------------------
# Serialization (minimal TOML writer covering the schema above)
# ---------------------------------------------------------------------------

def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ConfigError("non-finite floats are not serializable")
        text = repr(value)
        return text if ("." in text or "e" in text or "E" in text) else text + ".0"
    if isinstance(value, list):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize value of type {type(value).__name__}")


def dumps_config(config: ScenarioConfig) -> str:
    lines = []
    for key, value in config.data.items():
        if not isinstance(value, dict):
            lines.append(f"{key} = {_format_value(value)}")
    for name, body in config.data.items():
        if isinstance(body, dict):
            lines.append("")
            lines.append(f"[{name}]")
            for key, value in body.items():
                lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"
