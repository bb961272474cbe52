"""JSON config files: schemas per command and validation with line numbers."""

from __future__ import annotations

import json
from json.decoder import scanstring
from pathlib import Path

import jsonschema

from .harness import SweepConfig

CONFIG_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed config; the message starts with ``file:line:col``."""


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_unit = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

_IC = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"const": "ricker"},
        "amplitude": _num,
        "center": _num,
        "width": _pos,
    },
}

_GRID = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_points": {"type": "integer", "minimum": 8},
        "length": _pos,
        "x_left": _num,
        "reference_factor": {"type": "integer", "minimum": 2},
    },
}

_VERSION = {"const": CONFIG_SCHEMA_VERSION}
_WINDOW = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}

RUN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "solver"],
    "properties": {
        "schema_version": _VERSION,
        "solver": {"enum": ["dispersive", "fv"]},
        "ic": _IC,
        "grid": _GRID,
        "epsilon": _unit,
        "beta": _unit,
        "gamma": _pos,
        "dt": _pos,
        "t_final": {"type": "number", "minimum": 0},
        "snapshot_interval": _pos,
        "diagnostics_interval": _pos,
        "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "flux_kind": {"enum": ["godunov", "rusanov"]},
    },
    "if": {"properties": {"solver": {"const": "dispersive"}}},
    "then": {"required": ["epsilon", "beta"]},
}

SWEEP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version"],
    "properties": {
        "schema_version": _VERSION,
        "epsilons": {"type": "array", "items": _pos, "minItems": 3},
        "scaling": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"c": _pos, "p": {"type": "number", "minimum": 2}},
        },
        "ic": _IC,
        "grid": _GRID,
        "gamma": _pos,
        "t_final": _pos,
        "windows": {"type": "array", "items": _WINDOW, "minItems": 1},
        "p_norms": {"type": "array", "minItems": 1,
                    "items": {"type": "number", "minimum": 1, "exclusiveMaximum": 6}},
        "comparison_times": {"type": "array", "items": {"type": "number", "minimum": 0},
                             "minItems": 1},
        "snapshot_interval": _pos,
        "diagnostics_interval": _pos,
        "dt": _pos,
        "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "flux_kind": {"enum": ["godunov", "rusanov"]},
    },
}

COMPARE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "run_a", "run_b", "times"],
    "properties": {
        "schema_version": _VERSION,
        "run_a": {"type": "string"},
        "run_b": {"type": "string"},
        "windows": {"type": "array", "items": _WINDOW, "minItems": 1},
        "p_norms": {"type": "array", "minItems": 1,
                    "items": {"type": "number", "minimum": 1, "exclusiveMaximum": 6}},
        "times": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
    },
}

MMS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version"],
    "properties": {
        "schema_version": _VERSION,
        "epsilon": _unit,
        "beta": _unit,
        "gamma": _pos,
        "t_final": _pos,
        "grid": _GRID,
        "dts": {"type": "array", "items": _pos, "minItems": 2},
        "spatial_n_points": {"type": "array", "items": {"type": "integer", "minimum": 8},
                             "minItems": 1},
        "spatial_dt": _pos,
    },
}

SCHEMAS = {"run": RUN_SCHEMA, "sweep": SWEEP_SCHEMA, "compare": COMPARE_SCHEMA,
           "mms": MMS_SCHEMA}

MMS_DEFAULTS = {
    "epsilon": 0.1, "beta": 0.01, "gamma": 0.5, "t_final": 1.0,
    "grid": {"n_points": 256, "length": 40.0, "x_left": -20.0},
    "dts": [4e-3, 2e-3, 1e-3],
    "spatial_n_points": [64, 128, 256],
    "spatial_dt": 1e-3,
}


# ------------------------------------------------------------ positions

def _skip_ws(text: str, i: int) -> int:
    while i < len(text) and text[i] in " \t\r\n":
        i += 1
    return i


def value_positions(text: str) -> dict:
    """Offset of every value in a valid JSON document, keyed by its path tuple."""
    decoder = json.JSONDecoder()
    pos = {}

    def parse(i, path):
        i = _skip_ws(text, i)
        pos[path] = i
        ch = text[i]
        if ch == "{":
            i = _skip_ws(text, i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = scanstring(text, _skip_ws(text, i) + 1)
                i = _skip_ws(text, i) + 1  # ':'
                i = _skip_ws(text, parse(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1
        if ch == "[":
            i = _skip_ws(text, i + 1)
            if text[i] == "]":
                return i + 1
            n = 0
            while True:
                i = _skip_ws(text, parse(i, path + (n,)))
                n += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = decoder.raw_decode(text, i)
        return end

    parse(0, ())
    return pos


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def _where(name: str, text: str, path) -> str:
    pos = value_positions(text)
    path = tuple(path)
    while path not in pos and path:
        path = path[:-1]
    line, col = _line_col(text, pos.get(path, 0))
    return f"{name}:{line}:{col}"


def _dotted(path) -> str:
    return "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in path).lstrip(".") or "<root>"


def load_config(path, command: str) -> dict:
    """Parse and schema-validate a config; raises ConfigError with a line-precise message."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such config file")
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [f"{_where(str(path), text, e.absolute_path)}: {_dotted(e.absolute_path)}: {e.message}"
                 for e in errors]
        raise ConfigError("\n".join(lines))
    try:
        _semantic_checks(data, command)
    except _PathError as exc:
        raise ConfigError(f"{_where(str(path), text, exc.path)}: {_dotted(exc.path)}: {exc}") from None
    return data


class _PathError(ValueError):
    def __init__(self, message, path):
        super().__init__(message)
        self.path = path


def _semantic_checks(data: dict, command: str) -> None:
    if command == "sweep":
        eps = data.get("epsilons", [])
        for i in range(1, len(eps)):
            if eps[i] >= eps[i - 1]:
                raise _PathError("epsilons must be strictly decreasing", ("epsilons", i))
        for i, e in enumerate(eps):
            if e >= 1:
                raise _PathError("epsilon must lie in (0, 1)", ("epsilons", i))
        try:
            sweep_config(data)
        except ValueError as exc:
            raise _PathError(str(exc), ()) from None
    for i, w in enumerate(data.get("windows", [])):
        if not w[0] < w[1]:
            raise _PathError("window must satisfy left < right", ("windows", i))


def sweep_config(data: dict) -> SweepConfig:
    kw = {}
    for key in ("epsilons", "gamma", "t_final", "windows", "p_norms", "comparison_times",
                "snapshot_interval", "diagnostics_interval", "dt", "cfl", "flux_kind"):
        if key in data:
            kw[key] = data[key]
    scaling = data.get("scaling", {})
    if "c" in scaling:
        kw["scaling_c"] = scaling["c"]
    if "p" in scaling:
        kw["scaling_p"] = scaling["p"]
    for key in ("amplitude", "center", "width"):
        if key in data.get("ic", {}):
            kw[key] = data["ic"][key]
    for key in ("n_points", "length", "x_left", "reference_factor"):
        if key in data.get("grid", {}):
            kw[key] = int(data["grid"][key]) if key in ("n_points", "reference_factor") else data["grid"][key]
    return SweepConfig(**kw)


RUN_DEFAULTS = {
    "ic": {"kind": "ricker", "amplitude": 1.0, "center": 0.0, "width": 1.0},
    "grid": {"n_points": 1024, "length": 40.0, "x_left": -20.0},
    "gamma": 0.5,
    "t_final": 2.0,
    "snapshot_interval": 0.02,
    "diagnostics_interval": 0.02,
}


def run_setup(data: dict):
    """(u0, params) for a validated run config, filling the standard-run defaults."""
    from . import grid as g
    from .dispersive import DispersiveParams, default_time_step
    from .finite_volume import FVParams

    ic = {**RUN_DEFAULTS["ic"], **data.get("ic", {})}
    gd = {**RUN_DEFAULTS["grid"], **data.get("grid", {})}
    gd.pop("reference_factor", None)
    common = {k: data.get(k, RUN_DEFAULTS[k])
              for k in ("gamma", "t_final", "snapshot_interval", "diagnostics_interval")}
    try:
        grid = g.make_grid(int(gd["n_points"]), gd["length"], gd["x_left"])
        u0 = g.ricker_ic(ic["amplitude"], ic["center"], ic["width"], grid)
    except ValueError as exc:
        raise _PathError(str(exc), ("ic",)) from None
    try:
        if data["solver"] == "dispersive":
            dt = data.get("dt") or default_time_step(u0, common["snapshot_interval"])
            params = DispersiveParams(data["epsilon"], data["beta"], dt=dt, **common)
        else:
            extra = {k: data[k] for k in ("cfl", "flux_kind") if k in data}
            params = FVParams(**common, **extra)
    except ValueError as exc:
        raise _PathError(str(exc), ()) from None
    return u0, params


def load_run_config(path):
    """load_config for ``run`` plus construction, so every error carries a location."""
    data = load_config(path, "run")
    try:
        return data, run_setup(data)
    except _PathError as exc:
        text = Path(path).read_text()
        raise ConfigError(f"{_where(str(path), text, exc.path)}: {_dotted(exc.path)}: {exc}") from None
