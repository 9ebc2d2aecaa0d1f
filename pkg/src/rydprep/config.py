"""Run configuration: a flat TOML table validated against a fixed schema.

Unknown keys are rejected, every value is type-checked and the physical
objects are constructed eagerly so invariant violations surface as
``ConfigError`` with the offending key and its line number.
"""

from __future__ import annotations

import json
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .basis import DEFAULT_LATTICE_CONSTANT, DEFAULT_NN_INTERACTION, DomainError, LatticeSpec
from .output import MAX_DUMP_SITES
from .pulse import PulseSchedule


class ConfigError(ValueError):
    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        where = ""
        if key is not None:
            where = f"{key}" + (f" (line {line})" if line is not None else "") + ": "
        super().__init__(where + message)
        self.key = key
        self.line = line


def _int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _int_list(v):
    return isinstance(v, list) and len(v) > 0 and all(_int(x) for x in v)


def _num_list(v):
    return isinstance(v, list) and len(v) > 0 and all(_num(x) for x in v)


# key -> (default, type check, description)
SCHEMA: dict[str, tuple[Any, Callable[[Any], bool], str]] = {
    "n_sites": (7, _int, "integer"),
    "lattice_constant_um": (DEFAULT_LATTICE_CONSTANT, _num, "number"),
    "nn_interaction_mhz": (DEFAULT_NN_INTERACTION, _num, "number"),
    "interaction_cutoff": (0, _int, "integer (0 = full tail)"),
    "duration_us": (2.0, _num, "number"),
    "rabi_max_mhz": (2.0, _num, "number"),
    "detuning_min_mhz": (-10.0, _num, "number"),
    "detuning_max_mhz": (10.0, _num, "number"),
    "ramp_fraction": (0.1, _num, "number"),
    "ramp_shape": ("sine-squared", lambda v: isinstance(v, str), "string"),
    "sample_count": (400, _int, "integer"),
    "gap_samples": (200, _int, "integer"),
    "k_retained": (6, _int, "integer"),
    "dressing_k_max": (6, _int, "integer"),
    "slope_window": (0.15, _num, "number"),
    "fit_min_sites": (5, _int, "integer"),
    "scaling_sites": ([1, 3, 5, 7, 9, 11, 13, 15], _int_list, "list of integers"),
    "sweep_sites": ([1, 3, 5, 7, 9], _int_list, "list of integers"),
    "sweep_duration_min_us": (0.1, _num, "number"),
    "sweep_duration_max_us": (10.0, _num, "number"),
    "sweep_duration_count": (11, _int, "integer"),
    "scan_rabi_max_mhz": (4.0, _num, "number"),
    "scan_rabi_points": (41, _int, "integer"),
    "scan_detuning_min_mhz": (-20.0, _num, "number"),
    "scan_detuning_max_mhz": (120.0, _num, "number"),
    "scan_detuning_points": (141, _int, "integer"),
    "lz_rabi_mhz": (1.0, _num, "number"),
    "lz_span_mhz": (40.0, _num, "number"),
    "lz_durations_us": ([0.5, 1.0, 2.0, 4.0, 8.0], _num_list, "list of numbers"),
    "dump_states": (False, lambda v: isinstance(v, bool), "boolean"),
    "output_dir": ("out", lambda v: isinstance(v, str), "string"),
}


def _positive(*keys):
    def check(values):
        for k in keys:
            if not values[k] > 0:
                return k, "must be > 0"
        return None
    return check


def _at_least(key, low):
    def check(values):
        if values[key] < low:
            return key, f"must be >= {low}"
        return None
    return check


_RULES = [
    _positive("n_sites", "sweep_duration_min_us", "sweep_duration_max_us", "lz_rabi_mhz", "lz_span_mhz",
              "scan_rabi_max_mhz"),
    _at_least("sample_count", 2),
    _at_least("gap_samples", 50),
    _at_least("k_retained", 2),
    _at_least("dressing_k_max", 1),
    _at_least("interaction_cutoff", 0),
    _at_least("sweep_duration_count", 1),
    _at_least("scan_rabi_points", 1),
    _at_least("scan_detuning_points", 1),
    lambda v: None if 0 < v["slope_window"] < 0.5 else ("slope_window", "must lie in (0, 0.5)"),
    lambda v: None if all(n >= 1 for n in v["scaling_sites"]) else ("scaling_sites", "entries must be >= 1"),
    lambda v: None if all(n >= 1 and n % 2 for n in v["sweep_sites"]) else ("sweep_sites", "entries must be odd and >= 1"),
    lambda v: None if all(t > 0 for t in v["lz_durations_us"]) else ("lz_durations_us", "entries must be > 0"),
    lambda v: None if v["sweep_duration_min_us"] <= v["sweep_duration_max_us"]
    else ("sweep_duration_min_us", "must not exceed sweep_duration_max_us"),
    lambda v: None if v["scan_detuning_min_mhz"] <= v["scan_detuning_max_mhz"]
    else ("scan_detuning_min_mhz", "must not exceed scan_detuning_max_mhz"),
    lambda v: None if not v["dump_states"] or v["n_sites"] <= MAX_DUMP_SITES
    else ("dump_states", f"state dumps are limited to n_sites <= {MAX_DUMP_SITES}"),
]

# which schedule/lattice key a DomainError message refers to
_FIELD_KEYS = {
    "total_duration": "duration_us",
    "rabi_max": "rabi_max_mhz",
    "detuning_min": "detuning_min_mhz",
    "ramp_fraction": "ramp_fraction",
    "ramp_shape": "ramp_shape",
    "n_sites": "n_sites",
    "lattice_constant": "lattice_constant_um",
    "c6": "nn_interaction_mhz",
}


@dataclass(frozen=True)
class RunConfig:
    values: dict
    lattice: LatticeSpec
    schedule: PulseSchedule

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def with_sites(self, n_sites: int) -> LatticeSpec:
        cutoff = self.values["interaction_cutoff"] or None
        return LatticeSpec(n_sites, self.lattice.lattice_constant, self.lattice.c6, cutoff)

    def sweep_durations(self) -> np.ndarray:
        return np.geomspace(self.sweep_duration_min_us, self.sweep_duration_max_us, self.sweep_duration_count)

    def to_dict(self) -> dict:
        return dict(self.values)

    def to_toml(self) -> str:
        return "".join(f"{k} = {_toml_value(v)}\n" for k, v in self.values.items())


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return str(v)


def _line_of(text: Optional[str], key: str) -> Optional[int]:
    if not text:
        return None
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for i, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return i
    return None


def build_config(raw: dict, text: Optional[str] = None) -> RunConfig:
    """Validate a flat mapping (missing keys take defaults)."""
    values = {}
    for key, val in raw.items():
        if key not in SCHEMA:
            raise ConfigError("unknown key", key, _line_of(text, key))
        _, check, kind = SCHEMA[key]
        if isinstance(val, dict):
            raise ConfigError("nested tables are not supported; the config is flat", key, _line_of(text, key))
        if not check(val):
            raise ConfigError(f"expected {kind}, got {val!r}", key, _line_of(text, key))
        values[key] = val
    for key, (default, _, _) in SCHEMA.items():
        values.setdefault(key, list(default) if isinstance(default, list) else default)
    for key, (default, _, _) in SCHEMA.items():
        if isinstance(default, float) and _num(values[key]):
            values[key] = float(values[key])
    values["lz_durations_us"] = [float(x) for x in values["lz_durations_us"]]
    for rule in _RULES:
        bad = rule(values)
        if bad:
            raise ConfigError(bad[1], bad[0], _line_of(text, bad[0]))
    try:
        a = values["lattice_constant_um"]
        lattice = LatticeSpec(values["n_sites"], a, values["nn_interaction_mhz"] * a**6,
                              values["interaction_cutoff"] or None)
        schedule = PulseSchedule.from_config(values)
    except DomainError as exc:
        msg = str(exc)
        key = next((k for f, k in _FIELD_KEYS.items() if msg.startswith(f)), None)
        raise ConfigError(msg, key, _line_of(text, key) if key else None) from None
    return RunConfig(values, lattice, schedule)


def parse_config(text: str) -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    return build_config(raw, text)


def load_config(path: str | Path) -> RunConfig:
    """Read a TOML config, or the ``config`` echo of a JSON run manifest."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    if path.suffix == ".json":
        try:
            manifest = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON manifest: {exc}") from None
        if not isinstance(manifest, dict) or not isinstance(manifest.get("config"), dict):
            raise ConfigError("manifest has no 'config' table")
        return build_config(manifest["config"])
    return parse_config(text)


def default_config() -> RunConfig:
    return build_config({})
