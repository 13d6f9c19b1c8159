"""Run configuration: a flat sectioned key/value file.

Example::

    [system]
    kappa = 1000
    gamma_m = 1e-5
    gamma = 0.001          # sets gamma_1 and gamma_2
    g_a1 = 10
    g_a2 = 10
    delta_1 = 2
    delta_2 = -2
    g_minus = 1
    g_plus = 0.9

    [solver]
    method = harmonic-balance
    harmonics = 6

    [sweep]
    parameter = ratio
    start = 0
    stop = 0.98
    count = 50
    scale = linear

    [output]
    path = fig2.csv

All frequencies and rates are in units of the mechanical frequency.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, ValidationError
from .model import SystemParams, params_from_drives, validate_params
from .solver import Method, SolverOptions

SYSTEM_FLOAT_KEYS = {f.name for f in fields(SystemParams)} | {"gamma", "g", "drive_plus", "drive_minus"}
SYSTEM_KEYS = SYSTEM_FLOAT_KEYS | {"coupling_mode"}
SOLVER_KEYS = {
    "method": str,
    "rel_tol": float,
    "abs_tol": float,
    "convergence_tol": float,
    "max_periods": int,
    "harmonics": int,
    "max_harmonics": int,
}
SWEEP_KEYS = {
    "parameter": str,
    "start": float,
    "stop": float,
    "count": int,
    "scale": str,
    "optimize": bool,
}
OUTPUT_KEYS = {"path": str}
SECTIONS = ("system", "solver", "sweep", "output")
REQUIRED_SYSTEM = ("kappa", "g_minus")

_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


@dataclass(frozen=True)
class SweepSpec:
    parameter: str = "ratio"
    start: float = 0.0
    stop: float = 0.98
    count: int = 50
    scale: str = "linear"
    optimize: bool = False

    def __post_init__(self):
        if self.count < 2:
            raise ConfigError(f"sweep count must be >= 2, got {self.count}", key="count")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"scale must be 'linear' or 'log', got {self.scale!r}", key="scale")
        if self.scale == "log" and not (self.start > 0 and self.stop > 0):
            raise ConfigError("log-scaled sweeps need positive start and stop", key="start")
        if not self.stop > self.start:
            raise ConfigError(f"sweep stop must exceed start ({self.start} .. {self.stop})", key="stop")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.logspace(np.log10(self.start), np.log10(self.stop), self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class RunConfig:
    system_values: dict = field(default_factory=dict)
    solver: SolverOptions = field(default_factory=SolverOptions)
    sweep: Optional[SweepSpec] = None
    sweep_values: dict = field(default_factory=dict)
    output: Optional[str] = None
    coupling_mode: str = "direct"

    def system(self, defaults: SystemParams | None = None) -> SystemParams:
        """Validated SystemParams; keys absent from the file fall back to ``defaults``."""
        vals = dict(self.system_values)
        phys = {k: vals.pop(k) for k in ("g", "drive_plus", "drive_minus") if k in vals}
        gamma = vals.pop("gamma", None)
        if gamma is not None:
            vals.setdefault("gamma_1", gamma)
            vals.setdefault("gamma_2", gamma)
        if self.coupling_mode == "physical":
            vals.setdefault("g_minus", 0.0)
        if defaults is None:
            missing = [k for k in REQUIRED_SYSTEM if k not in vals and not (k == "g_minus" and self.coupling_mode == "physical")]
            if missing:
                raise ConfigError(f"missing required field in [system]: {', '.join(missing)}", key=missing[0])
            p = SystemParams(**vals)
        else:
            p = replace(defaults, **vals)
        if self.coupling_mode == "physical":
            missing = [k for k in ("g", "drive_plus", "drive_minus") if k not in phys]
            if missing:
                raise ConfigError(f"physical coupling mode needs {', '.join(missing)}", key=missing[0])
            p = params_from_drives(p, phys["g"], phys["drive_plus"], phys["drive_minus"])
        return validate_params(p)

    def sweep_spec(self, defaults: SweepSpec | None = None) -> SweepSpec:
        if defaults is None:
            if self.sweep is None:
                raise ConfigError("missing [sweep] section", key="sweep")
            return self.sweep
        return replace(defaults, **self.sweep_values)

    def describe(self) -> dict:
        out = {f"system.{k}": v for k, v in sorted(self.system_values.items())}
        out["system.coupling_mode"] = self.coupling_mode
        for f in fields(self.solver):
            v = getattr(self.solver, f.name)
            out[f"solver.{f.name}"] = v.value if isinstance(v, Method) else v
        for k, v in sorted(self.sweep_values.items()):
            out[f"sweep.{k}"] = v
        if self.output:
            out["output.path"] = self.output
        return out


def _line_index(text: str) -> dict:
    """Map (section, key) to 1-based line numbers."""
    index = {}
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            index.setdefault((section, None), n)
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip().lower()), n)
    return index


def _convert(section: str, key: str, raw: str, typ, line):
    try:
        if typ is bool:
            return _BOOL[raw.strip().lower()]
        if typ is int:
            f = float(raw)
            if f != int(f):
                raise ValueError
            return int(f)
        if typ is float:
            return float(raw)
        return raw.strip()
    except (ValueError, KeyError, OverflowError):
        raise ConfigError(
            f"type mismatch in [{section}]: expected {typ.__name__}, got {raw!r}", key=key, line=line
        ) from None


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"), strict=True)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key/value outside of a [section]", line=exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key in [{exc.section}]", key=exc.option, line=exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", line=exc.lineno) from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    lines = _line_index(text)
    for sec in parser.sections():
        if sec.lower() not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]", key=sec, line=lines.get((sec.lower(), None)))

    def section_items(name, schema):
        out = {}
        if not parser.has_section(name):
            return out
        for key, raw in parser.items(name):
            line = lines.get((name, key))
            if key not in schema:
                raise ConfigError(f"unknown key in [{name}]", key=key, line=line)
            out[key] = _convert(name, key, raw, schema[key], line)
        return out

    system_schema = {k: float for k in SYSTEM_FLOAT_KEYS}
    system_schema["coupling_mode"] = str
    system = section_items("system", system_schema)
    mode = system.pop("coupling_mode", "direct")
    if mode not in ("direct", "physical"):
        raise ConfigError(f"coupling_mode must be 'direct' or 'physical', got {mode!r}", key="coupling_mode",
                          line=lines.get(("system", "coupling_mode")))

    solver_vals = section_items("solver", SOLVER_KEYS)
    try:
        solver = SolverOptions(**solver_vals)
    except ValidationError as exc:
        raise ConfigError(str(exc), key=exc.field, line=lines.get(("solver", exc.field))) from None

    sweep_vals = section_items("sweep", SWEEP_KEYS)
    sweep = None
    if parser.has_section("sweep"):
        try:
            sweep = SweepSpec(**sweep_vals)
        except ConfigError as exc:
            raise ConfigError(exc.reason, key=exc.key, line=lines.get(("sweep", exc.key))) from None

    output = section_items("output", OUTPUT_KEYS).get("path")
    return RunConfig(system, solver, sweep, sweep_vals, output, mode)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
