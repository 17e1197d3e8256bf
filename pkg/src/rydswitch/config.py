"""INI configuration files with unit suffixes, and named presets.

A value is a number (or comma-separated numbers) optionally followed by a
unit, e.g. ``control_waist = 12 um`` or ``trap_freqs = 136, 37, 37 Hz``.
Frequencies given in Hz/kHz/MHz are cyclic and converted to rad/s.
"""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import MISSING as _MISSING
from dataclasses import dataclass, field, fields
from pathlib import Path

from scipy import constants as sc

from .params import CONSTANTS, DomainError, ExperimentConfig

PRESET_ENV = "RYDSWITCH_PRESET_DIR"
_BUILTIN = Path(__file__).with_name("presets")


class ConfigError(ValueError):
    pass


_A0 = CONSTANTS.a0
_UNITS: dict[str, tuple[str, float]] = {
    "m": ("length", 1.0), "mm": ("length", 1e-3), "um": ("length", 1e-6), "nm": ("length", 1e-9),
    "s": ("time", 1.0), "ms": ("time", 1e-3), "us": ("time", 1e-6), "ns": ("time", 1e-9),
    "W": ("power", 1.0), "mW": ("power", 1e-3), "uW": ("power", 1e-6),
    "K": ("temperature", 1.0), "mK": ("temperature", 1e-3), "uK": ("temperature", 1e-6),
    "nK": ("temperature", 1e-9),
    "Hz": ("frequency", 2 * math.pi), "kHz": ("frequency", 2e3 * math.pi), "MHz": ("frequency", 2e6 * math.pi),
    "rad/s": ("frequency", 1.0),
    "1/s": ("rate", 1.0), "1/ms": ("rate", 1e3), "1/us": ("rate", 1e6),
    "J*m^6": ("c6", 1.0), "Eh*a0^6": ("c6", CONSTANTS.E_hartree * _A0 ** 6),
    "C*m^2/V": ("polarizability", 1.0), "au": ("polarizability", 4 * math.pi * CONSTANTS.eps0 * _A0 ** 3),
    "1/m^3": ("density", 1.0), "1/cm^3": ("density", 1e6),
    "V/m": ("field", 1.0), "MV/m": ("field", 1e6),
    "m/s": ("velocity", 1.0), "km/s": ("velocity", 1e3),
    "J": ("energy", 1.0), "uK*kB": ("energy", 1e-6 * sc.k),
}

_EXPERIMENT_DIMS = {
    "atom_number": None, "temperature": "temperature", "trap_freqs": "frequency",
    "signal_wavelength": "length", "control_wavelength": "length", "signal_waist": "length",
    "control_waist": "length", "control_power_gate": "power", "control_power_target": "power",
    "C6": "c6", "Gamma": "frequency", "branching_gate": None, "branching_target": None,
    "polarizability": "polarizability", "dephasing": "rate", "detection_efficiency": None,
    "cycle_time": "time", "rydberg_n": None, "od_gate": None, "od_target": None,
    "target_delay": "time", "target_on_time": "time", "gate_on_time": "time",
}
# reference energies are quoted as temperatures
_REFERENCE_DIMS = {
    "rms_radius_x": "length", "rms_radius_y": "length", "rms_radius_z": "length", "peak_density": "density",
    "E_field_gate": "field", "E_field_target": "field", "rabi_gate": "frequency", "rabi_target": "frequency",
    "blockade_radius_gate": "length", "blockade_radius_target": "length", "absorption_length": "length",
    "transparency_width_gate": "frequency", "transparency_width_target": "frequency",
    "group_velocity": "velocity", "group_velocity_delay": "velocity", "correlation_time": "time",
    "dipole_potential": "temperature", "time_avg_potential": "temperature", "od_eit_gate": None,
    "od_eit_target": None,
}


def parse_quantity(text: str, dim: str | None, name: str = "value"):
    """Parse ``'1, 2 um'`` into SI floats. Returns a float or a tuple of floats."""
    text = text.strip()
    parts = text.rsplit(None, 1)
    unit = None
    if len(parts) == 2 and parts[1] in _UNITS:
        text, unit = parts[0], parts[1]
    elif len(parts) == 2 and not _is_number(parts[1].rstrip(",")):
        raise ConfigError(f"{name}: unknown unit {parts[1]!r}")
    try:
        nums = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r} as a number") from None
    if not nums:
        raise ConfigError(f"{name}: empty value")
    factor = 1.0
    if unit is not None:
        udim, factor = _UNITS[unit]
        if dim is None:
            raise ConfigError(f"{name}: dimensionless, but unit {unit!r} given")
        if udim != dim:
            raise ConfigError(f"{name}: unit {unit!r} is a {udim}, expected a {dim}")
    vals = [v * factor for v in nums]
    return vals[0] if len(vals) == 1 else tuple(vals)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _scalar(v):
    if isinstance(v, str):
        low = v.strip().lower()
        if low in ("true", "yes", "on"):
            return True
        if low in ("false", "no", "off"):
            return False
        if _is_number(low):
            f = float(low)
            return int(f) if f.is_integer() and "." not in low and "e" not in low else f
        return v.strip()
    return v


def experiment_from_section(section: dict) -> ExperimentConfig:
    required = [f.name for f in fields(ExperimentConfig)
                if f.default is _MISSING and f.default_factory is _MISSING]
    missing = [k for k in required if k not in section]
    unknown = [k for k in section if k not in _EXPERIMENT_DIMS]
    if missing or unknown:
        msg = []
        if missing:
            msg.append("missing required fields: " + ", ".join(missing))
        if unknown:
            msg.append("unknown fields: " + ", ".join(unknown))
        raise ConfigError("; ".join(msg))
    kw = {}
    for k, raw in section.items():
        v = parse_quantity(raw, _EXPERIMENT_DIMS[k], k)
        if k == "trap_freqs":
            if not isinstance(v, tuple) or len(v) != 3:
                raise ConfigError("trap_freqs: need three values")
        elif isinstance(v, tuple):
            raise ConfigError(f"{k}: expected a single value")
        if k == "rydberg_n":
            v = int(v)
        kw[k] = v
    try:
        return ExperimentConfig(**kw)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


@dataclass
class Preset:
    name: str
    experiment: ExperimentConfig
    sections: dict = field(default_factory=dict)
    reference: dict = field(default_factory=dict)
    source: str = ""

    def section(self, name: str) -> dict:
        return dict(self.sections.get(name, {}))


def load_config(path: str | os.PathLike, name: str | None = None) -> Preset:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not cp.has_section("experiment"):
        experiment_from_section({})  # raises with the full list of missing fields
    exp = experiment_from_section(dict(cp["experiment"]))
    ref = {}
    if cp.has_section("reference"):
        for k, raw in cp["reference"].items():
            if k not in _REFERENCE_DIMS:
                raise ConfigError(f"reference: unknown field {k}")
            ref[k] = parse_quantity(raw, _REFERENCE_DIMS[k], k)
    sections = {s: {k: _scalar(v) for k, v in cp[s].items()}
                for s in cp.sections() if s not in ("experiment", "reference")}
    return Preset(name or path.stem, exp, sections, ref, str(path))


def preset_dirs() -> list[Path]:
    dirs = []
    env = os.environ.get(PRESET_ENV)
    if env:
        dirs.extend(Path(p) for p in env.split(os.pathsep) if p)
    dirs.append(_BUILTIN)
    return dirs


def available_presets() -> list[str]:
    names = set()
    for d in preset_dirs():
        if d.is_dir():
            names.update(p.stem for p in d.glob("*.ini"))
    return sorted(names)


def load_preset(name: str = "paper-2014") -> Preset:
    for d in preset_dirs():
        p = d / f"{name}.ini"
        if p.is_file():
            return load_config(p, name)
    raise ConfigError(f"unknown preset {name!r}; available: {', '.join(available_presets())}")
