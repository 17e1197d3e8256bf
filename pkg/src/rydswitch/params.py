"""Raw experimental inputs and the optical/atomic quantities derived from them.

All values are SI. Angular frequencies are in rad/s, the van-der-Waals
coefficient in J m^6, the polarizability in C m^2/V.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, fields

from scipy import constants as _sc


class DomainError(ValueError):
    """An input lies outside the domain of a formula."""


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _sc.hbar
    kB: float = _sc.k
    c: float = _sc.c
    eps0: float = _sc.epsilon_0
    a0: float = _sc.physical_constants["Bohr radius"][0]
    e_charge: float = _sc.e
    m_electron: float = _sc.m_e
    m_Rb87: float = 86.909180531 * _sc.atomic_mass

    @property
    def E_hartree(self) -> float:
        return self.hbar ** 2 / (self.m_electron * self.a0 ** 2)


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class ExperimentConfig:
    """Raw physical inputs of one experimental configuration (SI units)."""

    atom_number: float
    temperature: float
    trap_freqs: tuple[float, float, float]
    signal_wavelength: float
    control_wavelength: float
    signal_waist: float
    control_waist: float
    control_power_gate: float
    control_power_target: float
    C6: float
    Gamma: float
    branching_gate: float
    branching_target: float
    polarizability: float
    dephasing: float
    detection_efficiency: float
    cycle_time: float
    rydberg_n: int = 100
    od_gate: float = 3.5
    od_target: float = 10.0
    target_delay: float = 0.25e-6
    target_on_time: float = 1.5e-6
    gate_on_time: float = 0.6e-6

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        problems = []
        positive = ("temperature", "signal_wavelength", "control_wavelength", "signal_waist",
                    "control_waist", "control_power_gate", "control_power_target", "Gamma",
                    "cycle_time", "atom_number")
        for name in positive:
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0 (got {getattr(self, name)!r})")
        if len(self.trap_freqs) != 3 or not all(w > 0 for w in self.trap_freqs):
            problems.append(f"trap_freqs must be three positive values (got {self.trap_freqs!r})")
        for name in ("branching_gate", "branching_target", "detection_efficiency"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                problems.append(f"{name} must lie in (0, 1] (got {v!r})")
        if self.dephasing < 0:
            problems.append(f"dephasing must be >= 0 (got {self.dephasing!r})")
        if problems:
            raise DomainError("; ".join(problems))

    @property
    def duty_factor(self) -> float:
        """Cycle-averaged control intensity relative to the target power."""
        on = self.target_on_time * self.control_power_target + self.gate_on_time * self.control_power_gate
        return on / (self.control_power_target * self.cycle_time)


@dataclass(frozen=True)
class DerivedQuantities:
    rms_radii: tuple[float, float, float]
    peak_density: float
    E_field_gate: float
    E_field_target: float
    dipole_gate: float
    dipole_target: float
    rabi_gate: float
    rabi_target: float
    blockade_radius_gate: float
    blockade_radius_target: float
    cross_section_target: float
    absorption_length: float
    group_velocity: float
    group_velocity_delay: float
    transparency_width_gate: float
    transparency_width_target: float
    od_eit_gate: float
    od_eit_target: float
    correlation_time: float
    dipole_potential: float
    time_avg_potential: float

    # SI unit of every field; used by the reports and by unit checks in tests
    units: dict = field(default_factory=lambda: dict(_UNITS), repr=False, compare=False)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("units")
        return d


_UNITS = {
    "rms_radii": "m", "peak_density": "1/m^3", "E_field_gate": "V/m", "E_field_target": "V/m",
    "dipole_gate": "C m", "dipole_target": "C m", "rabi_gate": "rad/s", "rabi_target": "rad/s",
    "blockade_radius_gate": "m", "blockade_radius_target": "m", "cross_section_target": "m^2",
    "absorption_length": "m", "group_velocity": "m/s", "group_velocity_delay": "m/s",
    "transparency_width_gate": "rad/s", "transparency_width_target": "rad/s",
    "od_eit_gate": "1", "od_eit_target": "1", "correlation_time": "s",
    "dipole_potential": "J", "time_avg_potential": "J",
}


def cloud_geometry(cfg: ExperimentConfig, k: PhysicalConstants = CONSTANTS):
    """Thermal rms radii of the harmonically trapped cloud and its peak density."""
    if not cfg.temperature > 0 or not all(w > 0 for w in cfg.trap_freqs):
        raise DomainError("temperature and trap frequencies must be positive")
    v2 = k.kB * cfg.temperature / k.m_Rb87
    radii = tuple(math.sqrt(v2) / w for w in cfg.trap_freqs)
    peak = cfg.atom_number / ((2 * math.pi) ** 1.5 * radii[0] * radii[1] * radii[2])
    return radii, peak


def beam_field_amplitude(power: float, waist: float, k: PhysicalConstants = CONSTANTS) -> float:
    """Peak electric field of a Gaussian beam with 1/e^2 intensity radius ``waist``."""
    if waist <= 0:
        raise DomainError(f"waist must be > 0, got {waist}")
    if power < 0:
        raise DomainError(f"power must be >= 0, got {power}")
    intensity = 2 * power / (math.pi * waist ** 2)
    return math.sqrt(2 * intensity / (k.c * k.eps0))


def radial_integral(n: int, k: PhysicalConstants = CONSTANTS) -> float:
    """<r> between 5p and ns for Rb87, in metres."""
    if n <= 0:
        raise DomainError(f"principal quantum number must be positive, got {n}")
    if not 50 <= n <= 150:
        warnings.warn(f"radial-integral scaling used outside n in [50, 150] (n={n})", stacklevel=2)
    return 0.014 * (50.0 / n) ** 1.5 * k.a0


def rydberg_dipole_elements(n: int, k: PhysicalConstants = CONSTANTS):
    """Control-transition dipole matrix elements (gate, target) in C m."""
    r = radial_integral(n, k)
    d_g = k.e_charge * r / 3
    return d_g, d_g * math.sqrt(2)


def rabi_frequency(d: float, E0: float, k: PhysicalConstants = CONSTANTS) -> float:
    if d <= 0 or E0 < 0:
        raise DomainError("need d > 0 and E0 >= 0")
    return d * E0 / k.hbar


def blockade_radius(C6: float, Gamma: float, rabi: float, k: PhysicalConstants = CONSTANTS) -> float:
    if rabi == 0:
        raise DomainError("blockade radius diverges for a vanishing Rabi frequency")
    return abs(2 * C6 * Gamma / (k.hbar * rabi ** 2)) ** (1 / 6)


def cross_section(branching: float, wavelength: float) -> float:
    return 3 * branching * wavelength ** 2 / (2 * math.pi)


def absorption_length(density: float, branching: float, wavelength: float) -> float:
    if density <= 0:
        raise DomainError(f"density must be > 0, got {density}")
    if not 0 < branching <= 1 or wavelength <= 0:
        raise DomainError("branching must lie in (0, 1] and wavelength be > 0")
    return 1.0 / (density * cross_section(branching, wavelength))


def dipole_potential(polarizability: float, E0: float, duty_factor: float):
    """Light-shift potential maximum and its cycle average, both in J."""
    if not 0 <= duty_factor <= 1:
        raise DomainError(f"duty factor must lie in [0, 1], got {duty_factor}")
    v0 = -polarizability * E0 ** 2 / 4
    return v0, duty_factor * v0


def derive(cfg: ExperimentConfig, k: PhysicalConstants = CONSTANTS) -> DerivedQuantities:
    """Evaluate the full chain of derived quantities from raw inputs."""
    from . import eit

    radii, peak = cloud_geometry(cfg, k)
    e_g = beam_field_amplitude(cfg.control_power_gate, cfg.control_waist, k)
    e_t = beam_field_amplitude(cfg.control_power_target, cfg.control_waist, k)
    d_g, d_t = rydberg_dipole_elements(cfg.rydberg_n, k)
    om_g = rabi_frequency(d_g, e_g, k)
    om_t = rabi_frequency(d_t, e_t, k)
    l_a = absorption_length(peak / 2, cfg.branching_target, cfg.signal_wavelength)
    v0, v0_avg = dipole_potential(cfg.polarizability, e_t, cfg.duty_factor)
    return DerivedQuantities(
        rms_radii=radii,
        peak_density=peak,
        E_field_gate=e_g,
        E_field_target=e_t,
        dipole_gate=d_g,
        dipole_target=d_t,
        rabi_gate=om_g,
        rabi_target=om_t,
        blockade_radius_gate=blockade_radius(cfg.C6, cfg.Gamma, om_g, k),
        blockade_radius_target=blockade_radius(cfg.C6, cfg.Gamma, om_t, k),
        cross_section_target=cross_section(cfg.branching_target, cfg.signal_wavelength),
        absorption_length=l_a,
        group_velocity=eit.group_velocity(om_t, l_a, cfg.Gamma),
        group_velocity_delay=eit.vg_from_delay(radii[2], cfg.target_delay),
        transparency_width_gate=eit.transparency_width(om_g, cfg.Gamma, cfg.od_gate),
        transparency_width_target=eit.transparency_width(om_t, cfg.Gamma, cfg.od_target),
        od_eit_gate=eit.resonant_od_with_dephasing(cfg.od_gate, om_g, cfg.Gamma, cfg.dephasing),
        od_eit_target=eit.resonant_od_with_dephasing(cfg.od_target, om_t, cfg.Gamma, cfg.dephasing),
        correlation_time=eit.correlation_time_prediction(cfg.od_target, cfg.Gamma, om_t),
        dipole_potential=v0,
        time_avg_potential=v0_avg,
    )


def config_fields() -> list[str]:
    return [f.name for f in fields(ExperimentConfig)]
