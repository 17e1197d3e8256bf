"""EIT transmission spectrum, transparency width, group velocity and the
photon correlation time expected for a blockaded EIT medium."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DomainError

LN2 = math.log(2.0)


@dataclass(frozen=True)
class EitSpectrumParams:
    """Parameters of the two-term spectrum model; frequencies in rad/s."""

    od: float
    gamma: float
    delta0: float = 0.0
    delta1: float = 0.0
    t0: float = 1.0
    delta_t: float = 1.0

    def __post_init__(self):
        if self.od < 0 or self.delta_t <= 0 or not 0 <= self.t0 <= 1:
            raise DomainError(f"invalid EIT parameters {self}")


def eit_transmission(delta_s, p: EitSpectrumParams):
    """Absorption line without EIT plus an empiric Gaussian transparency peak.

    No clipping: the sum may exceed 1 slightly away from resonance.
    """
    d = np.asarray(delta_s, dtype=float)
    lorentz = np.exp(-p.od / (1 + (2 * (d - p.delta0) / p.gamma) ** 2))
    gauss = p.t0 * np.exp(-4 * (d - p.delta1) ** 2 * LN2 / p.delta_t ** 2)
    out = lorentz + gauss
    return float(out) if out.ndim == 0 else out


def transparency_width(rabi: float, gamma: float, od: float) -> float:
    """FWHM of the EIT transmission window (rad/s)."""
    if od <= 0:
        raise DomainError(f"optical depth must be > 0, got {od}")
    return rabi ** 2 * math.sqrt(LN2) / (gamma * math.sqrt(od))


def resonant_od_with_dephasing(od: float, rabi: float, gamma: float, gamma21: float) -> float:
    """Residual optical depth on the EIT resonance caused by ground-Rydberg dephasing.

    Uses OD * gamma21*Gamma / (gamma21*Gamma + Omega^2/2). Swap this one
    function to try another dephasing convention.
    """
    if od < 0 or rabi <= 0 or gamma <= 0 or gamma21 < 0:
        raise DomainError("need od >= 0, rabi > 0, gamma > 0, gamma21 >= 0")
    g = gamma21 * gamma
    return od * g / (g + rabi ** 2 / 2)


def group_velocity(rabi: float, l_a: float, gamma: float) -> float:
    """Slow-light group velocity estimate Omega^2 l_a / Gamma (m/s)."""
    if rabi <= 0 or l_a <= 0 or gamma <= 0:
        raise DomainError("group_velocity needs positive inputs")
    return rabi ** 2 * l_a / gamma


def vg_from_delay(sigma_z: float, t_delay: float) -> float:
    """Group velocity from the pulse delay across a Gaussian cloud of rms length sigma_z."""
    if sigma_z <= 0 or t_delay <= 0:
        raise DomainError("vg_from_delay needs positive inputs")
    return math.sqrt(2 * math.pi) * sigma_z / t_delay


def correlation_time_prediction(od: float, gamma: float, rabi: float) -> float:
    if od <= 0 or rabi <= 0:
        raise DomainError("need od > 0 and rabi > 0")
    return 1.05 * math.sqrt(8 * od) * gamma / rabi ** 2


def blockade_transit_time(r_b: float, v_g: float) -> float:
    """Naive time for a polariton to cross one blockade radius."""
    return r_b / v_g
