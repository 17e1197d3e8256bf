"""Storage of gate photons, extinction of the target pulse, heralding and
postselection, and the decay laws of blockade and retrieval.

Optical depths here refer to the pulse length inside the medium
(``od = alpha * L_p``, ``od_eit = alpha1 * L_p``); the default is
``L_p = L``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .params import DomainError
from .propagation import transmitted_mean

EULER_GAMMA = 0.57721566490153286061


class ModelValidityWarning(UserWarning):
    """A model is evaluated outside the regime it was linearised for."""


@dataclass(frozen=True)
class StorageParams:
    eta_sb: float
    b: float
    od: float
    od_eit: float

    def __post_init__(self):
        if not 0 <= self.eta_sb <= 1 or self.b <= 0 or self.od < 0 or self.od_eit < 0:
            raise DomainError(f"invalid storage parameters {self}")

    @property
    def beta(self) -> float:
        return initial_slope_beta(self)


@dataclass(frozen=True)
class SwitchParams:
    od_b0: float
    n1: float
    p_s: float
    n0: float
    t0: float
    b: float

    def __post_init__(self):
        if self.od_b0 < 0 or self.n1 <= 0 or not 0 <= self.p_s <= 1 or self.n0 < 0 or self.b <= 0:
            raise DomainError(f"invalid switch parameters {self}")


@dataclass(frozen=True)
class HeraldParams:
    eta_wr: float
    eta_det: float
    p_h0: float = 0.0

    def __post_init__(self):
        for name in ("eta_wr", "eta_det", "p_h0"):
            if not 0 <= getattr(self, name) <= 1:
                raise DomainError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class DecayParams:
    tau_pop: float
    gamma0: float = 0.0
    k_rho: float = 0.0

    def __post_init__(self):
        if self.tau_pop <= 0 or self.gamma0 < 0 or self.k_rho < 0:
            raise DomainError(f"invalid decay parameters {self}")


# ---------------------------------------------------------------------------
# exponential integral
# ---------------------------------------------------------------------------

def _e1_scalar(x: float) -> float:
    if x < 1.0:
        # -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
        total = 0.0
        term = 1.0
        for k in range(1, 60):
            term *= -x / k
            total += term / k
            if abs(term) < 1e-17 * abs(total):
                break
        return -EULER_GAMMA - math.log(x) - total
    # modified Lentz on the continued fraction e^-x / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x)


def exponential_integral_e1(x):
    """E1(x) = int_x^inf e^-t / t dt for x > 0."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0) or np.any(np.isnan(arr)):
        raise DomainError("E1 is only implemented for x > 0")
    if arr.ndim == 0:
        return _e1_scalar(float(arr))
    return np.array([_e1_scalar(v) for v in arr.ravel()]).reshape(arr.shape)


def _x_minus_ein(x: float) -> float:
    """x - Ein(x), with Ein(x) = E1(x) + gamma + ln x the entire exponential integral."""
    if x == 0.0:
        return 0.0
    if x < 2.0:
        # sum_{k>=2} (-1)^k x^k / (k k!)
        total = 0.0
        term = x
        for k in range(2, 80):
            term *= -x / k
            total += -term / k
            if abs(term) < 1e-18 * abs(total):
                break
        return total
    return x - (_e1_scalar(x) + EULER_GAMMA + math.log(x))


# ---------------------------------------------------------------------------
# storage
# ---------------------------------------------------------------------------

def _eit_average(od_eit: float) -> float:
    """(1 - e^-x) / x, continuous at x = 0."""
    return 1.0 if od_eit == 0 else -math.expm1(-od_eit) / od_eit


def _nb_scalar(n_in: float, p: StorageParams, mode: str) -> float:
    if n_in < 0:
        raise DomainError("incoming photon number must be >= 0")
    mu0 = n_in / p.b
    rapid = p.b * _eit_average(p.od_eit) * -math.expm1(-mu0)
    if mode == "rapid":
        return rapid
    if mode != "full":
        raise ValueError(f"unknown storage mode {mode!r}")
    if p.od == 0:
        return p.b * _eit_average(p.od_eit) * mu0 if p.od_eit else n_in
    # E1(mu_L) - E1(mu0) = od - Ein(mu_L) + Ein(mu0); the -L_p + od/alpha terms cancel
    mu_l = mu0 * math.exp(-p.od)
    return rapid + p.b * (_x_minus_ein(mu0) - _x_minus_ein(mu_l)) / p.od


def stored_mean_before_switchoff(n_in, p: StorageParams, mode: str = "full"):
    """Mean number of excitations in the medium just before the control light is switched off.

    ``mode="full"`` integrates the bin mean over the pulse (exponential-integral
    closed form); ``mode="rapid"`` assumes blockade is complete at the entrance.
    """
    arr = np.asarray(n_in, dtype=float)
    out = np.vectorize(lambda v: _nb_scalar(v, p, mode), otypes=[float])(arr)
    return float(out) if out.ndim == 0 else out


def initial_slope_beta(p: StorageParams) -> float:
    """|d eps / d N_g| at N_g -> 0."""
    return p.eta_sb * _eit_average(p.od_eit)


def extinction_vs_ng(n_g, p: StorageParams, mode: str = "full"):
    """Extinction of the total ensemble assuming perfect blockade by one stored excitation."""
    nb = np.asarray(stored_mean_before_switchoff(n_g, p, mode))
    eps = 1.0 - p.eta_sb * nb
    if np.any(eps < 0):
        warnings.warn("eta_sb * N_b exceeds 1; extinction clamped to 0", ModelValidityWarning, stacklevel=2)
        eps = np.maximum(eps, 0.0)
    return float(eps) if eps.ndim == 0 else eps


def storage_chain(p_s: float, n_g: float, b: float, od_eit: float):
    """(eta_s, N_b, eta_sb) from the stored probability p_s ~ N_s and the rapid N_b."""
    nb = stored_mean_before_switchoff(n_g, StorageParams(0.0, b, 0.0, od_eit), "rapid")
    return p_s / n_g, nb, p_s / nb


# ---------------------------------------------------------------------------
# heralding and postselection
# ---------------------------------------------------------------------------

def herald_probability(n_g, h: HeraldParams, p: StorageParams, mode: str = "rapid"):
    """Probability of detecting a retrieved photon, including the background p_h0."""
    nb = np.asarray(stored_mean_before_switchoff(n_g, p, mode))
    out = h.eta_wr * h.eta_det * nb + h.p_h0
    return float(out) if out.ndim == 0 else out


def background_fraction(n_g, h: HeraldParams, p: StorageParams, mode: str = "rapid"):
    """q = p_h(0) / p_h(N_g): fraction of heralds caused by background."""
    ph = np.asarray(herald_probability(n_g, h, p, mode))
    if np.any(ph <= 0):
        raise DomainError("herald probability vanishes; postselection undefined")
    out = herald_probability(0.0, h, p, mode) / ph
    return float(out) if np.ndim(out) == 0 else out


def postselected_extinction_vs_ng(n_g, eps_ideal: float, n_trans_post0: float, h: HeraldParams,
                                  p_herald: StorageParams, total_model, mode: str = "rapid"):
    """Postselected extinction diluted by background heralds.

    ``total_model(n_g)`` returns the transmitted target photon number of the
    total ensemble; ``p_herald`` parametrises the herald probability.
    """
    q = np.asarray(background_fraction(n_g, h, p_herald, mode))
    ideal = eps_ideal * n_trans_post0
    out = ((1 - q) * ideal + q * np.asarray(total_model(n_g))) / n_trans_post0
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# switch vs target photon number
# ---------------------------------------------------------------------------

def od_b0_estimate(r_b: float, l_a: float) -> float:
    """Blockaded optical depth from absorption across one blockade diameter."""
    return 2 * r_b / l_a


def blockaded_od(n_t, s: SwitchParams):
    n_t = np.asarray(n_t, dtype=float)
    if np.any(n_t >= s.n1):
        warnings.warn("N_t >= N1: linear density depletion is outside its range", ModelValidityWarning,
                      stacklevel=2)
    out = s.od_b0 * (1 - n_t / s.n1)
    return float(out) if out.ndim == 0 else out


def _require_positive_nt(n_t):
    n_t = np.asarray(n_t, dtype=float)
    if np.any(n_t <= 0):
        raise DomainError("extinction vs N_t is undefined at N_t = 0; use zero_target_numerator")
    return n_t


def extinction_post_vs_nt(n_t, s: SwitchParams):
    n_t = _require_positive_nt(n_t)
    out = n_t * np.exp(-np.asarray(blockaded_od(n_t, s))) / transmitted_mean(n_t, s.b, s.t0)
    return float(out) if out.ndim == 0 else out


def extinction_total_vs_nt(n_t, s: SwitchParams):
    n_t = _require_positive_nt(n_t)
    n_out = np.asarray(transmitted_mean(n_t, s.b, s.t0))
    blocked = n_t * np.exp(-np.asarray(blockaded_od(n_t, s))) + s.n0
    out = ((1 - s.p_s) * n_out + s.p_s * blocked) / n_out
    return float(out) if out.ndim == 0 else out


def zero_target_numerator(s: SwitchParams) -> float:
    """Transmitted photons per cycle at N_t = 0 (background retrieval only)."""
    return s.p_s * s.n0


# ---------------------------------------------------------------------------
# decay laws
# ---------------------------------------------------------------------------

def blockade_decay(t_d, eps0: float, d: DecayParams):
    """Extinction after a dark time t_d; the blockade depth 1 - eps decays with tau_pop."""
    t_d = np.asarray(t_d, dtype=float)
    if np.any(t_d < 0):
        raise DomainError("dark time must be >= 0")
    out = 1 - (1 - eps0) * np.exp(-t_d / d.tau_pop)
    return float(out) if out.ndim == 0 else out


def dephasing_rate(rho, d: DecayParams):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise DomainError("density must be >= 0")
    out = d.gamma0 + d.k_rho * rho
    return float(out) if out.ndim == 0 else out


def retrieval_decay(t_d, n_r0: float, rate: float):
    out = n_r0 * np.exp(-rate * np.asarray(t_d, dtype=float))
    return float(out) if out.ndim == 0 else out
