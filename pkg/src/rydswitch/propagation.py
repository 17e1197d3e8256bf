"""Binning approximation for self-blockaded pulse propagation.

A pulse is cut into ``b`` independent temporal bins. Inside one bin every
photon is absorbed with coefficient ``alpha`` while the bin holds two or
more photons; a lone photon sees the EIT-resonant coefficient ``alpha1``.
The photon-number distribution of a bin then obeys a pure death process
in the propagation coordinate ``z``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import kernels
from .params import DomainError


class SolverError(RuntimeError):
    """The ODE integrator lost probability or ran out of steps."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class MediumParams:
    """Homogeneous medium: absorption coefficients in 1/m and lengths in m."""

    alpha: float
    alpha1: float
    length: float = 1.0
    pulse_length: float | None = None

    def __post_init__(self):
        if self.alpha < 0 or self.alpha1 < 0 or self.length <= 0:
            raise DomainError(f"invalid medium {self}")
        if self.pulse_length is not None and not 0 < self.pulse_length <= self.length:
            raise DomainError("pulse length must lie in (0, length]")

    @classmethod
    def from_od(cls, od: float, od_eit: float, length: float = 1.0, pulse_length=None) -> "MediumParams":
        return cls(od / length, od_eit / length, length, pulse_length)

    @property
    def od(self) -> float:
        return self.alpha * self.length

    @property
    def od_eit(self) -> float:
        return self.alpha1 * self.length

    @property
    def t0(self) -> float:
        return math.exp(-self.od_eit)

    @property
    def lp(self) -> float:
        return self.length if self.pulse_length is None else self.pulse_length


@dataclass(frozen=True)
class PulseSpec:
    n_in: float
    b: float
    t_p: float | None = None
    tau_c: float | None = None

    def __post_init__(self):
        if self.n_in < 0 or self.b <= 0:
            raise DomainError(f"invalid pulse {self}")

    @classmethod
    def from_durations(cls, n_in: float, t_p: float, tau_c: float) -> "PulseSpec":
        return cls(n_in, t_p / tau_c, t_p, tau_c)

    @property
    def mu0(self) -> float:
        return self.n_in / self.b

    @property
    def integer_bins(self) -> int:
        """Bin count used by sampled/ODE paths: b rounded up (mu0 rescaled by the caller)."""
        return max(1, math.ceil(self.b - 1e-12))


def default_nmax(mu0: float) -> int:
    return max(20, math.ceil(mu0 + 8 * math.sqrt(mu0)))


@dataclass
class BinDistribution:
    """Photon-number probabilities p_0..p_nmax of one bin."""

    probs: np.ndarray
    truncation_error: float = 0.0
    diagnostics: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.ndim != 1 or self.probs.size < 3:
            raise DomainError("need at least p_0, p_1, p_2")

    @classmethod
    def poisson(cls, mu0: float, nmax: int | None = None) -> "BinDistribution":
        nmax = default_nmax(mu0) if nmax is None else nmax
        n = np.arange(nmax + 1)
        if mu0 == 0:
            p = np.zeros(nmax + 1)
            p[0] = 1.0
        else:
            p = np.exp(n * math.log(mu0) - mu0 - gammaln(n + 1))
        return cls(p, truncation_error=max(0.0, 1.0 - p.sum()))

    @classmethod
    def fock(cls, n: int, nmax: int = 20) -> "BinDistribution":
        p = np.zeros(max(nmax, n, 2) + 1)
        p[n] = 1.0
        return cls(p)

    @property
    def nmax(self) -> int:
        return self.probs.size - 1

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    @property
    def mean(self) -> float:
        return float(np.arange(self.probs.size) @ self.probs)


def evolve_bin(init: BinDistribution, m: MediumParams, z: float, step: float | None = None,
               rtol: float = 1e-11, atol: float = 1e-14, drift_limit: float = 1e-6,
               max_steps: int = 200_000) -> BinDistribution:
    """Integrate the bin master equation from 0 to ``z`` with an adaptive
    Dormand-Prince 5(4) stepper. ``step`` is the initial (and maximum) step."""
    if not 0 <= z <= m.length * (1 + 1e-12):
        raise DomainError(f"z={z} outside [0, {m.length}]")
    rate = max(m.alpha * init.nmax, m.alpha1, 1e-300)
    h0 = step if step is not None else 0.1 / rate
    h_max = step if step is not None else max(z, h0)
    p, acc, rej, drift, status = kernels.integrate_bin(
        init.probs, m.alpha, m.alpha1, z, h0, h_max, rtol, atol, drift_limit, max_steps)
    diag = {"accepted": int(acc), "rejected": int(rej), "max_step_drift": float(drift)}
    if status == 1:
        raise SolverError(f"probability drift {drift:.3g} exceeded {drift_limit:g} in one step", diag)
    if status == 2:
        raise SolverError(f"step budget {max_steps} exhausted", diag)
    return BinDistribution(p, init.truncation_error, diag)


def _mu(mu0, m: MediumParams, z):
    return mu0 * np.exp(-m.alpha * z)


def p1_neglected(mu0, m: MediumParams, z):
    """Single-photon probability with alpha1 dropped from the series denominators."""
    mu = _mu(mu0, m, z)
    return np.exp(-m.alpha1 * z) * (1 - np.exp(-mu0)) - 1 + (1 + mu) * np.exp(-mu)


def p1_series(mu0, m: MediumParams, z, n_terms: int | None = None):
    """Exact single-photon probability for a Poisson input, as a power series in mu0.

    ``n_terms=None`` sums until the terms drop below double precision.
    """
    mu0 = float(mu0)
    z = float(z)
    a, a1 = m.alpha, m.alpha1
    total = 0.0
    term_pow = mu0 * mu0  # (-mu0)^(k+2) / k! built incrementally
    limit = n_terms if n_terms is not None else 400
    for k in range(limit + 1):
        if k > 0:
            term_pow *= -mu0 / k
        rate = a1 - (k + 2) * a
        if rate == 0.0:
            integral = z
        else:
            integral = math.expm1(rate * z) / rate
        term = term_pow * integral
        total += term
        if n_terms is None and k > mu0 + 2 and abs(term) < 1e-18 * max(1.0, abs(total)):
            break
    return math.exp(-a1 * z) * (mu0 * math.exp(-mu0) + a * total)


def bin_mean_analytic(mu0, m: MediumParams, z, form: str = "neglected"):
    """Mean photon number of a bin after distance ``z``.

    ``form="neglected"`` is the closed form obtained for alpha1 << alpha;
    ``form="series"`` uses the exact single-photon series and is valid for
    any alpha1.
    """
    if np.any(np.asarray(mu0) < 0):
        raise DomainError("mu0 must be >= 0")
    mu = _mu(mu0, m, z)
    if form == "neglected":
        return np.exp(-m.alpha1 * z) * (1 - np.exp(-mu0)) - 1 + mu + np.exp(-mu)
    if form == "series":
        p1 = p1_series(mu0, m, z)
        return p1 + mu * (1 - math.exp(-mu))
    raise ValueError(f"unknown form {form!r}")


def bin_distribution_analytic(mu0: float, m: MediumParams, z: float, nmax: int | None = None,
                              form: str = "series") -> BinDistribution:
    """Closed-form p_n(z): Poisson(mu(z)) for n >= 2, p_1 from the chosen form,
    p_0 from normalisation."""
    nmax = default_nmax(mu0) if nmax is None else nmax
    mu = float(_mu(mu0, m, z))
    n = np.arange(nmax + 1)
    p = np.zeros(nmax + 1)
    if mu > 0:
        p[2:] = np.exp(n[2:] * math.log(mu) - mu - gammaln(n[2:] + 1))
    p[1] = p1_series(mu0, m, z) if form == "series" else float(p1_neglected(mu0, m, z))
    p[0] = (1 + mu) * math.exp(-mu) - p[1]
    return BinDistribution(p)


def transmitted_mean(n_in, b, t0):
    """Transmitted photon number in the rapid-blockade limit."""
    if b <= 0:
        raise DomainError(f"b must be > 0, got {b}")
    n_in = np.asarray(n_in, dtype=float)
    out = b * t0 * -np.expm1(-n_in / b)
    return float(out) if out.ndim == 0 else out
