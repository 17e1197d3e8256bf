"""Weighted nonlinear least squares with parameter fixing.

The engine is a Levenberg-Marquardt loop with Marquardt's diagonal
scaling and central finite-difference Jacobians. Models live in a registry
and are written in laboratory units (microseconds, MHz, 1e12 cm^-3) so
parameters stay O(1).
"""
from __future__ import annotations

import contextlib
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import eit, propagation, storage_switch as ss
from .params import DomainError


class FitError(RuntimeError):
    pass


class RankDeficientError(FitError):
    """The normal equations are singular at the solution."""

    def __init__(self, message, combination):
        super().__init__(message)
        self.combination = combination


@dataclass
class DataSeries:
    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise DomainError("x and y must be 1-d arrays of equal length")
        if self.sigma is not None:
            self.sigma = np.broadcast_to(np.asarray(self.sigma, dtype=float), self.y.shape).copy()
            if np.any(self.sigma <= 0):
                raise DomainError("sigma must be > 0")

    def __len__(self):
        return self.x.size


@dataclass(frozen=True)
class Model:
    name: str
    func: Callable
    params: tuple[str, ...]
    defaults: dict
    bounds: dict
    x_label: str
    y_label: str
    doc: str = ""

    def __call__(self, x, **p):
        merged = {**self.defaults, **p}
        missing = [k for k in self.params if k not in merged]
        if missing:
            raise DomainError(f"model {self.name} lacks values for {missing}")
        return np.asarray(self.func(np.asarray(x, dtype=float), **{k: merged[k] for k in self.params}),
                          dtype=float)


@dataclass
class FitProblem:
    model: Model | str
    free: tuple[str, ...]
    fixed: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.model, str):
            self.model = get_model(self.model)
        self.free = tuple(self.free)
        clash = set(self.free) & set(self.fixed)
        if clash:
            raise DomainError(f"parameters both free and fixed: {sorted(clash)}")
        unknown = (set(self.free) | set(self.fixed)) - set(self.model.params)
        if unknown:
            raise DomainError(f"unknown parameters for {self.model.name}: {sorted(unknown)}")
        for k in self.free:
            lo, hi = self.bound(k)
            v = self.start(k)
            if not lo <= v <= hi:
                raise DomainError(f"initial {k}={v} outside bounds ({lo}, {hi})")

    def bound(self, k):
        return self.bounds.get(k, self.model.bounds.get(k, (-np.inf, np.inf)))

    def start(self, k):
        return self.initial.get(k, self.model.defaults.get(k, 1.0))


@dataclass
class FitResult:
    values: dict
    std_errors: dict
    residual_norm: float
    converged: bool
    iterations: int
    chi2: float = float("nan")
    dof: int = 0
    covariance: np.ndarray | None = None
    free: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    def within(self, truth: dict, n_sigma: float = 3.0) -> bool:
        return all(abs(self.values[k] - v) <= n_sigma * self.std_errors[k] for k, v in truth.items())


def _fd_jacobian(f, theta, lo, hi):
    """Central differences, one-sided next to a bound."""
    cols = []
    for i, t in enumerate(theta):
        h = max(1e-6, 1e-6 * abs(t))
        up, dn = theta.copy(), theta.copy()
        a, b = min(t + h, hi[i]), max(t - h, lo[i])
        up[i], dn[i] = a, b
        cols.append((f(up) - f(dn)) / (a - b))
    return np.column_stack(cols)


def model_jacobian(model: Model | str, x, params: dict, names=None) -> np.ndarray:
    """d f / d theta for the named parameters (finite differences)."""
    model = get_model(model) if isinstance(model, str) else model
    names = tuple(names or model.params)
    base = {**model.defaults, **params}
    theta = np.array([base[k] for k in names], dtype=float)

    def f(t):
        return model(x, **{**base, **dict(zip(names, t))})

    inf = np.full(theta.size, np.inf)
    return _fd_jacobian(f, theta, -inf, inf)


def _null_combination(jw, names):
    scale = np.linalg.norm(jw, axis=0)
    scale[scale == 0] = 1.0
    _, s, vt = np.linalg.svd(jw / scale, full_matrices=False)
    if s.size == 0 or s[-1] > 1e-10 * s[0]:
        return None
    v = vt[-1] / scale
    v = v / np.max(np.abs(v))
    terms = [f"{c:+.3g}*{n}" for c, n in zip(v, names) if abs(c) > 1e-6]
    return " ".join(terms)


def fit(problem: FitProblem, data: DataSeries, max_iter: int = 200, ftol: float = 1e-10,
        gtol: float = 1e-8) -> FitResult:
    """Minimise sum(((y - f) / sigma)^2) over the free parameters."""
    m = problem.model
    names = problem.free
    if len(data) < len(names) + 1:
        raise DomainError(f"need at least {len(names) + 1} points for {len(names)} free parameters")
    base = {**m.defaults, **problem.fixed}
    lo = np.array([problem.bound(k)[0] for k in names], dtype=float)
    hi = np.array([problem.bound(k)[1] for k in names], dtype=float)
    theta = np.array([problem.start(k) for k in names], dtype=float)
    w = 1.0 / data.sigma if data.sigma is not None else np.ones(len(data))

    def model_at(t):
        return m(data.x, **{**base, **dict(zip(names, t))})

    def resid(t):
        return (data.y - model_at(t)) * w

    r = resid(theta)
    if not np.all(np.isfinite(r)):
        raise FitError("model is not finite at the initial parameters")
    chi2 = float(r @ r)
    lam = 1e-3
    converged, reason = False, "max_iter"
    accepted = rejected = 0
    it = 0
    grad_cos = float("nan")
    for it in range(1, max_iter + 1):
        j = _fd_jacobian(model_at, theta, lo, hi) * w[:, None]
        a = j.T @ j
        g = j.T @ r
        d = np.diag(a).copy()
        d[d <= 0] = 1e-12 * max(d.max(initial=0), 1e-300)
        grad_cos = float(np.max(np.abs(g) / np.sqrt(d * max(chi2, 1e-300)))) if chi2 > 0 else 0.0
        if chi2 == 0 or grad_cos < gtol:
            converged, reason = True, "gradient"
            break
        step_taken = False
        while lam < 1e16:
            try:
                delta = np.linalg.solve(a + lam * np.diag(d), g)
            except np.linalg.LinAlgError:
                lam *= 10
                rejected += 1
                continue
            trial = np.clip(theta + delta, lo, hi)
            r_new = resid(trial)
            chi2_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
            if chi2_new < chi2:
                rel = (chi2 - chi2_new) / chi2
                theta, r, chi2 = trial, r_new, chi2_new
                lam = max(lam / 10, 1e-12)
                accepted += 1
                step_taken = True
                break
            lam *= 10
            rejected += 1
        if not step_taken:
            # no downhill step at any damping: a minimum up to rounding
            converged, reason = grad_cos < 1e-5, "stalled"
            break
        if rel < ftol:
            converged, reason = True, "ftol"
            break

    j = _fd_jacobian(model_at, theta, lo, hi) * w[:, None]
    combo = _null_combination(j, names)
    if combo is not None:
        raise RankDeficientError(f"parameters not identifiable; null direction {combo}", combo)
    cov = np.linalg.inv(j.T @ j)
    dof = len(data) - len(names)
    if data.sigma is None:
        cov = cov * (chi2 / dof if dof > 0 else np.nan)
    se = np.sqrt(np.diag(cov))
    values = {**problem.fixed, **dict(zip(names, theta.tolist()))}
    return FitResult(values=values, std_errors=dict(zip(names, se.tolist())), residual_norm=math.sqrt(chi2),
                     converged=converged, iterations=it, chi2=chi2, dof=dof, covariance=cov, free=names,
                     diagnostics={"reason": reason, "lambda": lam, "accepted": accepted, "rejected": rejected,
                                  "gradient_cosine": grad_cos, "damping_schedule": "x10 reject, /10 accept"})


# ---------------------------------------------------------------------------
# convenience fits
# ---------------------------------------------------------------------------

def fit_linear(data: DataSeries) -> FitResult:
    """Closed-form weighted straight line y = slope * x + intercept."""
    if len(data) < 2:
        raise DomainError("a line needs at least two points")
    w = np.ones(len(data)) if data.sigma is None else 1 / data.sigma ** 2
    x, y = data.x, data.y
    s, sx, sy = w.sum(), w @ x, w @ y
    sxx, sxy = w @ (x * x), w @ (x * y)
    det = s * sxx - sx ** 2
    if det <= 1e-300 * max(s * sxx, 1e-300):
        raise RankDeficientError("all x values coincide; slope and intercept are not separable",
                                 "+1*slope +x*intercept")
    slope = (s * sxy - sx * sy) / det
    intercept = (sxx * sy - sx * sxy) / det
    cov = np.array([[s, -sx], [-sx, sxx]]) / det
    r = (y - slope * x - intercept) * np.sqrt(w)
    chi2 = float(r @ r)
    dof = len(data) - 2
    if data.sigma is None:
        cov = cov * (chi2 / dof if dof > 0 else 0.0)
    se = np.sqrt(np.diag(cov))
    return FitResult({"slope": float(slope), "intercept": float(intercept)},
                     {"slope": float(se[0]), "intercept": float(se[1])}, math.sqrt(chi2), True, 0, chi2, dof, cov,
                     ("slope", "intercept"), {"reason": "closed form"})


_EXP_FORMS = {
    "decay": ("exponential_decay", ("amplitude", "tau")),
    "rate": ("retrieval_decay", ("n_r0", "rate")),
    "blockade": ("blockade_decay", ("eps0", "tau_pop")),
}


def fit_exponential(data: DataSeries, form: str = "decay", **kw) -> FitResult:
    """Exponential fits started from a straight line through the log of the data.

    ``form``: ``"decay"`` y = A exp(-t/tau), ``"rate"`` y = A exp(-rate t),
    ``"blockade"`` eps = 1 - (1 - eps0) exp(-t/tau_pop).
    """
    if form not in _EXP_FORMS:
        raise ValueError(f"form must be one of {sorted(_EXP_FORMS)}")
    name, (p_amp, p_time) = _EXP_FORMS[form]
    yy = 1 - data.y if form == "blockade" else data.y
    ok = yy > 0
    if ok.sum() < 2:
        raise DomainError("need at least two points with a positive log argument")
    sig = None if data.sigma is None else data.sigma[ok] / yy[ok]
    line = fit_linear(DataSeries(data.x[ok], np.log(yy[ok]), sig))
    slope = line.values["slope"]
    amp = math.exp(line.values["intercept"])
    if slope >= 0:
        slope = -1.0 / max(np.ptp(data.x), 1e-300)
    init = {p_amp: 1 - amp if form == "blockade" else amp,
            p_time: -slope if form == "rate" else -1 / slope}
    problem = FitProblem(name, (p_amp, p_time), initial=init, bounds=kw.pop("bounds", {}))
    return fit(problem, data, **kw)


def depletion_from_line(line: FitResult) -> tuple[float, float]:
    """(rho0, N1) of rho(N_t) = rho0 (1 - N_t / N1) from a straight-line fit."""
    s, c = line.values["slope"], line.values["intercept"]
    if s == 0:
        raise DomainError("zero slope: no depletion")
    return c, -c / s


# ---------------------------------------------------------------------------
# model registry (laboratory units)
# ---------------------------------------------------------------------------

_REGISTRY: dict[str, Model] = {}


def register(name, params, defaults, bounds, x_label, y_label, doc=""):
    def deco(func):
        _REGISTRY[name] = Model(name, func, tuple(params), dict(defaults), dict(bounds), x_label, y_label, doc)
        return func
    return deco


def get_model(name: str) -> Model:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; available: {', '.join(sorted(_REGISTRY))}") from None


def available_models() -> list[str]:
    return sorted(_REGISTRY)


_POS = (0.0, np.inf)
_UNIT = (0.0, 1.0)


@register("linear", ("slope", "intercept"), {"slope": 1.0, "intercept": 0.0}, {}, "x", "y",
          "y = slope * x + intercept")
def _linear(x, slope, intercept):
    return slope * x + intercept


@register("exponential_decay", ("amplitude", "tau"), {"amplitude": 1.0, "tau": 1.0}, {"tau": (1e-12, np.inf)},
          "t", "y", "y = amplitude * exp(-t / tau)")
def _exp_decay(x, amplitude, tau):
    return amplitude * np.exp(-x / tau)


@register("retrieval_decay", ("n_r0", "rate"), {"n_r0": 1.0, "rate": 1.1}, {"rate": _POS},
          "t_d [us]", "N_r", "N_r = n_r0 * exp(-rate * t_d), rate in 1/us")
def _retrieval(x, n_r0, rate):
    return ss.retrieval_decay(x, n_r0, rate)


@register("blockade_decay", ("eps0", "tau_pop"), {"eps0": 0.8, "tau_pop": 60.0},
          {"eps0": (-np.inf, 1.0), "tau_pop": (1e-9, np.inf)},
          "t_d [us]", "eps", "eps = 1 - (1 - eps0) exp(-t_d / tau_pop)")
def _blockade_decay(x, eps0, tau_pop):
    return 1 - (1 - eps0) * np.exp(-x / tau_pop)


@register("dephasing_rate", ("gamma0", "k_rho"), {"gamma0": 0.8, "k_rho": 0.15}, {},
          "rho [1e12 cm^-3]", "rate [1/us]", "rate = gamma0 + k_rho * rho")
def _dephasing(x, gamma0, k_rho):
    return gamma0 + k_rho * x


@register("density_depletion", ("rho0", "n1"), {"rho0": 1.0, "n1": 23.0}, {"n1": (1e-9, np.inf)},
          "N_t", "rho / rho_ref", "rho = rho0 (1 - N_t / n1)")
def _depletion(x, rho0, n1):
    return rho0 * (1 - x / n1)


@register("eit_transmission", ("od", "gamma", "delta0", "delta1", "t0", "delta_t"),
          {"od": 3.2, "gamma": 5.75, "delta0": 0.0, "delta1": 0.0, "t0": math.exp(-0.91), "delta_t": 1.7},
          {"od": _POS, "gamma": (1e-9, np.inf), "t0": _UNIT, "delta_t": (1e-9, np.inf)},
          "Delta_s / 2pi [MHz]", "T", "absorption line plus Gaussian transparency peak")
def _eit(x, od, gamma, delta0, delta1, t0, delta_t):
    return eit.eit_transmission(x, eit.EitSpectrumParams(od, gamma, delta0, delta1, t0, delta_t))


@register("transmitted_mean", ("t0", "b"), {"t0": 0.30, "b": 1.6}, {"t0": _UNIT, "b": (1e-6, np.inf)},
          "N_in", "N_out", "N_out = b T0 (1 - exp(-N_in / b))")
def _transmitted(x, t0, b):
    return propagation.transmitted_mean(x, b, t0)


def _storage(b, eta_sb, od, od_eit):
    return ss.StorageParams(min(max(eta_sb, 0.0), 1.0), b, od, od_eit)


_QUIET = [True]


@contextlib.contextmanager
def validity_warnings():
    """Let registry models emit ModelValidityWarning (silenced by default for fits)."""
    _QUIET.append(False)
    try:
        yield
    finally:
        _QUIET.pop()


def _quiet_extinction(x, p, mode):
    nb = np.asarray(_quiet(ss.stored_mean_before_switchoff, x, p, mode))
    # unclamped so the fit sees a smooth surface
    eps = 1 - p.eta_sb * nb
    if not _QUIET[-1] and np.any(eps < 0):
        warnings.warn("eta_sb * N_b exceeds 1; extinction is negative", ss.ModelValidityWarning, stacklevel=2)
    return eps


@register("extinction_vs_ng_full", ("b", "eta_sb", "od", "od_eit"),
          {"b": 2.0, "eta_sb": 0.29, "od": 3.2, "od_eit": 0.91},
          {"b": (1e-6, np.inf), "eta_sb": _UNIT, "od": _POS, "od_eit": _POS},
          "N_g", "eps", "eps = 1 - eta_sb N_b (full storage integral)")
def _eps_full(x, b, eta_sb, od, od_eit):
    return _quiet_extinction(x, _storage(b, eta_sb, od, od_eit), "full")


@register("extinction_vs_ng_rapid", ("b", "eta_sb", "od_eit"),
          {"b": 3.2, "eta_sb": 0.31, "od_eit": 0.91},
          {"b": (1e-6, np.inf), "eta_sb": _UNIT, "od_eit": _POS},
          "N_g", "eps", "eps = 1 - eta_sb N_b (rapid blockade)")
def _eps_rapid(x, b, eta_sb, od_eit):
    return _quiet_extinction(x, _storage(b, eta_sb, 0.0, od_eit), "rapid")


@register("herald_probability", ("b", "eta_wr", "eta_det", "od_eit", "p_h0"),
          {"b": 2.0, "eta_wr": 0.016, "eta_det": 0.27, "od_eit": 0.91, "p_h0": 1.4e-4},
          {"b": (1e-6, np.inf), "eta_wr": _UNIT, "eta_det": _UNIT, "od_eit": _POS, "p_h0": _UNIT},
          "N_g", "p_h", "p_h = eta_wr eta_det N_b + p_h0 (rapid N_b)")
def _herald(x, b, eta_wr, eta_det, od_eit, p_h0):
    h = ss.HeraldParams(min(eta_wr, 1.0), min(eta_det, 1.0), min(max(p_h0, 0.0), 1.0))
    return ss.herald_probability(x, h, ss.StorageParams(0.0, b, 0.0, od_eit), "rapid")


@register("postselected_extinction_vs_ng",
          ("eps_ideal", "n_post0", "b_h", "eta_wr", "eta_det", "p_h0", "b", "eta_sb", "od", "od_eit", "n_ref"),
          {"eps_ideal": 0.022, "n_post0": 0.7, "b_h": 2.0, "eta_wr": 0.016, "eta_det": 0.27, "p_h0": 1.4e-4,
           "b": 2.0, "eta_sb": 0.29, "od": 3.2, "od_eit": 0.91,
           "n_ref": float(propagation.transmitted_mean(1.7, 1.6, 0.30))},
          {"eps_ideal": _POS, "n_post0": (1e-9, np.inf)},
          "N_g", "eps_post",
          "background heralds mix the ideal postselected level with the total ensemble; "
          "n_ref is the transmitted target number without gate")
def _eps_post_ng(x, eps_ideal, n_post0, b_h, eta_wr, eta_det, p_h0, b, eta_sb, od, od_eit, n_ref):
    h = ss.HeraldParams(eta_wr, eta_det, p_h0)
    ph = ss.StorageParams(0.0, b_h, 0.0, od_eit)
    total = _storage(b, eta_sb, od, od_eit)
    return ss.postselected_extinction_vs_ng(
        x, eps_ideal, n_post0, h, ph, lambda n: _quiet_extinction(n, total, "full") * n_ref)


def _switch(od_b0, n1, p_s, n0, t0, b):
    return ss.SwitchParams(max(od_b0, 0.0), n1, min(max(p_s, 0.0), 1.0), max(n0, 0.0), t0, b)


def _quiet(func, *a):
    if not _QUIET[-1]:
        return func(*a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ss.ModelValidityWarning)
        return func(*a)


@register("extinction_post_vs_nt", ("od_b0", "n1", "t0", "b"),
          {"od_b0": 5.4, "n1": 23.0, "t0": 0.30, "b": 1.6},
          {"od_b0": _POS, "n1": (1e-6, np.inf), "t0": (1e-9, 1.0), "b": (1e-6, np.inf)},
          "N_t", "eps_post", "eps_post = N_t exp(-OD_b(N_t)) / N_out(N_t)")
def _eps_post_nt(x, od_b0, n1, t0, b):
    return _quiet(ss.extinction_post_vs_nt, x, _switch(od_b0, n1, 1.0, 0.0, t0, b))


@register("extinction_total_vs_nt", ("p_s", "ps_n0", "od_b0", "n1", "t0", "b"),
          {"p_s": 0.23, "ps_n0": 0.014, "od_b0": 5.4, "n1": 23.0, "t0": 0.30, "b": 1.6},
          {"p_s": (1e-9, 1.0), "ps_n0": _POS, "od_b0": _POS, "n1": (1e-6, np.inf), "t0": (1e-9, 1.0),
           "b": (1e-6, np.inf)},
          "N_t", "eps", "three-term total-ensemble extinction; N0 = ps_n0 / p_s")
def _eps_total_nt(x, p_s, ps_n0, od_b0, n1, t0, b):
    return _quiet(ss.extinction_total_vs_nt, x, _switch(od_b0, n1, p_s, ps_n0 / p_s, t0, b))


@register("bin_mean", ("mu0", "od", "od_eit"), {"mu0": 1.0, "od": 3.2, "od_eit": 0.91},
          {"mu0": _POS, "od": _POS, "od_eit": _POS},
          "z / L", "N_bin", "mean photon number of one bin (exact single-photon series)")
def _bin_mean(x, mu0, od, od_eit):
    m = propagation.MediumParams(od, od_eit)
    return np.array([propagation.bin_mean_analytic(mu0, m, z, form="series") for z in np.atleast_1d(x)])


@register("g2_gaussian_dip", ("scale", "depth", "tau_c"), {"scale": 1.0, "depth": 1.0, "tau_c": 0.23},
          {"tau_c": (1e-9, np.inf)},
          "tau [us]", "g2", "g2 = scale (1 - depth exp(-tau^2 / (2 tau_c^2)))")
def _g2_dip(x, scale, depth, tau_c):
    return scale * (1 - depth * np.exp(-x ** 2 / (2 * tau_c ** 2)))
