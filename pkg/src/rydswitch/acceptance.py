"""Acceptance criteria shared by the test suite and ``rydswitch acceptance``.

Each ``criterion_N`` returns a :class:`Criterion` holding individual
checks. A criterion passes when every asserted check passes; report-only
checks carry ``asserted=False``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import eit, fitting, montecarlo as mc, params, propagation as prop, storage_switch as ss
from .config import load_preset

TWO_PI = 2 * math.pi
MHZ = TWO_PI * 1e6


@dataclass
class Check:
    name: str
    value: float
    target: float | None = None
    tolerance: str = ""
    passed: bool = True
    asserted: bool = True

    def line(self) -> str:
        mark = ("PASS" if self.passed else "FAIL") if self.asserted else "info"
        tgt = "" if self.target is None else f" target {self.target:.6g}"
        tol = f" ({self.tolerance})" if self.tolerance else ""
        return f"  [{mark}] {self.name}: {self.value:.6g}{tgt}{tol}"


@dataclass
class Criterion:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0
    report_only: bool = False

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.asserted)

    def status(self) -> str:
        if self.report_only:
            return "REPORT"
        return "PASS" if self.passed else "FAIL"

    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.asserted and not c.passed]

    def add_rel(self, name, value, target, rel):
        ok = abs(value - target) <= rel * abs(target)
        self.checks.append(Check(name, value, target, f"rel {rel:g}", ok))

    def add_abs(self, name, value, target, tol):
        ok = abs(value - target) <= tol
        self.checks.append(Check(name, value, target, f"abs {tol:g}", ok))

    def add_bool(self, name, value, ok, tolerance=""):
        self.checks.append(Check(name, float(value), None, tolerance, bool(ok)))


def _timed(func):
    def wrapper(*a, **kw):
        t = time.perf_counter()
        crit = func(*a, **kw)
        crit.seconds = time.perf_counter() - t
        return crit
    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    return wrapper


# ---------------------------------------------------------------------------
# 1. derived parameters
# ---------------------------------------------------------------------------

@_timed
def criterion_1(preset_name: str = "paper-2014") -> Criterion:
    """Each operation evaluated on the quoted upstream values; the full chain is reported."""
    c = Criterion(1, "derived-parameter reproduction")
    pre = load_preset(preset_name)
    cfg = pre.experiment
    k = params.CONSTANTS
    um, kb_uk = 1e-6, 1e-6 * 1.380649e-23

    radii, rho_p = params.cloud_geometry(cfg)
    for axis, r, t in zip("xyz", radii, (7.5, 28, 28)):
        c.add_rel(f"sigma_{axis} [um]", r / um, t, 0.05)
    c.add_rel("rho_p [1e12 cm^-3]", rho_p / 1e18, 2.4, 0.05)

    e_g = params.beam_field_amplitude(cfg.control_power_gate, cfg.control_waist)
    e_t = params.beam_field_amplitude(cfg.control_power_target, cfg.control_waist)
    c.add_rel("E_c,g [MV/m]", e_g / 1e6, 0.23, 0.05)
    c.add_rel("E_c,t [MV/m]", e_t / 1e6, 0.32, 0.05)

    d_g, d_t = params.rydberg_dipole_elements(cfg.rydberg_n)
    om_g = params.rabi_frequency(d_g, 0.23e6)
    om_t = params.rabi_frequency(d_t, 0.32e6)
    c.add_rel("Omega_c,g/2pi [MHz]", om_g / MHZ, 4.7, 0.05)
    c.add_rel("Omega_c,t/2pi [MHz]", om_t / MHZ, 9.4, 0.05)

    c.add_rel("r_b,g [um]", params.blockade_radius(cfg.C6, cfg.Gamma, 4.7 * MHZ) / um, 18, 0.05)
    c.add_rel("r_b,t [um]", params.blockade_radius(cfg.C6, cfg.Gamma, 9.4 * MHZ) / um, 14, 0.05)

    l_a = params.absorption_length(2.4e18 / 2, cfg.branching_target, cfg.signal_wavelength)
    c.add_rel("l_a [um]", l_a / um, 5, 0.10)
    c.add_rel("Delta_T,g/2pi [MHz]", eit.transparency_width(4.7 * MHZ, cfg.Gamma, cfg.od_gate) / MHZ, 1.7, 0.10)
    c.add_rel("Delta_T,t/2pi [MHz]", eit.transparency_width(9.4 * MHZ, cfg.Gamma, cfg.od_target) / MHZ, 4.0, 0.10)
    c.add_rel("v_g formula [km/s]", eit.group_velocity(9.4 * MHZ, 5 * um, cfg.Gamma) / 1e3, 0.5, 0.10)
    c.add_rel("v_g delay [km/s]", eit.vg_from_delay(28 * um, cfg.target_delay) / 1e3, 0.3, 0.10)
    c.add_rel("tau_c prediction [us]",
              eit.correlation_time_prediction(cfg.od_target, cfg.Gamma, 9.4 * MHZ) / 1e-6, 0.12, 0.10)
    v0, _ = params.dipole_potential(cfg.polarizability, 0.32e6, cfg.duty_factor)
    c.add_rel("V0/kB [uK]", v0 / kb_uk, 5.1, 0.05)
    _, v0_avg = params.dipole_potential(cfg.polarizability, 0.32e6, 0.018)
    c.add_rel("<V0>/kB [uK]", v0_avg / kb_uk, 0.09, 0.05)

    # full chain from raw inputs, reported only
    d = params.derive(cfg, k)
    chain = {
        "chain Omega_c,t/2pi [MHz]": (d.rabi_target / MHZ, 9.4),
        "chain l_a [um]": (d.absorption_length / um, 5),
        "chain v_g [km/s]": (d.group_velocity / 1e3, 0.5),
        "chain Delta_T,t/2pi [MHz]": (d.transparency_width_target / MHZ, 4.0),
        "chain tau_c [us]": (d.correlation_time / 1e-6, 0.12),
        "chain OD_EIT gate": (d.od_eit_gate, 0.8),
        "chain OD_EIT target": (d.od_eit_target, 0.7),
    }
    for name, (v, t) in chain.items():
        c.checks.append(Check(name, v, t, "reported", abs(v - t) <= 0.1 * t, asserted=False))
    return c


# ---------------------------------------------------------------------------
# 2. closed form vs ODE
# ---------------------------------------------------------------------------

CRIT2_GRID = dict(od=(1.0, 3.2, 10.0), od_eit=(0.3, 0.91, 1.2), mu0=(0.1, 0.5, 1.0, 2.0, 4.0), z=(0.25, 0.5, 1.0))


@_timed
def criterion_2() -> Criterion:
    c = Criterion(2, "closed form vs ODE")
    worst, where = 0.0, None
    for od in CRIT2_GRID["od"]:
        for oe in CRIT2_GRID["od_eit"]:
            m = prop.MediumParams(od, oe)
            for mu0 in CRIT2_GRID["mu0"]:
                init = prop.BinDistribution.poisson(mu0, max(40, prop.default_nmax(mu0)))
                for z in CRIT2_GRID["z"]:
                    ode = prop.evolve_bin(init, m, z).mean
                    ana = prop.bin_mean_analytic(mu0, m, z, form="series")
                    rel = abs(ana - ode) / abs(ode)
                    if rel > worst:
                        worst, where = rel, (od, oe, mu0, z)
    c.checks.append(Check(f"max relative deviation over 135 points (at {where})", worst, 0.0, "<= 1e-4",
                          worst <= 1e-4))
    return c


# ---------------------------------------------------------------------------
# 3. Monte Carlo vs analytic
# ---------------------------------------------------------------------------

CRIT3_TRANSIT = ((10.0, 1.2, 1.0), (3.2, 0.91, 0.5), (1.0, 0.3, 2.0), (3.2, 0.3, 4.0), (10.0, 0.91, 0.1))


def preset_scenario(preset_name: str = "paper-2014") -> mc.Scenario:
    sec = load_preset(preset_name).section("montecarlo")
    return mc.Scenario(**sec)


@_timed
def criterion_3(seed: int = 2014, n_trials: int = 10 ** 6, n_cycles: int = 10 ** 5) -> Criterion:
    c = Criterion(3, "Monte Carlo vs analytic")
    for i, (od, oe, mu0) in enumerate(CRIT3_TRANSIT):
        m = prop.MediumParams(od, oe)
        est = mc.estimate_mean(mc.simulate_bin_trials(mu0, m, n_trials, seed, stream=i))
        z = est.z_score(prop.bin_mean_analytic(mu0, m, 1.0, form="series"))
        c.add_bool(f"transit OD={od} OD_EIT={oe} mu0={mu0}: z-score", z, abs(z) <= 3, "|z| <= 3")
    s = preset_scenario()
    ex = mc.analytic_cycle_expectation(s)
    batch = mc.simulate_cycles(n_cycles, s, seed)
    eps = mc.estimate_extinction(batch)
    ph = mc.herald_rate(batch)
    c.add_bool(f"cycles eps {eps.value:.4f}+-{eps.se:.4f} vs {ex.eps:.4f}: z-score", eps.z_score(ex.eps),
               abs(eps.z_score(ex.eps)) <= 3, "|z| <= 3")
    c.add_bool(f"cycles p_h {ph.value:.2e}+-{ph.se:.1e} vs {ex.p_herald:.2e}: z-score", ph.z_score(ex.p_herald),
               abs(ph.z_score(ex.p_herald)) <= 3, "|z| <= 3")
    return c


# ---------------------------------------------------------------------------
# 4. fit round trips
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RoundTrip:
    label: str
    model: str
    x: tuple
    truth: dict
    fixed: dict
    initial: dict
    noise_rel: float = 0.0
    noise_abs: float = 0.0

    def sigma(self, y):
        return self.noise_rel * np.abs(y) + self.noise_abs

    def run(self, seed: int) -> fitting.FitResult:
        x = np.asarray(self.x, dtype=float)
        m = fitting.get_model(self.model)
        y0 = m(x, **{**self.truth, **self.fixed})
        sig = self.sigma(y0)
        y = y0 + np.random.default_rng(seed).normal(size=x.size) * sig
        problem = fitting.FitProblem(self.model, tuple(self.truth), self.fixed, self.initial)
        return fitting.fit(problem, fitting.DataSeries(x, y, sig))


def _lin(a, b, n):
    return tuple(np.linspace(a, b, n).tolist())


N_REF = float(prop.transmitted_mean(1.7, 1.6, 0.30))

ROUND_TRIPS = (
    RoundTrip("transmitted_mean (T0, b)", "transmitted_mean", _lin(0.1, 7, 12), {"t0": 0.30, "b": 1.6}, {},
              {"t0": 0.5, "b": 1.0}, noise_rel=0.05),
    RoundTrip("full storage (b, eta_sb)", "extinction_vs_ng_full", _lin(0.1, 5, 16), {"b": 2.0, "eta_sb": 0.29},
              {"od": 3.2, "od_eit": 0.91}, {"b": 1.0, "eta_sb": 0.5}, noise_abs=0.005),
    RoundTrip("rapid storage (b, eta_sb)", "extinction_vs_ng_rapid", _lin(0.1, 5, 16), {"b": 3.2, "eta_sb": 0.31},
              {"od_eit": 0.91}, {"b": 1.0, "eta_sb": 0.5}, noise_abs=0.005),
    RoundTrip("postselection (eps_ideal, N_post0)", "postselected_extinction_vs_ng", _lin(0.05, 4, 12),
              {"eps_ideal": 0.022, "n_post0": 0.7}, {"n_ref": N_REF}, {"eps_ideal": 0.05, "n_post0": 1.0},
              noise_rel=0.10, noise_abs=0.002),
    RoundTrip("switch postselected (OD_b0)", "extinction_post_vs_nt", _lin(0.5, 12, 12), {"od_b0": 5.4},
              {"b": 1.6, "t0": 0.30, "n1": 23.0}, {"od_b0": 3.0}, noise_rel=0.10),
    RoundTrip("switch total (p_s)", "extinction_total_vs_nt", _lin(0.5, 12, 12), {"p_s": 0.23},
              {"b": 1.6, "t0": 0.30, "n1": 23.0, "od_b0": 5.4, "ps_n0": 0.014}, {"p_s": 0.5}, noise_abs=0.01),
    RoundTrip("herald (b, eta_wr)", "herald_probability", _lin(0.1, 4, 12), {"b": 2.0, "eta_wr": 0.016},
              {"eta_det": 0.27, "od_eit": 0.91, "p_h0": 1.4e-4}, {"b": 1.0, "eta_wr": 0.05}, noise_rel=0.05),
    RoundTrip("density depletion (N1)", "density_depletion", _lin(0, 10, 11), {"rho0": 1.0, "n1": 23.0}, {},
              {"rho0": 0.5, "n1": 10.0}, noise_abs=0.02),
    RoundTrip("blockade decay low density (tau_pop)", "blockade_decay", _lin(0, 150, 16),
              {"eps0": 0.81, "tau_pop": 60.0}, {}, {"eps0": 0.5, "tau_pop": 10.0}, noise_abs=0.02),
    RoundTrip("blockade decay high density (tau_pop)", "blockade_decay", _lin(0, 150, 16),
              {"eps0": 0.81, "tau_pop": 24.0}, {}, {"eps0": 0.5, "tau_pop": 10.0}, noise_abs=0.02),
    RoundTrip("dephasing rate (gamma0)", "dephasing_rate", _lin(0.3, 3, 10), {"gamma0": 0.8, "k_rho": 0.15}, {},
              {"gamma0": 0.0, "k_rho": 0.0}, noise_abs=0.03),
)


def round_trip_successes(rt: RoundTrip, n_seeds: int = 20, base_seed: int = 1000) -> int:
    ok = 0
    for s in range(n_seeds):
        r = rt.run(base_seed + s)
        ok += bool(r.converged and r.within(rt.truth, 3.0))
    return ok


@_timed
def criterion_4(n_seeds: int = 20) -> Criterion:
    c = Criterion(4, "published-fit round trips")
    need = math.ceil(0.9 * n_seeds)
    for rt in ROUND_TRIPS:
        ok = round_trip_successes(rt, n_seeds)
        c.add_bool(f"{rt.label}: {ok}/{n_seeds} within 3 SE", ok, ok >= need, f">= {need}/{n_seeds}")
    return c


# ---------------------------------------------------------------------------
# 5. derived identities
# ---------------------------------------------------------------------------

@_timed
def criterion_5() -> Criterion:
    c = Criterion(5, "derived identities")
    beta = ss.initial_slope_beta(ss.StorageParams(0.29, 2.0, 3.2, 0.91))
    c.add_abs("beta", beta, 0.19, 0.005)
    nb = ss.stored_mean_before_switchoff(1.0, ss.StorageParams(0.0, 3.2, 3.2, 0.91), "rapid")
    c.add_abs("N_b (rapid, b=3.2, N_g=1)", nb, 0.56, 0.01)
    eta_sb = 0.23 / 0.56
    c.add_bool(f"eta_sb = 0.23/0.56 = {eta_sb:.4f} -> 2 s.f.", eta_sb, f"{eta_sb:.2g}" == "0.41", "== 0.41")
    od_b0 = ss.od_b0_estimate(14e-6, 5e-6)
    c.add_abs("OD_b0 estimate 2 r_b / l_a", od_b0, 5.6, 1e-12)
    return c


# ---------------------------------------------------------------------------
# 6. property suites
# ---------------------------------------------------------------------------

def jacobian_check(model_name: str, n_points: int = 20, seed: int = 0) -> float:
    """Worst column-relative difference between the engine's central-difference
    Jacobian and a Richardson-extrapolated reference at random parameter points."""
    m = fitting.get_model(model_name)
    rng = np.random.default_rng(seed)
    x = _jacobian_grid(model_name)
    worst = 0.0
    for _ in range(n_points):
        p = {}
        for k in m.params:
            v = m.defaults[k]
            lo, hi = m.bounds.get(k, (-np.inf, np.inf))
            val = v * rng.uniform(0.7, 1.3) if v != 0 else rng.uniform(-0.5, 0.5)
            p[k] = float(np.clip(val, lo if np.isfinite(lo) else val, hi if np.isfinite(hi) else val))
            if k in ("t0", "eta_sb", "p_s") and p[k] >= 1:
                p[k] = 0.99
        j = fitting.model_jacobian(m, x, p)
        ref = _richardson_jacobian(m, x, p)
        scale = np.maximum(np.linalg.norm(ref, axis=0), 1e-300)
        worst = max(worst, float(np.max(np.abs(j - ref).max(axis=0) / scale)))
    return worst


def _richardson_jacobian(m, x, p):
    cols = []
    for k in m.params:
        h = 1e-3 * max(abs(p[k]), 1e-3)

        def d(hh):
            up, dn = dict(p), dict(p)
            up[k] += hh
            dn[k] -= hh
            return (m(x, **up) - m(x, **dn)) / (2 * hh)

        cols.append((4 * d(h / 2) - d(h)) / 3)
    return np.column_stack(cols)


def _jacobian_grid(name):
    if name == "eit_transmission":
        return np.linspace(-20, 20, 21)
    if name in ("blockade_decay",):
        return np.linspace(0, 150, 11)
    if name == "g2_gaussian_dip":
        return np.linspace(-1, 1, 11)
    if name == "bin_mean":
        return np.linspace(0.1, 1, 5)
    return np.linspace(0.2, 4, 11)


@_timed
def criterion_6(seed: int = 6) -> Criterion:
    c = Criterion(6, "property suites")
    # probability conservation and monotone mean
    worst_cons, monotone = 0.0, True
    for od, oe, mu0 in ((1.0, 0.3, 0.5), (3.2, 0.91, 2.0), (10.0, 1.2, 4.0)):
        m = prop.MediumParams(od, oe)
        init = prop.BinDistribution.poisson(mu0, 40)
        means = []
        for z in np.linspace(0.05, 1, 12):
            d = prop.evolve_bin(init, m, z)
            worst_cons = max(worst_cons, abs(d.total - init.total))
            means.append(d.mean)
        monotone &= bool(np.all(np.diff(means) < 0))
    c.add_bool("probability conservation |sum p(z) - sum p(0)|", worst_cons, worst_cons <= 1e-9, "<= 1e-9")
    c.add_bool("bin mean strictly decreasing in z", monotone, monotone)
    ng = np.linspace(0, 6, 61)
    mono_eps = all(np.all(np.diff(ss.extinction_vs_ng(ng, p, mode)) < 0)
                   for p, mode in ((ss.StorageParams(0.29, 2.0, 3.2, 0.91), "full"),
                                   (ss.StorageParams(0.31, 3.2, 3.2, 0.91), "rapid")))
    c.add_bool("eps strictly decreasing in N_g (both modes)", mono_eps, mono_eps)

    # limit identities
    lim = []
    p = ss.StorageParams(0.29, 2.0, 3.2, 0.91)
    lim.append(("eps(N_g=0) = 1", ss.extinction_vs_ng(0.0, p), 1.0))
    lim.append(("beta(OD_EIT->0) = eta_sb", ss.initial_slope_beta(ss.StorageParams(0.29, 2, 3.2, 0.0)), 0.29))
    sw = ss.SwitchParams(5.4, 23, 0.23, 0.06, 0.30, 1.6)
    lim.append(("OD_b(0) = OD_b0", ss.blockaded_od(0.0, sw), 5.4))
    sw1 = ss.SwitchParams(5.4, 23, 1.0, 0.0, 0.30, 1.6)
    lim.append(("eps_total -> eps_post at p_s=1, N0=0", ss.extinction_total_vs_nt(3.0, sw1),
                ss.extinction_post_vs_nt(3.0, sw1)))
    sw0 = ss.SwitchParams(5.4, 23, 0.0, 0.06, 0.30, 1.6)
    lim.append(("eps_total(p_s=0) = 1", ss.extinction_total_vs_nt(3.0, sw0), 1.0))
    m = prop.MediumParams(3.2, 0.91)
    lim.append(("N_bin(z=0) = mu0", prop.bin_mean_analytic(1.3, m, 0.0, form="series"), 1.3))
    lim.append(("tau_c(2 Omega) = tau_c / 4", eit.correlation_time_prediction(10, 1.0, 2.0),
                eit.correlation_time_prediction(10, 1.0, 1.0) / 4))
    lim.append(("r_b(8 Omega) = r_b / 2", params.blockade_radius(-1e-56, 3e7, 8e7),
                params.blockade_radius(-1e-56, 3e7, 1e7) / 2))
    worst = max(abs(v - t) / abs(t) for _, v, t in lim)
    c.add_bool(f"{len(lim)} limit identities, worst relative deviation", worst, worst <= 1e-12, "<= 1e-12")

    # Jacobians
    worst_j = max(jacobian_check(name, 20, seed) for name in fitting.available_models())
    c.add_bool(f"Jacobian vs finite differences over {len(fitting.available_models())} models", worst_j,
               worst_j <= 1e-5, "<= 1e-5 rel")

    # g2
    g = mc.estimate_g2(mc.poissonian_clicks(20000, 3.0, 1.0, seed), 0.1, tau_max=0.5)
    zmax = float(np.max(np.abs(g.g2 - 1) / g.se))
    c.add_bool("Poissonian g2 = 1: max |z| over bins", zmax, zmax <= 3.5, "<= 3.5 (11 bins)")
    stored = np.ones(40000, dtype=np.int64)
    r = mc.retrieval_clicks(stored, 0.3, 0.3, 2.0, seed, background_mean=0.003)
    g = mc.estimate_g2(r, 0.2, tau_max=1.0)
    g0 = float(g.g2[np.argmin(np.abs(g.tau))])
    c.add_bool("retrieval g2(0)", g0, g0 < 0.5, "< 0.5")
    return c


# ---------------------------------------------------------------------------
# 7. experimental outcomes (report only)
# ---------------------------------------------------------------------------

@_timed
def criterion_7(seed: int = 7, n_cycles: int = 10 ** 6) -> Criterion:
    c = Criterion(7, "measured eps (reported, not asserted)", report_only=True)
    meas = load_preset().section("measured")
    s = preset_scenario()
    ex = mc.analytic_cycle_expectation(s)
    batch = mc.simulate_cycles(n_cycles, s, seed)
    e = mc.estimate_extinction(batch)
    ep = mc.estimate_extinction(batch, postselect=True)
    total = float(ss.extinction_vs_ng(1.0, ss.StorageParams(0.29, 2.0, 3.2, 0.91)))
    c.checks += [
        Check("eps analytic composition", ex.eps, meas["eps_total"], "measured", asserted=False),
        Check("eps storage model 1 - eta_sb N_b", total, meas["eps_total"], "measured", asserted=False),
        Check(f"eps Monte Carlo (+-{e.se:.3f})", e.value, meas["eps_total"], "measured", asserted=False),
        Check("eps_post analytic composition", ex.eps_post, meas["eps_post"], "measured", asserted=False),
        Check(f"eps_post Monte Carlo (+-{ep.se:.3f})", ep.value, meas["eps_post"], "measured", asserted=False),
    ]
    return c


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7)


def run_all(verbose: bool = True, stream=None) -> list[Criterion]:
    import sys

    out = stream or sys.stdout
    results = []
    for func in CRITERIA:
        crit = func()
        results.append(crit)
        print(f"criterion {crit.number} [{crit.status()}] {crit.title} ({crit.seconds:.1f} s)", file=out)
        if verbose or not crit.passed:
            for chk in crit.checks:
                if verbose or (chk.asserted and not chk.passed):
                    print(chk.line(), file=out)
    return results
