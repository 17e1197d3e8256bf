"""Photon-resolved Monte Carlo of gate-target cycles and g2 estimation.

Randomness is counter based: every cycle owns a fixed block of random
slots derived from ``(seed, cycle index)``, so a run is reproducible for
any chunking or worker count. Merging concatenates chunks by cycle index.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import kernels
from .params import DomainError
from .propagation import MediumParams, default_nmax, p1_series

DEFAULT_CHUNK = 1 << 16


class ScenarioError(ValueError):
    """Invalid Monte Carlo scenario."""


# ---------------------------------------------------------------------------
# single-bin transit
# ---------------------------------------------------------------------------

def simulate_bin_transit(n0, m: MediumParams, seed: int, z: float | None = None, stream: int = 0):
    """Surviving photons of bins that start with ``n0`` photons (scalar or array).

    Bin ``i`` uses random slots ``i * (max(n0) + 2) ...`` of the stream.
    """
    n = np.atleast_1d(np.asarray(n0, dtype=np.int64))
    if np.any(n < 0):
        raise DomainError("photon numbers must be >= 0")
    z = m.length if z is None else z
    width = np.uint64(int(n.max(initial=0)) + 2)
    base = np.arange(n.size, dtype=np.uint64) * width + np.uint64(1)
    out = kernels.transit(n, m.alpha, m.alpha1, z, kernels.stream_key(seed, stream), base)
    return int(out[0]) if np.ndim(n0) == 0 else out


def simulate_bin_trials(mu0: float, m: MediumParams, n_trials: int, seed: int, z: float | None = None,
                        stream: int = 0, chunk: int = 1 << 20):
    """Poisson(mu0) bins pushed through ``z``; returns the surviving counts."""
    if mu0 < 0 or n_trials < 1:
        raise DomainError("need mu0 >= 0 and n_trials >= 1")
    z = m.length if z is None else z
    key = kernels.stream_key(seed, stream)
    nmax = default_nmax(mu0)
    parts = [kernels.bin_trials(s, min(chunk, n_trials - s), mu0, m.alpha, m.alpha1, z, key, nmax)
             for s in range(0, n_trials, chunk)]
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# scenario and cycle records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """One gate-target configuration. Optical depths refer to the pulse length.

    Bin numbers are rounded up to integers for sampling; the per-bin mean is
    ``N / ceil(b)``.
    """

    n_g: float = 1.0
    gate_bins: float = 2.0
    eta_sb: float = 0.29
    od_gate: float = 3.2
    od_eit_gate: float = 0.91
    storage_mode: str = "full"
    n_t: float = 1.7
    target_bins: float = 1.6
    t0: float = 0.30
    od_target: float = 10.0
    target_mode: str = "rapid"
    od_b0: float = 5.4
    n1: float = 23.0
    n0: float = 0.014 / 0.23
    eta_wr: float = 0.016
    eta_det: float = 0.27
    p_h0: float = 1.4e-4
    alternate: bool = True

    def __post_init__(self):
        bad = []
        for name in ("n_g", "n_t", "od_gate", "od_eit_gate", "od_target", "od_b0", "n0"):
            if not getattr(self, name) >= 0:
                bad.append(f"{name} must be >= 0")
        for name in ("gate_bins", "target_bins", "n1"):
            if not getattr(self, name) > 0:
                bad.append(f"{name} must be > 0")
        for name in ("eta_sb", "eta_wr", "eta_det", "p_h0"):
            if not 0 <= getattr(self, name) <= 1:
                bad.append(f"{name} must lie in [0, 1]")
        if not 0 < self.t0 <= 1:
            bad.append("t0 must lie in (0, 1]")
        if self.storage_mode not in ("full", "rapid") or self.target_mode not in ("full", "rapid"):
            bad.append("modes must be 'full' or 'rapid'")
        if self.eta_sb > 0 and self.eta_wr * self.eta_det > self.eta_sb:
            bad.append("eta_wr * eta_det must not exceed eta_sb")
        if self.eta_sb == 0 and self.eta_wr * self.eta_det > 0:
            bad.append("eta_sb = 0 leaves nothing to herald; set eta_wr = 0")
        if bad:
            raise ScenarioError("; ".join(bad))

    @property
    def gate_bin_count(self) -> int:
        return max(1, math.ceil(self.gate_bins - 1e-12))

    @property
    def target_bin_count(self) -> int:
        return max(1, math.ceil(self.target_bins - 1e-12))

    @property
    def od_eit_target(self) -> float:
        return -math.log(self.t0)

    @property
    def p_block(self) -> float:
        """Per-photon transmission of the target next to a stored excitation."""
        return math.exp(-self.od_b0 * (1 - self.n_t / self.n1))

    @property
    def h_ret(self) -> float:
        """Herald probability per stored excitation."""
        return 0.0 if self.eta_sb == 0 else self.eta_wr * self.eta_det / self.eta_sb

    def with_(self, **kw) -> "Scenario":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CycleRecord:
    gate_in: int
    stored: int
    target_in: int
    target_transmitted: int
    target_detected: int
    herald_detected: bool
    background_herald: bool
    rng_stream_id: int
    reference: bool = False
    excitations: int = 0


@dataclass
class CycleBatch:
    """Column arrays of simulated cycles (row i is cycle ``start + i``)."""

    data: np.ndarray
    start: int = 0
    seed: int = 0
    scenario: Scenario | None = None

    def __len__(self):
        return self.data.shape[0]

    def column(self, col: int) -> np.ndarray:
        return self.data[:, col]

    @property
    def reference(self) -> np.ndarray:
        return self.data[:, kernels.REFERENCE].astype(bool)

    @property
    def heralded(self) -> np.ndarray:
        return (self.data[:, kernels.HERALD_EXC] | self.data[:, kernels.HERALD_BG]).astype(bool)

    def to_records(self) -> list[CycleRecord]:
        d = self.data
        k = kernels
        return [CycleRecord(int(r[k.GATE_IN]), int(r[k.STORED]), int(r[k.TARGET_IN]), int(r[k.TRANSMITTED]),
                            int(r[k.DETECTED]), bool(r[k.HERALD_EXC] or r[k.HERALD_BG]), bool(r[k.HERALD_BG]),
                            self.start + i, bool(r[k.REFERENCE]), int(r[k.EXCITATIONS]))
                for i, r in enumerate(d)]

    def totals(self) -> dict:
        """Order-independent sums (the quantities a parallel merge needs)."""
        k = kernels
        sig = ~self.reference
        d = self.data
        return {
            "cycles": int(d.shape[0]),
            "signal_cycles": int(sig.sum()),
            "reference_cycles": int((~sig).sum()),
            "gate_in": int(d[sig, k.GATE_IN].sum()),
            "stored_cycles": int((d[sig, k.STORED] >= 1).sum()),
            "heralds": int(self.heralded[sig].sum()),
            "detected_signal": int(d[sig, k.DETECTED].sum()),
            "detected_reference": int(d[~sig, k.DETECTED].sum()),
            "detected_heralded": int(d[sig & self.heralded, k.DETECTED].sum()),
        }


def _kernel_inputs(s: Scenario):
    gb, tb = s.gate_bin_count, s.target_bin_count
    mu_g, mu_t = s.n_g / gb, s.n_t / tb
    nmax = max(default_nmax(mu_g), default_nmax(mu_t))
    fp = np.zeros(10)
    fp[kernels.FP_G_ALPHA] = s.od_gate
    fp[kernels.FP_G_ALPHA1] = s.od_eit_gate
    fp[kernels.FP_T_ALPHA] = s.od_target
    fp[kernels.FP_T_ALPHA1] = s.od_eit_target
    fp[kernels.FP_ETA_SB] = s.eta_sb
    fp[kernels.FP_H_RET] = s.h_ret
    fp[kernels.FP_P_H0] = s.p_h0
    fp[kernels.FP_P_BLOCK] = s.p_block
    fp[kernels.FP_ETA_DET] = s.eta_det
    fp[kernels.FP_LP] = 1.0
    ip = np.array([gb, tb, s.storage_mode == "full", s.target_mode == "full", bool(s.alternate), nmax],
                  dtype=np.int64)
    n0_max = default_nmax(s.n0)
    return fp, ip, kernels.poisson_cdf(mu_g, nmax), kernels.poisson_cdf(mu_t, nmax), kernels.poisson_cdf(s.n0, n0_max)


def _run_chunk(args):
    start, count, seed, scenario = args
    fp, ip, gcdf, tcdf, ncdf = _kernel_inputs(scenario)
    return start, kernels.cycles(start, count, kernels.stream_key(seed), fp, ip, gcdf, tcdf, ncdf)


def simulate_cycles(n_cycles: int, scenario: Scenario, rng_seed: int, workers: int = 1,
                    chunk: int = DEFAULT_CHUNK) -> CycleBatch:
    """Simulate ``n_cycles`` gate-target cycles.

    With ``scenario.alternate`` even cycles are references (no gate photons).
    """
    if n_cycles < 1:
        raise DomainError("n_cycles must be >= 1")
    tasks = [(s, min(chunk, n_cycles - s), rng_seed, scenario) for s in range(0, n_cycles, chunk)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_chunk, tasks))
    else:
        parts = [_run_chunk(t) for t in tasks]
    parts.sort(key=lambda p: p[0])
    return CycleBatch(np.concatenate([p[1] for p in parts]), 0, rng_seed, scenario)


# ---------------------------------------------------------------------------
# analytic composition of the sampled model
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)


def _gate_bin_pgf(s: Scenario, x: float) -> float:
    """Generating function E[x^K] of excitations left by one gate bin."""
    mu0 = s.n_g / s.gate_bin_count
    od_eit = s.od_eit_gate
    if s.storage_mode == "rapid" or mu0 == 0:
        avg = 1.0 if od_eit == 0 else -math.expm1(-od_eit) / od_eit
        return 1 - (1 - x) * -math.expm1(-mu0) * avg
    m = MediumParams(s.od_gate, od_eit, 1.0)
    zs = 0.5 * (_GL_X + 1)
    total = 0.0
    for z, w in zip(zs, _GL_W):
        mu = mu0 * math.exp(-s.od_gate * z)
        p1 = p1_series(mu0, m, z)
        p0 = (1 + mu) * math.exp(-mu) - p1
        tail = math.exp(-mu) * (math.expm1(x * mu) - x * mu)
        total += 0.5 * w * (p0 + x * p1 + tail)
    return total


def _target_free_mean(s: Scenario) -> float:
    tb = s.target_bin_count
    mu = s.n_t / tb
    if s.target_mode == "rapid":
        return tb * s.t0 * -math.expm1(-mu)
    from .propagation import bin_mean_analytic

    return tb * bin_mean_analytic(mu, MediumParams(s.od_target, s.od_eit_target), 1.0, form="series")


@dataclass(frozen=True)
class CycleExpectation:
    p_none_stored: float
    p_stored: float
    p_herald: float
    target_free: float
    target_blocked: float
    eps: float
    eps_post: float


def analytic_cycle_expectation(s: Scenario) -> CycleExpectation:
    """Exact expectations of the sampled cycle model (integer bins)."""
    gb = s.gate_bin_count

    def g_total(x):
        return _gate_bin_pgf(s, x) ** gb

    r = s.eta_sb * s.h_ret
    p_none = g_total(1 - s.eta_sb)
    p_no_exc_herald = g_total(1 - r)
    p_h = 1 - (1 - s.p_h0) * p_no_exc_herald
    b_free = _target_free_mean(s)
    a_blk = s.n_t * s.p_block + s.n0
    mean_t = p_none * b_free + (1 - p_none) * a_blk
    eps = mean_t / b_free
    not_heralded = (1 - s.p_h0) * (b_free * p_none + a_blk * (p_no_exc_herald - p_none))
    eps_post = (mean_t - not_heralded) / p_h / b_free if p_h > 0 else float("nan")
    return CycleExpectation(p_none, 1 - p_none, p_h, b_free, a_blk, eps, eps_post)


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    shot_noise_se: float = float("nan")
    n: int = 0

    def z_score(self, expected: float) -> float:
        return (self.value - expected) / self.se if self.se > 0 else float("inf")


def _ratio_of_means(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Pooled ratio mean(x)/mean(y) with a delta-method standard error."""
    if x.size < 2 or y.size < 2:
        return float("nan"), float("nan")
    mx, my = x.mean(), y.mean()
    if my <= 0:
        return float("nan"), float("nan")
    r = mx / my
    var = x.var(ddof=1) / x.size / my ** 2 + r ** 2 * y.var(ddof=1) / y.size / my ** 2
    return float(r), float(math.sqrt(var))


def estimate_extinction(batch: CycleBatch, postselect: bool = False) -> Estimate:
    """Pooled extinction from detected target clicks, signal vs reference cycles."""
    ref = batch.reference
    if not ref.any() or ref.all():
        raise DomainError("extinction needs both reference and signal cycles")
    det = batch.column(kernels.DETECTED).astype(float)
    sig = ~ref
    if postselect:
        sig = sig & batch.heralded
        if not sig.any():
            raise DomainError("no heralded cycles")
    value, se = _ratio_of_means(det[sig], det[ref])
    n_sig, n_ref = det[sig].sum(), det[ref].sum()
    shot = value * math.sqrt(1 / max(n_sig, 1) + 1 / max(n_ref, 1))
    return Estimate(value, se, shot, int(sig.sum()))


def estimate_extinction_per_sample(batch: CycleBatch, sample_cycles: int, postselect: bool = False) -> Estimate:
    """Alternating-reference estimator: per sample, sum the clicks of the signal
    cycles and of the reference cycles, divide the first sum by the second
    (after normalising to cycle counts), then average over samples."""
    n = len(batch) // sample_cycles
    if n < 2:
        raise DomainError("need at least two samples")
    det = batch.column(kernels.DETECTED)[: n * sample_cycles].reshape(n, sample_cycles).astype(float)
    ref = batch.reference[: n * sample_cycles].reshape(n, sample_cycles)
    sig = ~ref
    if postselect:
        sig = sig & batch.heralded[: n * sample_cycles].reshape(n, sample_cycles)
    n_sig, n_ref = sig.sum(axis=1), ref.sum(axis=1)
    c_sig, c_ref = (det * sig).sum(axis=1), (det * ref).sum(axis=1)
    ok = (n_sig > 0) & (c_ref > 0)
    ratios = (c_sig[ok] / n_sig[ok]) / (c_ref[ok] / n_ref[ok])
    shot = float(np.mean(ratios * np.sqrt(1 / np.maximum(c_sig[ok], 1) + 1 / c_ref[ok])) / math.sqrt(ok.sum()))
    return Estimate(float(ratios.mean()), float(ratios.std(ddof=1) / math.sqrt(ratios.size)), shot,
                    int(ok.sum()))


def estimate_fraction(flags: np.ndarray) -> Estimate:
    f = np.asarray(flags, dtype=float)
    p = f.mean()
    return Estimate(float(p), float(math.sqrt(max(p * (1 - p), 1e-300) / f.size)), n=f.size)


def estimate_mean(x: np.ndarray) -> Estimate:
    x = np.asarray(x, dtype=float)
    return Estimate(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), n=x.size)


def herald_rate(batch: CycleBatch) -> Estimate:
    return estimate_fraction(batch.heralded[~batch.reference])


# ---------------------------------------------------------------------------
# clicks and g2
# ---------------------------------------------------------------------------

@dataclass
class ClickRecord:
    timestamps: np.ndarray
    detector_id: int
    cycle: int = 0
    window: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        self.timestamps = np.sort(np.asarray(self.timestamps, dtype=float))
        if self.detector_id not in (0, 1):
            raise DomainError("detector_id must be 0 or 1")
        lo, hi = self.window
        if self.timestamps.size and (self.timestamps[0] < lo or self.timestamps[-1] > hi):
            raise DomainError("timestamps outside the pulse window")


def _split_to_detectors(times_per_cycle, eta: float, rng: np.random.Generator, window):
    records = []
    for c, t in enumerate(times_per_cycle):
        keep = t[rng.random(t.size) < eta]
        side = rng.random(keep.size) < 0.5
        records.append(ClickRecord(keep[~side], 0, c, window))
        records.append(ClickRecord(keep[side], 1, c, window))
    return records


def poissonian_clicks(n_cycles: int, mean_photons: float, window: float, seed: int,
                      eta: float = 1.0) -> list[ClickRecord]:
    """Coherent light: Poisson photon number, uniform arrival times."""
    rng = np.random.default_rng(seed)
    counts = rng.poisson(mean_photons, n_cycles)
    times = [rng.uniform(0, window, n) for n in counts]
    return _split_to_detectors(times, eta, rng, (0.0, window))


def retrieval_clicks(stored: np.ndarray, eta_retrieve: float, decay_time: float, window: float, seed: int,
                     background_mean: float = 0.0, max_photons: int | None = 1) -> list[ClickRecord]:
    """Retrieved photons of stored excitations with exponential emission times.

    ``max_photons=1`` lets a blockaded medium release at most one photon per
    cycle; ``None`` releases every stored excitation independently.
    """
    rng = np.random.default_rng(seed)
    stored = np.asarray(stored, dtype=np.int64)
    times = []
    for k in stored:
        k = int(k) if max_photons is None else min(int(k), max_photons)
        n = rng.binomial(k, eta_retrieve) if k else 0
        t = rng.exponential(decay_time, n)
        t = t[t < window]
        bg = rng.uniform(0, window, rng.poisson(background_mean)) if background_mean > 0 else np.empty(0)
        times.append(np.concatenate([t, bg]))
    return _split_to_detectors(times, 1.0, rng, (0.0, window))


def blockaded_clicks(n_cycles: int, mean_photons: float, window: float, tau_c: float, seed: int,
                     eta: float = 1.0) -> list[ClickRecord]:
    """Transmitted light of a blockaded medium.

    Photons arrive as a Poisson process; a photon at ``t`` is transmitted with
    probability ``1 - exp(-(t - s)^2 / (2 tau_c^2))`` per earlier transmitted
    photon at ``s`` (Gaussian survival kernel).
    """
    rng = np.random.default_rng(seed)
    counts = rng.poisson(mean_photons, n_cycles)
    times = []
    for n in counts:
        t = np.sort(rng.uniform(0, window, n))
        kept = []
        for ti in t:
            p = 1.0
            for s in kept:
                p *= 1 - math.exp(-((ti - s) ** 2) / (2 * tau_c ** 2))
            if rng.random() < p:
                kept.append(ti)
        times.append(np.array(kept))
    return _split_to_detectors(times, eta, rng, (0.0, window))


@dataclass
class G2Table:
    tau: np.ndarray
    g2: np.ndarray
    se: np.ndarray
    coincidences: np.ndarray
    flagged: np.ndarray = field(default=None)

    def rows(self):
        return list(zip(self.tau, self.g2, self.se, self.coincidences, self.flagged))


def estimate_g2(records: list[ClickRecord], bin_width: float, tau_max: float | None = None,
                n_shifts: int = 20, min_coincidences: int = 10) -> G2Table:
    """Cross-detector g2(tau) normalised by coincidences between different cycles.

    Same-cycle coincidences between detector 0 and 1 are histogrammed in
    ``tau = t1 - t0``; the accidental level is the mean histogram of pairs in
    cycles ``c`` and ``c + k`` for ``k = 1..n_shifts``. Bins with fewer than
    ``min_coincidences`` same-cycle counts are flagged.
    """
    if bin_width <= 0:
        raise DomainError("bin_width must be > 0")
    det0 = [r for r in records if r.detector_id == 0]
    det1 = [r for r in records if r.detector_id == 1]
    if not det0 or not det1:
        raise DomainError("g2 needs clicks from two detectors")
    n_cycles = max(r.cycle for r in records) + 1
    if tau_max is None:
        tau_max = max(r.window[1] - r.window[0] for r in records)
    t0 = np.concatenate([r.timestamps for r in det0])
    cyc0 = np.concatenate([np.full(r.timestamps.size, r.cycle, dtype=np.int64) for r in det0])
    per_cycle = [np.empty(0)] * n_cycles
    for r in det1:
        per_cycle[r.cycle] = r.timestamps
    ptr1 = np.zeros(n_cycles + 1, dtype=np.int64)
    ptr1[1:] = np.cumsum([a.size for a in per_cycle])
    t1 = np.concatenate(per_cycle) if ptr1[-1] else np.empty(0)
    nbins = int(round(2 * tau_max / bin_width))
    if nbins % 2 == 0:
        nbins += 1  # keep a bin centred on zero
    edge0 = -nbins * bin_width / 2
    same = kernels.pair_histogram(t0, cyc0, t1, ptr1, 0, n_cycles, edge0, bin_width, nbins)
    shifts = min(n_shifts, n_cycles - 1)
    if shifts < 1:
        raise DomainError("need at least two cycles")
    acc = np.zeros(nbins, dtype=np.int64)
    for k in range(1, shifts + 1):
        acc += kernels.pair_histogram(t0, cyc0, t1, ptr1, k, n_cycles, edge0, bin_width, nbins)
    acc_mean = acc / shifts
    with np.errstate(divide="ignore", invalid="ignore"):
        g2 = np.where(acc_mean > 0, same / acc_mean, np.nan)
        rel = np.sqrt(1 / np.maximum(same, 1) + 1 / np.maximum(acc, 1))
        se = np.where(same > 0, g2 * rel, np.where(acc_mean > 0, 1 / acc_mean, np.nan))
    tau = edge0 + (np.arange(nbins) + 0.5) * bin_width
    return G2Table(tau, g2, se, same, same < min_coincidences)
