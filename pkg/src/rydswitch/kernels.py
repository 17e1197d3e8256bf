"""Hot loops of the package.

Every kernel exists in two flavours: a scalar-loop version compiled with
numba and a vectorised numpy version. ``RYDSWITCH_DISABLE_NUMBA=1`` (or a
missing numba install) selects the numpy path. Both flavours draw their
randomness from the same counter-based stream, addressed by explicit slot
numbers, so they return identical integer results for identical inputs.

Random slots
------------
A uniform variate is a pure function of ``(key, counter)``::

    u = (mix64(key + (counter + 1) * GOLDEN) >> 11 + 0.5) * 2**-53

with ``mix64`` the SplitMix64 finaliser. ``u`` lies strictly inside (0, 1).
"""
from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

ENV_FLAG = "RYDSWITCH_DISABLE_NUMBA"


def numba_requested() -> bool:
    flag = os.environ.get(ENV_FLAG, "").strip().lower()
    return flag not in ("1", "true", "yes", "on")


USE_NUMBA = HAVE_NUMBA and numba_requested()


def _jit(func):
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=True, error_model="numpy")(func)


_MASK = (1 << 64) - 1
_GOLDEN_INT = 0x9E3779B97F4A7C15

_GOLDEN = np.uint64(_GOLDEN_INT)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S11 = np.uint64(11)
_S27 = np.uint64(27)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_ONE = np.uint64(1)
_INV53 = 2.0 ** -53

# column layout of the per-cycle integer output
GATE_IN, EXCITATIONS, STORED, TARGET_IN, TRANSMITTED, DETECTED, HERALD_EXC, HERALD_BG, REFERENCE = range(9)
N_COLUMNS = 9

# float parameter vector of the cycle kernel
(FP_G_ALPHA, FP_G_ALPHA1, FP_T_ALPHA, FP_T_ALPHA1, FP_ETA_SB, FP_H_RET,
 FP_P_H0, FP_P_BLOCK, FP_ETA_DET, FP_LP) = range(10)
# integer parameter vector of the cycle kernel
IP_GATE_BINS, IP_TARGET_BINS, IP_STORAGE_FULL, IP_TARGET_FULL, IP_ALTERNATE, IP_NMAX = range(6)


# ---------------------------------------------------------------------------
# counter-based uniforms
# ---------------------------------------------------------------------------

def mix64_int(z: int) -> int:
    """SplitMix64 finaliser on Python ints (used for seeding)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def stream_key(seed: int, stream: int = 0) -> np.uint64:
    """Key of the random stream ``stream`` under ``seed``."""
    return np.uint64(mix64_int(mix64_int(int(seed)) ^ mix64_int(int(stream) + _GOLDEN_INT)))


def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def uniforms(key, counters) -> np.ndarray:
    """Vectorised uniform variates for an array of counters."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix64(np.uint64(key) + (c + _ONE) * _GOLDEN)
    return ((z >> _S11).astype(np.float64) + 0.5) * _INV53


_mix64_s = _jit(_mix64)


def _uniform_py(key, counter):
    z = _mix64_s(key + (counter + _ONE) * _GOLDEN)
    return (np.float64(z >> _S11) + 0.5) * _INV53


_uniform_s = _jit(_uniform_py)


# ---------------------------------------------------------------------------
# discrete samplers (inverse transform, one uniform each)
# ---------------------------------------------------------------------------

def poisson_cdf(mean: float, nmax: int) -> np.ndarray:
    """CDF table of a Poisson law on 0..nmax with the tail lumped into nmax."""
    k = np.arange(nmax + 1)
    if mean <= 0.0:
        pmf = np.zeros(nmax + 1)
        pmf[0] = 1.0
    else:
        logpmf = k * np.log(mean) - mean - np.cumsum(np.log(np.maximum(k, 1)))
        pmf = np.exp(logpmf)
    cdf = np.cumsum(pmf)
    cdf[-1] = 1.0
    return cdf


def poisson_numpy(u, cdf):
    return np.minimum(np.searchsorted(cdf, u, side="right"), cdf.shape[0] - 1).astype(np.int64)


def _poisson_py(u, cdf):
    n = cdf.shape[0] - 1
    k = 0
    while k < n and u >= cdf[k]:
        k += 1
    return k


_poisson_s = _jit(_poisson_py)


def binomial_numpy(u, n, p):
    u = np.asarray(u, dtype=np.float64)
    n = np.broadcast_to(np.asarray(n, dtype=np.int64), u.shape)
    out = np.zeros(u.shape, dtype=np.int64)
    if p <= 0.0:
        return out
    if p >= 1.0:
        return n.copy()
    q = 1.0 - p
    r = p / q
    pmf = q ** n.astype(np.float64)
    cdf = pmf.copy()
    kmax = int(n.max()) if n.size else 0
    for _ in range(kmax):
        act = (u >= cdf) & (out < n)
        if not act.any():
            break
        pmf = np.where(act, pmf * ((n - out) / (out + 1.0) * r), pmf)
        out = np.where(act, out + 1, out)
        cdf = np.where(act, cdf + pmf, cdf)
    return out


def _binomial_py(u, n, p):
    if n <= 0 or p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    q = 1.0 - p
    r = p / q
    pmf = q ** np.float64(n)
    cdf = pmf
    k = 0
    while u >= cdf and k < n:
        pmf = pmf * ((n - k) / (k + 1.0) * r)
        k += 1
        cdf = cdf + pmf
    return k


_binomial_s = _jit(_binomial_py)


# ---------------------------------------------------------------------------
# photon-number death process through one bin
# ---------------------------------------------------------------------------

def transit_numpy(n, alpha, alpha1, length, key, base):
    """Surviving photon count after propagating ``length`` (vectorised).

    While a bin holds k >= 2 photons the next absorption happens after an
    exponential distance with rate ``k * alpha`` (slot ``base + k``). A lone
    photon survives the remaining distance with ``exp(-alpha1 * rest)``
    (slot ``base``).
    """
    n = np.asarray(n, dtype=np.int64)
    length = np.broadcast_to(np.asarray(length, dtype=np.float64), n.shape)
    base = np.broadcast_to(np.asarray(base, dtype=np.uint64), n.shape)
    out = np.where(n > 0, n, 0)
    pos = np.zeros(n.shape)
    done = n <= 0
    kmax = int(n.max()) if n.size else 0
    with np.errstate(divide="ignore"):
        for k in range(kmax, 1, -1):
            idx = np.nonzero((~done) & (n >= k))[0]
            if idx.size == 0:
                continue
            u = uniforms(key, base[idx] + np.uint64(k))
            newpos = pos[idx] + (-np.log(u) / (k * alpha))
            ended = newpos > length[idx]
            out[idx[ended]] = k
            done[idx[ended]] = True
            go = idx[~ended]
            pos[go] = newpos[~ended]
            out[go] = k - 1
    idx = np.nonzero(~done)[0]
    if idx.size:
        u0 = uniforms(key, base[idx])
        out[idx] = np.where(u0 < np.exp(-alpha1 * (length[idx] - pos[idx])), 1, 0)
    return out


def _transit_py(n, alpha, alpha1, length, key, base):
    if n <= 0:
        return 0
    pos = 0.0
    for k in range(n, 1, -1):
        u = _uniform_s(key, base + np.uint64(k))
        pos = pos + (-np.log(u) / (k * alpha))
        if pos > length:
            return k
    u0 = _uniform_s(key, base)
    if u0 < np.exp(-alpha1 * (length - pos)):
        return 1
    return 0


_transit_s = _jit(_transit_py)


def _transit_many_py(n, alpha, alpha1, length, key, base):
    out = np.empty(n.shape[0], dtype=np.int64)
    for i in range(n.shape[0]):
        out[i] = _transit_s(n[i], alpha, alpha1, length[i], key, base[i])
    return out


_transit_many_s = _jit(_transit_many_py)


def transit_numba(n, alpha, alpha1, length, key, base):
    n = np.ascontiguousarray(n, dtype=np.int64)
    length = np.ascontiguousarray(np.broadcast_to(np.asarray(length, dtype=np.float64), n.shape))
    base = np.ascontiguousarray(np.broadcast_to(np.asarray(base, dtype=np.uint64), n.shape))
    return _transit_many_s(n, float(alpha), float(alpha1), length, np.uint64(key), base)


def transit(n, alpha, alpha1, length, key, base):
    if USE_NUMBA:
        return transit_numba(n, alpha, alpha1, length, key, base)
    return transit_numpy(n, alpha, alpha1, length, key, base)


def bin_trials_numpy(start, count, mu0, alpha, alpha1, length, key, nmax):
    """Poisson(mu0) photons per trial pushed through ``length``."""
    width = np.uint64(nmax + 2)
    base = np.arange(start, start + count, dtype=np.uint64) * width
    cdf = poisson_cdf(mu0, nmax)
    n = poisson_numpy(uniforms(key, base), cdf)
    return transit_numpy(n, alpha, alpha1, length, key, base + _ONE)


def _bin_trials_py(start, count, cdf, alpha, alpha1, length, key):
    width = np.uint64(cdf.shape[0] + 1)
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        base = np.uint64(start + i) * width
        n = _poisson_s(_uniform_s(key, base), cdf)
        out[i] = _transit_s(n, alpha, alpha1, length, key, base + _ONE)
    return out


_bin_trials_s = _jit(_bin_trials_py)


def bin_trials_numba(start, count, mu0, alpha, alpha1, length, key, nmax):
    cdf = poisson_cdf(mu0, nmax)
    return _bin_trials_s(int(start), int(count), cdf, float(alpha), float(alpha1), float(length), np.uint64(key))


def bin_trials(start, count, mu0, alpha, alpha1, length, key, nmax):
    if USE_NUMBA:
        return bin_trials_numba(start, count, mu0, alpha, alpha1, length, key, nmax)
    return bin_trials_numpy(start, count, mu0, alpha, alpha1, length, key, nmax)


# ---------------------------------------------------------------------------
# gate-target cycles
# ---------------------------------------------------------------------------

def cycle_width(ip) -> int:
    ns = int(ip[IP_NMAX])
    return int(ip[IP_GATE_BINS]) * (ns + 3) + 3 + int(ip[IP_TARGET_BINS]) * (ns + 2) + 3


def cycles_numpy(start, count, key, fp, ip, gate_cdf, target_cdf, n0_cdf):
    gb_n, tb_n = int(ip[IP_GATE_BINS]), int(ip[IP_TARGET_BINS])
    ns = int(ip[IP_NMAX])
    width = np.uint64(cycle_width(ip))
    c = np.arange(start, start + count, dtype=np.uint64)
    base = c * width
    out = np.zeros((count, N_COLUMNS), dtype=np.int64)
    ref = (c % np.uint64(2) == 0) if ip[IP_ALTERNATE] else np.zeros(count, dtype=bool)
    out[:, REFERENCE] = ref

    exc = np.zeros(count, dtype=np.int64)
    for j in range(gb_n):
        gb = base + np.uint64(j * (ns + 3))
        n = poisson_numpy(uniforms(key, gb), gate_cdf)
        n[ref] = 0
        depth = uniforms(key, gb + _ONE) * fp[FP_LP]
        if ip[IP_STORAGE_FULL]:
            surv = transit_numpy(n, fp[FP_G_ALPHA], fp[FP_G_ALPHA1], depth, key, gb + np.uint64(2))
        else:
            u = uniforms(key, gb + np.uint64(2))
            surv = ((n >= 1) & (u < np.exp(-fp[FP_G_ALPHA1] * depth))).astype(np.int64)
        out[:, GATE_IN] += n
        exc += surv
    out[:, EXCITATIONS] = exc

    o = base + np.uint64(gb_n * (ns + 3))
    stored = binomial_numpy(uniforms(key, o), exc, fp[FP_ETA_SB])
    out[:, STORED] = stored
    u_her = uniforms(key, o + _ONE)
    out[:, HERALD_EXC] = (stored >= 1) & (u_her < 1.0 - (1.0 - fp[FP_H_RET]) ** stored.astype(np.float64))
    out[:, HERALD_BG] = uniforms(key, o + np.uint64(2)) < fp[FP_P_H0]

    t_in = np.zeros(count, dtype=np.int64)
    t_self = np.zeros(count, dtype=np.int64)
    for j in range(tb_n):
        tb = o + np.uint64(3 + j * (ns + 2))
        n = poisson_numpy(uniforms(key, tb), target_cdf)
        if ip[IP_TARGET_FULL]:
            surv = transit_numpy(n, fp[FP_T_ALPHA], fp[FP_T_ALPHA1], 1.0, key, tb + _ONE)
        else:
            u = uniforms(key, tb + _ONE)
            surv = ((n >= 1) & (u < np.exp(-fp[FP_T_ALPHA1]))).astype(np.int64)
        t_in += n
        t_self += surv
    out[:, TARGET_IN] = t_in

    o2 = o + np.uint64(3 + tb_n * (ns + 2))
    blocked = binomial_numpy(uniforms(key, o2), t_in, fp[FP_P_BLOCK])
    blocked += poisson_numpy(uniforms(key, o2 + _ONE), n0_cdf)
    trans = np.where(stored >= 1, blocked, t_self)
    out[:, TRANSMITTED] = trans
    out[:, DETECTED] = binomial_numpy(uniforms(key, o2 + np.uint64(2)), trans, fp[FP_ETA_DET])
    return out


def _cycles_py(start, count, key, fp, ip, gate_cdf, target_cdf, n0_cdf):
    gb_n = ip[IP_GATE_BINS]
    tb_n = ip[IP_TARGET_BINS]
    ns = ip[IP_NMAX]
    width = np.uint64(gb_n * (ns + 3) + 3 + tb_n * (ns + 2) + 3)
    out = np.zeros((count, N_COLUMNS), dtype=np.int64)
    for i in range(count):
        c = np.uint64(start + i)
        base = c * width
        ref = ip[IP_ALTERNATE] != 0 and (start + i) % 2 == 0
        out[i, REFERENCE] = 1 if ref else 0
        exc = 0
        g_in = 0
        for j in range(gb_n):
            gb = base + np.uint64(j * (ns + 3))
            n = _poisson_s(_uniform_s(key, gb), gate_cdf)
            if ref:
                n = 0
            depth = _uniform_s(key, gb + _ONE) * fp[FP_LP]
            if ip[IP_STORAGE_FULL] != 0:
                surv = _transit_s(n, fp[FP_G_ALPHA], fp[FP_G_ALPHA1], depth, key, gb + np.uint64(2))
            else:
                u = _uniform_s(key, gb + np.uint64(2))
                surv = 1 if (n >= 1 and u < np.exp(-fp[FP_G_ALPHA1] * depth)) else 0
            g_in += n
            exc += surv
        out[i, GATE_IN] = g_in
        out[i, EXCITATIONS] = exc

        o = base + np.uint64(gb_n * (ns + 3))
        stored = _binomial_s(_uniform_s(key, o), exc, fp[FP_ETA_SB])
        out[i, STORED] = stored
        u_her = _uniform_s(key, o + _ONE)
        if stored >= 1 and u_her < 1.0 - (1.0 - fp[FP_H_RET]) ** np.float64(stored):
            out[i, HERALD_EXC] = 1
        if _uniform_s(key, o + np.uint64(2)) < fp[FP_P_H0]:
            out[i, HERALD_BG] = 1

        t_in = 0
        t_self = 0
        for j in range(tb_n):
            tb = o + np.uint64(3 + j * (ns + 2))
            n = _poisson_s(_uniform_s(key, tb), target_cdf)
            if ip[IP_TARGET_FULL] != 0:
                surv = _transit_s(n, fp[FP_T_ALPHA], fp[FP_T_ALPHA1], 1.0, key, tb + _ONE)
            else:
                u = _uniform_s(key, tb + _ONE)
                surv = 1 if (n >= 1 and u < np.exp(-fp[FP_T_ALPHA1])) else 0
            t_in += n
            t_self += surv
        out[i, TARGET_IN] = t_in

        o2 = o + np.uint64(3 + tb_n * (ns + 2))
        if stored >= 1:
            trans = _binomial_s(_uniform_s(key, o2), t_in, fp[FP_P_BLOCK])
            trans += _poisson_s(_uniform_s(key, o2 + _ONE), n0_cdf)
        else:
            trans = t_self
        out[i, TRANSMITTED] = trans
        out[i, DETECTED] = _binomial_s(_uniform_s(key, o2 + np.uint64(2)), trans, fp[FP_ETA_DET])
    return out


_cycles_s = _jit(_cycles_py)


def cycles_numba(start, count, key, fp, ip, gate_cdf, target_cdf, n0_cdf):
    return _cycles_s(int(start), int(count), np.uint64(key), np.asarray(fp, dtype=np.float64),
                     np.asarray(ip, dtype=np.int64), gate_cdf, target_cdf, n0_cdf)


def cycles(start, count, key, fp, ip, gate_cdf, target_cdf, n0_cdf):
    if USE_NUMBA:
        return cycles_numba(start, count, key, fp, ip, gate_cdf, target_cdf, n0_cdf)
    return cycles_numpy(start, count, key, fp, ip, gate_cdf, target_cdf, n0_cdf)


# ---------------------------------------------------------------------------
# photon-number ODE of one bin (Dormand-Prince 5(4))
# ---------------------------------------------------------------------------

_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


def _bin_rhs(p, alpha, alpha1, ks):
    d = np.empty_like(p)
    d[2:] = -alpha * ks[2:] * p[2:]
    d[2:-1] += alpha * ks[3:] * p[3:]
    d[1] = -alpha1 * p[1] + 2.0 * alpha * p[2]
    d[0] = alpha1 * p[1]
    return d


_bin_rhs_s = _jit(_bin_rhs)


def _dp54(_bin_rhs, p0, alpha, alpha1, z_end, h0, h_max, rtol, atol, drift_limit, max_steps):
    """Integrate the bin master equation from 0 to ``z_end``.

    Returns ``(p, accepted, rejected, max_drift, status)``; status 0 is
    success, 1 probability drift above ``drift_limit`` in one step, 2 step
    budget exhausted.
    """
    ks = np.arange(p0.shape[0]) * 1.0
    y = p0.copy()
    z = 0.0
    h = min(h0, z_end) if z_end > 0.0 else 0.0
    accepted = 0
    rejected = 0
    max_drift = 0.0
    if z_end <= 0.0:
        return y, accepted, rejected, max_drift, 0
    k1 = _bin_rhs(y, alpha, alpha1, ks)
    while z < z_end:
        if accepted + rejected >= max_steps:
            return y, accepted, rejected, max_drift, 2
        if z + h > z_end:
            h = z_end - z
        k2 = _bin_rhs(y + h * (_A21 * k1), alpha, alpha1, ks)
        k3 = _bin_rhs(y + h * (_A31 * k1 + _A32 * k2), alpha, alpha1, ks)
        k4 = _bin_rhs(y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), alpha, alpha1, ks)
        k5 = _bin_rhs(y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), alpha, alpha1, ks)
        k6 = _bin_rhs(y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5), alpha, alpha1, ks)
        y_new = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = _bin_rhs(y_new, alpha, alpha1, ks)
        err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = np.max(np.abs(err) / scale)
        if err_norm <= 1.0:
            drift = abs(np.sum(y_new) - np.sum(y))
            if drift > max_drift:
                max_drift = drift
            if drift > drift_limit:
                return y_new, accepted, rejected, max_drift, 1
            z = z + h
            y = y_new
            k1 = k7
            accepted += 1
        else:
            rejected += 1
        if err_norm == 0.0:
            factor = 5.0
        else:
            factor = min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
        h = min(h * factor, h_max)
    return y, accepted, rejected, max_drift, 0


_dp54_s = _jit(_dp54)


def integrate_bin(p0, alpha, alpha1, z_end, h0, h_max, rtol, atol, drift_limit, max_steps):
    p0 = np.ascontiguousarray(p0, dtype=np.float64)
    args = (p0, float(alpha), float(alpha1), float(z_end), float(h0), float(h_max),
            float(rtol), float(atol), float(drift_limit), int(max_steps))
    # the right-hand side is passed in so one integrator source serves both flavours
    if USE_NUMBA:
        return _dp54_s(_bin_rhs_s, *args)
    return _dp54(_bin_rhs, *args)


# ---------------------------------------------------------------------------
# coincidence histogram for g2
# ---------------------------------------------------------------------------

def pair_histogram_numpy(t0, cyc0, t1, ptr1, shift, n_cycles, edge0, width, nbins):
    """Histogram of ``t1 - t0`` over detector-0 clicks in cycle c paired with
    detector-1 clicks in cycle ``(c + shift) % n_cycles``.

    ``ptr1`` is the CSR pointer of detector-1 clicks sorted by cycle.
    """
    partner = (cyc0 + shift) % n_cycles
    starts = ptr1[partner]
    counts = ptr1[partner + 1] - starts
    total = int(counts.sum())
    hist = np.zeros(nbins, dtype=np.int64)
    if total == 0:
        return hist
    rep = np.repeat(np.arange(t0.shape[0]), counts)
    offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    j = np.repeat(starts, counts) + offs
    tau = t1[j] - t0[rep]
    idx = np.floor((tau - edge0) / width).astype(np.int64)
    idx = idx[(idx >= 0) & (idx < nbins)]
    hist += np.bincount(idx, minlength=nbins)
    return hist


def _pair_histogram_py(t0, cyc0, t1, ptr1, shift, n_cycles, edge0, width, nbins):
    hist = np.zeros(nbins, dtype=np.int64)
    for i in range(t0.shape[0]):
        partner = (cyc0[i] + shift) % n_cycles
        for j in range(ptr1[partner], ptr1[partner + 1]):
            k = np.int64(np.floor((t1[j] - t0[i] - edge0) / width))
            if 0 <= k < nbins:
                hist[k] += 1
    return hist


_pair_histogram_s = _jit(_pair_histogram_py)


def pair_histogram(t0, cyc0, t1, ptr1, shift, n_cycles, edge0, width, nbins):
    if USE_NUMBA:
        return _pair_histogram_s(np.ascontiguousarray(t0, dtype=np.float64),
                                 np.ascontiguousarray(cyc0, dtype=np.int64),
                                 np.ascontiguousarray(t1, dtype=np.float64),
                                 np.ascontiguousarray(ptr1, dtype=np.int64),
                                 int(shift), int(n_cycles), float(edge0), float(width), int(nbins))
    return pair_histogram_numpy(t0, cyc0, t1, ptr1, shift, n_cycles, edge0, width, nbins)
