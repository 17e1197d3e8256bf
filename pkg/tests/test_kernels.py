"""The numba and numpy paths must return identical integers for identical slots."""
import os
import subprocess
import sys

import numpy as np
import pytest

from rydswitch import kernels
from rydswitch.montecarlo import Scenario, _kernel_inputs

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")
KEY = kernels.stream_key(2014, 3)


def test_uniforms_open_interval_and_reference_value():
    u = kernels.uniforms(KEY, np.arange(100_000, dtype=np.uint64))
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 5 * (1 / 12 / u.size) ** 0.5
    # SplitMix64 finaliser written out with Python integers
    z = (int(KEY) + 1 * 0x9E3779B97F4A7C15) & (2 ** 64 - 1)
    z = kernels.mix64_int(z)
    assert u[0] == ((z >> 11) + 0.5) * 2.0 ** -53


def test_uniform_scalar_path_matches_vector():
    c = np.arange(50, dtype=np.uint64)
    vec = kernels.uniforms(KEY, c)
    with np.errstate(over="ignore"):  # uint64 wraparound is the point
        scal = np.array([kernels._uniform_py(np.uint64(KEY), ci) for ci in c])
    assert np.array_equal(vec, scal)


def test_stream_keys_differ():
    keys = {int(kernels.stream_key(s, t)) for s in range(5) for t in range(5)}
    assert len(keys) == 25


def test_poisson_inverse_cdf_mean():
    cdf = kernels.poisson_cdf(1.7, 30)
    n = kernels.poisson_numpy(kernels.uniforms(KEY, np.arange(200_000, dtype=np.uint64)), cdf)
    assert abs(n.mean() - 1.7) < 4 * (1.7 / n.size) ** 0.5


def test_binomial_numpy_moments():
    u = kernels.uniforms(KEY, np.arange(200_000, dtype=np.uint64))
    k = kernels.binomial_numpy(u, 5, 0.3)
    assert k.min() >= 0 and k.max() <= 5
    assert abs(k.mean() - 1.5) < 4 * (5 * 0.3 * 0.7 / k.size) ** 0.5


@needs_numba
def test_transit_paths_identical():
    n = np.arange(20_000, dtype=np.int64) % 7
    base = np.arange(n.size, dtype=np.uint64) * np.uint64(9) + np.uint64(1)
    a = kernels.transit_numpy(n, 3.2, 0.91, 1.0, KEY, base)
    b = kernels.transit_numba(n, 3.2, 0.91, 1.0, KEY, base)
    assert np.array_equal(a, b)


@needs_numba
def test_bin_trials_paths_identical():
    a = kernels.bin_trials_numpy(100, 20_000, 1.7, 10.0, 1.2, 0.5, KEY, 30)
    b = kernels.bin_trials_numba(100, 20_000, 1.7, 10.0, 1.2, 0.5, KEY, 30)
    assert np.array_equal(a, b)


@needs_numba
@pytest.mark.parametrize("storage_mode,target_mode", [("full", "rapid"), ("rapid", "full")])
def test_cycle_paths_identical(storage_mode, target_mode):
    s = Scenario(storage_mode=storage_mode, target_mode=target_mode)
    fp, ip, g, t, n0 = _kernel_inputs(s)
    a = kernels.cycles_numpy(7, 20_000, KEY, fp, ip, g, t, n0)
    b = kernels.cycles_numba(7, 20_000, KEY, fp, ip, g, t, n0)
    assert np.array_equal(a, b)


@needs_numba
def test_pair_histogram_paths_identical():
    rng = np.random.default_rng(1)
    nc = 500
    c0 = np.repeat(np.arange(nc), rng.poisson(2.0, nc)).astype(np.int64)
    t0 = rng.uniform(0, 5, c0.size)
    ptr1 = np.concatenate([[0], np.cumsum(rng.poisson(2.0, nc))]).astype(np.int64)
    t1 = rng.uniform(0, 5, ptr1[-1])
    for shift in (0, 1, 17):
        a = kernels.pair_histogram_numpy(t0, c0, t1, ptr1, shift, nc, -1.05, 0.1, 21)
        b = kernels._pair_histogram_s(t0, c0, t1, ptr1, shift, nc, -1.05, 0.1, 21)
        assert np.array_equal(a, b)


def test_transit_zero_photons_and_zero_length():
    n = np.array([0, 3, 5], dtype=np.int64)
    base = np.array([1, 10, 20], dtype=np.uint64)
    assert np.array_equal(kernels.transit(n, 3.0, 0.5, 0.0, KEY, base), n)
    assert kernels.transit(np.array([0]), 3.0, 0.5, 1.0, KEY, np.array([1], dtype=np.uint64))[0] == 0


def test_env_flag_selects_numpy_path():
    code = "from rydswitch import kernels; print(kernels.USE_NUMBA)"
    env = {**os.environ, kernels.ENV_FLAG: "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"


@needs_numba
def test_simulation_identical_across_paths():
    code = ("import numpy as np, hashlib; from rydswitch.montecarlo import simulate_cycles, Scenario;"
            "b = simulate_cycles(30000, Scenario(), 11, chunk=7000);"
            "print(hashlib.sha256(b.data.tobytes()).hexdigest())")
    digests = set()
    for flag in ("0", "1"):
        env = {**os.environ, kernels.ENV_FLAG: flag}
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        digests.add(out.stdout.strip())
    assert len(digests) == 1
