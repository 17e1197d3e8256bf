import math

import numpy as np
import pytest

from rydswitch import fitting, kernels
from rydswitch import montecarlo as mc
from rydswitch.params import DomainError
from rydswitch.propagation import MediumParams, bin_mean_analytic

PRESET = mc.Scenario()


@pytest.fixture(scope="module")
def batch():
    return mc.simulate_cycles(200_000, PRESET, 31)


def test_bin_transit_mean_matches_analytic():
    m = MediumParams.from_od(3.2, 0.91)
    out = mc.simulate_bin_trials(1.0, m, 200_000, seed=4)
    se = out.std(ddof=1) / math.sqrt(out.size)
    assert abs(out.mean() - bin_mean_analytic(1.0, m, 1.0, form="series")) < 4 * se


def test_bin_transit_fock_two():
    # two photons: the pair survives to e^{-2 alpha L}
    m = MediumParams.from_od(1.0, 0.2)
    out = mc.simulate_bin_transit(np.full(100_000, 2), m, seed=1)
    p2 = np.mean(out == 2)
    assert abs(p2 - math.exp(-2)) < 4 * math.sqrt(math.exp(-2) * (1 - math.exp(-2)) / out.size)


def test_bin_transit_scalar_and_domain():
    m = MediumParams.from_od(1.0, 0.2)
    assert isinstance(mc.simulate_bin_transit(3, m, seed=1), int)
    with pytest.raises(DomainError):
        mc.simulate_bin_transit(-1, m, seed=1)


def test_bin_trials_chunking_invariant():
    m = MediumParams.from_od(3.2, 0.91)
    a = mc.simulate_bin_trials(1.5, m, 50_000, seed=9)
    b = mc.simulate_bin_trials(1.5, m, 50_000, seed=9, chunk=777)
    assert np.array_equal(a, b)


def test_cycles_independent_of_chunk_and_workers():
    a = mc.simulate_cycles(40_000, PRESET, 5)
    b = mc.simulate_cycles(40_000, PRESET, 5, chunk=3001)
    c = mc.simulate_cycles(40_000, PRESET, 5, workers=2, chunk=10_000)
    assert np.array_equal(a.data, b.data)
    assert np.array_equal(a.data, c.data)


def test_prefix_is_stable():
    # cycle i depends only on (seed, i)
    a = mc.simulate_cycles(5_000, PRESET, 5)
    b = mc.simulate_cycles(20_000, PRESET, 5)
    assert np.array_equal(a.data, b.data[:5_000])


def test_alternating_references(batch):
    ref = batch.reference
    assert ref[::2].all() and not ref[1::2].any()
    assert (batch.column(kernels.GATE_IN)[ref] == 0).all()


def test_extinction_matches_analytic(batch):
    exp = mc.analytic_cycle_expectation(PRESET)
    eps = mc.estimate_extinction(batch)
    assert abs(eps.z_score(exp.eps)) < 3.5


def test_herald_rate_matches_analytic(batch):
    exp = mc.analytic_cycle_expectation(PRESET)
    assert abs(mc.herald_rate(batch).z_score(exp.p_herald)) < 3.5


def test_stored_fraction_matches_analytic(batch):
    exp = mc.analytic_cycle_expectation(PRESET)
    sig = ~batch.reference
    stored = mc.estimate_fraction(batch.column(kernels.STORED)[sig] >= 1)
    assert abs(stored.z_score(exp.p_stored)) < 3.5


def test_no_storage_gives_unit_extinction():
    s = PRESET.with_(eta_sb=0.0, eta_wr=0.0)
    b = mc.simulate_cycles(60_000, s, 2)
    eps = mc.estimate_extinction(b)
    assert abs(eps.z_score(1.0)) < 3.5
    assert mc.analytic_cycle_expectation(s).eps == pytest.approx(1.0, rel=1e-12)


def test_background_heralds_without_gate():
    s = PRESET.with_(n_g=0.0)
    b = mc.simulate_cycles(400_000, s, 3)
    assert abs(mc.herald_rate(b).z_score(1.4e-4)) < 3.5


def test_per_sample_estimator_consistent(batch):
    pooled = mc.estimate_extinction(batch)
    per = mc.estimate_extinction_per_sample(batch, 2_000)
    assert abs(pooled.value - per.value) < 4 * per.se
    with pytest.raises(DomainError):
        mc.estimate_extinction_per_sample(batch, len(batch))


def test_ratio_needs_two_samples():
    v, se = mc._ratio_of_means(np.array([1.0]), np.array([1.0, 2.0]))
    assert math.isnan(v) and math.isnan(se)


def test_records_and_totals(batch):
    recs = batch.to_records()[:4]
    assert [r.rng_stream_id for r in recs] == [0, 1, 2, 3]
    assert recs[0].reference and not recs[1].reference
    tot = batch.totals()
    assert tot["cycles"] == len(batch) == tot["signal_cycles"] + tot["reference_cycles"]


def test_scenario_validation_lists_problems():
    with pytest.raises(mc.ScenarioError) as exc:
        mc.Scenario(n_g=-1.0, t0=0.0)
    assert "n_g" in str(exc.value) and "t0" in str(exc.value)
    with pytest.raises(mc.ScenarioError):
        mc.Scenario(eta_sb=0.01, eta_wr=0.5, eta_det=0.5)


def test_bin_counts_round_up():
    s = mc.Scenario(gate_bins=2.0, target_bins=1.6)
    assert (s.gate_bin_count, s.target_bin_count) == (2, 2)


# -- g2 ----------------------------------------------------------------------

def test_poissonian_g2_is_flat():
    recs = mc.poissonian_clicks(20_000, 2.0, 10.0, seed=3)
    tab = mc.estimate_g2(recs, bin_width=1.0, tau_max=5.0)
    ok = ~tab.flagged
    z = (tab.g2[ok] - 1) / tab.se[ok]
    assert np.max(np.abs(z)) < 4
    assert tab.tau[tab.tau.size // 2] == pytest.approx(0.0, abs=1e-12)


def test_retrieval_g2_antibunched():
    rng = np.random.default_rng(0)
    stored = rng.poisson(0.3, 100_000)
    recs = mc.retrieval_clicks(stored, 0.5, 0.9, 5.0, seed=1, background_mean=0.002)
    tab = mc.estimate_g2(recs, bin_width=0.5, tau_max=2.0)
    assert tab.g2[tab.tau.size // 2] < 0.5


def test_blockaded_g2_width_round_trip():
    recs = mc.blockaded_clicks(40_000, 2.0, 20.0, 0.23, seed=4)
    tab = mc.estimate_g2(recs, bin_width=0.05, tau_max=1.5)
    ok = ~tab.flagged & np.isfinite(tab.g2)
    res = fitting.fit(fitting.FitProblem("g2_gaussian_dip", ("scale", "depth", "tau_c")),
                      fitting.DataSeries(tab.tau[ok], tab.g2[ok], tab.se[ok]))
    assert res.converged
    assert abs(res.values["tau_c"] - 0.23) < 4 * res.std_errors["tau_c"] + 0.01


def test_click_record_validation():
    with pytest.raises(DomainError):
        mc.ClickRecord(np.array([0.5]), detector_id=2)
    with pytest.raises(DomainError):
        mc.ClickRecord(np.array([2.0]), detector_id=0, window=(0.0, 1.0))


def test_g2_needs_two_detectors():
    with pytest.raises(DomainError):
        mc.estimate_g2([mc.ClickRecord(np.array([0.1]), 0)], 0.1)
