import math

import numpy as np
import pytest

from rydswitch import fitting
from rydswitch.fitting import DataSeries, FitProblem
from rydswitch.params import DomainError


def test_exact_line_recovered():
    x = np.linspace(0, 5, 11)
    res = fitting.fit(FitProblem("linear", ("slope", "intercept")), DataSeries(x, 2.5 * x - 1.0))
    assert res.converged
    assert res.values["slope"] == pytest.approx(2.5, abs=1e-8)
    assert res.values["intercept"] == pytest.approx(-1.0, abs=1e-8)


def test_lm_matches_closed_form_line():
    rng = np.random.default_rng(0)
    x = np.linspace(0, 3, 25)
    data = DataSeries(x, 0.8 + 0.12 * x + rng.normal(0, 0.02, x.size), 0.02)
    lm = fitting.fit(FitProblem("linear", ("slope", "intercept"), initial={"slope": 0.0}), data)
    cf = fitting.fit_linear(data)
    for k in ("slope", "intercept"):
        assert lm.values[k] == pytest.approx(cf.values[k], rel=1e-7)
        assert lm.std_errors[k] == pytest.approx(cf.std_errors[k], rel=1e-5)


def test_sigma_rescale_invariance():
    # multiplying every sigma by a constant leaves values unchanged and scales errors
    rng = np.random.default_rng(1)
    x = np.linspace(0.1, 5, 30)
    m = fitting.get_model("transmitted_mean")
    y = m(x, t0=0.3, b=1.6) + rng.normal(0, 0.01, x.size)
    p = FitProblem("transmitted_mean", ("t0", "b"))
    a = fitting.fit(p, DataSeries(x, y, 0.01))
    b = fitting.fit(p, DataSeries(x, y, 0.03))
    for k in ("t0", "b"):
        assert a.values[k] == pytest.approx(b.values[k], rel=1e-10)
        assert b.std_errors[k] == pytest.approx(3 * a.std_errors[k], rel=1e-8)


def test_unweighted_errors_use_residual_variance():
    rng = np.random.default_rng(2)
    x = np.linspace(0, 1, 40)
    y = 1 + 2 * x + rng.normal(0, 0.1, x.size)
    a = fitting.fit_linear(DataSeries(x, y))
    s2 = a.chi2 / a.dof
    b = fitting.fit_linear(DataSeries(x, y, math.sqrt(s2)))
    assert a.std_errors["slope"] == pytest.approx(b.std_errors["slope"], rel=1e-10)


def test_rank_deficiency_names_combination():
    x = np.linspace(0, 1, 10)
    m = fitting.Model("product", lambda x, a, c: a * c * x, ("a", "c"), {"a": 1.0, "c": 1.0}, {}, "x", "y")
    with pytest.raises(fitting.RankDeficientError) as exc:
        fitting.fit(FitProblem(m, ("a", "c")), DataSeries(x, 2 * x))
    assert "a" in exc.value.combination and "c" in exc.value.combination


def test_linear_needs_two_points():
    with pytest.raises(DomainError):
        fitting.fit_linear(DataSeries([1.0], [2.0]))
    with pytest.raises(fitting.RankDeficientError):
        fitting.fit_linear(DataSeries([1.0, 1.0], [2.0, 3.0]))


def test_problem_validation():
    with pytest.raises(DomainError):
        FitProblem("linear", ("slope",), fixed={"slope": 1.0})
    with pytest.raises(DomainError):
        FitProblem("linear", ("nope",))
    with pytest.raises(DomainError):
        FitProblem("transmitted_mean", ("t0",), initial={"t0": 2.0})
    with pytest.raises(KeyError) as exc:
        fitting.get_model("nope")
    assert "linear" in str(exc.value)


def test_fixed_parameters_respected():
    x = np.linspace(0.1, 5, 20)
    m = fitting.get_model("transmitted_mean")
    res = fitting.fit(FitProblem("transmitted_mean", ("b",), fixed={"t0": 0.3}), DataSeries(x, m(x, t0=0.3, b=2.2)))
    assert res.free == ("b",)
    assert res.values["b"] == pytest.approx(2.2, rel=1e-7)
    assert res.values["t0"] == 0.3


def test_eit_spectrum_round_trip():
    rng = np.random.default_rng(3)
    x = np.linspace(-20, 20, 60)
    truth = dict(od=3.2, gamma=5.75, delta0=0.1, delta1=-0.05, t0=0.40, delta_t=1.7)
    m = fitting.get_model("eit_transmission")
    data = DataSeries(x, m(x, **truth) + rng.normal(0, 0.01, x.size), 0.01)
    res = fitting.fit(FitProblem(m, tuple(truth), initial={"od": 2.5, "gamma": 5.0, "t0": 0.3, "delta_t": 2.5}),
                      data)
    assert res.converged
    assert res.within(truth, 4.0)


@pytest.mark.parametrize("form,truth", [
    ("decay", {"amplitude": 0.5, "tau": 0.9}),
    ("rate", {"n_r0": 0.5, "rate": 1.1}),
    ("blockade", {"eps0": 0.2, "tau_pop": 24.0}),
])
def test_fit_exponential_forms(form, truth):
    x = np.linspace(0, 3 if form != "blockade" else 100, 15)
    name = fitting._EXP_FORMS[form][0]
    y = fitting.get_model(name)(x, **truth)
    res = fitting.fit_exponential(DataSeries(x, y), form)
    for k, v in truth.items():
        assert res.values[k] == pytest.approx(v, rel=1e-6)


def test_depletion_from_line():
    x = np.linspace(0, 10, 6)
    line = fitting.fit_linear(DataSeries(x, 2.0 * (1 - x / 23)))
    rho0, n1 = fitting.depletion_from_line(line)
    assert rho0 == pytest.approx(2.0) and n1 == pytest.approx(23.0)


def test_within_uses_standard_errors():
    r = fitting.FitResult({"a": 1.0}, {"a": 0.1}, 0.0, True, 1)
    assert r.within({"a": 1.29}) and not r.within({"a": 1.31})


def test_model_jacobian_exact_for_line():
    j = fitting.model_jacobian("linear", np.array([0.0, 1.0, 2.0]), {"slope": 1.0, "intercept": 0.0})
    assert np.allclose(j, [[0, 1], [1, 1], [2, 1]], atol=1e-8)


def test_registry_contents():
    names = fitting.available_models()
    for n in ("extinction_vs_ng_full", "extinction_total_vs_nt", "eit_transmission", "g2_gaussian_dip"):
        assert n in names
    for n in names:
        m = fitting.get_model(n)
        y = m(np.array([0.5, 1.0]))
        assert np.all(np.isfinite(y)), n
