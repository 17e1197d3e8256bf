"""Derived experimental quantities.

The oracle recomputes every quantity with hand-typed CODATA constants and
plain ``math``, independent of the package's constant table.
"""
import dataclasses
import math
import warnings

import pytest

from rydswitch import params
from rydswitch.params import DomainError

# CODATA 2018; the package may use a newer table, hence rel=1e-7 below
HBAR = 1.054571817e-34
KB = 1.380649e-23
C = 299792458.0
EPS0 = 8.8541878128e-12
A0 = 5.29177210903e-11
E = 1.602176634e-19
ME = 9.1093837015e-31
AMU = 1.66053906660e-27
M_RB = 86.909180531 * AMU
EH = HBAR ** 2 / (ME * A0 ** 2)


def oracle():
    w = [2 * math.pi * f for f in (136, 37, 37)]
    v = math.sqrt(KB * 0.43e-6 / M_RB)
    sig = [v / wi for wi in w]
    rho = 2.2e5 / ((2 * math.pi) ** 1.5 * sig[0] * sig[1] * sig[2])

    def field(p):
        return math.sqrt(4 * p / (math.pi * 12e-6 ** 2 * C * EPS0))

    r = 0.014 * 0.5 ** 1.5 * A0
    om_g = E * r / 3 * field(16e-3) / HBAR
    om_t = E * r * math.sqrt(2) / 3 * field(32e-3) / HBAR
    gam = 2 * math.pi * 5.75e6
    c6 = 3.9e23 * EH * A0 ** 6

    def rb(om):
        return (2 * c6 * gam / (HBAR * om ** 2)) ** (1 / 6)

    l_a = 1 / (rho / 2 * 3 * 0.5 * 795e-9 ** 2 / (2 * math.pi))
    alpha = 163 * 4 * math.pi * EPS0 * A0 ** 3
    v0 = alpha * field(32e-3) ** 2 / 4  # magnitude; polarizability is negative
    duty = (1.5e-6 * 32e-3 + 0.6e-6 * 16e-3) / (32e-3 * 100e-6)
    return {
        "sigma": sig, "rho": rho, "E_g": field(16e-3), "E_t": field(32e-3), "om_g": om_g, "om_t": om_t,
        "rb_g": rb(om_g), "rb_t": rb(om_t), "l_a": l_a,
        "vg": om_t ** 2 * l_a / gam, "vg_delay": math.sqrt(2 * math.pi) * sig[2] / 0.25e-6,
        "dT_g": om_g ** 2 * math.sqrt(math.log(2)) / (gam * math.sqrt(3.5)),
        "dT_t": om_t ** 2 * math.sqrt(math.log(2)) / (gam * math.sqrt(10)),
        "tau_c": 1.05 * math.sqrt(80) * gam / om_t ** 2, "v0": v0, "v0_avg": duty * v0,
    }


@pytest.fixture(scope="module")
def ref():
    return oracle()


def test_geometry_matches_oracle(derived, ref):
    for a, b in zip(derived.rms_radii, ref["sigma"]):
        assert a == pytest.approx(b, rel=1e-7)
    assert derived.peak_density == pytest.approx(ref["rho"], rel=1e-7)


@pytest.mark.parametrize("fld,key", [
    ("E_field_gate", "E_g"), ("E_field_target", "E_t"), ("rabi_gate", "om_g"), ("rabi_target", "om_t"),
    ("blockade_radius_gate", "rb_g"), ("blockade_radius_target", "rb_t"), ("absorption_length", "l_a"),
    ("group_velocity", "vg"), ("group_velocity_delay", "vg_delay"), ("transparency_width_gate", "dT_g"),
    ("transparency_width_target", "dT_t"), ("correlation_time", "tau_c"),
])
def test_derived_chain_matches_oracle(derived, ref, fld, key):
    assert getattr(derived, fld) == pytest.approx(ref[key], rel=1e-7)


def test_potential_sign_and_average(derived, ref):
    # negative polarizability gives a repulsive (positive) light shift
    assert derived.dipole_potential == pytest.approx(ref["v0"], rel=1e-7)
    assert derived.time_avg_potential == pytest.approx(ref["v0_avg"], rel=1e-7)
    assert derived.dipole_potential / KB * 1e6 == pytest.approx(5.1, rel=0.05)
    assert derived.time_avg_potential / KB * 1e6 == pytest.approx(0.09, rel=0.05)


@pytest.mark.parametrize("fld,idx,scale,published,rel", [
    ("rms_radii", 0, 1e-6, 7.5, 0.05),
    ("rms_radii", 1, 1e-6, 28, 0.05),
    ("peak_density", None, 1e18, 2.4, 0.05),
    ("E_field_gate", None, 1e6, 0.23, 0.05),
    ("E_field_target", None, 1e6, 0.32, 0.05),
    ("rabi_gate", None, 2e6 * math.pi, 4.7, 0.05),
    ("rabi_target", None, 2e6 * math.pi, 9.4, 0.05),
    ("blockade_radius_gate", None, 1e-6, 18, 0.05),
    ("blockade_radius_target", None, 1e-6, 14, 0.05),
    ("transparency_width_gate", None, 2e6 * math.pi, 1.7, 0.10),
    ("transparency_width_target", None, 2e6 * math.pi, 4.0, 0.10),
    ("group_velocity_delay", None, 1e3, 0.3, 0.10),
])
def test_published_rounded_values(derived, fld, idx, scale, published, rel):
    v = getattr(derived, fld)
    v = v[idx] if idx is not None else v
    assert v / scale == pytest.approx(published, rel=rel)


def test_dipole_elements_at_n50():
    d_g, d_t = params.rydberg_dipole_elements(50)
    r = params.radial_integral(50)
    assert r == pytest.approx(0.014 * params.CONSTANTS.a0, rel=1e-15)
    assert d_t / d_g == pytest.approx(math.sqrt(2), rel=1e-15)


def test_dipole_elements_at_n100_in_atomic_units():
    e_a0 = params.CONSTANTS.e_charge * params.CONSTANTS.a0
    d_g, d_t = params.rydberg_dipole_elements(100)
    assert d_g / e_a0 == pytest.approx(1.6e-3, rel=0.05)
    assert d_t / e_a0 == pytest.approx(2.3e-3, rel=0.05)


def test_radial_integral_range_warning():
    with pytest.warns(UserWarning):
        params.radial_integral(30)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        params.radial_integral(100)


def test_blockade_radius_uses_magnitude():
    a = params.blockade_radius(-1e-58, 3e7, 6e7)
    b = params.blockade_radius(1e-58, 3e7, 6e7)
    assert a == b > 0
    with pytest.raises(DomainError):
        params.blockade_radius(1e-58, 3e7, 0.0)


def test_domain_errors():
    with pytest.raises(DomainError):
        params.beam_field_amplitude(1e-3, 0.0)
    with pytest.raises(DomainError):
        params.absorption_length(0.0, 0.5, 795e-9)
    with pytest.raises(DomainError):
        params.dipole_potential(1e-39, 1e5, 1.5)


def test_config_validation_lists_every_problem(preset):
    bad = dataclasses.replace
    with pytest.raises(DomainError) as exc:
        bad(preset.experiment, temperature=-1.0, branching_target=2.0)
    assert "temperature" in str(exc.value) and "branching_target" in str(exc.value)


def test_units_table_covers_every_field(derived):
    assert set(derived.units) == set(derived.as_dict())


def test_field_amplitude_zero_power():
    assert params.beam_field_amplitude(0.0, 1e-5) == 0.0
