import math

import numpy as np
import pytest

from rydswitch import eit
from rydswitch.params import DomainError

MHZ = 2e6 * math.pi


def test_transmission_far_detuned_goes_to_one():
    p = eit.EitSpectrumParams(od=3.2, gamma=5.75 * MHZ, t0=0.4, delta_t=1.7 * MHZ)
    t = eit.eit_transmission(np.array([-2000, 2000]) * MHZ, p)
    assert np.allclose(t, 1.0, atol=1e-4)


def test_transmission_on_resonance():
    p = eit.EitSpectrumParams(od=3.2, gamma=5.75 * MHZ, t0=0.4, delta_t=1.7 * MHZ)
    assert eit.eit_transmission(0.0, p) == pytest.approx(math.exp(-3.2) + 0.4, rel=1e-14)


def test_transmission_without_peak_is_lorentzian_absorption():
    p = eit.EitSpectrumParams(od=2.0, gamma=6.0, t0=0.0)
    # half width at half maximum of the exponent
    assert eit.eit_transmission(3.0, p) == pytest.approx(math.exp(-1.0), rel=1e-14)


def test_transparency_width_formula():
    w = eit.transparency_width(2.0, 4.0, 9.0)
    assert w == pytest.approx(4 * math.sqrt(math.log(2)) / 12, rel=1e-15)
    with pytest.raises(DomainError):
        eit.transparency_width(1.0, 1.0, 0.0)


def test_dephasing_od_limits():
    assert eit.resonant_od_with_dephasing(5.0, 1e7, 3e7, 0.0) == 0.0
    assert eit.resonant_od_with_dephasing(5.0, 1e-3, 3e7, 1e6) == pytest.approx(5.0, rel=1e-12)


def test_group_velocity_and_delay():
    assert eit.group_velocity(2.0, 3.0, 4.0) == pytest.approx(3.0)
    assert eit.vg_from_delay(1.0, math.sqrt(2 * math.pi)) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        eit.vg_from_delay(1.0, 0.0)


def test_correlation_time_scaling():
    t1 = eit.correlation_time_prediction(10.0, 1.0, 1.0)
    assert eit.correlation_time_prediction(40.0, 1.0, 1.0) == pytest.approx(2 * t1)
    assert eit.correlation_time_prediction(10.0, 1.0, 2.0) == pytest.approx(t1 / 4)


def test_blockade_transit_time_preset(derived):
    t = eit.blockade_transit_time(derived.blockade_radius_target, derived.group_velocity_delay)
    assert t == pytest.approx(0.05e-6, rel=0.05)


def test_invalid_spectrum_params():
    with pytest.raises(DomainError):
        eit.EitSpectrumParams(od=1.0, gamma=1.0, t0=1.5)
