import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from conftest import MHZ, US
from stirapsim.pulses import (
    PulseParams, beam_scale, envelope_trace, multi_pair_train, rabi_envelope,
    rabi_envelope_derivative, rebuild_pair, stirap_pair,
)


def test_peak_and_floor():
    p = PulseParams(100 * MHZ, 0.0, 1.5 * US)
    assert rabi_envelope(p, 0.0) == pytest.approx(100 * MHZ)
    q = PulseParams(100 * MHZ, 0.0, 1.5 * US, floor_fraction=0.02)
    assert rabi_envelope(q, 0.0) == pytest.approx(100 * MHZ)
    r = PulseParams(1.0, 0.0, 1.0, floor_fraction=0.05)
    assert rabi_envelope(r, 10.0) == pytest.approx(0.05)


def test_cutoffs():
    p = PulseParams(1.0, 0.0, 1.0, floor_fraction=0.05, rf_off_time=5.0, shutter_time=8.0)
    assert rabi_envelope(p, 6.0) == pytest.approx(0.05 * 1e-5)
    assert rabi_envelope(p, 8.0) == 0.0
    assert rabi_envelope(p, 100.0) == 0.0
    with pytest.raises(ValueError):
        PulseParams(1.0, 0.0, 1.0, rf_off_time=9.0, shutter_time=8.0)
    for bad in (dict(omega_peak=-1.0), dict(sigma=0.0), dict(floor_fraction=1.0)):
        kw = dict(omega_peak=1.0, center=0.0, sigma=1.0) | bad
        with pytest.raises(ValueError):
            PulseParams(**kw)


def test_intensity_width_convention():
    # sigma is the 1/e half width of the intensity, i.e. Omega^2
    p = PulseParams(1.0, 0.0, 2.0)
    assert rabi_envelope(p, 2.0) ** 2 == pytest.approx(math.exp(-1))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 5.0), st.floats(-3, 3), st.floats(0.1, 3.0))
def test_symmetric_about_center(delta, center, sigma):
    p = PulseParams(1.0, center, sigma)
    assert rabi_envelope(p, center + delta) == pytest.approx(rabi_envelope(p, center - delta))


@settings(max_examples=50, deadline=None)
@given(st.floats(-20, 20), st.floats(0, 0.9))
def test_nonnegative(t, floor):
    p = PulseParams(2.0, 0.0, 1.0, floor_fraction=floor, rf_off_time=3.0, shutter_time=6.0)
    v = rabi_envelope(p, t)
    assert v >= 0
    if t >= 6.0:
        assert v == 0


def test_area():
    p = PulseParams(3.0, 0.5, 1.5)
    area, _ = integrate.quad(lambda t: rabi_envelope(p, t), -30, 30, points=[0.5], limit=200)
    assert area == pytest.approx(3.0 * 1.5 * math.sqrt(2 * math.pi), rel=1e-6)


def test_derivative_matches_finite_difference():
    p = PulseParams(2.0, 0.3, 1.2)
    for t in (-1.0, 0.0, 0.9, 2.5):
        h = 1e-6
        fd = (rabi_envelope(p, t + h) - rabi_envelope(p, t - h)) / (2 * h)
        assert rabi_envelope_derivative(p, t) == pytest.approx(fd, rel=1e-6)


def test_stirap_pair_geometry():
    pair = stirap_pair(3 * US, 1.5 * US, 90 * MHZ, 225 * MHZ, 0.02, 0.05)
    assert pair.pump.center == pytest.approx(1.5 * US)
    assert pair.stokes.center == pytest.approx(-1.5 * US)
    assert pair.pump.rf_off_time == pytest.approx(11.5 * US)
    assert pair.pump.shutter_time == pytest.approx(pair.start + 100 * US)
    same = stirap_pair(0, US, 1.0, 1.0)
    assert same.pump.center == same.stokes.center
    intuitive = stirap_pair(-3 * US, US, 1.0, 1.0)
    assert intuitive.pump.center < intuitive.stokes.center
    with pytest.raises(ValueError):
        stirap_pair(0, 0, 1.0, 1.0)


def test_rebuild_keeps_offsets():
    pair = stirap_pair(3 * US, 1.5 * US, 1.0, 2.0, 0.02, 0.05, shutter_delay=40 * US)
    new = rebuild_pair(pair, delta_tau=1 * US, sigma=2 * US)
    assert new.pump.floor_fraction == 0.02 and new.stokes.omega_peak == 2.0
    assert new.pump.rf_off_time - new.pump.center == pytest.approx(10 * US)
    assert new.pump.shutter_time - new.start == pytest.approx(40 * US)


def test_train_alternates_and_checks_spacing():
    base = stirap_pair(3 * US, 1.5 * US, 1.0, 2.0)
    assert multi_pair_train(1, base, 20 * US).pairs == (base,)
    tr = multi_pair_train(3, base, 20 * US)
    assert [p.delta_tau for p in tr.pairs] == pytest.approx([3 * US, -3 * US, 3 * US])
    # the back-transfer pair runs 850 first
    assert tr.pairs[1].pump.center < tr.pairs[1].stokes.center
    assert tr.pairs[2].stokes.center == pytest.approx(base.stokes.center + 40 * US)
    assert len({p.rf_off_time for _, p in tr.pulses()}) == 1
    with pytest.raises(ValueError, match="overlap"):
        multi_pair_train(2, base, base.support)
    with pytest.raises(ValueError):
        multi_pair_train(0, base, 20 * US)


def test_beam_scale():
    assert beam_scale(0, 55e-6) == 1.0
    assert beam_scale(55e-6, 55e-6) == pytest.approx(math.exp(-1))
    assert beam_scale(27.5e-6, 55e-6) == pytest.approx(math.exp(-0.25))
    with pytest.raises(ValueError):
        beam_scale(1.0, 0.0)


def test_envelope_trace_columns():
    pair = stirap_pair(0, US, 1.0, 2.0)
    tr = envelope_trace(pair, np.linspace(-3 * US, 3 * US, 7))
    assert tr.shape == (7, 3)
    assert tr[3, 1] == pytest.approx(1.0) and tr[3, 2] == pytest.approx(2.0)
    assert np.allclose(tr[:, 1] * 2, tr[:, 2])
