import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stirap.designer import SetKind, truncation_asymmetric
from stirap.envelope import (
    DrivePair,
    effective_area,
    envelope_at,
    equal_amplitude_time,
    mixing_angle,
    mixing_angle_rate,
)

NS = 1e-9
MHZ = 1e6


def unequal_pair(r=-1.5):
    return DrivePair.from_cyclic(44 * MHZ, 37 * MHZ, 35 * NS, r * 35 * NS)


def bisect(f, lo, hi, tol=1e-22):
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def central_difference(pair, t, h=1e-12):
    return (mixing_angle(pair, t + h) - mixing_angle(pair, t - h)) / (2 * h)


def direct_rate(pair, t):
    # quotient form straight from the envelopes and their derivatives
    o01, o12 = envelope_at(pair, t)
    d01 = -t / pair.sigma**2 * o01
    d12 = -(t - pair.t_sep) / pair.sigma**2 * o12
    return (d01 * o12 - o01 * d12) / (o01**2 + o12**2)


pairs = st.builds(
    lambda a01, a12, sigma, r: DrivePair(a01, a12, sigma, r * sigma),
    st.floats(1e7, 1e9),
    st.floats(1e7, 1e9),
    st.floats(5e-9, 100e-9),
    st.floats(-4.0, -0.1),
)


class TestDrivePair:
    def test_derived_quantities(self):
        pair = unequal_pair()
        assert pair.r == pytest.approx(-1.5)
        assert pair.alpha == pytest.approx(44 / 37)
        assert pair.counter_intuitive

    @pytest.mark.parametrize("kwargs", [
        dict(omega01_peak=1.0, omega12_peak=1.0, sigma=0.0, t_sep=-1.0),
        dict(omega01_peak=-1.0, omega12_peak=1.0, sigma=1.0, t_sep=-1.0),
        dict(omega01_peak=1.0, omega12_peak=1.0, sigma=1.0, t_sep=math.nan),
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            DrivePair(**kwargs)

    def test_intuitive_ordering_warns(self):
        with pytest.warns(UserWarning, match="intuitive"):
            DrivePair(1.0, 1.0, 1.0, 0.5)

    def test_zero_drive_has_no_mixing_angle(self):
        pair = DrivePair(0.0, 0.0, 1.0, -1.0)
        assert envelope_at(pair, 0.0) == (0.0, 0.0)
        with pytest.raises(ValueError):
            mixing_angle(pair, 0.0)


class TestEnvelope:
    def test_peaks(self):
        pair = unequal_pair()
        assert envelope_at(pair, 0.0)[0] == pair.omega01_peak
        assert envelope_at(pair, pair.t_sep)[1] == pair.omega12_peak

    def test_stokes_at_origin(self):
        _, o12 = envelope_at(unequal_pair(), 0.0)
        assert o12 / (2 * math.pi * MHZ) == pytest.approx(37 * math.exp(-1.125), rel=1e-14)

    def test_vectorised(self):
        pair = unequal_pair()
        t = np.linspace(-200, 200, 7) * NS
        o01, o12 = envelope_at(pair, t)
        assert o01.shape == t.shape and np.all(o01 > 0) and np.all(o12 > 0)


class TestMixingAngle:
    def test_midpoint_equal_amplitudes(self):
        pair = DrivePair(1e8, 1e8, 30 * NS, -60 * NS)
        assert mixing_angle(pair, pair.t_sep / 2) == pytest.approx(math.pi / 4, abs=1e-15)

    @pytest.mark.parametrize("r, n_t, expected_deg, tol", [
        (-1.0, 1.0, 12.6, 0.05),
        (-2.0, 1.0, 1.05, 0.05),
        (-1.0, 4.0, 0.64, 0.01),
    ])
    def test_initial_angles(self, r, n_t, expected_deg, tol):
        sigma = 35 * NS
        pair = DrivePair(1e8, 1e8, sigma, r * sigma)
        t_i = -(n_t - r) * sigma
        assert math.degrees(mixing_angle(pair, t_i)) == pytest.approx(expected_deg, abs=tol)

    def test_far_tails_do_not_underflow(self):
        pair = DrivePair(1e8, 1e8, 1 * NS, -1 * NS)
        assert mixing_angle(pair, -1e-6) == pytest.approx(0.0, abs=1e-300)
        assert mixing_angle(pair, 1e-6) == math.pi / 2

    @given(pairs)
    @settings(max_examples=50, deadline=None)
    def test_monotone_increasing(self, pair):
        t = pair.t_sep / 2 + np.linspace(-8, 8, 400) * pair.sigma
        theta = mixing_angle(pair, t)
        inner = (theta > 1e-12) & (theta < math.pi / 2 - 1e-12)
        assert np.all(np.diff(theta[inner]) > 0)
        assert np.all((theta >= 0) & (theta <= math.pi / 2))


class TestMixingAngleRate:
    def test_value_at_crossing(self):
        pair = DrivePair(1e8, 1e8, 30 * NS, -60 * NS)
        t_I = equal_amplitude_time(pair)
        assert mixing_angle_rate(pair, t_I) == pytest.approx(60 / (2 * 30**2) / NS, rel=1e-14)
        assert mixing_angle_rate(pair, t_I) * NS == pytest.approx(0.0333, abs=5e-5)
        assert mixing_angle_rate(pair, t_I) == pytest.approx(central_difference(pair, t_I), rel=1e-6)

    def test_tails_relative_to_peak(self):
        # exponent of the amplitude ratio moves by |r| per sigma, so the rate
        # falls to 1/cosh(5) of its peak five widths away for r = -1
        pair = DrivePair(1e8, 1e8, 30 * NS, -30 * NS)
        t_I = equal_amplitude_time(pair)
        peak = mixing_angle_rate(pair, t_I)
        for side in (-5, 5):
            t = t_I + side * pair.sigma
            fd = central_difference(pair, t)
            assert fd / peak == pytest.approx(1 / math.cosh(5), rel=1e-6)
            assert mixing_angle_rate(pair, t) == pytest.approx(fd, rel=1e-6)

    def test_matches_quotient_formula(self):
        pair = unequal_pair(-2.0)
        t = np.linspace(-150, 80, 101) * NS
        np.testing.assert_allclose(mixing_angle_rate(pair, t), direct_rate(pair, t), rtol=1e-12)

    @given(pairs, st.floats(0.01, 0.3))
    @settings(max_examples=40, deadline=None)
    def test_matches_finite_difference_in_window(self, pair, epsilon):
        n_i, n_f = truncation_asymmetric(epsilon, pair.r, pair.alpha, SetKind.SET2)
        t = np.linspace(-n_i * pair.sigma + pair.t_sep, n_f * pair.sigma, 41)
        fd = central_difference(pair, t)
        np.testing.assert_allclose(mixing_angle_rate(pair, t), fd, rtol=1e-6)

    @given(st.floats(0.5, 2.0), st.floats(-4.0, -0.2))
    @settings(max_examples=40, deadline=None)
    def test_maximum_at_crossing(self, alpha, r):
        pair = DrivePair(alpha * 1e8, 1e8, 30 * NS, r * 30 * NS)
        t_I = equal_amplitude_time(pair)
        t = np.linspace(t_I - 20 * pair.sigma, t_I + 20 * pair.sigma, 20001)
        k = int(np.argmax(mixing_angle_rate(pair, t)))
        assert abs(t[k] - t_I) <= t[1] - t[0]

    def test_nonnegative_for_counter_intuitive(self):
        pair = unequal_pair()
        t = np.linspace(-500, 500, 1001) * NS
        assert np.all(mixing_angle_rate(pair, t) >= 0)


class TestEffectiveArea:
    def test_equal_amplitudes_at_crossing(self):
        pair = DrivePair(1e8, 1e8, 30 * NS, -45 * NS)
        t_I = equal_amplitude_time(pair)
        assert effective_area(pair, t_I) == pytest.approx(math.sqrt(2) * envelope_at(pair, t_I)[0], rel=1e-15)

    def test_unequal_crossing_geometry(self):
        # at the crossing the combined amplitude is sqrt(2) times either drive
        pair = unequal_pair()
        t_I = equal_amplitude_time(pair)
        o01, o12 = envelope_at(pair, t_I)
        assert effective_area(pair, t_I) == pytest.approx(math.sqrt(o01**2 + o12**2), rel=1e-15)
        assert effective_area(pair, t_I) / o01 == pytest.approx(math.sqrt(2), rel=1e-12)

    def test_tails_decay(self):
        pair = unequal_pair()
        right = effective_area(pair, np.linspace(100, 600, 50) * NS)
        left = effective_area(pair, np.linspace(-600, -150, 50) * NS)
        assert np.all(np.diff(right) < 0) and np.all(np.diff(left) > 0)
        assert right[-1] < 1e-30 * pair.omega01_peak


class TestEqualAmplitudeTime:
    def test_symmetric(self):
        pair = DrivePair(2e8, 2e8, 30 * NS, -50 * NS)
        assert equal_amplitude_time(pair) == -25 * NS

    @pytest.mark.parametrize("t_sep_ns", [-70.0, -52.5])
    def test_against_bisection(self, t_sep_ns):
        pair = DrivePair.from_cyclic(44 * MHZ, 37 * MHZ, 35 * NS, t_sep_ns * NS)

        def gap(t):
            o01, o12 = envelope_at(pair, t)
            return o01 - o12

        oracle = bisect(gap, -300 * NS, 300 * NS)
        assert equal_amplitude_time(pair) == pytest.approx(oracle, rel=1e-10)

    def test_worked_value(self):
        pair = DrivePair.from_cyclic(44 * MHZ, 37 * MHZ, 35 * NS, -70 * NS)
        assert equal_amplitude_time(pair) / NS == pytest.approx(-35 - 17.5 * math.log(44 / 37), rel=1e-14)
        assert equal_amplitude_time(pair) / NS == pytest.approx(-38.03, abs=0.005)

    def test_rejects_zero_separation(self):
        with pytest.raises(ValueError):
            equal_amplitude_time(DrivePair(1.0, 2.0, 1.0, 0.0))

    @given(pairs)
    @settings(max_examples=100, deadline=None)
    def test_crossing_properties(self, pair):
        t_I = equal_amplitude_time(pair)
        o01, o12 = envelope_at(pair, t_I)
        assert abs(o01 - o12) <= 1e-12 * o01
        assert abs(mixing_angle(pair, t_I) - math.pi / 4) <= 1e-12


def test_intuitive_warning_is_not_raised_for_counter_intuitive_pair():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        unequal_pair()
