import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minkolab.errors import DomainError, InsufficientHistoryError, OutOfRangeError
from minkolab.minkowski import (Worldline, boost, circular_worldline, four_velocity, four_vector,
                                hyperbolic_position, hyperbolic_worldline, interpolate, is_lorentz,
                                lightcone_intersection, load_worldline, minkowski_dot,
                                proper_time_along, save_worldline, uniform_worldline,
                                worldline_from_records, worldline_to_records)

finite = st.floats(-50, 50, allow_nan=False)
speeds = st.floats(-0.99, 0.99)


def vectors():
    return st.tuples(finite, finite, finite, finite).map(np.array)


class TestDot:
    def test_unit_time(self):
        t = four_vector(t=1.0)
        assert minkowski_dot(t, t) == 1.0

    def test_null(self):
        n = four_vector(x=1.0, t=1.0)
        assert minkowski_dot(n, n) == 0.0

    def test_axes_orthogonal(self):
        assert minkowski_dot(four_vector(x=1.0), four_vector(t=1.0)) == 0.0

    def test_signature(self):
        assert minkowski_dot(four_vector(x=1, y=2, z=3, t=4), four_vector(x=1, y=1, z=1, t=1)) == -2

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            four_vector(x=np.inf)


class TestBoost:
    def test_zero_is_identity(self):
        assert np.array_equal(boost(0.0), np.eye(4))

    def test_event_at_six_tenths(self):
        e = boost(0.6) @ four_vector(x=1.0, t=0.0)
        assert e[1] == pytest.approx(1.25, abs=1e-15)
        assert e[0] == pytest.approx(-0.75, abs=1e-15)

    def test_composition_adds_velocities(self):
        assert np.allclose(boost(0.5) @ boost(0.5), boost(0.8), atol=1e-15, rtol=0)

    @pytest.mark.parametrize("beta", [1.0, -1.0, 1.5])
    def test_superluminal(self, beta):
        with pytest.raises(DomainError):
            boost(beta)

    @pytest.mark.parametrize("axis", ["x", "y", "z"])
    def test_each_axis_is_lorentz(self, axis):
        assert is_lorentz(boost(0.7, axis))

    @given(speeds, vectors(), vectors())
    def test_preserves_metric(self, beta, u, v):
        m = boost(beta)
        scale = 1.0 + np.abs(u).max() * np.abs(v).max()
        assert abs(minkowski_dot(m @ u, m @ v) - minkowski_dot(u, v)) <= 1e-12 * scale * 100

    @given(speeds)
    def test_unit_determinant(self, beta):
        assert abs(np.linalg.det(boost(beta)) - 1.0) < 1e-12


@given(st.tuples(st.floats(-0.57, 0.57), st.floats(-0.57, 0.57), st.floats(-0.57, 0.57)))
def test_four_velocity_normalized(beta):
    u = four_velocity(np.array(beta))
    assert abs(minkowski_dot(u, u) - 1.0) < 1e-12
    assert u[0] >= 1.0


class TestWorldlineValidation:
    def test_decreasing_tau_rejected(self):
        with pytest.raises(ValueError):
            Worldline([0, -1], [[0, 0, 0, 0], [1, 0, 0, 0]], [[1, 0, 0, 0]] * 2)

    def test_spacelike_steps_rejected(self):
        with pytest.raises(ValueError):
            Worldline([0, 1], [[0, 0, 0, 0], [1, 2, 0, 0]], [[1, 0, 0, 0]] * 2)

    def test_repeated_knot_must_join(self):
        with pytest.raises(ValueError):
            Worldline([0, 1, 1], [[0, 0, 0, 0], [1, 0, 0, 0], [1.1, 0, 0, 0]], [[1, 0, 0, 0]] * 3)

    def test_bad_order(self):
        with pytest.raises(ValueError):
            Worldline([0, 1], [[0, 0, 0, 0], [1, 0, 0, 0]], [[1, 0, 0, 0]] * 2, order=4)


class TestProperTime:
    def test_rest(self):
        w = uniform_worldline(tau_start=0.0, tau_end=7.0, spacing=0.5)
        assert proper_time_along(w, 0.0, 7.0) == pytest.approx(7.0, abs=1e-12)

    def test_moving_at_six_tenths(self):
        # coordinate duration 5 at gamma = 1.25
        w = uniform_worldline(beta=0.6, tau_start=0.0, tau_end=4.0, spacing=0.25)
        t_end = w.position[-1, 0]
        assert t_end == pytest.approx(5.0, abs=1e-12)
        assert proper_time_along(w, 0.0, 4.0) == pytest.approx(4.0, abs=1e-12)

    def test_zero_span(self):
        w = hyperbolic_worldline(0.5, -1.0, 1.0, 0.1)
        assert proper_time_along(w, 0.3, 0.3) == 0.0

    def test_reversed_bounds_are_signed(self):
        w = hyperbolic_worldline(0.5, -1.0, 1.0, 0.1, order=5)
        assert proper_time_along(w, 0.8, -0.2) == pytest.approx(-1.0, abs=1e-9)

    def test_self_consistent_on_curved_path(self):
        w = circular_worldline(2.0, 0.3, 0.0, 10.0, 0.05)
        assert proper_time_along(w, 1.0, 9.0) == pytest.approx(8.0, abs=1e-9)

    def test_out_of_range(self):
        w = uniform_worldline(tau_start=0.0, tau_end=1.0)
        with pytest.raises(OutOfRangeError):
            proper_time_along(w, 0.0, 2.0)


class TestInterpolate:
    def test_knot_returns_sample(self):
        w = hyperbolic_worldline(0.7, -1.0, 1.0, 0.1)
        s = interpolate(w, w.tau[5])
        assert np.array_equal(s.position, w.position[5])
        assert np.allclose(s.velocity, w.velocity[5], atol=1e-15)

    def test_uniform_is_linear(self):
        w = uniform_worldline((1.0, 2.0, 3.0), [0.3, -0.2, 0.1], -2.0, 2.0, 0.5)
        u = four_velocity(np.array([0.3, -0.2, 0.1]))
        for tau in (-1.9, -0.33, 0.7, 1.99):
            s = interpolate(w, tau)
            assert np.allclose(s.position, [0.0, 1.0, 2.0, 3.0] + tau * u, atol=1e-13)
            assert np.allclose(s.velocity, u, atol=1e-14)

    @pytest.mark.parametrize("order, tol", [(3, 1e-8), (5, 1e-12)])
    def test_hyperbolic_midsegment(self, order, tol):
        accel = 1.3
        w = hyperbolic_worldline(accel, -2.0, 2.0, 0.01, order=order)
        mids = 0.5 * (w.tau[:-1] + w.tau[1:])
        err = max(np.abs(interpolate(w, t).position - hyperbolic_position(accel, t)).max()
                  for t in mids[::7])
        assert err < tol

    def test_never_extrapolates(self):
        w = uniform_worldline(tau_start=0.0, tau_end=1.0)
        with pytest.raises(OutOfRangeError):
            interpolate(w, 1.0 + 1e-9)

    @given(st.floats(-1.99, 1.99))
    def test_sample_invariants(self, tau):
        s = interpolate(hyperbolic_worldline(0.9, -2.0, 2.0, 0.05), tau)
        assert abs(minkowski_dot(s.velocity, s.velocity) - 1.0) < 1e-9
        assert abs(minkowski_dot(s.velocity, s.acceleration)) < 1e-9
        assert s.velocity[0] > 0

    def test_repeated_knot_gives_right_limit(self):
        pos = [[0, 0, 0, 0], [1, 0, 0, 0], [1, 0, 0, 0], [2, 0, 0, 0]]
        acc = [[0, 0, 0, 0], [0, 0.1, 0, 0], [0, -0.1, 0, 0], [0, 0, 0, 0]]
        w = Worldline([0, 1, 1, 2], pos, [[1, 0, 0, 0]] * 4, acc, order=5)
        assert interpolate(w, 1.0).acceleration[1] == pytest.approx(-0.1)

    def test_numerical_derivative_orthogonal(self):
        # differentiate the normalized velocity by central differences
        w = circular_worldline(1.5, 0.4, 0.0, 20.0, 0.05)
        h = 1e-5
        for tau in (3.3, 7.1, 12.9):
            v = interpolate(w, tau).velocity
            a = (interpolate(w, tau + h).velocity - interpolate(w, tau - h).velocity) / (2 * h)
            assert abs(minkowski_dot(v, a)) < 1e-7


def _bisect(f, a, b, tol=1e-13):
    fa = f(a)
    while b - a > tol:
        m = 0.5 * (a + b)
        if (f(m) > 0) == (fa > 0):
            a, fa = m, f(m)
        else:
            b = m
    return 0.5 * (a + b)


class TestLightcone:
    def test_static_retarded(self):
        w = uniform_worldline(tau_start=-50.0, tau_end=50.0, spacing=0.5)
        tau = lightcone_intersection(w, four_vector(x=4.0, t=11.0))
        assert tau == pytest.approx(7.0, abs=1e-12)

    def test_static_advanced(self):
        w = uniform_worldline(tau_start=-50.0, tau_end=50.0, spacing=0.5)
        tau = lightcone_intersection(w, four_vector(x=4.0, t=11.0), "advanced")
        assert tau == pytest.approx(15.0, abs=1e-12)

    def test_event_on_worldline(self):
        w = uniform_worldline(tau_start=-5.0, tau_end=5.0, spacing=0.5)
        assert lightcone_intersection(w, four_vector(t=2.25)) == pytest.approx(2.25, abs=1e-14)

    def test_moving_against_bisection_oracle(self):
        beta = 0.5
        g = 1 / np.sqrt(1 - beta ** 2)
        w = uniform_worldline(beta=beta, tau_start=-40.0, tau_end=10.0, spacing=0.5)
        event = four_vector(x=10.0, t=0.0)

        def gap(tau):  # exact straight line, past sheet
            return (event[0] - g * tau) - abs(event[1] - g * beta * tau)

        oracle = _bisect(gap, -40.0, 0.0)
        tau = lightcone_intersection(w, event)
        assert tau == pytest.approx(oracle, abs=1e-10)
        assert tau == pytest.approx(-20.0 / g, abs=1e-12)
        sep = event - interpolate(w, tau).position
        assert abs(minkowski_dot(sep, sep)) < 1e-10
        assert sep[0] > 0

    def test_insufficient_history(self):
        w = uniform_worldline(tau_start=-5.0, tau_end=5.0, spacing=0.5)
        with pytest.raises(InsufficientHistoryError):
            lightcone_intersection(w, four_vector(x=10.0, t=0.0))
        with pytest.raises(InsufficientHistoryError):
            lightcone_intersection(w, four_vector(x=10.0, t=0.0), "advanced")

    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-5, 5))
    def test_residual_and_past(self, x, y, z, t):
        w = circular_worldline(1.0, 0.5, -30.0, 30.0, 0.1)
        event = four_vector(x=x, y=y, z=z, t=t)
        tau = lightcone_intersection(w, event)
        sep = event - interpolate(w, tau).position
        assert abs(minkowski_dot(sep, sep)) < 1e-10
        assert sep[0] >= 0


class TestSerialization:
    def test_round_trip(self, tmp_path):
        w = circular_worldline(1.0, 0.2, 0.0, 2.0, 0.1)
        path = tmp_path / "w.json"
        save_worldline(w, path)
        records = json.loads(path.read_text())
        assert set(records[0]) == {"tau", "x", "y", "z", "t", "vx", "vy", "vz", "vt"}
        back = load_worldline(path)
        assert np.array_equal(back.position, w.position)
        assert np.array_equal(back.velocity, w.velocity)
        # accelerations are rebuilt by differentiation and projected off the velocity
        assert np.allclose(back.acceleration, w.acceleration, atol=5e-3)
        assert np.abs(minkowski_dot(back.acceleration, back.velocity)).max() < 1e-12

    def test_explicit_accelerations(self):
        w = circular_worldline(1.0, 0.2, 0.0, 1.0, 0.1)
        recs = worldline_to_records(w)
        for r, a in zip(recs, w.acceleration):
            r.update(at=a[0], ax=a[1], ay=a[2], az=a[3])
        assert np.array_equal(worldline_from_records(recs, order=5).acceleration, w.acceleration)
