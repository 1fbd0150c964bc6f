import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from a2gchan.errors import InvalidParameterError, WrongModelError
from a2gchan.mc_oracle import McConfig, estimate_g, estimate_increment_cf
from a2gchan.scenario import mpc_mean_powers
from a2gchan.wobbling import (NoWobble, PointMass, Sinusoidal, Uniform, Wiener, _k_amplitude,
                              g_function, g_nonsi, g_si, increment_cf, normalized_g_sum, phasor_factors,
                              sample_path, wobbling_from_dict)


def test_increment_cf_trivial_points(sin5, wiener):
    for model in (NoWobble(), wiener, sin5):
        assert increment_cf(model, 0.0, 0.3, 0.01) == 1.0
        assert increment_cf(model, 5.0, 0.3, 0.0) == 1.0
    assert increment_cf(Wiener(1.0), 1.0, 0.0, 2.0) == pytest.approx(math.exp(-1), rel=1e-15)


def test_increment_cf_bounded_and_even_for_wiener(wiener, sin5):
    half = np.linspace(0.0, 0.05, 21)
    dt = np.concatenate([-half[:0:-1], half])
    w = increment_cf(wiener, 30.0, 0.0, dt)
    np.testing.assert_array_equal(w, w[::-1])
    for model in (wiener, sin5):
        v = increment_cf(model, np.array([[0.0], [3.0], [30.0]]), 0.01, np.abs(dt)[None, :])
        assert np.all(np.abs(v) <= 1 + 1e-12)
        np.testing.assert_array_equal(v[0], 1.0)


@pytest.mark.parametrize("model_name,t,dt,angle", [
    ("wiener", 0.0, 2e-4, 0.35), ("wiener", 0.0, 1e-3, 1.0),
    ("sin", 0.0, 2e-3, 0.35), ("sin", 0.013, 5e-3, 0.0), ("sin", 0.1, 1e-2, 1.2),
])
def test_increment_cf_matches_mc(sc6, sin5, wiener, model_name, t, dt, angle):
    model = wiener if model_name == "wiener" else sin5
    omega = _k_amplitude(sc6) * math.cos(angle)
    est = estimate_increment_cf(model, angle, t, dt, sc6, McConfig(n_paths=100_000, seed=5))
    assert est.within(increment_cf(model, omega, t, dt))


def test_g_si_values_at_zero_lag(sc6, wiener):
    p1, p0 = mpc_mean_powers(sc6)
    assert g_si(1, 0.0, sc6, wiener) == p1
    assert g_si(0, 0.0, sc6, wiener) == pytest.approx(p0, rel=1e-15)
    assert g_si(3, 1e-3, sc6, NoWobble()) == p1


def test_g_si_real_positive_non_increasing(sc6, wiener):
    dt = np.geomspace(1e-6, 1e-1, 60)
    for i in (0, 1):
        g = np.asarray(g_si(i, dt, sc6, wiener))
        assert np.isrealobj(g) and np.all(g > 0)
        assert np.all(np.diff(g) <= 0)


def test_g_si_closed_los_form(sc6, wiener):
    dt = 3e-4
    k = _k_amplitude(sc6)
    expect = mpc_mean_powers(sc6)[1] * math.exp(-0.5 * k * k * math.cos(sc6.aod_los_rad) ** 2 * dt)
    assert g_si(0, dt, sc6, wiener) == pytest.approx(expect, rel=1e-14)


def test_model_guards(sc6, wiener, sin5):
    with pytest.raises(WrongModelError):
        g_si(1, 1e-3, sc6, sin5)
    with pytest.raises(WrongModelError):
        g_nonsi(1, 0.0, 1e-3, sc6, wiener)
    with pytest.raises(InvalidParameterError):
        g_si(21, 1e-3, sc6, wiener)


def test_g_nonsi_is_index_independent(sc6, sin5):
    vals = [g_nonsi(i, 0.0, 5e-4, sc6, sin5) for i in (1, 7, 20)]
    assert vals[0] == vals[1] == vals[2]


def test_g_nonsi_trivial_limits(sc6, sin5):
    p1, p0 = mpc_mean_powers(sc6)
    assert g_nonsi(1, 0.2, 0.0, sc6, sin5) == p1
    assert g_nonsi(0, 0.2, 0.0, sc6, sin5) == pytest.approx(p0, rel=1e-15)
    flat = Sinusoidal(0.0, Uniform(5.0, 25.0))
    assert g_nonsi(1, 0.03, 4e-3, sc6, flat) == pytest.approx(p1, rel=1e-12)


def test_g_nonsi_periodic_for_point_mass(sc6):
    model = Sinusoidal(math.radians(5.0), PointMass(8.0))
    t = np.array([0.0, 0.011, 0.04])
    for ti in t:
        a = g_nonsi(1, ti, 3e-3, sc6, model)
        b = g_nonsi(1, ti + 1 / 8.0, 3e-3, sc6, model)
        c = g_nonsi(1, ti + 3 / 8.0, 3e-3, sc6, model)
        assert b == pytest.approx(a, rel=1e-8) and c == pytest.approx(a, rel=1e-8)


@pytest.mark.parametrize("i,t,dt", [(1, 0.0, 1e-4), (1, 0.0, 5e-4), (0, 0.0, 5e-4)])
def test_g_si_matches_mc(sc6, wiener, i, t, dt):
    est = estimate_g(i, t, dt, sc6, wiener, McConfig(n_paths=100_000, seed=21))
    assert est.within(g_si(i, dt, sc6, wiener))


@pytest.mark.parametrize("i,t,dt", [(1, 0.0, 5e-4), (1, 0.02, 4e-3), (0, 0.0, 3e-3)])
def test_g_nonsi_matches_mc(sc6, sin5, i, t, dt):
    est = estimate_g(i, t, dt, sc6, sin5, McConfig(n_paths=100_000, seed=22))
    assert est.within(g_nonsi(i, t, dt, sc6, sin5))


def test_normalized_sum_is_one_at_zero_lag(sc6, wiener, sin5):
    for model in (NoWobble(), wiener, sin5):
        assert normalized_g_sum(0.0, np.zeros(1), sc6, model)[0] == 1.0
    los, nlos = phasor_factors(0.0, np.array([1e-3]), sc6.replace(k_factor=math.inf), wiener)
    assert np.isfinite(los).all() and np.isfinite(nlos).all()


def test_g_function_dispatch(sc6, wiener, sin5):
    assert g_function(1, 0.0, 2e-4, sc6, wiener) == g_si(1, 2e-4, sc6, wiener)
    assert g_function(1, 0.0, 2e-4, sc6, sin5) == g_nonsi(1, 0.0, 2e-4, sc6, sin5)


def test_sample_path_laws(sin5):
    rng = np.random.default_rng(0)
    grid = np.linspace(0.0, 1.0, 11)
    assert not sample_path(NoWobble(), grid, rng).any()
    s = sample_path(sin5, grid, rng, 1000)
    assert s.shape == (1000, 11) and np.all(np.abs(s) <= sin5.theta_max_rad)
    assert np.all(s[:, 0] == 0)
    w = sample_path(Wiener(2.0), np.array([0.0, 0.5, 1.0]), rng, 100_000)[:, -1]
    se = math.sqrt(2.0) * 2.0 / math.sqrt(w.size)  # sd of the sample variance for a Gaussian
    assert abs(w.var() - 2.0) < 3 * se


def test_sample_path_grid_validation(wiener):
    rng = np.random.default_rng(0)
    with pytest.raises(InvalidParameterError):
        sample_path(wiener, np.array([]), rng)
    with pytest.raises(InvalidParameterError):
        sample_path(wiener, np.array([0.1, 0.2]), rng)


def test_model_validation_and_round_trip(sin5):
    with pytest.raises(InvalidParameterError):
        Wiener(0.0)
    with pytest.raises(InvalidParameterError):
        Uniform(25.0, 5.0)
    with pytest.raises(InvalidParameterError):
        Sinusoidal(-0.1, Uniform(5.0, 25.0))
    for m in (NoWobble(), Wiener(0.3), sin5, Sinusoidal(0.1, PointMass(7.0))):
        assert wobbling_from_dict(m.to_dict()) == m


def test_uniform_closed_form_moments():
    u = Uniform(5.0, 25.0)
    x = np.array([0.0, 0.013, 0.1])
    q = np.linspace(5.0, 25.0, 200001)
    for fn, closed in ((np.cos, u.expect_cos), (np.sin, u.expect_sin)):
        direct = trapezoid(fn(2 * np.pi * q[None, :] * x[:, None]), q, axis=1) / 20.0
        np.testing.assert_allclose(closed(x), direct, atol=1e-9)
