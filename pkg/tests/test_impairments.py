import math

import numpy as np
import pytest

from a2gchan import impairments as imp
from a2gchan.errors import InvalidParameterError, NumericFailure, WrongModelError
from a2gchan.impairments import Ideal, ImpairmentSet, SinusoidalNonstationary, WssGaussian
from a2gchan.wobbling import PointMass, Uniform

SIN = SinusoidalNonstationary(0.5, Uniform(5.0, 15.0))


def test_wss_acf_values():
    g = WssGaussian(2.0, 0.05)
    assert imp.acf(g, 0.0, 0.0) == 2.0
    assert imp.acf(g, 3.0, 0.05) == pytest.approx(2.0 * math.exp(-0.5), rel=1e-15)
    dt = np.linspace(0.0, 0.3, 31)
    a = imp.acf(g, 0.0, dt)
    np.testing.assert_array_equal(a, imp.acf(g, 0.0, -dt))
    assert np.all(np.abs(a) <= a[0])


def test_ideal_slots():
    assert imp.acf(Ideal(), 1.0, 0.3) == 1.0
    assert imp.acf(Ideal(), 1.0, 0.3, additive=True) == 0.0
    assert imp.power(Ideal()) == 1.0


def test_sinusoidal_acf_vanishes_at_origin():
    np.testing.assert_array_equal(imp.acf(SIN, 0.0, np.linspace(0, 0.2, 11)), 0.0)


def test_sinusoidal_power_point_mass():
    m = SinusoidalNonstationary(0.8, PointMass(4.0))
    assert imp.power(m, 1 / 32) == pytest.approx(0.4, rel=1e-14)


@pytest.mark.parametrize("model", [WssGaussian(1.3, 0.02), SIN, Ideal()])
def test_power_equals_zero_lag_acf(model):
    t = np.array([0.0, 0.013, 0.4])
    np.testing.assert_array_equal(imp.power(model, t), imp.acf(model, t, np.zeros(3)))
    assert np.isrealobj(imp.power(model, t))


def test_product_to_sum_routes_agree():
    t = np.array([0.0, 0.01, 0.07, 0.3])[:, None]
    dt = np.array([0.0, 0.004, 0.05, 0.2])[None, :]
    a = imp.acf(SIN, t, dt, method="closed")
    b = imp.acf(SIN, t, dt, method="quadrature")
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-10)


def test_delay_averaged_acf_against_direct_quadrature():
    from scipy.integrate import quad
    rho, tau0, t, dt = 2e7, 1e-6, 0.011, 0.003
    got = imp.delay_averaged_acf(SIN, t, dt, rho, tau0)
    direct = quad(lambda x: rho * math.exp(-rho * x) * imp.acf(SIN, t - tau0 - x, dt), 0, 40 / rho,
                  epsabs=1e-14, epsrel=1e-11)[0]
    assert got == pytest.approx(direct, rel=1e-8)
    assert imp.delay_averaged_acf(SIN, t, dt, math.inf, tau0) == pytest.approx(
        imp.acf(SIN, t - tau0, dt), rel=1e-10)


def test_slot_validation():
    with pytest.raises(InvalidParameterError):
        ImpairmentSet(eta_t=SIN)
    with pytest.raises(WrongModelError):
        ImpairmentSet(chi_t="wiener")
    with pytest.raises(WrongModelError):
        imp.distortion_from_dict({"kind": "wiener"})
    with pytest.raises(InvalidParameterError):
        WssGaussian(0.0, 0.1)
    with pytest.raises(InvalidParameterError):
        ImpairmentSet.from_dict({"chi_x": {"kind": "ideal"}})


def test_round_trip():
    s = ImpairmentSet(chi_t=SIN, chi_r=WssGaussian(1.0, math.inf), eta_r=WssGaussian(0.1, 0.01))
    assert ImpairmentSet.from_dict(s.to_dict()) == s
    assert not s.is_wss and ImpairmentSet().is_wss


def test_sample_ideal_and_sinusoidal_moment():
    rng = np.random.default_rng(1)
    grid = np.linspace(0, 0.1, 5)
    np.testing.assert_array_equal(imp.sample_process(Ideal(), grid, rng, 3), 1.0)
    np.testing.assert_array_equal(imp.sample_process(Ideal(), grid, rng, 3, additive=True), 0.0)
    amp_sq = np.abs(imp.sample_process(SinusoidalNonstationary(0.5, PointMass(10.0)),
                                       np.array([0.025]), rng, 100_000)[:, 0]) ** 2
    se = amp_sq.std(ddof=1) / math.sqrt(amp_sq.size)
    assert abs(amp_sq.mean() - 0.5) < 3 * se


def test_sample_wss_acf_at_length_scale():
    g = WssGaussian(1.5, 0.02)
    rng = np.random.default_rng(2)
    x = imp.sample_process(g, np.array([0.0, 0.02]), rng, 10_000)
    prod = np.conj(x[:, 0]) * x[:, 1]
    se = math.sqrt(prod.real.var(ddof=1) + prod.imag.var(ddof=1)) / math.sqrt(prod.size)
    assert abs(prod.mean() - 1.5 * math.exp(-0.5)) < 3 * se


def test_additive_samples_are_zero_mean():
    rng = np.random.default_rng(3)
    x = imp.sample_process(WssGaussian(1.0, 0.01), np.array([0.0, 0.5]), rng, 20_000, additive=True,
                           mean_offset=5.0)
    se = math.sqrt(x[:, 0].real.var() + x[:, 0].imag.var()) / math.sqrt(x.shape[0])
    assert abs(x[:, 0].mean()) < 3 * se


def test_mean_offset_shifts_multiplicative_acf():
    rng = np.random.default_rng(4)
    x = imp.sample_process(WssGaussian(1.0, 0.01), np.array([0.0]), rng, 20_000, mean_offset=1.0)
    assert abs(x.mean() - 1.0) < 0.03


def test_dense_grid_cholesky_uses_jitter_or_fails_cleanly():
    grid = np.linspace(0, 1e-3, 400)
    try:
        out = imp.sample_process(WssGaussian(1.0, 1.0), grid, np.random.default_rng(0), 2)
        assert np.isfinite(out).all()
    except NumericFailure as exc:
        assert "jitter" in str(exc)


def test_spectral_sampler_matches_kernel():
    g = WssGaussian(1.0, 0.01)
    rng = np.random.default_rng(5)
    fs, n, lag = 1000.0, 64, 7
    acc = []
    for _ in range(3000):
        x = imp.sample_wss_spectral(g, fs, n, [0.0, 0.0025], rng, oversample=4)
        acc.append([np.conj(x[0, 0]) * x[0, lag], np.conj(x[0, 0]) * x[1, 0]])
    acc = np.array(acc)
    se = np.sqrt(acc.real.var(axis=0) + acc.imag.var(axis=0)) / math.sqrt(len(acc))
    expect = [math.exp(-0.5 * (lag / fs / 0.01) ** 2), math.exp(-0.5 * (0.25) ** 2)]
    assert np.all(np.abs(acc.mean(axis=0) - expect) < 3 * se)
