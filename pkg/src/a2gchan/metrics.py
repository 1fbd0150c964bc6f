"""Analytic channel metrics: ACFs, PDP, delay spreads, coherence time and bandwidth.

Absolute quantities carry the total NLoS power ``N P_alpha1`` and the LoS
power ``N K P_alpha1``, where ``P_alpha1`` is the exact Laplacian mean power
returned by :func:`~a2gchan.scenario.mpc_mean_powers`.  Normalised
quantities are written in terms of the LoS/NLoS power fractions so that a
pure line-of-sight link (``K = inf``) is handled without overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import impairments as imp
from .curves import CoherenceResult, MetricCurve, digest
from .errors import InvalidParameterError, NumericFailure, WrongModelError
from .impairments import ImpairmentSet, SinusoidalNonstationary, WssGaussian
from .numerics import Crossing, QuadratureSpec, SearchSpec, first_crossing, integrate
from .scenario import Atom, Scenario, ThresholdSpec, los_nlos_weights, mpc_mean_powers, wavelength
from .wobbling import NoWobble, Wiener, WobblingModel, phasor_factors

__all__ = [
    "DelayProfile",
    "channel_acf",
    "pdp",
    "delay_spreads",
    "acf_time",
    "coherence_time",
    "los_coherence_time",
    "acf_freq",
    "coherence_bandwidth",
    "TIME_SEARCH",
    "BANDWIDTH_SEARCH",
    "pdp_curve",
    "acf_time_curve",
    "acf_freq_curve",
]

TIME_SEARCH = SearchSpec(x_min=1e-7, x_max=10.0)
BANDWIDTH_SEARCH = SearchSpec(x_min=1e3, x_max=1e12)
_MOMENT_SPEC = QuadratureSpec(rel_tol=1e-13, abs_tol=1e-300)


@dataclass(frozen=True)
class DelayProfile:
    """A delay-domain quantity: continuous density over ``tau`` plus the LoS atom."""

    tau: np.ndarray
    density: np.ndarray
    atom: Atom


def _require_finite_k(scenario: Scenario, what: str):
    if math.isinf(scenario.k_factor):
        raise InvalidParameterError(f"{what} is an absolute power and needs a finite K factor")


def _nlos_density_sum(tau, scenario: Scenario):
    """``sum_i rho_i exp(-rho_i (tau - tau0)) 1(tau >= tau0)``."""
    x = np.asarray(tau, float)[..., None] - scenario.uav_ue_delay_s
    rho = scenario.rho
    return np.where(x >= 0, rho * np.exp(-rho * np.maximum(x, 0.0)), 0.0).sum(axis=-1)


def _delay_profile(tau, t, dt, los, g1, scenario, impairments):
    # shared by channel_acf and pdp so that dt = 0 agrees bit-for-bit
    tau = np.atleast_1d(np.asarray(tau, float))
    if np.any(tau < 0):
        raise InvalidParameterError("delays must be non-negative")
    p0 = mpc_mean_powers(scenario)[1]
    tau0 = scenario.uav_ue_delay_s
    a_r = imp.acf(impairments.chi_r, t, dt)
    a_t = imp.acf(impairments.chi_t, t - tau, dt)
    a_t0 = imp.acf(impairments.chi_t, t - tau0, dt)
    dens = a_r * g1 * a_t * _nlos_density_sum(tau, scenario)
    weight = a_r * (p0 * los) * a_t0
    return DelayProfile(tau, np.asarray(dens, complex), Atom(tau0, complex(weight)))


def channel_acf(tau, t, dt, scenario: Scenario, wobbling: WobblingModel,
                impairments: ImpairmentSet, spec: QuadratureSpec | None = None) -> DelayProfile:
    """Channel ACF ``A_c(tau; t, dt)`` with the LoS term as an atom at ``tau0``.

    One routine covers the nonstationary, WSS and WSS-SI cases: the
    stationary ones are the special cases in which the impairment ACFs
    ignore ``t`` and, for Wiener wobbling, the G-functions ignore ``t``.
    """
    _require_finite_k(scenario, "the channel ACF")
    dt = float(dt)
    los, nlos = phasor_factors(t, np.array([dt]), scenario, wobbling, spec)
    p1 = mpc_mean_powers(scenario)[0]
    g1 = p1 if dt == 0 else p1 * nlos[0]
    return _delay_profile(tau, float(t), dt, float(los[0]) if dt else 1.0, g1, scenario, impairments)


def pdp(tau, t, scenario: Scenario, impairments: ImpairmentSet) -> DelayProfile:
    """Power delay profile; wobbling plays no role."""
    _require_finite_k(scenario, "the PDP")
    p1 = mpc_mean_powers(scenario)[0]
    return _delay_profile(tau, float(t), 0.0, 1.0, p1, scenario, impairments)


def pdp_total_power(scenario: Scenario, impairments: ImpairmentSet) -> float:
    """Closed-form ``int PDP`` for WSS transmit distortion: ``P_a1 P_chiR P_chiT N (K+1)``."""
    _require_finite_k(scenario, "the PDP")
    p1 = mpc_mean_powers(scenario)[0]
    return p1 * imp.power(impairments.chi_r) * imp.power(impairments.chi_t) \
        * scenario.n_mpc * (scenario.k_factor + 1.0)


# -- delay spreads -------------------------------------------------------------

def _closed_spreads(scenario: Scenario):
    if math.isinf(scenario.k_factor):
        return scenario.uav_ue_delay_s, 0.0
    n, k = scenario.n_mpc, scenario.k_factor
    inv = 1.0 / scenario.rho
    norm = n * (k + 1.0)
    mean_excess = inv.sum() / norm
    var = 2.0 * (inv**2).sum() / norm - mean_excess**2
    return scenario.uav_ue_delay_s + mean_excess, math.sqrt(max(var, 0.0))


def _quadrature_spreads(scenario: Scenario, impairments: ImpairmentSet, t: float):
    tau0 = scenario.uav_ue_delay_s
    rho = scenario.rho
    w_los, w_nlos = los_nlos_weights(scenario)
    w_nlos /= scenario.n_mpc
    chi = impairments.chi_t

    def excess_moments(order, centre):
        # int_0^inf e^{-x} (tau - centre)^order P_chiT(t - tau) dx, tau = tau0 + x/rho_i
        def fn(x):
            tau = tau0 + x[None, :] / rho[:, None]
            return np.exp(-x)[None, :] * (tau - centre) ** order * imp.power(chi, t - tau)
        return integrate(fn, 0.0, math.inf, _MOMENT_SPEC, scale=1.0).value

    p_los = imp.power(chi, t - tau0)
    mass = w_los * p_los + w_nlos * excess_moments(0, 0.0).sum()
    if mass <= 0:
        raise NumericFailure("PDP vanishes at this evaluation time; delay spreads undefined",
                             achieved=None, t=t)
    # first moment about tau0 keeps full relative precision on the excess delay
    m1 = (w_nlos * excess_moments(1, tau0).sum()) / mass
    mean = tau0 + m1
    m2 = (w_los * p_los * (tau0 - mean) ** 2 + w_nlos * excess_moments(2, mean).sum()) / mass
    return mean, math.sqrt(max(m2, 0.0))


def delay_spreads(scenario: Scenario, impairments: ImpairmentSet | None = None,
                  t: float | None = None, method: str = "auto") -> tuple[float, float]:
    """Mean and rms delay spread ``(mu, sigma)`` in seconds.

    ``method="closed"`` uses the WSS closed forms, ``"quadrature"``
    integrates the PDP moments directly, and ``"auto"`` picks the closed
    form unless the transmit distortion is nonstationary (then ``t`` is
    required).
    """
    impairments = impairments or ImpairmentSet()
    nonst = isinstance(impairments.chi_t, SinusoidalNonstationary)
    if method == "auto":
        method = "quadrature" if nonst else "closed"
    if method == "closed":
        if nonst:
            raise WrongModelError("closed-form delay spreads need a WSS transmit distortion")
        return _closed_spreads(scenario)
    if method == "quadrature":
        if nonst and t is None:
            raise InvalidParameterError("nonstationary delay spreads need an evaluation time t")
        if math.isinf(scenario.k_factor):
            return scenario.uav_ue_delay_s, 0.0
        return _quadrature_spreads(scenario, impairments, 0.0 if t is None else float(t))
    raise InvalidParameterError(f"unknown delay-spread method {method!r}")


# -- coherence time -----------------------------------------------------------

def _acf_time_fractions(t, dt, scenario, wobbling, impairments, spec):
    """ACF at df = 0 divided by ``N (K+1) P_alpha1``; also returns the dt = 0 value."""
    dt = np.atleast_1d(np.asarray(dt, float))
    tau0 = scenario.uav_ue_delay_s
    w_los, w_nlos = los_nlos_weights(scenario)
    los, nlos = phasor_factors(t, dt, scenario, wobbling, spec)
    chi_t = impairments.chi_t
    a_r = imp.acf(impairments.chi_r, t, dt)
    a_t_los = imp.delay_averaged_acf(chi_t, t, dt, math.inf, tau0, spec=spec)
    a_t_nlos = imp.delay_averaged_acf(chi_t, t, dt[:, None], scenario.rho[None, :], tau0,
                                      spec=spec).mean(axis=-1)
    value = a_r * (w_los * los * a_t_los + w_nlos * nlos * a_t_nlos)
    zero = np.zeros(1)
    p_r = imp.acf(impairments.chi_r, t, zero)
    p_t_los = imp.delay_averaged_acf(chi_t, t, zero, math.inf, tau0, spec=spec)
    p_t_nlos = imp.delay_averaged_acf(chi_t, t, zero[:, None], scenario.rho[None, :], tau0,
                                      spec=spec).mean(axis=-1)
    peak = float((p_r * (w_los * p_t_los + w_nlos * p_t_nlos))[0])
    return value, peak


def acf_time(t, dt, scenario: Scenario, wobbling: WobblingModel, impairments: ImpairmentSet,
             *, normalized: bool = False, spec: QuadratureSpec | None = None):
    """Frequency-integrated channel ACF ``A_C(t, dt)`` (the ``df = 0`` slice).

    With WSS impairments this is ``A_chiR(dt) A_chiT(dt) (G_0 + N G_1)``;
    a sinusoidal transmit distortion is averaged against every delay law.
    ``normalized=True`` divides by the ``dt = 0`` value.
    """
    value, peak = _acf_time_fractions(float(t), dt, scenario, wobbling, impairments, spec)
    if normalized:
        if peak == 0:
            raise NumericFailure("channel power vanishes at this evaluation time", achieved=None, t=t)
        out = value / peak
    else:
        _require_finite_k(scenario, "the unnormalised ACF")
        out = value * scenario.n_mpc * (scenario.k_factor + 1.0) * mpc_mean_powers(scenario)[0]
    out = np.asarray(out)
    return out.item() if np.ndim(dt) == 0 else out


def _coherence_from_crossing(kind, cr: Crossing, threshold, norm, t):
    if cr.is_infinite:
        warnings.warn(f"no {kind} threshold crossing below the search ceiling; reporting inf",
                      RuntimeWarning, stacklevel=3)
    return CoherenceResult(kind, cr.location, threshold, norm, cr.resolution, t, cr.bracket)


def coherence_time(t, scenario: Scenario, wobbling: WobblingModel, impairments: ImpairmentSet,
                   thresholds: ThresholdSpec | None = None, search: SearchSpec | None = None,
                   spec: QuadratureSpec | None = None) -> CoherenceResult:
    """Smallest lag at which the normalised ``|A_C(t, dt)|`` reaches ``gamma_T``.

    The normalisation is the zero-lag value.  Returns ``inf`` when no
    crossing occurs below the search ceiling (10 s by default).
    """
    thresholds = thresholds or ThresholdSpec()
    search = search or TIME_SEARCH
    t = 0.0 if t is None else float(t)
    _, peak = _acf_time_fractions(t, np.zeros(1), scenario, wobbling, impairments, spec)
    if peak == 0:
        raise NumericFailure("channel power vanishes at this evaluation time", achieved=None, t=t)

    def curve(dt):
        return np.abs(_acf_time_fractions(t, dt, scenario, wobbling, impairments, spec)[0]) / peak

    cr = first_crossing(curve, thresholds.gamma_t, search)
    norm = peak
    if not math.isinf(scenario.k_factor):
        norm = peak * scenario.n_mpc * (scenario.k_factor + 1.0) * mpc_mean_powers(scenario)[0]
    return _coherence_from_crossing("time", cr, thresholds.gamma_t, norm, t)


def _inverse_sq_length(model) -> float:
    if isinstance(model, WssGaussian):
        return 0.0 if math.isinf(model.length_scale_s) else model.length_scale_s ** -2
    if isinstance(model, imp.Ideal):
        return 0.0
    raise WrongModelError("the line-of-sight closed form needs WSS or ideal multiplicative distortion")


def los_coherence_time(scenario: Scenario, wobbling: WobblingModel, impairments: ImpairmentSet,
                       gamma_t: float) -> float:
    """Closed-form coherence time of a pure LoS link under Wiener wobbling.

    Solves ``exp(-c dt^2 / 2 - a dt) = gamma_T`` with
    ``a = (2 pi^2 / lambda^2) y_D^2 cos^2(w0) b`` and ``c = l_R^-2 + l_T^-2``.
    """
    if not 0 < gamma_t < 1:
        raise InvalidParameterError("gamma_t must lie in (0, 1)")
    if isinstance(wobbling, Wiener):
        b = wobbling.b
    elif isinstance(wobbling, NoWobble):
        b = 0.0
    else:
        raise WrongModelError("the line-of-sight closed form needs Wiener (or no) wobbling")
    lam = wavelength(scenario)
    a = 2 * math.pi**2 / lam**2 * scenario.antenna_offset_m**2 \
        * math.cos(scenario.aod_los_rad) ** 2 * b
    c = _inverse_sq_length(impairments.chi_r) + _inverse_sq_length(impairments.chi_t)
    lg = math.log(gamma_t)
    if c == 0:
        return math.inf if a == 0 else -lg / a
    return (math.sqrt(a * a - 2 * c * lg) - a) / c


# -- coherence bandwidth --------------------------------------------------------

def _sin_sq_mean(freq_dist, s):
    """``E[sin^2(2 pi Q s)]``."""
    return 0.5 * (1.0 - freq_dist.expect_cos(2.0 * np.asarray(s, float)))


def _h_nlos(df, t, scenario, chi_t: SinusoidalNonstationary, spec):
    """``mean_i H_i(df; t)``, the delay-weighted transmit power without cancellation."""
    df = np.atleast_1d(np.asarray(df, float))
    rho = scenario.rho
    s = float(t) - scenario.uav_ue_delay_s
    z = (rho[None, :] + 2j * np.pi * df[:, None])[..., None]
    r = rho[None, :, None]

    def fn(q):
        w = 4 * np.pi * q
        x = w * s
        num = 2 * z * z * np.sin(0.5 * x) ** 2 - w * z * np.sin(x) + w * w
        return 0.5 * r * num / (z * (z * z + w * w))

    fd = chi_t.freq_dist
    span = getattr(fd, "high_hz", 0.0) - getattr(fd, "low_hz", 0.0)
    vals = np.asarray(fd.expectation(fn, spec, cycles=2 * span * abs(s)))
    return vals.reshape(df.size, rho.size).mean(axis=-1)


def _acf_freq_fraction(df, t, scenario, impairments, spec):
    """Pre-normalisation kernel divided by ``N (K+1)``."""
    df = np.atleast_1d(np.asarray(df, float))
    w_los, w_nlos = los_nlos_weights(scenario)
    ramp = np.exp(-2j * np.pi * df * scenario.uav_ue_delay_s)
    chi_t = impairments.chi_t
    if isinstance(chi_t, SinusoidalNonstationary):
        if t is None:
            raise InvalidParameterError("nonstationary coherence bandwidth needs an evaluation time t")
        h0 = _sin_sq_mean(chi_t.freq_dist, float(t) - scenario.uav_ue_delay_s)
        inner = w_los * h0 + w_nlos * _h_nlos(df, t, scenario, chi_t, spec)
    else:
        rho = scenario.rho
        inner = w_los + w_nlos * (rho[None, :] / (rho[None, :] + 2j * np.pi * df[:, None])).mean(axis=-1)
    return ramp * inner


def acf_freq(df, t, scenario: Scenario, impairments: ImpairmentSet, *, normalized: bool = False,
             spec: QuadratureSpec | None = None):
    """Delay-transformed channel ACF at ``dt = 0``, without the power prefactors.

    WSS transmit distortion: ``e^{-j 2 pi df tau0} [N K + sum_i rho_i/(rho_i + j 2 pi df)]``.
    Sinusoidal transmit distortion: ``e^{-j 2 pi df tau0} [H_0(t) + sum_i H_i(df; t)]``.
    ``normalized=True`` divides by the ``df = 0`` value.
    """
    frac = _acf_freq_fraction(df, t, scenario, impairments, spec)
    if normalized:
        peak = _acf_freq_fraction(np.zeros(1), t, scenario, impairments, spec)[0].real
        if peak == 0:
            raise NumericFailure("channel power vanishes at this evaluation time", achieved=None, t=t)
        out = frac / peak
    else:
        _require_finite_k(scenario, "the unnormalised frequency ACF")
        out = frac * scenario.n_mpc * (scenario.k_factor + 1.0)
    return out.item() if np.ndim(df) == 0 else out


def coherence_bandwidth(t, scenario: Scenario, impairments: ImpairmentSet,
                        thresholds: ThresholdSpec | None = None, search: SearchSpec | None = None,
                        spec: QuadratureSpec | None = None) -> CoherenceResult:
    """Smallest frequency lag at which the normalised ``|A_C(df; t)|`` reaches ``gamma_B``.

    ``t`` is required when the transmit distortion is nonstationary and
    ignored otherwise.  The WSS kernel decreases to ``K/(K+1)``, so
    ``gamma_B <= K/(K+1)`` (and any ``gamma_B`` for ``K = inf``) is ``inf``.
    """
    thresholds = thresholds or ThresholdSpec()
    search = search or BANDWIDTH_SEARCH
    gamma = thresholds.gamma_b
    nonst = isinstance(impairments.chi_t, SinusoidalNonstationary)
    t_eval = None if t is None else float(t)
    if nonst and t_eval is None:
        raise InvalidParameterError("nonstationary coherence bandwidth needs an evaluation time t")
    k = scenario.k_factor
    if math.isinf(k) or (not nonst and gamma <= k / (k + 1.0)):
        return CoherenceResult("bandwidth", math.inf, gamma, 1.0, math.nan, t_eval, None)
    peak = _acf_freq_fraction(np.zeros(1), t_eval, scenario, impairments, spec)[0].real
    if peak == 0:
        raise NumericFailure("channel power vanishes at this evaluation time", achieved=None, t=t)

    def curve(df):
        return np.abs(_acf_freq_fraction(df, t_eval, scenario, impairments, spec)) / peak

    cr = first_crossing(curve, gamma, search)
    return _coherence_from_crossing("bandwidth", cr, gamma, peak * scenario.n_mpc * (k + 1.0), t_eval)


# -- curve builders -------------------------------------------------------------

def _meta(scenario, **extra):
    m = {"scenario_digest": scenario.digest()}
    m.update({k: (v.to_dict() if hasattr(v, "to_dict") else v) for k, v in extra.items()})
    m["digest"] = digest(m)
    return m


def pdp_curve(tau, t, scenario: Scenario, impairments: ImpairmentSet) -> MetricCurve:
    prof = pdp(tau, t, scenario, impairments)
    return MetricCurve("tau_s", prof.tau, prof.density, (prof.atom,),
                       _meta(scenario, impairments=impairments, t=t, metric="pdp"))


def acf_time_curve(t, dt, scenario, wobbling, impairments, normalized=True, spec=None) -> MetricCurve:
    vals = acf_time(t, np.asarray(dt, float), scenario, wobbling, impairments,
                    normalized=normalized, spec=spec)
    return MetricCurve("dt_s", dt, vals, (), _meta(scenario, wobbling=wobbling, impairments=impairments,
                                                  t=t, normalized=normalized, metric="acf_time"))


def acf_freq_curve(df, t, scenario, impairments, normalized=True, spec=None) -> MetricCurve:
    vals = acf_freq(np.asarray(df, float), t, scenario, impairments, normalized=normalized, spec=spec)
    return MetricCurve("df_hz", df, vals, (), _meta(scenario, impairments=impairments, t=t,
                                                   normalized=normalized, metric="acf_freq"))
