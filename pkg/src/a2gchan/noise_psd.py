"""Power spectral density of the distortion-plus-noise process ``n(t)``.

``n(t) = sum_i alpha_i e^{-j phi_i(t)} chi_R(t) eta_T(t - tau_i) + eta_R(t) + awgn``.

Three evaluation paths are provided:

* :func:`psd_wss_si` -- WSS impairments with Wiener (or no) wobbling, in
  closed form up to one angular integral;
* :func:`psd_wss` -- WSS impairments with sinusoidal wobbling, using the
  time-averaged G-functions and a numerical cosine transform;
* :func:`psd_nonstationary` -- any combination, by brute-force time
  averaging of the full ACF (expensive, budgeted).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import wofz

from . import impairments as imp
from .curves import MetricCurve, digest
from .errors import BudgetExceededError, InvalidParameterError, NumericFailure, WrongModelError
from .impairments import Ideal, ImpairmentSet, SinusoidalNonstationary, WssGaussian
from .numerics import (ConvergenceSpec, QuadratureSpec, gauss_legendre_panels, integrate,
                       time_average)
from .scenario import HALF_PI, Atom, Scenario, _angular_power, mpc_mean_powers, wavelength
from .wobbling import (NoWobble, PointMass, Sinusoidal, Wiener, WobblingModel, _increment_amplitude,
                       _k_amplitude, phasor_factors)

__all__ = [
    "PSD_MODES",
    "PsdComposite",
    "PsdConfig",
    "psd_wss_si",
    "psd_wss",
    "psd_nonstationary",
    "no_impairment_atom_weight",
    "total_power",
]

PSD_MODES = ("hermitian", "paper-literal")
_EXP_LIMIT = 700.0


@dataclass(frozen=True)
class PsdComposite:
    """White floor + Dirac atoms + sampled continuous part, kept separate."""

    f: np.ndarray
    white_floor_w: float
    atoms: tuple[Atom, ...]
    continuous: np.ndarray
    components: dict = field(default_factory=dict)
    mode: str = "hermitian"
    meta: dict = field(default_factory=dict)

    @property
    def total(self) -> np.ndarray:
        """Floor plus continuous part (atoms excluded)."""
        return self.white_floor_w + self.continuous

    @property
    def db(self) -> np.ndarray:
        """``10 log10(|S| / 1 W/Hz)`` of floor plus continuous part."""
        return 10.0 * np.log10(np.abs(self.total))

    def curve(self) -> MetricCurve:
        return MetricCurve("f_hz", self.f, self.total, self.atoms, dict(self.meta, mode=self.mode))

    def csv_rows(self):
        tot = self.total
        return [(float(f), float(v.real), float(abs(v)), float(d))
                for f, v, d in zip(self.f, tot, self.db)]

    def to_dict(self):
        return {
            "f_hz": self.f.tolist(),
            "white_floor_w": self.white_floor_w,
            "mode": self.mode,
            "atoms": [{"location": a.location, "weight": float(np.real(a.weight))} for a in self.atoms],
            "continuous_re": np.real(self.continuous).tolist(),
            "continuous_im": np.imag(self.continuous).tolist(),
            "continuous_abs": np.abs(self.continuous).tolist(),
            "psd_db": self.db.tolist(),
            "meta": self.meta,
        }


@dataclass(frozen=True)
class PsdConfig:
    """Lag-domain discretisation for the numerically transformed PSDs.

    The lag kernel is truncated at ``truncation * l`` (``l`` the combined
    Gaussian length scale) and integrated with ``nodes_per_panel``-point
    Gauss-Legendre panels; ``lag_panels=None`` sizes the panel count from
    the frequency grid.
    """

    truncation: float = 8.0
    lag_panels: int | None = None
    nodes_per_panel: int = 16
    convergence: ConvergenceSpec = field(default_factory=lambda: ConvergenceSpec(rtol=5e-3))
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    max_evaluations: float = 2e9
    lag_chunk: int = 32

    def __post_init__(self):
        if self.truncation < 4 or self.nodes_per_panel < 4:
            raise InvalidParameterError("truncation must be >= 4 and nodes_per_panel >= 4")


# -- helpers -------------------------------------------------------------------

def _combined(chi_r, eta_t):
    """``(kappa^2, l)`` of the product ``A_chiR(dt) A_etaT(dt)``; ``None`` when it vanishes."""
    if isinstance(eta_t, Ideal):
        return None
    if isinstance(chi_r, SinusoidalNonstationary):
        raise WrongModelError("this PSD path needs WSS receive distortion")
    k2 = eta_t.kappa_sq_w * (chi_r.kappa_sq_w if isinstance(chi_r, WssGaussian) else 1.0)
    inv = eta_t.length_scale_s ** -2 if math.isfinite(eta_t.length_scale_s) else 0.0
    if isinstance(chi_r, WssGaussian) and math.isfinite(chi_r.length_scale_s):
        inv += chi_r.length_scale_s ** -2
    return k2, (math.inf if inv == 0 else inv ** -0.5)


def _gauss_bump(model, f):
    """Spectrum and atoms of a WSS Gaussian process."""
    if isinstance(model, Ideal):
        return np.zeros_like(f), []
    l = model.length_scale_s
    if math.isinf(l):
        return np.zeros_like(f), [Atom(0.0, model.kappa_sq_w)]
    return model.kappa_sq_w * math.sqrt(2 * math.pi) * l * np.exp(-2 * math.pi**2 * l**2 * f**2), []


def _gauss_exp_ft(a, f, l, mode):
    """Fourier transform of ``exp(-dt^2/(2 l^2)) exp(-a dt)``.

    ``hermitian`` uses ``|dt|`` (a Voigt profile, via the Faddeeva
    function); ``paper-literal`` keeps ``dt`` and so the complex factor
    ``exp(l^2 a^2 / 2) exp(j 2 pi l^2 a f)``.  ``a`` and ``f`` broadcast.
    """
    a = np.asarray(a, float)
    f = np.asarray(f, float)
    if math.isinf(l):
        if mode == "paper-literal" and np.any(a > 0):
            raise NumericFailure("an undamped exponential lag kernel has no Fourier transform",
                                 achieved=None, length_scale=l)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(a > 0, 2 * a / (a * a + (2 * math.pi * f) ** 2), 0.0)
    if mode == "hermitian":
        z = 1j * l * (a + 2j * math.pi * f) / math.sqrt(2.0)
        return l * math.sqrt(2 * math.pi) * np.real(wofz(z))
    expo = 0.5 * l**2 * a**2
    if np.any(expo > _EXP_LIMIT):
        raise NumericFailure(
            "exp(l^2 u^4 cos^4 / 2) overflows; use the hermitian mode for these parameters",
            achieved=float(np.max(expo)), length_scale=l, max_decay_rate=float(np.max(a)))
    return (math.sqrt(2 * math.pi) * l * np.exp(expo) * np.exp(-2 * math.pi**2 * l**2 * f**2)
            * np.exp(2j * math.pi * l**2 * a * f))


def no_impairment_atom_weight(scenario: Scenario, impairments: ImpairmentSet) -> float:
    """Weight of the ``f = 0`` line when every process is constant in time.

    ``P_etaR + P_chiR P_etaT (G_0(0) + N G_1(0)) = P_etaR + P_chiR P_etaT N (K+1) P_alpha1``.
    """
    p1, p0 = mpc_mean_powers(scenario)
    p_er = imp.power(impairments.eta_r, additive=True)
    p_et = imp.power(impairments.eta_t, additive=True)
    if p_et == 0:
        return float(p_er)
    return float(p_er + imp.power(impairments.chi_r) * p_et * (p0 + scenario.n_mpc * p1))


def total_power(scenario: Scenario, impairments: ImpairmentSet) -> float:
    """Time-averaged distortion power ``<E|n(t)|^2>`` excluding the white floor."""
    p1, p0 = mpc_mean_powers(scenario)
    p_et = imp.power(impairments.eta_t, additive=True)
    chi_r = impairments.chi_r
    if isinstance(chi_r, SinusoidalNonstationary):
        p_r = 0.5 * chi_r.p_l_w
    else:
        p_r = imp.power(chi_r)
    return float(imp.power(impairments.eta_r, additive=True) + p_r * p_et * (p0 + scenario.n_mpc * p1))


def _finite_k(scenario, impairments):
    if math.isinf(scenario.k_factor) and not isinstance(impairments.eta_t, Ideal):
        raise InvalidParameterError("absolute PSD levels are undefined for K = inf")


def _check_mode(mode):
    if mode not in PSD_MODES:
        raise InvalidParameterError(f"psd mode must be one of {PSD_MODES}, got {mode!r}")


def _meta(scenario, wobbling, impairments, path, **extra):
    m = {"scenario_digest": scenario.digest(), "wobbling": wobbling.to_dict(),
         "impairments": impairments.to_dict(), "path": path}
    m.update(extra)
    m["digest"] = digest(m)
    return m


# -- WSS impairments, stationary-increment wobbling ------------------------------

def psd_wss_si(f_grid, scenario: Scenario, wobbling: WobblingModel, impairments: ImpairmentSet,
               mode: str = "hermitian", spec: QuadratureSpec | None = None) -> PsdComposite:
    """PSD for WSS impairments and Wiener (or no) wobbling.

    Each G-function term is a Gaussian lag window times ``exp(-a dt)``,
    ``a = u^2 cos^2(w) b``; its transform is evaluated in closed form and
    the NLoS part is integrated over the angular power law.
    """
    _check_mode(mode)
    if not isinstance(wobbling, (Wiener, NoWobble)):
        raise WrongModelError("psd_wss_si needs Wiener or no wobbling")
    if not impairments.is_wss:
        raise WrongModelError("psd_wss_si needs WSS impairments")
    _finite_k(scenario, impairments)
    f = np.asarray(f_grid, float)
    p1, p0 = mpc_mean_powers(scenario)
    n = scenario.n_mpc
    bump, atoms = _gauss_bump(impairments.eta_r, f)
    comps = {"eta_r": bump.astype(complex)}
    los = np.zeros_like(f, dtype=complex)
    nlos = np.zeros_like(f, dtype=complex)
    comb = _combined(impairments.chi_r, impairments.eta_t)
    if comb is not None:
        k2, l = comb
        b = wobbling.b if isinstance(wobbling, Wiener) else 0.0
        u2b = 0.5 * _k_amplitude(scenario) ** 2 * b
        if math.isinf(l) and b == 0:
            atoms.append(Atom(0.0, k2 * (p0 + n * p1)))
        else:
            a0 = u2b * math.cos(scenario.aod_los_rad) ** 2
            los = k2 * p0 * _gauss_exp_ft(a0, f, l, mode)

            def fn(w):
                a = u2b * np.cos(w) ** 2
                vals = _gauss_exp_ft(a[None, :], f[:, None], l, mode)
                wt = 2.0 / np.pi * _angular_power(w, scenario)
                if np.iscomplexobj(vals):
                    return np.concatenate([(vals.real * wt), (vals.imag * wt)], axis=0)
                return vals * wt

            raw = integrate(fn, 0.0, HALF_PI, spec, points=(scenario.aod_los_rad,)).value
            raw = np.asarray(raw)
            val = raw[:f.size] + 1j * raw[f.size:] if raw.shape[0] == 2 * f.size else raw
            nlos = k2 * n * val
    elif not atoms and isinstance(wobbling, NoWobble):
        atoms.append(Atom(0.0, no_impairment_atom_weight(scenario, impairments)))
    comps["los"] = np.asarray(los, complex)
    comps["nlos"] = np.asarray(nlos, complex)
    cont = comps["eta_r"] + comps["los"] + comps["nlos"]
    if mode == "hermitian":
        cont = cont.real.astype(complex)
    return PsdComposite(f, scenario.awgn_psd_w, tuple(atoms), cont, comps, mode,
                        _meta(scenario, wobbling, impairments, "wss_si"))


# -- WSS impairments, sinusoidal wobbling ---------------------------------------------

def _lag_nodes(l, f, cfg: PsdConfig, extra_rate: float = 0.0):
    top = cfg.truncation * l
    if cfg.lag_panels is not None:
        panels = cfg.lag_panels
    else:
        fmax = float(np.max(np.abs(f), initial=0.0))
        # resolve cos(2 pi f dt) and the kernel's own variation across [0, top]
        panels = int(np.clip(math.ceil(top * (fmax + extra_rate) / 2.0), 16, 1024))
    return gauss_legendre_panels(np.linspace(0.0, top, panels + 1), cfg.nodes_per_panel)


def _cosine_transform(lags, weights, kernel, f):
    return 2.0 * (kernel * weights) @ np.cos(2 * np.pi * np.outer(lags, f))


def _averaged_cf(c, dt, freq_dist, cfg: PsdConfig):
    """``E_Q <sinc(c D(t, dt, Q))>_t`` over lags ``dt`` (last axis) and amplitudes ``c``.

    Time is rescaled per frequency (``u = q t``) so the average runs over
    whole periods of every component.
    """
    c = np.asarray(c, float)
    dt = np.asarray(dt, float)
    shape = np.broadcast_shapes(c.shape, dt.shape)
    cb = np.broadcast_to(c, shape)[..., None]
    db = np.broadcast_to(dt, shape)[..., None]
    amp = float(np.max(np.abs(c), initial=0.0))
    points = int(max(64, 8 * math.ceil(4 * amp) + 32))
    conv = ConvergenceSpec(window=1.0, rtol=cfg.convergence.rtol, points=points,
                           max_doublings=cfg.convergence.max_doublings,
                           floor_fraction=cfg.convergence.floor_fraction)

    def over_q(q):
        s = np.sin(np.pi * q * db)

        def in_u(u):
            d = 2.0 * np.cos(np.pi * (2.0 * u + q[..., None] * db[..., None])) * s[..., None]
            return np.sinc(cb[..., None] * d)

        return time_average(in_u, conv).value

    span = getattr(freq_dist, "high_hz", 0.0) - getattr(freq_dist, "low_hz", 0.0)
    cycles = 0.5 * span * float(np.max(np.abs(dt), initial=0.0)) * (1 + 2 * amp)
    return np.asarray(freq_dist.expectation(over_q, cfg.quadrature, cycles=cycles)).reshape(shape)


def averaged_phasors(dt, scenario: Scenario, model: Sinusoidal, cfg: PsdConfig | None = None):
    """Time-averaged ``(<G_0>/P_alpha0, <G_1>/P_alpha1)`` for the sinusoidal wobble."""
    cfg = cfg or PsdConfig()
    dt = np.atleast_1d(np.asarray(dt, float))
    scale = _k_amplitude(scenario) * model.theta_max_rad / np.pi
    fd = model.freq_dist
    los = _averaged_cf(scale * math.cos(scenario.aod_los_rad), dt, fd, cfg)
    p1 = mpc_mean_powers(scenario)[0]
    out = np.empty_like(dt)
    for s in range(0, dt.size, cfg.lag_chunk):
        chunk = dt[s:s + cfg.lag_chunk]

        def fn(w, chunk=chunk):
            vals = _averaged_cf(scale * np.cos(w)[None, :], chunk[:, None], fd, cfg)
            return vals * (2.0 / np.pi * _angular_power(w, scenario))[None, :]

        out[s:s + cfg.lag_chunk] = integrate(fn, 0.0, HALF_PI, cfg.quadrature,
                                             points=(scenario.aod_los_rad,)).value
    return los, out / p1


def psd_wss(f_grid, scenario: Scenario, wobbling: Sinusoidal, impairments: ImpairmentSet,
            config: PsdConfig | None = None) -> PsdComposite:
    """PSD for WSS impairments and sinusoidal wobbling (real, even lag kernel)."""
    cfg = config or PsdConfig()
    if not isinstance(wobbling, Sinusoidal):
        raise WrongModelError("psd_wss needs the sinusoidal wobbling model")
    if not impairments.is_wss:
        raise WrongModelError("psd_wss needs WSS impairments")
    _finite_k(scenario, impairments)
    f = np.asarray(f_grid, float)
    p1, p0 = mpc_mean_powers(scenario)
    n = scenario.n_mpc
    bump, atoms = _gauss_bump(impairments.eta_r, f)
    comps = {"eta_r": bump.astype(complex)}
    los = np.zeros_like(f)
    nlos = np.zeros_like(f)
    comb = _combined(impairments.chi_r, impairments.eta_t)
    if comb is not None:
        k2, l = comb
        if math.isinf(l):
            raise InvalidParameterError("psd_wss needs a finite combined length scale")
        doppler = 2 * _k_amplitude(scenario) * wobbling.theta_max_rad * wobbling.freq_dist.highest
        lags, wts = _lag_nodes(l, f, cfg, extra_rate=doppler)
        g_los, g_nlos = averaged_phasors(lags, scenario, wobbling, cfg)
        env = k2 * np.exp(-0.5 * (lags / l) ** 2)
        los = _cosine_transform(lags, wts, env * p0 * g_los, f)
        nlos = _cosine_transform(lags, wts, env * n * p1 * g_nlos, f)
    comps["los"] = np.asarray(los, complex)
    comps["nlos"] = np.asarray(nlos, complex)
    cont = comps["eta_r"] + comps["los"] + comps["nlos"]
    return PsdComposite(f, scenario.awgn_psd_w, tuple(atoms), cont, comps, "hermitian",
                        _meta(scenario, wobbling, impairments, "wss"))


# -- general path -------------------------------------------------------------------

def _periods(wobbling, chi_r):
    laws = []
    if isinstance(wobbling, Sinusoidal):
        laws.append(wobbling.freq_dist)
    if isinstance(chi_r, SinusoidalNonstationary):
        laws.append(chi_r.freq_dist)
    return laws


def _base_window(laws):
    if not laws:
        return 1.0, True
    periods = [fd.slowest_period for fd in laws]
    exact = all(isinstance(fd, PointMass) for fd in laws)
    if exact and len(periods) > 1:
        # common period of commensurate point masses, else fall back to the longest
        ratio = max(periods) / min(periods)
        if abs(ratio - round(ratio)) > 1e-9:
            exact = False
    return max(periods), exact


def psd_nonstationary(f_grid, scenario: Scenario, wobbling: WobblingModel,
                      impairments: ImpairmentSet, config: PsdConfig | None = None) -> PsdComposite:
    """PSD from the time-averaged ACF of ``n(t)`` for any model combination.

    The ACF ``A_chiR(t, t+dt) (G_0 + N G_1)(t, dt) A_etaT(dt) + A_etaR(dt)``
    is averaged over observation time in real time with window doubling
    and cosine-transformed.  The cost grows with the number of lag nodes,
    time samples and G-function quadrature nodes; a configuration whose
    estimated evaluation count exceeds ``config.max_evaluations`` raises
    :class:`BudgetExceededError` before any work is done.
    """
    cfg = config or PsdConfig()
    _finite_k(scenario, impairments)
    f = np.asarray(f_grid, float)
    if isinstance(impairments.eta_t, SinusoidalNonstationary) or \
            isinstance(impairments.eta_r, SinusoidalNonstationary):
        raise InvalidParameterError("additive distortions must be WSS")
    p1, p0 = mpc_mean_powers(scenario)
    n = scenario.n_mpc
    bump, atoms = _gauss_bump(impairments.eta_r, f)
    comps = {"eta_r": bump.astype(complex)}
    mixed = np.zeros_like(f)
    eta_t, chi_r = impairments.eta_t, impairments.chi_r
    if not isinstance(eta_t, Ideal):
        inv = eta_t.length_scale_s ** -2 if math.isfinite(eta_t.length_scale_s) else 0.0
        if isinstance(chi_r, WssGaussian) and math.isfinite(chi_r.length_scale_s):
            inv += chi_r.length_scale_s ** -2
        if inv == 0:
            raise InvalidParameterError("the general PSD path needs a decaying lag kernel")
        l = inv ** -0.5
        doppler = 0.0
        if isinstance(wobbling, Sinusoidal):
            doppler = 2 * _k_amplitude(scenario) * wobbling.theta_max_rad * wobbling.freq_dist.highest
        elif isinstance(wobbling, Wiener):
            doppler = 0.5 * _k_amplitude(scenario) ** 2 * wobbling.b
        if isinstance(chi_r, SinusoidalNonstationary):
            doppler += chi_r.freq_dist.highest
        lags, wts = _lag_nodes(l, f, cfg, extra_rate=doppler)

        laws = _periods(wobbling, chi_r)
        window, exact = _base_window(laws)
        top = max([fd.highest for fd in laws], default=0.0)
        amp = _k_amplitude(scenario) * getattr(wobbling, "theta_max_rad", 0.0) / np.pi
        points = 2 if not laws else int(max(64, math.ceil(window * top * max(16.0, 16 * (2 * amp + 2)))))
        conv = ConvergenceSpec(window=window, rtol=cfg.convergence.rtol, points=points,
                               max_doublings=0 if not laws else cfg.convergence.max_doublings,
                               floor_fraction=cfg.convergence.floor_fraction)
        t_samples = points * 2 ** (1 if (exact or not laws) else conv.max_doublings)
        inner = 1
        if isinstance(wobbling, Sinusoidal) and not isinstance(wobbling.freq_dist, PointMass):
            inner = 450 * 30
        elif isinstance(wobbling, Sinusoidal):
            inner = 450
        elif isinstance(wobbling, Wiener):
            inner = 45
        estimate = float(lags.size) * t_samples * inner
        if estimate > cfg.max_evaluations:
            raise BudgetExceededError(
                f"general PSD path would need ~{estimate:.2e} kernel evaluations "
                f"(budget {cfg.max_evaluations:.2e})", achieved=None,
                lag_nodes=int(lags.size), time_samples=int(t_samples))

        kernel = np.empty_like(lags)
        for s in range(0, lags.size, cfg.lag_chunk):
            chunk = lags[s:s + cfg.lag_chunk]

            def acf_t(t, chunk=chunk):
                out = np.empty((chunk.size, t.size))
                for j, tj in enumerate(t):
                    los, nlos = phasor_factors(float(tj), chunk, scenario, wobbling, cfg.quadrature)
                    g = p0 * los + n * p1 * nlos
                    out[:, j] = imp.acf(chi_r, float(tj), chunk) * g
                return out

            if not laws:
                kernel[s:s + cfg.lag_chunk] = acf_t(np.zeros(1))[:, 0]
            else:
                try:
                    kernel[s:s + cfg.lag_chunk] = time_average(acf_t, conv).value
                except NumericFailure as exc:
                    raise NumericFailure(f"time average of the ACF did not converge: {exc}",
                                         achieved=exc.achieved, lag_range=(float(chunk[0]),
                                                                           float(chunk[-1]))) from None
        kernel = kernel * imp.acf(eta_t, 0.0, lags, additive=True)
        mixed = _cosine_transform(lags, wts, kernel, f)
    comps["mixed"] = np.asarray(mixed, complex)
    cont = comps["eta_r"] + comps["mixed"]
    return PsdComposite(f, scenario.awgn_psd_w, tuple(atoms), cont, comps, "hermitian",
                        _meta(scenario, wobbling, impairments, "nonstationary"))
