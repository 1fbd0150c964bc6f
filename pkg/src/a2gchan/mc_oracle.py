"""Monte Carlo estimators used as independent checks of the analytic results.

Samples are generated in fixed-size chunks.  Chunk ``c`` draws from
``SeedSequence(seed, spawn_key=(c,))`` and reports its own mean and sum of
squared deviations; chunk statistics are merged by a fixed pairwise tree.
The result therefore depends only on ``(seed, n_paths, chunk_size)`` and not
on how many worker threads ran the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import impairments as imp
from .curves import MetricCurve, digest
from .errors import InvalidParameterError, UndefinedEstimateError
from .impairments import Ideal, ImpairmentSet, SinusoidalNonstationary, WssGaussian
from .scenario import HALF_PI, Scenario, mpc_amplitude_sq, mpc_mean_powers
from .wobbling import NoWobble, Sinusoidal, Wiener, WobblingModel, _k_amplitude, sample_path

__all__ = [
    "McConfig",
    "McEstimate",
    "estimate_g",
    "estimate_increment_cf",
    "estimate_channel_acf",
    "estimate_noise_psd",
]

WINDOWS = ("hann", "rect")


@dataclass(frozen=True)
class McConfig:
    """Sampling configuration.

    ``n_paths`` is the number of independent realisations (for the PSD
    estimator, the number of periodogram segments).  ``start_window_s``
    draws each PSD segment's start time uniformly from ``[0, start_window_s)``
    so that nonstationary inputs are averaged over observation time.
    """

    n_paths: int = 10_000
    seed: int = 0
    chunk_size: int = 1000
    workers: int = 1
    fs_hz: float = 1000.0
    segment_length: int = 512
    window: str = "hann"
    start_window_s: float = 0.0
    oversample: int = 8

    def __post_init__(self):
        if int(self.n_paths) < 100:
            raise InvalidParameterError(f"n_paths must be >= 100, got {self.n_paths!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise InvalidParameterError("seed must be a 64-bit unsigned integer")
        if self.chunk_size < 1 or self.workers < 1:
            raise InvalidParameterError("chunk_size and workers must be >= 1")
        if not (self.fs_hz > 0) or self.segment_length < 8:
            raise InvalidParameterError("fs_hz must be positive and segment_length >= 8")
        if self.window not in WINDOWS:
            raise InvalidParameterError(f"window must be one of {WINDOWS}")
        if self.start_window_s < 0 or self.oversample < 1:
            raise InvalidParameterError("start_window_s must be >= 0 and oversample >= 1")

    @property
    def stream_policy(self) -> str:
        return "seedsequence(seed, spawn_key=(chunk,))"

    def to_dict(self):
        d = asdict(self)
        del d["workers"]  # execution detail; results do not depend on it
        d["stream_policy"] = self.stream_policy
        return d

    def digest(self) -> str:
        return digest(self.to_dict())


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error (complex: ``sqrt(Var re + Var im) / sqrt(n)``)."""

    mean: complex | np.ndarray
    std_error: float | np.ndarray
    n: int
    config_digest: str

    def within(self, value, n_sigma: float = 3.0, floor: float = 0.0):
        """True where ``|mean - value| <= n_sigma * std_error + floor``."""
        return np.abs(np.asarray(self.mean) - value) <= n_sigma * np.asarray(self.std_error) + floor

    def to_dict(self):
        m = np.asarray(self.mean)
        return {"mean_re": np.real(m).tolist(), "mean_im": np.imag(m).tolist(),
                "std_error": np.asarray(self.std_error).tolist(), "n": self.n,
                "config_digest": self.config_digest}


# -- engine -----------------------------------------------------------------------

def _chunk_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def _chunk_stats(samples):
    s = np.asarray(samples, complex)
    n = s.shape[0]
    mean = s.mean(axis=0)
    dev = s - mean
    m2 = np.stack([(dev.real**2).sum(axis=0), (dev.imag**2).sum(axis=0)])
    return n, mean, m2


def _merge(a, b):
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    d = mb - ma
    mean = ma + d * (nb / n)
    corr = na * nb / n
    m2 = sa + sb + corr * np.stack([d.real**2, d.imag**2])
    return n, mean, m2


def _tree(stats):
    while len(stats) > 1:
        nxt = [_merge(stats[i], stats[i + 1]) for i in range(0, len(stats) - 1, 2)]
        if len(stats) % 2:
            nxt.append(stats[-1])
        stats = nxt
    return stats[0]


def _run(sampler, cfg: McConfig, post=None):
    """Evaluate ``sampler(rng, m) -> (m, ...)`` over all chunks and reduce."""
    sizes = [cfg.chunk_size] * (cfg.n_paths // cfg.chunk_size)
    if cfg.n_paths % cfg.chunk_size:
        sizes.append(cfg.n_paths % cfg.chunk_size)

    def job(c):
        return _chunk_stats(sampler(_chunk_rng(cfg.seed, c), sizes[c]))

    if cfg.workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            stats = list(pool.map(job, range(len(sizes))))
    else:
        stats = [job(c) for c in range(len(sizes))]
    n, mean, m2 = _tree(stats)
    var = m2 / max(n - 1, 1)
    se = np.sqrt(var[0] + var[1]) / math.sqrt(n)
    if post is not None:
        mean, se = post(mean, se)
    if np.ndim(mean) == 0:
        mean, se = complex(mean), float(se)
    return McEstimate(mean, se, int(n), cfg.digest())


def _draw_omega(rng, m, n):
    return rng.uniform(0.0, HALF_PI, (m, n))


def _theta(model, times, rng, m):
    """Pitch at arbitrary (sorted or not) times: shape ``(m, len(times))``."""
    times = np.asarray(times, float)
    grid, inv = np.unique(np.concatenate([[0.0], times]), return_inverse=True)
    path = sample_path(model, grid, rng, m)
    return path[:, inv[1:]]


def _pair(model, t1, t2, rng, m, *, additive=False):
    """Joint samples ``(x(t1), x(t2))`` of one distortion process; ``t1``/``t2`` are ``(m, n)``."""
    t1 = np.asarray(t1, float)
    t2 = np.asarray(t2, float)
    shape = np.broadcast_shapes(t1.shape, t2.shape, (m, 1))
    if isinstance(model, Ideal):
        v = 0.0 if additive else 1.0
        return np.full(shape, v, complex), np.full(shape, v, complex)
    if isinstance(model, WssGaussian):
        k = math.sqrt(model.kappa_sq_w)
        z1 = imp._complex_normal(rng, shape)
        z2 = imp._complex_normal(rng, shape)
        r = np.broadcast_to(imp._gauss_kernel(t2 - t1, model.length_scale_s), shape)
        return k * z1, k * (r * z1 + np.sqrt(np.maximum(1 - r * r, 0.0)) * z2)
    if isinstance(model, SinusoidalNonstationary):
        a = math.sqrt(3.0 * model.p_l_w)
        amp = rng.uniform(-a, a, (m, 1))
        q = np.reshape(model.freq_dist.sample(rng, m), (m, 1))
        x1 = amp * np.sin(2 * np.pi * q * t1)
        x2 = amp * np.sin(2 * np.pi * q * t2)
        return np.broadcast_to(x1, shape).astype(complex), np.broadcast_to(x2, shape).astype(complex)
    raise InvalidParameterError(f"cannot sample {model!r}")


# -- estimators ---------------------------------------------------------------------

def estimate_g(i: int, t: float, dt, scenario: Scenario, wobbling: WobblingModel,
               cfg: McConfig) -> McEstimate:
    """Estimate ``G_i(t, dt) = E[|alpha_i|^2 exp(-j k cos(w_i) (theta(t+dt) - theta(t)))]``.

    ``i = 0`` uses the fixed LoS angle and power ``N K P_alpha1``.
    """
    if not (0 <= i <= scenario.n_mpc):
        raise InvalidParameterError(f"MPC index {i} outside 0..{scenario.n_mpc}")
    dt = np.atleast_1d(np.asarray(dt, float))
    k = _k_amplitude(scenario)
    p1, p0 = mpc_mean_powers(scenario)
    if i == 0 and math.isinf(p0):
        raise InvalidParameterError("G_0 is infinite for K = inf")

    def sampler(rng, m):
        if i == 0:
            w = np.full((m, 1), scenario.aod_los_rad)
            power = np.full((m, 1), p0)
        else:
            w = _draw_omega(rng, m, 1)
            power = mpc_amplitude_sq(w, scenario)
        th = _theta(wobbling, np.concatenate([[t], t + dt]), rng, m)
        inc = th[:, 1:] - th[:, :1]
        return power * np.exp(-1j * k * np.cos(w) * inc)

    est = _run(sampler, cfg)
    return _squeeze_estimate(est, dt)


def _squeeze_estimate(est, like):
    if np.ndim(like) and np.size(like) == 1 and np.ndim(est.mean):
        return McEstimate(complex(est.mean[0]), float(est.std_error[0]), est.n, est.config_digest)
    return est


def estimate_increment_cf(model: WobblingModel, omega: float, t: float, dt, scenario: Scenario,
                          cfg: McConfig) -> McEstimate:
    """Estimate ``E[exp(-j k cos(omega) (theta(t+dt) - theta(t)))]`` at a fixed angle."""
    dt = np.atleast_1d(np.asarray(dt, float))
    c = _k_amplitude(scenario) * math.cos(omega)

    def sampler(rng, m):
        th = _theta(model, np.concatenate([[t], t + dt]), rng, m)
        return np.exp(-1j * c * (th[:, 1:] - th[:, :1]))

    return _squeeze_estimate(_run(sampler, cfg), dt)


def _gains(ts, scenario, wobbling, impairments, rng, m, t, dt):
    """Per-MPC gain pairs ``(h_i(t), h_i(t + dt))`` for ``i = 0..N``: shape ``(m, N+1)`` each."""
    n = scenario.n_mpc
    p1, p0 = mpc_mean_powers(scenario)
    w = np.concatenate([np.full((m, 1), scenario.aod_los_rad), _draw_omega(rng, m, n)], axis=1)
    amp = np.sqrt(np.concatenate([np.full((m, 1), p0), mpc_amplitude_sq(w[:, 1:], scenario)],
                                 axis=1))
    psi = rng.uniform(0.0, 2 * np.pi, (m, n + 1))
    alpha = amp * np.exp(1j * psi)
    th = _theta(wobbling, np.array([t, t + dt]), rng, m)
    k = _k_amplitude(scenario)
    ph1 = np.exp(-1j * k * np.cos(w) * th[:, :1])
    ph2 = np.exp(-1j * k * np.cos(w) * th[:, 1:])
    xt1, xt2 = _pair(impairments.chi_t, t - ts, t + dt - ts, rng, m)
    xr1, xr2 = _pair(impairments.chi_r, np.full((m, 1), t), np.full((m, 1), t + dt), rng, m)
    return alpha * ph1 * xt1 * xr1, alpha * ph2 * xt2 * xr2


def estimate_channel_acf(tau_bin, t: float, dt: float, scenario: Scenario, wobbling: WobblingModel,
                         impairments: ImpairmentSet, cfg: McConfig, *,
                         offdiagonal: bool = False) -> McEstimate:
    """Estimate the channel ACF over a delay bin.

    ``tau_bin = (lo, hi)`` returns the bin average ``(1/(hi-lo)) int_bin A_c dtau``
    of the NLoS density; ``tau_bin = "los"`` returns the LoS atom weight at
    ``tau0``.  With ``offdiagonal=True`` the estimate is the cross-MPC sum
    ``sum_{i != j} h_i(t)* h_j(t + dt)`` (all delays), which should vanish.
    """
    if math.isinf(scenario.k_factor):
        raise InvalidParameterError("the channel ACF needs a finite K factor")
    tau0 = scenario.uav_ue_delay_s
    rho = scenario.rho
    los_only = isinstance(tau_bin, str)
    if los_only and tau_bin != "los":
        raise InvalidParameterError("tau_bin must be (lo, hi) or 'los'")
    if not los_only:
        lo, hi = (float(x) for x in tau_bin)
        if not (0 <= lo < hi):
            raise InvalidParameterError("tau_bin must satisfy 0 <= lo < hi")
        if hi <= tau0:
            raise UndefinedEstimateError(f"delay bin [{lo:.3e}, {hi:.3e}) s ends before tau0 = {tau0:.3e} s")
        width = hi - lo
    hits = [0]

    def sampler(rng, m):
        ts = np.concatenate([np.full((m, 1), tau0), tau0 + rng.exponential(1.0 / rho, (m, rho.size))],
                            axis=1)
        h1, h2 = _gains(ts, scenario, wobbling, impairments, rng, m, t, dt)
        if offdiagonal:
            s1 = h1.sum(axis=1)
            s2 = h2.sum(axis=1)
            return np.conj(s1) * s2 - (np.conj(h1) * h2).sum(axis=1)
        if los_only:
            return np.conj(h1[:, 0]) * h2[:, 0]
        inside = (ts[:, 1:] >= lo) & (ts[:, 1:] < hi)
        hits[0] += int(inside.sum())
        return (np.where(inside, np.conj(h1[:, 1:]) * h2[:, 1:], 0.0)).sum(axis=1) / width

    est = _run(sampler, cfg)
    if not (los_only or offdiagonal) and hits[0] == 0:
        raise UndefinedEstimateError(
            f"no sampled delay fell in [{lo:.3e}, {hi:.3e}) s over {cfg.n_paths} realisations")
    return est


def _window(name, n):
    return np.hanning(n) if name == "hann" else np.ones(n)


def _spectral_extent(scenario, wobbling, impairments):
    """Rough one-sided bandwidth (Hz) of n(t) components, for the aliasing check."""
    widths = []
    for slot in ("eta_t", "eta_r", "chi_r"):
        mdl = getattr(impairments, slot)
        if isinstance(mdl, WssGaussian) and math.isfinite(mdl.length_scale_s):
            widths.append(6.0 / (2 * np.pi * mdl.length_scale_s))
        elif isinstance(mdl, SinusoidalNonstationary):
            widths.append(mdl.freq_dist.highest)
    spread = 0.0
    k = _k_amplitude(scenario)
    if isinstance(wobbling, Sinusoidal):
        spread = k * wobbling.theta_max_rad * wobbling.freq_dist.highest
    elif isinstance(wobbling, Wiener):
        # Lorentzian half width; its tail is tolerated
        spread = 0.5 * k**2 * wobbling.b / (2 * np.pi)
    return (max(widths) if widths else 0.0) + spread


def estimate_noise_psd(scenario: Scenario, wobbling: WobblingModel, impairments: ImpairmentSet,
                       cfg: McConfig, *, f_max: float | None = None) -> MetricCurve:
    """Averaged windowed periodogram of sampled ``n(t)``; two-sided, W/Hz.

    Each segment is one independent realisation.  Transmit additive
    distortion is synthesised spectrally so every MPC sees it at its exact
    delay.  Raises :class:`InvalidParameterError` when the sampling rate
    cannot represent ``f_max`` or the spectral content of the model.
    """
    if math.isinf(scenario.k_factor) and not isinstance(impairments.eta_t, Ideal):
        raise InvalidParameterError("absolute PSD levels are undefined for K = inf")
    nyq = 0.5 * cfg.fs_hz
    if f_max is not None and f_max > nyq:
        raise InvalidParameterError(f"f_max = {f_max} Hz aliases at fs = {cfg.fs_hz} Hz")
    extent = _spectral_extent(scenario, wobbling, impairments)
    if extent > nyq:
        raise InvalidParameterError(
            f"model bandwidth ~{extent:.3g} Hz exceeds Nyquist {nyq:.3g} Hz (aliasing)")
    n_s, fs, n = cfg.segment_length, cfg.fs_hz, scenario.n_mpc
    win = _window(cfg.window, n_s)
    norm = fs * np.sum(win**2)
    p1, p0 = mpc_mean_powers(scenario)
    rho = scenario.rho
    tau0 = scenario.uav_ue_delay_s
    k = _k_amplitude(scenario)
    m_floor = scenario.awgn_psd_w * fs
    rel = np.arange(n_s) / fs

    def one(rng):
        start = rng.uniform(0.0, cfg.start_window_s) if cfg.start_window_s > 0 else 0.0
        times = start + rel
        w = np.concatenate([[scenario.aod_los_rad], rng.uniform(0.0, HALF_PI, n)])
        amp = np.sqrt(np.concatenate([[p0], mpc_amplitude_sq(w[1:], scenario)]))
        alpha = amp * np.exp(1j * rng.uniform(0.0, 2 * np.pi, n + 1))
        delays = np.concatenate([[tau0], tau0 + rng.exponential(1.0 / rho)])
        th = _theta(wobbling, times, rng, 1)[0]
        x = np.zeros(n_s, complex)
        if not isinstance(impairments.eta_t, Ideal):
            eta_t = imp.sample_wss_spectral(impairments.eta_t, fs, n_s, delays, rng,
                                            oversample=cfg.oversample)
            if isinstance(impairments.chi_r, SinusoidalNonstationary):
                chi_r = imp.sample_process(impairments.chi_r, times, rng)
            else:
                chi_r = imp.sample_wss_spectral(impairments.chi_r, fs, n_s, [0.0], rng,
                                                additive=False, oversample=cfg.oversample)[0]
            phase = np.exp(-1j * k * np.cos(w)[:, None] * th[None, :])
            x += chi_r * (alpha[:, None] * phase * eta_t).sum(axis=0)
        if not isinstance(impairments.eta_r, Ideal):
            x += imp.sample_wss_spectral(impairments.eta_r, fs, n_s, [0.0], rng,
                                         oversample=cfg.oversample)[0]
        x += math.sqrt(m_floor) * imp._complex_normal(rng, n_s)
        spec = np.fft.fftshift(np.fft.fft(x * win))
        return np.abs(spec) ** 2 / norm

    def sampler(rng, m):
        return np.stack([one(rng) for _ in range(m)])

    est = _run(sampler, cfg)
    f = np.fft.fftshift(np.fft.fftfreq(n_s, 1.0 / fs))
    meta = {"scenario_digest": scenario.digest(), "wobbling": wobbling.to_dict(),
            "impairments": impairments.to_dict(), "mc": cfg.to_dict(), "n": est.n}
    return MetricCurve("f_hz", f, np.real(est.mean), (), meta, np.asarray(est.std_error))
