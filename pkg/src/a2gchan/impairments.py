"""Aggregate hardware-impairment processes.

Multiplicative distortions ``chi_T``, ``chi_R`` scale the useful signal;
additive distortions ``eta_T``, ``eta_R`` add zero-mean noise.  Each slot
holds an :class:`Ideal`, :class:`WssGaussian` or (multiplicative only)
:class:`SinusoidalNonstationary` model.  Analytic code needs only ACFs;
the samplers exist for the Monte Carlo oracle.
"""

from __future__ import annotations

import hashlib
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import InvalidParameterError, NumericFailure, WrongModelError
from .numerics import QuadratureSpec
from .wobbling import FrequencyDistribution, PointMass, Uniform, frequency_from_dict

__all__ = [
    "Ideal",
    "WssGaussian",
    "SinusoidalNonstationary",
    "DistortionModel",
    "ImpairmentSet",
    "acf",
    "power",
    "delay_averaged_acf",
    "sample_process",
    "sample_wss_spectral",
]


@dataclass(frozen=True)
class Ideal:
    """No distortion: ``chi = 1`` in a multiplicative slot, ``eta = 0`` in an additive one."""

    def to_dict(self):
        return {"kind": "ideal"}


@dataclass(frozen=True)
class WssGaussian:
    """Gaussian process with ACF ``kappa^2 exp(-dt^2 / (2 l^2))``.

    ``length_scale_s = inf`` is accepted and means a random constant level.
    """

    kappa_sq_w: float
    length_scale_s: float

    def __post_init__(self):
        if not (self.kappa_sq_w > 0 and math.isfinite(self.kappa_sq_w)):
            raise InvalidParameterError(f"kappa_sq_w must be positive, got {self.kappa_sq_w!r}")
        if not (self.length_scale_s > 0):
            raise InvalidParameterError(f"length_scale_s must be positive, got {self.length_scale_s!r}")

    def to_dict(self):
        l = "inf" if math.isinf(self.length_scale_s) else self.length_scale_s
        return {"kind": "wss_gaussian", "kappa_sq_w": self.kappa_sq_w, "length_scale_s": l}


@dataclass(frozen=True)
class SinusoidalNonstationary:
    """``chi(t) = L sin(2 pi Q t)`` with ``E[L^2] = p_l_w``."""

    p_l_w: float
    freq_dist: FrequencyDistribution

    def __post_init__(self):
        if not (self.p_l_w > 0 and math.isfinite(self.p_l_w)):
            raise InvalidParameterError(f"p_l_w must be positive, got {self.p_l_w!r}")
        if not isinstance(self.freq_dist, (Uniform, PointMass)):
            raise InvalidParameterError("freq_dist must be Uniform or PointMass")

    def to_dict(self):
        return {"kind": "sinusoidal_nonstationary", "p_l_w": self.p_l_w,
                "freq_dist": self.freq_dist.to_dict()}


DistortionModel = Union[Ideal, WssGaussian, SinusoidalNonstationary]
_MODELS = (Ideal, WssGaussian, SinusoidalNonstationary)


def distortion_from_dict(d: dict) -> DistortionModel:
    kind = d.get("kind")
    if kind == "ideal":
        return Ideal()
    if kind == "wss_gaussian":
        return WssGaussian(float(d["kappa_sq_w"]), float(d["length_scale_s"]))
    if kind == "sinusoidal_nonstationary":
        return SinusoidalNonstationary(float(d["p_l_w"]), frequency_from_dict(d["freq_dist"]))
    if kind == "wiener":
        raise WrongModelError("a Wiener process is not a valid distortion model: its ACF grows without bound")
    raise InvalidParameterError(f"unknown distortion model kind {kind!r}")


SLOTS = ("chi_t", "chi_r", "eta_t", "eta_r")


@dataclass(frozen=True)
class ImpairmentSet:
    chi_t: DistortionModel = field(default_factory=Ideal)
    chi_r: DistortionModel = field(default_factory=Ideal)
    eta_t: DistortionModel = field(default_factory=Ideal)
    eta_r: DistortionModel = field(default_factory=Ideal)

    def __post_init__(self):
        for name in SLOTS:
            m = getattr(self, name)
            if not isinstance(m, _MODELS):
                raise WrongModelError(
                    f"slot {name} holds {type(m).__name__}; only Ideal, WssGaussian and "
                    "SinusoidalNonstationary are valid (Wiener distortion diverges)")
        for name in ("eta_t", "eta_r"):
            if isinstance(getattr(self, name), SinusoidalNonstationary):
                raise InvalidParameterError(f"additive slot {name} must be Ideal or WssGaussian")

    @property
    def is_wss(self) -> bool:
        return not any(isinstance(getattr(self, s), SinusoidalNonstationary) for s in SLOTS)

    def to_dict(self):
        return {s: getattr(self, s).to_dict() for s in SLOTS}

    @classmethod
    def from_dict(cls, d: dict) -> "ImpairmentSet":
        unknown = set(d) - set(SLOTS)
        if unknown:
            raise InvalidParameterError(f"unknown impairment slots {sorted(unknown)}")
        return cls(**{s: distortion_from_dict(d[s]) for s in SLOTS if s in d})


# -- second-order statistics ---------------------------------------------------

def _gauss_kernel(dt, l):
    dt = np.asarray(dt, float)
    if math.isinf(l):
        return np.ones_like(dt)
    return np.exp(-0.5 * (dt / l) ** 2)


def acf(model: DistortionModel, t, dt, *, additive: bool = False, method: str = "closed",
        spec: QuadratureSpec | None = None):
    """``E[x*(t) x(t + dt)]`` for one distortion process.

    For the sinusoidal model ``method="closed"`` uses the product-to-sum
    form ``(P_L/2) E[cos(2 pi Q dt) - cos(2 pi Q (2t + dt))]`` and
    ``method="quadrature"`` integrates ``sin sin`` against the density.
    """
    t_arr = np.asarray(t, float)
    dt_arr = np.asarray(dt, float)
    shape = np.broadcast_shapes(t_arr.shape, dt_arr.shape)
    if isinstance(model, Ideal):
        out = np.full(shape, 0.0 if additive else 1.0)
    elif isinstance(model, WssGaussian):
        out = np.broadcast_to(model.kappa_sq_w * _gauss_kernel(dt_arr, model.length_scale_s), shape)
    elif isinstance(model, SinusoidalNonstationary):
        if additive:
            raise InvalidParameterError("sinusoidal distortion is only valid in multiplicative slots")
        fd = model.freq_dist
        if method == "closed":
            out = 0.5 * model.p_l_w * (fd.expect_cos(dt_arr) - fd.expect_cos(2 * t_arr + dt_arr))
        elif method == "quadrature":
            tb = np.broadcast_to(t_arr, shape)[..., None]
            db = np.broadcast_to(dt_arr, shape)[..., None]
            span = getattr(fd, "high_hz", 0.0) - getattr(fd, "low_hz", 0.0)
            cycles = span * float(np.max(np.abs(tb) + np.abs(tb + db), initial=0.0))
            out = model.p_l_w * np.asarray(fd.expectation(
                lambda q: np.sin(2 * np.pi * q * tb) * np.sin(2 * np.pi * q * (tb + db)),
                spec, cycles=cycles)).reshape(shape)
        else:
            raise InvalidParameterError(f"unknown acf method {method!r}")
    else:
        raise WrongModelError(f"unsupported distortion model {model!r}")
    out = np.asarray(out, float)
    return out.item() if out.ndim == 0 else np.array(out)


def power(model: DistortionModel, t=0.0, *, additive: bool = False):
    """Instantaneous power ``acf(model, t, 0)``."""
    return acf(model, t, np.zeros_like(np.asarray(t, float)), additive=additive)


def delay_averaged_acf(model: DistortionModel, t, dt, rho, tau0: float, *,
                       additive: bool = False, spec: QuadratureSpec | None = None):
    """``E_tau[A(t - tau, t - tau + dt)]`` for ``tau = tau0 + Exp(rho)``.

    ``rho = inf`` selects the deterministic delay ``tau0``.  ``dt`` and
    ``rho`` broadcast; the exponential average is done in closed form so
    only the frequency law needs quadrature.
    """
    dt = np.asarray(dt, float)
    rho = np.asarray(rho, float)
    shape = np.broadcast_shapes(dt.shape, rho.shape)
    if not isinstance(model, SinusoidalNonstationary):
        return np.broadcast_to(acf(model, 0.0, dt, additive=additive), shape).copy()
    fd = model.freq_dist
    db = np.broadcast_to(dt, shape)[..., None]
    rb = np.broadcast_to(rho, shape)[..., None]
    s = float(t) - tau0

    def fn(q):
        phase = np.exp(2j * np.pi * q * (2 * s + db))
        w = 4 * np.pi * q
        finite = np.isfinite(rb)
        r_safe = np.where(finite, rb, 1.0)
        lag = np.where(finite, r_safe / (r_safe + 1j * w), 1.0 + 0j)
        return np.cos(2 * np.pi * q * db) - np.real(phase * lag)

    span = getattr(fd, "high_hz", 0.0) - getattr(fd, "low_hz", 0.0)
    cycles = span * (2 * abs(s) + float(np.max(np.abs(db), initial=0.0)))
    out = 0.5 * model.p_l_w * np.asarray(fd.expectation(fn, spec, cycles=cycles)).reshape(shape)
    return out


# -- sampling ---------------------------------------------------------------

_CHOL_CACHE: "OrderedDict[tuple, np.ndarray]" = OrderedDict()
_CHOL_LOCK = threading.Lock()
_CHOL_MAX = 32


def _cholesky(kappa_sq: float, l: float, grid: np.ndarray) -> np.ndarray:
    key = (kappa_sq, l, hashlib.sha1(np.ascontiguousarray(grid).tobytes()).hexdigest())
    with _CHOL_LOCK:
        hit = _CHOL_CACHE.get(key)
        if hit is not None:
            _CHOL_CACHE.move_to_end(key)
            return hit
    cov = kappa_sq * _gauss_kernel(grid[:, None] - grid[None, :], l)
    try:
        factor = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        try:
            factor = np.linalg.cholesky(cov + 1e-12 * kappa_sq * np.eye(len(grid)))
        except np.linalg.LinAlgError:
            raise NumericFailure(
                "covariance factorisation failed even with 1e-12*kappa^2 jitter; "
                "use a coarser grid or spectral sampling", achieved=None,
                grid_points=len(grid), length_scale=l) from None
    with _CHOL_LOCK:
        _CHOL_CACHE[key] = factor
        while len(_CHOL_CACHE) > _CHOL_MAX:
            _CHOL_CACHE.popitem(last=False)
    return factor


def _complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def sample_process(model: DistortionModel, time_grid, rng: np.random.Generator,
                   n_paths: int | None = None, *, additive: bool = False,
                   mean_offset: complex = 0.0) -> np.ndarray:
    """Draw sample paths on ``time_grid``.

    WSS models are circular complex Gaussian with the model ACF, drawn by
    Cholesky factorisation of the grid covariance.  ``mean_offset`` adds a
    deterministic mean to multiplicative WSS paths; the default zero keeps
    the sampled ACF equal to the analytic one (a non-zero offset adds
    ``|offset|^2`` to it).  Additive slots are always zero mean.
    """
    t = np.asarray(time_grid, float)
    if t.ndim != 1 or t.size == 0 or np.any(np.diff(t) <= 0):
        raise InvalidParameterError("time grid must be a non-empty, strictly increasing 1-D array")
    m = 1 if n_paths is None else int(n_paths)
    if isinstance(model, Ideal):
        out = np.full((m, t.size), 0.0 if additive else 1.0, dtype=complex)
    elif isinstance(model, WssGaussian):
        if math.isinf(model.length_scale_s):
            level = math.sqrt(model.kappa_sq_w) * _complex_normal(rng, (m, 1))
            out = np.broadcast_to(level, (m, t.size)).copy()
        else:
            factor = _cholesky(model.kappa_sq_w, model.length_scale_s, t)
            out = _complex_normal(rng, (m, t.size)) @ factor.T
        if not additive:
            out = out + mean_offset
    elif isinstance(model, SinusoidalNonstationary):
        if additive:
            raise InvalidParameterError("sinusoidal distortion is only valid in multiplicative slots")
        a = math.sqrt(3.0 * model.p_l_w)
        amp = rng.uniform(-a, a, (m, 1))
        q = np.reshape(model.freq_dist.sample(rng, m), (m, 1))
        out = (amp * np.sin(2 * np.pi * q * t[None, :])).astype(complex)
    else:
        raise WrongModelError(f"unsupported distortion model {model!r}")
    return out[0] if n_paths is None else out


def sample_wss_spectral(model: DistortionModel, fs: float, n: int, delays, rng: np.random.Generator,
                        *, additive: bool = True, oversample: int = 8) -> np.ndarray:
    """Sample ``x(k/fs - d)`` for every delay ``d`` from one WSS realisation.

    The process is synthesised as a random Fourier series on a period of
    ``oversample * n`` samples, so arbitrary sub-sample delays are exact
    phase ramps.  Returns shape ``(len(delays), n)``.
    """
    delays = np.atleast_1d(np.asarray(delays, float))
    if isinstance(model, Ideal):
        return np.full((delays.size, n), 0.0 if additive else 1.0, dtype=complex)
    if not isinstance(model, WssGaussian):
        raise WrongModelError("spectral sampling needs a WSS model")
    if math.isinf(model.length_scale_s):
        level = math.sqrt(model.kappa_sq_w) * _complex_normal(rng, ())
        return np.full((delays.size, n), level, dtype=complex)
    big = oversample * n
    f = np.fft.fftfreq(big, d=1.0 / fs)
    # line spectrum: periodic process whose ACF samples the target kernel (aliased sum)
    lag = np.fft.fftfreq(big, d=1.0 / big) / fs
    kern = model.kappa_sq_w * _gauss_kernel(lag, model.length_scale_s)
    spec_lines = np.maximum(np.real(np.fft.fft(kern)) / big, 0.0)
    coef = np.sqrt(spec_lines) * _complex_normal(rng, big)
    ramp = np.exp(-2j * np.pi * f[None, :] * delays[:, None])
    full = np.fft.ifft(coef[None, :] * ramp, axis=1) * big
    return full[:, :n]
