"""UAV pitch-angle processes and the wobble-averaged phasor expectations.

Two processes are supported besides a perfectly stable platform: a Wiener
process (stationary Gaussian increments) and a random sinusoid
``L sin(2 pi Q t)`` with ``L ~ U[-theta_m, theta_m)``.  The central objects
are the G-functions ``E[|alpha_i|^2 exp(-j k_i [theta(t+dt) - theta(t)])]``
with ``k_i = (2 pi / lambda) y_D cos(omega_i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidParameterError, WrongModelError
from .numerics import QuadratureSpec, integrate
from .scenario import HALF_PI, Scenario, _angular_power, los_nlos_weights, mpc_mean_powers, wavelength

__all__ = [
    "Uniform",
    "PointMass",
    "FrequencyDistribution",
    "NoWobble",
    "Wiener",
    "Sinusoidal",
    "WobblingModel",
    "increment_cf",
    "g_si",
    "g_nonsi",
    "g_function",
    "phasor_factors",
    "normalized_g_sum",
    "sample_path",
]


# -- frequency laws ---------------------------------------------------------

@dataclass(frozen=True)
class Uniform:
    """``Q ~ U[low_hz, high_hz]``."""

    low_hz: float
    high_hz: float

    def __post_init__(self):
        if not (0 <= self.low_hz < self.high_hz and math.isfinite(self.high_hz)):
            raise InvalidParameterError(
                f"uniform frequency law needs 0 <= low < high, got [{self.low_hz}, {self.high_hz}]")

    @property
    def slowest_period(self) -> float:
        return 1.0 / self.low_hz if self.low_hz > 0 else 1.0 / self.high_hz

    @property
    def highest(self) -> float:
        return self.high_hz

    def pdf(self, q):
        q = np.asarray(q, float)
        return np.where((q >= self.low_hz) & (q <= self.high_hz),
                        1.0 / (self.high_hz - self.low_hz), 0.0)

    def sample(self, rng, size=None):
        return rng.uniform(self.low_hz, self.high_hz, size)

    def expect_cos(self, x):
        """``E[cos(2 pi Q x)]`` in closed form."""
        x = np.asarray(x, float)
        m = 0.5 * (self.low_hz + self.high_hz)
        w = self.high_hz - self.low_hz
        return np.cos(2 * np.pi * m * x) * np.sinc(w * x)

    def expect_sin(self, x):
        x = np.asarray(x, float)
        m = 0.5 * (self.low_hz + self.high_hz)
        w = self.high_hz - self.low_hz
        return np.sin(2 * np.pi * m * x) * np.sinc(w * x)

    def expectation(self, fn, spec=None, *, cycles: float = 0.0):
        """``E[fn(Q)]`` for a batched ``fn(q) -> (..., len(q))``.

        ``cycles`` hints how many oscillations ``fn`` makes across the
        support; large values pre-split the range into panels.
        """
        w = self.high_hz - self.low_hz
        panels = 1 if cycles <= 5 else int(min(400, math.ceil(cycles)))
        res = integrate(lambda q: fn(q) / w, self.low_hz, self.high_hz, spec, panels=panels)
        return res.value

    def to_dict(self):
        return {"kind": "uniform", "low_hz": self.low_hz, "high_hz": self.high_hz}


@dataclass(frozen=True)
class PointMass:
    """Deterministic frequency ``Q = q_hz``."""

    q_hz: float

    def __post_init__(self):
        if not (self.q_hz > 0 and math.isfinite(self.q_hz)):
            raise InvalidParameterError(f"point-mass frequency must be positive, got {self.q_hz!r}")

    @property
    def slowest_period(self) -> float:
        return 1.0 / self.q_hz

    @property
    def highest(self) -> float:
        return self.q_hz

    def pdf(self, q):
        raise WrongModelError("a point mass has no density")

    def sample(self, rng, size=None):
        return np.full(size, self.q_hz) if size is not None else self.q_hz

    def expect_cos(self, x):
        return np.cos(2 * np.pi * self.q_hz * np.asarray(x, float))

    def expect_sin(self, x):
        return np.sin(2 * np.pi * self.q_hz * np.asarray(x, float))

    def expectation(self, fn, spec=None, *, cycles: float = 0.0):
        return np.asarray(fn(np.array([self.q_hz])))[..., 0]

    def to_dict(self):
        return {"kind": "point_mass", "q_hz": self.q_hz}


FrequencyDistribution = Union[Uniform, PointMass]


def frequency_from_dict(d: dict) -> FrequencyDistribution:
    kind = d.get("kind")
    if kind == "uniform":
        return Uniform(float(d["low_hz"]), float(d["high_hz"]))
    if kind == "point_mass":
        return PointMass(float(d["q_hz"]))
    raise InvalidParameterError(f"unknown frequency distribution kind {kind!r}")


# -- wobbling models ----------------------------------------------------------

@dataclass(frozen=True)
class NoWobble:
    """Perfectly stable platform, ``theta(t) = 0``."""

    def to_dict(self):
        return {"kind": "none"}


@dataclass(frozen=True)
class Wiener:
    """Wiener pitch process with increment variance ``b * |dt|`` (rad^2)."""

    b: float = 1.0

    def __post_init__(self):
        if not (self.b > 0 and math.isfinite(self.b)):
            raise InvalidParameterError(f"Wiener scale b must be positive, got {self.b!r}")

    def to_dict(self):
        return {"kind": "wiener", "b": self.b}


@dataclass(frozen=True)
class Sinusoidal:
    """``theta(t) = L sin(2 pi Q t)``, ``L ~ U[-theta_max, theta_max)``, ``Q ~ freq_dist``."""

    theta_max_rad: float
    freq_dist: FrequencyDistribution

    def __post_init__(self):
        if not (self.theta_max_rad >= 0 and self.theta_max_rad < HALF_PI):
            raise InvalidParameterError(
                f"theta_max_rad must lie in [0, pi/2), got {self.theta_max_rad!r}")
        if not isinstance(self.freq_dist, (Uniform, PointMass)):
            raise InvalidParameterError("freq_dist must be Uniform or PointMass")

    def to_dict(self):
        return {"kind": "sinusoidal", "theta_max_rad": self.theta_max_rad,
                "freq_dist": self.freq_dist.to_dict()}


WobblingModel = Union[NoWobble, Wiener, Sinusoidal]


def wobbling_from_dict(d: dict) -> WobblingModel:
    kind = d.get("kind")
    if kind == "none":
        return NoWobble()
    if kind == "wiener":
        return Wiener(float(d.get("b", 1.0)))
    if kind == "sinusoidal":
        return Sinusoidal(float(d["theta_max_rad"]), frequency_from_dict(d["freq_dist"]))
    raise InvalidParameterError(f"unknown wobbling kind {kind!r}")


def has_stationary_increments(model: WobblingModel) -> bool:
    return isinstance(model, (NoWobble, Wiener))


# -- characteristic functions -------------------------------------------------

def _increment_amplitude(t, dt, q):
    """``sin(2 pi q (t+dt)) - sin(2 pi q t)`` without cancellation at small dt."""
    return 2.0 * np.cos(np.pi * q * (2.0 * t + dt)) * np.sin(np.pi * q * dt)


def _sinusoidal_cf(c, t, dt, freq_dist, spec):
    """``E_Q[sinc(c * D(t, dt, Q))]`` broadcast over ``c`` and ``dt``.

    ``c`` and ``dt`` broadcast to a common leading shape; the result has
    that shape.
    """
    c = np.asarray(c, float)
    dt = np.asarray(dt, float)
    shape = np.broadcast_shapes(c.shape, dt.shape)
    cb = np.broadcast_to(c, shape)[..., None]
    db = np.broadcast_to(dt, shape)[..., None]
    span = getattr(freq_dist, "high_hz", 0.0) - getattr(freq_dist, "low_hz", 0.0)
    amp = float(np.max(np.abs(cb))) if cb.size else 0.0
    dmax = float(np.max(np.abs(2.0 * t + db))) if db.size else 0.0
    # oscillations of D across the q support, each sweeping ~4*amp sinc lobes
    cycles = 0.5 * span * dmax * max(1.0, 4.0 * amp)

    def fn(q):
        return np.sinc(cb * _increment_amplitude(t, db, q))

    out = freq_dist.expectation(fn, spec, cycles=cycles)
    return np.asarray(out).reshape(shape)


def increment_cf(model: WobblingModel, omega, t, dt, spec: QuadratureSpec | None = None):
    """``E[exp(j omega (theta(t+dt) - theta(t)))]`` (real for all supported models).

    Broadcasts ``omega`` against ``dt``.  The Wiener value uses ``|dt|`` so
    the result is even in the lag.
    """
    omega = np.asarray(omega, float)
    dt = np.asarray(dt, float)
    if isinstance(model, NoWobble):
        out = np.ones(np.broadcast_shapes(omega.shape, dt.shape))
    elif isinstance(model, Wiener):
        out = np.exp(-0.5 * omega**2 * model.b * np.abs(dt))
    elif isinstance(model, Sinusoidal):
        out = _sinusoidal_cf(omega * model.theta_max_rad / np.pi, float(t), dt, model.freq_dist, spec)
    else:
        raise WrongModelError(f"unsupported wobbling model {model!r}")
    out = np.where(np.broadcast_to(dt, out.shape) == 0, 1.0, out)
    return out.item() if out.ndim == 0 else out


# -- G-functions ----------------------------------------------------------------

def _k_amplitude(scenario: Scenario) -> float:
    """``(2 pi / lambda) * y_D``: radians of Doppler phase per radian of pitch."""
    return 2.0 * np.pi * scenario.antenna_offset_m / wavelength(scenario)


def _nlos_integral(phasor, scenario: Scenario, spec):
    """``int_0^{pi/2} (1/(pi b)) e^{-|w-w0|/b} phasor(cos w) dw`` with a kink split at ``w0``."""

    def fn(w):
        return 2.0 / np.pi * _angular_power(w, scenario) * phasor(np.cos(w))

    return integrate(fn, 0.0, HALF_PI, spec, points=(scenario.aod_los_rad,)).value


def _los_nlos_raw(t, dt, scenario: Scenario, model: WobblingModel, spec):
    """Unnormalised ``(E[phasor at w0], G_1)`` over an array of lags."""
    dt = np.atleast_1d(np.asarray(dt, float))
    k = _k_amplitude(scenario)
    cos0 = math.cos(scenario.aod_los_rad)
    if isinstance(model, NoWobble):
        los = np.ones_like(dt)
        nlos = np.full_like(dt, mpc_mean_powers(scenario)[0])
    elif isinstance(model, Wiener):
        a = 0.5 * k**2 * model.b * np.abs(dt)
        los = np.exp(-a * cos0**2)
        nlos = _nlos_integral(lambda c: np.exp(-a[:, None] * c**2), scenario, spec)
    elif isinstance(model, Sinusoidal):
        scale = k * model.theta_max_rad / np.pi
        los = _sinusoidal_cf(scale * cos0, float(t), dt, model.freq_dist, spec)
        nlos = _nlos_integral(
            lambda c: _sinusoidal_cf(scale * c[None, :], float(t), dt[:, None], model.freq_dist, spec),
            scenario, spec)
    else:
        raise WrongModelError(f"unsupported wobbling model {model!r}")
    zero = dt == 0
    los = np.where(zero, 1.0, los)
    nlos = np.where(zero, mpc_mean_powers(scenario)[0], nlos)
    return los, nlos


def phasor_factors(t, dt, scenario: Scenario, model: WobblingModel,
                   spec: QuadratureSpec | None = None):
    """Unit-normalised ``(G_0 / P_alpha0, G_1 / P_alpha1)`` over an array of lags.

    Both equal one at ``dt = 0`` and stay finite for ``K = inf``.
    """
    los, g1 = _los_nlos_raw(t, dt, scenario, model, spec)
    return los, g1 / mpc_mean_powers(scenario)[0]


def normalized_g_sum(t, dt, scenario: Scenario, model: WobblingModel,
                     spec: QuadratureSpec | None = None):
    """``(G_0 + N G_1) / (N (K+1) P_alpha1)``; equals one at zero lag."""
    los, nlos = phasor_factors(t, dt, scenario, model, spec)
    w_los, w_nlos = los_nlos_weights(scenario)
    return w_los * los + w_nlos * nlos


def _scalar_or_array(x, like):
    x = np.asarray(x)
    return x.item() if np.ndim(like) == 0 else x.reshape(np.shape(like))


def g_si(i: int, dt, scenario: Scenario, model: WobblingModel,
         spec: QuadratureSpec | None = None):
    """G-function for platforms whose pitch has stationary increments.

    ``i = 0`` gives ``N K P_alpha1 exp(-(2 pi^2/lambda^2) y_D^2 cos^2(w0) b |dt|)``
    and ``i >= 1`` the Laplacian-weighted angular integral.  ``P_alpha1``
    is the exact mean NLoS power, so ``G_0(0) + N G_1(0)`` is the total
    channel power ``N (K+1) P_alpha1``.
    """
    if not has_stationary_increments(model):
        raise WrongModelError("g_si requires a wobbling model with stationary increments")
    return _g(i, 0.0, dt, scenario, model, spec)


def g_nonsi(i: int, t, dt, scenario: Scenario, model: WobblingModel,
            spec: QuadratureSpec | None = None):
    """G-function of the sinusoidal pitch process at observation time ``t``.

    The NLoS value is the same for every ``i >= 1``: it is computed once,
    without reference to ``i``.
    """
    if not isinstance(model, Sinusoidal):
        raise WrongModelError("g_nonsi requires the sinusoidal wobbling model")
    return _g(i, t, dt, scenario, model, spec)


def g_function(i: int, t, dt, scenario: Scenario, model: WobblingModel,
               spec: QuadratureSpec | None = None):
    """Dispatch to :func:`g_si` or :func:`g_nonsi` by model."""
    return _g(i, t, dt, scenario, model, spec)


def _g(i, t, dt, scenario, model, spec):
    if not (0 <= i <= scenario.n_mpc):
        raise InvalidParameterError(f"MPC index {i} outside 0..{scenario.n_mpc}")
    los, g1 = _los_nlos_raw(t, dt, scenario, model, spec)
    if i == 0:
        p0 = mpc_mean_powers(scenario)[1]
        return _scalar_or_array(p0 * los, dt)
    return _scalar_or_array(g1, dt)


# -- sampling -----------------------------------------------------------------

def sample_path(model: WobblingModel, time_grid, rng: np.random.Generator,
                n_paths: int | None = None) -> np.ndarray:
    """Draw pitch trajectories on ``time_grid`` (which must start at 0).

    Returns shape ``(len(time_grid),)`` or ``(n_paths, len(time_grid))``.
    """
    t = np.asarray(time_grid, float)
    if t.ndim != 1 or t.size == 0:
        raise InvalidParameterError("time grid must be a non-empty 1-D array")
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise InvalidParameterError("time grid must start at 0 and be strictly increasing")
    m = 1 if n_paths is None else int(n_paths)
    if isinstance(model, NoWobble):
        out = np.zeros((m, t.size))
    elif isinstance(model, Wiener):
        steps = rng.standard_normal((m, t.size - 1)) * np.sqrt(model.b * np.diff(t))
        out = np.concatenate([np.zeros((m, 1)), np.cumsum(steps, axis=1)], axis=1)
    elif isinstance(model, Sinusoidal):
        amp = rng.uniform(-model.theta_max_rad, model.theta_max_rad, (m, 1))
        q = np.reshape(model.freq_dist.sample(rng, m), (m, 1))
        out = amp * np.sin(2 * np.pi * q * t[None, :])
    else:
        raise WrongModelError(f"unsupported wobbling model {model!r}")
    return out[0] if n_paths is None else out
