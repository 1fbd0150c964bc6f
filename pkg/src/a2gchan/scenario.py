"""Physical and channel parameters of the air-to-ground link."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "SPEED_OF_LIGHT",
    "Scenario",
    "ThresholdSpec",
    "Atom",
    "wavelength",
    "mpc_mean_powers",
    "mpc_amplitude_sq",
    "delay_pdf",
    "doppler_phase",
    "draw_rho",
]

SPEED_OF_LIGHT = 299_792_458.0
HALF_PI = 0.5 * math.pi


def _positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and value > 0
            and math.isfinite(value)):
        raise InvalidParameterError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class Scenario:
    """Immutable channel configuration.

    ``k_factor`` may be ``math.inf`` for a pure line-of-sight link.  Angles
    are in radians; ``awgn_psd_w`` is the two-sided white level N0/2.
    """

    n_mpc: int
    k_factor: float
    carrier_freq_hz: float
    uav_ue_distance_m: float
    aod_los_rad: float
    laplacian_beta: float
    antenna_offset_m: float
    rho_per_mpc: tuple[float, ...]
    awgn_psd_w: float = 5e-9

    def __post_init__(self):
        if isinstance(self.n_mpc, bool) or not isinstance(self.n_mpc, (int, np.integer)) \
                or self.n_mpc < 1:
            raise InvalidParameterError(f"n_mpc must be an integer >= 1, got {self.n_mpc!r}")
        object.__setattr__(self, "n_mpc", int(self.n_mpc))
        k = float(self.k_factor)
        if not (k >= 0) or math.isnan(k):
            raise InvalidParameterError(f"k_factor must be >= 0, got {self.k_factor!r}")
        object.__setattr__(self, "k_factor", k)
        _positive("carrier_freq_hz", self.carrier_freq_hz)
        _positive("uav_ue_distance_m", self.uav_ue_distance_m)
        _positive("laplacian_beta", self.laplacian_beta)
        _positive("antenna_offset_m", self.antenna_offset_m)
        _positive("awgn_psd_w", self.awgn_psd_w)
        if not (0.0 <= self.aod_los_rad < HALF_PI):
            raise InvalidParameterError(f"aod_los_rad must lie in [0, pi/2), got {self.aod_los_rad!r}")
        rho = tuple(float(r) for r in np.atleast_1d(np.asarray(self.rho_per_mpc, float)))
        if len(rho) != self.n_mpc:
            raise InvalidParameterError(
                f"rho_per_mpc has {len(rho)} entries but n_mpc = {self.n_mpc}")
        for r in rho:
            _positive("rho_per_mpc entry", r)
        object.__setattr__(self, "rho_per_mpc", rho)

    @property
    def uav_ue_delay_s(self) -> float:
        return self.uav_ue_distance_m / SPEED_OF_LIGHT

    @property
    def rho(self) -> np.ndarray:
        return np.asarray(self.rho_per_mpc)

    def replace(self, **changes) -> "Scenario":
        data = asdict(self)
        data.update(changes)
        return Scenario(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rho_per_mpc"] = list(self.rho_per_mpc)
        d["uav_ue_delay_s"] = self.uav_ue_delay_s
        if math.isinf(self.k_factor):
            d["k_factor"] = "inf"
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        data = dict(data)
        delay = data.pop("uav_ue_delay_s", None)
        if isinstance(data.get("k_factor"), str):
            data["k_factor"] = float(data["k_factor"])
        try:
            sc = cls(**data)
        except TypeError as exc:
            raise InvalidParameterError(f"bad scenario document: {exc}") from None
        if delay is not None and not math.isclose(delay, sc.uav_ue_delay_s, rel_tol=1e-12):
            raise InvalidParameterError("uav_ue_delay_s is inconsistent with uav_ue_distance_m")
        return sc

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class ThresholdSpec:
    gamma_t: float = 0.5
    gamma_b: float = 0.95

    def __post_init__(self):
        for name in ("gamma_t", "gamma_b"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise InvalidParameterError(f"{name} must lie strictly in (0, 1), got {v!r}")


@dataclass(frozen=True)
class Atom:
    """A Dirac component ``weight * delta(x - location)``."""

    location: float
    weight: float | complex


def wavelength(scenario_or_freq) -> float:
    fc = getattr(scenario_or_freq, "carrier_freq_hz", scenario_or_freq)
    if not (fc > 0):
        raise InvalidParameterError(f"carrier frequency must be positive, got {fc!r}")
    return SPEED_OF_LIGHT / fc


def mpc_mean_powers(scenario: Scenario) -> tuple[float, float]:
    """Mean NLoS power ``E|alpha_i|^2`` and the LoS power ``N*K`` times it.

    The value is the exact average of :func:`mpc_amplitude_sq` over
    ``omega ~ U[0, pi/2)``, i.e. ``(1/pi)(2 - e^{-w0/b} - e^{-(pi/2-w0)/b})``.
    For ``K = inf`` the LoS power is infinite; use :func:`los_nlos_weights`
    when a normalised split is needed.
    """
    b, w0 = scenario.laplacian_beta, scenario.aod_los_rad
    p1 = (2.0 - math.exp(-w0 / b) - math.exp(-(HALF_PI - w0) / b)) / math.pi
    k = scenario.k_factor
    p0 = math.inf if math.isinf(k) else scenario.n_mpc * k * p1
    return p1, p0


def los_nlos_weights(scenario: Scenario) -> tuple[float, float]:
    """Fractions ``(K/(K+1), 1/(K+1))`` of total power, finite for ``K = inf``."""
    k = scenario.k_factor
    if math.isinf(k):
        return 1.0, 0.0
    return k / (k + 1.0), 1.0 / (k + 1.0)


def mpc_amplitude_sq(omega_i, scenario: Scenario):
    """Laplacian angular power ``(1/2b) exp(-|w - w0|/b)``."""
    w = np.asarray(omega_i, float)
    if np.any((w < 0) | (w >= HALF_PI)) or np.any(~np.isfinite(w)):
        raise InvalidParameterError("omega_i must lie in [0, pi/2)")
    b = scenario.laplacian_beta
    out = np.exp(-np.abs(w - scenario.aod_los_rad) / b) / (2.0 * b)
    return out.item() if out.ndim == 0 else out


def _angular_power(w, scenario):
    # unchecked variant for quadrature nodes
    b = scenario.laplacian_beta
    return np.exp(-np.abs(w - scenario.aod_los_rad) / b) / (2.0 * b)


def delay_pdf(i: int, tau, scenario: Scenario):
    """Delay law of MPC ``i``.

    ``i = 0`` returns an :class:`Atom` of unit weight at ``tau0`` (``tau`` is
    ignored); ``i >= 1`` returns the shifted exponential density at ``tau``.
    """
    if not (0 <= i <= scenario.n_mpc):
        raise InvalidParameterError(f"MPC index {i} outside 0..{scenario.n_mpc}")
    tau0 = scenario.uav_ue_delay_s
    if i == 0:
        return Atom(tau0, 1.0)
    rho = scenario.rho_per_mpc[i - 1]
    x = np.asarray(tau, float) - tau0
    out = np.where(x >= 0, rho * np.exp(-rho * np.maximum(x, 0.0)), 0.0)
    return out.item() if out.ndim == 0 else out


def doppler_phase(omega_i, theta_diff_rad, scenario: Scenario):
    out = (2.0 * math.pi / wavelength(scenario)) * scenario.antenna_offset_m \
        * np.cos(omega_i) * np.asarray(theta_diff_rad, float)
    return out.item() if np.ndim(out) == 0 else out


def draw_rho(n: int, seed: int, low: float = 1e7, high: float = 1e8) -> tuple[float, ...]:
    """Draw ``n`` delay rates ``U[low, high)`` from a seeded generator."""
    if n < 1 or not (0 < low < high):
        raise InvalidParameterError("draw_rho needs n >= 1 and 0 < low < high")
    rng = np.random.default_rng(seed)
    return tuple(float(r) for r in rng.uniform(low, high, size=n))
