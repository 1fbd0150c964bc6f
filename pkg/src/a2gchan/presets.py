"""Named configurations for the evaluation figures.

Every preset draws its per-MPC delay rates from ``draw_rho(N, RHO_SEED)``
so results are deterministic; pass ``rho_seed`` to re-randomise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidParameterError
from .impairments import ImpairmentSet, SinusoidalNonstationary, WssGaussian
from .scenario import Scenario, draw_rho
from .wobbling import Sinusoidal, Uniform, Wiener

__all__ = ["RHO_SEED", "Preset", "ChannelSetup", "PRESETS", "get_preset", "base_scenario"]

RHO_SEED = 0


@dataclass(frozen=True)
class ChannelSetup:
    """A scenario together with its wobbling and impairment models."""

    scenario: Scenario
    wobbling: object
    impairments: ImpairmentSet

    def __iter__(self):
        return iter((self.scenario, self.wobbling, self.impairments))

    def to_dict(self):
        return {"scenario": self.scenario.to_dict(), "wobbling": self.wobbling.to_dict(),
                "impairments": self.impairments.to_dict()}


@dataclass(frozen=True)
class Preset:
    name: str
    caption: str
    metric: str
    setup: ChannelSetup
    eval_times: tuple[float, ...] = (0.0,)
    variants: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "caption": self.caption, "metric": self.metric,
                "eval_times": list(self.eval_times), "setup": self.setup.to_dict(),
                "variants": {k: v.to_dict() for k, v in self.variants.items()}}


def base_scenario(carrier_freq_hz=6e9, n_mpc=20, k_factor=11.5, rho_seed=RHO_SEED) -> Scenario:
    return Scenario(
        n_mpc=n_mpc, k_factor=k_factor, carrier_freq_hz=carrier_freq_hz, uav_ue_distance_m=300.0,
        aod_los_rad=math.radians(20.0), laplacian_beta=1.0, antenna_offset_m=0.4,
        rho_per_mpc=draw_rho(n_mpc, rho_seed), awgn_psd_w=5e-9)


def _sin(theta_deg=5.0):
    return Sinusoidal(math.radians(theta_deg), Uniform(5.0, 25.0))


def _nonst():
    return SinusoidalNonstationary(0.5, Uniform(5.0, 15.0))


def _chi(k2, l):
    return ImpairmentSet(chi_t=WssGaussian(k2, l), chi_r=WssGaussian(k2, l))


def _psd_imp(k2=1.0, l=0.01):
    g = WssGaussian(k2, l)
    return ImpairmentSet(chi_r=g, eta_t=g, eta_r=g)


def _build(rho_seed):
    s6 = base_scenario(6e9, rho_seed=rho_seed)
    s24 = base_scenario(2.4e9, rho_seed=rho_seed)
    tau0 = s6.uav_ue_delay_s
    out = {}

    def add(name, caption, metric, setup, eval_times=(0.0,), variants=None):
        out[name] = Preset(name, caption, metric, setup, tuple(eval_times), variants or {})

    add("fig2", "PDP, ideal vs impaired hardware (kappa^2 = 0.5 W)", "pdp",
        ChannelSetup(s6, Wiener(), _chi(0.5, 0.05)),
        variants={"ideal": ChannelSetup(s6, Wiener(), ImpairmentSet()),
                  "nonstationary": ChannelSetup(s6, Wiener(),
                                                ImpairmentSet(chi_t=_nonst(), chi_r=_nonst()))})
    add("fig3", "normalized ACF vs dt, Wiener wobble, 6 GHz, l = 0.05 s", "coherence-time",
        ChannelSetup(s6, Wiener(), _chi(1.0, 0.05)),
        variants={"sinusoidal": ChannelSetup(s6, _sin(), _chi(1.0, 0.05))})
    add("fig3-sinusoidal", "normalized ACF vs dt, sinusoidal wobble, 6 GHz, l = 0.05 s",
        "coherence-time", ChannelSetup(s6, _sin(), _chi(1.0, 0.05)), eval_times=(0.0, 0.01, 0.02))
    add("fig4-wiener", "Wiener wobble, impairment length scale l = 0.1 s", "coherence-time",
        ChannelSetup(s6, Wiener(), _chi(1.0, 0.1)),
        variants={"l=0.01": ChannelSetup(s6, Wiener(), _chi(1.0, 0.01))})
    add("fig4-sinusoidal", "sinusoidal wobble, impairment length scale l = 0.1 s", "coherence-time",
        ChannelSetup(s6, _sin(), _chi(1.0, 0.1)),
        variants={"l=0.01": ChannelSetup(s6, _sin(), _chi(1.0, 0.01))})
    add("fig5", "sinusoidal wobble, carrier sweep 2.4/6/30 GHz", "coherence-time",
        ChannelSetup(s24, _sin(), _chi(1.0, 0.05)),
        variants={"6GHz": ChannelSetup(s6, _sin(), _chi(1.0, 0.05)),
                  "30GHz": ChannelSetup(base_scenario(30e9, rho_seed=rho_seed), _sin(),
                                        _chi(1.0, 0.05))})
    add("fig6", "sinusoidal wobble at 2.4 GHz, pitch sweep 5/7/10 deg", "coherence-time",
        ChannelSetup(s24, _sin(5.0), _chi(1.0, 0.05)),
        variants={"7deg": ChannelSetup(s24, _sin(7.0), _chi(1.0, 0.05)),
                  "10deg": ChannelSetup(s24, _sin(10.0), _chi(1.0, 0.05))})
    add("fig7-wss", "normalized ACF vs df, WSS impairments", "coherence-bandwidth",
        ChannelSetup(s6, Wiener(), _chi(1.0, 0.05)))
    add("fig7-nonst", "normalized ACF vs df, nonstationary impairments at t = tau0, 2tau0, 4tau0",
        "coherence-bandwidth",
        ChannelSetup(s6, Wiener(), ImpairmentSet(chi_t=_nonst(), chi_r=_nonst())),
        eval_times=(tau0, 2 * tau0, 4 * tau0))
    add("fig8", "normalized ACF vs df for K in {0, 1, 5, 11.5}, WSS impairments",
        "coherence-bandwidth", ChannelSetup(s6, Wiener(), _chi(1.0, 0.05)),
        variants={f"K={k:g}": ChannelSetup(s6.replace(k_factor=k), Wiener(), _chi(1.0, 0.05))
                  for k in (0.0, 1.0, 5.0)})
    add("fig9", "PSD of n(t), Wiener wobble, 2.4 GHz", "psd",
        ChannelSetup(s24, Wiener(), _psd_imp(1.0, 0.01)),
        variants={"kappa=0.1": ChannelSetup(s24, Wiener(), _psd_imp(0.1, 0.01)),
                  "l=0.1": ChannelSetup(s24, Wiener(), _psd_imp(1.0, 0.1))})
    add("fig10", "PSD of n(t), sinusoidal wobble, 2.4 GHz", "psd",
        ChannelSetup(s24, _sin(), _psd_imp(1.0, 0.01)),
        variants={"kappa=0.1": ChannelSetup(s24, _sin(), _psd_imp(0.1, 0.01)),
                  "l=0.1": ChannelSetup(s24, _sin(), _psd_imp(1.0, 0.1))})
    add("fig11", "PSD of n(t), sinusoidal wobble, pitch sweep 5/7/10 deg", "psd",
        ChannelSetup(s24, _sin(5.0), _psd_imp(1.0, 0.01)),
        variants={f"{d}deg": ChannelSetup(s24, _sin(d), _psd_imp(1.0, 0.01)) for d in (7.0, 10.0)})
    return out


PRESETS = _build(RHO_SEED)


def get_preset(name: str, rho_seed: int | None = None) -> Preset:
    """Look up a preset, optionally with a different delay-rate draw."""
    table = PRESETS if rho_seed is None or rho_seed == RHO_SEED else _build(int(rho_seed))
    try:
        return table[name]
    except KeyError:
        raise InvalidParameterError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None
