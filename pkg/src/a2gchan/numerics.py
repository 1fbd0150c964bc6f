"""Shared numerical kernels.

Everything here works on *batched* integrands: a callable receives a 1-D
array of abscissae and returns an array whose last axis matches it, so
one adaptive pass integrates a whole stack of related integrands at once.
That is what keeps the nested G-function quadratures tractable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidParameterError, NumericFailure

__all__ = [
    "QuadratureSpec",
    "QuadResult",
    "integrate",
    "ConvergenceSpec",
    "TimeAverage",
    "time_average",
    "SearchSpec",
    "Crossing",
    "first_crossing",
    "gauss_legendre_panels",
    "lag_transform",
]

# 7-point Gauss / 15-point Kronrod pair on [-1, 1] (QUADPACK qk15 constants).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (xgk[1], xgk[3], xgk[5], xgk[7]).
_GW[[1, 3, 5]] = _WG[:3]
_GW[[13, 11, 9]] = _WG[:3]
_GW[7] = _WG[3]


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-7
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidParameterError("quadrature tolerances must be positive")
        if self.max_subdivisions < 10:
            raise InvalidParameterError("max_subdivisions must be at least 10")


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True)
class QuadResult:
    value: np.ndarray | float
    error: np.ndarray | float
    intervals: int


def _squeeze(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


def integrate(
    fn: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    spec: QuadratureSpec | None = None,
    *,
    points: Sequence[float] = (),
    panels: int = 1,
    scale: float = 1.0,
) -> QuadResult:
    """Adaptive Gauss-Kronrod (G7/K15) quadrature of a batched integrand.

    ``fn(x)`` takes a 1-D array of abscissae and returns values with shape
    ``(..., len(x))``; the result has the leading shape.  Refinement stops
    when every component satisfies ``err <= max(abs_tol, rel_tol*|I|)``.
    Intervals carrying more than their share of the remaining error are
    bisected in one vectorised pass per sweep.

    ``b = inf`` is handled by the substitution ``x = a - scale*log(1-u)``,
    which turns ``exp(-(x-a)/scale)`` into a constant; pass ``scale`` close
    to the decay length of the integrand.  ``points`` are interior
    breakpoints (kinks, discontinuities) and ``panels`` pre-splits every
    segment, which is useful for oscillatory integrands.
    """
    spec = spec or DEFAULT_QUADRATURE
    if not (a < b):
        raise InvalidParameterError(f"integration requires a < b, got [{a}, {b}]")
    if math.isinf(a):
        raise InvalidParameterError("lower limit must be finite")

    if math.isinf(b):
        if scale <= 0:
            raise InvalidParameterError("scale must be positive for semi-infinite ranges")

        def g(u, _fn=fn):
            return _fn(a - scale * np.log1p(-u)) * (scale / (1.0 - u))

        brk = [1.0 - math.exp(-(p - a) / scale) for p in points if a < p]
        lo_, hi_ = 0.0, 1.0
    else:
        g = fn
        brk = [p for p in points if a < p < b]
        lo_, hi_ = a, b

    edges = np.unique(np.concatenate([[lo_], np.asarray(brk, float), [hi_]]))
    if panels > 1:
        edges = np.unique(np.concatenate([np.linspace(edges[i], edges[i + 1], panels + 1)
                                          for i in range(len(edges) - 1)]))
    lo, hi = edges[:-1], edges[1:]

    def rule(lo, hi):
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        x = (c[:, None] + h[:, None] * _NODES[None, :]).ravel()
        f = np.asarray(g(x))
        f = f.reshape(f.shape[:-1] + (len(lo), 15))
        if not np.all(np.isfinite(f)):
            raise NumericFailure("integrand returned non-finite values", achieved=math.inf,
                                 interval=(float(lo.min()), float(hi.max())))
        k = (f @ _KW) * h
        gg = (f @ _GW) * h
        return k, np.abs(k - gg)

    vals, errs = rule(lo, hi)
    while True:
        total = vals.sum(axis=-1)
        err_total = errs.sum(axis=-1)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        if np.all(err_total <= tol):
            return QuadResult(_squeeze(total), _squeeze(err_total), len(lo))
        n = len(lo)
        if n >= spec.max_subdivisions:
            worst = float(np.max(err_total / tol * np.maximum(tol, 0)))
            raise NumericFailure(
                f"quadrature did not converge within {spec.max_subdivisions} subintervals",
                achieved=float(np.max(err_total)), worst_scaled=worst,
            )
        share = (tol / n)[..., None]
        bad = np.any((errs > share).reshape(-1, n), axis=0)
        if not bad.any():
            bad[np.argmax(np.max((errs / np.maximum(share, 1e-300)).reshape(-1, n), axis=0))] = True
        room = spec.max_subdivisions - n
        idx = np.flatnonzero(bad)
        if len(idx) > room:
            score = np.max((errs / np.maximum(share, 1e-300)).reshape(-1, n), axis=0)[idx]
            idx = idx[np.argsort(score)[::-1][:max(room, 1)]]
        mid = 0.5 * (lo[idx] + hi[idx])
        new_lo = np.concatenate([lo[idx], mid])
        new_hi = np.concatenate([mid, hi[idx]])
        nv, ne = rule(new_lo, new_hi)
        keep = np.ones(n, bool)
        keep[idx] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[..., keep], nv], axis=-1)
        errs = np.concatenate([errs[..., keep], ne], axis=-1)


def gauss_legendre_panels(edges: Sequence[float], order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights over consecutive ``edges``."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, float)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x[None, :]
    weights = 0.5 * (hi - lo) * w[None, :]
    return nodes.ravel(), weights.ravel()


def lag_transform(lags: np.ndarray, weights: np.ndarray, kernel: np.ndarray,
                  freqs: np.ndarray) -> np.ndarray:
    """Quadrature Fourier transform ``sum_k w_k K(lag_k) exp(-j 2 pi f lag_k)``.

    ``kernel`` may carry leading batch axes; the lag axis is last.
    """
    phase = np.exp(-2j * np.pi * np.outer(lags, np.asarray(freqs, float)))
    return (np.asarray(kernel) * weights) @ phase


@dataclass(frozen=True)
class ConvergenceSpec:
    """Window-doubling stopping rule for time averages.

    The first window should be an integer number of periods of the slowest
    component when the averaged function is (almost) periodic.
    """

    window: float = 1.0
    rtol: float = 5e-3
    points: int = 64
    max_doublings: int = 12
    floor_fraction: float = 0.2

    def __post_init__(self):
        if self.window <= 0 or self.rtol <= 0 or self.points < 2:
            raise InvalidParameterError("invalid time-average convergence spec")


@dataclass(frozen=True)
class TimeAverage:
    value: np.ndarray | float
    window: float
    doublings: int
    change: float


def time_average(fn: Callable[[np.ndarray], np.ndarray],
                 spec: ConvergenceSpec | None = None) -> TimeAverage:
    """Trapezoidal average of ``fn`` over ``[0, T]``, doubling ``T`` until stable.

    Successive estimates must differ by less than ``rtol`` relative to
    ``max(|estimate|, floor_fraction * peak|fn|)`` in every component, so
    averages that tend to zero terminate on an absolute scale tied to the
    function's amplitude.
    """
    spec = spec or ConvergenceSpec()
    n = spec.points
    h = spec.window / n  # fixed step; each doubling appends samples
    t = np.arange(n + 1) * h
    f = np.asarray(fn(t))
    peak = np.max(np.abs(f), axis=-1)
    s_int = f[..., 1:-1].sum(axis=-1)
    ends = f[..., 0], f[..., -1]
    prev = (s_int + 0.5 * (ends[0] + ends[1])) / n
    window = spec.window
    for k in range(1, spec.max_doublings + 1):
        t_new = window + np.arange(1, n + 1) * h
        f_new = np.asarray(fn(t_new))
        peak = np.maximum(peak, np.max(np.abs(f_new), axis=-1))
        s_int = s_int + ends[1] + f_new[..., :-1].sum(axis=-1)
        ends = ends[0], f_new[..., -1]
        n *= 2
        window *= 2
        cur = (s_int + 0.5 * (ends[0] + ends[1])) / n
        scale = np.maximum(np.abs(cur), spec.floor_fraction * peak)
        gap = np.abs(cur - prev)
        if np.all(gap <= spec.rtol * scale):
            change = float(np.max(gap / np.where(scale > 0, scale, 1.0)))
            return TimeAverage(_squeeze(cur), window, k, change)
        prev = cur
    raise NumericFailure("time average did not converge",
                         achieved=float(np.max(gap / np.where(scale > 0, scale, 1.0))),
                         window=window)


@dataclass(frozen=True)
class SearchSpec:
    """Coarse geometric scan followed by bisection."""

    x_min: float = 1e-7
    x_max: float = 10.0
    points_per_decade: int = 60
    rel_resolution: float = 1e-4
    rescan_points: int = 16

    def __post_init__(self):
        if not (0 < self.x_min < self.x_max):
            raise InvalidParameterError("search range must satisfy 0 < x_min < x_max")
        if self.points_per_decade < 2 or not (0 < self.rel_resolution < 1):
            raise InvalidParameterError("invalid search resolution")


@dataclass(frozen=True)
class Crossing:
    location: float
    resolution: float
    bracket: tuple[float, float] | None

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.location)


def first_crossing(curve_fn: Callable[[np.ndarray], np.ndarray], threshold: float,
                   spec: SearchSpec | None = None) -> Crossing:
    """Smallest ``x > 0`` with ``curve_fn(x) <= threshold``.

    ``curve_fn`` is vectorised.  Samples are taken on a geometric grid one
    decade at a time; a local minimum that stays above the threshold
    between samples triggers a fine rescan so a brief dip is not skipped.
    Returns an infinite location when nothing is found below ``x_max``.
    """
    spec = spec or SearchSpec()

    def f(x):
        return np.asarray(curve_fn(np.atleast_1d(np.asarray(x, float))), float)

    decades = math.log10(spec.x_max / spec.x_min)
    n = int(math.ceil(decades * spec.points_per_decade)) + 1
    grid = np.geomspace(spec.x_min, spec.x_max, n)
    chunk = spec.points_per_decade

    bracket = None
    first = f(grid[:1])[0]
    if first <= threshold:
        bracket = (0.0, float(grid[0]))
    xs_seen = [float(grid[0])]
    vs_seen = [first]
    pos = 1
    while bracket is None and pos < n:
        xs = grid[pos:pos + chunk]
        vs = f(xs)
        pos += len(xs)
        x_all = np.concatenate([xs_seen[-2:], xs])
        v_all = np.concatenate([vs_seen[-2:], vs])
        offset = len(x_all) - len(xs)
        below = np.flatnonzero(v_all[offset:] <= threshold)
        stop = offset + below[0] if below.size else len(x_all)
        # dips between samples before the first sampled crossing
        for j in range(1, min(stop, len(x_all) - 1)):
            if v_all[j] < v_all[j - 1] and v_all[j] < v_all[j + 1] and j + 1 >= offset:
                fine = np.linspace(x_all[j - 1], x_all[j + 1], spec.rescan_points + 2)[1:-1]
                fv = f(fine)
                hit = np.flatnonzero(fv <= threshold)
                if hit.size:
                    k = hit[0]
                    lo = fine[k - 1] if k > 0 else x_all[j - 1]
                    bracket = (float(lo), float(fine[k]))
                    break
        if bracket is None and below.size:
            k = stop
            bracket = (float(x_all[k - 1]), float(x_all[k]))
        xs_seen = list(x_all)
        vs_seen = list(v_all)

    if bracket is None:
        return Crossing(math.inf, math.nan, None)

    lo, hi = bracket
    while hi - lo > spec.rel_resolution * hi:
        mid = 0.5 * (lo + hi)
        if f(mid)[0] <= threshold:
            hi = mid
        else:
            lo = mid
    return Crossing(0.5 * (lo + hi), hi - lo, (lo, hi))
