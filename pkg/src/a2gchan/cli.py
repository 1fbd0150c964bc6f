"""Command-line entry point: ``a2gchan <command> [options]``.

Every run writes its curves as CSV + JSON into ``--out`` together with a
``manifest.json`` (resolved configuration, seed, version, wall time and the
SHA-256 of every output).  ``a2gchan rerun manifest.json`` repeats a run and
checks the outputs are bit-identical.

Exit codes: 0 success, 1 validation failed (mc-validate / rerun mismatch),
2 invalid configuration, 3 numeric failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import metrics as mx
from . import noise_psd as npsd
from .errors import InvalidParameterError, NumericFailure, UndefinedEstimateError, WrongModelError
from .impairments import ImpairmentSet, WssGaussian
from .mc_oracle import McConfig, estimate_channel_acf, estimate_g
from .numerics import integrate
from .presets import PRESETS, ChannelSetup, get_preset
from .scenario import ThresholdSpec, draw_rho
from .serialization import file_sha256, load_setup, write_csv, write_json
from .wobbling import NoWobble, Sinusoidal, Wiener, g_function

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4
COMMANDS = ("pdp", "coherence-time", "coherence-bandwidth", "psd", "sweep", "mc-validate",
            "presets", "rerun")
SWEEP_AXES = ("carrier_freq", "theta_max", "kappa_sq", "length_scale", "k_factor")
SWEEP_METRICS = ("coherence-time", "coherence-bandwidth", "delay-spread")


# -- argument parsing -----------------------------------------------------------------

def _common(p, *, thresholds=False):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", help="named figure configuration (see `presets`)")
    src.add_argument("--scenario", help="setup JSON file (scenario, wobbling, impairments)")
    p.add_argument("--out", default="a2gchan-out", help="output directory")
    p.add_argument("--eval-time", type=float, default=None, help="evaluation time t [s]")
    p.add_argument("--rho-seed", type=int, default=None, help="re-draw the per-MPC delay rates")
    p.add_argument("--k-factor", type=float, default=None)
    p.add_argument("--carrier-freq-hz", type=float, default=None)
    p.add_argument("--theta-max-deg", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--grid-max", type=float, default=None, help="upper end of the output grid")
    p.add_argument("--grid-points", type=int, default=None)
    if thresholds:
        p.add_argument("--gamma-t", type=float, default=0.5)
        p.add_argument("--gamma-b", type=float, default=0.95)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="a2gchan", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"a2gchan {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("pdp", help="power delay profile and delay spreads"))
    _common(sub.add_parser("coherence-time", help="coherence time and time-domain ACF"), thresholds=True)
    _common(sub.add_parser("coherence-bandwidth", help="coherence bandwidth and frequency ACF"),
            thresholds=True)
    p = sub.add_parser("psd", help="PSD of the distortion-plus-noise process")
    _common(p)
    p.add_argument("--psd-mode", choices=npsd.PSD_MODES, default="hermitian")
    p = sub.add_parser("sweep", help="scalar metric over one parameter axis")
    _common(p, thresholds=True)
    p.add_argument("--sweep-axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--sweep-values", required=True,
                   help="comma-separated values (Hz, degrees, W, s or linear K)")
    p.add_argument("--metric", choices=SWEEP_METRICS, default="coherence-time")
    p = sub.add_parser("mc-validate", help="compare analytic quantities with Monte Carlo")
    _common(p)
    p.add_argument("--paths", type=int, default=100_000)
    p = sub.add_parser("presets", help="list the figure presets")
    p.add_argument("--out", default=None)
    p = sub.add_parser("rerun", help="repeat a run from its manifest and compare outputs")
    p.add_argument("manifest")
    p.add_argument("--out", default=None)
    return ap


# -- setup resolution ------------------------------------------------------------------

def _resolve(args):
    if args.preset:
        pre = get_preset(args.preset, args.rho_seed)
        setup, eval_times = pre.setup, pre.eval_times
    elif args.scenario:
        setup, eval_times = load_setup(args.scenario), (0.0,)
        if args.rho_seed is not None:
            sc = setup.scenario
            setup = replace(setup, scenario=sc.replace(rho_per_mpc=draw_rho(sc.n_mpc, args.rho_seed)))
    else:
        raise InvalidParameterError("give --preset or --scenario")
    sc, wob = setup.scenario, setup.wobbling
    if args.k_factor is not None:
        sc = sc.replace(k_factor=args.k_factor)
    if args.carrier_freq_hz is not None:
        sc = sc.replace(carrier_freq_hz=args.carrier_freq_hz)
    if args.theta_max_deg is not None:
        if not isinstance(wob, Sinusoidal):
            raise InvalidParameterError("--theta-max-deg needs sinusoidal wobbling")
        wob = replace(wob, theta_max_rad=math.radians(args.theta_max_deg))
    if args.eval_time is not None:
        eval_times = (args.eval_time,)
    return ChannelSetup(sc, wob, setup.impairments), tuple(eval_times)


def _apply_axis(setup: ChannelSetup, axis, value) -> ChannelSetup:
    sc, wob, imp = setup.scenario, setup.wobbling, setup.impairments
    if axis == "carrier_freq":
        sc = sc.replace(carrier_freq_hz=value)
    elif axis == "k_factor":
        sc = sc.replace(k_factor=value)
    elif axis == "theta_max":
        if not isinstance(wob, Sinusoidal):
            raise InvalidParameterError("the theta_max axis needs sinusoidal wobbling")
        wob = replace(wob, theta_max_rad=math.radians(value))
    else:
        slots = {}
        for name in ("chi_t", "chi_r", "eta_t", "eta_r"):
            m = getattr(imp, name)
            if isinstance(m, WssGaussian):
                slots[name] = (replace(m, kappa_sq_w=value) if axis == "kappa_sq"
                               else replace(m, length_scale_s=value))
        if not slots:
            raise InvalidParameterError(f"the {axis} axis needs at least one WSS impairment")
        imp = replace(imp, **slots)
    return ChannelSetup(sc, wob, imp)


# -- commands ---------------------------------------------------------------------

class Run:
    """Collects written files and summary lines for the manifest."""

    def __init__(self, out: Path):
        self.out = out
        self.files: list[Path] = []
        self.summary: list[str] = []
        self.results: dict = {}

    def curve(self, stem, curve, xname):
        self.files.append(write_csv(self.out / f"{stem}.csv", (xname, "re", "im", "abs", "kind"),
                                    curve.csv_rows()))
        self.files.append(write_json(self.out / f"{stem}.json", curve.to_dict()))

    def say(self, line):
        self.summary.append(line)
        print(line)


def _grid(args, default_max, default_points, start=0.0):
    top = args.grid_max if args.grid_max is not None else default_max
    n = args.grid_points if args.grid_points is not None else default_points
    if not (top > start) or n < 2:
        raise InvalidParameterError("grid needs --grid-max above its start and >= 2 points")
    return np.linspace(start, top, n)


def _cmd_pdp(args, setup, times, run: Run):
    sc, imp = setup.scenario, setup.impairments
    tau0 = sc.uav_ue_delay_s
    excess = _grid(args, 5.0 / float(sc.rho.min()), 501)
    for t in times:
        tag = "" if len(times) == 1 else f"_t{t:.3e}"
        run.curve(f"pdp{tag}", mx.pdp_curve(tau0 + excess, t, sc, imp), "tau_s")
        mu, sigma = mx.delay_spreads(sc, imp, t=t)
        run.results[f"delay_spreads{tag}"] = {"mu_s": mu, "sigma_s": sigma, "t": t}
        run.say(f"mu_tau = {mu:.4e} s, sigma_tau = {sigma:.4e} s")


def _cmd_ct(args, setup, times, run: Run):
    sc, wob, imp = setup
    th = ThresholdSpec(gamma_t=args.gamma_t, gamma_b=args.gamma_b)
    for t in times:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = mx.coherence_time(t, sc, wob, imp, th)
        tag = "" if len(times) == 1 else f"_t{t:.3e}"
        top = 4 * res.value if math.isfinite(res.value) else 0.1
        run.curve(f"acf_time{tag}", mx.acf_time_curve(t, _grid(args, top, 401), sc, wob, imp,
                                                       normalized=True), "dt_s")
        run.results[f"coherence_time{tag}"] = res.to_dict()
        run.say(res.summary() + ("" if len(times) == 1 else f" (t = {t:.3e} s)"))


def _cmd_cb(args, setup, times, run: Run):
    sc, _, imp = setup
    th = ThresholdSpec(gamma_t=args.gamma_t, gamma_b=args.gamma_b)
    if imp.is_wss:
        times = times[:1]
    for t in times:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = mx.coherence_bandwidth(t, sc, imp, th)
        tag = "" if len(times) == 1 else f"_t{t:.3e}"
        top = 5 * res.value if math.isfinite(res.value) else 1e8
        run.curve(f"acf_freq{tag}", mx.acf_freq_curve(_grid(args, top, 401), t, sc, imp), "df_hz")
        run.results[f"coherence_bandwidth{tag}"] = res.to_dict()
        run.say(res.summary() + ("" if len(times) == 1 else f" (t = {t:.3e} s)"))


def _psd(setup, f, mode):
    sc, wob, imp = setup
    if imp.is_wss and isinstance(wob, (Wiener, NoWobble)):
        return npsd.psd_wss_si(f, sc, wob, imp, mode)
    if mode != "hermitian":
        raise InvalidParameterError("paper-literal mode exists only for Wiener (or no) wobbling")
    if imp.is_wss:
        return npsd.psd_wss(f, sc, wob, imp)
    return npsd.psd_nonstationary(f, sc, wob, imp)


def _cmd_psd(args, setup, times, run: Run):
    top = args.grid_max if args.grid_max is not None else 200.0
    n = args.grid_points if args.grid_points is not None else 801
    f = np.linspace(-top, top, n)
    p = _psd(setup, f, args.psd_mode)
    run.files.append(write_csv(run.out / "psd.csv",
                               ("f_hz", "psd_w_per_hz_real", "psd_w_per_hz_abs", "psd_db"),
                               p.csv_rows()))
    run.files.append(write_json(run.out / "psd.json", p.to_dict()))
    power = npsd.total_power(setup.scenario, setup.impairments)
    run.results["psd"] = {"mode": p.mode, "distortion_power_w": power,
                          "atoms": [{"location": a.location, "weight": float(np.real(a.weight))}
                                    for a in p.atoms]}
    run.say(f"P_n = {power:.4e} W (white floor N0/2 = {p.white_floor_w:.3e} W/Hz not included)")
    for a in p.atoms:
        run.say(f"atom at f = {a.location:g} Hz, weight {float(np.real(a.weight)):.4e} W")


def _scalar(metric, setup, t, args):
    sc, wob, imp = setup
    th = ThresholdSpec(gamma_t=args.gamma_t, gamma_b=args.gamma_b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if metric == "coherence-time":
            return mx.coherence_time(t, sc, wob, imp, th).value, "s"
        if metric == "coherence-bandwidth":
            return mx.coherence_bandwidth(t, sc, imp, th).value, "Hz"
    return mx.delay_spreads(sc, imp, t=t)[1], "s"


def _cmd_sweep(args, setup, times, run: Run):
    try:
        values = [float(v) for v in args.sweep_values.split(",") if v.strip()]
    except ValueError:
        raise InvalidParameterError(f"bad --sweep-values {args.sweep_values!r}") from None
    if not values:
        raise InvalidParameterError("--sweep-values is empty")
    t = times[0]
    rows = []
    for v in values:
        val, unit = _scalar(args.metric, _apply_axis(setup, args.sweep_axis, v), t, args)
        rows.append((v, val))
        run.say(f"{args.sweep_axis} = {v:g}: {args.metric} = {val:.4e} {unit}")
    run.files.append(write_csv(run.out / "sweep.csv", (args.sweep_axis, f"{args.metric}_{unit}"), rows))
    run.results["sweep"] = {"axis": args.sweep_axis, "metric": args.metric, "unit": unit,
                            "values": values, "results": [r[1] for r in rows], "t": t}


def _compare(report, name, est, analytic, **where):
    diff = abs(est.mean - analytic)
    ok = bool(diff <= 3 * est.std_error + 1e-12 * abs(analytic))
    report.append({"quantity": name, **where, "analytic": complex(analytic), "mc_mean": est.mean,
                   "std_error": est.std_error, "z": diff / est.std_error if est.std_error else 0.0,
                   "pass": ok})


def _cmd_mc(args, setup, times, run: Run):
    sc, wob, imp = setup
    cfg = McConfig(n_paths=args.paths, seed=args.seed, workers=args.workers)
    t = times[0]
    report = []
    dts = np.array([1e-4, 5e-4, 2e-3])
    finite = math.isfinite(sc.k_factor)
    for i in ((0, 1) if finite else (1,)):
        est = estimate_g(i, t, dts, sc, wob, cfg)
        ana = np.atleast_1d(g_function(i, t, dts, sc, wob))
        for j, dt in enumerate(dts):
            e = type(est)(complex(est.mean[j]), float(est.std_error[j]), est.n, est.config_digest)
            _compare(report, f"G_{i}", e, ana[j], t=t, dt=float(dt))
    if finite:
        tau0 = sc.uav_ue_delay_s
        scale = 1.0 / float(np.mean(sc.rho))
        for dt in (0.0, float(dts[1])):
            for lo, hi in ((tau0, tau0 + scale), (tau0 + scale, tau0 + 3 * scale)):
                est = estimate_channel_acf((lo, hi), t, dt, sc, wob, imp, cfg)
                ana = integrate(lambda x: mx.channel_acf(x, t, dt, sc, wob, imp).density,
                                lo, hi, points=()).value / (hi - lo)
                _compare(report, "channel_acf_bin", est, complex(ana), t=t, dt=dt, bin=[lo, hi])
            est = estimate_channel_acf("los", t, dt, sc, wob, imp, cfg)
            _compare(report, "channel_acf_los", est, mx.channel_acf([tau0], t, dt, sc, wob, imp).atom.weight,
                     t=t, dt=dt)
        est = estimate_channel_acf("los", t, float(dts[1]), sc, wob, imp, cfg, offdiagonal=True)
        _compare(report, "cross_mpc", est, 0.0, t=t, dt=float(dts[1]))
    passed = sum(r["pass"] for r in report)
    run.files.append(write_json(run.out / "mc_report.json",
                                {"config": cfg.to_dict(), "comparisons": report}))
    run.files.append(write_csv(run.out / "mc_report.csv",
                               ("quantity", "dt_s", "analytic_re", "mc_re", "mc_im", "std_error", "z"),
                               [(r["quantity"], r["dt"], complex(r["analytic"]).real,
                                 complex(r["mc_mean"]).real, complex(r["mc_mean"]).imag,
                                 r["std_error"], r["z"]) for r in report]))
    run.results["mc_validate"] = {"passed": passed, "total": len(report)}
    run.say(f"mc-validate: {passed}/{len(report)} comparisons within 3 standard errors")
    return EXIT_OK if passed == len(report) else EXIT_VALIDATION


HANDLERS = {"pdp": _cmd_pdp, "coherence-time": _cmd_ct, "coherence-bandwidth": _cmd_cb,
            "psd": _cmd_psd, "sweep": _cmd_sweep, "mc-validate": _cmd_mc}


def _cmd_presets(args):
    for name in sorted(PRESETS):
        p = PRESETS[name]
        print(f"{name:16s} {p.metric:20s} {p.caption}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "presets.json", {k: v.to_dict() for k, v in PRESETS.items()})
    return EXIT_OK


def _strip_out(argv):
    res, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        res.append(a)
    return res


def _execute(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    setup, times = _resolve(args)
    run = Run(out)
    t0 = time.perf_counter()
    code = HANDLERS[args.command](args, setup, times, run) or EXIT_OK
    manifest = {
        "command": args.command,
        "argv": _strip_out(argv),
        "config": setup.to_dict(),
        "eval_times": list(times),
        "seed": args.seed,
        "rho_seed": args.rho_seed,
        "version": __version__,
        "wall_time_s": time.perf_counter() - t0,
        "summary": run.summary,
        "results": run.results,
        "outputs": {p.name: file_sha256(p) for p in run.files},
    }
    write_json(out / "manifest.json", manifest)
    return code


def _cmd_rerun(args) -> int:
    src = Path(args.manifest)
    try:
        manifest = json.loads(src.read_text(encoding="utf-8"))
        argv = list(manifest["argv"])
        expected = dict(manifest["outputs"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InvalidParameterError(f"{src}: not a run manifest ({exc})") from None
    out = Path(args.out) if args.out else src.parent / "rerun"
    code = main(argv + ["--out", str(out)])
    if code not in (EXIT_OK, EXIT_VALIDATION):
        return code
    bad = [name for name, h in sorted(expected.items())
           if not (out / name).exists() or file_sha256(out / name) != h]
    print(f"rerun: {len(expected) - len(bad)}/{len(expected)} outputs bit-identical")
    for name in bad:
        print(f"  differs: {name}", file=sys.stderr)
    return EXIT_OK if not bad and code == EXIT_OK else EXIT_VALIDATION


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            return _cmd_presets(args)
        if args.command == "rerun":
            return _cmd_rerun(args)
        return _execute(args, argv)
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        if exc.achieved is not None:
            print(f"  achieved: {exc.achieved!r}", file=sys.stderr)
        for k, v in exc.diagnostics.items():
            print(f"  {k}: {v!r}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidParameterError, WrongModelError, UndefinedEstimateError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
