"""Command-line interface.

Subcommands: gen-series, classify, simulate, run, sweep, render, predict.
Exit codes: 0 success, 2 configuration error, 3 sweep finished with failed cells.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from .errors import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CELL_FAILURE = 3

log = logging.getLogger("paramrc")

# flag dest -> config setting
_POINT_FLAGS = {
    "f_avg": "point.f_avg",
    "delta1": "point.delta1",
    "kappa": "point.kappa",
    "gamma21": "point.gamma21",
    "delta_f": "point.delta_f",
    "data_rate": "point.data_rate",
    "gamma1_scale": "point.gamma1_scale",
    "warmup_symbols": "point.warmup_symbols",
    "benchmarks": "benchmark.systems",
    "map_benchmark": "benchmark.map",
    "n_points": "benchmark.n_points",
    "test_window": "benchmark.test_window",
    "lam": "readout.lambda",
    "workers": "sweep.workers",
    "rel_tol": "integrator.rel_tol",
}


def _experiment_args(p: argparse.ArgumentParser):
    p.add_argument("-c", "--config", help="INI experiment file")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override any config entry (repeatable)")
    g = p.add_argument_group("operating point")
    g.add_argument("--f-avg", dest="f_avg")
    g.add_argument("--delta1")
    g.add_argument("--kappa")
    g.add_argument("--gamma21")
    g.add_argument("--delta-f", dest="delta_f")
    g.add_argument("--data-rate", dest="data_rate")
    g.add_argument("--gamma1-scale", dest="gamma1_scale")
    g.add_argument("--warmup-symbols", dest="warmup_symbols")
    g.add_argument("--benchmarks", help="comma-separated systems")
    g.add_argument("--map-benchmark", dest="map_benchmark")
    g.add_argument("--n-points", dest="n_points")
    g.add_argument("--test-window", dest="test_window")
    g.add_argument("--lambda", dest="lam")
    g.add_argument("--rel-tol", dest="rel_tol")
    g.add_argument("--no-comb-probe", action="store_true",
                   help="skip the coherent/chaotic comb simulation")


def _load_experiment(args):
    from .io import load_config

    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    for dest, key in _POINT_FLAGS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = str(value)
    if getattr(args, "no_comb_probe", False):
        overrides["comb.enabled"] = "false"
    for k, axis in enumerate(getattr(args, "axis", None) or [], 1):
        overrides[f"sweep.axis{k}"] = axis
    return load_config(args.config, overrides)


# --------------------------------------------------------------------------
# subcommands

def cmd_gen_series(args) -> int:
    from .benchmarks import SeriesSpec, generate, normalize_unit
    from .io import series_header, write_series

    try:
        spec = SeriesSpec(args.system, n_points=args.n_points,
                          sample_interval=args.interval, transient_discard=args.transient)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raw = generate(spec)
    if args.raw or len(raw) < 2:
        values, norm = raw, None
    else:
        norm = normalize_unit(raw)
        values = norm.values
    header = series_header(spec, norm, len(values))
    header["normalized"] = norm is not None
    write_series(values, args.output, header, binary=args.format == "binary")
    print(f"wrote {len(values)} points to {args.output}")
    return EXIT_OK


def cmd_classify(args) -> int:
    from .envelope import ModelParams
    from .regimes import (CombProbe, arnold_threshold, comb_condition, resolve_regime,
                          upper_boundary)

    if args.axis:
        from .experiment import regime_only_grid
        from .io import write_grid

        cfg = _load_experiment(args)
        grid = regime_only_grid(cfg)
        write_grid(grid, args.output)
        print(f"wrote regime grid {grid.shape} to {args.output}")
        return EXIT_OK

    cfg = _load_experiment(args)
    p = ModelParams(cfg.delta1, cfg.kappa, cfg.gamma21)
    f = cfg.f_avg
    regime = resolve_regime(p, f, None if args.no_comb_probe else (cfg.comb_probe or CombProbe()))
    info = {
        "delta1": p.delta1, "kappa": p.kappa, "gamma21": p.gamma21, "delta2": p.delta2,
        "f": f, "f_arnold": arnold_threshold(p), "f_upper": upper_boundary(p),
        "comb_condition": comb_condition(p), "regime": str(regime),
    }
    print(json.dumps(info, indent=2))
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .envelope import EnvelopeState, IntegratorConfig, ModelParams, integrate, seed_state

    try:
        p = ModelParams(args.delta1, args.kappa, args.gamma21)
        cfg = IntegratorConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    start = seed_state()
    if args.psi2 is not None:
        start = EnvelopeState(0j, complex(args.psi2))
    if args.transient > 0:
        start = integrate(start, p, args.f, args.transient, 1, cfg).final_state()
    traj = integrate(start, p, args.f, args.duration, args.samples, cfg)
    cols = np.column_stack([traj.tau, traj.psi1.real, traj.psi1.imag, traj.psi2.real,
                            traj.psi2.imag, np.abs(traj.psi1) ** 2, np.abs(traj.psi2) ** 2])
    np.savetxt(args.output, cols, delimiter=",", fmt="%.17g",
               header="tau,re_psi1,im_psi1,re_psi2,im_psi2,abs2_psi1,abs2_psi2", comments="")
    print(f"wrote {len(traj.tau)} samples to {args.output}")
    return EXIT_OK


def cmd_run(args) -> int:
    from .experiment import run_point
    from .io import config_snapshot, environment_versions, save_model, write_features

    cfg = _load_experiment(args)
    t0 = time.time()
    result = run_point(cfg, keep=True, traces=True)
    summary = {"regime": str(result.regime), "benchmarks": {}}
    for system, res in result.benchmarks.items():
        summary["benchmarks"][system.value] = {
            "nmse": res.nmse, "log10_nmse": res.log10_nmse, "failure": res.failure,
            "n_features": res.n_features, "degenerate_features": res.degenerate_features,
        }
        if res.failure:
            print(f"{system.value:>13}: FAILED ({res.failure})")
        else:
            print(f"{system.value:>13}: NMSE = {res.nmse:.4g}  (log10 = {res.log10_nmse:+.2f})")
    print(f"regime: {result.regime}   [{time.time() - t0:.1f}s]")
    summary["config"] = config_snapshot(cfg)
    summary["versions"] = environment_versions()

    out = Path(args.output) if args.output else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        (out / "result.json").write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
        for system, res in result.benchmarks.items():
            if res.prediction is not None:
                np.savetxt(out / f"prediction_{system.value}.csv",
                           np.column_stack([res.truth, res.prediction]), delimiter=",",
                           fmt="%.17g", header="truth,prediction", comments="")
            if args.save_model and res.model is not None:
                save_model(res.model, out / f"model_{system.value}.npz")
            if args.save_features and res.features is not None:
                write_features(res.features, out / f"features_{system.value}.bin")
        if result.trace_tau is not None:
            np.savetxt(out / "psi2_trace.csv", np.column_stack([result.trace_tau, result.trace_power]),
                       delimiter=",", fmt="%.17g", header="tau,abs2_psi2", comments="")
            np.savetxt(out / "psi2_spectrum.csv",
                       np.column_stack([result.spectrum_freq, result.spectrum]),
                       delimiter=",", fmt="%.17g", header="freq,magnitude", comments="")
        print(f"outputs in {out}")
    return EXIT_CELL_FAILURE if result.failed else EXIT_OK


def _json_default(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(type(obj))


def cmd_sweep(args) -> int:
    from .experiment import run_sweep
    from .io import write_grid

    cfg = _load_experiment(args)
    if not cfg.axes:
        raise ConfigError("sweep needs --axis or [sweep] axis1 in the config")
    t0 = time.time()

    def progress(done, total):
        if done == total or done % max(1, total // 20) == 0:
            log.info("%d/%d cells (%.0fs)", done, total, time.time() - t0)

    grid = run_sweep(cfg, progress=progress)
    write_grid(grid, args.output)
    n_fail = sum(1 for row in grid.failures for f in row if f)
    print(f"wrote {grid.shape[0]}x{grid.shape[1]} grid to {args.output} "
          f"({n_fail} failed cells, {time.time() - t0:.0f}s)")
    if args.render:
        from .render import render_heatmap

        render_heatmap(grid, args.render)
        print(f"rendered {args.render}")
    return EXIT_CELL_FAILURE if n_fail else EXIT_OK


def cmd_render(args) -> int:
    from .io import read_grid
    from .render import render_heatmap

    grid = read_grid(args.grid)
    render_heatmap(grid, args.output, scale=args.scale, title=args.title)
    print(f"rendered {args.output}")
    return EXIT_OK


def cmd_predict(args) -> int:
    from .io import load_model, read_features

    model = load_model(args.model)
    raw, _ = read_features(args.features)
    pred = model.predict_raw(raw)
    np.savetxt(args.output, pred, fmt="%.17g")
    print(f"wrote {len(pred)} predictions to {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paramrc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-series", help="generate a benchmark series")
    p.add_argument("system", choices=["mackey_glass", "rossler", "lorenz"])
    p.add_argument("-o", "--output", required=True)
    p.add_argument("-n", "--n-points", type=int, default=2000)
    p.add_argument("--interval", type=float, default=None)
    p.add_argument("--transient", type=int, default=1000)
    p.add_argument("--format", choices=["text", "binary"], default="text")
    p.add_argument("--raw", action="store_true", help="skip normalization to [0, 1]")
    p.set_defaults(func=cmd_gen_series)

    p = sub.add_parser("classify", help="regime of a point, or a regime grid with --axis")
    _experiment_args(p)
    p.add_argument("--axis", action="append", metavar="NAME:MIN:MAX:STEPS[:log]")
    p.add_argument("-o", "--output", default="regimes.csv")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate", help="envelope trace at constant drive")
    p.add_argument("--delta1", type=float, required=True)
    p.add_argument("--kappa", type=float, default=-9.0)
    p.add_argument("--gamma21", type=float, default=1.0)
    p.add_argument("-f", "--f", type=float, required=True, help="drive amplitude")
    p.add_argument("--duration", type=float, default=100.0)
    p.add_argument("--samples", type=int, default=4096)
    p.add_argument("--transient", type=float, default=0.0)
    p.add_argument("--psi2", type=float, default=None, help="initial psi2 (default seed)")
    p.add_argument("--rel-tol", type=float, default=1e-8)
    p.add_argument("--abs-tol", type=float, default=1e-10)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="full prediction pipeline at one operating point")
    _experiment_args(p)
    p.add_argument("-o", "--output", help="output directory")
    p.add_argument("--save-model", action="store_true")
    p.add_argument("--save-features", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="NMSE/regime grid over one or two axes")
    _experiment_args(p)
    p.add_argument("--axis", action="append", metavar="NAME:MIN:MAX:STEPS[:log]")
    p.add_argument("--workers")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--render", help="also render a heatmap to this image path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("render", help="heatmap from a grid file")
    p.add_argument("grid")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--scale", choices=["log10", "linear"], default="log10")
    p.add_argument("--title")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("predict", help="apply a saved readout to a feature matrix file")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
