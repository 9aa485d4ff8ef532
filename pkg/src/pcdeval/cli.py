"""Command-line entry point: ``pcdeval {eval,surface,synth,trace}``.

Exit codes: 0 success, 1 input error, 2 internal numerical failure.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .changepoint import ChangePointTest
from .errors import PcdError
from .pcd import ThresholdGrid, compute_pcd_surface
from .report import (AUTO, EvalConfig, emit_curve_trace, emit_report, dump_model, load_model,
                     run_evaluate)
from .spline_fit import SplineConfig
from .synth import SynthSpec, generate, load_spec, series_to_csv

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2

log = logging.getLogger("pcdeval")


def _grid(text):
    try:
        lo, step, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be LO:STEP:HI, got {text!r}") from None
    return ThresholdGrid.from_range(lo, step, hi)


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(text):
    vals = _floats(text.replace(":", ","))
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    return vals


def _add_fit_flags(p):
    p.add_argument("--input", required=True, metavar="PATH", help="detection log CSV")
    p.add_argument("--schema", choices=[AUTO, "raw-boxes", "precomputed"], default=AUTO,
                   help="CSV schema (default: detect from header)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.6, help="spline penalty weight")
    p.add_argument("--knots", type=int, default=10, help="number of B-spline basis functions")
    p.add_argument("--degree", type=int, default=3, help="B-spline degree")
    p.add_argument("--knot-placement", choices=["uniform", "quantile"], default="uniform")
    p.add_argument("--boundary", choices=["extended", "clamped"], default="extended",
                   help="boundary knot convention")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level per test")
    p.add_argument("--min-segment", type=int, default=5)
    p.add_argument("--sigma-mode", choices=["segment-raw", "segment-residual"],
                   default="segment-raw")
    p.add_argument("--centering", choices=["pointwise", "literal"], default="pointwise",
                   help="residual centering for the change-point scan")
    p.add_argument("--rule", choices=["lr", "literal"], default="lr",
                   help="statistic fed to the rejection rule")
    p.add_argument("--yt", type=float, default=0.5, help="quality-score threshold")
    p.add_argument("--pt", type=float, default=0.5, help="probability threshold")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pcdeval",
        description="Perception Characteristics Distance evaluation of detection logs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", help="full pipeline, emits a report")
    _add_fit_flags(ev)
    ev.add_argument("--grid", type=_grid, default=ThresholdGrid(), metavar="LO:STEP:HI",
                    help="threshold grid for both axes (default 0.1:0.1:0.9)")
    ev.add_argument("--format", choices=["json", "csv-summary"], default="json")
    ev.add_argument("--output", metavar="PATH", help="report file (default stdout)")
    ev.add_argument("--trace", metavar="PATH", help="also write a curve trace CSV")
    ev.add_argument("--trace-resolution", type=int, default=200)
    ev.add_argument("--model-out", metavar="PATH", help="cache the fitted model as JSON")
    ev.add_argument("--dense", type=int, default=None, metavar="N",
                    help="scan N evenly spaced distances on the curve instead of observed points")
    ev.add_argument("--workers", type=int, default=1, help="threads for the PCD surface")

    sf = sub.add_parser("surface", help="PCD grid from a cached model")
    sf.add_argument("--model", required=True, metavar="PATH", help="file from eval --model-out")
    sf.add_argument("--grid", type=_grid, default=ThresholdGrid(), metavar="LO:STEP:HI")
    sf.add_argument("--dense", type=int, default=None, metavar="N")
    sf.add_argument("--format", choices=["json", "csv-summary"], default="json")
    sf.add_argument("--output", metavar="PATH")
    sf.add_argument("--workers", type=int, default=1)

    sy = sub.add_parser("synth", help="write a synthetic precomputed-schema log")
    sy.add_argument("--config", metavar="PATH", help="[synth] INI file; flags override it")
    sy.add_argument("--n", type=int)
    sy.add_argument("--x-range", type=_pair, metavar="LO:HI")
    sy.add_argument("--mean", choices=["constant", "linear", "logistic"])
    sy.add_argument("--mean-params", type=_floats)
    sy.add_argument("--boundaries", type=_floats, help="planted change positions (m)")
    sy.add_argument("--sigmas", type=_floats, help="noise sigma per segment")
    sy.add_argument("--seed", type=int)
    sy.add_argument("--output", metavar="PATH")

    tr = sub.add_parser("trace", help="curve trace CSV for plotting")
    _add_fit_flags(tr)
    tr.add_argument("--resolution", type=int, default=200)
    tr.add_argument("--trace", "--output", dest="output", metavar="PATH")
    return parser


def _write(path, data):
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def _eval_config(args, grid=None):
    return EvalConfig(
        input=args.input,
        schema=args.schema,
        spline=SplineConfig(args.knots, args.degree, args.lam, args.knot_placement,
                            args.boundary),
        test=ChangePointTest(args.alpha, args.min_segment, args.sigma_mode, args.centering,
                             args.rule),
        y_t=args.yt,
        p_t=args.pt,
        grid=grid if grid is not None else ThresholdGrid(),
        resolution=getattr(args, "dense", None),
        workers=getattr(args, "workers", 1),
    )


def cmd_eval(args):
    config = _eval_config(args, args.grid)
    report, result = run_evaluate(config)
    for w in report.warnings:
        log.warning(w)
    _write(args.output, emit_report(report, args.format))
    if args.trace:
        _write(args.trace, emit_curve_trace(result.curve, result.model,
                                            args.trace_resolution, args.yt))
    if args.model_out:
        _write(args.model_out, dump_model(result.model))


def cmd_surface(args):
    with open(args.model, encoding="utf-8") as fh:
        model = load_model(fh.read())
    surface = compute_pcd_surface(model, args.grid, args.dense, args.workers)
    values = [[None if np.isnan(v) else float(v) for v in row] for row in surface.values.tolist()]
    if args.format == "json":
        d = {"y_values": list(surface.grid.y_values), "p_values": list(surface.grid.p_values),
             "values_m": values, "mpcd_m": surface.mpcd}
        data = (json.dumps(d, indent=2) + "\n").encode("utf-8")
    else:
        lines = [f"mpcd_m,{surface.mpcd!r}", "y_t,p_t,pcd_m"]
        for a, y_t in enumerate(surface.grid.y_values):
            for b, p_t in enumerate(surface.grid.p_values):
                v = values[a][b]
                lines.append(f"{y_t},{p_t},{'' if v is None else repr(v)}")
        data = ("\n".join(lines) + "\n").encode("utf-8")
    _write(args.output, data)


def cmd_synth(args):
    spec = load_spec(args.config) if args.config else SynthSpec()
    overrides = {
        "n": args.n, "x_range": args.x_range, "mean_kind": args.mean,
        "mean_params": args.mean_params, "boundaries": args.boundaries,
        "segment_sigmas": args.sigmas, "seed": args.seed,
    }
    fields = {k: getattr(spec, k) for k in overrides}
    if args.mean is not None and args.mean != spec.mean_kind and args.mean_params is None:
        fields["mean_params"] = ()
    fields.update({k: v for k, v in overrides.items() if v is not None})
    if args.boundaries is not None and args.sigmas is None:
        raise PcdError("--boundaries requires --sigmas with one value per segment")
    series, _ = generate(SynthSpec(**fields))
    _write(args.output, series_to_csv(series).encode("utf-8"))


def cmd_trace(args):
    config = _eval_config(args)
    report, result = run_evaluate(config)
    _write(args.output, emit_curve_trace(result.curve, result.model, args.resolution, args.yt))


COMMANDS = {"eval": cmd_eval, "surface": cmd_surface, "synth": cmd_synth, "trace": cmd_trace}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (PcdError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
