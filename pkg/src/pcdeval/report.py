"""End-to-end evaluation, report serialization and curve traces."""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from types import SimpleNamespace

import numpy as np

from . import __version__, kernels
from .changepoint import ChangePointTest, detect_all
from .data_model import SCHEMA_COLUMNS, DistanceSeries, build_series, parse_detection_log
from .errors import PcdError, SchemaError
from .pcd import (SegmentModel, ThresholdGrid, build_segment_model, compute_pcd,
                  compute_pcd_surface, mean_quality_score)
from .spline_fit import FittedCurve, SplineConfig, evaluate, fit_penalized

AUTO = "auto"
REPORT_FORMATS = ("json", "csv-summary")


@dataclass(frozen=True)
class EvalConfig:
    """Everything that determines an evaluation run."""

    input: str = ""
    schema: str = AUTO
    spline: SplineConfig = field(default_factory=SplineConfig)
    test: ChangePointTest = field(default_factory=ChangePointTest)
    y_t: float = 0.5
    p_t: float = 0.5
    grid: ThresholdGrid = field(default_factory=ThresholdGrid)
    resolution: int = None
    workers: int = 1

    def to_dict(self):
        return {
            "input": self.input,
            "schema": self.schema,
            "spline": asdict(self.spline),
            "test": asdict(self.test),
            "y_t": self.y_t,
            "p_t": self.p_t,
            "grid": {"y_values": list(self.grid.y_values), "p_values": list(self.grid.p_values)},
            "resolution": self.resolution,
        }


@dataclass
class EvaluationReport:
    """Machine-readable summary of one evaluation.

    Every field holds plain JSON types so a report survives a JSON round trip
    unchanged. Distances are meters; absent PCD values are ``None``.
    """

    tool_version: str
    config: dict
    input_summary: dict
    spline: dict
    change_points: dict
    segments: list
    pcd: dict
    surface: dict
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    @property
    def mpcd(self):
        return self.surface["mpcd_m"]


def detect_schema(text):
    first = text.lstrip("﻿").splitlines()[0] if text.strip() else ""
    header = tuple(h.strip() for h in first.split(","))
    for name, cols in SCHEMA_COLUMNS.items():
        if header == cols:
            return name
    raise SchemaError(
        "header matches neither schema; expected "
        + " or ".join(repr(",".join(c)) for c in SCHEMA_COLUMNS.values()),
        line=1,
    )


def load_records(path, schema=AUTO):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SchemaError(f"input is not valid UTF-8: {exc}") from None
    if schema == AUTO:
        schema = detect_schema(text)
    return parse_detection_log(text, schema), schema


def run_pipeline(series, spline=None, test=None, y_t=0.5, p_t=0.5, grid=None,
                 resolution=None, workers=1):
    """Fit, detect, model and score a series.

    Returns
    -------
    types.SimpleNamespace
        ``series``, ``curve``, ``changepoints``, ``model``, ``pcd``,
        ``surface`` and ``warnings``.
    """
    spline = SplineConfig() if spline is None else spline
    test = ChangePointTest() if test is None else test
    grid = ThresholdGrid() if grid is None else grid
    curve = fit_penalized(series, spline)
    cps = detect_all(series, curve, test)
    model = build_segment_model(series, curve, cps, test.sigma_mode)
    pcd = compute_pcd(model, y_t, p_t, resolution)
    surface = compute_pcd_surface(model, grid, resolution, workers)
    warnings = list(cps.notes)
    absent = int(np.count_nonzero(np.isnan(surface.values)))
    if absent:
        warnings.append(f"{absent} of {surface.values.size} grid cells have no qualifying "
                        "distance and count as 0 m in mPCD")
    return SimpleNamespace(series=series, curve=curve, changepoints=cps, model=model,
                           pcd=pcd, surface=surface, warnings=warnings)


def _opt(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)


def build_report(config, result, num_records=None):
    series, cps, model, surface = result.series, result.changepoints, result.model, result.surface
    edges = (0,) + model.boundaries + (series.n,)
    segments = [
        {"start_index": a + 1, "end_index": b,
         "start_m": float(series.x[a]), "end_m": float(series.x[b - 1]),
         "sigma": float(s)}
        for a, b, s in zip(edges[:-1], edges[1:], model.sigmas)
    ]
    return EvaluationReport(
        tool_version=__version__,
        config=config.to_dict(),
        input_summary={
            "num_records": series.n if num_records is None else num_records,
            "n": series.n,
            "x_min_m": float(series.x[0]),
            "x_max_m": float(series.x[-1]),
            "mean_quality_score": mean_quality_score(series),
        },
        spline=result.curve.to_dict(),
        change_points={
            "count": len(cps),
            "indices": list(cps.indices),
            "distances_m": list(cps.distances),
            "statistics": [asdict(s) for s in cps.statistics],
        },
        segments=segments,
        pcd={"y_t": config.y_t, "p_t": config.p_t, "pcd_m": _opt(result.pcd)},
        surface={
            "y_values": list(surface.grid.y_values),
            "p_values": list(surface.grid.p_values),
            "values_m": [[_opt(v) for v in row] for row in surface.values.tolist()],
            "absent_cells": int(np.count_nonzero(np.isnan(surface.values))),
            "mpcd_m": float(surface.mpcd),
        },
        warnings=list(result.warnings),
    )


def run_evaluate(config):
    """parse -> series -> fit -> change points -> segment model -> PCD/surface -> mPCD."""
    records, schema = load_records(config.input, config.schema)
    if not records:
        raise SchemaError("log has a header but no data rows", line=2)
    series = build_series(records)
    result = run_pipeline(series, config.spline, config.test, config.y_t, config.p_t,
                          config.grid, config.resolution, config.workers)
    if schema != config.schema:
        config = replace(config, schema=schema)
    return build_report(config, result, num_records=len(records)), result


def emit_report(report, fmt="json"):
    """Serialize a report. JSON keys are snake_case and stable across runs."""
    if fmt == "json":
        return (json.dumps(report.to_dict(), indent=2, allow_nan=False) + "\n").encode("utf-8")
    if fmt != "csv-summary":
        raise PcdError(f"unknown report format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for key, value in summary_scalars(report):
        w.writerow([key, "" if value is None else value])
    w.writerow(["y_t", "p_t", "pcd_m"])
    s = report.surface
    for a, y_t in enumerate(s["y_values"]):
        for b, p_t in enumerate(s["p_values"]):
            v = s["values_m"][a][b]
            w.writerow([y_t, p_t, "" if v is None else repr(v)])
    return buf.getvalue().encode("utf-8")


def summary_scalars(report):
    inp = report.input_summary
    return [
        ("tool_version", report.tool_version),
        ("n", inp["n"]),
        ("x_min_m", repr(inp["x_min_m"])),
        ("x_max_m", repr(inp["x_max_m"])),
        ("mean_quality_score", repr(inp["mean_quality_score"])),
        ("change_points", report.change_points["count"]),
        ("change_point_distances_m", ";".join(repr(d) for d in report.change_points["distances_m"])),
        ("segment_sigmas", ";".join(repr(s["sigma"]) for s in report.segments)),
        ("pcd_y_t", report.pcd["y_t"]),
        ("pcd_p_t", report.pcd["p_t"]),
        ("pcd_m", None if report.pcd["pcd_m"] is None else repr(report.pcd["pcd_m"])),
        ("mpcd_m", repr(report.surface["mpcd_m"])),
    ]


def emit_curve_trace(curve, model, resolution=200, y_t=0.5, changepoints=None):
    """CSV trace ``kind,x,f,sigma,p_exceed`` for plotting.

    ``resolution`` rows of kind ``curve`` span the fitted domain uniformly;
    then one ``changepoint`` row per detected change at ``x_tau``.
    """
    if int(resolution) != resolution or resolution < 2:
        raise PcdError(f"trace resolution must be an integer >= 2, got {resolution!r}")
    x = np.linspace(curve.domain[0], curve.domain[1], int(resolution))
    f = evaluate(curve, x)
    sigma = model.sigma_at(x)
    prob = kernels.exceedance(f, sigma, y_t)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "x", "f", "sigma", "p_exceed"])
    for row in zip(x, f, sigma, prob):
        w.writerow(["curve"] + [repr(float(v)) for v in row])
    bounds = model.boundaries if changepoints is None else tuple(
        getattr(changepoints, "indices", changepoints))
    if bounds:
        xc = model.series.x[np.asarray(bounds, dtype=int) - 1]
        fc = evaluate(curve, xc)
        sc = model.sigma_at(xc)
        pc = kernels.exceedance(fc, sc, y_t)
        for row in zip(xc, fc, sc, pc):
            w.writerow(["changepoint"] + [repr(float(v)) for v in row])
    return buf.getvalue().encode("utf-8")


def dump_model(model):
    """JSON cache of a fitted segment model, consumed by the ``surface`` command."""
    d = {
        "tool_version": __version__,
        "series": {"x": model.series.x.tolist(), "y": model.series.y.tolist()},
        "curve": model.curve.to_dict(),
        "boundaries": list(model.boundaries),
        "sigmas": model.sigmas.tolist(),
        "sigma_mode": model.sigma_mode,
    }
    return (json.dumps(d, indent=2) + "\n").encode("utf-8")


def load_model(text):
    try:
        d = json.loads(text)
        series = DistanceSeries(d["series"]["x"], d["series"]["y"])
        curve = FittedCurve.from_dict(d["curve"])
        return SegmentModel(curve, d["boundaries"], d["sigmas"], series, d["sigma_mode"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise PcdError(f"not a model file: {exc}") from None
