"""Segment Gaussian model, exceedance probability, PCD and mPCD."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .changepoint import SEGMENT_RAW, SEGMENT_RESIDUAL
from .errors import PcdError
from .spline_fit import evaluate


class SegmentModel:
    """Per-point Normal(f(x_i), sigma_i**2) with sigma constant between change points.

    Attributes
    ----------
    curve : FittedCurve
    boundaries : tuple of int
        1-based change indices; segment ``m`` covers ``[tau_m + 1, tau_{m+1}]``.
    sigmas : numpy.ndarray
        One standard deviation per segment.
    series : DistanceSeries
    mu : numpy.ndarray
        ``f(x_i)`` at every series point.
    sigma : numpy.ndarray
        Per-point standard deviation (the sigma of the point's segment).
    """

    __slots__ = ("curve", "boundaries", "sigmas", "series", "mu", "sigma", "sigma_mode")

    def __init__(self, curve, boundaries, sigmas, series, sigma_mode=SEGMENT_RAW, mu=None):
        boundaries = tuple(int(b) for b in boundaries)
        _check_boundaries(boundaries, series.n)
        sigmas = np.array(sigmas, dtype=float)
        if sigmas.shape != (len(boundaries) + 1,):
            raise PcdError(
                f"{len(boundaries) + 1} segments need as many sigmas, got {sigmas.size}"
            )
        if np.any(~np.isfinite(sigmas)) or np.any(sigmas < 0):
            raise PcdError("segment sigmas must be finite and >= 0")
        sigmas.flags.writeable = False
        self.curve = curve
        self.boundaries = boundaries
        self.sigmas = sigmas
        self.series = series
        self.sigma_mode = sigma_mode
        mu = evaluate(curve, series.x) if mu is None else np.array(mu, dtype=float)
        mu.flags.writeable = False
        self.mu = mu
        self.sigma = np.repeat(sigmas, np.diff((0,) + boundaries + (series.n,)))
        self.sigma.flags.writeable = False

    @property
    def num_segments(self):
        return len(self.boundaries) + 1

    def segment_of(self, i):
        """0-based segment number of 1-based point ``i``."""
        return int(np.searchsorted(self.boundaries, i, side="left"))

    def sigma_at(self, x):
        """Segment sigma at arbitrary distances; segment m ends at x_tau_m inclusive."""
        edges = self.series.x[np.asarray(self.boundaries, dtype=int) - 1]
        seg = np.searchsorted(edges, np.asarray(x, dtype=float), side="left")
        return self.sigmas[seg]

    def __repr__(self):
        return (f"SegmentModel(n={self.series.n}, boundaries={list(self.boundaries)}, "
                f"sigmas={np.round(self.sigmas, 6).tolist()})")


def _check_boundaries(boundaries, n):
    prev = 0
    for b in boundaries:
        if not prev < b < n:
            raise PcdError(f"change point {b} out of range or out of order for n={n}")
        prev = b


def build_segment_model(series, curve, changepoints=(), sigma_mode=SEGMENT_RAW):
    """Estimate one standard deviation per change-point segment.

    Parameters
    ----------
    series : DistanceSeries
    curve : FittedCurve
    changepoints : ChangePointResult or sequence of int
        1-based change indices.
    sigma_mode : {'segment-raw', 'segment-residual'}
        Sample std (ddof=1) of the segment's scores, or of its residuals
        ``y_i - f(x_i)``. A one-point or constant segment gets sigma 0.

    Returns
    -------
    SegmentModel
    """
    if sigma_mode not in (SEGMENT_RAW, SEGMENT_RESIDUAL):
        raise PcdError(f"unknown sigma_mode {sigma_mode!r}")
    bounds = tuple(getattr(changepoints, "indices", changepoints))
    _check_boundaries(tuple(int(b) for b in bounds), series.n)
    mu = evaluate(curve, series.x)
    values = series.y if sigma_mode == SEGMENT_RAW else series.y - mu
    edges = (0,) + tuple(int(b) for b in bounds) + (series.n,)
    sigmas = []
    for a, b in zip(edges[:-1], edges[1:]):
        seg = values[a:b]
        # np.std of identical floats can come out as ~1e-16
        constant = seg.size < 2 or np.all(seg == seg[0])
        sigmas.append(0.0 if constant else float(np.std(seg, ddof=1)))
    return SegmentModel(curve, bounds, sigmas, series, sigma_mode, mu=mu)


def exceedance_probability(model, i, y_t):
    """``P(y_i > y_t)`` for 1-based point ``i`` under its segment's normal law."""
    if not 1 <= i <= model.series.n:
        raise PcdError(f"point index {i} outside 1..{model.series.n}")
    mu = float(model.mu[i - 1])
    sigma = float(model.sigma[i - 1])
    if sigma > 0:
        return 0.5 * math.erfc((y_t - mu) / (sigma * math.sqrt(2.0)))
    return 1.0 if mu > y_t else 0.0


def _points(model, resolution):
    if resolution is None:
        return model.series.x, model.mu, model.sigma
    if resolution < 2:
        raise PcdError("dense resolution must be at least 2")
    x = np.linspace(model.series.x[0], model.series.x[-1], int(resolution))
    return x, evaluate(model.curve, x), model.sigma_at(x)


def compute_pcd(model, y_t=0.5, p_t=0.5, resolution=None):
    """Largest distance whose exceedance probability is strictly above ``p_t``.

    Parameters
    ----------
    model : SegmentModel
    y_t : float
        Quality-score threshold in (0, 1).
    p_t : float
        Probability threshold in (0, 1).
    resolution : int, optional
        Scan a uniform grid of this many distances over the fitted curve
        instead of the observed points.

    Returns
    -------
    float or None
        ``None`` when no point qualifies.
    """
    _check_threshold(y_t, "y_t")
    _check_threshold(p_t, "p_t")
    x, mu, sigma = _points(model, resolution)
    value = kernels.pcd_surface(x, mu, sigma, [y_t], [p_t])[0, 0]
    return None if np.isnan(value) else float(value)


def _check_threshold(v, name):
    if not (isinstance(v, (int, float, np.floating)) and 0 < v < 1):
        raise PcdError(f"{name} must lie in (0, 1), got {v!r}")


@dataclass(frozen=True)
class ThresholdGrid:
    """Threshold axes for the PCD surface; both default to 0.1, 0.2, ..., 0.9."""

    y_values: tuple = tuple(round(0.1 * k, 10) for k in range(1, 10))
    p_values: tuple = tuple(round(0.1 * k, 10) for k in range(1, 10))

    def __post_init__(self):
        for name in ("y_values", "p_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, vals)
            if not vals:
                raise PcdError(f"{name} must not be empty")
            if any(not 0 < v < 1 for v in vals):
                raise PcdError(f"{name} must lie in (0, 1)")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise PcdError(f"{name} must be strictly increasing")

    @classmethod
    def from_range(cls, lo, step, hi):
        """Same inclusive ``lo:step:hi`` range on both axes."""
        if step <= 0:
            raise PcdError("grid step must be positive")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        vals = tuple(round(lo + k * step, 10) for k in range(count))
        return cls(vals, vals)

    @property
    def shape(self):
        return len(self.y_values), len(self.p_values)


@dataclass(frozen=True, eq=False)
class PcdSurface:
    """PCD in meters for every grid cell, NaN where no point qualifies.

    ``values[a, b]`` belongs to ``y_values[a]`` and ``p_values[b]``.
    """

    grid: ThresholdGrid
    values: np.ndarray
    mpcd: float

    @property
    def defined(self):
        return ~np.isnan(self.values)

    def cell(self, y_t, p_t):
        a = self.grid.y_values.index(float(y_t))
        b = self.grid.p_values.index(float(p_t))
        v = self.values[a, b]
        return None if np.isnan(v) else float(v)


def compute_pcd_surface(model, grid=None, resolution=None, workers=1):
    """PCD at every (y_t, p_t) cell plus the grid mean.

    ``workers > 1`` splits the y_t rows across threads; the result does not
    depend on the worker count.
    """
    grid = ThresholdGrid() if grid is None else grid
    x, mu, sigma = _points(model, resolution)
    yv = np.asarray(grid.y_values)
    pv = np.asarray(grid.p_values)
    if workers is None or workers <= 1 or len(yv) == 1:
        values = kernels.pcd_surface(x, mu, sigma, yv, pv)
    else:
        rows = np.array_split(np.arange(len(yv)), min(workers, len(yv)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda r: kernels.pcd_surface(x, mu, sigma, yv[r], pv), rows))
        values = np.vstack(parts)
    values.flags.writeable = False
    return PcdSurface(grid, values, _grid_mean(values))


def _grid_mean(values):
    if values.size == 0:
        raise PcdError("cannot average an empty grid")
    total = 0.0
    for v in values.ravel(order="C"):
        if not np.isnan(v):
            total += float(v)
    return total / values.size


def mean_pcd(surface):
    """Mean PCD over the grid with undefined cells counted as 0 m."""
    return _grid_mean(np.asarray(surface.values))


def mean_quality_score(series):
    return float(np.mean(series.y))
