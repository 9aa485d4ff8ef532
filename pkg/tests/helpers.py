import numpy as np

from pcdeval import DistanceSeries, SegmentModel, SplineConfig
from pcdeval.spline_fit import FittedCurve, make_knots


def line_curve(x0, x1, intercept, slope, config=None):
    """Spline whose coefficients sit on a line, so it equals ``intercept + slope * x``."""
    config = SplineConfig() if config is None else config
    knots = make_knots(x0, x1, config)
    d = config.degree
    greville = np.array([knots[j + 1:j + d + 1].mean() for j in range(config.num_basis)])
    return FittedCurve(config, knots, intercept + slope * greville, (x0, x1))


def linear_model(sigma=0.05):
    """mu(x) = 1 - x/200 on x = 0..200 m, one segment."""
    x = np.arange(201.0)
    mu = 1.0 - x / 200.0
    series = DistanceSeries(x, mu)
    return SegmentModel(line_curve(0.0, 200.0, 1.0, -1 / 200), (), [sigma], series, mu=mu)


def random_model(rng, n_max=60):
    n = int(rng.integers(2, n_max))
    x = np.cumsum(rng.uniform(0.5, 5.0, n))
    y = rng.uniform(0, 1, n)
    config = SplineConfig()
    x0, x1 = float(x[0]), float(x[-1])
    if x1 <= x0:
        x1 = x0 + 1.0
    knots = make_knots(x0, x1, config)
    curve = FittedCurve(config, knots, rng.uniform(-0.1, 1.1, config.num_basis), (x0, x1))
    k = int(rng.integers(0, min(4, n)))
    bounds = tuple(sorted(rng.choice(np.arange(1, n), k, replace=False))) if k else ()
    sigmas = rng.choice([0.0, 0.01, 0.05, 0.1, 0.3], len(bounds) + 1)
    return SegmentModel(curve, bounds, sigmas, DistanceSeries(x, y))
