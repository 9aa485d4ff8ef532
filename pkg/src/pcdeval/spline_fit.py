"""Penalized B-spline (P-spline) fit of the mean quality score over distance.

The fitted mean minimizes

    sum_i (y_i - sum_j beta_j B_j(x_i))**2 + lam * sum_j (beta_j - 2 beta_{j-1} + beta_{j-2})**2

by solving the banded normal equations ``(B'B + lam D'D) beta = B'y``, where
``D`` is the second-order difference matrix.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, solveh_banded

from . import kernels
from .data_model import DistanceSeries
from .errors import PcdError

UNIFORM = "uniform"
QUANTILE = "quantile"
EXTENDED = "extended"
CLAMPED = "clamped"


@dataclass(frozen=True)
class SplineConfig:
    """Settings for the penalized spline.

    Parameters
    ----------
    num_basis : int
        Number of B-spline basis functions, K. Default 10.
    degree : int
        Polynomial degree of the basis. Default 3 (cubic).
    lam : float
        Weight of the second-difference penalty. Default 0.6.
    knot_placement : {'uniform', 'quantile'}
        Interior knots evenly spaced over the data range, or at quantiles of x.
    boundary : {'extended', 'clamped'}
        'extended' continues the knot spacing ``degree`` knots past each end
        of the domain, so affine data is in the null space of the penalty.
        'clamped' repeats the end knots, making every basis function but the
        first vanish at the left end.
    """

    num_basis: int = 10
    degree: int = 3
    lam: float = 0.6
    knot_placement: str = UNIFORM
    boundary: str = EXTENDED

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 0:
            raise PcdError(f"degree must be a non-negative integer, got {self.degree!r}")
        if int(self.num_basis) != self.num_basis or self.num_basis < 4:
            raise PcdError(f"num_basis must be an integer >= 4, got {self.num_basis!r}")
        if self.num_basis <= self.degree:
            raise PcdError(
                f"num_basis ({self.num_basis}) must exceed degree ({self.degree})"
            )
        if not math.isfinite(self.lam) or self.lam < 0:
            raise PcdError(f"lam must be finite and >= 0, got {self.lam!r}")
        if self.knot_placement not in (UNIFORM, QUANTILE):
            raise PcdError(f"unknown knot_placement {self.knot_placement!r}")
        if self.boundary not in (EXTENDED, CLAMPED):
            raise PcdError(f"unknown boundary {self.boundary!r}")


def make_knots(x_min, x_max, config, x=None):
    """Full knot vector of length ``num_basis + degree + 1``.

    The fitting domain is ``[knots[degree], knots[num_basis]] == [x_min, x_max]``.
    """
    k, d = config.num_basis, config.degree
    if not (math.isfinite(x_min) and math.isfinite(x_max)) or x_max <= x_min:
        raise PcdError(f"knot domain [{x_min}, {x_max}] is empty")
    n_intervals = k - d
    if config.knot_placement == QUANTILE and x is not None and n_intervals > 1:
        inner = np.quantile(np.asarray(x, dtype=float), np.linspace(0, 1, n_intervals + 1)[1:-1])
    else:
        inner = x_min + (x_max - x_min) * np.arange(1, n_intervals) / n_intervals
    if config.boundary == CLAMPED:
        lo = np.full(d + 1, x_min)
        hi = np.full(d + 1, x_max)
    else:
        h = (x_max - x_min) / n_intervals
        lo = x_min - h * np.arange(d, -1, -1)
        hi = x_max + h * np.arange(d + 1)
        # keep the domain ends exact
        lo[-1], hi[0] = x_min, x_max
    return np.concatenate([lo, inner, hi])


def build_basis(x, config=None, knots=None):
    """Design matrix ``B[i, j] = B_j(x_i)``.

    Parameters
    ----------
    x : array_like, shape (n,)
        Evaluation points inside the knot domain.
    config : SplineConfig, optional
        Basis settings. Defaults to ``SplineConfig()``.
    knots : array_like, optional
        Full knot vector. When omitted, one is built over ``[min(x), max(x)]``.

    Returns
    -------
    numpy.ndarray, shape (n, num_basis)
    """
    config = SplineConfig() if config is None else config
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise PcdError("build_basis needs at least one point")
    if not np.all(np.isfinite(x)):
        raise PcdError("basis evaluation points must be finite")
    if knots is None:
        knots = make_knots(float(x.min()), float(x.max()), config, x)
    knots = np.asarray(knots, dtype=float)
    k, d = config.num_basis, config.degree
    if knots.size != k + d + 1:
        raise PcdError(f"expected {k + d + 1} knots, got {knots.size}")
    lo, hi = knots[d], knots[k]
    if x.min() < lo or x.max() > hi:
        raise PcdError(f"points outside the knot span [{lo}, {hi}]")
    return kernels.basis_matrix(x, knots, d, k)


def difference_matrix(num_basis, order=2):
    """``(num_basis - order) x num_basis`` finite-difference operator."""
    return np.diff(np.eye(num_basis), n=order, axis=0)


def penalty_matrix(num_basis):
    d2 = difference_matrix(num_basis)
    return d2.T @ d2


def _to_upper_banded(a, bw):
    k = a.shape[0]
    ab = np.zeros((bw + 1, k))
    for offset in range(bw + 1):
        ab[bw - offset, offset:] = np.diagonal(a, offset)
    return ab


def solve_normal_equations(lhs, rhs, bandwidth):
    """Solve the symmetric positive-semidefinite system ``lhs @ beta = rhs``.

    Uses a banded Cholesky solve. If the matrix is singular (for example
    ``lam == 0`` with fewer distinct points than basis functions) the
    minimum-norm least-squares solution is returned instead.
    """
    scale = np.abs(rhs).max() if rhs.size else 0.0
    try:
        beta = solveh_banded(_to_upper_banded(lhs, bandwidth), rhs)
    except (LinAlgError, ValueError):
        beta = None
    if beta is not None and np.all(np.isfinite(beta)):
        resid = np.abs(lhs @ beta - rhs).max()
        if resid <= 1e-10 * max(1.0, scale):
            return beta
    return np.linalg.lstsq(lhs, rhs, rcond=None)[0]


class FittedCurve:
    """Immutable P-spline fit.

    Attributes
    ----------
    config : SplineConfig
    knots : numpy.ndarray
    coefficients : numpy.ndarray, shape (num_basis,)
    domain : tuple of float
        ``(x_min, x_max)`` of the training series.
    """

    __slots__ = ("config", "knots", "coefficients", "domain")

    def __init__(self, config, knots, coefficients, domain):
        knots = np.array(knots, dtype=float)
        coefficients = np.array(coefficients, dtype=float)
        if knots.size != config.num_basis + config.degree + 1:
            raise PcdError("knot vector length does not match config")
        if coefficients.shape != (config.num_basis,):
            raise PcdError("coefficient vector length does not match config")
        if np.any(np.diff(knots) < 0):
            raise PcdError("knot vector must be non-decreasing")
        knots.flags.writeable = False
        coefficients.flags.writeable = False
        self.config = config
        self.knots = knots
        self.coefficients = coefficients
        self.domain = (float(domain[0]), float(domain[1]))

    def __call__(self, x):
        return evaluate(self, x)

    def __repr__(self):
        return (f"FittedCurve(K={self.config.num_basis}, degree={self.config.degree}, "
                f"lam={self.config.lam}, domain={self.domain})")

    def to_dict(self):
        return {
            "num_basis": self.config.num_basis,
            "degree": self.config.degree,
            "lam": self.config.lam,
            "knot_placement": self.config.knot_placement,
            "boundary": self.config.boundary,
            "knots": self.knots.tolist(),
            "coefficients": self.coefficients.tolist(),
            "domain": list(self.domain),
        }

    @classmethod
    def from_dict(cls, d):
        config = SplineConfig(d["num_basis"], d["degree"], d["lam"],
                              d["knot_placement"], d["boundary"])
        return cls(config, d["knots"], d["coefficients"], d["domain"])


def _normal_equations(series, config):
    x, y = series.x, series.y
    knots = make_knots(float(x[0]), float(x[-1]), config, x)
    basis = build_basis(x, config, knots)
    btb = basis.T @ basis
    lhs = btb + config.lam * penalty_matrix(config.num_basis)
    rhs = basis.T @ y
    return knots, basis, lhs, rhs


def fit_penalized(series: DistanceSeries, config=None) -> FittedCurve:
    """Fit the penalized spline to a distance series.

    Parameters
    ----------
    series : DistanceSeries
        At least four points.
    config : SplineConfig, optional

    Returns
    -------
    FittedCurve
    """
    config = SplineConfig() if config is None else config
    if series.n < 4:
        raise PcdError(f"penalized fit needs at least 4 points, got {series.n}")
    if not np.all(np.isfinite(series.y)):
        raise PcdError("series scores must be finite")
    knots, _, lhs, rhs = _normal_equations(series, config)
    beta = solve_normal_equations(lhs, rhs, max(config.degree, 2))
    return FittedCurve(config, knots, beta, (series.x[0], series.x[-1]))


def evaluate(curve: FittedCurve, x):
    """Evaluate the fit; points outside the domain take the nearest endpoint value.

    Scalar in, float out; array in, array out.
    """
    scalar = np.ndim(x) == 0
    xs = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(xs)):
        raise PcdError("cannot evaluate the curve at a non-finite distance")
    xs = np.clip(xs, curve.domain[0], curve.domain[1])
    cfg = curve.config
    values = kernels.basis_matrix(xs, curve.knots, cfg.degree, cfg.num_basis) @ curve.coefficients
    return float(values[0]) if scalar else values.reshape(np.shape(x))


def hat_trace(basis, lhs):
    """Effective degrees of freedom ``trace(B (B'B + lam D'D)^-1 B')``."""
    btb = basis.T @ basis
    return float(np.trace(np.linalg.lstsq(lhs, btb, rcond=None)[0]))


def information_criterion(series, config, criterion="BIC"):
    """AIC or BIC of a fit, using the smoother's trace as degrees of freedom."""
    criterion = criterion.upper()
    if criterion not in ("AIC", "BIC"):
        raise PcdError(f"unknown criterion {criterion!r}")
    knots, basis, lhs, rhs = _normal_equations(series, config)
    beta = solve_normal_equations(lhs, rhs, max(config.degree, 2))
    n = series.n
    rss = float(np.sum((series.y - basis @ beta) ** 2))
    df = hat_trace(basis, lhs)
    penalty = 2.0 if criterion == "AIC" else math.log(n)
    return n * math.log(max(rss / n, 1e-300)) + penalty * df


def select_lambda(series, candidates, criterion="BIC", config=None):
    """Pick the penalty weight minimizing AIC/BIC; ties go to the larger weight."""
    candidates = [float(c) for c in candidates]
    if not candidates:
        raise PcdError("select_lambda needs at least one candidate")
    config = SplineConfig() if config is None else config
    best_lam, best_score = None, math.inf
    for lam in sorted(candidates, reverse=True):
        trial = SplineConfig(config.num_basis, config.degree, lam,
                             config.knot_placement, config.boundary)
        score = information_criterion(series, trial, criterion)
        if score < best_score:
            best_lam, best_score = lam, score
    return best_lam
