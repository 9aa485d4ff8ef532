"""Variance change points in spline residuals: SIC test plus binary segmentation."""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import PcdError, WindowTooSmallError
from .spline_fit import evaluate

log = logging.getLogger(__name__)

VAR_FLOOR = kernels.numpy_backend.VAR_FLOOR
MIN_TEST_WINDOW = 20

SEGMENT_RAW = "segment-raw"
SEGMENT_RESIDUAL = "segment-residual"
POINTWISE = "pointwise"
LITERAL = "literal"
RULE_LR = "lr"
RULE_LITERAL = "literal"


@dataclass(frozen=True)
class ChangePointTest:
    """Settings for the variance change-point test.

    Parameters
    ----------
    alpha : float
        Significance level of each test. Default 0.05.
    min_segment : int
        Smallest admissible segment length on either side of a split.
    sigma_mode : {'segment-raw', 'segment-residual'}
        How the downstream segment model estimates each segment's spread.
    centering : {'pointwise', 'literal'}
        'pointwise' uses residuals ``y_i - f(x_i)``. 'literal' centers every
        point on ``f(x_tau)`` for the candidate split ``tau``.
    rule : {'lr', 'literal'}
        'lr' feeds the split-vs-no-split likelihood ratio ``T_n - log n`` into
        the asymptotic rejection rule. 'literal' feeds ``T_n`` itself, which
        rejects far more often than ``alpha`` under the null.
    """

    alpha: float = 0.05
    min_segment: int = 5
    sigma_mode: str = SEGMENT_RAW
    centering: str = POINTWISE
    rule: str = RULE_LR

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise PcdError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if int(self.min_segment) != self.min_segment or self.min_segment < 2:
            raise PcdError(f"min_segment must be an integer >= 2, got {self.min_segment!r}")
        if self.sigma_mode not in (SEGMENT_RAW, SEGMENT_RESIDUAL):
            raise PcdError(f"unknown sigma_mode {self.sigma_mode!r}")
        if self.centering not in (POINTWISE, LITERAL):
            raise PcdError(f"unknown centering {self.centering!r}")
        if self.rule not in (RULE_LR, RULE_LITERAL):
            raise PcdError(f"unknown rule {self.rule!r}")


@dataclass(frozen=True)
class TestStatistics:
    """One accepted split: statistic, decision value and critical value."""

    __test__ = False

    lo: int
    hi: int
    t_n: float
    decision: float
    threshold: float


@dataclass(frozen=True)
class ChangePointResult:
    """Detected change points.

    ``indices`` are 1-based: a change at ``tau`` separates points ``tau`` and
    ``tau + 1``, so ``tau`` is also the length of everything to its left.
    """

    indices: tuple = ()
    distances: tuple = ()
    statistics: tuple = ()
    notes: tuple = field(default=(), compare=False)

    def __len__(self):
        return len(self.indices)


def _var(sum_sq, count):
    return max(sum_sq / count, VAR_FLOOR)


def split_log_likelihood(residuals, tau):
    """Two-segment Gaussian variance log-likelihood term ``l(tau)``.

    ``tau * log(s1) + (n - tau) * log(s2)`` where ``s1`` and ``s2`` are the
    mean squared residuals on ``[1, tau]`` and ``[tau + 1, n]``. A side whose
    mean square is zero uses the floor ``1e-12`` instead.
    """
    r = np.asarray(residuals, dtype=float)
    n = r.size
    if not 1 <= tau <= n - 1:
        raise PcdError(f"tau must lie in [1, {n - 1}], got {tau}")
    left = float(np.dot(r[:tau], r[:tau]))
    right = float(np.dot(r[tau:], r[tau:]))
    return tau * math.log(_var(left, tau)) + (n - tau) * math.log(_var(right, n - tau))


def no_change_log_likelihood(residuals):
    r = np.asarray(residuals, dtype=float)
    return r.size * math.log(_var(float(np.dot(r, r)), r.size))


def sic_statistic(residuals, min_segment=5):
    """``T_n = log n - min_tau (l(tau) - l0)`` and its argmin.

    Parameters
    ----------
    residuals : array_like, shape (n,)
    min_segment : int
        ``tau`` ranges over ``[min_segment, n - min_segment]``.

    Returns
    -------
    t_n : float
    tau_hat : int
        1-based split position; the smallest on ties.
    """
    r = np.asarray(residuals, dtype=float)
    n = r.size
    if n < 2 * min_segment or min_segment < 1:
        raise PcdError(f"need n >= 2 * min_segment ({2 * min_segment}), got n={n}")
    profile = kernels.split_profile(r, min_segment)
    k = int(np.argmin(profile))
    return math.log(n) - float(profile[k]), min_segment + k


def literal_split_profile(y, fitted, min_segment):
    """``l(tau) - l(n)`` with every point centered on ``f(x_tau)``."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(fitted, dtype=float)
    n = y.size
    tau = np.arange(min_segment, n - min_segment + 1)
    c = f[tau - 1]
    cs1 = np.cumsum(y)
    cs2 = np.cumsum(y * y)
    s1, s2 = cs1[tau - 1], cs2[tau - 1]
    left = s2 - 2 * c * s1 + tau * c * c
    m = n - tau
    right = (cs2[-1] - s2) - 2 * c * (cs1[-1] - s1) + m * c * c
    var_l = np.maximum(left / tau, VAR_FLOOR)
    var_r = np.maximum(right / m, VAR_FLOOR)
    c_n = f[-1]
    l_n = n * math.log(_var(float(np.sum((y - c_n) ** 2)), n))
    return tau * np.log(var_l) + m * np.log(var_r) - l_n


def critical_threshold(n, alpha=0.05):
    """Asymptotic normalizing constants and critical value.

    Returns
    -------
    a_n, b_n, c_alpha : float
        ``a_n = sqrt(2 log log n) / log n``,
        ``b_n = (2 log log n + log(log log n) / 2 - log Gamma(1/2)) / log n``,
        ``c_alpha = -log(-log(1 - alpha) / 2)``.
        H0 is rejected when ``a_n sqrt(log n) T - b_n log n > c_alpha``.
    """
    if n < MIN_TEST_WINDOW:
        raise WindowTooSmallError(
            f"the asymptotic test needs n >= {MIN_TEST_WINDOW} points, got {n}; "
            "use longer segments or a larger min_segment bound"
        )
    if not 0 < alpha < 1:
        raise PcdError(f"alpha must lie in (0, 1), got {alpha!r}")
    log_n = math.log(n)
    loglog = math.log(log_n)
    a_n = math.sqrt(2.0 * loglog) / log_n
    b_n = (2.0 * loglog + 0.5 * math.log(loglog) - math.lgamma(0.5)) / log_n
    c_alpha = -math.log(-math.log1p(-alpha) / 2.0)
    return a_n, b_n, c_alpha


def decision_value(t_n, n, rule=RULE_LR):
    """Left-hand side of the rejection inequality for statistic ``t_n``."""
    a_n, b_n, _ = critical_threshold(n)
    log_n = math.log(n)
    stat = t_n - log_n if rule == RULE_LR else t_n
    return a_n * math.sqrt(log_n) * stat - b_n * log_n


def _window_residuals(series, curve, lo, hi):
    x = series.x[lo:hi + 1]
    return series.y[lo:hi + 1] - evaluate(curve, x)


def _scan(series, curve, test, lo, hi, residuals=None):
    m = test.min_segment
    if test.centering == LITERAL:
        y = series.y[lo:hi + 1]
        profile = literal_split_profile(y, evaluate(curve, series.x[lo:hi + 1]), m)
        k = int(np.argmin(profile))
        return math.log(y.size) - float(profile[k]), m + k
    r = _window_residuals(series, curve, lo, hi) if residuals is None else residuals[lo:hi + 1]
    return sic_statistic(r, m)


def detect_single(series, curve, test=None, lo=1, hi=None, *, residuals=None):
    """Test one window for a single variance change.

    Parameters
    ----------
    series : DistanceSeries
    curve : FittedCurve
    test : ChangePointTest, optional
    lo, hi : int
        1-based inclusive window bounds. ``hi`` defaults to ``n``.

    Returns
    -------
    (int, TestStatistics) or None
        Global 1-based change index and its statistics when H0 is rejected.
    """
    test = ChangePointTest() if test is None else test
    hi = series.n if hi is None else hi
    if not 1 <= lo <= hi <= series.n:
        raise PcdError(f"window [{lo}, {hi}] outside series of length {series.n}")
    size = hi - lo + 1
    if size < max(2 * test.min_segment, MIN_TEST_WINDOW):
        log.debug("window [%d, %d] too small for the change-point test", lo, hi)
        return None
    t_n, tau = _scan(series, curve, test, lo - 1, hi - 1, residuals)
    decision = decision_value(t_n, size, test.rule)
    threshold = critical_threshold(size, test.alpha)[2]
    if decision > threshold:
        return lo - 1 + tau, TestStatistics(lo, hi, t_n, decision, threshold)
    return None


def detect_all(series, curve, test=None):
    """Binary segmentation: split at each significant change and retest both halves."""
    test = ChangePointTest() if test is None else test
    residuals = None
    if test.centering == POINTWISE:
        residuals = series.y - evaluate(curve, series.x)
    notes = []
    if series.n < max(2 * test.min_segment, MIN_TEST_WINDOW):
        notes.append(
            f"series has {series.n} points; the change-point test needs at least "
            f"{max(2 * test.min_segment, MIN_TEST_WINDOW)}, so no change points were tested"
        )
    found = {}
    queue = deque([(1, series.n)])
    while queue:
        lo, hi = queue.popleft()
        hit = detect_single(series, curve, test, lo, hi, residuals=residuals)
        if hit is None:
            continue
        tau, stats = hit
        found[tau] = stats
        queue.append((lo, tau))
        queue.append((tau + 1, hi))
    idx = tuple(sorted(found))
    return ChangePointResult(
        indices=idx,
        distances=tuple(float(series.x[t - 1]) for t in idx),
        statistics=tuple(found[t] for t in idx),
        notes=tuple(notes),
    )
