"""Vectorized numpy implementations of the hot loops."""

import numpy as np
from scipy.special import erfc

VAR_FLOOR = 1e-12
_SQRT2 = np.sqrt(2.0)


def knot_interval(x, knots, degree, num_basis):
    """Index ``l`` with ``knots[l] <= x < knots[l + 1]``, the right end mapped to ``num_basis - 1``."""
    inner = knots[degree + 1:num_basis]
    return degree + np.searchsorted(inner, x, side="right")


def basis_matrix(x, knots, degree, num_basis):
    x = np.asarray(x, dtype=float)
    n = x.size
    left_idx = knot_interval(x, knots, degree, num_basis)
    values = np.zeros((n, degree + 1))
    values[:, 0] = 1.0
    left = np.zeros((n, degree + 1))
    right = np.zeros((n, degree + 1))
    for j in range(1, degree + 1):
        left[:, j] = x - knots[left_idx + 1 - j]
        right[:, j] = knots[left_idx + j] - x
        saved = np.zeros(n)
        for r in range(j):
            temp = values[:, r] / (right[:, r + 1] + left[:, j - r])
            values[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        values[:, j] = saved

    out = np.zeros((n, num_basis))
    cols = left_idx[:, None] - degree + np.arange(degree + 1)
    np.put_along_axis(out, cols, values, axis=1)
    return out


def split_profile(residuals, min_segment):
    """``l(tau) - l0`` for ``tau = min_segment .. n - min_segment``."""
    r = np.asarray(residuals, dtype=float)
    n = r.size
    csum = np.cumsum(r * r)
    total = csum[-1]
    l0 = n * np.log(max(total / n, VAR_FLOOR))
    tau = np.arange(min_segment, n - min_segment + 1)
    left = csum[tau - 1]
    right = total - left
    var_left = np.maximum(left / tau, VAR_FLOOR)
    var_right = np.maximum(right / (n - tau), VAR_FLOOR)
    return tau * np.log(var_left) + (n - tau) * np.log(var_right) - l0


def exceedance(mu, sigma, y_t):
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = 0.5 * erfc((y_t - mu) / (sigma * _SQRT2))
    return np.where(sigma > 0, p, (mu > y_t).astype(float))


def pcd_surface(x, mu, sigma, y_values, p_values):
    """PCD for every (y_t, p_t) pair; NaN where no point qualifies."""
    x = np.asarray(x, dtype=float)
    out = np.full((len(y_values), len(p_values)), np.nan)
    p_values = np.asarray(p_values, dtype=float)
    for a, y_t in enumerate(y_values):
        prob = exceedance(mu, sigma, y_t)
        ok = prob[None, :] > p_values[:, None]
        # last qualifying index per p_t row
        rev = ok[:, ::-1]
        hit = rev.any(axis=1)
        last = x.size - 1 - np.argmax(rev, axis=1)
        out[a, hit] = x[last[hit]]
    return out
