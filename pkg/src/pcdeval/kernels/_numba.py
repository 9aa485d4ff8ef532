"""numba-compiled loop implementations of the hot kernels."""

import math

import numpy as np

from .._compat import njit

VAR_FLOOR = 1e-12
_SQRT2 = math.sqrt(2.0)


@njit(cache=True)
def _interval(knots, degree, num_basis, x_val):
    lo = degree
    hi = num_basis - 1
    # bisect on knots[degree+1 : num_basis], matching searchsorted(side="right")
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if knots[mid] <= x_val:
            lo = mid
        else:
            hi = mid - 1
    return lo


@njit(cache=True)
def basis_matrix(x, knots, degree, num_basis):
    n = x.shape[0]
    out = np.zeros((n, num_basis))
    values = np.zeros(degree + 1)
    left = np.zeros(degree + 1)
    right = np.zeros(degree + 1)
    for i in range(n):
        x_val = x[i]
        span = _interval(knots, degree, num_basis, x_val)
        values[0] = 1.0
        for j in range(1, degree + 1):
            left[j] = x_val - knots[span + 1 - j]
            right[j] = knots[span + j] - x_val
            saved = 0.0
            for r in range(j):
                temp = values[r] / (right[r + 1] + left[j - r])
                values[r] = saved + right[r + 1] * temp
                saved = left[j - r] * temp
            values[j] = saved
        for k in range(degree + 1):
            out[i, span - degree + k] = values[k]
    return out


@njit(cache=True)
def split_profile(residuals, min_segment):
    n = residuals.shape[0]
    csum = np.empty(n)
    acc = 0.0
    for i in range(n):
        acc += residuals[i] * residuals[i]
        csum[i] = acc
    total = csum[n - 1]
    l0 = n * math.log(max(total / n, VAR_FLOOR))
    out = np.empty(n - 2 * min_segment + 1)
    for k in range(out.shape[0]):
        tau = min_segment + k
        left = csum[tau - 1]
        right = total - left
        var_left = max(left / tau, VAR_FLOOR)
        var_right = max(right / (n - tau), VAR_FLOOR)
        out[k] = tau * math.log(var_left) + (n - tau) * math.log(var_right) - l0
    return out


@njit(cache=True)
def _exceed(mu, sigma, y_t):
    if sigma > 0.0:
        return 0.5 * math.erfc((y_t - mu) / (sigma * _SQRT2))
    return 1.0 if mu > y_t else 0.0


@njit(cache=True)
def exceedance(mu, sigma, y_t):
    out = np.empty(mu.shape[0])
    for i in range(mu.shape[0]):
        out[i] = _exceed(mu[i], sigma[i], y_t)
    return out


@njit(cache=True)
def pcd_surface(x, mu, sigma, y_values, p_values):
    n = x.shape[0]
    out = np.full((y_values.shape[0], p_values.shape[0]), np.nan)
    prob = np.empty(n)
    for a in range(y_values.shape[0]):
        y_t = y_values[a]
        for i in range(n):
            prob[i] = _exceed(mu[i], sigma[i], y_t)
        for b in range(p_values.shape[0]):
            p_t = p_values[b]
            for i in range(n - 1, -1, -1):
                if prob[i] > p_t:
                    out[a, b] = x[i]
                    break
    return out
