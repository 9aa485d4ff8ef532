import math

import numpy as np
import pytest

from pcdeval import DistanceSeries, PcdError, SplineConfig, build_basis, evaluate, fit_penalized, \
    select_lambda
from pcdeval.spline_fit import (FittedCurve, difference_matrix, information_criterion,
                                make_knots, penalty_matrix)


def _series(x, y):
    return DistanceSeries(x, np.clip(y, 0, 1))


def _objective(curve, series, beta):
    b = build_basis(series.x, curve.config, curve.knots)
    d2 = difference_matrix(curve.config.num_basis)
    return np.sum((series.y - b @ beta) ** 2) + curve.config.lam * np.sum((d2 @ beta) ** 2)


def test_config_validation():
    with pytest.raises(PcdError):
        SplineConfig(num_basis=3, degree=3)
    with pytest.raises(PcdError):
        SplineConfig(num_basis=5, degree=5)
    with pytest.raises(PcdError):
        SplineConfig(lam=-1.0)
    with pytest.raises(PcdError):
        SplineConfig(lam=float("inf"))
    with pytest.raises(PcdError):
        SplineConfig(knot_placement="random")


def test_knot_vector_shape():
    for boundary in ("extended", "clamped"):
        cfg = SplineConfig(boundary=boundary)
        knots = make_knots(5.0, 75.0, cfg)
        assert knots.size == cfg.num_basis + cfg.degree + 1
        assert knots[cfg.degree] == 5.0 and knots[cfg.num_basis] == 75.0
        assert np.all(np.diff(knots) >= 0)


def test_partition_of_unity(rng):
    x = np.sort(rng.uniform(10, 300, 2000))
    for cfg in (SplineConfig(), SplineConfig(boundary="clamped"), SplineConfig(degree=2, num_basis=7)):
        b = build_basis(x, cfg)
        assert np.abs(b.sum(axis=1) - 1).max() <= 1e-12
        assert np.all(b >= -1e-15)


def test_clamped_left_endpoint_row():
    cfg = SplineConfig(boundary="clamped")
    b = build_basis(np.array([0.0, 50.0, 100.0]), cfg)
    assert b[0].tolist() == [1.0] + [0.0] * 9
    assert np.allclose(b[-1], [0.0] * 9 + [1.0], rtol=0, atol=1e-15)


def test_basis_rejects_outside_span():
    cfg = SplineConfig()
    knots = make_knots(0.0, 10.0, cfg)
    with pytest.raises(PcdError):
        build_basis([-0.1, 5.0], cfg, knots)
    with pytest.raises(PcdError):
        build_basis([5.0, 10.5], cfg, knots)


def test_quantile_knots_follow_data(rng):
    x = np.sort(np.r_[rng.uniform(0, 20, 200), rng.uniform(20, 200, 20)])
    cfg = SplineConfig(knot_placement="quantile")
    knots = make_knots(x[0], x[-1], cfg, x)
    inner = knots[cfg.degree + 1:cfg.num_basis]
    assert np.count_nonzero(inner < 20) >= 4
    assert np.abs(build_basis(x, cfg).sum(axis=1) - 1).max() <= 1e-12


@pytest.mark.parametrize("lam", [0.0, 0.6, 100.0])
def test_constant_reproduced(lam):
    x = np.linspace(0, 200, 120)
    curve = fit_penalized(_series(x, np.full_like(x, 0.7)), SplineConfig(lam=lam))
    grid = np.linspace(0, 200, 1001)
    assert np.abs(evaluate(curve, grid) - 0.7).max() <= 1e-6


@pytest.mark.parametrize("lam", [0.0, 0.6, 100.0, 1e4])
def test_affine_reproduced(lam, rng):
    x = np.sort(rng.uniform(5, 250, 150))
    y = 0.95 - 0.0032 * x
    curve = fit_penalized(_series(x, y), SplineConfig(lam=lam))
    # unpenalized least-squares line through the same data
    slope, intercept = np.polyfit(x, y, 1)
    grid = np.linspace(x[0], x[-1], 777)
    assert np.abs(evaluate(curve, grid) - (intercept + slope * grid)).max() <= 1e-6
    mid = 0.5 * (x[0] + x[-1])
    assert evaluate(curve, mid) == pytest.approx(intercept + slope * mid, abs=1e-6)


def test_normal_equation_residual(rng):
    for seed in range(20):
        g = np.random.default_rng(seed)
        x = np.sort(g.uniform(0, 200, 80))
        series = _series(x, g.uniform(0, 1, 80))
        curve = fit_penalized(series)
        b = build_basis(series.x, curve.config, curve.knots)
        lhs = b.T @ b + curve.config.lam * penalty_matrix(10)
        assert np.abs(lhs @ curve.coefficients - b.T @ series.y).max() <= 1e-8


def test_large_penalty_makes_coefficients_affine(rng):
    x = np.sort(rng.uniform(0, 100, 200))
    curve = fit_penalized(_series(x, rng.uniform(0, 1, 200)), SplineConfig(lam=1e8))
    assert np.sum(np.diff(curve.coefficients, 2) ** 2) <= 1e-6


def test_local_minimum(rng):
    x = np.sort(rng.uniform(0, 150, 90))
    series = _series(x, 0.8 / (1 + np.exp((x - 70) / 15)) + rng.normal(0, 0.05, 90))
    curve = fit_penalized(series)
    base = _objective(curve, series, curve.coefficients)
    for _ in range(100):
        v = rng.normal(size=10)
        v *= 1e-4 / np.linalg.norm(v)
        assert _objective(curve, series, curve.coefficients + v) >= base


def test_fewer_points_than_basis():
    x = np.array([0.0, 10.0, 25.0, 40.0, 60.0])
    y = np.array([0.9, 0.8, 0.6, 0.5, 0.2])
    curve = fit_penalized(_series(x, y), SplineConfig(lam=0.0))
    b = build_basis(x, curve.config, curve.knots)
    # interpolates, and takes the minimum-norm coefficient vector among interpolants
    assert np.allclose(b @ curve.coefficients, y, atol=1e-10)
    assert np.allclose(curve.coefficients, np.linalg.pinv(b) @ y, atol=1e-8)
    curve = fit_penalized(_series(x, y), SplineConfig(lam=0.6))
    assert np.all(np.isfinite(curve.coefficients))


def test_fit_input_checks():
    with pytest.raises(PcdError):
        fit_penalized(_series([0, 1, 2], [0.1, 0.2, 0.3]))


def test_evaluate_policy(rng):
    x = np.linspace(10, 110, 50)
    curve = fit_penalized(_series(x, np.full(50, 0.42)))
    assert evaluate(curve, x[7]) == pytest.approx(0.42, abs=1e-9)
    assert evaluate(curve, -1e3) == evaluate(curve, 10.0)
    assert evaluate(curve, 1e6) == evaluate(curve, 110.0)
    assert isinstance(evaluate(curve, 50.0), float)
    assert evaluate(curve, np.array([[20.0, 30.0]])).shape == (1, 2)
    with pytest.raises(PcdError):
        evaluate(curve, float("nan"))


def test_curve_round_trip(rng):
    x = np.sort(rng.uniform(0, 100, 40))
    curve = fit_penalized(_series(x, rng.uniform(0, 1, 40)))
    again = FittedCurve.from_dict(curve.to_dict())
    assert np.array_equal(evaluate(curve, x), evaluate(again, x))


def _criterion_direct(x, y, lam, which):
    cfg = SplineConfig(lam=lam)
    b = build_basis(x, cfg)
    d2 = np.diff(np.eye(10), 2, axis=0)
    hat = b @ np.linalg.inv(b.T @ b + lam * d2.T @ d2) @ b.T
    rss = np.sum((y - hat @ y) ** 2)
    n = x.size
    return n * math.log(rss / n) + (math.log(n) if which == "BIC" else 2.0) * np.trace(hat)


def test_select_lambda_trivial_cases(rng):
    x = np.sort(rng.uniform(0, 100, 60))
    series = _series(x, rng.uniform(0, 1, 60))
    assert select_lambda(series, [3.5]) == 3.5
    assert select_lambda(series, [0.6], "AIC") == 0.6
    with pytest.raises(PcdError):
        select_lambda(series, [])


def test_select_lambda_prefers_smooth_for_noise():
    g = np.random.default_rng(5)
    x = np.linspace(0, 200, 300)
    y = np.clip(0.5 + g.normal(0, 0.1, 300), 0, 1)
    series = _series(x, y)
    direct = {lam: _criterion_direct(x, series.y, lam, "BIC") for lam in (0.01, 100.0)}
    assert direct[100.0] < direct[0.01]
    for lam, value in direct.items():
        assert information_criterion(series, SplineConfig(lam=lam), "BIC") == pytest.approx(value, abs=1e-8)
    assert select_lambda(series, [0.01, 100.0], "BIC") == 100.0


def test_select_lambda_ties_go_to_larger(monkeypatch):
    import pcdeval.spline_fit as sf

    monkeypatch.setattr(sf, "information_criterion", lambda *a, **k: 1.0)
    series = _series(np.linspace(0, 10, 30), np.full(30, 0.5))
    assert select_lambda(series, [0.1, 7.0, 2.0]) == 7.0
