from datetime import date, timedelta

import numpy as np
import pytest

from stockrec.allocation import (
    AllocationInput,
    PortfolioWeights,
    equal_weights,
    estimate_covariance,
    max_sharpe,
    min_variance,
    quarterly_rf,
    upper_bound,
)
from stockrec.errors import DataError, ValidationError

from conftest import make_series


def test_upper_bound_rule():
    assert upper_bound(10) == pytest.approx(0.1)
    assert upper_bound(20) == pytest.approx(0.05)
    assert upper_bound(25) == pytest.approx(0.05)
    assert upper_bound(1) == pytest.approx(1.0)


def test_quarterly_rf():
    assert quarterly_rf(0.015) == pytest.approx(1.015 ** 0.25 - 1.0)
    assert quarterly_rf(0.0) == 0.0


def test_equal_weights_examples():
    w10 = equal_weights([f"T{i}" for i in range(10)])
    assert np.allclose(w10.weights, 0.1)
    w1 = equal_weights(["A"])
    assert w1.weights[0] == 1.0
    w25 = equal_weights([f"T{i}" for i in range(25)])
    assert np.allclose(w25.weights, 0.04)
    assert w25.ub == pytest.approx(0.05)
    with pytest.raises(ValidationError):
        equal_weights([])


def test_portfolio_weights_invariants_enforced():
    with pytest.raises(ValidationError, match="sum"):
        PortfolioWeights(("A", "B"), np.array([0.6, 0.3]), ub=1.0)
    with pytest.raises(ValidationError, match="outside"):
        PortfolioWeights(("A", "B"), np.array([1.2, -0.2]), ub=1.0)


AS_OF = date(2001, 6, 1)


def _series_from_returns(ticker, rets, p0=100.0):
    prices = [p0]
    for r in rets:
        prices.append(prices[-1] * (1.0 + r))
    return make_series(ticker, date(2000, 5, 1), prices)


def test_covariance_perfectly_correlated():
    rng = np.random.default_rng(0)
    rets = rng.normal(0, 0.01, 260)
    prices = {
        "AAA": _series_from_returns("AAA", rets, 100.0),
        "BBB": _series_from_returns("BBB", rets, 40.0),  # same returns, scaled price
    }
    cov = estimate_covariance(prices, ("AAA", "BBB"), AS_OF)
    assert cov[0, 1] == pytest.approx(np.sqrt(cov[0, 0] * cov[1, 1]), abs=1e-10)


def test_covariance_constant_prices_zero():
    prices = {
        "AAA": make_series("AAA", date(2000, 5, 1), [50.0] * 280),
        "BBB": make_series("BBB", date(2000, 5, 1), [80.0] * 280),
    }
    cov = estimate_covariance(prices, ("AAA", "BBB"), AS_OF)
    assert np.allclose(cov, 0.0)


def two_pass_cov(R):
    """Independent two-pass oracle: explicit means then cross-products."""
    n, k = R.shape
    means = [sum(R[:, j]) / n for j in range(k)]
    c = np.zeros((k, k))
    for a in range(k):
        for b in range(k):
            c[a, b] = sum((R[i, a] - means[a]) * (R[i, b] - means[b]) for i in range(n)) / (n - 1)
    return c


def test_covariance_matches_two_pass_oracle():
    rng = np.random.default_rng(1)
    k = 5
    rets = rng.normal(0.0005, 0.012, size=(252, k))
    prices = {f"T{j}": _series_from_returns(f"T{j}", rets[:, j]) for j in range(k)}
    tickers = tuple(f"T{j}" for j in range(k))
    cov = estimate_covariance(prices, tickers, AS_OF)
    # recompute the exact same return window the estimator saw
    cols = []
    for t in tickers:
        s = prices[t]
        ds = [d for d in s.dates if AS_OF - timedelta(days=365) <= d <= AS_OF]
        ps = [s.prices[s.dates.index(d)] for d in ds]
        cols.append([ps[i] / ps[i - 1] - 1.0 for i in range(1, len(ps))])
    R = np.array(cols).T
    assert R.shape[0] >= 200
    assert np.allclose(cov, two_pass_cov(R), atol=1e-12)


def test_covariance_sparse_ticker_diagonal_only():
    rng = np.random.default_rng(2)
    rets = rng.normal(0, 0.01, 260)
    prices = {
        "AAA": _series_from_returns("AAA", rets),
        "NEW": make_series("NEW", date(2001, 5, 1), [30.0 + 0.1 * i for i in range(20)]),
    }
    cov = estimate_covariance(prices, ("AAA", "NEW"), AS_OF)
    assert cov[0, 1] == 0.0 and cov[1, 0] == 0.0
    assert cov[1, 1] > 0.0


def test_covariance_missing_history_errors():
    prices = {"AAA": make_series("AAA", date(2000, 5, 1), [50.0] * 280)}
    with pytest.raises(DataError, match="BBB"):
        estimate_covariance(prices, ("AAA", "BBB"), AS_OF)


def test_covariance_psd():
    rng = np.random.default_rng(3)
    # staggered listings force the pairwise-complete + PSD-projection path
    prices = {}
    for j in range(4):
        n = 280 - 40 * j
        rets = rng.normal(0, 0.01, n)
        start = date(2000, 5, 1) + timedelta(days=7 * 8 * j)
        prices[f"T{j}"] = _series_from_returns(f"T{j}", rets)
        prices[f"T{j}"] = make_series(f"T{j}", start, list(prices[f"T{j}"].prices[: n + 1]))
    cov = estimate_covariance(prices, tuple(f"T{j}" for j in range(4)), AS_OF)
    assert np.linalg.eigvalsh((cov + cov.T) / 2).min() >= -1e-12


def _inp(mu, sigma, rf=0.015):
    n = len(mu)
    return AllocationInput(
        tickers=tuple(f"T{i}" for i in range(n)),
        mu=np.asarray(mu, dtype=float),
        sigma=np.asarray(sigma, dtype=float),
        rf=rf,
    )


def test_min_variance_identity_is_equal_weight():
    n = 25
    w = min_variance(_inp(np.zeros(n), np.eye(n)))
    assert np.allclose(w.weights, 1.0 / n, atol=1e-6)


def test_min_variance_two_asset_closed_form():
    inp = _inp([0.0, 0.0], np.diag([1.0, 4.0]))
    capped = min_variance(inp, ub=0.5)
    assert np.allclose(capped.weights, [0.5, 0.5], atol=1e-6)
    free = min_variance(inp, ub=1.0)
    # inverse-variance weights 1/1 : 1/4 -> 0.8, 0.2
    assert np.allclose(free.weights, [0.8, 0.2], atol=1e-6)


def _simplex_grid(n, step, ub):
    ticks = int(round(1.0 / step))
    cap = int(round(ub / step))
    if n == 3:
        for i in range(min(ticks, cap) + 1):
            for j in range(min(ticks - i, cap) + 1):
                k = ticks - i - j
                if 0 <= k <= cap:
                    yield np.array([i, j, k]) * step
    else:
        raise NotImplementedError


def test_min_variance_beats_grid_oracle():
    rng = np.random.default_rng(4)
    B = rng.normal(size=(6, 3))
    sigma = B.T @ B / 6 + 0.05 * np.eye(3)
    inp = _inp(np.zeros(3), sigma)
    w = min_variance(inp, ub=1.0)
    v_opt = w.weights @ sigma @ w.weights
    for g in _simplex_grid(3, 0.01, 1.0):
        assert v_opt <= g @ sigma @ g + 1e-9


def test_min_variance_permutation_invariant():
    rng = np.random.default_rng(5)
    B = rng.normal(size=(8, 3))
    sigma = B.T @ B / 8 + 0.02 * np.eye(3)
    perm = [2, 0, 1]
    a = min_variance(_inp(np.zeros(3), sigma), ub=1.0)
    b = min_variance(_inp(np.zeros(3), sigma[np.ix_(perm, perm)]), ub=1.0)
    assert np.allclose(a.weights[perm], b.weights, atol=1e-6)
    va = a.weights @ sigma @ a.weights
    vb = b.weights @ sigma[np.ix_(perm, perm)] @ b.weights
    assert va == pytest.approx(vb, abs=1e-10)


def test_min_variance_scale_invariant():
    rng = np.random.default_rng(6)
    B = rng.normal(size=(8, 3))
    sigma = B.T @ B / 8 + 0.02 * np.eye(3)
    a = min_variance(_inp(np.zeros(3), sigma), ub=1.0)
    b = min_variance(_inp(np.zeros(3), 7.5 * sigma), ub=1.0)
    assert np.allclose(a.weights, b.weights, atol=1e-6)


def test_max_sharpe_two_asset_line_search_oracle():
    mu = np.array([0.10, 0.02])
    sigma_q = np.diag([0.04, 0.04])
    inp = _inp(mu, sigma_q / 63.0, rf=0.0)
    w = max_sharpe(inp, ub=1.0)

    def sharpe(w1):
        x = np.array([w1, 1.0 - w1])
        return (mu @ x) / np.sqrt(x @ sigma_q @ x)

    grid = np.arange(0.0, 1.0005, 0.001)
    best_w1 = grid[int(np.argmax([sharpe(g) for g in grid]))]
    # tangency portfolio sits at w1 = 5/6, heavily tilted to asset 1
    assert best_w1 == pytest.approx(5.0 / 6.0, abs=1e-3)
    assert w.weights[0] == pytest.approx(best_w1, abs=0.02)
    assert sharpe(w.weights[0]) >= sharpe(best_w1) - 1e-6


def test_max_sharpe_equal_mu_matches_min_variance():
    rng = np.random.default_rng(7)
    B = rng.normal(size=(8, 3))
    sigma = (B.T @ B / 8 + 0.02 * np.eye(3)) / 63.0
    inp = _inp([0.05, 0.05, 0.05], sigma, rf=0.015)
    ms = max_sharpe(inp, ub=1.0)
    mv = min_variance(inp, ub=1.0)
    assert np.allclose(ms.weights, mv.weights, atol=1e-6)


def test_max_sharpe_beats_grid_oracle():
    rng = np.random.default_rng(8)
    B = rng.normal(size=(10, 3))
    sigma = (B.T @ B / 10 + 0.03 * np.eye(3)) / 63.0
    mu = np.array([0.08, 0.03, 0.05])
    rf = 0.015
    inp = _inp(mu, sigma, rf=rf)
    w = max_sharpe(inp, ub=1.0)
    rf_q = quarterly_rf(rf)
    sq = sigma * 63.0

    def sharpe(x):
        var = x @ sq @ x
        return (mu @ x - rf_q) / np.sqrt(var) if var > 0 else -np.inf

    s_opt = sharpe(w.weights)
    best_grid = max(sharpe(g) for g in _simplex_grid(3, 0.01, 1.0))
    assert s_opt >= best_grid - 1e-6


def test_max_sharpe_falls_back_when_mu_below_rf(caplog):
    inp = _inp([-0.01, -0.02], np.diag([0.01, 0.02]), rf=0.015)
    import logging

    with caplog.at_level(logging.WARNING, logger="stockrec.allocation"):
        w = max_sharpe(inp, ub=1.0)
    mv = min_variance(inp, ub=1.0)
    assert np.allclose(w.weights, mv.weights, atol=1e-6)
    assert any("min_variance" in r.message for r in caplog.records)


def test_allocation_input_validation():
    with pytest.raises(ValidationError, match="symmetric"):
        _inp([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValidationError, match="PSD"):
        _inp([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ValidationError, match="finite"):
        _inp([np.nan, 0.0], np.eye(2))
    with pytest.raises(ValidationError):
        min_variance(_inp([0.0], [[1.0]]))


def test_returned_weights_satisfy_invariants():
    rng = np.random.default_rng(9)
    for trial in range(5):
        n = int(rng.integers(3, 8))
        B = rng.normal(size=(n + 4, n))
        sigma = (B.T @ B / (n + 4) + 0.02 * np.eye(n)) / 63.0
        mu = rng.normal(0.03, 0.03, n)
        inp = _inp(mu, sigma)
        for w in (min_variance(inp), max_sharpe(inp), equal_weights(inp.tickers)):
            assert w.weights.sum() == pytest.approx(1.0, abs=1e-6)
            assert np.all(w.weights >= -1e-9)
            assert np.all(w.weights <= w.ub + 1e-9)
