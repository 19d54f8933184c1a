"""Long-only capped portfolio construction: equal weight, minimum variance,
and max-Sharpe via an efficient-frontier sweep.

Unit conventions: mu is quarterly (the recommender's predicted returns),
sigma is a daily-return covariance scaled by 63 trading days for the Sharpe
sweep, and the annual risk-free rate maps to quarterly as (1+rf)^(1/4)-1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np
from scipy.optimize import minimize

from .errors import ComputationError, DataError, ValidationError

logger = logging.getLogger(__name__)

TRADING_DAYS_PER_QUARTER = 63
FRONTIER_POINTS = 100
KKT_TOL = 1e-6


def upper_bound(n: int) -> float:
    """5% position cap, relaxed to 1/n when fewer than 20 names are held."""
    return max(0.05, 1.0 / n)


def quarterly_rf(rf_annual: float) -> float:
    return (1.0 + rf_annual) ** 0.25 - 1.0


@dataclass(frozen=True)
class AllocationInput:
    tickers: tuple
    mu: np.ndarray          # quarterly expected returns
    sigma: np.ndarray       # daily-return covariance
    rf: float = 0.015       # annual

    def __post_init__(self):
        n = len(self.tickers)
        if self.mu.shape != (n,) or self.sigma.shape != (n, n):
            raise ValidationError("mu/sigma shapes inconsistent with ticker count")
        if not np.isfinite(self.mu).all() or not np.isfinite(self.sigma).all():
            raise ValidationError("mu and sigma must be finite")
        if not np.allclose(self.sigma, self.sigma.T, atol=1e-8):
            raise ValidationError("sigma must be symmetric")
        w = np.linalg.eigvalsh((self.sigma + self.sigma.T) / 2)
        if w.min() < -1e-8:
            raise ValidationError(f"sigma not PSD (min eigenvalue {w.min():.3g})")


@dataclass(frozen=True)
class PortfolioWeights:
    tickers: tuple
    weights: np.ndarray
    ub: float

    def __post_init__(self):
        w = self.weights
        if np.any(w < -1e-9) or np.any(w > self.ub + 1e-9):
            raise ValidationError("weights outside [0, ub]")
        if abs(w.sum() - 1.0) > 1e-6:
            raise ValidationError(f"weights sum to {w.sum():.8f}, not 1")

    def as_dict(self):
        return dict(zip(self.tickers, self.weights.tolist()))


def estimate_covariance(prices, tickers, as_of: date) -> np.ndarray:
    """Sample covariance of trailing-one-year daily simple returns.

    Tickers with partial coverage (>= 60 but < 252 return days) enter via
    pairwise-complete estimation followed by projection to the nearest PSD
    matrix; tickers below 60 days keep only their own variance on the
    diagonal.
    """
    start = as_of - timedelta(days=365)
    per_ticker = {}
    for t in tickers:
        series = prices.get(t)
        if series is None or len(series.dates) == 0:
            raise DataError(f"{t}: no price history")
        ds, ps = series.window(start, as_of)
        rets = {}
        for i in range(1, len(ps)):
            rets[ds[i]] = ps[i] / ps[i - 1] - 1.0
        per_ticker[t] = rets

    all_dates = sorted(set().union(*[set(r) for r in per_ticker.values()])) if per_ticker else []
    n = len(tickers)
    R = np.full((len(all_dates), n), np.nan)
    for j, t in enumerate(tickers):
        for i, d in enumerate(all_dates):
            if d in per_ticker[t]:
                R[i, j] = per_ticker[t][d]

    counts = np.sum(~np.isnan(R), axis=0)
    sparse = counts < 60
    cov = np.zeros((n, n))
    dense_cols = np.where(~sparse)[0]

    if dense_cols.size:
        sub = R[:, dense_cols]
        if not np.isnan(sub).any():
            c = np.cov(sub, rowvar=False, ddof=1) if sub.shape[0] > 1 else np.zeros(
                (dense_cols.size, dense_cols.size)
            )
            c = np.atleast_2d(c)
        else:
            c = _pairwise_cov(sub)
            c = _nearest_psd(c)
        for a, ja in enumerate(dense_cols):
            for b, jb in enumerate(dense_cols):
                cov[ja, jb] = c[a, b]

    for j in np.where(sparse)[0]:
        vals = R[~np.isnan(R[:, j]), j]
        cov[j, j] = float(np.var(vals, ddof=1)) if vals.size >= 2 else 0.0
    return cov


def _pairwise_cov(R):
    k = R.shape[1]
    c = np.zeros((k, k))
    for a in range(k):
        for b in range(a, k):
            mask = ~np.isnan(R[:, a]) & ~np.isnan(R[:, b])
            if mask.sum() >= 2:
                x = R[mask, a]
                y = R[mask, b]
                c[a, b] = c[b, a] = float(((x - x.mean()) * (y - y.mean())).sum() / (mask.sum() - 1))
    return c


def _nearest_psd(c):
    vals, vecs = np.linalg.eigh((c + c.T) / 2)
    vals = np.clip(vals, 0.0, None)
    return vecs @ np.diag(vals) @ vecs.T


def equal_weights(tickers) -> PortfolioWeights:
    n = len(tickers)
    if n == 0:
        raise ValidationError("equal_weights requires at least one ticker")
    return PortfolioWeights(
        tickers=tuple(tickers), weights=np.full(n, 1.0 / n), ub=upper_bound(n)
    )


def _solve_qp(Q, ub, eq_vecs, eq_vals, x0=None):
    """min 1/2 w'Qw  s.t.  eq_vecs @ w = eq_vals,  0 <= w <= ub.

    SLSQP solve followed by an active-set KKT polish; raises on
    non-convergence.
    """
    n = Q.shape[0]
    A = np.asarray(eq_vecs, dtype=float)
    b = np.asarray(eq_vals, dtype=float)
    if x0 is None:
        x0 = np.full(n, 1.0 / n)

    def fun(w):
        return 0.5 * w @ Q @ w

    def jac(w):
        return Q @ w

    cons = [
        {"type": "eq", "fun": (lambda w, r=r: A[r] @ w - b[r]), "jac": (lambda w, r=r: A[r])}
        for r in range(A.shape[0])
    ]
    res = minimize(
        fun,
        x0,
        jac=jac,
        bounds=[(0.0, ub)] * n,
        constraints=cons,
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 1000},
    )
    w = np.clip(res.x, 0.0, ub)
    feas = np.abs(A @ w - b).max() if A.size else 0.0
    if not res.success and feas > 1e-7:
        raise ComputationError(
            f"QP solver failed after {res.nit} iterations: {res.message}"
        )
    polished = _polish(Q, ub, A, b, w)
    if polished is not None:
        w = polished
    if np.abs(A @ w - b).max() > 1e-6:
        raise ComputationError("QP solution violates equality constraints")
    return w


def _polish(Q, ub, A, b, w, tol=1e-7):
    """Refine via the exact KKT system on the inactive set; None if the
    guessed active set fails its optimality checks."""
    n = Q.shape[0]
    lower = w <= tol
    upper = w >= ub - tol
    free = ~(lower | upper)
    m = A.shape[0]
    nf = int(free.sum())
    if nf == 0:
        return None
    Qff = Q[np.ix_(free, free)]
    Af = A[:, free]
    rhs_top = -(Q[np.ix_(free, upper)] @ np.full(int(upper.sum()), ub))
    rhs_bot = b - A[:, upper] @ np.full(int(upper.sum()), ub)
    K = np.block([[Qff, -Af.T], [Af, np.zeros((m, m))]])
    rhs = np.concatenate([rhs_top, rhs_bot])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        return None
    wf = sol[:nf]
    lam = sol[nf:]
    if np.any(wf < -1e-10) or np.any(wf > ub + 1e-10):
        return None
    out = np.empty(n)
    out[free] = np.clip(wf, 0.0, ub)
    out[lower] = 0.0
    out[upper] = ub
    eta = Q @ out - A.T @ lam
    if np.any(eta[lower] < -KKT_TOL) or np.any(eta[upper] > KKT_TOL):
        return None
    if np.abs(eta[free]).max(initial=0.0) > KKT_TOL:
        return None
    return out


def min_variance(inp: AllocationInput, ub=None) -> PortfolioWeights:
    n = len(inp.tickers)
    if n < 2:
        raise ValidationError("min_variance requires at least two assets")
    if ub is None:
        ub = upper_bound(n)
    w = _solve_qp(inp.sigma, ub, np.ones((1, n)), np.array([1.0]))
    return PortfolioWeights(tickers=inp.tickers, weights=w, ub=ub)


def max_return_weights(mu, ub):
    """Budget/box LP maximum: greedily fill the highest-mu names at the cap."""
    n = len(mu)
    order = np.argsort(-mu, kind="stable")
    w = np.zeros(n)
    remaining = 1.0
    for j in order:
        take = min(ub, remaining)
        w[j] = take
        remaining -= take
        if remaining <= 1e-12:
            break
    return w


def max_sharpe(inp: AllocationInput, frontier_points=FRONTIER_POINTS, ub=None) -> PortfolioWeights:
    """Sweep the constrained efficient frontier and keep the best Sharpe point.

    Falls back to min_variance (logged) when no expected return clears the
    quarterly risk-free rate or every sweep subproblem fails.
    """
    n = len(inp.tickers)
    if n < 2:
        raise ValidationError("max_sharpe requires at least two assets")
    if ub is None:
        ub = upper_bound(n)
    rf_q = quarterly_rf(inp.rf)
    if not np.any(inp.mu > rf_q):
        logger.warning("no expected return above rf; falling back to min_variance")
        return min_variance(inp, ub=ub)

    sigma_q = inp.sigma * TRADING_DAYS_PER_QUARTER
    w_min = _solve_qp(inp.sigma, ub, np.ones((1, n)), np.array([1.0]))
    r_lo = float(inp.mu @ w_min)
    r_hi = float(inp.mu @ max_return_weights(inp.mu, ub))
    targets = np.linspace(r_lo, r_hi, frontier_points)

    ones = np.ones(n)

    def eval_target(tgt):
        try:
            w = _solve_qp(
                inp.sigma,
                ub,
                np.vstack([ones, inp.mu]),
                np.array([1.0, tgt]),
                x0=w_min,
            )
        except ComputationError:
            return None
        var_q = float(w @ sigma_q @ w)
        ret = float(inp.mu @ w)
        sharpe = (ret - rf_q) / np.sqrt(var_q) if var_q > 0 else -np.inf
        return (sharpe, -var_q), w

    best = None
    best_key = None
    best_i = None
    for i, tgt in enumerate(targets):
        result = eval_target(tgt)
        if result is None:
            continue
        key, w = result
        if best_key is None or key > best_key:
            best_key = key
            best = w
            best_i = i
    if best is None:
        logger.warning("every frontier subproblem failed; falling back to min_variance")
        return min_variance(inp, ub=ub)

    # golden-section refinement of the target return around the sweep winner;
    # Sharpe is unimodal along the frontier, so this closes the grid gap
    lo = targets[max(best_i - 1, 0)]
    hi = targets[min(best_i + 1, len(targets) - 1)]
    if hi > lo:
        phi = (np.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c, d = b - phi * (b - a), a + phi * (b - a)
        fc, fd = eval_target(c), eval_target(d)
        for _ in range(40):
            if fc is None or (fd is not None and fd[0] > fc[0]):
                a, c, fc = c, d, fd
                d = a + phi * (b - a)
                fd = eval_target(d)
            else:
                b, d, fd = d, c, fc
                c = b - phi * (b - a)
                fc = eval_target(c)
        for result in (fc, fd):
            if result is not None and result[0] > best_key:
                best_key, best = result
    return PortfolioWeights(tickers=inp.tickers, weights=best, ub=ub)
