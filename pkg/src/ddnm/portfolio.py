"""Mean-variance allocation rules driven by forecast moments, plus the
per-period performance accounting used in backtests.

All three rules minimize predicted variance w'Qw subject to full
investment (w'1 = 1) and a return target:

  target:       w'f = target                       (closed form via K)
  long-only:    target rule plus w >= 0            (primal active set)
  neutral:      w'f = bench mean + spread, and zero predicted covariance
                with a benchmark                   (closed form via K)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, InfeasibilityError, NumericalError

_COND_LIMIT = 1e12
_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class PortfolioWeights:
    """Solved weights with the achieved objective and solver diagnostics."""

    w: np.ndarray
    objective: float
    multipliers: dict = field(default_factory=dict)
    active: tuple[int, ...] = ()


def _precision(Q, K=None):
    Q = np.asarray(Q, dtype=float)
    if K is not None:
        return np.asarray(K, dtype=float)
    try:
        np.linalg.cholesky(Q)
    except np.linalg.LinAlgError:
        raise NumericalError("forecast covariance is not positive definite")
    return np.linalg.inv(Q)


def _constrained_minimum(f, Q, A, b, K):
    """min w'Qw s.t. Aw = b via the Lagrange system A K A' c = b, w = K A'c.

    Constraint rows are normalized first so the condition test measures
    genuine rank deficiency rather than row scaling.
    """
    norms = np.linalg.norm(A, axis=1)
    if np.any(norms == 0.0):
        raise DegeneracyError("constraint matrix has a zero row")
    As = A / norms[:, None]
    bs = np.asarray(b, dtype=float) / norms
    G = As @ K @ As.T
    if np.linalg.cond(G) > _COND_LIMIT:
        raise DegeneracyError(
            "constraint set is (near) rank deficient; cannot pin a unique portfolio"
        )
    c = np.linalg.solve(G, bs)
    w = K @ As.T @ c
    return w, 2.0 * c / norms


def target_portfolio(f, Q, target, K=None) -> PortfolioWeights:
    """Minimum-variance weights meeting an expected-return target."""
    f = np.asarray(f, dtype=float)
    Q = np.asarray(Q, dtype=float)
    K = _precision(Q, K)
    m = f.size
    A = np.vstack([f, np.ones(m)])
    w, lam = _constrained_minimum(f, Q, A, np.array([float(target), 1.0]), K)
    return PortfolioWeights(w=w, objective=float(w @ Q @ w), multipliers={"equality": lam})


def constrained_target_portfolio(f, Q, target, K=None, max_iter=None) -> PortfolioWeights:
    """Long-only variant of the target rule, solved by a primal active set.

    The first subproblem solve is exactly the unconstrained target rule, so
    a nonnegative target solution is returned immediately. Blocking bounds
    are activated at the lowest index on ties.
    """
    f = np.asarray(f, dtype=float)
    Q = np.asarray(Q, dtype=float)
    target = float(target)
    m = f.size
    lo, hi = float(f.min()), float(f.max())
    if target < lo - _FEAS_TOL or target > hi + _FEAS_TOL:
        raise InfeasibilityError(
            f"long-only target {target} outside attainable range [{lo}, {hi}]"
        )
    _precision(Q, K)  # positive-definiteness check only
    A = np.vstack([f, np.ones(m)])
    b = np.array([target, 1.0])

    # feasible start: mix of the extreme-mean unit portfolios
    i_lo, i_hi = int(np.argmin(f)), int(np.argmax(f))
    theta = 0.5 if hi == lo else np.clip((target - lo) / (hi - lo), 0.0, 1.0)
    w = np.zeros(m)
    w[i_hi] += theta
    w[i_lo] += 1.0 - theta
    working: set[int] = set()

    if max_iter is None:
        max_iter = 10 * m + 50
    lam = np.zeros(2)
    for _ in range(max_iter):
        w_star, lam = _equality_solve(Q, A, b, working, m)
        direction = w_star - w
        if np.max(np.abs(direction)) < 1e-13:
            mu = 2.0 * Q @ w - A.T @ lam
            active = sorted(working)
            if not active or min(mu[i] for i in active) >= -1e-10:
                w = np.where(np.abs(w) < 1e-14, 0.0, w)
                return PortfolioWeights(
                    w=w,
                    objective=float(w @ Q @ w),
                    multipliers={"equality": lam, "bounds": mu},
                    active=tuple(active),
                )
            worst = min(active, key=lambda i: (mu[i], i))
            working.remove(worst)
            continue
        # largest step keeping w >= 0; blocking index breaks ties low
        step = 1.0
        blocking = -1
        for i in range(m):
            if i in working or direction[i] >= -1e-14:
                continue
            t_i = -w[i] / direction[i]
            if t_i < step - 1e-12:
                step, blocking = t_i, i
        w = w + max(step, 0.0) * direction
        if blocking >= 0:
            w[blocking] = 0.0
            working.add(blocking)
    raise NumericalError("long-only active-set solver failed to converge")


def _equality_solve(Q, A, b, working, m):
    """Optimum of the equality-constrained subproblem with working-set
    coordinates clamped to zero; returns (w, equality multipliers)."""
    free = [i for i in range(m) if i not in working]
    nf = len(free)
    Qf = Q[np.ix_(free, free)]
    Af = A[:, free]
    M = np.zeros((nf + 2, nf + 2))
    M[:nf, :nf] = 2.0 * Qf
    M[:nf, nf:] = Af.T
    M[nf:, :nf] = Af
    rhs = np.concatenate([np.zeros(nf), b])
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.max(np.abs(Af @ sol[:nf] - b)) > 1e-8:
        raise DegeneracyError("working set cannot satisfy the equality constraints")
    w = np.zeros(m)
    w[free] = sol[:nf]
    # block system solves 2Qw + A'lam = 0; flip so 2Qw - A'lam = 0 holds
    return w, -sol[nf:]


def benchmark_neutral_portfolio(f, Q, spread, bench_mean, bench_cov, K=None) -> PortfolioWeights:
    """Target-beating weights with zero predicted covariance to a benchmark.

    Constraints: w'f = bench_mean + spread, w'1 = 1, w'bench_cov = 0. An
    exactly-zero bench_cov makes the third constraint vacuous and the rule
    collapses to the plain target rule.
    """
    f = np.asarray(f, dtype=float)
    Q = np.asarray(Q, dtype=float)
    bench_cov = np.asarray(bench_cov, dtype=float)
    K = _precision(Q, K)
    m = f.size
    rows = [f, np.ones(m)]
    b_list = [float(bench_mean) + float(spread), 1.0]
    if np.any(bench_cov != 0.0):
        rows.append(bench_cov)
        b_list.append(0.0)
    A = np.vstack(rows)
    w, lam = _constrained_minimum(f, Q, A, np.array(b_list), K)
    return PortfolioWeights(w=w, objective=float(w @ Q @ w), multipliers={"equality": lam})


def evaluate_period(w, realized_returns, f, Q) -> dict:
    """One holding period's accounting: realized return, predicted risk,
    and the predicted Sharpe-style ratio."""
    w = np.asarray(w, dtype=float)
    realized = np.asarray(realized_returns, dtype=float)
    f = np.asarray(f, dtype=float)
    Q = np.asarray(Q, dtype=float)
    pr = float(np.sqrt(w @ Q @ w))
    return {
        "rr": float(w @ realized),
        "pr": pr,
        "psr": float((w @ f) / pr) if pr > 0 else np.inf,
    }


def summarize_returns(rr, horizon, periods_per_year=252.0) -> dict:
    """Aggregate realized performance: cumulative and mean return, risk as
    the sample standard deviation, and the annualized Sharpe ratio
    (infinite when the realized risk is exactly zero)."""
    rr = np.asarray(rr, dtype=float)
    if rr.size == 0:
        return {"cr": 1.0, "mrr": np.nan, "risk": np.nan, "sharpe": np.nan}
    mrr = float(rr.mean())
    risk = float(rr.std(ddof=1)) if rr.size > 1 else np.nan
    ann = np.sqrt(periods_per_year / float(horizon))
    if risk == 0.0:
        sharpe = np.inf if mrr > 0 else (-np.inf if mrr < 0 else np.nan)
    else:
        sharpe = mrr / risk * ann if np.isfinite(risk) else np.nan
    return {"cr": float(np.prod(1.0 + rr)), "mrr": mrr, "risk": risk, "sharpe": sharpe}
