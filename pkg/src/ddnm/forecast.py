"""Model-averaged forecasting: analytic one-step mixture moments, Monte
Carlo multi-step paths, and the transform from log-price paths to returns.

One-step moments mix the per-model predictive moments under the posterior
model probabilities, series by series from the top of the triangular order
down; the cross-series covariance uses the identity that a series'
covariance with the already-processed block is the block covariance times
its mean parent coefficients, averaged over models.

Multi-step forecasts are simulated: each path draws one model per series,
then walks horizons forward sampling from the conditional Student-t given
simulated parents and own lags, with state priors frozen at the current
posterior (discount-inflated per horizon, never refiltered on simulated
data).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import stdtrit

from .dlm import DiscountPair, NormalGammaState
from .errors import ConfigError, NumericalError
from .graph import JointMoments, joint_precision

_PROB_TOL = 1e-8
_U_LO = 1e-15
_U_HI = 1.0 - 1e-16


@dataclass(frozen=True)
class CandidateModel:
    """One surviving model for a series with its filtered state and weight."""

    parents: tuple[int, ...]
    lag: int
    state: NormalGammaState
    discounts: DiscountPair
    prob: float


@dataclass(frozen=True)
class PathTensor:
    """Simulated forecast paths, shape (nmc, k, m), plus the seed used."""

    samples: np.ndarray
    seed: int


@dataclass(frozen=True)
class ReturnsMoments:
    """Sample mean vector and covariance of simulated horizon returns."""

    f: np.ndarray
    Q: np.ndarray


def _own_x(history, j, lag):
    T = history.shape[0]
    if lag > T:
        raise NumericalError(f"history has {T} rows, lag {lag} needs more")
    return np.array([1.0] + [history[T - l, j] for l in range(1, lag + 1)])


def _check_probs(candidates):
    for j, cands in enumerate(candidates):
        if not cands:
            raise ConfigError(f"series {j} has no candidate models")
        tot = sum(c.prob for c in cands)
        if abs(tot - 1.0) > _PROB_TOL or any(c.prob < 0 for c in cands):
            raise ConfigError(f"series {j}: model probabilities sum to {tot}, not 1")


def bma_one_step_moments(candidates, history) -> JointMoments:
    """Joint one-step forecast moments averaged over each series' models.

    candidates: per-series lists of CandidateModel whose probabilities sum
    to one. history: observed matrix whose last rows supply the own lags.
    """
    history = np.asarray(history, dtype=float)
    m = len(candidates)
    _check_probs(candidates)
    f = np.zeros(m)
    Q = np.zeros((m, m))
    for j in reversed(range(m)):
        hi = np.arange(j + 1, m)
        Q_hi = Q[np.ix_(hi, hi)]
        f_mix = 0.0
        q_mix = 0.0
        cov_mix = np.zeros(hi.size)
        per_model = []
        for cand in candidates[j]:
            a = cand.state.m
            R = cand.state.C / cand.discounts.delta
            r = cand.discounts.beta * cand.state.n
            s = cand.state.s
            if r <= 2.0:
                raise NumericalError(f"series {j}: dof {r} <= 2, variance undefined")
            x = _own_x(history, j, cand.lag)
            px = x.size
            pa = list(cand.parents)
            a_phi, a_gam = a[:px], a[px:]
            R_phi, R_pg, R_gam = R[:px, :px], R[:px, px:], R[px:, px:]
            f_pa = f[pa]
            Q_pa = Q[np.ix_(pa, pa)]
            f_mu = x @ a_phi + f_pa @ a_gam
            u = (
                f_pa @ R_gam @ f_pa
                + np.trace(R_gam @ Q_pa)
                + 2.0 * (x @ R_pg @ f_pa)
                + x @ R_phi @ x
            )
            q_mu = (s + u) * r / (r - 2.0) + a_gam @ Q_pa @ a_gam
            a_tilde = np.zeros(hi.size)
            for idx, p in enumerate(pa):
                a_tilde[p - (j + 1)] = a_gam[idx]
            cov_mu = Q_hi @ a_tilde
            f_mix += cand.prob * f_mu
            q_mix += cand.prob * q_mu
            cov_mix += cand.prob * cov_mu
            per_model.append((cand.prob, f_mu))
        # spread of per-model means adds to the mixture variance
        q_mix += sum(p * (fm - f_mix) ** 2 for p, fm in per_model)
        f[j] = f_mix
        Q[j, j] = q_mix
        Q[j, hi] = cov_mix
        Q[hi, j] = cov_mix
    return JointMoments(f=f, Q=Q, K=joint_precision(Q))


def simulate_paths(candidates, history, k, nmc, seed, workers=1) -> PathTensor:
    """Simulate nmc forecast paths over horizons 1..k.

    Per path and series, one model is drawn from the posterior table; each
    horizon then samples the conditional Student-t given the simulated
    parents (same horizon) and own lags (earlier horizons or history).
    All randomness is pre-drawn from per-(series, horizon) streams in path
    order, so results are bit-identical for any worker count.
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ConfigError(f"horizon k must be a positive integer, got {k!r}")
    if nmc < 2:
        raise ConfigError(f"need at least 2 paths, got {nmc}")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    history = np.asarray(history, dtype=float)
    m = len(candidates)
    _check_probs(candidates)
    for j, cands in enumerate(candidates):
        for cand in cands:
            if cand.discounts.beta * cand.state.n <= 0:
                raise NumericalError(f"series {j}: nonpositive dof")

    # stream (j, 0): model draws; stream (j, r): horizon-r innovations
    u_model = []
    u_innov = []
    for j in range(m):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j, 0)))
        u_model.append(rng.random(nmc))
        per_h = []
        for r in range(1, k + 1):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j, r)))
            per_h.append(np.clip(rng.random(nmc), _U_LO, _U_HI))
        u_innov.append(per_h)

    model_idx = []
    for j, cands in enumerate(candidates):
        cum = np.cumsum([c.prob for c in cands])
        cum[-1] = 1.0
        model_idx.append(np.minimum(np.searchsorted(cum, u_model[j], side="right"), len(cands) - 1))

    sims = np.empty((nmc, k, m))
    T = history.shape[0]

    def run_block(lo, hi_):
        for j in reversed(range(m)):
            idx = model_idx[j][lo:hi_]
            for mu, cand in enumerate(candidates[j]):
                sel = np.nonzero(idx == mu)[0] + lo
                if sel.size == 0:
                    continue
                a = cand.state.m
                C = cand.state.C
                s = cand.state.s
                delta = cand.discounts.delta
                dof = cand.discounts.beta * cand.state.n
                lag, pa = cand.lag, cand.parents
                dim = 1 + lag + len(pa)
                F = np.empty((sel.size, dim))
                F[:, 0] = 1.0
                for r in range(1, k + 1):
                    for i in range(1, lag + 1):
                        h = r - i
                        if h >= 1:
                            F[:, i] = sims[sel, h - 1, j]
                        else:
                            F[:, i] = history[T - 1 + h, j]
                    for c, p in enumerate(pa):
                        F[:, 1 + lag + c] = sims[sel, r - 1, p]
                    # R(r) = C / delta^r enters only through the quadratic form
                    quad = np.einsum("np,pq,nq->n", F, C, F) / delta**r
                    q = s + quad
                    f_loc = F @ a
                    u = u_innov[j][r - 1][sel]
                    sims[sel, r - 1, j] = f_loc + np.sqrt(q) * stdtrit(dof, u)

    if workers == 1:
        run_block(0, nmc)
    else:
        bounds = np.linspace(0, nmc, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(run_block, int(bounds[i]), int(bounds[i + 1]))
                for i in range(workers)
                if bounds[i + 1] > bounds[i]
            ]
            for fut in futures:
                fut.result()
    return PathTensor(samples=sims, seed=int(seed))


def returns_moments(tensor: PathTensor, y_last, horizon: int) -> ReturnsMoments:
    """Sample moments of horizon returns exp(y_{t+h} - y_t) - 1."""
    nmc, k, m = tensor.samples.shape
    if not (1 <= horizon <= k):
        raise ConfigError(f"horizon {horizon} outside simulated range 1..{k}")
    y_last = np.asarray(y_last, dtype=float)
    R = np.exp(tensor.samples[:, horizon - 1, :] - y_last) - 1.0
    f = R.mean(axis=0)
    Q = np.atleast_2d(np.cov(R, rowvar=False, ddof=1))
    return ReturnsMoments(f=f, Q=Q)


def path_quantiles(tensor: PathTensor, probs) -> np.ndarray:
    """Quantiles across paths; output shape (len(probs), k, m)."""
    return np.quantile(tensor.samples, np.asarray(probs, dtype=float), axis=0)


def mean_path(candidates, history, k: int) -> np.ndarray:
    """Deterministic point forecasts over horizons 1..k, shape (k, m).

    Means propagate through the triangular system: per model, the regression
    mean uses that model's own-lag means from earlier horizons (history when
    the lag reaches back past the forecast origin) and the parents' mixture
    means at the same horizon; the series mean mixes models by probability.
    Exact at horizon 1; beyond that it plugs means into own lags, ignoring
    the small coefficient/lag covariance, so it is a point forecast rather
    than a posterior-mean claim.
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ConfigError(f"horizon k must be a positive integer, got {k!r}")
    history = np.asarray(history, dtype=float)
    m = len(candidates)
    _check_probs(candidates)
    T = history.shape[0]
    mix = np.zeros((k, m))
    # per-series, per-model mean trajectories
    per_model = [np.zeros((k, len(candidates[j]))) for j in range(m)]
    for r in range(1, k + 1):
        for j in reversed(range(m)):
            for i, cand in enumerate(candidates[j]):
                x = [1.0]
                for l in range(1, cand.lag + 1):
                    h = r - l
                    if h >= 1:
                        x.append(per_model[j][h - 1, i])
                    else:
                        x.append(history[T - 1 + h, j])
                x = np.asarray(x)
                a = cand.state.m
                f_pa = mix[r - 1, list(cand.parents)]
                per_model[j][r - 1, i] = x @ a[: x.size] + f_pa @ a[x.size :]
            probs = np.array([c.prob for c in candidates[j]])
            mix[r - 1, j] = per_model[j][r - 1] @ probs
    return mix
