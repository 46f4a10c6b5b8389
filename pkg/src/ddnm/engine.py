"""Sequential engine: runs every candidate model's filter through time and
maintains power-discounted model probabilities per alpha replica.

Filter states depend on data only, never on alpha, so each model is
filtered once and the alpha replicas differ only in their probability
tables and cumulative log marginal likelihoods. Within a series, models
are grouped by state dimension and updated with stacked-array kernels;
each model's regressor row is gathered from a shared per-series pool
vector (intercept, own lags, contemporaneous higher series).
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import dlm, models
from .errors import ConfigError, NumericalError

DEFAULT_N0 = 5.0
DEFAULT_C0 = 1.0
SCALE_FLOOR = 1e-4
INIT_SCALE_POINTS = 20


def initial_scales(Y_prefix: np.ndarray) -> np.ndarray:
    """Per-series initial variance estimates from a short data prefix.

    Uses the sample variance of first differences over the first
    INIT_SCALE_POINTS rows, floored at SCALE_FLOOR.
    """
    Y = np.asarray(Y_prefix, dtype=float)
    head = Y[: min(INIT_SCALE_POINTS, Y.shape[0])]
    if head.shape[0] < 3:
        return np.full(Y.shape[1], SCALE_FLOOR)
    dv = np.diff(head, axis=0)
    s0 = dv.var(axis=0, ddof=1)
    return np.maximum(s0, SCALE_FLOOR)


@dataclass
class _Group:
    """Same-dimension slice of one series' model bank."""

    dim: int
    idx: np.ndarray      # flat model indices within the series
    gather: np.ndarray   # (G, dim) indices into the series pool vector
    m: np.ndarray        # (G, dim)
    C: np.ndarray        # (G, dim, dim)
    n: np.ndarray        # (G,)
    s: np.ndarray        # (G,)
    delta: np.ndarray    # (G,)
    beta: np.ndarray     # (G,)


class SeriesBank:
    """All candidate models for one series with stacked filter states."""

    def __init__(self, j, m_total, d, specs, s0, n0=DEFAULT_N0, c0=DEFAULT_C0):
        self.j = j
        self.m_total = m_total
        self.d = d
        self.specs = list(specs)
        self.groups: list[_Group] = []
        by_dim: dict[int, list[int]] = {}
        for i, spec in enumerate(self.specs):
            by_dim.setdefault(spec.dim, []).append(i)
        for dim in sorted(by_dim):
            idx = np.array(by_dim[dim], dtype=int)
            gather = np.empty((idx.size, dim), dtype=int)
            for row, i in enumerate(idx):
                gather[row] = self._gather_row(self.specs[i])
            G = idx.size
            self.groups.append(
                _Group(
                    dim=dim,
                    idx=idx,
                    gather=gather,
                    m=np.zeros((G, dim)),
                    C=np.tile(c0 * np.eye(dim), (G, 1, 1)),
                    n=np.full(G, float(n0)),
                    s=np.full(G, float(s0)),
                    delta=np.array([self.specs[i].delta for i in idx]),
                    beta=np.array([self.specs[i].beta for i in idx]),
                )
            )

    def _gather_row(self, spec):
        # pool layout: [1, own lag 1..d, series j+1 .. m-1]
        row = [0]
        row += list(range(1, spec.lag + 1))
        row += [1 + self.d + (p - self.j - 1) for p in spec.parents]
        return row

    @property
    def n_models(self) -> int:
        return len(self.specs)

    def pool_vector(self, y_row, lag_rows):
        """Regressor pool at the current time: intercept, own lags
        (lag_rows holds the previous d observations, most recent last),
        then the contemporaneous higher-indexed values."""
        z = np.empty(1 + self.d + (self.m_total - 1 - self.j))
        z[0] = 1.0
        for i in range(1, self.d + 1):
            z[i] = lag_rows[-i, self.j]
        z[1 + self.d :] = y_row[self.j + 1 :]
        return z

    def step(self, y_row, lag_rows):
        """Advance every model one observation; returns per-model logliks."""
        z = self.pool_vector(y_row, lag_rows)
        y = float(y_row[self.j])
        ll = np.empty(self.n_models)
        for g in self.groups:
            F = z[g.gather]
            g.m, g.C, g.n, g.s, ll_g = dlm.batch_one_step(
                g.m, g.C, g.n, g.s, g.delta, g.beta, F, y
            )
            ll[g.idx] = ll_g
        return ll

    def state_of(self, flat_idx) -> dlm.NormalGammaState:
        for g in self.groups:
            pos = np.nonzero(g.idx == flat_idx)[0]
            if pos.size:
                row = int(pos[0])
                return dlm.NormalGammaState(
                    m=g.m[row].copy(), C=g.C[row].copy(), n=float(g.n[row]), s=float(g.s[row])
                )
        raise KeyError(flat_idx)

    def compact(self, keep_flat: np.ndarray):
        """Drop all models not in keep_flat (sorted flat indices)."""
        remap = {int(old): new for new, old in enumerate(keep_flat)}
        self.specs = [self.specs[int(i)] for i in keep_flat]
        new_groups = []
        for g in self.groups:
            rows = [r for r, i in enumerate(g.idx) if int(i) in remap]
            if not rows:
                continue
            rows = np.array(rows, dtype=int)
            new_groups.append(
                _Group(
                    dim=g.dim,
                    idx=np.array([remap[int(i)] for i in g.idx[rows]], dtype=int),
                    gather=g.gather[rows],
                    m=g.m[rows],
                    C=g.C[rows],
                    n=g.n[rows],
                    s=g.s[rows],
                    delta=g.delta[rows],
                    beta=g.beta[rows],
                )
            )
        self.groups = new_groups


class Engine:
    """Sequential filter over all series, models, and alpha replicas."""

    def __init__(self, space, m, d, alphas, rho, s0, n0=DEFAULT_N0, c0=DEFAULT_C0):
        """space: per-series lists of ModelSpec (enumeration order is the
        flat table order); s0: per-series initial scale estimates."""
        if len(space) != m:
            raise ConfigError("need one model list per series")
        self.m = m
        self.d = d
        self.alphas = tuple(float(a) for a in alphas)
        if len(set(self.alphas)) != len(self.alphas):
            raise ConfigError("alpha grid has repeated values")
        self.rho = rho
        self.banks = [
            SeriesBank(j, m, d, space[j], s0=float(s0[j]), n0=n0, c0=c0) for j in range(m)
        ]
        # normalized log prior per series (restricted spaces renormalize)
        self.log_prior = []
        grid_k = len({(sp.delta, sp.beta) for specs in space for sp in specs}) or 1
        for j in range(m):
            raw = np.array(
                [models.model_prior(sp, rho, m, d, grid_k) for sp in space[j]]
            )
            lp = np.log(raw)
            self.log_prior.append(lp - logsumexp(lp))
        # per alpha: per-series log probability tables + cumulative loglik
        self.tables = {a: [lp.copy() for lp in self.log_prior] for a in self.alphas}
        self.cum_loglik = {a: 0.0 for a in self.alphas}
        self.t = 0
        self.n_updates = 0
        self.buffer = np.zeros((0, m))

    # -- sequential updating ------------------------------------------------

    def observe(self, y_row) -> bool:
        """Feed one observation row; returns True if filters updated (False
        while the own-lag buffer is still warming up)."""
        y_row = np.asarray(y_row, dtype=float)
        if y_row.shape != (self.m,):
            raise NumericalError(f"row has shape {y_row.shape}, expected ({self.m},)")
        if not np.all(np.isfinite(y_row)):
            raise NumericalError(f"non-finite observation at step {self.t}")
        updated = False
        if self.buffer.shape[0] >= self.d:
            for j in range(self.m):
                ll = self.banks[j].step(y_row, self.buffer)
                for a in self.alphas:
                    lp = a * self.tables[a][j]
                    lz1 = logsumexp(lp)
                    lp = lp + ll
                    lz2 = logsumexp(lp)
                    self.tables[a][j] = lp - lz2
                    self.cum_loglik[a] += float(lz2 - lz1)
            self.n_updates += 1
            updated = True
        if self.d > 0:
            self.buffer = np.vstack([self.buffer, y_row])[-self.d :]
        self.t += 1
        return updated

    def fit(self, Y) -> None:
        for row in np.asarray(Y, dtype=float):
            self.observe(row)

    # -- posterior summaries -------------------------------------------------

    def table(self, alpha, j) -> models.ModelProbabilityTable:
        return models.ModelProbabilityTable(
            specs=tuple(self.banks[j].specs), log_probs=self.tables[alpha][j].copy()
        )

    def alpha_posterior(self) -> dict[float, float]:
        """p(alpha | data) from replica marginal likelihoods, uniform prior."""
        lls = np.array([self.cum_loglik[a] for a in self.alphas])
        w = np.exp(lls - logsumexp(lls))
        return {a: float(p) for a, p in zip(self.alphas, w)}

    def summary(self, alpha, j) -> dict:
        """Marginal posterior summaries for one series under one replica."""
        table = self.table(alpha, j)
        probs = table.probs
        lag = models.marginal_posterior(table, "lag")
        delta = models.marginal_posterior(table, "delta")
        beta = models.marginal_posterior(table, "beta")
        incl = {
            p: models.parent_inclusion(table, p) for p in range(j + 1, self.m)
        }
        return {
            "e_lag": sum(v * p for v, p in lag.items()),
            "e_delta": sum(v * p for v, p in delta.items()),
            "e_beta": sum(v * p for v, p in beta.items()),
            "inclusion": incl,
            "top_prob": float(probs.max()),
            "entropy": models.entropy(table),
            "n_models": len(table.specs),
        }

    # -- pruning ---------------------------------------------------------------

    def prune(self, th: float) -> None:
        """Per-replica pruning followed by bank compaction to the union of
        survivors. A model pruned in one replica but alive in another keeps
        probability zero in the replica that dropped it."""
        for j in range(self.m):
            union: set[int] = set()
            survivors = {}
            for a in self.alphas:
                probs = np.exp(self.tables[a][j])
                keep = probs >= th
                keep[int(np.argmax(probs))] = True
                survivors[a] = keep
                union.update(np.nonzero(keep)[0].tolist())
            keep_flat = np.array(sorted(union), dtype=int)
            self.banks[j].compact(keep_flat)
            self.log_prior[j] = self.log_prior[j][keep_flat]
            for a in self.alphas:
                lp = np.full(keep_flat.size, -np.inf)
                mask = survivors[a][keep_flat]
                lp[mask] = self.tables[a][j][keep_flat[mask]]
                lp[mask] -= logsumexp(lp[mask])
                self.tables[a][j] = lp

    # -- forecasting interface ---------------------------------------------

    def forecast_inputs(self, alpha):
        """Per-series candidate lists (spec, state, prob) for one replica,
        restricted to models with nonzero probability."""
        from .forecast import CandidateModel  # local import, no cycle at load

        out = []
        for j in range(self.m):
            probs = np.exp(self.tables[alpha][j])
            cands = []
            for i in np.nonzero(probs > 0)[0]:
                spec = self.banks[j].specs[int(i)]
                cands.append(
                    CandidateModel(
                        parents=spec.parents,
                        lag=spec.lag,
                        state=self.banks[j].state_of(int(i)),
                        discounts=dlm.DiscountPair(spec.delta, spec.beta),
                        prob=float(probs[i]),
                    )
                )
            out.append(cands)
        return out

    def history_tail(self) -> np.ndarray:
        """Copy of the lag buffer (last max-lag rows, most recent last)."""
        return self.buffer.copy()

    # -- persistence ---------------------------------------------------------

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            pickle.dump(self, fh, protocol=4)

    @staticmethod
    def load(path) -> "Engine":
        with open(path, "rb") as fh:
            eng = pickle.load(fh)
        if not isinstance(eng, Engine):
            raise ConfigError(f"{path} is not an engine snapshot")
        return eng
