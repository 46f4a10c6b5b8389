"""Per-series model spaces and sequential model probabilities.

A model for series j picks a contemporaneous parent set from the
higher-indexed series, an own-lag depth, and a discount pair. Posterior
model probabilities evolve by one-step predictive likelihood, optionally
power-discounted (alpha < 1 raises historical probabilities to alpha before
the Bayes step, which slows degeneracy and lets dormant models revive).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .dlm import DiscountPair
from .errors import CapacityError, ConfigError

DEFAULT_MAX_MODELS = 5_000_000


@dataclass(frozen=True)
class ModelSpec:
    """One candidate model: series, parent set, own-lag depth, discounts."""

    series: int
    parents: tuple[int, ...]
    lag: int
    delta: float
    beta: float

    @property
    def dim(self) -> int:
        return 1 + self.lag + len(self.parents)


@dataclass(frozen=True)
class ModelProbabilityTable:
    """Discrete distribution over one series' candidate models (log space)."""

    specs: tuple[ModelSpec, ...]
    log_probs: np.ndarray

    def __post_init__(self):
        lp = np.asarray(self.log_probs, dtype=float)
        object.__setattr__(self, "log_probs", lp)
        if len(self.specs) != lp.size or lp.size == 0:
            raise ConfigError("table needs one log probability per model spec")

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)


def count_models(m: int, d: int, k: int) -> int:
    """Total candidate models over all series with unrestricted parent sets."""
    return (2**m - 1) * (d + 1) * k


def _candidate_parents(j, m, candidates):
    if candidates is not None and j in candidates:
        cands = tuple(sorted(set(candidates[j])))
        if any(not (j < p < m) for p in cands):
            raise ConfigError(f"series {j}: candidate parents {cands} out of range")
        return cands
    return tuple(range(j + 1, m))


def _series_set_count(n_cands, cap):
    if cap is None or cap >= n_cands:
        return 2**n_cands
    return sum(math.comb(n_cands, c) for c in range(cap + 1))


def enumerate_models(
    m: int,
    d: int,
    discount_pairs: tuple[DiscountPair, ...],
    max_parents: int | None = None,
    candidates: dict[int, tuple[int, ...]] | None = None,
    max_models: int = DEFAULT_MAX_MODELS,
) -> list[list[ModelSpec]]:
    """Enumerate the per-series model spaces.

    Series j gets every subset of its candidate parents (all higher-indexed
    series unless restricted by max_parents or an explicit candidates map),
    crossed with lags 0..d and the discount grid. The total is counted
    before materializing; exceeding max_models raises CapacityError with
    advice to restrict parents or shrink grids.
    """
    if m < 1 or d < 0 or not discount_pairs:
        raise ConfigError("need m >= 1, d >= 0 and a non-empty discount grid")
    k = len(discount_pairs)
    total = 0
    cand_lists = []
    for j in range(m):
        cands = _candidate_parents(j, m, candidates)
        cand_lists.append(cands)
        total += _series_set_count(len(cands), max_parents) * (d + 1) * k
    if total > max_models:
        raise CapacityError(
            f"model space has {total} members (> {max_models}); restrict parents "
            "(max_parents / explicit candidates) or shrink the lag or discount grids"
        )
    space: list[list[ModelSpec]] = []
    for j in range(m):
        cands = cand_lists[j]
        cap = len(cands) if max_parents is None else min(max_parents, len(cands))
        series_specs = []
        for c in range(cap + 1):
            for pa in itertools.combinations(cands, c):
                for lag in range(d + 1):
                    for pair in discount_pairs:
                        series_specs.append(
                            ModelSpec(j, pa, lag, pair.delta, pair.beta)
                        )
        space.append(series_specs)
    return space


def model_prior(spec: ModelSpec, rho: float, m: int, d: int, k: int) -> float:
    """Prior mass: independent Bernoulli(rho) parent inclusion over the
    m-1-j unrestricted candidates, uniform over lags and the discount grid.

    Under a restricted enumeration the Bernoulli normalization no longer
    sums to one over the enumerated sets, so callers renormalize over the
    space they actually use.
    """
    if not (0.0 < rho < 1.0):
        raise ConfigError(f"inclusion probability rho must be in (0, 1), got {rho}")
    n_cands = m - 1 - spec.series
    c = len(spec.parents)
    return rho**c * (1.0 - rho) ** (n_cands - c) / ((d + 1) * k)


def update_model_probs(
    table: ModelProbabilityTable, logliks: np.ndarray, alpha: float
) -> ModelProbabilityTable:
    """One Bayes step with power discounting, fully in log space.

    New log probability = alpha * old + log likelihood, renormalized by
    logsumexp; alpha = 1 is standard Bayesian updating.
    """
    if not (0.0 < alpha <= 1.0):
        raise ConfigError(f"power discount alpha must be in (0, 1], got {alpha}")
    logliks = np.asarray(logliks, dtype=float)
    if logliks.shape != table.log_probs.shape:
        raise ConfigError("need one log likelihood per model")
    lp = alpha * table.log_probs + logliks
    lp = lp - logsumexp(lp)
    return ModelProbabilityTable(specs=table.specs, log_probs=lp)


def prune(table: ModelProbabilityTable, th: float) -> ModelProbabilityTable:
    """Drop models with probability strictly below th, then renormalize.

    Probability exactly th survives, and the argmax always survives, so the
    result is never empty.
    """
    if th < 0:
        raise ConfigError(f"prune threshold must be nonnegative, got {th}")
    probs = table.probs
    keep = probs >= th
    keep[int(np.argmax(probs))] = True
    lp = table.log_probs[keep]
    lp = lp - logsumexp(lp)
    return ModelProbabilityTable(
        specs=tuple(s for s, k in zip(table.specs, keep) if k), log_probs=lp
    )


_FEATURES = {
    "delta": lambda s: s.delta,
    "beta": lambda s: s.beta,
    "lag": lambda s: s.lag,
}


def marginal_posterior(table: ModelProbabilityTable, feature: str) -> dict:
    """Marginal distribution of one model feature (delta, beta, or lag)."""
    if feature not in _FEATURES:
        raise ConfigError(f"unknown feature {feature!r}; one of {sorted(_FEATURES)}")
    getter = _FEATURES[feature]
    out: dict = {}
    for spec, p in zip(table.specs, table.probs):
        key = getter(spec)
        out[key] = out.get(key, 0.0) + float(p)
    return out


def parent_inclusion(table: ModelProbabilityTable, parent: int) -> float:
    """Posterior probability that the given series index is a parent."""
    return float(sum(p for spec, p in zip(table.specs, table.probs) if parent in spec.parents))


def entropy(table: ModelProbabilityTable) -> float:
    """Shannon entropy of the table in nats; 0 log 0 treated as 0."""
    p = table.probs
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))
