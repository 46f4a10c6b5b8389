"""Univariate dynamic linear model with normal-gamma posteriors and
discount-based evolution.

Each series/model pair carries a conjugate posterior

    theta_t | lam_t, D_t ~ N(m, C / (s lam)),   lam_t | D_t ~ Gamma(n/2, n s/2),

so s is a point estimate of the observation variance 1/lam. Evolution
between observations inflates uncertainty through a state discount delta
(covariance) and a volatility discount beta (degrees of freedom); the
one-step predictive is Student-t.

Scalar operations act on the dataclasses below. The batch_* kernels apply
the same equations across a stack of models sharing one state dimension,
which is what the sequential engine uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError, NumericalError

# Guard threshold for a vanishing forecast scale; relative to 1 + s.
_DEGENERATE_Q = 1e-12


@dataclass(frozen=True)
class DiscountPair:
    """State discount delta and volatility discount beta, both in (0, 1]."""

    delta: float
    beta: float

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0) or not (0.0 < self.beta <= 1.0):
            raise ConfigError(
                f"discount factors must lie in (0, 1]: delta={self.delta}, beta={self.beta}"
            )


def _check_square_symmetric(M: np.ndarray, dim: int, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (dim, dim):
        raise NumericalError(f"{name} must be {dim}x{dim}, got {M.shape}")
    if not np.allclose(M, M.T, rtol=1e-8, atol=1e-10):
        raise NumericalError(f"{name} must be symmetric")
    return M


@dataclass(frozen=True)
class NormalGammaState:
    """Posterior NG(m, C, n, n s) for one model's state and precision."""

    m: np.ndarray
    C: np.ndarray
    n: float
    s: float

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.m, dtype=float))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "C", _check_square_symmetric(self.C, m.size, "C"))
        if not (self.n > 0 and np.isfinite(self.n)):
            raise NumericalError(f"degrees of freedom n must be positive, got {self.n}")
        if not (self.s > 0 and np.isfinite(self.s)):
            raise NumericalError(f"scale s must be positive, got {self.s}")

    @property
    def dim(self) -> int:
        return self.m.size


@dataclass(frozen=True)
class DlmPrior:
    """One-step (or k-step) prior NG(a, R, r, r s) ahead of an observation."""

    a: np.ndarray
    R: np.ndarray
    r: float
    s: float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "R", _check_square_symmetric(self.R, a.size, "R"))
        if not (self.r > 0 and np.isfinite(self.r)):
            raise NumericalError(f"degrees of freedom r must be positive, got {self.r}")
        if not (self.s > 0 and np.isfinite(self.s)):
            raise NumericalError(f"scale s must be positive, got {self.s}")

    @property
    def dim(self) -> int:
        return self.a.size


@dataclass(frozen=True)
class TForecast:
    """Student-t one-step predictive: location f, squared scale q, dof."""

    f: float
    q: float
    dof: float

    def __post_init__(self):
        if not (self.q > 0 and np.isfinite(self.q)):
            raise NumericalError(f"forecast scale q must be positive, got {self.q}")
        if not (self.dof > 0 and np.isfinite(self.dof)):
            raise NumericalError(f"forecast dof must be positive, got {self.dof}")


def evolve_prior(post: NormalGammaState, disc: DiscountPair) -> DlmPrior:
    """Discount evolution: a = m, R = C/delta, r = beta n; s carries over."""
    return DlmPrior(a=post.m, R=post.C / disc.delta, r=disc.beta * post.n, s=post.s)


def k_step_prior(post: NormalGammaState, k: int, disc: DiscountPair) -> DlmPrior:
    """k-step prior by repeated covariance discounting.

    R(k) = R(k-1)/delta with R(1) = C/delta; the dof discount is applied
    once (r(k) = beta n), and s carries over, so k = 1 coincides with
    evolve_prior.
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ConfigError(f"horizon k must be a positive integer, got {k!r}")
    return DlmPrior(a=post.m, R=post.C / disc.delta**k, r=disc.beta * post.n, s=post.s)


def conditional_forecast(prior: DlmPrior, x: np.ndarray, y_pa: np.ndarray) -> TForecast:
    """One-step predictive given own regressors x and parent values y_pa.

    The regression vector is F = (x, y_pa) against the partitioned prior
    mean (a_phi, a_gamma). Returns Student-t moments
    f = F'a and q = s + F'RF with dof r.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y_pa = np.atleast_1d(np.asarray(y_pa, dtype=float)) if np.size(y_pa) else np.empty(0)
    if x.size + y_pa.size != prior.dim:
        raise NumericalError(
            f"regressor split ({x.size} own + {y_pa.size} parents) does not match "
            f"state dimension {prior.dim}"
        )
    F = np.concatenate([x, y_pa])
    f = float(F @ prior.a)
    q = float(prior.s + F @ prior.R @ F)
    if q < _DEGENERATE_Q * (1.0 + prior.s):
        raise NumericalError(f"degenerate forecast scale q={q}")
    return TForecast(f=f, q=q, dof=prior.r)


def update_posterior(prior: DlmPrior, F: np.ndarray, y: float) -> NormalGammaState:
    """Conjugate one-step update after observing y with regressors F."""
    F = np.atleast_1d(np.asarray(F, dtype=float))
    if F.size != prior.dim:
        raise NumericalError(f"F has length {F.size}, state dimension is {prior.dim}")
    RF = prior.R @ F
    q = float(prior.s + F @ RF)
    if q < _DEGENERATE_Q * (1.0 + prior.s):
        raise NumericalError(f"degenerate forecast scale q={q}")
    e = float(y) - float(F @ prior.a)
    A = RF / q
    z = (prior.r + e * e / q) / (prior.r + 1.0)
    m = prior.a + A * e
    C = (prior.R - np.outer(A, A) * q) * z
    C = 0.5 * (C + C.T)
    return NormalGammaState(m=m, C=C, n=prior.r + 1.0, s=prior.s * z)


def log_predictive_density(fc: TForecast, y: float) -> float:
    """Log density of the Student-t predictive at y."""
    return float(t_logpdf(np.asarray(y, dtype=float), fc.f, fc.q, fc.dof))


def t_logpdf(y, f, q, dof):
    """Vectorized Student-t log density with location f and squared scale q."""
    y = np.asarray(y, dtype=float)
    e2 = (y - f) ** 2
    return (
        gammaln((dof + 1.0) / 2.0)
        - gammaln(dof / 2.0)
        - 0.5 * np.log(dof * np.pi * q)
        - 0.5 * (dof + 1.0) * np.log1p(e2 / (dof * q))
    )


# ---------------------------------------------------------------------------
# Batched kernels over stacks of same-dimension models.
# Shapes: m (G, p), C (G, p, p), n/s/delta/beta (G,), F (G, p).


def batch_forecast(a, R, s, F):
    """Predictive location and squared scale for a stack of priors."""
    f = np.einsum("gp,gp->g", F, a)
    RF = np.einsum("gpq,gq->gp", R, F)
    q = s + np.einsum("gp,gp->g", F, RF)
    return f, q


def batch_one_step(m, C, n, s, delta, beta, F, y):
    """Evolve, score, and update a stack of models on one observation.

    Returns (m, C, n, s, loglik) after seeing scalar y; loglik is the
    one-step Student-t log predictive density per model.
    """
    a = m
    R = C / delta[:, None, None]
    r = beta * n
    f = np.einsum("gp,gp->g", F, a)
    RF = np.einsum("gpq,gq->gp", R, F)
    q = s + np.einsum("gp,gp->g", F, RF)
    if np.any(q < _DEGENERATE_Q * (1.0 + s)):
        raise NumericalError("degenerate forecast scale in batch update")
    e = y - f
    A = RF / q[:, None]
    z = (r + e * e / q) / (r + 1.0)
    m2 = a + A * e[:, None]
    C2 = (R - A[:, :, None] * A[:, None, :] * q[:, None, None]) * z[:, None, None]
    C2 = 0.5 * (C2 + np.swapaxes(C2, 1, 2))
    loglik = t_logpdf(y, f, q, r)
    return m2, C2, r + 1.0, s * z, loglik
