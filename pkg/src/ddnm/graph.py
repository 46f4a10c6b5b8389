"""Cross-series structure and the recursions that recouple the per-series
models into joint forecast moments.

Series are ordered so that each one may depend contemporaneously only on
higher-indexed series (the last series has no parents). That triangular
layout makes the joint one-step predictive tractable: means and variances
follow from a single backward sweep, and the joint precision matrix is
assembled without any matrix inversion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dlm import DlmPrior
from .errors import ConfigError, NumericalError


@dataclass(frozen=True)
class ParentalStructure:
    """Per-series contemporaneous parent sets, 0-based, strictly increasing.

    parents[j] must be a sorted tuple drawn from {j+1, ..., m-1}; the last
    series has an empty set.
    """

    parents: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        m = len(self.parents)
        if m == 0:
            raise ConfigError("structure needs at least one series")
        for j, pa in enumerate(self.parents):
            if any(not (j < p < m) for p in pa):
                raise ConfigError(
                    f"series {j}: parents {pa} must be higher-indexed (in {j + 1}..{m - 1})"
                )
            if tuple(sorted(set(pa))) != tuple(pa):
                raise ConfigError(f"series {j}: parents {pa} must be sorted and unique")

    @property
    def m(self) -> int:
        return len(self.parents)


@dataclass(frozen=True)
class JointMoments:
    """Joint one-step predictive mean f, covariance Q, and precision K."""

    f: np.ndarray
    Q: np.ndarray
    K: np.ndarray | None = field(default=None)


def assemble_regressor(j, t, lag, parents, history, parent_values=None):
    """Build (x, y_pa) for series j at time t from the history matrix.

    x = (1, y_{j,t-1}, ..., y_{j,t-lag}); y_pa holds the parents' values in
    increasing index order, taken from history[t] unless parent_values is
    given (at forecast time the parents are not yet observed).
    """
    history = np.asarray(history, dtype=float)
    if t - lag < 0:
        raise NumericalError(f"need {lag} lagged values before t={t}, history starts at 0")
    x = np.empty(1 + lag)
    x[0] = 1.0
    for i in range(1, lag + 1):
        x[i] = history[t - i, j]
    if parent_values is None:
        y_pa = history[t, list(parents)] if parents else np.empty(0)
    else:
        y_pa = np.atleast_1d(np.asarray(parent_values, dtype=float))
        if y_pa.size != len(parents):
            raise NumericalError(
                f"got {y_pa.size} parent values for {len(parents)} parents"
            )
    return x, y_pa


def joint_one_step_moments(
    structure: ParentalStructure, priors: list[DlmPrior], xs: list[np.ndarray]
) -> JointMoments:
    """Joint predictive mean and covariance across all series.

    Backward sweep from the last series: each series' mean plugs in the
    parents' forecast means; its variance adds the parents' forecast
    uncertainty through the state, and its covariance with the already
    processed block is the block covariance times the (zero-padded) parent
    coefficient means. Requires every dof r > 2 so variances exist.
    """
    m = structure.m
    if len(priors) != m or len(xs) != m:
        raise NumericalError("need one prior and one x vector per series")
    f = np.zeros(m)
    Q = np.zeros((m, m))
    for j in reversed(range(m)):
        prior, x = priors[j], np.atleast_1d(np.asarray(xs[j], dtype=float))
        pa = list(structure.parents[j])
        px = x.size
        if px + len(pa) != prior.dim:
            raise NumericalError(
                f"series {j}: x ({px}) plus parents ({len(pa)}) must match state dim {prior.dim}"
            )
        if prior.r <= 2.0:
            raise NumericalError(
                f"series {j}: dof r={prior.r} <= 2, joint variance does not exist"
            )
        a_phi, a_gam = prior.a[:px], prior.a[px:]
        R_phi = prior.R[:px, :px]
        R_pg = prior.R[:px, px:]
        R_gam = prior.R[px:, px:]
        f_pa = f[pa]
        Q_pa = Q[np.ix_(pa, pa)]

        f[j] = x @ a_phi + f_pa @ a_gam
        u = (
            f_pa @ R_gam @ f_pa
            + np.trace(R_gam @ Q_pa)
            + 2.0 * (x @ R_pg @ f_pa)
            + x @ R_phi @ x
        )
        Q[j, j] = (prior.s + u) * prior.r / (prior.r - 2.0) + a_gam @ Q_pa @ a_gam

        if j < m - 1:
            a_tilde = np.zeros(m - 1 - j)
            for idx, p in enumerate(pa):
                a_tilde[p - (j + 1)] = a_gam[idx]
            cov = Q[j + 1 :, j + 1 :] @ a_tilde
            Q[j, j + 1 :] = cov
            Q[j + 1 :, j] = cov
    return JointMoments(f=f, Q=Q, K=joint_precision(Q))


def joint_precision(Q: np.ndarray) -> np.ndarray:
    """Precision K = Q^{-1} via the backward block recursion.

    Processes series last-to-first: each step extends the current inverse
    with one Schur complement, so no dense inversion is ever performed.
    Raises if any pivot is non-positive (Q not positive definite).
    """
    Q = np.asarray(Q, dtype=float)
    m = Q.shape[0]
    if Q.shape != (m, m):
        raise NumericalError(f"Q must be square, got {Q.shape}")
    if Q[m - 1, m - 1] <= 0:
        raise NumericalError("Q is not positive definite")
    K = np.array([[1.0 / Q[m - 1, m - 1]]])
    for j in range(m - 2, -1, -1):
        qv = Q[j, j + 1 :]
        Kqv = K @ qv
        k_inv = Q[j, j] - qv @ Kqv
        if k_inv <= 0 or not np.isfinite(k_inv):
            raise NumericalError(f"Q is not positive definite (pivot {k_inv} at {j})")
        k = 1.0 / k_inv
        h = -k * Kqv
        H = K + np.outer(h, h) / k
        K_new = np.empty((m - j, m - j))
        K_new[0, 0] = k
        K_new[0, 1:] = h
        K_new[1:, 0] = h
        K_new[1:, 1:] = H
        K = K_new
    return K


def implied_omega(gamma: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Joint precision Omega = (I - Gamma)' Lambda (I - Gamma).

    gamma holds the contemporaneous parent coefficients (strictly upper
    triangular); lam the per-series observational precisions. Useful as a
    point-estimate diagnostic of the cross-sectional dependence the fitted
    system implies.
    """
    gamma = np.asarray(gamma, dtype=float)
    lam = np.asarray(lam, dtype=float)
    m = gamma.shape[0]
    if gamma.shape != (m, m) or lam.shape != (m,):
        raise NumericalError("gamma must be m x m and lam length m")
    if np.any(gamma[np.tril_indices(m)] != 0.0):
        raise NumericalError("gamma must be strictly upper triangular")
    if np.any(lam <= 0):
        raise NumericalError("precisions must be positive")
    ImG = np.eye(m) - gamma
    omega = ImG.T @ (lam[:, None] * ImG)
    return 0.5 * (omega + omega.T)
