"""Shared test oracles: brute-force samplers and random problem generators.

These deliberately avoid the package's analytic code paths. The joint
predictive is sampled compositionally (precision from a gamma, state from a
conditional normal, then observations top series down), so agreement with
the analytic moments is evidence, not circularity.
"""

import numpy as np

from ddnm.dlm import DlmPrior
from ddnm.graph import ParentalStructure


def random_structure(rng, m, max_parents=None):
    parents = []
    for j in range(m - 1):
        cands = np.arange(j + 1, m)
        hi = len(cands) if max_parents is None else min(max_parents, len(cands))
        c = int(rng.integers(0, hi + 1))
        pa = tuple(sorted(rng.choice(cands, size=c, replace=False).tolist()))
        parents.append(pa)
    parents.append(())
    return ParentalStructure(parents=tuple(parents))


def random_instance(rng, m, min_dof=8.0, max_parents=None):
    """Random DDNM one-step forecasting instance: structure, priors, x vectors.

    Degrees of freedom are kept above min_dof so that fourth moments exist
    and Monte Carlo error bands for covariances are trustworthy.
    """
    structure = random_structure(rng, m, max_parents=max_parents)
    priors, xs = [], []
    for j in range(m):
        px = int(rng.integers(1, 4))
        x = rng.normal(size=px) * 0.7
        x[0] = 1.0
        p = px + len(structure.parents[j])
        A = rng.normal(size=(p, p))
        R = (A @ A.T) / p + 0.4 * np.eye(p)
        a = rng.normal(size=p) * 0.5
        priors.append(DlmPrior(a=a, R=R, r=float(rng.uniform(min_dof, 30.0)), s=float(rng.uniform(0.3, 2.0))))
        xs.append(x)
    return structure, priors, xs


def sample_joint_predictive(structure, priors, xs, nsamp, rng):
    """Compositional draw from the joint one-step predictive.

    Per series (last first): lam ~ Gamma(r/2, rate r s/2), theta | lam ~
    N(a, R/(s lam)), then y_j = F'theta + eps with eps ~ N(0, 1/lam) and
    F = (x, parent draws). Returns an (nsamp, m) sample matrix.
    """
    m = len(priors)
    Y = np.empty((nsamp, m))
    for j in reversed(range(m)):
        prior, x, pa = priors[j], xs[j], structure.parents[j]
        lam = rng.gamma(shape=prior.r / 2.0, scale=2.0 / (prior.r * prior.s), size=nsamp)
        L = np.linalg.cholesky(prior.R)
        z = rng.normal(size=(nsamp, prior.dim))
        theta = prior.a + (z @ L.T) / np.sqrt(prior.s * lam)[:, None]
        F = np.hstack([np.broadcast_to(x, (nsamp, x.size)), Y[:, list(pa)]])
        mean = np.einsum("np,np->n", F, theta)
        Y[:, j] = mean + rng.normal(size=nsamp) / np.sqrt(lam)
    return Y


def random_bma_instance(rng, m, max_models=4, max_lag=2, hist_rows=4):
    """Random per-series candidate lists plus a history tail.

    Every candidate uses delta = beta = 1 and n > 10 so the evolved prior
    equals the stored state and all needed moments exist.
    """
    from ddnm.dlm import DiscountPair, NormalGammaState
    from ddnm.forecast import CandidateModel

    history = rng.normal(size=(hist_rows, m)) * 0.5
    candidates = []
    for j in range(m):
        n_mod = int(rng.integers(2, max_models + 1))
        probs = rng.dirichlet(np.ones(n_mod) * 2.0)
        cands = []
        for i in range(n_mod):
            hi = m - 1 - j
            c = int(rng.integers(0, hi + 1))
            pa = tuple(sorted(rng.choice(np.arange(j + 1, m), size=c, replace=False).tolist()))
            lag = int(rng.integers(0, max_lag + 1))
            p = 1 + lag + len(pa)
            A = rng.normal(size=(p, p))
            C = (A @ A.T) / p + 0.3 * np.eye(p)
            state = NormalGammaState(
                m=rng.normal(size=p) * 0.5,
                C=C,
                n=float(rng.uniform(12.0, 30.0)),
                s=float(rng.uniform(0.3, 1.5)),
            )
            cands.append(
                CandidateModel(
                    parents=pa, lag=lag, state=state,
                    discounts=DiscountPair(1.0, 1.0), prob=float(probs[i]),
                )
            )
        candidates.append(cands)
    return candidates, history


def sample_bma_predictive(candidates, history, nsamp, rng):
    """Mixture compositional sampler: draw a model per series per sample,
    then precision, state, and observation from that model's prior."""
    m = len(candidates)
    T = history.shape[0]
    Y = np.empty((nsamp, m))
    for j in reversed(range(m)):
        cands = candidates[j]
        probs = np.array([c.prob for c in cands])
        choice = rng.choice(len(cands), size=nsamp, p=probs / probs.sum())
        for i, cand in enumerate(cands):
            rows = np.nonzero(choice == i)[0]
            if rows.size == 0:
                continue
            # evolved prior: a = m, R = C/delta, r = beta n, s unchanged
            a = cand.state.m
            R = cand.state.C / cand.discounts.delta
            r = cand.discounts.beta * cand.state.n
            s = cand.state.s
            x = np.array([1.0] + [history[T - l, j] for l in range(1, cand.lag + 1)])
            lam = rng.gamma(shape=r / 2.0, scale=2.0 / (r * s), size=rows.size)
            L = np.linalg.cholesky(R)
            z = rng.normal(size=(rows.size, a.size))
            theta = a + (z @ L.T) / np.sqrt(s * lam)[:, None]
            F = np.hstack(
                [np.broadcast_to(x, (rows.size, x.size)), Y[np.ix_(rows, list(cand.parents))]]
            )
            mean = np.einsum("np,np->n", F, theta)
            Y[rows, j] = mean + rng.normal(size=rows.size) / np.sqrt(lam)
    return Y


def mc_moment_bands(Y):
    """Sample mean/covariance with empirical standard errors.

    Returns (f_hat, se_f, Q_hat, se_Q); covariance standard errors use the
    empirical fourth moments so heavy tails are accounted for.
    """
    n, m = Y.shape
    f_hat = Y.mean(axis=0)
    D = Y - f_hat
    Q_hat = (D.T @ D) / (n - 1)
    se_f = np.sqrt(np.diag(Q_hat) / n)
    # Var of a covariance entry: (E[d_i^2 d_j^2] - Q_ij^2) / n
    second = np.einsum("ni,nj->ij", D**2, D**2) / n
    var_Q = (second - Q_hat**2) / n
    se_Q = np.sqrt(np.maximum(var_Q, 1e-300))
    return f_hat, se_f, Q_hat, se_Q
