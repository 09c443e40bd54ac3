"""KL divergence between trajectory laws and the dependency-matrix
diagnostic for temporal correlation.

Markov chains with identical transition kernels have trajectory-law KL
equal to the KL of their initial distributions (chain rule); the finite
and linear-Gaussian branches below compute the chain rule exactly and
small finite chains can additionally be checked by whole-path
enumeration.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationCapExceeded

__all__ = [
    "kl_gaussian_same_var",
    "kl_gaussian",
    "FiniteChain",
    "GaussianLinearChain",
    "kl_chain",
    "kl_finite_enumerated",
    "dependency_matrix",
]

DEFAULT_EVENT_CAP = 2 ** 16


def kl_gaussian_same_var(a, b, sigma):
    """D(N(a, sigma^2) || N(b, sigma^2)) = (a - b)^2 / (2 sigma^2)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return (a - b) ** 2 / (2.0 * sigma ** 2)


def kl_gaussian(mean_p, var_p, mean_q, var_q):
    """KL between two scalar Gaussians."""
    if var_p <= 0 or var_q <= 0:
        raise ValueError("variances must be positive")
    return 0.5 * (math.log(var_q / var_p) + var_p / var_q - 1.0
                  + (mean_p - mean_q) ** 2 / var_q)


# ---------------------------------------------------------------------------
# Chain models


@dataclass(frozen=True)
class FiniteChain:
    """Time-inhomogeneous finite Markov chain.

    ``kernels`` has shape (T-1, S, S); ``kernels[t][s, s']`` is the
    probability of moving from state s at time t to s' at time t+1.
    """

    init: np.ndarray
    kernels: np.ndarray
    kind = "finite"

    def __post_init__(self):
        init = np.asarray(self.init, dtype=float)
        kernels = np.asarray(self.kernels, dtype=float)
        if kernels.ndim == 2:
            kernels = kernels[None, :, :]
        if init.ndim != 1 or kernels.ndim != 3:
            raise ValueError("init must be (S,), kernels (T-1, S, S)")
        S = init.size
        if kernels.shape[1:] != (S, S):
            raise ValueError("kernel state dimension mismatch")
        if abs(init.sum() - 1.0) > 1e-9 or np.any(init < 0):
            raise ValueError("init must be a probability vector")
        if np.any(kernels < 0) or np.any(np.abs(kernels.sum(axis=2) - 1.0) > 1e-9):
            raise ValueError("kernel rows must be probability vectors")
        object.__setattr__(self, "init", init)
        object.__setattr__(self, "kernels", kernels)

    @property
    def n_states(self):
        return self.init.size

    @property
    def horizon(self):
        return self.kernels.shape[0] + 1

    def kernel(self, t):
        return self.kernels[t]

    def marginals(self):
        """Marginal distribution of Z_t for t = 0..T-1, shape (T, S)."""
        out = np.empty((self.horizon, self.n_states))
        out[0] = self.init
        for t in range(self.horizon - 1):
            out[t + 1] = out[t] @ self.kernels[t]
        return out

    def path_distribution(self):
        """Exact joint over all S^T paths; (paths, probs)."""
        S, T = self.n_states, self.horizon
        paths = np.array(list(np.ndindex(*([S] * T))), dtype=int)
        probs = self.init[paths[:, 0]].copy()
        for t in range(T - 1):
            probs *= self.kernels[t][paths[:, t], paths[:, t + 1]]
        return paths, probs


@dataclass(frozen=True)
class GaussianLinearChain:
    """Scalar chain x_{t+1} = shift_t + slope_t * x_t + N(0, noise_t^2),
    x_0 ~ N(init_mean, init_std^2)."""

    init_mean: float
    init_std: float
    shifts: np.ndarray
    slopes: np.ndarray
    noise_stds: np.ndarray
    kind = "gaussian-linear"

    def __post_init__(self):
        for name in ("shifts", "slopes", "noise_stds"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        n = self.shifts.size
        if self.slopes.size != n or self.noise_stds.size != n:
            raise ValueError("per-step coefficient arrays must share a length")
        if self.init_std <= 0 or np.any(self.noise_stds <= 0):
            raise ValueError("standard deviations must be positive")

    @property
    def horizon(self):
        return self.shifts.size + 1

    def marginals(self):
        """Gaussian marginal (mean, var) of x_t for t = 0..T-1."""
        means = np.empty(self.horizon)
        varis = np.empty(self.horizon)
        means[0], varis[0] = self.init_mean, self.init_std ** 2
        for t in range(self.horizon - 1):
            means[t + 1] = self.shifts[t] + self.slopes[t] * means[t]
            varis[t + 1] = self.slopes[t] ** 2 * varis[t] + self.noise_stds[t] ** 2
        return means, varis


def _kl_finite_chain_rule(p, q):
    if p.n_states != q.n_states or p.horizon != q.horizon:
        raise ValueError("chains must share state space and horizon")
    total = 0.0
    for s in range(p.n_states):
        if p.init[s] > 0:
            if q.init[s] == 0:
                return math.inf
            total += p.init[s] * math.log(p.init[s] / q.init[s])
    marg = p.marginals()
    for t in range(p.horizon - 1):
        kp, kq = p.kernel(t), q.kernel(t)
        for s in range(p.n_states):
            if marg[t, s] == 0:
                continue
            step = 0.0
            for s2 in range(p.n_states):
                if kp[s, s2] > 0:
                    if kq[s, s2] == 0:
                        return math.inf
                    step += kp[s, s2] * math.log(kp[s, s2] / kq[s, s2])
            total += marg[t, s] * step
    return total


def _kl_gaussian_linear(p, q):
    if p.horizon != q.horizon:
        raise ValueError("chains must share a horizon")
    total = kl_gaussian(p.init_mean, p.init_std ** 2, q.init_mean, q.init_std ** 2)
    means, varis = p.marginals()
    for t in range(p.horizon - 1):
        # E_x KL(N(cp + ap x, sp^2) || N(cq + aq x, sq^2)) under x ~ P_t
        dc = p.shifts[t] - q.shifts[t]
        da = p.slopes[t] - q.slopes[t]
        sq2 = q.noise_stds[t] ** 2
        mean_gap2 = (dc + da * means[t]) ** 2 + da ** 2 * varis[t]
        total += 0.5 * (math.log(sq2 / p.noise_stds[t] ** 2)
                        + p.noise_stds[t] ** 2 / sq2 - 1.0 + mean_gap2 / sq2)
    return total


def kl_chain(p, q):
    """D(P_T || Q_T) between trajectory laws via the exact chain rule.

    Identical kernels collapse the sum to the KL of the initial laws.
    Support violations return +inf explicitly.
    """
    if p.kind != q.kind:
        raise ValueError("chains must be of the same kind")
    if p.kind == "finite":
        return _kl_finite_chain_rule(p, q)
    return _kl_gaussian_linear(p, q)


def kl_finite_enumerated(p, q):
    """Brute-force D(P||Q) summing over every path; oracle for the chain
    rule on small instances."""
    paths_p, probs_p = p.path_distribution()
    _, probs_q = q.path_distribution()
    total = 0.0
    for pp, qq in zip(probs_p, probs_q):
        if pp > 0:
            if qq == 0:
                return math.inf
            total += pp * math.log(pp / qq)
    return total


# ---------------------------------------------------------------------------
# Dependency matrix


def _prefix_suffix_caps(chain, i, j, cap):
    S = chain.n_states
    n_prefix = S ** (i + 1)
    n_suffix = S ** (chain.horizon - j)
    if max(n_prefix, n_suffix) > cap:
        raise EnumerationCapExceeded(
            f"entry ({i},{j}) needs {max(n_prefix, n_suffix)} atoms, cap is {cap}")
    return n_prefix, n_suffix


def _suffix_distributions(chain, j):
    """P(Z_{j:T-1} = b | Z_j = s) for every s, plus atom count."""
    S, T = chain.n_states, chain.horizon
    n = T - j
    suffixes = np.array(list(np.ndindex(*([S] * n))), dtype=int)
    cond = np.ones((S, suffixes.shape[0]))
    for s in range(S):
        cond[s] = (suffixes[:, 0] == s).astype(float)
    for k in range(n - 1):
        K = chain.kernel(j + k)
        cond *= K[suffixes[:, k], suffixes[:, k + 1]][None, :]
    return cond


def dependency_matrix(chain, max_events=DEFAULT_EVENT_CAP, atoms_only=False):
    """Upper-triangular dependence diagnostic Gamma and its squared
    operator norm.

    Entry (i, j), i < j, is sqrt(2 sup |P(B|A) - P(B)|) with A ranging
    over events of the past up to i and B over events of the future from
    j on.  For a Markov chain the sup over events is attained at a
    prefix atom (conditionals are convex combinations of the per-atom
    ones) and equals, B-wise, the total variation distance — both exact
    reductions, no approximation.  ``atoms_only`` restricts B to atoms
    as well, giving a labelled lower bound instead.
    """
    T = chain.horizon
    gamma = np.zeros((T, T))
    np.fill_diagonal(gamma, 1.0)
    marg = chain.marginals()
    for j in range(1, T):
        _, n_suffix = _prefix_suffix_caps(chain, 0, j, max_events)
        cond = _suffix_distributions(chain, j)            # (S, n_suffix)
        unconditional = marg[j] @ cond
        for i in range(j):
            _prefix_suffix_caps(chain, i, j, max_events)
            # sup over prefix events reduces to states reachable at i
            best = 0.0
            for s in range(chain.n_states):
                if marg[i, s] <= 0:
                    continue
                cond_is = _condition_on_state(chain, i, j, s, cond)
                diff = cond_is - unconditional
                if atoms_only:
                    val = float(np.max(np.abs(diff)))
                else:
                    val = 0.5 * float(np.sum(np.abs(diff)))  # total variation
                best = max(best, val)
            gamma[i, j] = math.sqrt(2.0 * best)
    norm = float(np.linalg.norm(gamma, 2))
    return gamma, norm ** 2


def _condition_on_state(chain, i, j, s, cond):
    """P(Z_{j:T-1} = . | Z_i = s): propagate s forward to time j, then
    apply the per-state suffix laws."""
    dist = np.zeros(chain.n_states)
    dist[s] = 1.0
    for t in range(i, j):
        dist = dist @ chain.kernel(t)
    return dist @ cond
