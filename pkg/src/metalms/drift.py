"""Source-to-target parameter drift characterisation.

The mismatch error obeys  E eps_t^2 <= L1 E(beta0_t' dphi_t)^2 + L0(t)
whenever beta_t beta_t' - L1 beta0_t beta0_t' has its largest eigenvalue
below L0(t) / E||dphi_t||^2.  The cases below produce feasible (L1, L0)
pairs from structural knowledge of the drift, including the closed-form
minimal spectral radius when beta_t is a perturbed linear image of
beta0_t.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Case1Drift",
    "Case2Drift",
    "DriftResult",
    "drift_characterize",
    "min_spectral_radius_2x2",
]


@dataclass(frozen=True)
class Case1Drift:
    """||beta_t beta_t' - K_t beta0_t beta0_t'|| <= B_t with scalar K_t.

    ``m2`` holds the per-step bound M_t on the expected squared feature
    mismatch E||phi(alpha*) - phi(alpha_hat)||^2.
    """

    k: np.ndarray
    b: np.ndarray
    m2: np.ndarray
    case_id = "case1"

    def __post_init__(self):
        for name in ("k", "b", "m2"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if not (self.k.size == self.b.size == self.m2.size):
            raise ValueError("per-step arrays must share a length")


@dataclass(frozen=True)
class Case2Drift:
    """||beta_t - V_t beta0_t|| <= B_t with a known matrix V_t.

    branch: 'eigvec' asserts beta0_t is an eigenvector of V_t;
    'general' requires V_t beta0_t linearly independent of beta0_t and
    is rerouted per step to the eigenvector formulas when they are in
    fact collinear.
    """

    v: np.ndarray        # (T, m, m)
    beta0: np.ndarray    # (T, m)
    beta: np.ndarray     # (T, m)
    b: np.ndarray        # (T,)
    m2: np.ndarray       # (T,)
    branch: str = "general"

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        if v.ndim == 2:
            v = v[None]
        beta0 = np.atleast_2d(np.asarray(self.beta0, dtype=float))
        beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        m2 = np.atleast_1d(np.asarray(self.m2, dtype=float))
        T = v.shape[0]
        if not (beta0.shape[0] == beta.shape[0] == b.size == m2.size == T):
            raise ValueError("per-step arrays must share a length")
        if v.shape[1] != v.shape[2] or v.shape[1] != beta0.shape[1]:
            raise ValueError("V_t must be square and match beta dimension")
        if self.branch not in ("eigvec", "general"):
            raise ValueError("branch must be 'eigvec' or 'general'")
        for name, val in (("v", v), ("beta0", beta0), ("beta", beta), ("b", b), ("m2", m2)):
            object.__setattr__(self, name, val)

    @property
    def case_id(self):
        return f"case2-{self.branch}"


@dataclass
class DriftResult:
    l1: float
    l0: np.ndarray               # per-step offset schedule
    per_step: dict               # diagnostics (k_star, rho_star, ... )

    @property
    def l0_bar(self):
        return float(np.mean(self.l0))


def min_spectral_radius_2x2(a, b, r):
    """Closed-form minimiser over k >= 0 of the spectral radius of
    [[a^2 r^2 - k b^2, a^2 r sqrt(1-r^2)], [., a^2 (1-r^2)]].

    The matrix has nonpositive determinant for k >= 0, so its radius is
    (D + |tr|)/2 with D = sqrt(tr^2 - 4 det).  The radius strictly falls
    while the trace a^2 - k b^2 is positive and strictly rises once it
    turns negative, so the minimum sits at the balanced point where the
    two eigenvalues are opposite: k_star = a^2 / b^2 and
    rho_star = a^2 sqrt(1 - r^2).  (At r = 0 the radius is flat at a^2
    on the whole interval [0, a^2/b^2]; this point is the consistent
    limit.)
    """
    if b <= 0:
        raise ValueError("beta0 must be nonzero in the general branch")
    k_star = a * a / (b * b)
    rho_star = a * a * np.sqrt(max(0.0, 1.0 - r * r))
    return float(k_star), float(rho_star)


_COLLINEAR_TOL = 1e-12


def drift_characterize(case):
    """Feasible (L1, L0 schedule) for the declared drift structure."""
    if case.case_id == "case1":
        l0 = case.b * case.m2
        return DriftResult(l1=float(np.max(np.abs(case.k))), l0=l0,
                           per_step={"k": case.k.copy()})

    T = case.v.shape[0]
    ks = np.empty(T)
    rhos = np.empty(T)
    branches = []
    for t in range(T):
        v, b0 = case.v[t], case.beta0[t]
        vb0 = v @ b0
        a = float(np.linalg.norm(vb0))
        b = float(np.linalg.norm(b0))
        if b == 0.0:
            raise ValueError(f"beta0 vanishes at step {t}")
        r = float(b0 @ vb0) / (a * b) if a > 0 else 0.0
        r = min(1.0, max(-1.0, r))
        collinear = a == 0.0 or 1.0 - r * r <= _COLLINEAR_TOL
        if case.branch == "eigvec" and not collinear:
            raise ValueError(f"beta0 is not an eigenvector of V at step {t}")
        if collinear:
            # V beta0 = lambda beta0 with |lambda| = a/b; rho(k=|lambda|^2) = 0
            lam2 = (a / b) ** 2
            ks[t], rhos[t] = lam2, 0.0
            branches.append("eigvec")
        else:
            ks[t], rhos[t] = min_spectral_radius_2x2(a, b, r)
            branches.append("general")
    norms = np.linalg.norm(case.beta, axis=1) + np.linalg.norm(
        np.einsum("tij,tj->ti", case.v, case.beta0), axis=1)
    l0 = (rhos + case.b * norms) * case.m2
    return DriftResult(l1=float(np.max(ks)), l0=l0,
                       per_step={"k_star": ks, "rho_star": rhos, "branch": branches})
