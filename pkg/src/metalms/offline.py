"""Offline phase: approximate nonlinear least squares over the compact box.

Both searchers return an estimate together with a sub-optimality
certificate eps*: the grid searcher derives a deterministic certificate
from the declared Lipschitz constant, the random searcher can only
report a statistical one (labelled as such).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NlsEstimate",
    "empirical_loss",
    "empirical_loss_grid",
    "grid_search_nls",
    "random_search_nls",
    "certify_epsilon",
]


@dataclass
class NlsEstimate:
    """Offline estimate with its achieved loss and eps* certificate.

    ``cert_kind`` is one of 'grid-lipschitz' (deterministic, sound),
    'statistical' (best-found gap only) or 'uncertified'.
    """

    alpha_hat: np.ndarray
    loss: float
    eps_cert: float | None
    cert_kind: str
    search_meta: dict = field(default_factory=dict)

    @property
    def method(self):
        return self.search_meta.get("method", "unknown")


def _traj_residual_sq(spec, traj, alpha):
    """Per-sample squared residual norms against the known beta schedule."""
    phi = spec.family.phi_path(alpha, traj.x)
    f = np.einsum("tm,tm->t", spec.beta_schedule.path(traj.horizon), phi)
    r = traj.y - f
    if r.ndim > 1:
        return np.sum(r ** 2, axis=-1)
    return r ** 2


def empirical_loss(dataset, alpha):
    """Mean squared residual over all N1*T samples of the dataset."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if dataset.n_traj == 0:
        raise ValueError("empty dataset")
    if not dataset.spec.box.contains(alpha):
        raise ValueError("alpha outside the compact box")
    total = 0.0
    count = 0
    for traj in dataset:
        r2 = _traj_residual_sq(dataset.spec, traj, alpha)
        total += float(np.sum(r2))
        count += r2.size
    return total / count


def empirical_loss_grid(dataset, alphas, chunk=256):
    """Loss at many candidate points, shape (K,).

    Uses the family's vectorised evaluator when available, otherwise a
    plain loop; either way, results match ``empirical_loss`` pointwise.
    """
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
    spec = dataset.spec
    out = np.zeros(alphas.shape[0])
    total = 0
    fast = getattr(spec.family, "f_path_many", None)
    for traj in dataset:
        beta_path = spec.beta_schedule.path(traj.horizon)
        if fast is not None:
            for lo in range(0, alphas.shape[0], chunk):
                block = alphas[lo:lo + chunk]
                f = fast(block, beta_path, traj.x)
                out[lo:lo + chunk] += np.sum((traj.y[None, :] - f) ** 2, axis=1)
        else:
            for k in range(alphas.shape[0]):
                phi = spec.family.phi_path(alphas[k], traj.x)
                r = traj.y - np.einsum("tm,tm->t", beta_path, phi)
                out[k] += float(np.sum(r ** 2))
        total += traj.horizon
    return out / total


def _certificate_from_achieved(achieved, L, h):
    """Sound eps* bound from grid resolution.

    For the box minimiser a0 and its nearest grid node g,
    loss(g) <= (sqrt(loss(a0)) + L h)^2, hence
    min_box >= (max(0, sqrt(achieved) - L h))^2 and
    eps* <= achieved - that value <= 2 L h sqrt(achieved) + (L h)^2.
    """
    root = max(0.0, np.sqrt(achieved) - L * h)
    return float(achieved - root ** 2)


def grid_search_nls(dataset, box, segments):
    """Exhaustive uniform-grid NLS; ties break to the lexicographically
    smallest node.  Deterministic certificate when the system declares a
    Lipschitz constant for alpha."""
    if segments < 1:
        raise ValueError("segments must be >= 1")
    points, h = box.grid(segments)
    losses = empirical_loss_grid(dataset, points)
    idx = int(np.argmin(losses))          # first minimum = lexicographic tie-break
    achieved = float(losses[idx])
    L = dataset.spec.alpha_lipschitz
    meta = {
        "method": "grid",
        "segments": segments,
        "evaluations": points.shape[0],
        "half_diagonal": h,
    }
    if L is None:
        return NlsEstimate(points[idx].copy(), achieved, None, "uncertified", meta)
    meta["lipschitz"] = L
    cert = _certificate_from_achieved(achieved, L, h)
    return NlsEstimate(points[idx].copy(), achieved, cert, "grid-lipschitz", meta)


def random_search_nls(dataset, box, budget, seed):
    """Best of ``budget`` uniform samples plus all box corners.

    Samples are drawn as one sequential stream, so a larger budget with
    the same seed extends the candidate set (best-found loss can only
    improve).  The certificate is the achieved-minus-best-found gap,
    which is zero by construction and only statistically meaningful.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    candidates = np.vstack([box.sample(rng, budget), box.corners()])
    losses = empirical_loss_grid(dataset, candidates)
    idx = int(np.argmin(losses))
    achieved = float(losses[idx])
    meta = {
        "method": "random",
        "budget": budget,
        "seed": seed,
        "evaluations": candidates.shape[0],
    }
    return NlsEstimate(candidates[idx].copy(), achieved, achieved - achieved,
                       "statistical", meta)


def certify_epsilon(estimate, dataset, box, L):
    """Deterministic eps* bound for a grid estimate under Lipschitz
    constant ``L``; non-grid estimates keep their statistical value and
    raise a warning."""
    if L < 0:
        raise ValueError("Lipschitz constant must be nonnegative")
    if estimate.search_meta.get("method") != "grid":
        warnings.warn("statistical certificate left unchanged: estimate is not grid-based")
        return estimate.eps_cert if estimate.eps_cert is not None else float("nan")
    h = estimate.search_meta["half_diagonal"]
    return _certificate_from_achieved(estimate.loss, L, h)
