"""Online phase: parallel projected-LMS models under exponentially
weighted prediction aggregation.

Per step t the ensemble

  1. predicts y_{t+1,i} = beta_hat_{t,i}' phi_t for every model,
  2. aggregates y_{t+1} = sum_i w_{t,i} y_{t+1,i},
  3. incurs squared losses against the revealed y_{t+1},
  4. reweights w_{t+1,i} proportional to w_{t,i} exp(-lam * loss_i),
  5. updates each estimate through the ball-projected LMS recursion with
     gain phi_t / (d + m_t^2),
  6. advances the envelope m_{t+1} = gamma m_t + ||phi_{t+1}||.

The weight update subtracts the minimum loss before exponentiation;
renormalisation makes that exact, not an approximation.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ContractViolation

__all__ = [
    "PredictorConfig",
    "EnsembleState",
    "PredictionTrace",
    "project_ball",
    "lms_step",
    "advance_envelope",
    "update_weights",
    "predict_step",
    "default_initial_estimates",
    "run_online",
    "OnlinePredictor",
]


def project_ball(beta, radius):
    """Euclidean projection onto {||beta|| <= radius}; idempotent."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    norm = float(np.linalg.norm(beta))
    if norm <= radius:
        return beta.copy()
    if norm == 0.0:
        return np.zeros_like(beta)
    return beta * (radius / norm)


def lms_step(beta, phi, y, d, m, radius):
    """One projected-LMS update with gain phi / (d + m^2)."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    denom = d + m * m
    if denom <= 0:
        raise ValueError("need d + m^2 > 0")
    innovation = y - float(beta @ phi)
    return project_ball(beta + phi * (innovation / denom), radius)


def advance_envelope(m, phi_norm, gamma):
    """m_next = gamma * m + ||phi_next||; stays below A/(1-gamma) when
    every feature norm is below A and m starts there."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if m < 0 or phi_norm < 0:
        raise ValueError("envelope and feature norm are nonnegative")
    return gamma * m + phi_norm


def update_weights(weights, losses, lam):
    """Exponential reweighting, stabilised by subtracting the minimum loss."""
    if lam <= 0:
        raise ValueError("learning rate must be positive")
    weights = np.asarray(weights, dtype=float)
    losses = np.asarray(losses, dtype=float)
    if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be positive and sum to one")
    out = weights * np.exp(-lam * (losses - losses.min()))
    return out / out.sum()


def predict_step(state, phi):
    """Per-model predictions and their convex aggregate under the current
    weights."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    preds = state.estimates @ phi
    return preds, float(state.weights @ preds)


@dataclass(frozen=True)
class PredictorConfig:
    """Design parameters of the ensemble.

    ``gain_offset`` is the hyperparameter d and must exceed
    A^2/(1-gamma)^2.  When no learning rate is given, the default is 90%
    of the exp-concavity threshold 1/(2 (M_f + A B + W_max)^2), which
    requires a finite declared noise bound.
    """

    n_models: int
    ball_radius: float          # B
    feature_bound: float        # A
    output_bound: float         # M_f
    noise_bound: float          # W_max
    gain_offset: float          # d
    gamma: float = 0.5
    learning_rate: float | None = None
    init_weights: np.ndarray | None = None
    init_estimates: np.ndarray | None = None
    init_envelope: float | None = None   # m_0; defaults to ||phi_0||

    @property
    def exp_concavity_threshold(self):
        s = self.output_bound + self.feature_bound * self.ball_radius + self.noise_bound
        if not math.isfinite(s):
            return 0.0
        return 1.0 / (2.0 * s * s)

    @property
    def lam(self):
        if self.learning_rate is not None:
            return self.learning_rate
        thr = self.exp_concavity_threshold
        if thr <= 0:
            raise ValueError("no default learning rate with unbounded noise; set one")
        return 0.9 * thr

    @property
    def claims_exp_concavity(self):
        return 0.0 < self.lam < self.exp_concavity_threshold

    def validate(self, dim_beta=None):
        if self.n_models < 1:
            raise ValueError("need at least one model")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        floor = self.feature_bound ** 2 / (1.0 - self.gamma) ** 2
        if not self.gain_offset > floor:
            raise ContractViolation(
                f"gain offset d={self.gain_offset:.6g} must exceed "
                f"A^2/(1-gamma)^2={floor:.6g}")
        if self.lam <= 0:
            raise ValueError("learning rate must be positive")
        if self.init_weights is not None:
            w = np.asarray(self.init_weights, dtype=float)
            if w.size != self.n_models or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ValueError("initial weights must be positive and sum to one")
        if self.init_estimates is not None:
            b = np.atleast_2d(np.asarray(self.init_estimates, dtype=float))
            if b.shape[0] != self.n_models:
                raise ValueError("one initial estimate per model required")
            if dim_beta is not None and b.shape[1] != dim_beta:
                raise ValueError("initial estimate dimension mismatch")
            norms = np.linalg.norm(b, axis=1)
            if np.any(norms > self.ball_radius + 1e-9):
                raise ValueError("initial estimates must lie in the beta ball")
            if self.n_models > 1:
                diffs = b[:, None, :] - b[None, :, :]
                dist = np.linalg.norm(diffs, axis=-1)
                np.fill_diagonal(dist, np.inf)
                if dist.min() == 0.0:
                    raise ValueError("initial estimates must be pairwise distinct")
        if self.init_envelope is not None:
            cap = self.feature_bound / (1.0 - self.gamma)
            if not 0.0 <= self.init_envelope <= cap + 1e-12:
                raise ValueError("m_0 must lie in [0, A/(1-gamma)]")

    def resolved_weights(self):
        if self.init_weights is not None:
            return np.asarray(self.init_weights, dtype=float).copy()
        return np.full(self.n_models, 1.0 / self.n_models)


def default_initial_estimates(beta_informed, n_models, ball, rng, spread=1.0,
                              center=0.0):
    """One informed initialisation plus n_models-1 draws from
    N(center, spread^2) per coordinate, all projected into the ball."""
    beta_informed = np.atleast_1d(np.asarray(beta_informed, dtype=float))
    m = beta_informed.size
    out = np.empty((n_models, m))
    out[0] = project_ball(beta_informed, ball.radius)
    for i in range(1, n_models):
        out[i] = project_ball(rng.normal(center, spread, size=m), ball.radius)
    return out


@dataclass
class EnsembleState:
    """Mutable online state: estimates (N2, m), weights (N2,), envelope."""

    t: int
    estimates: np.ndarray
    weights: np.ndarray
    envelope: float

    def check(self, ball_radius):
        norms = np.linalg.norm(self.estimates, axis=1)
        if np.any(norms > ball_radius + 1e-9):
            raise ContractViolation("estimate left the beta ball", step=self.t)
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ContractViolation("weights no longer sum to one", step=self.t)


@dataclass
class PredictionTrace:
    """Everything the online run produced.

    ``y_pred`` is the aggregate prediction path; per-model predictions,
    weight snapshots and estimate paths are populated on request only.
    ``weights[t]`` are the weights used for the step-t aggregate.
    """

    y: np.ndarray
    y_pred: np.ndarray
    j_running: np.ndarray
    model_preds: np.ndarray | None = None
    weights: np.ndarray | None = None
    estimates: np.ndarray | None = None
    final_state: EnsembleState | None = None
    engine: str = "python"

    @property
    def horizon(self):
        return self.y.shape[0]

    @property
    def j_final(self):
        return float(self.j_running[-1])

    @property
    def losses(self):
        return (self.y - self.y_pred) ** 2

    @property
    def model_losses(self):
        if self.model_preds is None:
            raise ValueError("run with full_trace to record per-model losses")
        return (self.y[:, None] - self.model_preds) ** 2


def _features(spec, alpha_hat, x, feature_bound):
    phi = spec.family.phi_path(np.atleast_1d(np.asarray(alpha_hat, dtype=float)), x)
    norms = np.linalg.norm(phi, axis=1)
    bad = np.nonzero(norms > feature_bound + 1e-9)[0]
    if bad.size:
        t = int(bad[0])
        raise ContractViolation(
            f"||phi_t(alpha_hat, x_t)||={norms[t]:.6g} exceeds declared "
            f"A={feature_bound:.6g}", step=t)
    return phi


def run_online(traj, alpha_hat, config, spec, *, full_trace=False,
               record_estimates=False, engine="auto"):
    """Run the ensemble over a recorded trajectory.

    The trajectory is consumed causally (x_t first, y_{t+1} revealed
    after the prediction); precomputing the feature matrix is sound
    because features never depend on predictions.
    """
    config.validate(dim_beta=spec.family.dim_beta)
    phi = _features(spec, alpha_hat, traj.x, config.feature_bound)
    T = traj.horizon

    w0 = config.resolved_weights()
    if config.init_estimates is None:
        raise ValueError("config.init_estimates is required (use "
                         "default_initial_estimates for the standard choice)")
    beta0 = np.atleast_2d(np.asarray(config.init_estimates, dtype=float))

    phi0_norm = float(np.linalg.norm(phi[0]))
    m0 = config.init_envelope if config.init_envelope is not None else phi0_norm
    if m0 < phi0_norm - 1e-12:
        raise ContractViolation(
            f"m_0={m0:.6g} below the first feature norm {phi0_norm:.6g}", step=0)

    eng = _kernels.get_engine(engine)
    out = eng.run_dense(phi, traj.y, config.gain_offset, config.gamma,
                        config.lam, config.ball_radius, w0, beta0, m0,
                        record_models=full_trace, record_weights=full_trace,
                        record_estimates=record_estimates)
    final = EnsembleState(t=T, estimates=out["final_estimates"],
                          weights=out["final_weights"],
                          envelope=out["final_envelope"])
    final.check(config.ball_radius)
    return PredictionTrace(
        y=traj.y.copy(), y_pred=out["y_pred"], j_running=out["j_running"],
        model_preds=out["model_preds"], weights=out["weights"],
        estimates=out["estimates"], final_state=final,
        engine=eng.ENGINE_NAME)


class OnlinePredictor:
    """Streaming interface: feed x_t, read predictions, reveal y_{t+1}.

    Semantically identical to the dense runner; kept in plain python for
    genuinely online consumers and as an oracle in tests.
    """

    def __init__(self, config, dim_beta):
        config.validate(dim_beta=dim_beta)
        if config.init_estimates is None:
            raise ValueError("config.init_estimates is required")
        self.config = config
        self.state = EnsembleState(
            t=0,
            estimates=np.atleast_2d(np.asarray(config.init_estimates, dtype=float)).copy(),
            weights=config.resolved_weights(),
            envelope=-1.0,  # set on the first feature
        )
        self._phi = None

    def predict(self, phi):
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        norm = float(np.linalg.norm(phi))
        if norm > self.config.feature_bound + 1e-9:
            raise ContractViolation("feature norm exceeds declared A", step=self.state.t)
        if self.state.envelope < 0.0:
            m0 = self.config.init_envelope
            self.state.envelope = float(m0) if m0 is not None else norm
            if self.state.envelope < norm - 1e-12:
                raise ContractViolation("m_0 below the first feature norm", step=0)
        self._phi = phi
        return predict_step(self.state, phi)

    def learn(self, y_next, phi_next=None):
        if self._phi is None:
            raise ValueError("predict must be called before learn")
        cfg = self.config
        preds, _ = predict_step(self.state, self._phi)
        losses = (y_next - preds) ** 2
        self.state.weights = update_weights(self.state.weights, losses, cfg.lam)
        new = np.empty_like(self.state.estimates)
        for i in range(cfg.n_models):
            new[i] = lms_step(self.state.estimates[i], self._phi, y_next,
                              cfg.gain_offset, self.state.envelope, cfg.ball_radius)
        self.state.estimates = new
        if phi_next is not None:
            nrm = float(np.linalg.norm(np.asarray(phi_next, dtype=float)))
            self.state.envelope = advance_envelope(self.state.envelope, nrm, cfg.gamma)
        self.state.t += 1
        self.state.check(cfg.ball_radius)
        self._phi = None
