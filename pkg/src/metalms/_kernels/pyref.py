"""Pure-numpy ensemble engine; reference semantics for the compiled kernel.

One call advances the whole dense online loop: per-model linear
predictions, exponentially weighted aggregation, stabilised weight
update, projected-LMS estimate update and the feature-norm envelope.
All reductions run in model-index order so traces are reproducible.
"""

import numpy as np

ENGINE_NAME = "python"


def run_dense(phi, y, d, gamma, lam, ball_radius, w0, beta0, m0,
              record_models=False, record_weights=False, record_estimates=False):
    phi = np.ascontiguousarray(phi, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    T, m = phi.shape
    beta = np.array(beta0, dtype=float, copy=True)
    w = np.array(w0, dtype=float, copy=True)
    n_models = beta.shape[0]

    y_pred = np.empty(T)
    j_running = np.empty(T)
    model_preds = np.empty((T, n_models)) if record_models else None
    weights = np.empty((T, n_models)) if record_weights else None
    estimates = np.empty((T + 1, n_models, m)) if record_estimates else None
    if record_estimates:
        estimates[0] = beta

    b2 = ball_radius * ball_radius
    m_env = float(m0)
    cum = 0.0
    for t in range(T):
        phi_t = phi[t]
        preds = beta @ phi_t
        agg = float(w @ preds)
        y_pred[t] = agg
        if record_models:
            model_preds[t] = preds
        if record_weights:
            weights[t] = w

        resid = y[t] - preds
        losses = resid * resid
        w = w * np.exp(-lam * (losses - losses.min()))
        w /= w.sum()

        gain = 1.0 / (d + m_env * m_env)
        beta = beta + (gain * resid)[:, None] * phi_t[None, :]
        norms2 = np.einsum("ij,ij->i", beta, beta)
        over = norms2 > b2
        if np.any(over):
            beta[over] *= (ball_radius / np.sqrt(norms2[over]))[:, None]
        if record_estimates:
            estimates[t + 1] = beta

        if t + 1 < T:
            m_env = gamma * m_env + float(np.linalg.norm(phi[t + 1]))

        err = y[t] - agg
        cum += err * err
        j_running[t] = cum / (t + 1)

    return {
        "y_pred": y_pred,
        "j_running": j_running,
        "model_preds": model_preds,
        "weights": weights,
        "estimates": estimates,
        "final_weights": w,
        "final_estimates": beta,
        "final_envelope": m_env,
    }
