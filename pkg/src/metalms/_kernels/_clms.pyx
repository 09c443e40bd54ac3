# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled ensemble engine; mirrors pyref.run_dense loop for loop."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt

ENGINE_NAME = "cython"


def run_dense(object phi_in, object y_in, double d, double gamma, double lam,
              double ball_radius, object w0, object beta0, double m0,
              bint record_models=False, bint record_weights=False,
              bint record_estimates=False):
    cdef double[:, ::1] phi = np.ascontiguousarray(phi_in, dtype=np.float64)
    cdef double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef Py_ssize_t T = phi.shape[0]
    cdef Py_ssize_t m = phi.shape[1]

    beta_arr = np.array(beta0, dtype=np.float64, copy=True, order="C")
    w_arr = np.array(w0, dtype=np.float64, copy=True)
    cdef double[:, ::1] beta = beta_arr
    cdef double[::1] w = w_arr
    cdef Py_ssize_t n_models = beta.shape[0]

    y_pred_arr = np.empty(T)
    j_running_arr = np.empty(T)
    cdef double[::1] y_pred = y_pred_arr
    cdef double[::1] j_running = j_running_arr

    preds_arr = np.empty(n_models)
    losses_arr = np.empty(n_models)
    cdef double[::1] preds = preds_arr
    cdef double[::1] losses = losses_arr

    model_preds_arr = np.empty((T, n_models)) if record_models else np.empty((0, 0))
    weights_arr = np.empty((T, n_models)) if record_weights else np.empty((0, 0))
    estimates_arr = (np.empty((T + 1, n_models, m)) if record_estimates
                     else np.empty((0, 0, 0)))
    cdef double[:, ::1] model_preds = model_preds_arr
    cdef double[:, ::1] weights = weights_arr
    cdef double[:, :, ::1] estimates = estimates_arr

    cdef double b2 = ball_radius * ball_radius
    cdef double m_env = m0
    cdef double cum = 0.0
    cdef double agg, pred, lmin, s, gain, resid, norm2, scale, err, nrm
    cdef Py_ssize_t t, i, k

    if record_estimates:
        for i in range(n_models):
            for k in range(m):
                estimates[0, i, k] = beta[i, k]

    for t in range(T):
        agg = 0.0
        for i in range(n_models):
            pred = 0.0
            for k in range(m):
                pred += beta[i, k] * phi[t, k]
            preds[i] = pred
            agg += w[i] * pred
        y_pred[t] = agg
        if record_models:
            for i in range(n_models):
                model_preds[t, i] = preds[i]
        if record_weights:
            for i in range(n_models):
                weights[t, i] = w[i]

        lmin = 0.0
        for i in range(n_models):
            resid = y[t] - preds[i]
            losses[i] = resid * resid
            if i == 0 or losses[i] < lmin:
                lmin = losses[i]
        s = 0.0
        for i in range(n_models):
            w[i] = w[i] * exp(-lam * (losses[i] - lmin))
            s += w[i]
        for i in range(n_models):
            w[i] /= s

        gain = 1.0 / (d + m_env * m_env)
        for i in range(n_models):
            resid = y[t] - preds[i]
            norm2 = 0.0
            for k in range(m):
                beta[i, k] += gain * resid * phi[t, k]
                norm2 += beta[i, k] * beta[i, k]
            if norm2 > b2:
                scale = ball_radius / sqrt(norm2)
                for k in range(m):
                    beta[i, k] *= scale
        if record_estimates:
            for i in range(n_models):
                for k in range(m):
                    estimates[t + 1, i, k] = beta[i, k]

        if t + 1 < T:
            nrm = 0.0
            for k in range(m):
                nrm += phi[t + 1, k] * phi[t + 1, k]
            m_env = gamma * m_env + sqrt(nrm)

        err = y[t] - agg
        cum += err * err
        j_running[t] = cum / (t + 1)

    return {
        "y_pred": y_pred_arr,
        "j_running": j_running_arr,
        "model_preds": model_preds_arr if record_models else None,
        "weights": weights_arr if record_weights else None,
        "estimates": estimates_arr if record_estimates else None,
        "final_weights": w_arr,
        "final_estimates": beta_arr,
        "final_envelope": m_env,
    }
