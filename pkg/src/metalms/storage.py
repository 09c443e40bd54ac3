"""CSV and manifest I/O.

Numbers are rendered with 17 significant digits so float64 values
round-trip exactly.  A dataset is one CSV per trajectory (header
``t,x_0..x_{p-1},y`` plus optional hidden-truth columns
``beta_0..beta_{m-1},w,eps``; row t holds x_t and the output revealed
after it) next to a flat key-value manifest that embeds the full system
description, so downstream commands can rebuild the spec.
"""

import configparser
import os

import numpy as np

from .systems import MultiTrajectoryDataset, Trajectory

__all__ = [
    "fmt",
    "emit_csv",
    "read_csv",
    "save_dataset",
    "load_dataset",
    "save_estimate",
    "load_estimate",
    "save_trace",
]


def fmt(value):
    return f"{float(value):.17g}"


def emit_csv(path, header, rows):
    """Write one CSV; empty series are rejected, I/O errors surface."""
    rows = list(rows)
    if not rows:
        raise ValueError("refusing to write an empty series")
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data


def _traj_rows(traj, hidden):
    T = traj.horizon
    for t in range(T):
        row = [t, *traj.x[t], traj.y[t]]
        if hidden:
            row.extend(traj.beta[t])
            row.append(traj.w[t])
            row.append(traj.eps[t] if traj.eps is not None else np.nan)
        yield row


def save_dataset(dataset, out_dir, prefix="traj", hidden=True):
    """Write trajectory CSVs plus ``manifest.cfg``; returns the manifest path."""
    from .config import system_to_config

    os.makedirs(out_dir, exist_ok=True)
    hidden = hidden and dataset.trajectories[0].has_hidden_truth
    spec = dataset.spec
    p, m = spec.family.dim_x, spec.family.dim_beta
    header = ["t"] + [f"x_{i}" for i in range(p)] + ["y"]
    if hidden:
        header += [f"beta_{i}" for i in range(m)] + ["w", "eps"]
    files = []
    for i, traj in enumerate(dataset):
        name = f"{prefix}_{i:04d}.csv"
        emit_csv(os.path.join(out_dir, name), header, _traj_rows(traj, hidden))
        files.append(name)

    cp = configparser.ConfigParser()
    cp["dataset"] = {
        "spec_id": spec.spec_id,
        "seed": str(dataset.seed),
        "n_traj": str(dataset.n_traj),
        "horizon": str(dataset.horizon),
        "hidden_truth": str(hidden).lower(),
        "files": " ".join(files),
    }
    cp["system"] = system_to_config(spec)
    manifest = os.path.join(out_dir, "manifest.cfg")
    with open(manifest, "w") as fh:
        cp.write(fh)
    return manifest


def load_dataset(manifest_path):
    from .config import system_from_config

    cp = configparser.ConfigParser()
    if not cp.read(manifest_path):
        raise OSError(f"cannot read manifest {manifest_path}")
    meta = cp["dataset"]
    spec = system_from_config(cp["system"])
    base = os.path.dirname(os.path.abspath(manifest_path))
    hidden = meta.getboolean("hidden_truth")
    p, m = spec.family.dim_x, spec.family.dim_beta

    trajs = []
    for name in meta["files"].split():
        _, data = read_csv(os.path.join(base, name))
        x = data[:, 1:1 + p]
        y = data[:, 1 + p]
        beta = w = eps = None
        if hidden:
            beta = data[:, 2 + p:2 + p + m]
            w = data[:, 2 + p + m]
            eps_col = data[:, 3 + p + m]
            eps = None if np.all(np.isnan(eps_col)) else eps_col
        trajs.append(Trajectory(x=x, y=y, beta=beta, w=w, eps=eps,
                                seed=meta.getint("seed")))
    return MultiTrajectoryDataset(spec=spec, trajectories=trajs,
                                  seed=meta.getint("seed"))


def save_estimate(estimate, path):
    n = estimate.alpha_hat.size
    header = [f"alpha_{i}" for i in range(n)] + ["loss", "eps_cert", "method"]
    cert = estimate.eps_cert if estimate.eps_cert is not None else np.nan
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        vals = [fmt(v) for v in estimate.alpha_hat] + [fmt(estimate.loss), fmt(cert)]
        fh.write(",".join(vals) + f",{estimate.method}\n")
    return path


def load_estimate(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        vals = fh.readline().strip().split(",")
    n = sum(1 for h in header if h.startswith("alpha_"))
    alpha = np.array([float(v) for v in vals[:n]])
    return alpha, float(vals[n]), float(vals[n + 1]), vals[n + 2]


def save_trace(trace, path, full=False):
    """Trace CSV ``t,y,y_pred,loss,J_running`` plus per-model columns
    when ``full`` and the run recorded them."""
    header = ["t", "y", "y_pred", "loss", "J_running"]
    losses = trace.losses
    cols = [np.arange(trace.horizon), trace.y, trace.y_pred, losses, trace.j_running]
    if full and trace.model_preds is not None:
        n = trace.model_preds.shape[1]
        header += [f"y_pred_{i}" for i in range(n)]
        cols.append(trace.model_preds)
    matrix = np.column_stack(cols)
    return emit_csv(path, header, matrix)
