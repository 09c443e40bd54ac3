"""Command-line interface.

Subcommands: simulate, offline-fit, predict, bounds, kl, depmatrix,
drift, experiment, engines.  Exit codes: 0 success, 2 contract/input
violation, 1 I/O failure.
"""

import argparse
import os
import sys

import numpy as np

from . import _kernels
from .config import (bound_inputs_from_config, chain_from_config,
                     predictor_from_config, read_config, system_from_config)
from .divergence import dependency_matrix, kl_chain
from .drift import Case1Drift, Case2Drift, drift_characterize
from .errors import ContractViolation, EnumerationCapExceeded
from .experiments import ExperimentConfig, PRESETS, run_experiment
from .offline import grid_search_nls, random_search_nls
from .online import run_online
from .rng import INIT, substream
from .storage import (emit_csv, load_dataset, load_estimate, read_csv,
                      save_dataset, save_estimate, save_trace)
from .systems import CompactBox, simulate_source, simulate_target


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="results")
    p.add_argument("--replications", type=int, default=None)


def build_parser():
    ap = argparse.ArgumentParser(prog="metalms", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate source or target trajectories")
    p.add_argument("--system", required=True, help="config file with a [system] section")
    p.add_argument("--mode", choices=["source", "target"], default="source")
    p.add_argument("--n-traj", type=int, default=1)
    p.add_argument("--horizon", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("offline-fit", help="approximate NLS over the compact box")
    p.add_argument("--dataset", required=True, help="dataset manifest")
    p.add_argument("--box", default=None,
                   help="override box as 'lo:hi,lo:hi' per dimension")
    p.add_argument("--method", choices=["grid", "random"], default="grid")
    p.add_argument("--segments", type=int, default=50)
    p.add_argument("--budget", type=int, default=10000)
    p.add_argument("--out", default="estimate.csv")
    _add_common(p)

    p = sub.add_parser("predict", help="run the online ensemble over a dataset")
    p.add_argument("--dataset", required=True, help="dataset manifest (first trajectory)")
    p.add_argument("--alpha-hat", required=True, help="estimate CSV from offline-fit")
    p.add_argument("--config", required=True, help="config file with a [predictor] section")
    p.add_argument("--trace", default="trace.csv")
    p.add_argument("--full-trace", action="store_true")
    _add_common(p)

    p = sub.add_parser("bounds", help="bound evaluation")
    bsub = p.add_subparsers(dest="bounds_command", required=True)
    pr = bsub.add_parser("report", help="evaluate the bound formulas")
    pr.add_argument("--inputs", required=True, help="config file with a [bounds] section")
    pr.add_argument("--out", default="report.csv")

    p = sub.add_parser("kl", help="KL divergence between trajectory laws")
    ksub = p.add_subparsers(dest="kl_command", required=True)
    kc = ksub.add_parser("chain", help="chain-rule KL between two Markov chains")
    kc.add_argument("--spec", required=True,
                    help="config with [chain_p] and [chain_q] sections")
    kc.add_argument("--out", default=None)

    p = sub.add_parser("depmatrix", help="dependency matrix of a finite chain")
    p.add_argument("--chain", required=True, help="config with a [chain] section")
    p.add_argument("--max-events", type=int, default=65536)
    p.add_argument("--atoms-only", action="store_true",
                   help="labelled lower bound over atomic events")
    p.add_argument("--out", default=None)

    p = sub.add_parser("drift", help="feasible (L1, L0) drift characterisation")
    p.add_argument("--case", choices=["case1", "case2"], required=True)
    p.add_argument("--inputs", required=True, help="per-step CSV")
    p.add_argument("--out", default=None)

    p = sub.add_parser("experiment", help="run a preset experiment")
    p.add_argument("preset", choices=sorted(PRESETS))
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--t-offline", type=int, default=None)
    p.add_argument("--segments", type=int, default=None)
    p.add_argument("--sweep", default=None, help="comma-separated horizons")
    p.add_argument("--medians", action="store_true")
    _add_common(p)

    sub.add_parser("engines", help="report the active compute engine")
    return ap


def _parse_box(text):
    los, his = [], []
    for dim in text.split(","):
        lo, hi = dim.split(":")
        los.append(float(lo))
        his.append(float(hi))
    return CompactBox(los, his)


def cmd_simulate(args):
    cp = read_config(args.system)
    spec = system_from_config(cp["system"])
    if args.mode == "source":
        ds = simulate_source(spec, args.n_traj, args.horizon, args.seed)
    else:
        traj = simulate_target(spec, args.horizon, args.seed)
        from .systems import MultiTrajectoryDataset
        ds = MultiTrajectoryDataset(spec=spec, trajectories=[traj], seed=args.seed)
    manifest = save_dataset(ds, args.out_dir)
    print(manifest)


def cmd_offline_fit(args):
    ds = load_dataset(args.dataset)
    box = _parse_box(args.box) if args.box else ds.spec.box
    if args.method == "grid":
        est = grid_search_nls(ds, box, args.segments)
    else:
        est = random_search_nls(ds, box, args.budget, args.seed)
    save_estimate(est, args.out)
    print(args.out)


def cmd_predict(args):
    ds = load_dataset(args.dataset)
    alpha_hat, _, _, _ = load_estimate(args.alpha_hat)
    cp = read_config(args.config)
    rng = substream(args.seed, INIT)
    pred_cfg = predictor_from_config(cp["predictor"], ds.spec.family.dim_beta, rng)
    trace = run_online(ds.trajectories[0], alpha_hat, pred_cfg, ds.spec,
                       full_trace=args.full_trace)
    save_trace(trace, args.trace, full=args.full_trace)
    print(args.trace)


def cmd_bounds_report(args):
    from .bounds import prediction_bound

    cp = read_config(args.inputs)
    inp = bound_inputs_from_config(cp["bounds"])
    pred = prediction_bound(inp)
    gen = pred.gen
    rows = [("gen_rate", gen.rate_term), ("gen_offset", gen.offset_term),
            ("gen_shift", gen.shift_term), ("gen_opt", gen.opt_term),
            ("gen_total", gen.total), ("gen_C1", gen.c1), ("gen_C0", gen.c0),
            ("J_mis", pred.j_mis), ("J_opt", pred.j_opt), ("J_est", pred.j_est),
            ("total", pred.total), ("C_d", pred.c_d), ("N_d", pred.n_d)]
    with open(args.out, "w") as fh:
        fh.write("term,value\n")
        for name, value in rows:
            fh.write(f"{name},{value:.17g}\n")
    print(args.out)


def cmd_kl_chain(args):
    cp = read_config(args.spec)
    p = chain_from_config(cp["chain_p"])
    q = chain_from_config(cp["chain_q"])
    val = kl_chain(p, q)
    print(f"{val:.17g}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("term,value\n")
            fh.write(f"kl_chain,{val:.17g}\n")


def cmd_depmatrix(args):
    cp = read_config(args.chain)
    chain = chain_from_config(cp["chain"])
    gamma, norm_sq = dependency_matrix(chain, max_events=args.max_events,
                                       atoms_only=args.atoms_only)
    label = "gamma_norm_sq_lower" if args.atoms_only else "gamma_norm_sq"
    print(f"{label},{norm_sq:.17g}")
    if args.out:
        header = [f"g_{j}" for j in range(gamma.shape[1])]
        emit_csv(args.out, header, gamma)


def cmd_drift(args):
    _, data = read_csv(args.inputs)
    if args.case == "case1":
        case = Case1Drift(k=data[:, 0], b=data[:, 1], m2=data[:, 2])
    else:
        T = data.shape[0]
        m = int(round((np.sqrt(4 * (data.shape[1] - 2) + 4) - 2) / 2))
        # columns: v (m*m), beta0 (m), beta (m), B, M
        v = data[:, :m * m].reshape(T, m, m)
        beta0 = data[:, m * m:m * m + m]
        beta = data[:, m * m + m:m * m + 2 * m]
        case = Case2Drift(v=v, beta0=beta0, beta=beta,
                          b=data[:, -2], m2=data[:, -1])
    res = drift_characterize(case)
    print(f"L1,{res.l1:.17g}")
    if args.out:
        rows = np.column_stack([np.arange(res.l0.size, dtype=float), res.l0])
        emit_csv(args.out, ["t", "L0"], rows)


def cmd_experiment(args):
    sweep = tuple(int(v) for v in args.sweep.split(",")) if args.sweep else None
    cfg = ExperimentConfig(
        preset=args.preset, seed=args.seed, out_dir=args.out_dir,
        replications=args.replications, horizon=args.horizon,
        t_offline=args.t_offline, horizon_sweep=sweep,
        segments=args.segments, medians=args.medians)
    result = run_experiment(cfg)
    for key, value in sorted(result["summary"].items()):
        print(f"{key} = {value}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "offline-fit": cmd_offline_fit,
        "predict": cmd_predict,
        "bounds": cmd_bounds_report,
        "kl": cmd_kl_chain,
        "depmatrix": cmd_depmatrix,
        "drift": cmd_drift,
        "experiment": cmd_experiment,
    }
    if args.command == "engines":
        print(f"active = {_kernels.active_engine()}")
        print(f"available = {' '.join(_kernels.available_engines())}")
        return 0
    try:
        handlers[args.command](args)
    except (ContractViolation, EnumerationCapExceeded, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
