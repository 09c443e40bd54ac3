"""Acceptance suite.

Each test implements one exit criterion at its stated tolerance and
records a pass/fail line printed in the terminal summary.  Run with

    pytest tests/test_acceptance.py -v
"""

import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from metalms import systems as S
from metalms.bounds import BoundInputs, generalization_bound, martingale_offset
from metalms.divergence import (FiniteChain, GaussianLinearChain,
                                dependency_matrix, kl_chain,
                                kl_finite_enumerated)
from metalms.drift import min_spectral_radius_2x2
from metalms.experiments import (ExperimentConfig, bounds_report, fig1_repro,
                                 rate_check, theorem37_check)
from metalms.offline import grid_search_nls
from metalms.online import PredictorConfig, default_initial_estimates, run_online
from metalms.systems import drift_delta, epsilon_path, simulate_source, simulate_target


# ---------------------------------------------------------------------------
# Random bounded ensemble instances shared by the aggregation and regret
# criteria.


def random_instance(seed, n_models_max=8, t_max=500):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 4))
    T = int(rng.integers(50, t_max + 1))
    n_models = int(rng.integers(1, n_models_max + 1))

    lo, hi = 0.5, 1.5
    alpha_star = rng.uniform(0.7, 1.3, size=dim)
    alpha_hat = rng.uniform(lo, hi, size=dim)
    base = rng.uniform(-0.4, 0.4, size=dim)
    amp = rng.uniform(-0.25, 0.25, size=dim)
    kind = rng.choice(["constant", "exp-decay", "sinusoid"])
    if kind == "constant":
        schedule = S.ConstantSchedule(base)
    elif kind == "exp-decay":
        schedule = S.ExpDecaySchedule(base, amp, rho=float(rng.uniform(0.9, 0.999)))
    else:
        schedule = S.SinusoidSchedule(base, amp, omega=float(rng.uniform(0.01, 0.2)))
    ball = S.BallDomain(float(np.linalg.norm(base) + np.linalg.norm(amp) + 0.2))

    A = hi * math.sqrt(dim)   # sup over the box of ||alpha * x||, |x_i| <= 1
    w_cap = float(rng.uniform(0.2, 1.0))
    spec = S.SystemSpec(
        family=S.DiagonalLinearFamily(dim=dim),
        box=S.CompactBox([lo] * dim, [hi] * dim),
        alpha_star=alpha_star,
        beta_schedule=schedule,
        regressor=S.ExogenousIIDRegressor(dim=dim, kind="uniform", scale=1.0),
        noise=S.UniformNoise(w_cap),
        ball=ball,
        feature_bound=A,
        output_bound=ball.radius * A,
        spec_id=f"accept-{seed}",
    )

    gamma = float(rng.uniform(0.3, 0.7))
    weights = rng.uniform(0.1, 1.0, size=n_models)
    weights /= weights.sum()
    inits = default_initial_estimates(
        rng.uniform(-1, 1, size=dim) * ball.radius * 0.5, n_models, ball, rng,
        spread=0.4 * ball.radius)
    config = PredictorConfig(
        n_models=n_models, ball_radius=ball.radius, feature_bound=A,
        output_bound=spec.output_bound, noise_bound=w_cap,
        gain_offset=float(rng.uniform(2.0, 20.0)) * A * A / (1 - gamma) ** 2,
        gamma=gamma, init_weights=weights, init_estimates=inits)
    return spec, alpha_hat, config


class TestCriterion1And2:
    def test_pathwise_aggregation_bounds(self, acceptance_log):
        """Aggregate cumulative loss never exceeds the worst model, and
        stays within the log-weight penalty of the best model, pathwise."""
        n_instances = 220
        worst_max_slack = -math.inf
        worst_min_slack = -math.inf
        for seed in range(n_instances):
            spec, alpha_hat, config = random_instance(seed)
            assert config.claims_exp_concavity
            traj = simulate_target(spec, int(np.random.default_rng(seed).integers(50, 501)), seed=seed)
            trace = run_online(traj, alpha_hat, config, spec, full_trace=True)
            agg = float(np.sum(trace.losses))
            per_model = np.sum(trace.model_losses, axis=0)
            worst_max_slack = max(worst_max_slack, agg - float(per_model.max()))
            penalty = np.log(1.0 / config.init_weights) / config.lam
            worst_min_slack = max(worst_min_slack,
                                  agg - float(np.min(per_model + penalty)))
        ok_max = worst_max_slack <= 1e-9
        ok_min = worst_min_slack <= 1e-9
        acceptance_log("1. pathwise aggregation max bound", ok_max,
                       f"worst slack {worst_max_slack:.3e} over {n_instances} instances")
        acceptance_log("2. pathwise aggregation regret bound", ok_min,
                       f"worst slack {worst_min_slack:.3e}")
        assert ok_max and ok_min


class TestCriterion3:
    def test_projected_lms_regret(self, acceptance_log):
        """Tracking-error regret of every model against the drift/noise
        budget, for gain offsets 2x, 10x and 100x the floor."""
        worst_rel = -math.inf
        n_paths = 100
        for seed in range(n_paths):
            spec, alpha_hat, config = random_instance(seed + 10_000)
            T = 300
            traj = simulate_target(spec, T, seed=seed + 10_000)
            eps = epsilon_path(spec, traj, alpha_hat)
            phi = spec.family.phi_path(alpha_hat, traj.x)
            delta = drift_delta(spec.beta_schedule, T)
            A, gamma, B = config.feature_bound, config.gamma, config.ball_radius
            floor = A * A / (1 - gamma) ** 2
            for mult in (2.0, 10.0, 100.0):
                d = mult * floor
                cfg = replace(config, gain_offset=d)
                trace = run_online(traj, alpha_hat, cfg, spec,
                                   record_estimates=True)
                beta_err = traj.beta[None] - np.swapaxes(trace.estimates[:-1], 0, 1)
                lhs = np.einsum("itm,tm->it", beta_err, phi) ** 2
                lhs_total = lhs.sum(axis=1)            # per model
                c_base = (1 + A * A / d) ** 2 * (1 + A * A / ((1 - gamma) ** 2 * d))
                rhs = (c_base * float(np.sum((1 + 1 / d) * traj.w ** 2
                                             + (1 + d) * eps ** 2))
                       + 16 * d * B * T * delta + 4 * d * T * delta ** 2
                       + 16 * d * B * B)
                rel = float((lhs_total.max() - rhs) / rhs)
                worst_rel = max(worst_rel, rel)
        ok = worst_rel <= 1e-8
        acceptance_log("3. projected-LMS regret inequality", ok,
                       f"worst relative slack {worst_rel:.3e} over {n_paths} paths x 3 offsets")
        assert ok


class TestCriterion4:
    def test_benchmark_reproduction(self, acceptance_log, tmp_path):
        """Sigmoid-drift benchmark, 50 replications at T = 5000: the
        ensemble beats the single model throughout the transient, the
        frozen coefficients diverge, and the final error sits at the
        noise floor."""
        cfg = ExperimentConfig(preset="fig1-repro", seed=2025,
                               out_dir=str(tmp_path), replications=50,
                               horizon=5000, t_offline=2000)
        r = fig1_repro(cfg)
        c = r["curves"]
        s = r["summary"]
        ok_a = bool(np.all(c["j_meta"]["mean"][:500] <= c["j_single"]["mean"][:500]))
        ok_b = s["J_fixed_final"] >= 5.0 * s["J_meta_final"]
        ok_c = 0.8 <= s["J_meta_final"] <= 3.0
        acceptance_log("4a. benchmark: ensemble beats single model (t <= 500)", ok_a)
        acceptance_log("4b. benchmark: frozen coefficients >= 5x ensemble", ok_b,
                       f"fixed {s['J_fixed_final']:.2f} vs meta {s['J_meta_final']:.2f}")
        acceptance_log("4c. benchmark: final ensemble error in [0.8, 3.0]", ok_c,
                       f"J_T = {s['J_meta_final']:.3f}")
        assert ok_a and ok_b and ok_c


class TestCriterion5:
    def test_generalization_rate(self, acceptance_log, tmp_path):
        """log-log slope of the generalization error against T/log T over
        a doubling sweep lies in [-1.3, -0.7]."""
        cfg = ExperimentConfig(preset="rate-check", seed=123,
                               out_dir=str(tmp_path), replications=30,
                               horizon_sweep=(250, 500, 1000, 2000, 4000, 8000))
        r = rate_check(cfg)
        slope = r["summary"]["slope"]
        ok = -1.3 <= slope <= -0.7
        acceptance_log("5. generalization-rate slope in [-1.3, -0.7]", ok,
                       f"slope {slope:.3f}")
        assert ok


class TestCriterion6:
    def test_drift_minimiser_against_oracle(self, acceptance_log):
        """Closed-form (k*, rho*) equals bracketed grid + eigensolve
        minimisation to 1e-6 on 100 random (V, beta0) pairs."""

        def radius(a, b, r, k):
            s = math.sqrt(max(0.0, 1 - r * r))
            mat = np.array([[a * a * r * r - k * b * b, a * a * r * s],
                            [a * a * r * s, a * a * s * s]])
            return float(np.max(np.abs(np.linalg.eigvalsh(mat))))

        rng = np.random.default_rng(42)
        checked = 0
        worst = 0.0
        while checked < 100:
            m = int(rng.integers(2, 6))
            v = rng.normal(size=(m, m))
            b0 = rng.normal(size=m)
            vb0 = v @ b0
            a, b = float(np.linalg.norm(vb0)), float(np.linalg.norm(b0))
            r = float(b0 @ vb0 / (a * b))
            if abs(r) > 1 - 1e-6:
                continue
            k_star, rho_star = min_spectral_radius_2x2(a, b, r)
            ks = np.linspace(0.0, 4.0 * a * a / (b * b) + 1.0, 1000)
            vals = [radius(a, b, r, k) for k in ks]
            i = int(np.argmin(vals))
            res = minimize_scalar(lambda k: radius(a, b, r, k),
                                  bounds=(ks[max(0, i - 1)], ks[min(999, i + 1)]),
                                  method="bounded", options={"xatol": 1e-12})
            worst = max(worst, abs(rho_star - res.fun), abs(k_star - res.x))
            checked += 1
        ok = worst <= 1e-6
        acceptance_log("6. drift characterisation matches grid+eigensolve oracle",
                       ok, f"worst abs gap {worst:.2e} over 100 instances")
        assert ok


class TestCriterion7:
    def test_dependency_matrix_diagnostics(self, acceptance_log):
        """Independence gives the identity exactly; perfect memory gives
        a unit off-diagonal; geometric mixing keeps the norm flat."""
        row = np.array([0.75, 0.25])
        ok_iid = True
        for T in range(2, 7):
            chain = FiniteChain(init=[0.5, 0.5], kernels=np.tile(row, (T - 1, 2, 1)))
            gamma, _ = dependency_matrix(chain)
            ok_iid &= bool(np.array_equal(gamma, np.eye(T)))

        copy = FiniteChain(init=[0.5, 0.5], kernels=np.tile(np.eye(2), (2, 1, 1)))
        gamma_copy, _ = dependency_matrix(copy)
        ok_copy = gamma_copy[0, 1] == 1.0

        kernel = np.array([[0.52, 0.48], [0.48, 0.52]])
        norms = []
        for T in range(3, 9):
            chain = FiniteChain(init=[0.5, 0.5],
                                kernels=np.repeat(kernel[None], T - 1, axis=0))
            norms.append(dependency_matrix(chain)[1])
        slope = float(np.polyfit(np.arange(3, 9, dtype=float), norms, 1)[0])
        ok_mix = abs(slope) <= 0.1

        ok = ok_iid and ok_copy and ok_mix
        acceptance_log("7. dependency matrix: identity / copy / mixing", ok,
                       f"mixing-norm slope {slope:.3f}")
        assert ok


class TestCriterion8:
    def test_kl_chain_rule(self, acceptance_log):
        """Identical-kernel Gaussian chains reduce to the initial KL for
        every horizon; the finite branch matches path enumeration."""
        worst_gauss = 0.0
        for T in range(1, 21):
            steps = T - 1
            coeff = np.full(steps, 0.5)
            ones = np.ones(steps)
            p = GaussianLinearChain(10.0, 1.0, coeff, coeff, ones)
            q = GaussianLinearChain(0.0, 1.0, coeff, coeff, ones)
            worst_gauss = max(worst_gauss, abs(kl_chain(p, q) - 50.0))
        ok_gauss = worst_gauss <= 1e-9

        rng = np.random.default_rng(8)
        worst_finite = 0.0
        for _ in range(50):
            init_p = rng.dirichlet(np.ones(2))
            init_q = rng.dirichlet(np.ones(2))
            kp = rng.dirichlet(np.ones(2), size=(3, 2))
            kq = rng.dirichlet(np.ones(2), size=(3, 2))
            p = FiniteChain(init=init_p, kernels=kp)
            q = FiniteChain(init=init_q, kernels=kq)
            worst_finite = max(worst_finite,
                               abs(kl_chain(p, q) - kl_finite_enumerated(p, q)))
        ok_finite = worst_finite <= 1e-12
        ok = ok_gauss and ok_finite
        acceptance_log("8. KL chain rule: Gaussian reduction and enumeration", ok,
                       f"gauss gap {worst_gauss:.1e}, finite gap {worst_finite:.1e}")
        assert ok


class TestCriterion9:
    def test_prediction_bound_dominates(self, acceptance_log, tmp_path):
        """Assembled prediction bound covers the measured error on every
        known-truth configuration."""
        wins = 0
        n = 50
        for seed in range(n):
            r = bounds_report(ExperimentConfig(preset="bounds-report",
                                               seed=seed,
                                               out_dir=str(tmp_path / str(seed))),
                              seed=seed)
            wins += r["summary"]["dominates"]
        ok = wins == n
        acceptance_log("9a. prediction bound dominates measured error", ok,
                       f"{wins}/{n} configurations")
        assert ok

    def test_generalization_bound_dominates(self, acceptance_log):
        """Offline bound covers the measured generalization error in at
        least 95% of replications (expectation-level bound)."""
        from metalms.experiments import rate_check_spec
        spec = rate_check_spec()
        T, n_reps = 256, 200
        wins = 0
        for rep in range(n_reps):
            traj = simulate_target(spec, 2 * T, seed=rep)
            train = S.MultiTrajectoryDataset(
                spec=spec,
                trajectories=[S.Trajectory(x=traj.x[:T], y=traj.y[:T])],
                seed=rep)
            est = grid_search_nls(train, spec.box, 400)
            fresh = simulate_target(spec, T, seed=100_000 + rep)
            gap = (spec.family.phi_path(est.alpha_hat, fresh.x)[:, 0]
                   - spec.family.phi_path(spec.alpha_star, fresh.x)[:, 0])
            measured = float(np.mean(gap ** 2))
            inp = BoundInputs(
                lipschitz=spec.alpha_lipschitz, dim_alpha=1,
                box_radius=spec.box.radius, n_traj=1, horizon=T,
                b1=2.0, b2=0.0, b1p=2.0, b2p=0.0,
                sigma_v=spec.noise.sub_gaussian_sigma,
                eps_star=est.eps_cert, kl_shift=0.0)
            wins += generalization_bound(inp).total >= measured
        ok = wins >= 0.95 * n_reps
        acceptance_log("9b. generalization bound dominates measured error", ok,
                       f"{wins}/{n_reps} replications")
        assert ok


class TestCriterion10:
    def test_asymptotic_optimality_window(self, acceptance_log, tmp_path):
        """Vanishing drift, exact offline parameter, bounded
        martingale-difference noise: the mean error at T = 20000 lands in
        [sigma_inf^2, sigma_sup^2 + eps + 0.05]."""
        cfg = ExperimentConfig(preset="theorem37-check", seed=7,
                               out_dir=str(tmp_path), replications=24,
                               horizon=20000)
        r = theorem37_check(cfg)
        s = r["summary"]
        ok = s["window_lo"] <= s["mean_J"] <= s["window_hi"]
        acceptance_log("10. asymptotic-optimality window", ok,
                       f"mean J {s['mean_J']:.4f} in [{s['window_lo']:.2f}, "
                       f"{s['window_hi']:.2f}]")
        assert ok


class TestCriterion11:
    def test_martingale_offset_expectation_bound(self, acceptance_log):
        """Monte Carlo mean of the realised offset stays below the
        assembled expectation bound for three (N1, T) splits."""
        ok_all = True
        details = []
        for n_traj, T in ((1, 1024), (4, 256), (16, 64)):
            spec = S.SystemSpec(
                family=S.LinearScalarFamily(),
                box=S.CompactBox([0.0], [4.0]),
                alpha_star=[2.0],
                beta_schedule=S.ConstantSchedule([1.0]),
                regressor=S.ExogenousIIDRegressor(kind="uniform", scale=2.0),
                noise=S.UniformNoise(1.0),
                ball=S.BallDomain(2.0),
                feature_bound=8.0, output_bound=8.0,
                alpha_lipschitz=2.0,
            )
            offsets = np.empty(200)
            for rep in range(200):
                ds = simulate_source(spec, n_traj, T, seed=rep)
                est = grid_search_nls(ds, spec.box, 200)
                offsets[rep] = martingale_offset(ds, est.alpha_hat)
            inp = BoundInputs(lipschitz=2.0, dim_alpha=1, box_radius=2.0,
                              n_traj=n_traj, horizon=T, sigma_v=1.0)
            res = generalization_bound(inp)
            cap = res.c0 * 1.0 * math.log(n_traj * T) / (n_traj * T)
            ok = float(offsets.mean()) <= cap
            ok_all &= ok
            details.append(f"({n_traj},{T}): {offsets.mean():.2e} <= {cap:.2e}")
        acceptance_log("11. martingale-offset expectation bound", ok_all,
                       "; ".join(details))
        assert ok_all
