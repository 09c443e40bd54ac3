import math
from dataclasses import replace

import numpy as np
import pytest

from metalms import systems as S
from metalms.bounds import (BoundInputs, aggregation_constant,
                            covering_constant, excitation_margin,
                            generalization_bound, martingale_offset,
                            prediction_bound, radius_exponent)
from metalms.offline import grid_search_nls
from tests.test_systems import linear_scalar_spec


def reference_gen_bound(L, n, R, b1, b2, b1p, b2p, sigma_v, eps_star, kl,
                        N1, T, q=1):
    """Straight-line reimplementation of the four-term formula, kept
    independent of the package code path."""
    s8 = 8.0 ** 0.5
    C = 8.0 * s8 * L * R * (6.0 * s8 * L * R) ** n
    gamma0 = 32.0 * b1 * L * L * R * R * (n + 3)
    NT = N1 * T
    r2 = gamma0 * math.log(NT) / (N1 * T ** (1 - b2))
    pa = min(1.0, math.exp(math.log(C) - 0.5 * (n + 1) * math.log(r2)
                           - N1 * r2 * T ** (1 - b2) / (32 * b1 * L * L * R * R)))
    rate = 2.0 * (4.0 * L * L * R * R * pa + r2)
    m_raw = (4.0 * sigma_v * q / NT + NT ** -2.0
             + 4.0 * sigma_v ** 2 * (n + 1) * math.log(C * NT) / NT)
    offset = 16.0 * m_raw
    shift = 8.0 * L * L * R * R * b1p * kl / T ** (1 - b2p)
    return rate + offset + shift + 16.0 * eps_star


def basic_inputs(**kw):
    args = dict(lipschitz=1.0, dim_alpha=2, box_radius=5.0, n_traj=4,
                horizon=256, sigma_v=1.0, kl_shift=50.0, feature_bound=1.0,
                ball_radius=1.0, gamma=0.5, gain_offset=10.0)
    args.update(kw)
    return BoundInputs(**args)


class TestGeneralizationBound:
    def test_matches_independent_reimplementation(self):
        inp = basic_inputs()
        got = generalization_bound(inp)
        want = reference_gen_bound(1.0, 2, 5.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0,
                                   50.0, 4, 256)
        assert got.total == pytest.approx(want, rel=1e-12)

    def test_clean_case_scales_inversely_with_data(self):
        # eps* = KL = 0, b2 = 0: doubling N1 shrinks the bound at least
        # as fast as the log factor allows
        a = generalization_bound(basic_inputs(kl_shift=0.0, n_traj=4)).total
        b = generalization_bound(basic_inputs(kl_shift=0.0, n_traj=8)).total
        assert b < a
        ratio = b / a
        log_ratio = math.log(8 * 256) / math.log(4 * 256)
        assert ratio <= 0.5 * log_ratio * 1.0001

    def test_monotone_in_each_penalty(self):
        base = generalization_bound(basic_inputs()).total
        assert generalization_bound(basic_inputs(eps_star=0.3)).total > base
        assert generalization_bound(basic_inputs(kl_shift=80.0)).total > base
        assert generalization_bound(basic_inputs(lipschitz=1.5)).total > base
        assert generalization_bound(basic_inputs(box_radius=6.0)).total > base

    def test_empirical_offset_replaces_expectation_slot(self):
        inp = basic_inputs()
        res = generalization_bound(inp, empirical_offset=0.01)
        assert res.offset_term == pytest.approx(0.16)
        neg = generalization_bound(inp, empirical_offset=-3.0)
        assert neg.offset_term == 0.0   # supremum is nonnegative

    def test_pre_asymptotic_flag_clears_with_data(self):
        tiny = basic_inputs(n_traj=1, horizon=2)
        big = basic_inputs(n_traj=64, horizon=4096)
        assert generalization_bound(tiny).pre_asymptotic
        assert not generalization_bound(big).pre_asymptotic

    def test_input_validation(self):
        with pytest.raises(ValueError):
            basic_inputs(b2=1.0)
        with pytest.raises(ValueError):
            basic_inputs(lipschitz=0.0)
        with pytest.raises(ValueError):
            basic_inputs(eps_star=-0.1)


class TestPredictionBound:
    def test_aggregation_constant_hand_value(self):
        assert aggregation_constant(1.0, 0.5, 5.0) == pytest.approx(3.1104)

    def test_noise_coefficient_limits_to_four(self):
        prev = math.inf
        for d in (10.0, 100.0, 1000.0, 100000.0):
            inp = basic_inputs(gain_offset=d, sigma_t2=1.0)
            res = prediction_bound(inp)
            c = res.coefficients["c_noise"]
            assert 4.0 < c < prev
            prev = c
        assert prev == pytest.approx(4.0, abs=1e-2)

    def test_noise_term_survives_alone(self):
        # no drift, no mismatch, long horizon: total -> c_noise * sigma_t2
        inp = basic_inputs(kl_shift=0.0, l1=0.0, sigma_t2=2.0,
                           horizon=10 ** 7, n_traj=1)
        res = prediction_bound(inp)
        assert res.total == pytest.approx(
            res.coefficients["c_noise"] * 2.0, rel=1e-3)

    def test_rejects_gain_offset_at_floor(self):
        with pytest.raises(ValueError):
            prediction_bound(basic_inputs(gain_offset=4.0))  # A²/(1-γ)² = 4

    def test_total_nonincreasing_in_trajectories(self):
        vals = [prediction_bound(basic_inputs(l1=1.0, n_traj=n)).total
                for n in (2, 4, 8, 16)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_n_d_is_max_nonnoise_coefficient(self):
        res = prediction_bound(basic_inputs())
        c = res.coefficients
        assert res.n_d == max(c["c_eps"], c["c_drift"])


class TestMartingaleOffset:
    def spec_and_data(self, seed=0, noise=None):
        spec = linear_scalar_spec(noise=noise or S.UniformNoise(1.0),
                                  regressor=S.ExogenousIIDRegressor())
        return spec, S.simulate_source(spec, 2, 64, seed=seed)

    def test_zero_at_truth(self):
        spec, ds = self.spec_and_data()
        assert martingale_offset(ds, spec.alpha_star) == 0.0

    def test_noiseless_is_nonpositive(self):
        spec, ds = self.spec_and_data(noise=S.ZeroNoise())
        assert martingale_offset(ds, [2.5]) <= 0.0

    def test_matches_direct_sum(self):
        spec, ds = self.spec_and_data(seed=3)
        alpha_hat = np.array([2.3])
        total_inner, total_sq, count = 0.0, 0.0, 0
        for traj in ds:
            h = (2.3 - 2.0) * traj.x[:, 0]     # f(alpha_hat) - f(alpha*)
            total_inner += float(traj.w @ h)
            total_sq += float(h @ h)
            count += traj.horizon
        want = 4.0 * total_inner / count - total_sq / count
        assert martingale_offset(ds, alpha_hat) == pytest.approx(want, rel=1e-12)

    def test_requires_hidden_truth(self):
        spec, ds = self.spec_and_data()
        stripped = S.MultiTrajectoryDataset(
            spec=spec,
            trajectories=[S.Trajectory(x=t.x, y=t.y) for t in ds],
            seed=0)
        with pytest.raises(ValueError):
            martingale_offset(stripped, [2.1])


class TestExcitationMargin:
    def test_linear_model_margin_independent_of_grid(self):
        # f = alpha x: the sensitivity is x_t regardless of alpha'
        spec = linear_scalar_spec(noise=S.UniformNoise(0.5),
                                  regressor=S.ExogenousIIDRegressor())
        ds = S.simulate_source(spec, 1, 100, seed=1)
        x = ds.trajectories[0].x[:, 0]
        want = float(np.sum(x * x))
        margin, log_t = excitation_margin(spec, ds, [[0.7], [1.9], [3.3]])
        assert margin == pytest.approx(want, rel=1e-9)
        assert log_t == pytest.approx(math.log(100))

    def test_quadratic_family_matches_closed_form(self):
        # f = alpha^2 x has averaged sensitivity (alpha* + alpha') x
        class QuadraticFamily:
            name = "quadratic"
            dim_alpha = 1
            dim_beta = 1
            dim_x = 1
            def phi(self, t, alpha, x):
                return np.atleast_1d(alpha[0] ** 2 * x[0])
            def phi_path(self, alpha, x, t0=0):
                return np.asarray(x, dtype=float).reshape(-1, 1) * alpha[0] ** 2
        spec = S.SystemSpec(
            family=QuadraticFamily(), box=S.CompactBox([1.0], [2.0]),
            alpha_star=[1.5], beta_schedule=S.ConstantSchedule([1.0]),
            regressor=S.ExogenousIIDRegressor(kind="uniform", scale=1.0),
            noise=S.ZeroNoise(), ball=S.BallDomain(2.0),
            feature_bound=10.0, output_bound=10.0)
        ds = S.simulate_source(spec, 1, 50, seed=2)
        x = ds.trajectories[0].x[:, 0]
        for ap in (1.0, 1.7, 2.0):
            margin, _ = excitation_margin(spec, ds, [[ap]])
            want = float(np.sum(((1.5 + ap) * x) ** 2))
            assert margin == pytest.approx(want, rel=1e-6)

    def test_finite_differences_match_analytic_gradient(self):
        from metalms.experiments import benchmark_source_spec
        spec = benchmark_source_spec()
        ds = S.simulate_source(spec, 1, 40, seed=7)
        grid = [[1.0, -1.0], [2.5, 0.5]]
        analytic, _ = excitation_margin(spec, ds, grid)
        numeric, _ = excitation_margin(spec, ds, grid, use_analytic=False)
        assert numeric == pytest.approx(analytic, rel=1e-6)

    def test_margin_grows_linearly_for_persistent_excitation(self):
        spec = linear_scalar_spec(noise=S.UniformNoise(0.5),
                                  regressor=S.ExogenousIIDRegressor())
        sizes = [200, 400, 800]
        margins = []
        for T in sizes:
            ds = S.simulate_source(spec, 1, T, seed=5)
            m, _ = excitation_margin(spec, ds, [[1.0]])
            margins.append(m)
        slope = np.polyfit(sizes, margins, 1)[0]
        assert margins[0] > 0
        # E x^2 = 1 for the standard normal regressor
        assert slope == pytest.approx(1.0, rel=0.25)


class TestDominanceSmoke:
    """Light dominance spot-checks; the statistical versions live in the
    acceptance suite."""

    def test_gen_bound_dominates_measured_error(self):
        spec = linear_scalar_spec(noise=S.UniformNoise(1.0),
                                  regressor=S.ExogenousIIDRegressor())
        ds = S.simulate_source(spec, 4, 64, seed=9)
        x = np.concatenate([t.x[:, 0] for t in ds])
        spec_l = replace(spec, alpha_lipschitz=float(np.max(np.abs(x))))
        ds = S.MultiTrajectoryDataset(spec=spec_l, trajectories=ds.trajectories,
                                      seed=9)
        est = grid_search_nls(ds, spec_l.box, 60)
        fresh = S.simulate_source(spec_l, 1, 64, seed=1009).trajectories[0]
        gap = (spec_l.family.phi_path(est.alpha_hat, fresh.x)[:, 0]
               - spec_l.family.phi_path(spec_l.alpha_star, fresh.x)[:, 0])
        measured = float(np.mean(gap ** 2))
        inp = BoundInputs(lipschitz=spec_l.alpha_lipschitz, dim_alpha=1,
                          box_radius=spec_l.box.radius, n_traj=4, horizon=64,
                          sigma_v=1.0, eps_star=est.eps_cert)
        assert generalization_bound(inp).total >= measured
