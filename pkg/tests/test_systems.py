import math
from dataclasses import replace

import numpy as np
import pytest

from metalms import systems as S
from metalms.errors import SimulationFault


def linear_scalar_spec(alpha=2.0, beta=1.0, noise=None, regressor=None,
                       box=(0.0, 4.0), lipschitz=3.0):
    return S.SystemSpec(
        family=S.LinearScalarFamily(),
        box=S.CompactBox([box[0]], [box[1]]),
        alpha_star=[alpha],
        beta_schedule=S.ConstantSchedule([beta]),
        regressor=regressor or S.DeterministicRampRegressor(),
        noise=noise or S.ZeroNoise(),
        ball=S.BallDomain(abs(beta) + 1.0),
        feature_bound=1e6,
        output_bound=1e6,
        alpha_lipschitz=lipschitz,
    )


class TestDomains:
    def test_box_radius_is_half_diameter(self):
        box = S.CompactBox([0.0, 0.0], [3.0, 4.0])
        assert box.radius == 2.5

    def test_box_rejects_inverted_bounds(self):
        with pytest.raises(ValueError):
            S.CompactBox([1.0], [0.0])

    def test_grid_is_lexicographic_and_h_is_half_cell_diagonal(self):
        box = S.CompactBox([0.0, 0.0], [1.0, 2.0])
        points, h = box.grid(2)
        assert points.shape == (9, 2)
        np.testing.assert_allclose(points[0], [0.0, 0.0])
        np.testing.assert_allclose(points[1], [0.0, 1.0])   # last axis fastest
        np.testing.assert_allclose(points[3], [0.5, 0.0])
        assert h == pytest.approx(0.5 * math.hypot(0.5, 1.0))

    def test_ball_projection_interior_and_scaling(self):
        ball = S.BallDomain(1.0)
        np.testing.assert_allclose(ball.project([0.3, 0.4]), [0.3, 0.4])
        np.testing.assert_allclose(ball.project([3.0, 4.0]), [0.6, 0.8])

    def test_degenerate_ball(self):
        np.testing.assert_allclose(S.BallDomain(0.0).project([0.0, 0.0]), [0.0, 0.0])


class TestEvalModel:
    def test_linear_scalar_product(self):
        spec = linear_scalar_spec()
        assert S.eval_model(spec, [2.0], [1.0], [3.0], 0) == 6.0

    def test_sigmoid_drift_matches_hand_formula(self):
        spec = S.SystemSpec(
            family=S.SigmoidDriftFamily(),
            box=S.CompactBox([-3.5, -5.5], [6.5, 4.5]),
            alpha_star=[1.5, -0.5],
            beta_schedule=S.SigmoidDriftSchedule(),
            regressor=S.SigmoidMarkovRegressor(),
            noise=S.GaussianNoise(1.0),
            ball=S.BallDomain(1e4),
            feature_bound=math.sqrt(2.0),
            output_bound=25.0,
        )
        t, x = 7, 0.83
        a_t, d_t = spec.beta_schedule.beta(t)
        expected = a_t / (t + math.exp(-(1.5 * x - 0.5))) + d_t
        got = S.eval_model(spec, [1.5, -0.5], [a_t, d_t], [x], t)
        assert got == pytest.approx(expected, rel=1e-14)

    def test_zero_coefficients_give_zero(self):
        spec = linear_scalar_spec()
        assert S.eval_model(spec, [1.7], [0.0], [9.0], 3) == 0.0

    def test_alpha_outside_box_rejected(self):
        spec = linear_scalar_spec()
        with pytest.raises(ValueError):
            S.eval_model(spec, [5.0], [1.0], [1.0], 0)

    def test_dimension_mismatch_rejected(self):
        spec = linear_scalar_spec()
        with pytest.raises(ValueError):
            S.eval_model(spec, [1.0, 2.0], [1.0], [1.0], 0)


class TestSimulateSource:
    def test_noiseless_ramp_recursion(self):
        ds = S.simulate_source(linear_scalar_spec(), 1, 3, seed=11)
        np.testing.assert_allclose(ds.trajectories[0].y, [0.0, 2.0, 4.0])

    def test_same_seed_bit_identical(self):
        spec = linear_scalar_spec(noise=S.GaussianNoise(1.0),
                                  regressor=S.ExogenousIIDRegressor())
        a = S.simulate_source(spec, 2, 50, seed=5)
        b = S.simulate_source(spec, 2, 50, seed=5)
        for ta, tb in zip(a, b):
            assert np.array_equal(ta.x, tb.x)
            assert np.array_equal(ta.y, tb.y)
            assert np.array_equal(ta.w, tb.w)

    def test_distinct_substreams_across_trajectories(self):
        spec = linear_scalar_spec(noise=S.GaussianNoise(1.0),
                                  regressor=S.ExogenousIIDRegressor())
        ds = S.simulate_source(spec, 3, 40, seed=5)
        for i in range(3):
            for j in range(i + 1, 3):
                assert not np.array_equal(ds.trajectories[i].w, ds.trajectories[j].w)

    def test_growing_dataset_keeps_existing_streams(self):
        spec = linear_scalar_spec(noise=S.GaussianNoise(1.0),
                                  regressor=S.ExogenousIIDRegressor())
        small = S.simulate_source(spec, 2, 30, seed=9)
        big = S.simulate_source(spec, 4, 30, seed=9)
        for i in range(2):
            assert np.array_equal(small.trajectories[i].y, big.trajectories[i].y)

    def test_output_bound_breach_reports_step(self):
        spec = linear_scalar_spec()
        spec = replace(spec, output_bound=3.0)
        with pytest.raises(SimulationFault) as err:
            S.simulate_source(spec, 1, 5, seed=0)
        assert err.value.step == 2   # y = 2t crosses 3 at t = 2


class TestSimulateTarget:
    def test_hidden_truth_consistency(self):
        spec = linear_scalar_spec(noise=S.GaussianNoise(1.0),
                                  regressor=S.ExogenousIIDRegressor())
        traj = S.simulate_target(spec, 100, seed=3)
        phi = spec.family.phi_path(spec.alpha_star, traj.x)
        f = np.einsum("tm,tm->t", traj.beta, phi)
        np.testing.assert_allclose(traj.y - f, traj.w, rtol=0, atol=1e-15)

    def test_noiseless_constant_beta_equals_eval_model(self):
        spec = linear_scalar_spec()
        traj = S.simulate_target(spec, 4, seed=0)
        for t in range(4):
            assert traj.y[t] == S.eval_model(spec, [2.0], [1.0], traj.x[t], t)

    def test_schedule_outside_ball_reports_step(self):
        spec = linear_scalar_spec()
        bad = replace(spec, beta_schedule=S.ExpDecaySchedule([0.0], [5.0], 0.5))
        with pytest.raises(SimulationFault) as err:
            S.simulate_target(bad, 5, seed=0)
        assert err.value.step == 0

    def test_drift_delta_matches_recomputation(self):
        sched = S.SigmoidDriftSchedule()
        T = 200
        path = sched.path(T + 1)
        manual = math.sqrt(np.mean(np.sum(np.diff(path, axis=0) ** 2, axis=1)))
        assert S.drift_delta(sched, T) == pytest.approx(manual, rel=1e-14)

    def test_truncated_noise_respects_cap(self):
        noise = S.TruncatedGaussianNoise(sigma=1.0, bound=1.5)
        spec = linear_scalar_spec(noise=noise, regressor=S.ExogenousIIDRegressor())
        traj = S.simulate_target(spec, 500, seed=8)
        assert np.max(np.abs(traj.w)) <= 1.5


class TestBenchmarkSystem:
    """The sigmoid-drift benchmark: clock starts at 1, features stay small."""

    def test_schedule_clock_reuses_first_value(self):
        sched = S.SigmoidDriftSchedule()
        np.testing.assert_allclose(sched.beta(0), sched.beta(1))
        a1, d1 = sched.beta(1)
        s1 = 1.0 / (1.0 + math.exp(-1.0))
        assert a1 == pytest.approx(-50.0 * s1 + 1.0)
        assert d1 == pytest.approx(15.0 * s1 + 2.0 / math.log(2.0))

    def test_schedule_drifts_toward_small_values(self):
        sched = S.SigmoidDriftSchedule()
        a, d = sched.beta(5000)
        assert abs(a) < 0.05 and 0.0 < d < 0.3

    def test_feature_norm_below_sqrt_two(self):
        fam = S.SigmoidDriftFamily()
        rng = np.random.default_rng(0)
        for t in rng.integers(0, 3000, size=50):
            x = rng.normal(0, 50, size=1)
            phi = fam.phi(int(t), np.array([1.5, -0.5]), x)
            assert np.linalg.norm(phi) < math.sqrt(2.0)

    def test_noise_variances(self):
        assert S.UniformNoise(math.sqrt(3.0)).variance == pytest.approx(1.0)
        tg = S.TruncatedGaussianNoise(sigma=1.0, bound=1.5)
        draws = tg.sample(np.random.default_rng(0), 200000)
        assert float(np.var(draws)) == pytest.approx(tg.variance, rel=0.02)


class TestEpsilonPath:
    def test_zero_when_estimate_is_truth(self):
        spec = linear_scalar_spec(noise=S.GaussianNoise(1.0),
                                  regressor=S.ExogenousIIDRegressor())
        traj = S.simulate_target(spec, 50, seed=4)
        np.testing.assert_allclose(S.epsilon_path(spec, traj, spec.alpha_star), 0.0)

    def test_matches_manual_difference(self):
        spec = linear_scalar_spec(noise=S.GaussianNoise(1.0),
                                  regressor=S.ExogenousIIDRegressor())
        traj = S.simulate_target(spec, 50, seed=4)
        eps = S.epsilon_path(spec, traj, [2.5])
        manual = traj.beta[:, 0] * (2.0 - 2.5) * traj.x[:, 0]
        np.testing.assert_allclose(eps, manual, rtol=1e-13)
