"""Flat key-value configuration (INI sections) for systems, predictors,
chains and bound inputs.

The registry below covers the shipped families, schedules, regressors
and noise laws; a system section round-trips through
``system_to_config``/``system_from_config``.
"""

import configparser

import numpy as np

from . import systems as S
from .bounds import BoundInputs
from .divergence import FiniteChain, GaussianLinearChain
from .online import PredictorConfig, default_initial_estimates

__all__ = [
    "read_config",
    "parse_vector",
    "format_vector",
    "system_from_config",
    "system_to_config",
    "predictor_from_config",
    "chain_from_config",
    "bound_inputs_from_config",
]


def read_config(path):
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise OSError(f"cannot read config {path}")
    return cp


def parse_vector(text):
    return np.array([float(tok) for tok in str(text).replace(",", " ").split()])


def format_vector(vec):
    return " ".join(f"{float(v):.17g}" for v in np.atleast_1d(vec))


# ---------------------------------------------------------------------------
# System registry


def _family_from(cfg):
    name = cfg.get("family", "linear-scalar")
    if name == "linear-scalar":
        return S.LinearScalarFamily()
    if name == "diagonal-linear":
        return S.DiagonalLinearFamily(dim=int(cfg.get("family_dim", 1)))
    if name == "sigmoid-drift":
        return S.SigmoidDriftFamily()
    if name == "tanh":
        return S.TanhFamily(with_bias=str(cfg.get("family_with_bias", "false")).lower() == "true")
    raise ValueError(f"unknown family {name!r}")


def _family_to(fam):
    out = {"family": fam.name}
    if fam.name == "diagonal-linear":
        out["family_dim"] = str(fam.dim)
    if fam.name == "tanh":
        out["family_with_bias"] = str(fam.with_bias).lower()
    return out


def _schedule_from(cfg):
    name = cfg.get("schedule", "constant")
    if name == "constant":
        return S.ConstantSchedule(parse_vector(cfg["schedule_value"]))
    if name == "exp-decay":
        return S.ExpDecaySchedule(parse_vector(cfg["schedule_base"]),
                                  parse_vector(cfg["schedule_amp"]),
                                  float(cfg["schedule_rho"]))
    if name == "sinusoid":
        return S.SinusoidSchedule(parse_vector(cfg["schedule_base"]),
                                  parse_vector(cfg["schedule_amp"]),
                                  float(cfg["schedule_omega"]),
                                  float(cfg.get("schedule_phase", 0.0)))
    if name == "sigmoid-drift":
        return S.SigmoidDriftSchedule()
    raise ValueError(f"unknown schedule {name!r}")


def _schedule_to(sch):
    out = {"schedule": sch.name}
    if sch.name == "constant":
        out["schedule_value"] = format_vector(sch.value)
    elif sch.name == "exp-decay":
        out.update(schedule_base=format_vector(sch.base),
                   schedule_amp=format_vector(sch.amp),
                   schedule_rho=f"{sch.rho:.17g}")
    elif sch.name == "sinusoid":
        out.update(schedule_base=format_vector(sch.base),
                   schedule_amp=format_vector(sch.amp),
                   schedule_omega=f"{sch.omega:.17g}",
                   schedule_phase=f"{sch.phase:.17g}")
    elif sch.name == "array":
        raise ValueError("array schedules are not serialisable to config")
    return out


def _regressor_from(cfg):
    name = cfg.get("regressor", "exogenous-iid")
    if name == "exogenous-iid":
        return S.ExogenousIIDRegressor(dim=int(cfg.get("regressor_dim", 1)),
                                       kind=cfg.get("regressor_kind", "gaussian"),
                                       mean=float(cfg.get("regressor_mean", 0.0)),
                                       scale=float(cfg.get("regressor_scale", 1.0)))
    if name == "ramp":
        return S.DeterministicRampRegressor()
    if name == "sigmoid-markov":
        return S.SigmoidMarkovRegressor(
            scale=float(cfg.get("regressor_scale", 100.0)),
            init_mean=float(cfg.get("regressor_init_mean", 10.0)),
            init_std=float(cfg.get("regressor_init_std", 1.0)),
            innovation_std=float(cfg.get("regressor_innovation_std", 1.0)))
    if name == "lagged-ar":
        return S.LaggedARRegressor(
            p_lags=int(cfg.get("regressor_p_lags", 1)),
            q_lags=int(cfg.get("regressor_q_lags", 0)),
            input_std=float(cfg.get("regressor_input_std", 1.0)),
            init_low=float(cfg.get("regressor_init_low", 0.0)),
            init_high=float(cfg.get("regressor_init_high", 0.0)))
    raise ValueError(f"unknown regressor {name!r}")


def _regressor_to(reg):
    out = {"regressor": reg.name}
    if reg.name == "exogenous-iid":
        out.update(regressor_dim=str(reg.dim), regressor_kind=reg.kind,
                   regressor_mean=f"{reg.mean:.17g}", regressor_scale=f"{reg.scale:.17g}")
    elif reg.name == "sigmoid-markov":
        out.update(regressor_scale=f"{reg.scale:.17g}",
                   regressor_init_mean=f"{reg.init_mean:.17g}",
                   regressor_init_std=f"{reg.init_std:.17g}",
                   regressor_innovation_std=f"{reg.innovation_std:.17g}")
    elif reg.name == "lagged-ar":
        out.update(regressor_p_lags=str(reg.p_lags), regressor_q_lags=str(reg.q_lags),
                   regressor_input_std=f"{reg.input_std:.17g}",
                   regressor_init_low=f"{reg.init_low:.17g}",
                   regressor_init_high=f"{reg.init_high:.17g}")
    return out


def _noise_from(cfg):
    name = cfg.get("noise", "gaussian")
    if name == "zero":
        return S.ZeroNoise()
    if name == "gaussian":
        return S.GaussianNoise(sigma=float(cfg.get("noise_sigma", 1.0)))
    if name == "truncated-gaussian":
        return S.TruncatedGaussianNoise(sigma=float(cfg.get("noise_sigma", 1.0)),
                                        bound=float(cfg.get("noise_bound", 2.0)))
    if name == "uniform":
        return S.UniformNoise(half_width=float(cfg.get("noise_half_width", 1.0)))
    raise ValueError(f"unknown noise law {name!r}")


def _noise_to(noise):
    out = {"noise": noise.name}
    if noise.name == "gaussian":
        out["noise_sigma"] = f"{noise.sigma:.17g}"
    elif noise.name == "truncated-gaussian":
        out.update(noise_sigma=f"{noise.sigma:.17g}", noise_bound=f"{noise.bound:.17g}")
    elif noise.name == "uniform":
        out["noise_half_width"] = f"{noise.half_width:.17g}"
    return out


def system_from_config(cfg):
    spec = S.SystemSpec(
        family=_family_from(cfg),
        box=S.CompactBox(parse_vector(cfg["box_lo"]), parse_vector(cfg["box_hi"])),
        alpha_star=parse_vector(cfg["alpha_star"]),
        beta_schedule=_schedule_from(cfg),
        regressor=_regressor_from(cfg),
        noise=_noise_from(cfg),
        ball=S.BallDomain(float(cfg["ball_radius"])),
        feature_bound=float(cfg["feature_bound"]),
        output_bound=float(cfg["output_bound"]),
        alpha_lipschitz=(float(cfg["alpha_lipschitz"])
                         if cfg.get("alpha_lipschitz") not in (None, "", "none") else None),
        spec_id=cfg.get("id", "custom"),
    )
    return spec


def system_to_config(spec):
    out = {"id": spec.spec_id}
    out.update(_family_to(spec.family))
    out["alpha_star"] = format_vector(spec.alpha_star)
    out["box_lo"] = format_vector(spec.box.lo)
    out["box_hi"] = format_vector(spec.box.hi)
    out.update(_schedule_to(spec.beta_schedule))
    out.update(_regressor_to(spec.regressor))
    out.update(_noise_to(spec.noise))
    out["ball_radius"] = f"{spec.ball.radius:.17g}"
    out["feature_bound"] = f"{spec.feature_bound:.17g}"
    out["output_bound"] = f"{spec.output_bound:.17g}"
    if spec.alpha_lipschitz is not None:
        out["alpha_lipschitz"] = f"{spec.alpha_lipschitz:.17g}"
    return out


# ---------------------------------------------------------------------------
# Predictor


def predictor_from_config(cfg, dim_beta, rng):
    """Build a PredictorConfig; initial estimates come from the informed
    value plus seeded draws unless given explicitly."""
    n_models = int(cfg.get("n_models", 1))
    ball = S.BallDomain(float(cfg["ball_radius"]))
    informed = parse_vector(cfg.get("informed_beta", " ".join(["0"] * dim_beta)))
    inits = default_initial_estimates(
        informed, n_models, ball, rng,
        spread=float(cfg.get("init_spread", 1.0)),
        center=float(cfg.get("init_center", 0.0)))
    lr = cfg.get("learning_rate")
    m0 = cfg.get("init_envelope")
    return PredictorConfig(
        n_models=n_models,
        ball_radius=ball.radius,
        feature_bound=float(cfg["feature_bound"]),
        output_bound=float(cfg["output_bound"]),
        noise_bound=float(cfg.get("noise_bound", "inf")),
        gain_offset=float(cfg["gain_offset"]),
        gamma=float(cfg.get("gamma", 0.5)),
        learning_rate=float(lr) if lr not in (None, "", "auto") else None,
        init_estimates=inits,
        init_envelope=float(m0) if m0 not in (None, "", "auto") else None,
    )


# ---------------------------------------------------------------------------
# Chains and bound inputs


def _finite_chain_from(cfg):
    init = parse_vector(cfg["init"])
    horizon = int(cfg["horizon"])
    if "kernel" in cfg:
        rows = [parse_vector(r) for r in cfg["kernel"].split(";")]
        kernel = np.array(rows)
        kernels = np.repeat(kernel[None, :, :], horizon - 1, axis=0)
    else:
        kernels = np.array([
            [parse_vector(r) for r in cfg[f"kernel_{t}"].split(";")]
            for t in range(horizon - 1)
        ])
    return FiniteChain(init=init, kernels=kernels)


def _gaussian_chain_from(cfg):
    n_steps = int(cfg["horizon"]) - 1
    def vec(key, default):
        if key in cfg:
            v = parse_vector(cfg[key])
            return np.full(n_steps, v[0]) if v.size == 1 else v
        return np.full(n_steps, default)
    return GaussianLinearChain(
        init_mean=float(cfg["init_mean"]),
        init_std=float(cfg["init_std"]),
        shifts=vec("shifts", 0.0),
        slopes=vec("slopes", 1.0),
        noise_stds=vec("noise_stds", 1.0),
    )


def chain_from_config(cfg):
    kind = cfg.get("kind", "finite")
    if kind == "finite":
        return _finite_chain_from(cfg)
    if kind == "gaussian-linear":
        return _gaussian_chain_from(cfg)
    raise ValueError(f"unknown chain kind {kind!r}")


def bound_inputs_from_config(cfg):
    def num(key, default=None):
        if key in cfg:
            return float(cfg[key])
        if default is None:
            raise ValueError(f"bound input {key!r} missing")
        return default
    return BoundInputs(
        lipschitz=num("lipschitz"),
        dim_alpha=int(num("dim_alpha")),
        box_radius=num("box_radius"),
        n_traj=int(num("n_traj")),
        horizon=int(num("horizon")),
        b1=num("b1", 1.0), b2=num("b2", 0.0),
        b1p=num("b1p", 1.0), b2p=num("b2p", 0.0),
        sigma_v=num("sigma_v", 1.0),
        eps_star=num("eps_star", 0.0),
        kl_shift=num("kl_shift", 0.0),
        dim_out=int(num("dim_out", 1)),
        l1=num("l1", 0.0), l0_bar=num("l0_bar", 0.0),
        delta_t=num("delta_t", 0.0), sigma_t2=num("sigma_t2", 0.0),
        feature_bound=num("feature_bound", 1.0),
        ball_radius=num("ball_radius", 1.0),
        gamma=num("gamma", 0.5),
        gain_offset=num("gain_offset", 10.0),
        noise_bound=num("noise_bound", 1.0),
        output_bound=num("output_bound", 1.0),
    )
