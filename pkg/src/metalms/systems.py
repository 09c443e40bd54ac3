"""System families, parameter schedules and trajectory simulation.

A system is the pair of maps

    y[t+1] = beta_t' phi_t(alpha, x_t) + noise,
    x[t+1] = regressor dynamics (t, x_t, innovation, optionally y[t+1]),

where ``alpha`` is the static parameter living in a known compact box and
``beta_t`` is the environmental coefficient vector in a Euclidean ball.
The source system runs a known beta schedule and is sampled in i.i.d.
trajectories for offline fitting; the target system runs an unknown,
drifting schedule and is consumed online.

Array index convention: for a horizon-``T`` path, ``x[t]`` is the
regressor at time ``t`` (t = 0..T-1) and ``y[t]`` stores the output
revealed after it, i.e. the model's ``y_{t+1}``; the same offset applies
to the recorded noise ``w[t]``.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SimulationFault
from .rng import SOURCE_TRAJ, TARGET_TRAJ, substream

__all__ = [
    "CompactBox",
    "BallDomain",
    "SystemSpec",
    "Trajectory",
    "MultiTrajectoryDataset",
    "eval_model",
    "simulate_source",
    "simulate_target",
    "epsilon_path",
    "drift_delta",
    "shifted_sigmoid",
]


# ---------------------------------------------------------------------------
# Domains


@dataclass(frozen=True)
class CompactBox:
    """Axis-aligned compact box for the static parameter."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be 1-d vectors of equal length")
        if np.any(lo > hi):
            raise ValueError("box requires lo <= hi in every coordinate")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ValueError("box bounds must be finite")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    @property
    def radius(self):
        """Half the Euclidean diameter of the box."""
        return 0.5 * float(np.linalg.norm(self.hi - self.lo))

    def contains(self, alpha, tol=1e-12):
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        if alpha.shape != self.lo.shape:
            return False
        return bool(np.all(alpha >= self.lo - tol) and np.all(alpha <= self.hi + tol))

    def corners(self):
        """All 2^n corner points, lexicographic order, shape (2^n, n)."""
        n = self.dim
        out = np.empty((2 ** n, n))
        for j, bits in enumerate(np.ndindex(*([2] * n))):
            out[j] = np.where(np.asarray(bits, dtype=bool), self.hi, self.lo)
        return out

    def grid(self, segments):
        """Uniform grid with ``segments`` cells per dimension.

        Returns the (segments+1)^n node coordinates in lexicographic
        order together with the half cell diagonal h.
        """
        if segments < 1:
            raise ValueError("segments must be >= 1")
        axes = [np.linspace(self.lo[i], self.hi[i], segments + 1) for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=-1)
        h = 0.5 * float(np.linalg.norm((self.hi - self.lo) / segments))
        return points, h

    def sample(self, rng, size):
        """Uniform samples, shape (size, n)."""
        u = rng.uniform(size=(size, self.dim))
        return self.lo + u * (self.hi - self.lo)


@dataclass(frozen=True)
class BallDomain:
    """Euclidean ball {beta : ||beta|| <= radius}."""

    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")

    def contains(self, beta, tol=1e-12):
        return float(np.linalg.norm(beta)) <= self.radius + tol

    def project(self, beta):
        beta = np.asarray(beta, dtype=float)
        norm = float(np.linalg.norm(beta))
        if norm <= self.radius:
            return beta.copy()
        if norm == 0.0:
            return np.zeros_like(beta)
        return beta * (self.radius / norm)


# ---------------------------------------------------------------------------
# Noise laws


class ZeroNoise:
    """Deterministic system: no disturbance."""

    w_max = 0.0
    sub_gaussian_sigma = 0.0
    variance = 0.0
    name = "zero"

    def sample(self, rng, size):
        return np.zeros(size)


@dataclass(frozen=True)
class GaussianNoise:
    """i.i.d. N(0, sigma^2).  Unbounded: w_max is infinite and any
    boundedness-based guarantee is only approximate (flagged upstream)."""

    sigma: float = 1.0
    name = "gaussian"

    @property
    def w_max(self):
        return math.inf

    @property
    def sub_gaussian_sigma(self):
        return self.sigma

    @property
    def variance(self):
        return self.sigma ** 2

    def sample(self, rng, size):
        return rng.normal(0.0, self.sigma, size=size)


@dataclass(frozen=True)
class TruncatedGaussianNoise:
    """N(0, sigma^2) conditioned on |w| <= bound (rejection sampling).

    Keeps w_max exact while staying sub-Gaussian with proxy ``sigma``.
    """

    sigma: float = 1.0
    bound: float = 2.0
    name = "truncated-gaussian"

    @property
    def w_max(self):
        return self.bound

    @property
    def sub_gaussian_sigma(self):
        return self.sigma

    @property
    def variance(self):
        # var of symmetric truncation: sigma^2 (1 - 2 c phi(c) / (2 Phi(c) - 1))
        c = self.bound / self.sigma
        pdf = math.exp(-0.5 * c * c) / math.sqrt(2.0 * math.pi)
        cdf_mass = math.erf(c / math.sqrt(2.0))
        return self.sigma ** 2 * (1.0 - 2.0 * c * pdf / cdf_mass)

    def sample(self, rng, size):
        out = rng.normal(0.0, self.sigma, size=size)
        bad = np.abs(out) > self.bound
        while np.any(bad):
            out[bad] = rng.normal(0.0, self.sigma, size=int(np.sum(bad)))
            bad = np.abs(out) > self.bound
        return out


@dataclass(frozen=True)
class UniformNoise:
    """i.i.d. uniform on [-half_width, half_width]."""

    half_width: float = 1.0
    name = "uniform"

    @property
    def w_max(self):
        return self.half_width

    @property
    def sub_gaussian_sigma(self):
        # Hoeffding proxy for a bounded zero-mean variable.
        return self.half_width

    @property
    def variance(self):
        return self.half_width ** 2 / 3.0

    def sample(self, rng, size):
        return rng.uniform(-self.half_width, self.half_width, size=size)


# ---------------------------------------------------------------------------
# Beta schedules


@dataclass(frozen=True)
class ConstantSchedule:
    value: np.ndarray
    name = "constant"

    def __post_init__(self):
        object.__setattr__(self, "value", np.atleast_1d(np.asarray(self.value, dtype=float)))

    @property
    def dim(self):
        return self.value.size

    def beta(self, t):
        return self.value

    def path(self, T, t0=0):
        return np.tile(self.value, (T, 1))


@dataclass(frozen=True)
class ExpDecaySchedule:
    """beta_t = base + amp * rho^t  (drift dies out geometrically)."""

    base: np.ndarray
    amp: np.ndarray
    rho: float
    name = "exp-decay"

    def __post_init__(self):
        object.__setattr__(self, "base", np.atleast_1d(np.asarray(self.base, dtype=float)))
        object.__setattr__(self, "amp", np.atleast_1d(np.asarray(self.amp, dtype=float)))
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")

    @property
    def dim(self):
        return self.base.size

    def beta(self, t):
        return self.base + self.amp * self.rho ** t

    def path(self, T, t0=0):
        t = np.arange(t0, t0 + T)
        return self.base[None, :] + self.amp[None, :] * (self.rho ** t)[:, None]


@dataclass(frozen=True)
class SinusoidSchedule:
    """beta_t = base + amp * sin(omega t + phase), coordinatewise."""

    base: np.ndarray
    amp: np.ndarray
    omega: float
    phase: float = 0.0
    name = "sinusoid"

    def __post_init__(self):
        object.__setattr__(self, "base", np.atleast_1d(np.asarray(self.base, dtype=float)))
        object.__setattr__(self, "amp", np.atleast_1d(np.asarray(self.amp, dtype=float)))

    @property
    def dim(self):
        return self.base.size

    def beta(self, t):
        return self.base + self.amp * math.sin(self.omega * t + self.phase)

    def path(self, T, t0=0):
        t = np.arange(t0, t0 + T)
        return self.base[None, :] + self.amp[None, :] * np.sin(self.omega * t + self.phase)[:, None]


def shifted_sigmoid(t, z):
    """1 / (t + exp(-z)), elementwise; the time-indexed squashing map."""
    return 1.0 / (t + np.exp(-np.asarray(z, dtype=float)))


def _bench_clock(t):
    # The published coefficient formulas contain 1/t^2 and 2/log(t+1),
    # undefined at t = 0, so the schedule clock starts at 1 and the
    # t = 0 step reuses the t = 1 values.
    return np.maximum(np.asarray(t), 1)


@dataclass(frozen=True)
class SigmoidDriftSchedule:
    """The drifting pair (a_t, d_t) of the sigmoid benchmark system.

    a_t = -50 s_t(t) + 1/t^2,  d_t = 15 s_t(t) + 2/log(t+1), with
    s_t(z) = 1/(t + exp(-z)) and the clock starting at t = 1.
    """

    name = "sigmoid-drift"
    dim = 2

    def beta(self, t):
        u = float(_bench_clock(t))
        s = 1.0 / (u + math.exp(-u))
        a = -50.0 * s + 1.0 / u ** 2
        d = 15.0 * s + 2.0 / math.log(u + 1.0)
        return np.array([a, d])

    def path(self, T, t0=0):
        u = _bench_clock(np.arange(t0, t0 + T)).astype(float)
        s = 1.0 / (u + np.exp(-u))
        a = -50.0 * s + 1.0 / u ** 2
        d = 15.0 * s + 2.0 / np.log(u + 1.0)
        return np.stack([a, d], axis=-1)


@dataclass(frozen=True)
class ArraySchedule:
    """Explicit per-step values, shape (T_max, m)."""

    values: np.ndarray
    name = "array"

    def __post_init__(self):
        object.__setattr__(self, "values", np.atleast_2d(np.asarray(self.values, dtype=float)))

    @property
    def dim(self):
        return self.values.shape[1]

    def beta(self, t):
        return self.values[t]

    def path(self, T, t0=0):
        if t0 + T > self.values.shape[0]:
            raise ValueError("array schedule shorter than requested horizon")
        return self.values[t0:t0 + T].copy()


# ---------------------------------------------------------------------------
# Feature families: phi_t(alpha, x) evaluators


@dataclass(frozen=True)
class LinearScalarFamily:
    """Scalar toy model f = beta * (alpha * x);  n = m = p = 1."""

    name = "linear-scalar"
    dim_alpha = 1
    dim_beta = 1
    dim_x = 1

    def phi(self, t, alpha, x):
        return np.atleast_1d(alpha[0] * x[0])

    def phi_path(self, alpha, x, t0=0):
        return np.asarray(x, dtype=float).reshape(-1, 1) * alpha[0]

    def f_path_many(self, alphas, beta_path, x, t0=0):
        x = np.asarray(x, dtype=float).reshape(-1)
        return alphas[:, 0:1] * (beta_path[:, 0] * x)[None, :]

    def grad_alpha_f(self, t, alpha, beta, x):
        return np.atleast_1d(beta[0] * x[0])


@dataclass(frozen=True)
class DiagonalLinearFamily:
    """Coordinatewise-scaled linear model: phi = alpha * x (Hadamard)."""

    dim: int
    name = "diagonal-linear"

    @property
    def dim_alpha(self):
        return self.dim

    @property
    def dim_beta(self):
        return self.dim

    @property
    def dim_x(self):
        return self.dim

    def phi(self, t, alpha, x):
        return np.asarray(alpha, dtype=float) * np.asarray(x, dtype=float)

    def phi_path(self, alpha, x, t0=0):
        return np.asarray(x, dtype=float) * np.asarray(alpha, dtype=float)[None, :]

    def grad_alpha_f(self, t, alpha, beta, x):
        return np.asarray(beta, dtype=float) * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class SigmoidDriftFamily:
    """Benchmark family: f = a_t s_t(b x + c) + d_t with s_t(z) = 1/(t+e^-z).

    alpha = (b, c), beta = (a, d), phi_t = (s_t(b x + c), 1).  Shares the
    schedule clock, so the t = 0 step evaluates at t = 1.  The feature
    norm is below sqrt(2) for every clock value >= 1.
    """

    name = "sigmoid-drift"
    dim_alpha = 2
    dim_beta = 2
    dim_x = 1

    def phi(self, t, alpha, x):
        u = float(_bench_clock(t))
        return np.array([float(shifted_sigmoid(u, alpha[0] * x[0] + alpha[1])), 1.0])

    def phi_path(self, alpha, x, t0=0):
        x = np.asarray(x, dtype=float).reshape(-1)
        u = _bench_clock(np.arange(t0, t0 + x.size)).astype(float)
        s = shifted_sigmoid(u, alpha[0] * x + alpha[1])
        return np.stack([s, np.ones_like(s)], axis=-1)

    def f_path_many(self, alphas, beta_path, x, t0=0):
        """Vectorised f over a candidate grid; alphas (K, 2) -> (K, T)."""
        x = np.asarray(x, dtype=float).reshape(-1)
        u = _bench_clock(np.arange(t0, t0 + x.size)).astype(float)
        z = alphas[:, 0:1] * x[None, :] + alphas[:, 1:2]
        s = 1.0 / (u[None, :] + np.exp(-z))
        return beta_path[None, :, 0] * s + beta_path[None, :, 1]

    def grad_alpha_f(self, t, alpha, beta, x):
        u = float(_bench_clock(t))
        z = alpha[0] * x[0] + alpha[1]
        s = float(shifted_sigmoid(u, z))
        ds = s * s * math.exp(-z)
        return beta[0] * ds * np.array([x[0], 1.0])


@dataclass(frozen=True)
class TanhFamily:
    """Saturating scalar family: phi = (tanh(alpha x),) or with a bias slot.

    With a constant beta this is the bounded nonlinear time-series model
    used in the generalization-rate experiments.
    """

    with_bias: bool = False
    name = "tanh"
    dim_alpha = 1
    dim_x = 1

    @property
    def dim_beta(self):
        return 2 if self.with_bias else 1

    def phi(self, t, alpha, x):
        s = math.tanh(alpha[0] * x[0])
        return np.array([s, 1.0]) if self.with_bias else np.array([s])

    def phi_path(self, alpha, x, t0=0):
        s = np.tanh(alpha[0] * np.asarray(x, dtype=float).reshape(-1))
        if self.with_bias:
            return np.stack([s, np.ones_like(s)], axis=-1)
        return s[:, None]

    def f_path_many(self, alphas, beta_path, x, t0=0):
        x = np.asarray(x, dtype=float).reshape(-1)
        s = np.tanh(alphas[:, 0:1] * x[None, :])
        out = beta_path[None, :, 0] * s
        if self.with_bias:
            out = out + beta_path[None, :, 1]
        return out

    def grad_alpha_f(self, t, alpha, beta, x):
        c = math.cosh(alpha[0] * x[0])
        g = beta[0] * x[0] / (c * c)
        return np.array([g])


# ---------------------------------------------------------------------------
# Regressor dynamics


@dataclass(frozen=True)
class ExogenousIIDRegressor:
    """x_t i.i.d., independent of outputs.

    kind: 'gaussian' (mean/scale) or 'uniform' on [-scale, scale]^p.
    """

    dim: int = 1
    kind: str = "gaussian"
    mean: float = 0.0
    scale: float = 1.0
    name = "exogenous-iid"
    needs_output = False

    def draw(self, rng):
        if self.kind == "gaussian":
            return rng.normal(self.mean, self.scale, size=self.dim)
        if self.kind == "uniform":
            return rng.uniform(self.mean - self.scale, self.mean + self.scale, size=self.dim)
        raise ValueError(f"unknown iid regressor kind {self.kind!r}")

    def initial(self, rng):
        return self.draw(rng)

    def step(self, t, x, rng, y_next=None):
        return self.draw(rng)


@dataclass(frozen=True)
class DeterministicRampRegressor:
    """x_t = t; handy for hand-checkable examples."""

    name = "ramp"
    dim = 1
    needs_output = False

    def initial(self, rng):
        return np.zeros(1)

    def step(self, t, x, rng, y_next=None):
        return np.array([float(t + 1)])


@dataclass(frozen=True)
class SigmoidMarkovRegressor:
    """Scalar nonlinear Markov chain x_{t+1} = scale * s_t(x_t) + innovation,

    with s_t the shifted sigmoid on the same clock as the benchmark
    schedules and standard-normal innovations.
    """

    scale: float = 100.0
    init_mean: float = 10.0
    init_std: float = 1.0
    innovation_std: float = 1.0
    name = "sigmoid-markov"
    dim = 1
    needs_output = False

    def initial(self, rng):
        return np.array([rng.normal(self.init_mean, self.init_std)])

    def step(self, t, x, rng, y_next=None):
        u = float(_bench_clock(t))
        drift = self.scale * float(shifted_sigmoid(u, x[0]))
        return np.array([drift + rng.normal(0.0, self.innovation_std)])


@dataclass(frozen=True)
class LaggedARRegressor:
    """x_t stacks output lags (y_t .. y_{t-p+1}) and exogenous input lags.

    With p_lags = 1 and no inputs the regressor is plain output feedback
    x_{t+1} = y_{t+1}.
    """

    p_lags: int = 1
    q_lags: int = 0
    input_std: float = 1.0
    init_low: float = 0.0
    init_high: float = 0.0
    name = "lagged-ar"
    needs_output = True

    @property
    def dim(self):
        return self.p_lags + self.q_lags

    def initial(self, rng):
        x = np.zeros(self.dim)
        if self.init_high > self.init_low:
            x[: self.p_lags] = rng.uniform(self.init_low, self.init_high, size=self.p_lags)
        if self.q_lags:
            x[self.p_lags:] = rng.normal(0.0, self.input_std, size=self.q_lags)
        return x

    def step(self, t, x, rng, y_next=None):
        if y_next is None:
            raise ValueError("lagged-ar regressor needs the revealed output")
        out = np.empty(self.dim)
        out[0] = y_next
        out[1: self.p_lags] = x[: self.p_lags - 1]
        if self.q_lags:
            out[self.p_lags] = rng.normal(0.0, self.input_std)
            out[self.p_lags + 1:] = x[self.p_lags: self.dim - 1]
        return out


# ---------------------------------------------------------------------------
# System spec and trajectories


@dataclass(frozen=True)
class SystemSpec:
    """Full description of one simulatable system.

    ``beta_schedule`` plays the role of the known source schedule when the
    spec is used for offline data, and of the unknown drifting schedule
    when used as the target.  ``feature_bound`` (A), ``output_bound``
    (M_f) and the ball radius (B) are the declared constants the online
    phase and the bound evaluators rely on.
    """

    family: object
    box: CompactBox
    alpha_star: np.ndarray
    beta_schedule: object
    regressor: object
    noise: object
    ball: BallDomain
    feature_bound: float
    output_bound: float
    alpha_lipschitz: float | None = None
    spec_id: str = "custom"

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha_star, dtype=float))
        object.__setattr__(self, "alpha_star", alpha)
        if alpha.size != self.family.dim_alpha:
            raise ValueError("alpha_star dimension does not match the family")
        if self.box.dim != self.family.dim_alpha:
            raise ValueError("box dimension does not match the family")
        if not self.box.contains(alpha):
            raise ValueError("alpha_star must lie in the compact box")
        if self.beta_schedule.dim != self.family.dim_beta:
            raise ValueError("beta schedule dimension does not match the family")
        if self.regressor.dim != self.family.dim_x:
            raise ValueError("regressor dimension does not match the family")

    @property
    def w_max(self):
        return self.noise.w_max

    def with_schedule(self, schedule, spec_id=None):
        return replace(self, beta_schedule=schedule,
                       spec_id=spec_id or self.spec_id)


@dataclass
class Trajectory:
    """One simulated path.  Hidden-truth fields exist only when produced
    by the simulator (beta per step, realized noise, and optionally the
    feature-mismatch error once an offline estimate is fixed)."""

    x: np.ndarray                 # (T, p)
    y: np.ndarray                 # (T,)  y[t] = model's y_{t+1}
    beta: np.ndarray | None = None    # (T, m)
    w: np.ndarray | None = None       # (T,)  w[t] = model's w_{t+1}
    eps: np.ndarray | None = None     # (T,)
    seed: int | None = None

    @property
    def horizon(self):
        return self.y.shape[0]

    @property
    def has_hidden_truth(self):
        return self.beta is not None and self.w is not None


@dataclass
class MultiTrajectoryDataset:
    """i.i.d. trajectories from one source spec, with per-trajectory seeds."""

    spec: SystemSpec
    trajectories: list
    seed: int

    @property
    def n_traj(self):
        return len(self.trajectories)

    @property
    def horizon(self):
        return self.trajectories[0].horizon

    def __iter__(self):
        return iter(self.trajectories)


# ---------------------------------------------------------------------------
# Operations


def eval_model(spec, alpha, beta, x, t):
    """f_t(alpha, beta, x) = beta' phi_t(alpha, x)."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if alpha.size != spec.family.dim_alpha:
        raise ValueError("alpha dimension mismatch")
    if beta.size != spec.family.dim_beta:
        raise ValueError("beta dimension mismatch")
    if x.size != spec.family.dim_x:
        raise ValueError("regressor dimension mismatch")
    if not spec.box.contains(alpha):
        raise ValueError("alpha outside the compact box")
    return float(beta @ spec.family.phi(t, alpha, x))


def _simulate_path(spec, T, rng, check_f_bound=True):
    """Roll one path forward; asserts declared bounds step by step."""
    fam = spec.family
    p, m = fam.dim_x, fam.dim_beta
    x = np.empty((T, p))
    y = np.empty(T)
    w = spec.noise.sample(rng, T)
    betas = spec.beta_schedule.path(T)
    w_cap = spec.noise.w_max

    xt = np.asarray(spec.regressor.initial(rng), dtype=float)
    for t in range(T):
        x[t] = xt
        beta_t = betas[t]
        if not spec.ball.contains(beta_t):
            raise SimulationFault(
                f"schedule leaves the beta ball: ||beta||={np.linalg.norm(beta_t):.6g} "
                f"> B={spec.ball.radius:.6g}", step=t)
        if abs(w[t]) > w_cap + 1e-12:
            raise SimulationFault(f"noise exceeds declared W_max={w_cap:.6g}", step=t)
        f = float(beta_t @ fam.phi(t, spec.alpha_star, xt))
        if check_f_bound and abs(f) > spec.output_bound + 1e-9:
            raise SimulationFault(
                f"|f|={abs(f):.6g} exceeds declared M_f={spec.output_bound:.6g}", step=t)
        if not math.isfinite(f):
            raise SimulationFault("non-finite model output", step=t)
        y[t] = f + w[t]
        xt = np.asarray(spec.regressor.step(t, xt, rng, y_next=y[t]), dtype=float)
    return x, y, betas, w


def simulate_source(spec, n_traj, T, seed, check_f_bound=True):
    """Draw ``n_traj`` independent trajectories of horizon ``T``.

    Trajectory ``i`` uses the (seed, i) substream, so growing ``n_traj``
    extends the dataset without touching existing paths.
    """
    if n_traj < 1 or T < 1:
        raise ValueError("need n_traj >= 1 and T >= 1")
    trajs = []
    for i in range(n_traj):
        rng = substream(seed, SOURCE_TRAJ, i)
        x, y, betas, w = _simulate_path(spec, T, rng, check_f_bound)
        trajs.append(Trajectory(x=x, y=y, beta=betas, w=w, seed=seed))
    return MultiTrajectoryDataset(spec=spec, trajectories=trajs, seed=seed)


def simulate_target(spec, T, seed, check_f_bound=True):
    """One target path with hidden truth recorded for later evaluation."""
    if T < 1:
        raise ValueError("need T >= 1")
    rng = substream(seed, TARGET_TRAJ, 0)
    x, y, betas, w = _simulate_path(spec, T, rng, check_f_bound)
    return Trajectory(x=x, y=y, beta=betas, w=w, seed=seed)


def epsilon_path(spec, traj, alpha_hat):
    """Mismatch error eps_t = beta_t' (phi_t(alpha*) - phi_t(alpha_hat)).

    Requires hidden truth; defined relative to a fixed offline estimate.
    """
    if traj.beta is None:
        raise ValueError("epsilon path needs the hidden beta truth")
    alpha_hat = np.atleast_1d(np.asarray(alpha_hat, dtype=float))
    phi_star = spec.family.phi_path(spec.alpha_star, traj.x)
    phi_hat = spec.family.phi_path(alpha_hat, traj.x)
    return np.einsum("tm,tm->t", traj.beta, phi_star - phi_hat)


def drift_delta(schedule, T):
    """delta_T = sqrt((1/T) sum_{t<T} ||beta_{t+1} - beta_t||^2)."""
    path = schedule.path(T + 1)
    steps = np.diff(path, axis=0)
    return float(np.sqrt(np.mean(np.sum(steps ** 2, axis=1))))
