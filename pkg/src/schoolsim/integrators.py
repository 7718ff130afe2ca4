"""Time integration: RK4 for the noiseless system, Euler-Maruyama with noise.

Noise enters positions only; the velocity equation is deterministic and the
steppers must never add randomness to v.  Each particle owns an independent
counter-based random stream (Philox, jumped per particle index), so a
trajectory does not depend on iteration order and is reproducible bit for
bit from (seed, config, params, initial state).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .model import ExternalForceSpec, ModelParams, SwarmState, default_min_separation, validate_state
from .forces import SingularForceError, _drift_kernel, _int_exponents


class Termination(str, enum.Enum):
    COMPLETED = "completed"
    COLLISION = "collision"
    EXPLOSION = "explosion"
    SINGULAR_FORCE = "singular_force"


SCHEMES = ("rk4", "euler_maruyama", "euler")


@dataclass(frozen=True)
class IntegratorConfig:
    """Stepping scheme, step sizes, horizon, seed and output stride.

    collision_eps and overflow_bound are the terminal-condition thresholds;
    collision_eps defaults to 1e-3 * r when left as None.

    Adaptive stepping: inside the close zone (min pair distance below
    close_approach_factor * r) the step drops at once to a distance-scaled
    target, dt_base * (dist / zone)^q, and recovers geometrically (one
    factor of close_approach_factor per step) while below target or outside
    the zone; dt never drops under dt_min.  The target exponent matches the
    alignment coefficient's growth rate dist^-q, which keeps the explicit
    schemes inside their stability region during close passes; the per-step
    noise displacement then shrinks faster than the distance scale, so
    approaches are resolved scale by scale and runs cannot stall at the
    floor step while drifting back out of the zone.
    """

    scheme: str = "rk4"
    dt: float = 1e-3
    t_end: float = 1.0
    seed: int = 0
    record_every: int = 1
    adaptive: bool = False
    dt_min: float = 1e-6
    close_approach_factor: float = 0.5
    collision_eps: Optional[float] = None
    overflow_bound: float = 1e12

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; allowed: {SCHEMES}")
        if not (self.dt > 0):
            raise ValueError("dt must be > 0")
        if not (self.dt_min > 0 and self.dt_min <= self.dt):
            raise ValueError("dt_min must satisfy 0 < dt_min <= dt")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if not (0.0 < self.close_approach_factor < 1.0):
            raise ValueError("close_approach_factor must be in (0, 1)")
        if self.collision_eps is not None and not (self.collision_eps > 0):
            raise ValueError("collision_eps must be > 0 when given")
        if not (self.overflow_bound > 0):
            raise ValueError("overflow_bound must be > 0")


@dataclass(frozen=True)
class Trajectory:
    """Recorded run: parameter/config snapshots, samples, termination reason."""

    params: ModelParams
    config: IntegratorConfig
    external: ExternalForceSpec
    samples: tuple[SwarmState, ...]
    termination: Termination

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def final(self) -> SwarmState:
        return self.samples[-1]


def particle_streams(seed: int, n: int) -> list[np.random.Generator]:
    """One independent counter-based stream per particle index."""
    base = np.random.Philox(key=seed)
    return [np.random.Generator(base.jumped(i + 1)) for i in range(n)]


def init_stream(seed: int) -> np.random.Generator:
    """Stream reserved for initial-condition draws (distinct from particle streams)."""
    return np.random.Generator(np.random.Philox(key=seed))


def brownian_increment(rng: np.random.Generator, d: int, dt: float, sigma_i: float) -> np.ndarray:
    """sigma_i * (W(t+dt) - W(t)): d Gaussians with mean 0 and std sigma_i*sqrt(dt).

    A zero-amplitude particle gets an exact zero vector and its stream is
    not consumed.
    """
    if not (dt > 0):
        raise ValueError("dt must be > 0")
    if sigma_i < 0:
        raise ValueError("sigma_i must be >= 0")
    if sigma_i == 0.0:
        return np.zeros(d)
    return rng.standard_normal(d) * (sigma_i * math.sqrt(dt))


class _ParticleNoise:
    """Blocked standard-normal draws from per-particle streams.

    Block draws from a Generator are bitwise identical to successive single
    draws, so buffering only amortizes call overhead; silent particles
    (sigma = 0) never consume their streams.
    """

    def __init__(self, streams: Sequence[np.random.Generator], sigma: np.ndarray,
                 d: int, block: int = 256):
        self.streams = streams
        self.active = sigma > 0.0
        self.d = d
        self.block = block
        self.buffer = np.zeros((block, len(streams), d))
        self.idx = block

    def next_raw(self) -> np.ndarray:
        """Standard normals of shape (N, d); zero rows for silent particles."""
        if self.idx >= self.block:
            for i, stream in enumerate(self.streams):
                if self.active[i]:
                    self.buffer[:, i, :] = stream.standard_normal((self.block, self.d))
            self.idx = 0
        out = self.buffer[self.idx]
        self.idx += 1
        return out


@njit(cache=True)
def _state_ok(x, v, bound) -> bool:
    n, d = x.shape
    for i in range(n):
        for k in range(d):
            a = x[i, k]
            b = v[i, k]
            if not (np.isfinite(a) and np.isfinite(b)):
                return False
            if abs(a) > bound or abs(b) > bound:
                return False
    return True


@njit(cache=True)
def _min_pair_d2(x) -> float:
    n, d = x.shape
    best = np.inf
    for i in range(n):
        for j in range(i + 1, n):
            d2 = 0.0
            for k in range(d):
                diff = x[i, k] - x[j, k]
                d2 += diff * diff
            if d2 < best:
                best = d2
    return best


@njit(cache=True)
def _stage_rhs(x, v, a1, b1, g, p, q, exp_int, pi, qi, has_drag, drag_c, dvdt):
    min_d2, i_min, j_min = _drift_kernel(x, v, a1, b1, g, p, q, exp_int, pi, qi, dvdt)
    if has_drag:
        n, d = x.shape
        for i in range(n):
            for k in range(d):
                dvdt[i, k] -= drag_c * v[i, k]
    return min_d2, i_min, j_min


@njit(cache=True)
def _rk4_kernel(x, v, dt, a1, b1, g, p, q, exp_int, pi, qi, has_drag, drag_c):
    """One classical RK4 step; returns (x_new, v_new, min_d2_first_stage, singular)."""
    n, d = x.shape
    k1 = np.empty((n, d))
    k2 = np.empty((n, d))
    k3 = np.empty((n, d))
    k4 = np.empty((n, d))
    half = 0.5 * dt

    m1, _, _ = _stage_rhs(x, v, a1, b1, g, p, q, exp_int, pi, qi, has_drag, drag_c, k1)
    v2 = v + half * k1
    x2 = x + half * v
    m2, _, _ = _stage_rhs(x2, v2, a1, b1, g, p, q, exp_int, pi, qi, has_drag, drag_c, k2)
    v3 = v + half * k2
    x3 = x + half * v2
    m3, _, _ = _stage_rhs(x3, v3, a1, b1, g, p, q, exp_int, pi, qi, has_drag, drag_c, k3)
    v4 = v + dt * k3
    x4 = x + dt * v3
    m4, _, _ = _stage_rhs(x4, v4, a1, b1, g, p, q, exp_int, pi, qi, has_drag, drag_c, k4)

    sixth = dt / 6.0
    x_new = x + sixth * (v + 2.0 * v2 + 2.0 * v3 + v4)
    v_new = v + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    singular = (m1 == 0.0) or (m2 == 0.0) or (m3 == 0.0) or (m4 == 0.0)
    return x_new, v_new, m1, singular


@njit(cache=True)
def _em_kernel(x, v, dt, a1, b1, g, p, q, exp_int, pi, qi, has_drag, drag_c, noise, active):
    """One Euler-Maruyama step with drift frozen at the pre-step state.

    noise holds the already-scaled position increments; rows are only added
    for particles flagged active, so a zero-noise step is bitwise identical
    to explicit Euler.  Returns (x_new, v_new, min_d2, singular).
    """
    n, d = x.shape
    dvdt = np.empty((n, d))
    m, _, _ = _stage_rhs(x, v, a1, b1, g, p, q, exp_int, pi, qi, has_drag, drag_c, dvdt)
    x_new = np.empty((n, d))
    v_new = np.empty((n, d))
    for i in range(n):
        for k in range(d):
            x_new[i, k] = x[i, k] + dt * v[i, k]
            v_new[i, k] = v[i, k] + dt * dvdt[i, k]
        if active[i]:
            for k in range(d):
                x_new[i, k] += noise[i, k]
    return x_new, v_new, m, m == 0.0


def _kernel_args(params: ModelParams, external: ExternalForceSpec):
    exp_int, pi, qi = _int_exponents(params)
    has_drag = external.kind == "linear_drag"
    drag_c = external.drag_coefficient if has_drag else 0.0
    return (params.alpha1, params.beta1, params.gamma, params.p, params.q,
            exp_int, pi, qi, has_drag, drag_c)


def step_rk4(state: SwarmState, dt: float, params: ModelParams,
             external: ExternalForceSpec) -> SwarmState:
    """Classical 4th-order step of the coupled noiseless system."""
    if not params.noiseless:
        raise ValueError("step_rk4 requires all sigma_i = 0; use euler_maruyama for noise")
    x_new, v_new, _, singular = _rk4_kernel(state.x, state.v, dt, *_kernel_args(params, external))
    if singular:
        raise SingularForceError((-1, -1), "coincident positions at an RK4 stage")
    return SwarmState(t=state.t + dt, x=x_new, v=v_new)


def _draw_noise(params: ModelParams, d: int, dt: float,
                rng: np.random.Generator | Sequence[np.random.Generator] | None,
                dw: Optional[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    n = params.n_particles
    active = params.sigma > 0.0
    if dw is not None:
        noise = params.sigma[:, None] * np.asarray(dw, dtype=np.float64)
        return noise, active
    noise = np.zeros((n, d))
    if not np.any(active):
        return noise, active
    if rng is None:
        raise ValueError("rng is required when sigma > 0 and no increments are supplied")
    if isinstance(rng, np.random.Generator):
        streams: Sequence[np.random.Generator] = [rng] * n
    else:
        streams = rng
    for i in range(n):
        if active[i]:
            noise[i] = brownian_increment(streams[i], d, dt, params.sigma[i])
    return noise, active


def step_euler_maruyama(state: SwarmState, dt: float, params: ModelParams,
                        external: ExternalForceSpec,
                        rng: np.random.Generator | Sequence[np.random.Generator] | None = None,
                        dw: Optional[np.ndarray] = None) -> SwarmState:
    """Euler-Maruyama step: noise on positions only, drift at the pre-step state.

    rng may be a single generator (drawn in ascending particle order) or one
    per particle.  dw, when given, supplies the raw Brownian increments
    W(t+dt)-W(t) of shape (N, d) and bypasses rng; they are scaled by each
    particle's sigma_i.
    """
    if not (dt > 0):
        raise ValueError("dt must be > 0")
    noise, active = _draw_noise(params, state.dim, dt, rng, dw)
    x_new, v_new, _, singular = _em_kernel(state.x, state.v, dt,
                                           *_kernel_args(params, external), noise, active)
    if singular:
        raise SingularForceError((-1, -1), "coincident positions in Euler-Maruyama step")
    return SwarmState(t=state.t + dt, x=x_new, v=v_new)


def step_euler(state: SwarmState, dt: float, params: ModelParams,
               external: ExternalForceSpec) -> SwarmState:
    """Explicit Euler step (the dt-deterministic limit of Euler-Maruyama)."""
    if not params.noiseless:
        raise ValueError("step_euler requires all sigma_i = 0")
    n = params.n_particles
    noise = np.zeros((n, state.dim))
    active = np.zeros(n, dtype=bool)
    x_new, v_new, _, singular = _em_kernel(state.x, state.v, dt,
                                           *_kernel_args(params, external), noise, active)
    if singular:
        raise SingularForceError((-1, -1), "coincident positions in Euler step")
    return SwarmState(t=state.t + dt, x=x_new, v=v_new)


def simulate(initial_state: SwarmState, params: ModelParams,
             external: ExternalForceSpec, config: IntegratorConfig) -> Trajectory:
    """Advance the system to t_end or to a terminal condition.

    The initial state is stamped t=0.  Collision (min pair distance below
    collision_eps), explosion (any coordinate beyond overflow_bound, or
    non-finite) and singular force evaluations end the run early with the
    corresponding termination status instead of raising.
    """
    n, d = initial_state.x.shape
    if n != params.n_particles or d != params.dim:
        raise ValueError(
            f"state shape ({n}, {d}) does not match params (N={params.n_particles}, d={params.dim})")
    if config.scheme in ("rk4", "euler") and not params.noiseless:
        raise ValueError(f"scheme {config.scheme!r} requires all sigma_i = 0")
    report = validate_state(initial_state, default_min_separation(params))
    if not report.ok:
        raise ValueError(f"initial state outside phase space: coincident pairs {report.violations}")

    collision_eps = config.collision_eps if config.collision_eps is not None else 1e-3 * params.r
    stochastic = config.scheme == "euler_maruyama" and not params.noiseless
    noise_buf = (_ParticleNoise(particle_streams(config.seed, n), params.sigma, d)
                 if stochastic else None)
    sigma_col = params.sigma[:, None]
    kargs = _kernel_args(params, external)
    zero_noise = np.zeros((n, d))
    no_active = np.zeros(n, dtype=bool)
    active = params.sigma > 0.0

    x = np.array(initial_state.x, dtype=np.float64)
    v = np.array(initial_state.v, dtype=np.float64)
    t = 0.0
    samples = [SwarmState(t=0.0, x=x, v=v)]
    dt_base = config.dt
    dt_cur = dt_base
    approach_dist = config.close_approach_factor * params.r
    t_eps = 1e-9 * dt_base
    steps = 0
    termination = Termination.COMPLETED

    def record():
        if samples[-1].t != t:
            samples.append(SwarmState(t=t, x=x, v=v))

    while True:
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))) or \
                max(np.abs(x).max(), np.abs(v).max()) > config.overflow_bound:
            termination = Termination.EXPLOSION
            record()
            break
        min_dist = math.sqrt(_min_pair_d2(x)) if n >= 2 else math.inf
        if min_dist < collision_eps:
            termination = Termination.COLLISION
            record()
            break
        if config.t_end - t <= t_eps:
            termination = Termination.COMPLETED
            record()
            break
        if config.adaptive:
            if min_dist < approach_dist:
                ratio = min_dist / approach_dist
                dt_target = max(dt_base * ratio**params.q, config.dt_min)
            else:
                dt_target = dt_base
            if dt_cur > dt_target:
                dt_cur = dt_target
            elif dt_cur < dt_target:
                dt_cur = min(dt_cur / config.close_approach_factor, dt_target)
        dt_step = min(dt_cur, config.t_end - t)

        if config.scheme == "rk4":
            x_new, v_new, _, singular = _rk4_kernel(x, v, dt_step, *kargs)
        elif stochastic:
            noise, active = _draw_noise(params, d, dt_step, streams, None)
            x_new, v_new, _, singular = _em_kernel(x, v, dt_step, *kargs, noise, active)
        else:
            x_new, v_new, _, singular = _em_kernel(x, v, dt_step, *kargs, zero_noise, no_active)
        if singular:
            termination = Termination.SINGULAR_FORCE
            record()
            break

        x, v = x_new, v_new
        t += dt_step
        steps += 1
        if steps % config.record_every == 0:
            samples.append(SwarmState(t=t, x=x, v=v))

    return Trajectory(params=params, config=config, external=external,
                      samples=tuple(samples), termination=termination)
