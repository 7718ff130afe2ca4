"""Self-check suites: conservation laws, reduction equivalence, monitors, orders.

These checks are smaller, faster versions of the acceptance suite meant for
`schoolsim verify`; the measurement helpers are shared with the tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .diagnostics import diagnose
from .integrators import (IntegratorConfig, Termination, init_stream, simulate,
                          step_euler, step_euler_maruyama, step_rk4)
from .model import ExternalForceSpec, ModelParams, SwarmState
from .reduced import (cauchy_schwarz_defect, exponential_bound_rate, integrate_reduced,
                      lyapunov_h_values, lyapunov_v_values, reduce_pair, reduce_trajectory)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def sample_pair_state(rng: np.random.Generator, r: float, d: int,
                      sep_range: tuple[float, float] = (0.5, 2.0),
                      speed_scale: float = 0.3) -> SwarmState:
    """Random two-particle state with separation in sep_range * r."""
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    sep = rng.uniform(sep_range[0] * r, sep_range[1] * r)
    x = np.stack([0.5 * sep * u, -0.5 * sep * u])
    v = speed_scale * rng.standard_normal((2, d))
    return SwarmState(t=0.0, x=x, v=v)


def _integrate_fixed(state: SwarmState, params: ModelParams, external: ExternalForceSpec,
                     dt: float, n_steps: int,
                     stepper: Callable[..., SwarmState]) -> SwarmState:
    s = state
    for _ in range(n_steps):
        s = stepper(s, dt, params, external)
    return s


def measure_rk4_order(params: ModelParams, external: ExternalForceSpec, state0: SwarmState,
                      t_end: float, dts: Sequence[float], dt_ref: float) -> float:
    """Least-squares slope of log global error against log dt at t_end."""
    ref = _integrate_fixed(state0, params, external, dt_ref, round(t_end / dt_ref), step_rk4)
    errors = []
    for dt in dts:
        end = _integrate_fixed(state0, params, external, dt, round(t_end / dt), step_rk4)
        errors.append(max(np.abs(end.x - ref.x).max(), np.abs(end.v - ref.v).max()))
    return float(np.polyfit(np.log(np.asarray(dts)), np.log(np.asarray(errors)), 1)[0])


def measure_em_strong_order(params: ModelParams, external: ExternalForceSpec,
                            state0: SwarmState, t_end: float, dts: Sequence[float],
                            dt_ref: float, n_paths: int, seed: int) -> float:
    """Strong-error slope of Euler-Maruyama against a shared-path fine reference.

    For each sample path one set of Brownian increments is drawn at dt_ref
    resolution; every coarser level consumes exact partial sums of the same
    increments.  All dts and t_end must be integer multiples of dt_ref.
    """
    n, d = state0.x.shape
    n_ref = round(t_end / dt_ref)
    errors = np.zeros(len(dts))
    for path in range(n_paths):
        rng = init_stream(seed + path)
        dw = rng.standard_normal((n_ref, n, d)) * math.sqrt(dt_ref)
        s = state0
        for k in range(n_ref):
            s = step_euler_maruyama(s, dt_ref, params, external, dw=dw[k])
        ref = s
        for lvl, dt in enumerate(dts):
            m = round(dt / dt_ref)
            dw_coarse = dw[: (n_ref // m) * m].reshape(n_ref // m, m, n, d).sum(axis=1)
            s = state0
            for k in range(n_ref // m):
                s = step_euler_maruyama(s, dt, params, external, dw=dw_coarse[k])
            errors[lvl] += max(np.abs(s.x - ref.x).max(), np.abs(s.v - ref.v).max())
    errors /= n_paths
    return float(np.polyfit(np.log(np.asarray(dts)), np.log(errors), 1)[0])


def _base_params(n: int = 2, d: int = 2, sigma: float = 0.0) -> ModelParams:
    return ModelParams.create(alpha=1.0, beta=0.5, r=1.0, p=3, q=4, sigma=sigma,
                              n_particles=n, dim=d)


def check_conservation() -> CheckResult:
    worst = 0.0
    none = ExternalForceSpec()
    for n in (2, 10):
        params = _base_params(n=n)
        rng = init_stream(100 + n)
        x = rng.uniform(0, 2.0 * n ** 0.5, (n, 2))
        v = 0.3 * rng.standard_normal((n, 2))
        config = IntegratorConfig(scheme="rk4", dt=1e-3, t_end=5.0, record_every=1000)
        traj = simulate(SwarmState(t=0.0, x=x, v=v), params, none, config)
        drift_v = np.linalg.norm(traj.final.v.sum(axis=0) - v.sum(axis=0))
        worst = max(worst, drift_v)
    return CheckResult("momentum-conservation", worst <= 1e-8,
                       f"max |sum v(T) - sum v(0)| = {worst:.3e} (tol 1e-8)")


def check_reduction_equivalence() -> CheckResult:
    params = _base_params()
    none = ExternalForceSpec()
    rng = init_stream(7)
    worst = 0.0
    for _ in range(3):
        state0 = sample_pair_state(rng, params.r, params.dim)
        config = IntegratorConfig(scheme="rk4", dt=1e-3, t_end=2.0, record_every=10)
        traj = simulate(state0, params, none, config)
        full = reduce_trajectory(traj)
        red = integrate_reduced(reduce_pair(state0.x[0], state0.x[1], state0.v[0], state0.v[1]),
                                params, dt=1e-3, t_end=2.0, record_every=10)
        k = min(len(full), len(red))
        worst = max(worst,
                    np.abs(full.X[:k] - red.X[:k]).max(),
                    np.abs(full.Y[:k] - red.Y[:k]).max(),
                    np.abs(full.Z[:k] - red.Z[:k]).max())
    return CheckResult("reduction-equivalence", worst <= 1e-6,
                       f"max |full - reduced| over (X, Y, Z) = {worst:.3e} (tol 1e-6)")


def check_cauchy_schwarz() -> CheckResult:
    params = _base_params(d=3, sigma=0.1)
    none = ExternalForceSpec()
    rng = init_stream(11)
    worst = 0.0
    for seed in range(5):
        state0 = sample_pair_state(rng, params.r, 3)
        config = IntegratorConfig(scheme="euler_maruyama", dt=1e-3, t_end=5.0,
                                  record_every=10, seed=seed)
        path = reduce_trajectory(simulate(state0, params, none, config))
        defect = cauchy_schwarz_defect(path) + 1e-12 * (1.0 + path.Y)
        worst = min(worst, float(defect.min())) if defect.size else worst
    return CheckResult("cauchy-schwarz", worst >= 0.0,
                       f"min of Y - X^2 Z^2 + 1e-12(1+Y) = {worst:.3e} (needs >= 0)")


def check_lyapunov_monitors() -> CheckResult:
    none = ExternalForceSpec()
    det = _base_params()
    rng = init_stream(13)
    M = 10.0 * max(1.0, det.alpha1, det.beta1, det.gamma)
    rates = []
    ok = True
    for _ in range(10):
        state0 = sample_pair_state(rng, det.r, det.dim)
        config = IntegratorConfig(scheme="rk4", dt=5e-3, t_end=20.0, record_every=20,
                                  adaptive=True, dt_min=1e-6)
        traj = simulate(state0, det, none, config)
        ok = ok and traj.termination is Termination.COMPLETED
        path = reduce_trajectory(traj)
        h = lyapunov_h_values(path, M, det.q)
        rate = exponential_bound_rate(path.t, h)
        rates.append(rate)
        ok = ok and math.isfinite(rate)
        ok = ok and bool(np.all(h <= h[0] * np.exp((rate + 0.1) * path.t)))
    sto = _base_params(d=3, sigma=0.1)
    v_means = []
    for seed in range(10):
        state0 = sample_pair_state(rng, sto.r, 3)
        config = IntegratorConfig(scheme="euler_maruyama", dt=5e-3, t_end=10.0,
                                  record_every=20, seed=seed)
        traj = simulate(state0, sto, none, config)
        ok = ok and traj.termination is Termination.COMPLETED
        path = reduce_trajectory(traj)
        v_means.append(lyapunov_v_values(path, M, 0.5))
    k = min(len(v) for v in v_means)
    mean_v = np.mean([v[:k] for v in v_means], axis=0)
    v_rate = exponential_bound_rate(path.t[:k], mean_v)
    ok = ok and math.isfinite(v_rate)
    return CheckResult("lyapunov-monitors", ok,
                       f"max fitted H rate = {max(rates):.3f}, mean-V rate = {v_rate:.3f}")


def check_convergence_orders() -> CheckResult:
    params = _base_params()
    none = ExternalForceSpec()
    state0 = SwarmState(t=0.0, x=[[0.65, 0.0], [-0.65, 0.0]], v=[[0.0, 0.3], [0.0, -0.3]])
    rk4_order = measure_rk4_order(params, none, state0, t_end=1.0,
                                  dts=(1.6e-2, 8e-3, 4e-3), dt_ref=1e-4)
    em_params = _base_params(sigma=0.2)
    em_slope = measure_em_strong_order(em_params, none, state0, t_end=0.25,
                                       dts=(1e-2, 1e-3, 1e-4), dt_ref=1e-5,
                                       n_paths=8, seed=42)
    ok = rk4_order >= 3.8 and em_slope >= 0.4
    return CheckResult("convergence-orders", ok,
                       f"rk4 order = {rk4_order:.2f} (needs >= 3.8), "
                       f"EM strong slope = {em_slope:.2f} (needs >= 0.4)")


def check_determinism() -> CheckResult:
    params = _base_params(n=5, d=2, sigma=0.1)
    none = ExternalForceSpec()
    rng = init_stream(3)
    x = rng.uniform(0, 4, (5, 2))
    state0 = SwarmState(t=0.0, x=x, v=np.zeros((5, 2)))
    config = IntegratorConfig(scheme="euler_maruyama", dt=1e-3, t_end=1.0,
                              record_every=10, seed=9)
    a = simulate(state0, params, none, config)
    b = simulate(state0, params, none, config)
    same = all(sa.x.tobytes() == sb.x.tobytes() and sa.v.tobytes() == sb.v.tobytes()
               for sa, sb in zip(a.samples, b.samples)) and len(a.samples) == len(b.samples)
    return CheckResult("determinism", same, "same seed twice -> bitwise-identical samples")


def check_euler_consistency() -> CheckResult:
    params = _base_params()
    drag = ExternalForceSpec(kind="linear_drag", drag_coefficient=1.0)
    state = SwarmState(t=0.0, x=[[0.7, 0.1], [-0.7, -0.1]], v=[[0.1, 0.2], [-0.2, 0.0]])
    rng = init_stream(5)
    same = True
    for _ in range(50):
        em = step_euler_maruyama(state, 1e-3, params, drag, rng=rng)
        eu = step_euler(state, 1e-3, params, drag)
        same = same and em.x.tobytes() == eu.x.tobytes() and em.v.tobytes() == eu.v.tobytes()
        state = eu
    return CheckResult("euler-consistency", same,
                       "Euler-Maruyama with sigma = 0 matches explicit Euler bitwise")


def check_adaptive_floor() -> CheckResult:
    params = _base_params(n=2, d=1)
    none = ExternalForceSpec()
    state0 = SwarmState(t=0.0, x=[[0.02], [-0.02]], v=[[-0.8], [0.8]])
    config = IntegratorConfig(scheme="rk4", dt=1e-3, t_end=1.0, record_every=1,
                              adaptive=True, dt_min=1e-5, close_approach_factor=0.5)
    traj = simulate(state0, params, none, config)
    steps = np.diff(traj.times)
    ok = bool(np.all(steps >= config.dt_min * (1 - 1e-9)))
    return CheckResult("adaptive-floor", ok,
                       f"min step taken = {steps.min():.3e} (dt_min {config.dt_min:.0e})")


ALL_CHECKS = (
    check_conservation,
    check_reduction_equivalence,
    check_cauchy_schwarz,
    check_lyapunov_monitors,
    check_convergence_orders,
    check_determinism,
    check_euler_consistency,
    check_adaptive_floor,
)


def run_verification(verbose: bool = True) -> list[CheckResult]:
    results = []
    for check in ALL_CHECKS:
        result = check()
        results.append(result)
        if verbose:
            print(f"{'PASS' if result.passed else 'FAIL'}  {result.name}: {result.detail}")
    return results
