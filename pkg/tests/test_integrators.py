import numpy as np
import pytest

from schoolsim import (ExternalForceSpec, IntegratorConfig, ModelParams, SingularForceError,
                       SwarmState, Termination, brownian_increment, drift, init_stream,
                       particle_streams, simulate, step_euler, step_euler_maruyama, step_rk4)
from schoolsim.verify import measure_rk4_order

NONE = ExternalForceSpec()


def params_for(alpha=1.0, beta=0.5, r=1.0, p=3, q=4, n=2, d=2, sigma=0.0):
    return ModelParams.create(alpha=alpha, beta=beta, r=r, p=p, q=q, sigma=sigma,
                              n_particles=n, dim=d)


# ---------------------------------------------------------------------------
# Brownian increments
# ---------------------------------------------------------------------------

def test_brownian_increment_zero_amplitude():
    rng = init_stream(0)
    fresh = init_stream(0)
    out = brownian_increment(rng, 3, 0.1, 0.0)
    assert np.all(out == 0.0)
    # a silent particle must not consume its stream
    assert np.array_equal(rng.standard_normal(4), fresh.standard_normal(4))


def test_brownian_increment_mean():
    # 1e6 draws at sigma=1, dt=0.01: component mean within 4e-3.5 of zero
    rng = init_stream(1)
    draws = brownian_increment(rng, 1_000_000, 0.01, 1.0)
    assert abs(draws.mean()) < 4 * 10 ** (-3.5)


def test_brownian_increment_variance():
    # sigma=2, dt=0.25: variance sigma^2 dt = 1, within 1%
    rng = init_stream(2)
    draws = brownian_increment(rng, 1_000_000, 0.25, 2.0)
    assert abs(draws.var() - 1.0) < 0.01


def test_brownian_increment_validates_inputs():
    rng = init_stream(3)
    with pytest.raises(ValueError):
        brownian_increment(rng, 2, 0.0, 1.0)
    with pytest.raises(ValueError):
        brownian_increment(rng, 2, 0.1, -1.0)


def test_particle_streams_are_independent_and_reproducible():
    a = particle_streams(7, 3)
    b = particle_streams(7, 3)
    draws_a = [g.standard_normal(4) for g in a]
    draws_b = [g.standard_normal(4) for g in b]
    for da, db in zip(draws_a, draws_b):
        assert np.array_equal(da, db)
    assert not np.array_equal(draws_a[0], draws_a[1])


# ---------------------------------------------------------------------------
# RK4
# ---------------------------------------------------------------------------

def test_rk4_fixed_point_unchanged():
    p = params_for()
    s = SwarmState(t=0.0, x=[[0.5, 0.0], [-0.5, 0.0]], v=np.zeros((2, 2)))
    out = step_rk4(s, 1e-2, p, NONE)
    assert np.array_equal(out.x, s.x)
    assert np.array_equal(out.v, s.v)
    assert out.t == 1e-2


def test_rk4_requires_zero_noise():
    p = params_for(sigma=0.1)
    s = SwarmState(t=0.0, x=[[0.5, 0.0], [-0.5, 0.0]], v=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        step_rk4(s, 1e-3, p, NONE)


def test_rk4_error_ratio_under_step_halving():
    # order 4: halving dt should shrink the global error by about 2^4
    p = params_for()
    s = SwarmState(t=0.0, x=[[0.65, 0.0], [-0.65, 0.0]], v=[[0.0, 0.3], [0.0, -0.3]])

    def endpoint(dt):
        state = s
        for _ in range(round(1.0 / dt)):
            state = step_rk4(state, dt, p, NONE)
        return state

    ref = endpoint(1e-5)
    err = []
    for dt in (4e-3, 2e-3):
        end = endpoint(dt)
        err.append(max(np.abs(end.x - ref.x).max(), np.abs(end.v - ref.v).max()))
    ratio = err[0] / err[1]
    assert 10.0 < ratio < 25.0, f"expected ~16x error drop, got {ratio:.1f}"


def test_rk4_total_velocity_constant_over_many_steps():
    p = params_for()
    rng = init_stream(11)
    x = rng.uniform(0, 2, (2, 2))
    v = rng.standard_normal((2, 2))
    config = IntegratorConfig(scheme="rk4", dt=1e-3, t_end=10.0, record_every=10_000)
    traj = simulate(SwarmState(t=0.0, x=x, v=v), p, NONE, config)
    assert traj.termination is Termination.COMPLETED
    drift_v = np.linalg.norm(traj.final.v.sum(axis=0) - v.sum(axis=0))
    assert drift_v <= 1e-10


def test_rk4_raises_on_singular_stage():
    # stage 2 positions land exactly on each other at dt=1
    p = params_for(d=1)
    s = SwarmState(t=0.0, x=[[0.0], [1.0]], v=[[1.0], [-1.0]])
    with pytest.raises(SingularForceError):
        step_rk4(s, 1.0, p, NONE)


def test_measured_rk4_order_meets_bound():
    # steps large enough that truncation stays clear of the round-off floor
    p = params_for()
    s = SwarmState(t=0.0, x=[[0.65, 0.0], [-0.65, 0.0]], v=[[0.0, 0.3], [0.0, -0.3]])
    order = measure_rk4_order(p, NONE, s, t_end=1.0, dts=(1.6e-2, 8e-3, 4e-3), dt_ref=1e-4)
    assert order >= 3.8, f"measured rk4 order {order:.2f}"


# ---------------------------------------------------------------------------
# Euler-Maruyama
# ---------------------------------------------------------------------------

def test_em_with_zero_noise_is_explicit_euler_bitwise():
    p = params_for()
    drag = ExternalForceSpec(kind="linear_drag", drag_coefficient=1.0)
    state = SwarmState(t=0.0, x=[[0.7, 0.1], [-0.7, -0.1]], v=[[0.1, 0.2], [-0.2, 0.0]])
    rng = init_stream(4)
    for _ in range(100):
        em = step_euler_maruyama(state, 1e-3, p, drag, rng=rng)
        eu = step_euler(state, 1e-3, p, drag)
        assert em.x.tobytes() == eu.x.tobytes()
        assert em.v.tobytes() == eu.v.tobytes()
        state = eu


def test_em_noise_never_touches_velocities():
    # identical state, any sigma: the one-step velocity update is bitwise the
    # same as v + dt * dvdt evaluated at the pre-step state
    noisy = params_for(sigma=3.0)
    quiet = params_for(sigma=0.0)
    state = SwarmState(t=0.0, x=[[0.6, 0.0], [-0.6, 0.2]], v=[[0.3, -0.1], [0.0, 0.4]])
    rhs = drift(state, noisy, NONE)
    expected_v = state.v + 1e-3 * rhs.dvdt
    out_noisy = step_euler_maruyama(state, 1e-3, noisy, NONE, rng=particle_streams(0, 2))
    out_quiet = step_euler_maruyama(state, 1e-3, quiet, NONE)
    assert out_noisy.v.tobytes() == out_quiet.v.tobytes()
    np.testing.assert_allclose(out_noisy.v, expected_v, rtol=1e-15)
    # positions of the noisy step differ, quiet ones match x + v dt
    assert not np.array_equal(out_noisy.x, out_quiet.x)
    np.testing.assert_allclose(out_quiet.x, state.x + 1e-3 * state.v, rtol=1e-15)


def test_em_total_velocity_constant_per_step_with_noise():
    # the pair accelerations negate bitwise, so the only drift in sum(v) is
    # the final rounding of the summation itself (about an ulp per step)
    p = params_for(sigma=1.0)
    streams = particle_streams(5, 2)
    state = SwarmState(t=0.0, x=[[0.8, 0.0], [-0.8, 0.0]], v=[[0.25, 0.5], [0.5, -0.25]])
    total = state.v.sum(axis=0)
    for _ in range(200):
        state = step_euler_maruyama(state, 1e-3, p, NONE, rng=streams)
        new_total = state.v.sum(axis=0)
        assert np.abs(new_total - total).max() <= 4.5e-16
        total = new_total
    assert np.abs(total - [0.75, 0.25]).max() <= 1e-13


def test_em_accepts_supplied_increments():
    p = params_for(sigma=0.5)
    state = SwarmState(t=0.0, x=[[0.6, 0.0], [-0.6, 0.0]], v=np.zeros((2, 2)))
    dw = np.array([[0.01, -0.02], [0.005, 0.0]])
    out = step_euler_maruyama(state, 1e-3, p, NONE, dw=dw)
    np.testing.assert_allclose(out.x, state.x + 1e-3 * state.v + 0.5 * dw, rtol=1e-15)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def test_simulate_zero_horizon_keeps_initial_sample_only():
    p = params_for()
    s = SwarmState(t=0.0, x=[[0.5, 0.0], [-0.5, 0.0]], v=np.zeros((2, 2)))
    traj = simulate(s, p, NONE, IntegratorConfig(scheme="rk4", dt=1e-3, t_end=0.0))
    assert traj.termination is Termination.COMPLETED
    assert len(traj.samples) == 1
    assert traj.samples[0].t == 0.0


def test_simulate_sample_times_strictly_increase():
    p = params_for(sigma=0.1)
    s = SwarmState(t=0.0, x=[[0.5, 0.0], [-0.5, 0.0]], v=np.zeros((2, 2)))
    config = IntegratorConfig(scheme="euler_maruyama", dt=1e-3, t_end=0.5, record_every=7)
    traj = simulate(s, p, NONE, config)
    times = traj.times
    assert times[0] == 0.0
    assert np.all(np.diff(times) > 0)
    assert traj.final.t == pytest.approx(0.5, abs=1e-12)


def test_simulate_record_stride():
    p = params_for()
    s = SwarmState(t=0.0, x=[[0.5, 0.0], [-0.5, 0.0]], v=np.zeros((2, 2)))
    config = IntegratorConfig(scheme="rk4", dt=1e-3, t_end=0.01, record_every=2)
    traj = simulate(s, p, NONE, config)
    assert len(traj.samples) == 6  # initial + steps 2,4,6,8,10


def test_simulate_is_deterministic_for_fixed_seed():
    p = params_for(n=5, sigma=0.2)
    rng = init_stream(12)
    s = SwarmState(t=0.0, x=rng.uniform(0, 4, (5, 2)), v=np.zeros((5, 2)))
    config = IntegratorConfig(scheme="euler_maruyama", dt=1e-3, t_end=1.0,
                              record_every=50, seed=77)
    a = simulate(s, p, NONE, config)
    b = simulate(s, p, NONE, config)
    assert len(a.samples) == len(b.samples)
    for sa, sb in zip(a.samples, b.samples):
        assert sa.x.tobytes() == sb.x.tobytes()
        assert sa.v.tobytes() == sb.v.tobytes()
    other = simulate(s, p, NONE, IntegratorConfig(scheme="euler_maruyama", dt=1e-3,
                                                  t_end=1.0, record_every=50, seed=78))
    assert other.final.x.tobytes() != a.final.x.tobytes()


def test_simulate_detects_collision():
    # weak repulsion, fast approach: separation dips to ~0.034 mid-run
    p = params_for(alpha=0.01, beta=1e-6, r=1.0, d=1)
    s = SwarmState(t=0.0, x=[[0.0], [0.5]], v=[[2.0], [-2.0]])
    config = IntegratorConfig(scheme="rk4", dt=1e-4, t_end=1.0, record_every=10,
                              collision_eps=0.05)
    traj = simulate(s, p, NONE, config)
    assert traj.termination is Termination.COLLISION
    assert traj.final.t < 1.0
    sep = abs(traj.final.x[0, 0] - traj.final.x[1, 0])
    assert sep < 0.05


def test_simulate_detects_explosion():
    p = params_for(d=1)
    s = SwarmState(t=0.0, x=[[0.0], [1.0]], v=[[-30.0], [30.0]])
    config = IntegratorConfig(scheme="rk4", dt=1e-3, t_end=10.0, record_every=100,
                              overflow_bound=50.0)
    traj = simulate(s, p, NONE, config)
    assert traj.termination is Termination.EXPLOSION
    assert np.abs(traj.final.x).max() > 50.0


def test_simulate_flags_singular_stage():
    # an RK4 half step lands the pair exactly on the same point
    p = params_for(d=1)
    s = SwarmState(t=0.0, x=[[0.0], [1.0]], v=[[1.0], [-1.0]])
    config = IntegratorConfig(scheme="rk4", dt=1.0, dt_min=1.0, t_end=3.0, record_every=1)
    traj = simulate(s, p, NONE, config)
    assert traj.termination is Termination.SINGULAR_FORCE


def test_simulate_adaptive_never_steps_below_dt_min():
    p = params_for(d=1)
    s = SwarmState(t=0.0, x=[[-0.02], [0.02]], v=[[0.8], [-0.8]])
    config = IntegratorConfig(scheme="rk4", dt=1e-3, t_end=0.5, record_every=1,
                              adaptive=True, dt_min=1e-5, close_approach_factor=0.5)
    traj = simulate(s, p, NONE, config)
    steps = np.diff(traj.times)
    assert np.all(steps >= 1e-5 * (1 - 1e-9))
    # the close approach actually triggered a shrink below the base step
    assert steps.min() < 1e-3


def test_simulate_rejects_noise_with_deterministic_schemes():
    p = params_for(sigma=0.1)
    s = SwarmState(t=0.0, x=[[0.5, 0.0], [-0.5, 0.0]], v=np.zeros((2, 2)))
    for scheme in ("rk4", "euler"):
        with pytest.raises(ValueError):
            simulate(s, p, NONE, IntegratorConfig(scheme=scheme, dt=1e-3, t_end=1.0))


def test_simulate_rejects_initial_state_outside_phase_space():
    p = params_for()
    s = SwarmState(t=0.0, x=[[0.5, 0.0], [0.5, 0.0]], v=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        simulate(s, p, NONE, IntegratorConfig(scheme="rk4", dt=1e-3, t_end=1.0))
