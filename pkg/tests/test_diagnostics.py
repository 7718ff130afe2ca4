import math

import numpy as np

from schoolsim import (Classification, ExternalForceSpec, IntegratorConfig, ModelParams,
                       SwarmState, Termination, Trajectory, classify, default_schooling_bound,
                       diagnose, pair_equilibrium_distance, simulate)

NONE = ExternalForceSpec()


def params_for(alpha=1.0, beta=0.5, r=1.0, p=3, q=4, n=2, d=2, sigma=0.0):
    return ModelParams.create(alpha=alpha, beta=beta, r=r, p=p, q=q, sigma=sigma,
                              n_particles=n, dim=d)


def make_traj(params, samples, termination=Termination.COMPLETED):
    config = IntegratorConfig(scheme="rk4", dt=1e-3, t_end=max(s.t for s in samples) or 1.0)
    return Trajectory(params=params, config=config, external=NONE,
                      samples=tuple(samples), termination=termination)


def test_diagnose_opposite_velocities():
    s = SwarmState(t=0.0, x=[[0.0, 0.0], [3.0, 0.0]], v=[[1.0, 0.0], [-1.0, 0.0]])
    d = diagnose(s)
    assert np.all(d.total_velocity == 0.0)
    assert d.polarization == 0.0
    assert d.min_pair_distance == d.max_pair_distance == d.mean_nn_distance == 3.0
    assert np.allclose(d.center_of_mass, [1.5, 0.0])


def test_diagnose_unit_square():
    # brute force over the 6 pairs: min 1, max sqrt(2), every NN distance 1
    s = SwarmState(t=0.0, x=[[0, 0], [1, 0], [0, 1], [1, 1]], v=np.zeros((4, 2)))
    d = diagnose(s)
    assert d.min_pair_distance == 1.0
    assert d.max_pair_distance == math.sqrt(2)
    assert d.mean_nn_distance == 1.0


def test_diagnose_at_rest_is_fully_polarized():
    s = SwarmState(t=0.0, x=[[0.0, 0.0], [1.0, 0.0]], v=np.zeros((2, 2)))
    assert diagnose(s).polarization == 1.0


def test_diagnose_polarization_within_bounds_and_ordering():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = rng.integers(2, 12)
        s = SwarmState(t=0.0, x=rng.uniform(0, 5, (n, 3)), v=rng.standard_normal((n, 3)))
        d = diagnose(s)
        assert 0.0 <= d.polarization <= 1.0
        assert d.min_pair_distance <= d.mean_nn_distance <= d.max_pair_distance


def test_diagnose_permutation_invariant():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 5, (7, 2))
    v = rng.standard_normal((7, 2))
    perm = rng.permutation(7)
    a = diagnose(SwarmState(t=0.0, x=x, v=v))
    b = diagnose(SwarmState(t=0.0, x=x[perm], v=v[perm]))
    assert np.allclose(a.total_velocity, b.total_velocity)
    assert a.min_pair_distance == b.min_pair_distance
    assert a.max_pair_distance == b.max_pair_distance
    assert np.isclose(a.mean_nn_distance, b.mean_nn_distance)
    assert np.isclose(a.polarization, b.polarization)


def test_classify_resting_pair_is_schooled():
    p = params_for()
    s = SwarmState(t=0.0, x=[[0.0, 0.0], [1.0, 0.0]], v=np.zeros((2, 2)))
    traj = make_traj(p, [s])
    bound = default_schooling_bound(p)
    assert bound >= p.r
    assert classify(traj, collision_eps=1e-3, overflow_bound=1e12) is Classification.SCHOOLED


def test_classify_collision_from_close_sample():
    p = params_for()
    near = SwarmState(t=1.0, x=[[0.0, 0.0], [1e-6, 0.0]], v=np.zeros((2, 2)))
    start = SwarmState(t=0.0, x=[[0.0, 0.0], [1.0, 0.0]], v=np.zeros((2, 2)))
    traj = make_traj(p, [start, near], termination=Termination.COLLISION)
    assert classify(traj, collision_eps=1e-3, overflow_bound=1e12) is Classification.COLLIDED


def test_classify_collision_takes_precedence_over_explosion():
    p = params_for()
    blown = SwarmState(t=0.5, x=[[1e13, 0.0], [0.0, 0.0]], v=np.zeros((2, 2)))
    near = SwarmState(t=1.0, x=[[0.0, 0.0], [1e-6, 0.0]], v=np.zeros((2, 2)))
    traj = make_traj(p, [blown, near], termination=Termination.EXPLOSION)
    assert classify(traj, collision_eps=1e-3, overflow_bound=1e12) is Classification.COLLIDED


def test_classify_explosion():
    p = params_for()
    start = SwarmState(t=0.0, x=[[0.0, 0.0], [1.0, 0.0]], v=np.zeros((2, 2)))
    blown = SwarmState(t=0.5, x=[[1e13, 0.0], [0.0, 0.0]], v=np.zeros((2, 2)))
    traj = make_traj(p, [start, blown], termination=Termination.EXPLOSION)
    assert classify(traj, collision_eps=1e-3, overflow_bound=1e12) is Classification.EXPLODED


def test_classify_undecided_for_spread_out_completed_run():
    p = params_for()
    wide = SwarmState(t=1.0, x=[[0.0, 0.0], [50.0, 0.0]], v=np.zeros((2, 2)))
    traj = make_traj(p, [wide])
    assert classify(traj, collision_eps=1e-3, overflow_bound=1e12) is Classification.UNDECIDED


def test_pair_equilibrium_distance_closed_form():
    assert pair_equilibrium_distance(params_for(r=1.0)) == 1.0
    assert pair_equilibrium_distance(params_for(alpha=5, beta=1, r=0.5, d=1)) == 0.5
    assert pair_equilibrium_distance(params_for(r=2.0, p=2.5, q=4.5)) == \
        np.float64(2.0 ** (4.5 - 2.5)) ** (1 / (4.5 - 2.5))


def test_damped_pair_settles_at_equilibrium_distance():
    # drag removes energy until the pair rests where the position kernel
    # vanishes; a shorter horizon than the acceptance run, looser tolerance
    p = params_for(alpha=1.0, beta=0.5, r=1.0)
    drag = ExternalForceSpec(kind="linear_drag", drag_coefficient=1.0)
    s = SwarmState(t=0.0, x=[[0.75, 0.0], [-0.75, 0.0]], v=np.zeros((2, 2)))
    config = IntegratorConfig(scheme="rk4", dt=1e-2, t_end=60.0, record_every=100)
    traj = simulate(s, p, drag, config)
    assert traj.termination is Termination.COMPLETED
    sep = np.linalg.norm(traj.final.x[0] - traj.final.x[1])
    assert abs(sep - pair_equilibrium_distance(p)) < 0.01
