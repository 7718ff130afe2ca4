"""Per-state and per-trajectory observables and outcome classification."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .model import ModelParams, SwarmState
from .integrators import Termination, Trajectory


@dataclass(frozen=True)
class StateDiagnostics:
    """Snapshot observables of one swarm state.

    polarization is ||sum v_i|| / sum ||v_i||, defined as 1 for an all-zero
    velocity state (fully ordered at rest).  Pair-distance statistics are
    inf for a single particle.
    """

    total_velocity: np.ndarray
    center_of_mass: np.ndarray
    min_pair_distance: float
    max_pair_distance: float
    mean_nn_distance: float
    polarization: float


@njit(cache=True)
def _pair_stats(x):
    n, d = x.shape
    min_all = np.inf
    max_all = 0.0
    nn_sum = 0.0
    for i in range(n):
        nn = np.inf
        for j in range(n):
            if j == i:
                continue
            d2 = 0.0
            for k in range(d):
                diff = x[i, k] - x[j, k]
                d2 += diff * diff
            if d2 < nn:
                nn = d2
            if d2 > max_all:
                max_all = d2
        if nn < min_all:
            min_all = nn
        nn_sum += np.sqrt(nn)
    return np.sqrt(min_all), np.sqrt(max_all), nn_sum / n


def diagnose(state: SwarmState) -> StateDiagnostics:
    x, v = state.x, state.v
    n = x.shape[0]
    total_v = v.sum(axis=0)
    speeds_sum = float(np.sqrt(np.einsum("ij,ij->i", v, v)).sum())
    if speeds_sum == 0.0:
        polarization = 1.0
    else:
        polarization = min(1.0, float(np.sqrt(np.dot(total_v, total_v))) / speeds_sum)
    if n >= 2:
        min_d, max_d, mean_nn = _pair_stats(x)
    else:
        min_d = max_d = mean_nn = math.inf
    return StateDiagnostics(
        total_velocity=total_v,
        center_of_mass=x.mean(axis=0),
        min_pair_distance=float(min_d),
        max_pair_distance=float(max_d),
        mean_nn_distance=float(mean_nn),
        polarization=polarization,
    )


class Classification(str, enum.Enum):
    SCHOOLED = "schooled"
    COLLIDED = "collided"
    EXPLODED = "exploded"
    UNDECIDED = "undecided"


def default_schooling_bound(params: ModelParams) -> float:
    """Packing-scale diameter heuristic: 2 * r * N**(1/d)."""
    return 2.0 * params.r * params.n_particles ** (1.0 / params.dim)


def classify(traj: Trajectory, collision_eps: float, overflow_bound: float,
             schooling_diameter_bound: Optional[float] = None) -> Classification:
    """Outcome of a run, checked in precedence order collision > explosion.

    collided: some recorded state has a pair distance below collision_eps.
    exploded: some recorded coordinate exceeds overflow_bound or is not finite.
    schooled: the run completed and the final swarm diameter is within the
    bound (default 2*r*N**(1/d)).  Anything else is undecided.
    """
    if not traj.samples:
        raise ValueError("empty trajectory")
    if schooling_diameter_bound is None:
        schooling_diameter_bound = default_schooling_bound(traj.params)
    n = traj.params.n_particles
    for s in traj.samples:
        if n >= 2 and _pair_stats(s.x)[0] < collision_eps:
            return Classification.COLLIDED
    for s in traj.samples:
        finite = np.all(np.isfinite(s.x)) and np.all(np.isfinite(s.v))
        if not finite or max(np.abs(s.x).max(), np.abs(s.v).max()) > overflow_bound:
            return Classification.EXPLODED
    if traj.termination is Termination.COMPLETED and n >= 2:
        if _pair_stats(traj.final.x)[1] <= schooling_diameter_bound:
            return Classification.SCHOOLED
    return Classification.UNDECIDED


def pair_equilibrium_distance(params: ModelParams) -> float:
    """The unique zero of the radial position kernel: gamma**(1/(q-p)) = r."""
    return float(params.gamma ** (1.0 / (params.q - params.p)))
