"""Pairwise interaction kernels and drift assembly.

For a pair at separation s = ||x_i - x_j|| the two kernels are

    position:  -alpha1 * (s**-p - gamma * s**-q) * (x_i - x_j)
    velocity:  -beta1  * (s**-p + gamma * s**-q) * (v_i - v_j)

The position kernel is attractive for s > r, repulsive for s < r and
vanishes at s = r; the velocity kernel always damps the relative
velocity.  The full drift sums both kernels over all ordered pairs in
ascending j order per i (the determinism contract) and adds the external
force.  The O(N^2) accumulation runs in a compiled kernel; there is no
cutoff and no neighbor list.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import ExternalForceSpec, ModelParams, SwarmState, external_force


class SingularForceError(Exception):
    """Raised when an interaction is evaluated at coincident positions."""

    def __init__(self, pair: tuple[int, int], message: str | None = None):
        self.pair = pair
        super().__init__(message or f"coincident positions for particle pair {pair}")


@njit(cache=True)
def _powi(base: float, n: int) -> float:
    # exponentiation by squaring; n >= 0
    result = 1.0
    b = base
    k = n
    while k > 0:
        if k & 1:
            result *= b
        b *= b
        k >>= 1
    return result


@njit(cache=True)
def _inv_powers(inv_s: float, p: float, q: float, exp_int: bool, pi: int, qi: int) -> tuple[float, float]:
    # s**-p and s**-q, with a multiply-only fast path for integer exponents
    if exp_int:
        return _powi(inv_s, pi), _powi(inv_s, qi)
    return inv_s**p, inv_s**q


@njit(cache=True)
def _drift_kernel(x, v, alpha1, beta1, gamma, p, q, exp_int, pi, qi, dvdt):
    """Accumulate interaction accelerations into dvdt (overwritten).

    Returns (min_d2, i_min, j_min): the smallest squared pair distance seen
    and the pair attaining it.  min_d2 == 0.0 marks a singular evaluation.
    """
    n, d = x.shape
    min_d2 = np.inf
    i_min = -1
    j_min = -1
    for i in range(n):
        for k in range(d):
            dvdt[i, k] = 0.0
        for j in range(n):
            if j == i:
                continue
            d2 = 0.0
            for k in range(d):
                diff = x[i, k] - x[j, k]
                d2 += diff * diff
            if d2 < min_d2:
                min_d2 = d2
                i_min = i
                j_min = j
            if d2 == 0.0:
                continue
            inv_s = 1.0 / np.sqrt(d2)
            sp, sq = _inv_powers(inv_s, p, q, exp_int, pi, qi)
            c_pos = -alpha1 * (sp - gamma * sq)
            c_vel = -beta1 * (sp + gamma * sq)
            for k in range(d):
                dvdt[i, k] += c_pos * (x[i, k] - x[j, k]) + c_vel * (v[i, k] - v[j, k])
    return min_d2, i_min, j_min


def _int_exponents(params: ModelParams) -> tuple[bool, int, int]:
    p_int = float(params.p).is_integer()
    q_int = float(params.q).is_integer()
    if p_int and q_int:
        return True, int(params.p), int(params.q)
    return False, 0, 0


def _drift_arrays(x: np.ndarray, v: np.ndarray, params: ModelParams,
                  external: ExternalForceSpec, t: float = 0.0) -> tuple[np.ndarray, float]:
    """Interaction + external accelerations on raw arrays; returns (dvdt, min_dist)."""
    exp_int, pi, qi = _int_exponents(params)
    dvdt = np.empty_like(x)
    min_d2, i_min, j_min = _drift_kernel(
        x, v, params.alpha1, params.beta1, params.gamma, params.p, params.q,
        exp_int, pi, qi, dvdt,
    )
    if min_d2 == 0.0:
        raise SingularForceError((i_min, j_min))
    if external.kind != "none":
        dvdt += external_force(external, t, x, v)
    return dvdt, float(np.sqrt(min_d2)) if np.isfinite(min_d2) else np.inf


@dataclass(frozen=True)
class DriftEval:
    """Right-hand side of the coupled system: dxdt = v, dvdt = accelerations."""

    dxdt: np.ndarray
    dvdt: np.ndarray


def pair_position_force(x_i: np.ndarray, x_j: np.ndarray, params: ModelParams) -> np.ndarray:
    """Attraction-repulsion force exerted on particle i by particle j."""
    x_i = np.asarray(x_i, dtype=np.float64)
    x_j = np.asarray(x_j, dtype=np.float64)
    diff = x_i - x_j
    s = float(np.sqrt(np.dot(diff, diff)))
    if s == 0.0:
        raise SingularForceError((0, 1), "pair_position_force at coincident positions")
    return -params.alpha1 * (s**-params.p - params.gamma * s**-params.q) * diff


def pair_velocity_force(x_i: np.ndarray, x_j: np.ndarray, v_i: np.ndarray, v_j: np.ndarray,
                        params: ModelParams) -> np.ndarray:
    """Alignment force on particle i from particle j: damps v_i - v_j."""
    x_i = np.asarray(x_i, dtype=np.float64)
    x_j = np.asarray(x_j, dtype=np.float64)
    diff = x_i - x_j
    s = float(np.sqrt(np.dot(diff, diff)))
    if s == 0.0:
        raise SingularForceError((0, 1), "pair_velocity_force at coincident positions")
    dv = np.asarray(v_i, dtype=np.float64) - np.asarray(v_j, dtype=np.float64)
    return -params.beta1 * (s**-params.p + params.gamma * s**-params.q) * dv


def drift(state: SwarmState, params: ModelParams, external: ExternalForceSpec) -> DriftEval:
    """Full drift of the coupled system at the given state.

    dvdt_i sums both pair kernels over j != i in ascending index order, then
    adds the external force.  Raises SingularForceError with the offending
    pair if two particles coincide.
    """
    dvdt, _ = _drift_arrays(state.x, state.v, params, external, state.t)
    return DriftEval(dxdt=state.v.copy(), dvdt=dvdt)
