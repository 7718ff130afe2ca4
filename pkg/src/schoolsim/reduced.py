"""Exact two-particle reductions and Lyapunov monitors.

For N=2 the relative coordinates xi = x1 - x2, eta = v1 - v2 close on
themselves, and the scalar triple

    X = 1/||xi||,  Y = ||eta||^2,  Z = <xi, eta>

satisfies an autonomous ODE in the noiseless case.  With position noise the
X-drift picks up an Ito correction -((d-3)/2) * sigma^2 * X^3 while the Y
and Z drifts are unchanged; the diffusion parts depend on the full vectors
and are not simulated here, so the stochastic drift exists for bookkeeping
checks against full-system paths.

Two scalar monitors bound growth along paths:

    H = X^(q-4) + X^(q-2) + Y^2 + M*Z^2 + Y + X^-4 + M      (noiseless runs)
    V = X^theta + X^-4 + Y^2 + M*Z^2 + M                    (noisy runs)

V needs an exponent theta strictly inside (max(q-6, 0), min(d-2, q-2));
the window is nonempty exactly when q > 2 and d > max(q-4, 2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .forces import SingularForceError, _powi
from .model import ModelParams
from .integrators import Trajectory


@dataclass(frozen=True)
class ReducedState:
    """Inverse separation X > 0, squared relative speed Y >= 0, inner product Z."""

    X: float
    Y: float
    Z: float

    def __post_init__(self):
        if not (self.X > 0):
            raise ValueError(f"X must be > 0, got {self.X}")
        if self.Y < 0:
            raise ValueError(f"Y must be >= 0, got {self.Y}")

    @property
    def cauchy_schwarz_defect(self) -> float:
        """Y - X^2 Z^2; nonnegative up to round-off for states of real pairs."""
        return self.Y - self.X**2 * self.Z**2


@dataclass(frozen=True)
class ReducedPath:
    """Time series of the reduced coordinates along one run."""

    t: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def state(self, i: int) -> ReducedState:
        return ReducedState(X=float(self.X[i]), Y=float(self.Y[i]), Z=float(self.Z[i]))


def reduce_pair(x1: np.ndarray, x2: np.ndarray, v1: np.ndarray, v2: np.ndarray) -> ReducedState:
    """Map a two-particle state to the reduced (X, Y, Z) coordinates."""
    xi = np.asarray(x1, dtype=np.float64) - np.asarray(x2, dtype=np.float64)
    eta = np.asarray(v1, dtype=np.float64) - np.asarray(v2, dtype=np.float64)
    sep = float(np.sqrt(np.dot(xi, xi)))
    if sep == 0.0:
        raise SingularForceError((0, 1), "reduce_pair at coincident positions")
    return ReducedState(X=1.0 / sep, Y=float(np.dot(eta, eta)), Z=float(np.dot(xi, eta)))


def reduce_trajectory(traj: Trajectory) -> ReducedPath:
    """Apply the two-particle reduction to every recorded sample."""
    if traj.params.n_particles != 2:
        raise ValueError("reduce_trajectory needs an N=2 trajectory")
    xs = np.stack([s.x for s in traj.samples])
    vs = np.stack([s.v for s in traj.samples])
    xi = xs[:, 0, :] - xs[:, 1, :]
    eta = vs[:, 0, :] - vs[:, 1, :]
    sep = np.sqrt(np.einsum("ij,ij->i", xi, xi))
    return ReducedPath(
        t=np.array([s.t for s in traj.samples]),
        X=1.0 / sep,
        Y=np.einsum("ij,ij->i", eta, eta),
        Z=np.einsum("ij,ij->i", xi, eta),
    )


@njit(cache=True)
def _xyz_rhs(X, Y, Z, a1, b1, g, p, q, exp_int, pi, qi):
    if exp_int:
        Xp = _powi(X, pi)
        Xq = _powi(X, qi)
        Xpm2 = _powi(X, pi - 2) if pi >= 2 else X ** (p - 2.0)
        Xqm2 = _powi(X, qi - 2) if qi >= 2 else X ** (q - 2.0)
    else:
        Xp = X**p
        Xq = X**q
        Xpm2 = X ** (p - 2.0)
        Xqm2 = X ** (q - 2.0)
    damp = b1 * Xp + b1 * g * Xq
    dX = -(X**3) * Z
    dY = -4.0 * a1 * Xp * Z + 4.0 * a1 * g * Xq * Z - 4.0 * damp * Y
    dZ = Y - 2.0 * a1 * Xpm2 + 2.0 * a1 * g * Xqm2 - 2.0 * damp * Z
    return dX, dY, dZ


def _rhs_args(params: ModelParams):
    p_int = float(params.p).is_integer()
    q_int = float(params.q).is_integer()
    if p_int and q_int:
        return (params.alpha1, params.beta1, params.gamma, params.p, params.q,
                True, int(params.p), int(params.q))
    return (params.alpha1, params.beta1, params.gamma, params.p, params.q, False, 0, 0)


def reduced_drift_det(s: ReducedState, params: ModelParams) -> tuple[float, float, float]:
    """Right-hand side of the noiseless reduced system at s."""
    return _xyz_rhs(s.X, s.Y, s.Z, *_rhs_args(params))


def reduced_drift_stoch(s: ReducedState, params: ModelParams, sigma: float,
                        d: int) -> tuple[float, float, float]:
    """Drift part of the noisy reduced system; sigma = sqrt(sigma1^2 + sigma2^2).

    Only dX changes, by the Ito correction -((d-3)/2) sigma^2 X^3, which
    vanishes identically at d=3.  Diffusion terms are not included.
    """
    dX, dY, dZ = _xyz_rhs(s.X, s.Y, s.Z, *_rhs_args(params))
    return dX - 0.5 * (d - 3) * sigma**2 * s.X**3, dY, dZ


@njit(cache=True)
def _integrate_xyz_kernel(X0, Y0, Z0, a1, b1, g, p, q, exp_int, pi, qi,
                          dt, n_steps, record_every):
    n_rec = n_steps // record_every + 2
    out = np.empty((n_rec, 4))
    out[0, 0] = 0.0
    out[0, 1] = X0
    out[0, 2] = Y0
    out[0, 3] = Z0
    idx = 1
    X, Y, Z = X0, Y0, Z0
    t = 0.0
    half = 0.5 * dt
    for step in range(1, n_steps + 1):
        if X <= 0.0 or not (np.isfinite(X) and np.isfinite(Y) and np.isfinite(Z)):
            break
        k1 = _xyz_rhs(X, Y, Z, a1, b1, g, p, q, exp_int, pi, qi)
        k2 = _xyz_rhs(X + half * k1[0], Y + half * k1[1], Z + half * k1[2],
                      a1, b1, g, p, q, exp_int, pi, qi)
        k3 = _xyz_rhs(X + half * k2[0], Y + half * k2[1], Z + half * k2[2],
                      a1, b1, g, p, q, exp_int, pi, qi)
        k4 = _xyz_rhs(X + dt * k3[0], Y + dt * k3[1], Z + dt * k3[2],
                      a1, b1, g, p, q, exp_int, pi, qi)
        sixth = dt / 6.0
        X += sixth * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        Y += sixth * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        Z += sixth * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        t += dt
        if step % record_every == 0:
            out[idx, 0] = t
            out[idx, 1] = X
            out[idx, 2] = Y
            out[idx, 3] = Z
            idx += 1
    return out[:idx]


def integrate_reduced(s0: ReducedState, params: ModelParams, dt: float, t_end: float,
                      record_every: int = 1) -> ReducedPath:
    """RK4 integration of the noiseless reduced system from s0."""
    if not (dt > 0 and t_end >= 0):
        raise ValueError("need dt > 0 and t_end >= 0")
    n_steps = int(round(t_end / dt))
    out = _integrate_xyz_kernel(s0.X, s0.Y, s0.Z, *_rhs_args(params), dt, n_steps,
                                record_every)
    return ReducedPath(t=out[:, 0].copy(), X=out[:, 1].copy(),
                       Y=out[:, 2].copy(), Z=out[:, 3].copy())


def _h_formula(X, Y, Z, M, q):
    return X ** (q - 4.0) + X ** (q - 2.0) + Y**2 + M * Z**2 + Y + X ** (-4.0) + M


def lyapunov_h(s: ReducedState, M: float, q: float) -> float:
    """Growth monitor for noiseless pair runs; finite paths keep it finite."""
    if not (M > 0):
        raise ValueError("M must be > 0")
    if not (q > 2):
        raise ValueError("q must be > 2")
    return float(_h_formula(s.X, s.Y, s.Z, M, q))


def lyapunov_h_values(path: ReducedPath, M: float, q: float) -> np.ndarray:
    if not (M > 0 and q > 2):
        raise ValueError("need M > 0 and q > 2")
    return _h_formula(path.X, path.Y, path.Z, M, q)


def _v_formula(X, Y, Z, M, theta):
    return X**theta + X ** (-4.0) + Y**2 + M * Z**2 + M


def lyapunov_v(s: ReducedState, M: float, theta: float) -> float:
    """Growth monitor for noisy pair runs; theta must be positive.

    Full admissibility of theta additionally depends on (d, q); check it
    with theta_admissible when configuring a run.
    """
    if not (M > 0):
        raise ValueError("M must be > 0")
    if not (theta > 0):
        raise ValueError(f"theta must be > 0, got {theta}")
    return float(_v_formula(s.X, s.Y, s.Z, M, theta))


def lyapunov_v_values(path: ReducedPath, M: float, theta: float) -> np.ndarray:
    if not (M > 0 and theta > 0):
        raise ValueError("need M > 0 and theta > 0")
    return _v_formula(path.X, path.Y, path.Z, M, theta)


def admissible_theta_interval(d: int, q: float) -> tuple[float, float]:
    """Open interval of admissible exponents for the V monitor."""
    return max(q - 6.0, 0.0), min(d - 2.0, q - 2.0)


def theta_admissible(d: int, q: float, theta: float) -> bool:
    """True iff max(q-6, 0) < theta < min(d-2, q-2)."""
    lo, hi = admissible_theta_interval(d, q)
    return lo < theta < hi


def theta_feasible(d: int, q: float) -> bool:
    """True iff some admissible theta exists, i.e. q > 2 and d > max(q-4, 2)."""
    lo, hi = admissible_theta_interval(d, q)
    return lo < hi


@dataclass(frozen=True)
class LyapunovConfig:
    """Monitor constants: the weight M, the V exponent, and fitted growth rates."""

    M: float
    theta: Optional[float] = None
    M1_estimate: Optional[float] = None
    M2_estimate: Optional[float] = None

    def __post_init__(self):
        if not (self.M > 0):
            raise ValueError("M must be > 0")
        if self.theta is not None and not (self.theta > 0):
            raise ValueError("theta must be > 0 when given")


def default_lyapunov_config(params: ModelParams, d: Optional[int] = None) -> LyapunovConfig:
    """M = 10 * max(1, alpha1, beta1, gamma); theta = window midpoint when one exists."""
    M = 10.0 * max(1.0, params.alpha1, params.beta1, params.gamma)
    theta = None
    dim = params.dim if d is None else d
    if theta_feasible(dim, params.q):
        lo, hi = admissible_theta_interval(dim, params.q)
        theta = 0.5 * (lo + hi)
    return LyapunovConfig(M=M, theta=theta)


def first_exit_time(path: ReducedPath, k: float) -> Optional[float]:
    """First recorded time with X outside (1/k, k) or Y outside [0, k).

    Returns None when the window is never left.  Raises ValueError unless
    the window strictly contains the initial values.
    """
    if len(path) == 0:
        raise ValueError("empty path")
    x0, y0 = path.X[0], path.Y[0]
    if not (k > max(x0, 1.0 / x0, y0)):
        raise ValueError(f"k={k} does not contain the initial state (X0={x0}, Y0={y0})")
    outside = (path.X <= 1.0 / k) | (path.X >= k) | (path.Y < 0.0) | (path.Y >= k)
    hits = np.nonzero(outside)[0]
    if hits.size == 0:
        return None
    return float(path.t[hits[0]])


def cauchy_schwarz_defect(path: ReducedPath) -> np.ndarray:
    """Y - X^2 Z^2 along the path, nonnegative up to round-off for real pairs."""
    return path.Y - path.X**2 * path.Z**2


def fit_growth_rate(t: np.ndarray, values: np.ndarray) -> float:
    """Least-squares slope of log(values) against t."""
    t = np.asarray(t, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        return math.inf
    return float(np.polyfit(t, np.log(values), 1)[0])


def envelope_rate(t: np.ndarray, values: np.ndarray) -> float:
    """Smallest rate m with values(t) <= values(0) * exp(m t) on the grid."""
    t = np.asarray(t, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        return math.inf
    mask = t > 0
    if not np.any(mask):
        return 0.0
    return float(np.max((np.log(values[mask]) - np.log(values[0])) / t[mask]))


def exponential_bound_rate(t: np.ndarray, values: np.ndarray) -> float:
    """Fitted growth constant: least-squares rate raised to the envelope rate.

    The result m is the smallest nonnegative constant at least the
    regression slope for which values(t) <= values(0) * exp(m t) holds at
    every sample; infinite when the series is non-finite or non-positive.
    """
    return max(0.0, fit_growth_rate(t, values), envelope_rate(t, values))
