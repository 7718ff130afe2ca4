"""Model parameters, swarm state, phase-space validity and external forces.

The swarm couples N particles in d dimensions through a radial
attraction-repulsion force and a velocity-alignment force, both with
power-law distance weights.  Working constants are

    alpha1 = alpha * r**p,  beta1 = beta * r**p,  gamma = r**(q - p)

so that the pair kernels can be written in terms of plain inverse powers
of the separation.  The admissible configurations are those with no two
particles at the same position.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def derive_params(alpha: float, beta: float, r: float, p: float, q: float) -> tuple[float, float, float]:
    """Return the derived constants (alpha1, beta1, gamma).

    alpha1 = alpha * r**p, beta1 = beta * r**p, gamma = r**(q-p).
    Raises ValueError unless alpha, beta, r > 0 and 1 < p < q.
    """
    if not (alpha > 0 and beta > 0 and r > 0):
        raise ValueError(f"alpha, beta, r must be positive, got {alpha}, {beta}, {r}")
    if not (1.0 < p < q):
        raise ValueError(f"exponents must satisfy 1 < p < q, got p={p}, q={q}")
    rp = r**p
    return alpha * rp, beta * rp, r ** (q - p)


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64, copy=True, order="C")
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the swarm model plus derived coefficients.

    sigma is the per-particle noise amplitude (length N); alpha1, beta1 and
    gamma are recomputed from (alpha, beta, r, p, q) on construction and
    must not be supplied.  Instances are immutable and safe to share.
    """

    alpha: float
    beta: float
    r: float
    p: float
    q: float
    sigma: np.ndarray
    n_particles: int
    dim: int
    alpha1: float = field(init=False)
    beta1: float = field(init=False)
    gamma: float = field(init=False)

    def __post_init__(self):
        a1, b1, g = derive_params(self.alpha, self.beta, self.r, self.p, self.q)
        object.__setattr__(self, "alpha1", a1)
        object.__setattr__(self, "beta1", b1)
        object.__setattr__(self, "gamma", g)
        if self.n_particles < 1:
            raise ValueError(f"n_particles must be >= 1, got {self.n_particles}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if sigma.ndim == 0:
            sigma = np.full(self.n_particles, float(sigma))
        if sigma.shape != (self.n_particles,):
            raise ValueError(f"sigma must have length {self.n_particles}, got shape {sigma.shape}")
        if np.any(sigma < 0):
            raise ValueError("noise amplitudes must be >= 0")
        object.__setattr__(self, "sigma", _readonly(sigma))

    @classmethod
    def create(
        cls,
        alpha: float,
        beta: float,
        r: float,
        p: float,
        q: float,
        sigma: float | Sequence[float],
        n_particles: int,
        dim: int,
    ) -> "ModelParams":
        return cls(alpha=alpha, beta=beta, r=r, p=p, q=q, sigma=np.asarray(sigma, float),
                   n_particles=n_particles, dim=dim)

    @property
    def noiseless(self) -> bool:
        return bool(np.all(self.sigma == 0.0))


@dataclass(frozen=True)
class SwarmState:
    """Positions and velocities of all particles at one time.

    x and v have shape (N, d).  Arrays are copied and frozen on
    construction, so states can be shared and recorded without aliasing.
    """

    t: float
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError(f"x must be (N, d), got shape {x.shape}")
        if v.shape != x.shape:
            raise ValueError(f"v shape {v.shape} does not match x shape {x.shape}")
        object.__setattr__(self, "x", _readonly(x))
        object.__setattr__(self, "v", _readonly(v))

    @property
    def n_particles(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a phase-space check: ok, or the list of offending pairs."""

    ok: bool
    min_distance: float
    violations: tuple[tuple[int, int, float], ...] = ()


def validate_state(state: SwarmState, min_separation: float) -> ValidationReport:
    """Check that all pairwise distances exceed min_separation.

    Returns a report rather than raising; violations hold 0-based index
    pairs (i, j, distance) with i < j.
    """
    x = state.x
    n = x.shape[0]
    if n < 2:
        return ValidationReport(ok=True, min_distance=np.inf)
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    iu, ju = np.triu_indices(n, k=1)
    pair_d = dist[iu, ju]
    bad = pair_d <= min_separation
    violations = tuple(
        (int(i), int(j), float(d)) for i, j, d in zip(iu[bad], ju[bad], pair_d[bad])
    )
    return ValidationReport(ok=not violations, min_distance=float(pair_d.min()),
                            violations=violations)


_FORCE_KINDS = ("none", "linear_drag")


@dataclass(frozen=True)
class ExternalForceSpec:
    """External force acting on each particle.

    Only two locally Lipschitz kinds are built in: "none" (zero force) and
    "linear_drag" (force = -drag_coefficient * velocity).  Other forces can
    be added by extending _FORCE_KINDS and external_force together; any
    addition must stay locally Lipschitz in (x, v).
    """

    kind: str = "none"
    drag_coefficient: float = 0.0

    def __post_init__(self):
        if self.kind not in _FORCE_KINDS:
            raise ValueError(f"unknown external force kind {self.kind!r}; allowed: {_FORCE_KINDS}")
        if self.drag_coefficient < 0:
            raise ValueError("drag_coefficient must be >= 0")


def external_force(spec: ExternalForceSpec, t: float, x_i: np.ndarray, v_i: np.ndarray) -> np.ndarray:
    """Evaluate the external force; accepts a single particle (d,) or a stack (N, d)."""
    v_i = np.asarray(v_i, dtype=np.float64)
    if spec.kind == "none":
        return np.zeros_like(v_i)
    return -spec.drag_coefficient * v_i


def default_min_separation(params: ModelParams) -> float:
    """Numerical threshold below which positions count as coincident."""
    return 1e-9 * params.r
