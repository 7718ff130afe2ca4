"""Figure rendering for the run report path.

Figures complement the CSV output and are never parsed back; the choice of
figure depends on the run: snapshot grids for real swarms, separation
traces for particle pairs, coordinate traces on the line.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diagnostics import diagnose, pair_equilibrium_distance
from .integrators import Trajectory

FIG_DPI = 120
SNAPSHOT_COUNT = 4


def apply_style() -> None:
    plt.rcParams["figure.dpi"] = FIG_DPI
    plt.rcParams["axes.grid"] = True
    plt.rcParams["grid.alpha"] = 0.3
    plt.rcParams["font.size"] = 9


def _snapshot_indices(n_samples: int) -> list[int]:
    if n_samples <= SNAPSHOT_COUNT:
        return list(range(n_samples))
    return [round(k * (n_samples - 1) / (SNAPSHOT_COUNT - 1)) for k in range(SNAPSHOT_COUNT)]


def _snapshot_grid(traj: Trajectory, path: Path) -> Path:
    idx = _snapshot_indices(len(traj.samples))
    d = traj.params.dim
    fig = plt.figure(figsize=(3.2 * len(idx), 3.2))
    for col, i in enumerate(idx):
        s = traj.samples[i]
        if d >= 3:
            ax = fig.add_subplot(1, len(idx), col + 1, projection="3d")
            ax.scatter(s.x[:, 0], s.x[:, 1], s.x[:, 2], s=6)
            ax.quiver(s.x[:, 0], s.x[:, 1], s.x[:, 2],
                      s.v[:, 0], s.v[:, 1], s.v[:, 2], length=0.5, normalize=False)
        else:
            ax = fig.add_subplot(1, len(idx), col + 1)
            ax.scatter(s.x[:, 0], s.x[:, 1], s=8)
            ax.quiver(s.x[:, 0], s.x[:, 1], s.v[:, 0], s.v[:, 1],
                      angles="xy", scale_units="xy", width=0.004)
            ax.set_aspect("equal")
        ax.set_title(f"t = {s.t:.3g}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _line_trajectories(traj: Trajectory, path: Path) -> Path:
    times = traj.times
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for i in range(traj.params.n_particles):
        ax.plot(times, [s.x[i, 0] for s in traj.samples], label=f"particle {i}")
    ax.set_xlabel("t")
    ax.set_ylabel("position")
    if traj.params.n_particles <= 6:
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _pair_distance(traj: Trajectory, path: Path) -> Path:
    times = traj.times
    dist = [np.linalg.norm(s.x[0] - s.x[1]) for s in traj.samples]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(times, dist)
    ax.axhline(pair_equilibrium_distance(traj.params), color="tab:green", lw=0.8,
               label="equilibrium separation")
    ax.set_xlabel("t")
    ax.set_ylabel("pair distance")
    ax.set_ylim(bottom=0)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _order_parameters(traj: Trajectory, path: Path) -> Path:
    times = traj.times
    polar = []
    mean_speed = []
    for s in traj.samples:
        diag = diagnose(s)
        polar.append(diag.polarization)
        mean_speed.append(float(np.mean(np.linalg.norm(s.v, axis=1))))
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 4.5), sharex=True)
    ax1.plot(times, polar)
    ax1.set_ylabel("polarization")
    ax1.set_ylim(-0.02, 1.02)
    ax2.plot(times, mean_speed)
    ax2.set_ylabel("mean speed")
    ax2.set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_run_figures(traj: Trajectory, out_dir: str | Path) -> list[Path]:
    """Render the figures appropriate to the run layout into out_dir."""
    apply_style()
    out_dir = Path(out_dir)
    figures: list[Path] = []
    n, d = traj.params.n_particles, traj.params.dim
    if n == 2:
        figures.append(_pair_distance(traj, out_dir / "pair_distance.png"))
        if d == 1:
            figures.append(_line_trajectories(traj, out_dir / "trajectories.png"))
    elif d == 1:
        figures.append(_line_trajectories(traj, out_dir / "trajectories.png"))
    else:
        figures.append(_snapshot_grid(traj, out_dir / "positions.png"))
    figures.append(_order_parameters(traj, out_dir / "order_parameters.png"))
    return figures
