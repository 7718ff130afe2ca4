"""Delimited trajectory/diagnostics output and plot-ready snapshot blocks.

All floats are written with 17 significant digits so files round-trip to
the exact binary values; identical seeds therefore give byte-identical
files.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

import numpy as np

from .diagnostics import diagnose
from .integrators import Trajectory
from .reduced import LyapunovConfig, lyapunov_h_values, lyapunov_v_values, reduce_trajectory


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_trajectory_csv(traj: Trajectory, path: str | Path) -> Path:
    """One row per (sample, particle): t, particle, x0..x{d-1}, v0..v{d-1}."""
    path = Path(path)
    d = traj.params.dim
    header = ["t", "particle"] + [f"x{k}" for k in range(d)] + [f"v{k}" for k in range(d)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for s in traj.samples:
            for i in range(traj.params.n_particles):
                writer.writerow([_fmt(s.t), i] + [_fmt(c) for c in s.x[i]] + [_fmt(c) for c in s.v[i]])
    return path


def read_trajectory_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of emit_trajectory_csv: (times, x, v) with x, v of shape (T, N, d)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = sum(1 for c in header if c.startswith("x"))
        rows = [(float(r[0]), int(r[1]), [float(c) for c in r[2:2 + d]],
                 [float(c) for c in r[2 + d:2 + 2 * d]]) for r in reader]
    times = sorted({r[0] for r in rows})
    n = max(r[1] for r in rows) + 1
    t_index = {t: k for k, t in enumerate(times)}
    x = np.empty((len(times), n, d))
    v = np.empty((len(times), n, d))
    for t, i, xi, vi in rows:
        x[t_index[t], i] = xi
        v[t_index[t], i] = vi
    return np.array(times), x, v


def emit_diagnostics_csv(traj: Trajectory, path: str | Path,
                         lyapunov: Optional[LyapunovConfig] = None) -> Path:
    """Per-sample observables; X, Y, Z columns appear only for N=2 runs.

    With a LyapunovConfig (N=2 only) an H column is added when q > 2 and a
    V column when theta is set.
    """
    path = Path(path)
    pair = traj.params.n_particles == 2
    header = ["t", "total_velocity_norm", "min_pair_distance", "max_pair_distance",
              "mean_nn_distance", "polarization"]
    reduced = h_vals = v_vals = None
    if pair:
        header += ["X", "Y", "Z"]
        reduced = reduce_trajectory(traj)
        if lyapunov is not None:
            if traj.params.q > 2:
                header.append("H")
                h_vals = lyapunov_h_values(reduced, lyapunov.M, traj.params.q)
            if lyapunov.theta is not None:
                header.append("V")
                v_vals = lyapunov_v_values(reduced, lyapunov.M, lyapunov.theta)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k, s in enumerate(traj.samples):
            diag = diagnose(s)
            row = [_fmt(s.t), _fmt(np.linalg.norm(diag.total_velocity)),
                   _fmt(diag.min_pair_distance), _fmt(diag.max_pair_distance),
                   _fmt(diag.mean_nn_distance), _fmt(diag.polarization)]
            if reduced is not None:
                row += [_fmt(reduced.X[k]), _fmt(reduced.Y[k]), _fmt(reduced.Z[k])]
            if h_vals is not None:
                row.append(_fmt(h_vals[k]))
            if v_vals is not None:
                row.append(_fmt(v_vals[k]))
            writer.writerow(row)
    return path


def emit_snapshot_blocks(traj: Trajectory, path: str | Path) -> Path:
    """Gnuplot-style layout: one whitespace-delimited block per snapshot.

    Each block starts with '# t = <time>' and holds one particle per line
    with position then velocity columns; blocks are separated by blank
    lines (gnuplot's `index` convention).
    """
    path = Path(path)
    d = traj.params.dim
    with open(path, "w") as fh:
        cols = " ".join([f"x{k}" for k in range(d)] + [f"v{k}" for k in range(d)])
        fh.write(f"# columns: {cols}\n\n")
        for s in traj.samples:
            fh.write(f"# t = {_fmt(s.t)}\n")
            for i in range(traj.params.n_particles):
                vals = [_fmt(c) for c in s.x[i]] + [_fmt(c) for c in s.v[i]]
                fh.write(" ".join(vals) + "\n")
            fh.write("\n")
    return path
