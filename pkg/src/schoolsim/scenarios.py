"""Named experiment scenarios, seeded runs, batch replicates and sweeps.

Four built-in scenarios ship with the package: two damped schooling swarms
(100 particles, planar and spatial) and two noisy two-particle collision
probes (on the line, with the noise amplitude as the declared sweep axis,
and in the plane).  Initial positions are drawn uniformly from a box with
all velocities equal to v0; each run is fully determined by its seed.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from .diagnostics import Classification, StateDiagnostics, classify, diagnose
from .integrators import IntegratorConfig, Termination, Trajectory, init_stream, simulate
from .model import ExternalForceSpec, ModelParams, SwarmState, default_min_separation, validate_state
from .output import emit_diagnostics_csv, emit_snapshot_blocks, emit_trajectory_csv
from .reduced import LyapunovConfig

MAX_INIT_ATTEMPTS = 100


@dataclass(frozen=True)
class SweepSpec:
    """Declared sweep axis of a scenario: one parameter and its values."""

    parameter: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ScenarioSpec:
    """A named, seeded, fully parameterized experiment."""

    name: str
    params: ModelParams
    external: ExternalForceSpec
    init_box: tuple[float, float]
    integrator: IntegratorConfig
    v0: float = 0.0
    replicates: int = 1
    sweep: Optional[SweepSpec] = None
    description: str = ""

    def __post_init__(self):
        lo, hi = self.init_box
        if not (hi > lo):
            raise ValueError(f"init_box must be a nondegenerate interval, got {self.init_box}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")


def builtin_scenarios() -> list[ScenarioSpec]:
    schooling_2d = ScenarioSpec(
        name="schooling-2d",
        description="100 damped particles settling into a planar school",
        params=ModelParams.create(alpha=1.0, beta=0.5, r=1.0, p=3, q=4, sigma=0.015,
                                  n_particles=100, dim=2),
        external=ExternalForceSpec(kind="linear_drag", drag_coefficient=5.0),
        init_box=(0.0, 10.0),
        integrator=IntegratorConfig(scheme="euler_maruyama", dt=1e-3, t_end=15.0,
                                    record_every=100, adaptive=True, dt_min=1e-7,
                                    close_approach_factor=0.2),
    )
    schooling_3d = replace(
        schooling_2d,
        name="schooling-3d",
        description="100 damped particles settling into a spatial school",
        params=ModelParams.create(alpha=1.0, beta=0.5, r=1.0, p=3, q=4, sigma=0.015,
                                  n_particles=100, dim=3),
        integrator=replace(schooling_2d.integrator, t_end=30.0),
    )
    collision_1d = ScenarioSpec(
        name="collision-1d",
        description="two damped particles on the line; sweep sigma to probe collisions",
        params=ModelParams.create(alpha=5.0, beta=1.0, r=0.5, p=3, q=4, sigma=0.0,
                                  n_particles=2, dim=1),
        external=ExternalForceSpec(kind="linear_drag", drag_coefficient=1.0),
        init_box=(0.0, 1.0),
        integrator=IntegratorConfig(scheme="euler_maruyama", dt=1e-3, t_end=10.0,
                                    record_every=10, adaptive=True, dt_min=1e-9),
        sweep=SweepSpec(parameter="sigma", values=(0.0, 0.15, 5.0)),
    )
    collision_2d = ScenarioSpec(
        name="collision-2d",
        description="two strongly driven particles in the plane with large noise",
        params=ModelParams.create(alpha=7.0, beta=19.0, r=1.0, p=3, q=4, sigma=9.0,
                                  n_particles=2, dim=2),
        external=ExternalForceSpec(kind="linear_drag", drag_coefficient=5.0),
        init_box=(0.0, 5.0),
        integrator=IntegratorConfig(scheme="euler_maruyama", dt=1e-3, t_end=10.0,
                                    record_every=10, adaptive=True, dt_min=1e-9),
    )
    return [schooling_2d, schooling_3d, collision_1d, collision_2d]


def scenario_names() -> list[str]:
    return [s.name for s in builtin_scenarios()]


def get_scenario(name: str) -> ScenarioSpec:
    for spec in builtin_scenarios():
        if spec.name == name:
            return spec
    raise KeyError(f"unknown scenario {name!r}; available: {', '.join(scenario_names())}")


# ---------------------------------------------------------------------------
# Config file round-trip
# ---------------------------------------------------------------------------

def scenario_to_dict(spec: ScenarioSpec) -> dict:
    sigma = spec.params.sigma
    sigma_out = float(sigma[0]) if np.all(sigma == sigma[0]) else [float(s) for s in sigma]
    data = {
        "name": spec.name,
        "description": spec.description,
        "params": {
            "alpha": spec.params.alpha,
            "beta": spec.params.beta,
            "r": spec.params.r,
            "p": spec.params.p,
            "q": spec.params.q,
            "sigma": sigma_out,
            "n_particles": spec.params.n_particles,
            "dim": spec.params.dim,
        },
        "external": {
            "kind": spec.external.kind,
            "drag_coefficient": spec.external.drag_coefficient,
        },
        "init_box": [spec.init_box[0], spec.init_box[1]],
        "v0": spec.v0,
        "integrator": {
            "scheme": spec.integrator.scheme,
            "dt": spec.integrator.dt,
            "t_end": spec.integrator.t_end,
            "seed": spec.integrator.seed,
            "record_every": spec.integrator.record_every,
            "adaptive": spec.integrator.adaptive,
            "dt_min": spec.integrator.dt_min,
            "close_approach_factor": spec.integrator.close_approach_factor,
            "collision_eps": spec.integrator.collision_eps,
            "overflow_bound": spec.integrator.overflow_bound,
        },
        "replicates": spec.replicates,
    }
    if spec.sweep is not None:
        data["sweep"] = {"parameter": spec.sweep.parameter,
                         "values": [float(v) for v in spec.sweep.values]}
    return data


def scenario_from_dict(data: dict) -> ScenarioSpec:
    params = ModelParams.create(**data["params"])
    external = ExternalForceSpec(**data.get("external", {}))
    integrator = IntegratorConfig(**data.get("integrator", {}))
    sweep = None
    if data.get("sweep"):
        sweep = SweepSpec(parameter=data["sweep"]["parameter"],
                          values=tuple(data["sweep"]["values"]))
    box = data["init_box"]
    return ScenarioSpec(
        name=data["name"],
        description=data.get("description", ""),
        params=params,
        external=external,
        init_box=(float(box[0]), float(box[1])),
        v0=float(data.get("v0", 0.0)),
        integrator=integrator,
        replicates=int(data.get("replicates", 1)),
        sweep=sweep,
    )


def load_scenario(path: str | Path) -> ScenarioSpec:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return scenario_from_dict(data)


def save_scenario(spec: ScenarioSpec, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        yaml.safe_dump(scenario_to_dict(spec), fh, sort_keys=False)
    return path


_OVERRIDE_SECTIONS = ("params", "integrator", "external")


def apply_overrides(spec: ScenarioSpec, overrides: dict[str, object]) -> ScenarioSpec:
    """Apply dotted-path overrides; bare keys resolve to their unique section."""
    data = scenario_to_dict(spec)
    for key, value in overrides.items():
        parts = key.split(".")
        if len(parts) == 1 and key not in data:
            hits = [sect for sect in _OVERRIDE_SECTIONS if key in data[sect]]
            if len(hits) != 1:
                raise KeyError(f"cannot resolve override key {key!r}")
            data[hits[0]][key] = value
        else:
            node = data
            for part in parts[:-1]:
                if not isinstance(node, dict) or part not in node:
                    raise KeyError(f"unknown override path {key!r}")
                node = node[part]
            if not isinstance(node, dict) or parts[-1] not in node:
                raise KeyError(f"unknown override path {key!r}")
            node[parts[-1]] = value
    return scenario_from_dict(data)


# ---------------------------------------------------------------------------
# Seeded runs
# ---------------------------------------------------------------------------

def draw_initial_state(spec: ScenarioSpec, seed: int) -> SwarmState:
    """Uniform positions in the box, v = v0; rejects near-coincident draws."""
    rng = init_stream(seed)
    n, d = spec.params.n_particles, spec.params.dim
    lo, hi = spec.init_box
    min_sep = default_min_separation(spec.params)
    for _ in range(MAX_INIT_ATTEMPTS):
        x = rng.uniform(lo, hi, size=(n, d))
        v = np.full((n, d), spec.v0, dtype=np.float64)
        state = SwarmState(t=0.0, x=x, v=v)
        if n < 2 or validate_state(state, min_sep).ok:
            return state
    raise RuntimeError(
        f"no admissible initial draw in {MAX_INIT_ATTEMPTS} attempts (box {spec.init_box})")


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one seeded run, with the in-memory trajectory attached."""

    scenario: str
    seed: int
    termination: Termination
    final: StateDiagnostics
    classification: Classification
    outputs: tuple[Path, ...]
    trajectory: Trajectory = dataclasses.field(repr=False, compare=False, default=None)


def run_record_to_dict(record: RunRecord) -> dict:
    return {
        "scenario": record.scenario,
        "seed": record.seed,
        "termination": record.termination.value,
        "classification": record.classification.value,
        "final": {
            "t": record.trajectory.final.t if record.trajectory else None,
            "total_velocity_norm": float(np.linalg.norm(record.final.total_velocity)),
            "min_pair_distance": record.final.min_pair_distance,
            "max_pair_distance": record.final.max_pair_distance,
            "mean_nn_distance": record.final.mean_nn_distance,
            "polarization": record.final.polarization,
        },
        "outputs": [str(p) for p in record.outputs],
    }


def resolved_collision_eps(spec: ScenarioSpec) -> float:
    eps = spec.integrator.collision_eps
    return eps if eps is not None else 1e-3 * spec.params.r


def run(spec: ScenarioSpec, seed: int, out_dir: Optional[str | Path] = None,
        figures: bool = True, lyapunov: Optional[LyapunovConfig] = None) -> RunRecord:
    """Draw the seeded initial state, simulate, classify and write outputs.

    With out_dir=None nothing is written and the record only carries the
    in-memory trajectory.
    """
    state0 = draw_initial_state(spec, seed)
    config = replace(spec.integrator, seed=seed)
    traj = simulate(state0, spec.params, spec.external, config)
    classification = classify(traj, resolved_collision_eps(spec), config.overflow_bound)
    record = RunRecord(
        scenario=spec.name,
        seed=seed,
        termination=traj.termination,
        final=diagnose(traj.final),
        classification=classification,
        outputs=(),
        trajectory=traj,
    )
    if out_dir is None:
        return record

    run_dir = Path(out_dir) / spec.name / f"seed{seed:05d}"
    run_dir.mkdir(parents=True, exist_ok=True)
    outputs = [
        emit_trajectory_csv(traj, run_dir / "trajectory.csv"),
        emit_diagnostics_csv(traj, run_dir / "diagnostics.csv", lyapunov=lyapunov),
        emit_snapshot_blocks(traj, run_dir / "snapshots.dat"),
    ]
    if figures:
        from .plots import render_run_figures

        outputs.extend(render_run_figures(traj, run_dir))
    record = replace(record, outputs=tuple(outputs))
    with open(run_dir / "run.json", "w") as fh:
        json.dump(run_record_to_dict(record), fh, indent=2)
    return record


_SUMMARY_FIELDS = ("seed", "termination", "classification", "final_t",
                   "total_velocity_norm", "min_pair_distance", "max_pair_distance",
                   "mean_nn_distance", "polarization")


def classification_fractions(records: Sequence[RunRecord]) -> dict[str, float]:
    counts = {c.value: 0 for c in Classification}
    for rec in records:
        counts[rec.classification.value] += 1
    total = len(records)
    return {f"{name}_fraction": count / total for name, count in counts.items()}


def write_summary_csv(records: Sequence[RunRecord], path: str | Path) -> Path:
    import csv

    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SUMMARY_FIELDS)
        for rec in sorted(records, key=lambda r: r.seed):
            writer.writerow([
                rec.seed, rec.termination.value, rec.classification.value,
                format(rec.trajectory.final.t, ".17g"),
                format(float(np.linalg.norm(rec.final.total_velocity)), ".17g"),
                format(rec.final.min_pair_distance, ".17g"),
                format(rec.final.max_pair_distance, ".17g"),
                format(rec.final.mean_nn_distance, ".17g"),
                format(rec.final.polarization, ".17g"),
            ])
    return path


def run_replicates(spec: ScenarioSpec, base_seed: int, replicates: int,
                   out_dir: Optional[str | Path] = None, figures: bool = True,
                   lyapunov: Optional[LyapunovConfig] = None) -> list[RunRecord]:
    """Run seeds base_seed .. base_seed + replicates - 1."""
    return [run(spec, base_seed + k, out_dir=out_dir, figures=figures, lyapunov=lyapunov)
            for k in range(replicates)]


def sweep_runs(spec: ScenarioSpec, parameter: str, values: Sequence[float],
               replicates: int, base_seed: int,
               out_dir: Optional[str | Path] = None) -> list[dict]:
    """Vary one parameter, replicate seeds per value, tabulate classification fractions."""
    rows = []
    for value in values:
        varied = apply_overrides(spec, {parameter: float(value)})
        records = run_replicates(varied, base_seed, replicates, out_dir=out_dir,
                                 figures=False)
        row = {"value": float(value), "n": len(records)}
        row.update(classification_fractions(records))
        rows.append(row)
    return rows


def write_sweep_csv(rows: Sequence[dict], parameter: str, path: str | Path) -> Path:
    import csv

    path = Path(path)
    fractions = [f"{c.value}_fraction" for c in Classification]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([parameter, "n"] + fractions)
        for row in rows:
            writer.writerow([row["value"], row["n"]] + [row[f] for f in fractions])
    return path
