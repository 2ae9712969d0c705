"""Run orchestration behind the CLI verbs: run, static, modes and batch."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

import checks
from artifacts import RunManifest, snapshot_table, write_csv, write_json, write_trajectory_artifacts
from config import N_JOBS, OUTPUT_DIR
from discretization import ConstrainedDiscretization
from dynamics import Trajectory, semidiscretize, simulate
from errors import ConfigError, SimulationAborted, SimulationError, UnsupportedMode
from modal import linear_modes
from models import MultiplierField
from residuals import interior_residual
from scenario import (
    build_basis,
    check_compatibility,
    config_hash,
    initial_coefficients,
    load_scenario,
    load_spec,
)
from schemas import ScenarioConfig
from statics import EquilibriumReport, load_sweep, solve_static, sweep_frame
from tracer import tracer

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_CHECK = 4


@dataclass(frozen=True)
class RunOutcome:
    directory: Path
    manifest: RunManifest
    exit_code: int


def output_directory(config: ScenarioConfig, out: Optional[Path] = None) -> Path:
    directory = Path(out) if out is not None else (config.output.directory or OUTPUT_DIR / config.name)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _finish(manifest: RunManifest, directory: Path, started: float, check: bool) -> RunOutcome:
    manifest.wall_clock_seconds = round(time.perf_counter() - started, 3)
    manifest.write(directory)
    if manifest.status != "complete":
        code = EXIT_SOLVER
    elif check and not manifest.all_checks_passed:
        code = EXIT_CHECK
    else:
        code = EXIT_OK
    return RunOutcome(directory, manifest, code)


# ==================== run ====================

def _final_residuals(trajectory: Trajectory) -> dict[str, dict[str, float]]:
    """Strong-form residual norms of the last state with its discrete multipliers."""
    system = trajectory.system
    disc = system.discretization
    state, mu = checks.accelerated_state(system, trajectory.states[-1])
    multipliers = MultiplierField(system.model.variant, disc.multiplier_fields(mu))
    try:
        report = interior_residual(state, multipliers, system.model)
    except FloatingPointError as e:
        logger.warning(f"Residual evaluation failed: {e}")
        return {}
    return {name: {"sup": sup, "l2": l2} for name, (sup, l2) in report.norms.items()}


def _probe_histories(config: ScenarioConfig, trajectory: Trajectory) -> dict[str, dict[str, float]]:
    basis = trajectory.system.basis
    modal = trajectory.modal
    out = {}
    for point in config.output.probes:
        values = np.array([basis.evaluate(c, [point] if len(point) > 1 else point)[0] for c in modal])
        out[",".join(f"{p:g}" for p in point)] = {"max_abs_w": float(np.max(np.abs(values))), "final_w": float(values[-1])}
    return out


def _multiplier_traces(trajectory: Trajectory) -> dict[str, dict[str, float]]:
    names = sorted(k for k in trajectory.diagnostics[0] if k.startswith("lambda"))
    return {name: {"max_abs": float(np.max(np.abs(trajectory.series(name)))),
                   "final": float(trajectory.series(name)[-1])} for name in names}


def run_scenario(config: ScenarioConfig, out: Optional[Path] = None, check: bool = False) -> RunOutcome:
    """Simulate a scenario and write its trajectory, snapshots, diagnostics, plots and manifest."""
    started = time.perf_counter()
    directory = output_directory(config, out)
    manifest = RunManifest(config_hash=config_hash(config), verb="run")
    with tracer.start_as_current_span("run") as span:
        span.set_attribute("sim.variant", config.model.variant)
        span.set_attribute("sim.config_hash", manifest.config_hash)
        check_compatibility(config)
        basis = build_basis(config)
        system = semidiscretize(config.model.spec, basis, config.integrator.mode, config.integrator.inplane_inertia)
        c0, cdot0 = initial_coefficients(config, basis)
        integrator = config.integrator
        try:
            trajectory = simulate(system, c0, cdot0, integrator.dt, integrator.t_final, integrator.scheme)
        except SimulationAborted as e:
            logger.error(f"Run '{config.name}' aborted at step {e.step_index}", exc_info=True)
            trajectory = e.trajectory
            manifest.status = "partial"
            manifest.error = str(e)

        write_trajectory_artifacts(trajectory, directory, manifest, config.output.snapshot_times, config.output.plots)
        results = checks.dynamics_checks(trajectory, integrator.scheme)
        manifest.checks = checks.as_manifest_entries(results)
        diagnostics = {
            "config_hash": manifest.config_hash,
            "steps": len(trajectory.states) - 1,
            "final_time": trajectory.states[-1].t,
            "residuals": _final_residuals(trajectory),
            "multipliers": _multiplier_traces(trajectory),
            "probes": _probe_histories(config, trajectory),
            "checks": manifest.checks,
        }
        manifest.record(write_json(diagnostics, directory / "diagnostics.json"))
        span.set_attribute("sim.status", manifest.status)
    return _finish(manifest, directory, started, check)


# ==================== static ====================

def _equilibrium_payload(report: EquilibriumReport) -> dict:
    return {
        "load": {"kind": report.load.kind, "magnitude": report.load.magnitude},
        "optimality": report.optimality,
        "constraint_norm": report.constraint_norm,
        "iterations": report.iterations,
        "min_reduced_eigenvalue": report.min_reduced_eigenvalue,
        "energy": {"potential": report.energy.potential, "terms": report.energy.terms},
        "total_potential": report.total_potential,
        "load_displacement": report.load_displacement,
        "probes": report.probes,
        "multiplier_max_abs": float(np.max(np.abs(report.multipliers))) if report.multipliers.size else 0.0,
    }


def static_scenario(config: ScenarioConfig, out: Optional[Path] = None, check: bool = False) -> RunOutcome:
    """Equilibrium at the configured load, plus a load sweep when load.sweep is set."""
    started = time.perf_counter()
    directory = output_directory(config, out)
    manifest = RunManifest(config_hash=config_hash(config), verb="static")
    model, basis = config.model.spec, build_basis(config)
    report = solve_static(model, load_spec(config), basis)
    payload = _equilibrium_payload(report)
    results = checks.static_checks(report, model.is_beam)
    if config.load.sweep:
        reports = load_sweep(model, basis, config.load.kind, config.load.sweep)
        manifest.record(write_csv(sweep_frame(reports), directory / "sweep.csv"))
        for r in reports:
            results += [checks.CheckResult(f"{c.name}@{r.load.magnitude:g}", c.value, c.threshold, c.comparison)
                        for c in checks.static_checks(r, model.is_beam)]
    manifest.checks = checks.as_manifest_entries(results)
    payload["checks"] = manifest.checks
    manifest.record(write_json(payload, directory / "equilibrium.json"))
    manifest.record(write_csv(snapshot_table(ConstrainedDiscretization(model, basis), report.q),
                              directory / "equilibrium_field.csv"))
    return _finish(manifest, directory, started, check)


# ==================== modes ====================

def modes_scenario(config: ScenarioConfig, out: Optional[Path] = None, check: bool = False) -> RunOutcome:
    started = time.perf_counter()
    directory = output_directory(config, out)
    manifest = RunManifest(config_hash=config_hash(config), verb="modes")
    basis = build_basis(config)
    n = min(config.output.modes, basis.n_coefficients)
    report = linear_modes(config.model.spec, basis, n)
    manifest.record(write_csv(report.to_frame(), directory / "modes.csv"))
    manifest.checks = checks.as_manifest_entries(checks.modal_checks(report))
    payload = {
        "frequencies": report.frequencies,
        "shapes": {f"mode{k + 1}": report.transverse(k) for k in range(n)},
        "checks": manifest.checks,
    }
    manifest.record(write_json(payload, directory / "modes.json"))
    return _finish(manifest, directory, started, check)


VERBS = {"run": run_scenario, "static": static_scenario, "modes": modes_scenario}


# ==================== batch ====================

def _write_failure_manifest(config: ScenarioConfig, verb: str, out: Optional[Path], error: Exception) -> None:
    """Flag whatever the failed verb left in its output directory."""
    try:
        directory = output_directory(config, out)
        manifest = RunManifest(config_hash=config_hash(config), verb=verb, status="failed",
                               error=f"{type(error).__name__}: {error}")
        manifest.artifacts = sorted(p.name for p in directory.iterdir() if p.is_file() and p.name != "manifest.json")
        manifest.write(directory)
    except OSError as e:
        logger.warning(f"Could not write failure manifest: {e}")


def execute(verb: str, config_path: Path, out: Optional[Path] = None, check: bool = False) -> int:
    """Load a scenario and run a verb, mapping failures to exit codes.

    Anything other than a configuration error counts as a solver failure (exit 3) and leaves a
    manifest with status "failed" when the scenario itself loaded.
    """
    config = None
    try:
        config = load_scenario(config_path)
        outcome = VERBS[verb](config, out, check)
    except (ConfigError, UnsupportedMode) as e:
        logger.error(f"{config_path}: {e}")
        return EXIT_CONFIG
    except SimulationError as e:
        logger.error(f"{config_path}: solver failure: {e}", exc_info=True)
        if config is not None:
            _write_failure_manifest(config, verb, out, e)
        return EXIT_SOLVER
    except Exception as e:
        if config is None:
            logger.error(f"{config_path}: could not load scenario: {e}", exc_info=True)
            return EXIT_CONFIG
        logger.error(f"{config_path}: unexpected {type(e).__name__} during {verb}: {e}", exc_info=True)
        _write_failure_manifest(config, verb, out, e)
        return EXIT_SOLVER
    logger.info(f"{verb} finished for {config_path} with exit code {outcome.exit_code}")
    return outcome.exit_code


def run_batch(config_paths: Sequence[Path], out: Optional[Path] = None, check: bool = False,
              n_jobs: int = N_JOBS) -> int:
    """Independent runs, one output directory per config; returns the worst exit code."""
    root = Path(out) if out is not None else OUTPUT_DIR
    codes = Parallel(n_jobs=n_jobs)(
        delayed(execute)("run", Path(p), root / Path(p).stem, check) for p in config_paths
    )
    return max(codes, default=EXIT_OK)
