"""Run artifacts: trajectory and snapshot CSVs, JSON reports, SVG plots and the run manifest."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from config import CODE_VERSION, CSV_FLOAT_FORMAT, CSV_SCHEMA_VERSION  # noqa: E402
from discretization import ConstrainedDiscretization  # noqa: E402
from dynamics import ModalState, Trajectory  # noqa: E402

logger = logging.getLogger(__name__)

# Version CSV_SCHEMA_VERSION; changing this order needs a version bump
TRAJECTORY_COLUMNS = ("t", "E_K", "E_P", "E", "g_inf", "Gqdot_inf", "drift", "newton_iterations", "w_tip")


# ==================== CSV ====================

def trajectory_table(trajectory: Trajectory) -> pd.DataFrame:
    """Fixed leading columns, then modal coordinates, then multiplier probes in sorted order."""
    frame = trajectory.to_frame()
    modal = [f"c{k}" for k in range(trajectory.system.discretization.n_c)]
    rest = sorted(set(frame.columns) - set(TRAJECTORY_COLUMNS) - set(modal))
    return frame[list(TRAJECTORY_COLUMNS) + modal + rest]


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return path


def _format(value: float) -> str:
    return CSV_FLOAT_FORMAT % value


def snapshot_table(disc: ConstrainedDiscretization, q: np.ndarray) -> pd.DataFrame:
    """Beam: columns x, w, u. Plate: w on the grid, one row per y node, header row of x nodes."""
    c, z = disc.split(q)
    w = disc.basis.w_samples(c)
    inplane = disc.inplane_values(z)
    grid = disc.grid
    if not grid.is_plate:
        return pd.DataFrame({"x": grid.x.nodes, "w": w, "u": inplane["u"]})
    table = pd.DataFrame(w.T, columns=[_format(x) for x in grid.x.nodes])
    table.insert(0, "y\\x", grid.y.nodes)
    return table


def nearest_state(trajectory: Trajectory, t: float) -> ModalState:
    index = int(np.argmin(np.abs(trajectory.times - t)))
    return trajectory.states[index]


# ==================== JSON ====================

def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(payload: Mapping[str, Any], path: Path) -> Path:
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")
    return path


# ==================== SVG ====================

def plot_history(path: Path, times: np.ndarray, series: Mapping[str, np.ndarray], *,
                 title: str, ylabel: str, salt: str) -> Path:
    """Line plot with pinned SVG ids and no date stamp, so reruns give identical files."""
    with plt.rc_context({"svg.hashsalt": salt, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(7, 4))
        for label, values in series.items():
            ax.plot(times, values, label=label, linewidth=1.2)
        ax.set_xlabel("t")
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
        if len(series) > 1:
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


# ==================== Manifest ====================

@dataclass
class RunManifest:
    """Summary written once at the end of a run; wall_clock_seconds is the only varying field."""
    config_hash: str
    verb: str
    status: str = "complete"
    code_version: str = CODE_VERSION
    csv_schema_version: str = CSV_SCHEMA_VERSION
    wall_clock_seconds: float = 0.0
    checks: dict[str, dict[str, Any]] = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def all_checks_passed(self) -> bool:
        return all(entry["passed"] for entry in self.checks.values())

    def record(self, path: Path) -> Path:
        self.artifacts = sorted(set(self.artifacts) | {path.name})
        return path

    def write(self, directory: Path) -> Path:
        path = directory / "manifest.json"
        write_json(asdict(self), path)
        logger.info(f"Manifest written to {path} (status {self.status})")
        return path


def write_trajectory_artifacts(trajectory: Trajectory, directory: Path, manifest: RunManifest,
                               snapshot_times: Sequence[float] = (), plots: bool = True) -> None:
    """Trajectory CSV, requested snapshots and the energy and tip histories."""
    manifest.record(write_csv(trajectory_table(trajectory), directory / "trajectory.csv"))
    for t in snapshot_times:
        state = nearest_state(trajectory, t)
        name = f"snapshot_t{state.t:.6f}.csv"
        q, _ = trajectory.system.full_coordinates(state.q, state.qdot)
        manifest.record(write_csv(snapshot_table(trajectory.system.discretization, q), directory / name))
    if not plots or len(trajectory.states) < 2:
        return
    times = trajectory.times
    energy = {name: trajectory.series(name) for name in ("E_K", "E_P", "E")}
    manifest.record(plot_history(directory / "energy.svg", times, energy,
                                 title="Energy history", ylabel="energy", salt=manifest.config_hash))
    manifest.record(plot_history(directory / "tip.svg", times, {"w_tip": trajectory.series("w_tip")},
                                 title="Tip deflection", ylabel="w(L)", salt=manifest.config_hash))
