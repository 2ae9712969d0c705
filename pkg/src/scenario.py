"""Scenario loading: YAML parsing with line tracking, validation, initial data and hashing."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd
import yaml
from pydantic import ValidationError

from basis import Basis, make_basis
from dynamics import ConstraintMode, Scheme
from errors import ConfigError, UnsupportedMode
from models import Variant
from schemas import ScenarioConfig
from statics import LoadSpec

logger = logging.getLogger(__name__)


class ScenarioError(ConfigError):
    """Config parse or validation failure, with the offending field and YAML line."""

    def __init__(self, message: str, problems: Optional[list[dict]] = None):
        super().__init__(message)
        self.problems = problems or []


def _line_index(node: yaml.Node, prefix: tuple = ()) -> dict[tuple, int]:
    """Map key paths to 1-based YAML lines."""
    index = {prefix: node.start_mark.line + 1}
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            index.update(_line_index(value, prefix + (key.value,)))
            index[prefix + (key.value,)] = key.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            index.update(_line_index(value, prefix + (i,)))
    return index


def _locate(lines: dict[tuple, int], loc: tuple) -> Optional[int]:
    loc = tuple(loc)
    while loc:
        if loc in lines:
            return lines[loc]
        loc = loc[:-1]
    return None


def parse_scenario(text: str, base_dir: Path = Path(".")) -> ScenarioConfig:
    """Validate YAML text; relative initial.file paths resolve against base_dir."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark is not None else ""
        raise ScenarioError(f"YAML syntax error{where}: {getattr(e, 'problem', e)}")
    if not isinstance(raw, dict):
        raise ScenarioError("Scenario file must contain a mapping at the top level")

    initial = raw.get("initial")
    if isinstance(initial, dict) and isinstance(initial.get("file"), str):
        file = Path(initial["file"])
        initial["file"] = str(file if file.is_absolute() else base_dir / file)

    try:
        return ScenarioConfig.model_validate(raw)
    except ValidationError as e:
        lines = _line_index(node) if node is not None else {}
        problems = []
        for err in e.errors():
            loc = tuple(err["loc"])
            problems.append({
                "field": ".".join(str(part) for part in loc) or "<root>",
                "line": _locate(lines, loc),
                "message": err["msg"],
            })
        summary = "; ".join(
            f"{p['field']} (line {p['line']}): {p['message']}" if p["line"] else f"{p['field']}: {p['message']}"
            for p in problems
        )
        raise ScenarioError(f"Invalid scenario: {summary}", problems)


def load_scenario(path: Path | str) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(f"Cannot read scenario {path}: {e}")
    config = parse_scenario(text, path.parent)
    logger.info(f"Loaded scenario '{config.name}' ({config.model.variant}) from {path}")
    return config


def check_compatibility(config: ScenarioConfig) -> None:
    """Combinations the dynamics layer rejects, surfaced before anything runs."""
    variant = Variant(config.model.variant)
    scheme, mode = Scheme(config.integrator.scheme), ConstraintMode(config.integrator.mode)
    if variant is Variant.PLATE_III:
        # no time integration; validate reports it through compatibility_notes
        return
    if scheme is Scheme.RK4 and mode is not ConstraintMode.REDUCED:
        raise UnsupportedMode("explicit-rk4-reduced needs integrator.mode: reduced")
    if variant is Variant.PLATE_I and mode is ConstraintMode.REDUCED:
        raise UnsupportedMode("plate-I has no reduced formulation; use the multiplier mode")


def compatibility_notes(config: ScenarioConfig) -> list[str]:
    """Verb restrictions that do not make the file invalid."""
    if Variant(config.model.variant) is Variant.PLATE_III:
        return ["plate-III supports the static and modes verbs only; run exits with code 2 "
                "and the integrator settings are ignored"]
    return []


def config_hash(config: ScenarioConfig) -> str:
    """SHA-256 of the canonical JSON of the validated config."""
    payload = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def effective_defaults(config: ScenarioConfig) -> list[str]:
    """Dotted keys the file left at their default values."""
    def walk(model, prefix):
        out = []
        for name in type(model).model_fields:
            value = getattr(model, name)
            key = f"{prefix}{name}"
            if name not in model.model_fields_set:
                out.append(f"{key} = {json.dumps(_plain(value))}")
            elif hasattr(type(value), "model_fields"):
                out.extend(walk(value, key + "."))
        return out
    return walk(config, "")


def _plain(value: Any) -> Any:
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    if isinstance(value, Path):
        return str(value)
    return value


# ==================== Building blocks ====================

def build_basis(config: ScenarioConfig) -> Basis:
    return make_basis(config.model.spec, config.basis.modes_x, config.basis.modes_y)


def load_spec(config: ScenarioConfig, magnitude: Optional[float] = None) -> LoadSpec:
    return LoadSpec(config.load.kind, config.load.magnitude if magnitude is None else magnitude)


def _tip_value(basis: Basis, config: ScenarioConfig, k: int) -> float:
    spec = config.model.spec
    e = np.zeros(basis.n_coefficients)
    e[k] = 1.0
    point = [spec.lengths[0]] if spec.is_beam else [[spec.lengths[0], 0.5 * spec.lengths[1]]]
    return float(basis.evaluate(e, point)[0])


def initial_coefficients(config: ScenarioConfig, basis: Basis) -> tuple[np.ndarray, np.ndarray]:
    """Modal displacement and velocity coefficients for the configured initial data."""
    n = basis.n_coefficients
    c0, cdot0 = np.zeros(n), np.zeros(n)
    recipe = config.initial
    if recipe.kind == "mode":
        k = recipe.mode - 1
        scale = 1.0
        if recipe.measure == "tip":
            tip = _tip_value(basis, config, k)
            if abs(tip) < 1e-12:
                raise ScenarioError(f"initial.mode {recipe.mode} has no deflection at the tip; use measure: coefficient")
            scale = 1.0 / tip
        c0[k] = recipe.amplitude * scale
        cdot0[k] = recipe.velocity * scale
    elif recipe.kind == "field":
        c0, cdot0 = fit_tabulated_field(recipe.file, basis)
    return c0, cdot0


def fit_tabulated_field(path: Path, basis: Basis) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares fit of CSV columns x[,y],w0[,w1] onto the basis."""
    table = pd.read_csv(path)
    coords = ["x", "y"] if basis.is_plate else ["x"]
    missing = [c for c in coords + ["w0"] if c not in table.columns]
    if missing:
        raise ScenarioError(f"{path}: missing columns {missing}")
    points = table[coords].to_numpy(dtype=float)
    points = points.reshape(-1) if not basis.is_plate else points
    A = np.column_stack([basis.evaluate(np.eye(basis.n_coefficients)[k], points)
                         for k in range(basis.n_coefficients)])
    if A.shape[0] < A.shape[1]:
        raise ScenarioError(f"{path}: {A.shape[0]} samples cannot determine {A.shape[1]} coefficients")
    c0 = np.linalg.lstsq(A, table["w0"].to_numpy(dtype=float), rcond=None)[0]
    cdot0 = np.zeros_like(c0)
    if "w1" in table.columns:
        cdot0 = np.linalg.lstsq(A, table["w1"].to_numpy(dtype=float), rcond=None)[0]
    logger.info(f"Fitted {len(table)} samples from {path} onto {basis.n_coefficients} modes")
    return c0, cdot0


@dataclass(frozen=True)
class ValidationSummary:
    config: ScenarioConfig
    config_hash: str
    defaults: list[str]
    notes: list[str] = field(default_factory=list)

    def render(self) -> str:
        lines = ["valid", f"hash: {self.config_hash}"]
        lines += [f"note: {note}" for note in self.notes]
        lines.append("defaults:")
        lines += [f"  {entry}" for entry in self.defaults]
        return "\n".join(lines)


def validate_scenario(path: Path | str) -> ValidationSummary:
    """Parse and check a scenario without running it."""
    config = load_scenario(path)
    check_compatibility(config)
    if config.initial.kind == "field":
        fit_tabulated_field(config.initial.file, build_basis(config))
    notes = compatibility_notes(config)
    for note in notes:
        logger.warning(f"{path}: {note}")
    return ValidationSummary(config, config_hash(config), effective_defaults(config), notes)
