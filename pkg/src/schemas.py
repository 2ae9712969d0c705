"""Scenario file validation using Pydantic."""

from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models import ModelSpec, make_model


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelConfig(StrictModel):
    """Variant plus its physical parameters (beam: length, stiffness; plate: five keys)."""
    variant: Literal["beam-eta2", "beam-eta4", "plate-I", "plate-II", "plate-III"]
    params: dict[str, float]

    @model_validator(mode="after")
    def build_spec(self):
        # make_model raises ConfigError (a ValueError) for bad or mismatched parameters
        make_model(self.variant, self.params)
        return self

    @property
    def spec(self) -> ModelSpec:
        return make_model(self.variant, self.params)


class BasisConfig(StrictModel):
    modes_x: int = Field(default=6, ge=1, le=40)
    modes_y: Optional[int] = Field(default=None, ge=1, le=20)


class InitialConfig(StrictModel):
    """Initial data: a single mode, a tabulated field file, or rest."""
    kind: Literal["zero", "mode", "field"] = "zero"
    mode: int = Field(default=1, ge=1)
    amplitude: float = 0.0
    velocity: float = 0.0
    # tip: amplitude is the deflection at x = L (plates: at (Lx, Ly/2)); coefficient: raw modal value
    measure: Literal["tip", "coefficient"] = "tip"
    file: Optional[Path] = None

    @model_validator(mode="after")
    def check_recipe(self):
        if self.kind == "field":
            if self.file is None:
                raise ValueError("initial.file is required when initial.kind is 'field'")
            if not self.file.is_file():
                raise ValueError(f"initial.file {self.file} does not exist")
        return self


class IntegratorConfig(StrictModel):
    dt: float = Field(default=0.01, gt=0)
    t_final: float = Field(default=1.0, gt=0)
    scheme: Literal["implicit-midpoint-projected", "explicit-rk4-reduced"] = "implicit-midpoint-projected"
    mode: Literal["multiplier", "reduced"] = "multiplier"
    inplane_inertia: bool = True


class LoadConfig(StrictModel):
    kind: Literal["tip", "edge", "pressure"] = "tip"
    magnitude: float = 0.0
    sweep: list[float] = Field(default_factory=list)


class OutputConfig(StrictModel):
    directory: Optional[Path] = None
    snapshot_times: list[float] = Field(default_factory=list)
    probes: list[list[float]] = Field(default_factory=list)
    plots: bool = True
    modes: int = Field(default=4, ge=1)

    @field_validator("snapshot_times")
    @classmethod
    def nonnegative_times(cls, v):
        if any(t < 0 for t in v):
            raise ValueError("snapshot times must be nonnegative")
        return sorted(v)


class ScenarioConfig(StrictModel):
    """A complete scenario: model, basis, initial data, integrator, load and outputs."""
    name: str = Field(default="scenario", min_length=1, max_length=80)
    model: ModelConfig
    basis: BasisConfig = BasisConfig()
    initial: InitialConfig = InitialConfig()
    integrator: IntegratorConfig = IntegratorConfig()
    load: LoadConfig = LoadConfig()
    output: OutputConfig = OutputConfig()

    @field_validator("name")
    @classmethod
    def sanitize_name(cls, v):
        return v.strip()

    @model_validator(mode="after")
    def check_geometry(self):
        spec = self.model.spec
        if spec.is_beam and self.basis.modes_y is not None:
            raise ValueError("basis.modes_y applies to plates only")
        if not spec.is_beam and self.basis.modes_y is None:
            raise ValueError("basis.modes_y is required for plates")
        lengths = spec.lengths
        for point in self.output.probes:
            if len(point) != len(lengths):
                raise ValueError(f"probe {point} needs {len(lengths)} coordinates")
            if any(not 0.0 <= p <= L for p, L in zip(point, lengths)):
                raise ValueError(f"probe {point} lies outside the domain")
        if any(t > self.integrator.t_final for t in self.output.snapshot_times):
            raise ValueError("snapshot times must not exceed integrator.t_final")
        if self.initial.kind == "mode" and self.initial.mode > self.basis.modes_x * (self.basis.modes_y or 1):
            raise ValueError(f"initial.mode {self.initial.mode} exceeds the basis size")
        return self
