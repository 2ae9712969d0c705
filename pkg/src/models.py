"""Shared parameter, model and field types."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import TYPE_CHECKING, Any, Literal, Mapping, Optional

import numpy as np

from errors import InvalidParameter, NuOutOfRange, VariantMismatch

if TYPE_CHECKING:
    from basis import Grid


class Variant(str, Enum):
    """Physical model variants."""
    BEAM_ETA2 = "beam-eta2"
    BEAM_ETA4 = "beam-eta4"
    PLATE_I = "plate-I"
    PLATE_II = "plate-II"
    PLATE_III = "plate-III"

    @property
    def is_beam(self) -> bool:
        return self in (Variant.BEAM_ETA2, Variant.BEAM_ETA4)


ACTIVE_MULTIPLIERS: dict[Variant, tuple[str, ...]] = {
    Variant.BEAM_ETA2: ("lambda",),
    Variant.BEAM_ETA4: ("lambda",),
    Variant.PLATE_I: ("lambda1", "lambda2", "lambda3"),
    Variant.PLATE_II: ("lambda1", "lambda2"),
    Variant.PLATE_III: ("lambda1", "lambda2"),
}


@dataclass(frozen=True)
class BeamParams:
    """Mass-normalized cantilever beam."""
    length: float
    stiffness: float
    order: Literal["eta2", "eta4"] = "eta2"


@dataclass(frozen=True)
class PlateParams:
    """Cantilever plate clamped on x = 0; D = E h^2 / (12 (1 - nu^2))."""
    length_x: float
    length_y: float
    thickness: float
    youngs_modulus: float
    poisson_ratio: float
    stiffness: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "stiffness", plate_stiffness(self.youngs_modulus, self.thickness, self.poisson_ratio))


def plate_stiffness(youngs_modulus: float, thickness: float, poisson_ratio: float) -> float:
    return youngs_modulus * thickness**2 / (12.0 * (1.0 - poisson_ratio**2))


@dataclass(frozen=True)
class ModelSpec:
    variant: Variant
    params: BeamParams | PlateParams

    @property
    def is_beam(self) -> bool:
        return self.variant.is_beam

    @property
    def stiffness(self) -> float:
        return self.params.stiffness

    @property
    def lengths(self) -> tuple[float, ...]:
        if isinstance(self.params, BeamParams):
            return (self.params.length,)
        return (self.params.length_x, self.params.length_y)


def _positive(name: str, value: Any) -> float:
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise InvalidParameter(f"{name} must be a number, got {value!r}")
    if not math.isfinite(number) or number <= 0.0:
        raise InvalidParameter(f"{name} must be positive and finite, got {value!r}")
    return number


def make_model(variant: Variant | str, raw_params: Mapping[str, Any]) -> ModelSpec:
    """Validate raw parameters and build a ModelSpec.

    Args:
        variant: Model variant or its string value
        raw_params: Beam keys (length, stiffness) or plate keys
            (length_x, length_y, thickness, youngs_modulus, poisson_ratio)

    Returns:
        ModelSpec with D derived for plates
    """
    try:
        variant = Variant(variant)
    except ValueError:
        raise VariantMismatch(f"Unknown variant {variant!r}")

    beam_keys = {"length", "stiffness"}
    plate_keys = {"length_x", "length_y", "thickness", "youngs_modulus", "poisson_ratio"}
    keys = set(raw_params)

    if variant.is_beam:
        if keys & plate_keys or not beam_keys <= keys:
            raise VariantMismatch(f"{variant.value} expects beam parameters {sorted(beam_keys)}, got {sorted(keys)}")
        order = "eta2" if variant is Variant.BEAM_ETA2 else "eta4"
        params = BeamParams(
            length=_positive("length", raw_params["length"]),
            stiffness=_positive("stiffness", raw_params["stiffness"]),
            order=order,
        )
        return ModelSpec(variant, params)

    if keys & beam_keys or not plate_keys <= keys:
        raise VariantMismatch(f"{variant.value} expects plate parameters {sorted(plate_keys)}, got {sorted(keys)}")
    try:
        nu = float(raw_params["poisson_ratio"])
    except (TypeError, ValueError):
        raise InvalidParameter(f"poisson_ratio must be a number, got {raw_params['poisson_ratio']!r}")
    if not 0.0 < nu < 0.5:
        raise NuOutOfRange(f"poisson_ratio must lie in (0, 1/2), got {nu}")
    params = PlateParams(
        length_x=_positive("length_x", raw_params["length_x"]),
        length_y=_positive("length_y", raw_params["length_y"]),
        thickness=_positive("thickness", raw_params["thickness"]),
        youngs_modulus=_positive("youngs_modulus", raw_params["youngs_modulus"]),
        poisson_ratio=nu,
    )
    return ModelSpec(variant, params)


FieldKey = tuple[str, int, int, int]


@dataclass(frozen=True)
class FieldState:
    """Samples of u, v, w and their derivatives on a quadrature grid.

    Keys are (name, d/dx order, d/dy order, d/dt order). Beam samples are 1D and only
    use dy = 0.
    """
    grid: "Grid"
    samples: Mapping[FieldKey, np.ndarray]

    def __post_init__(self):
        frozen = {}
        for key, array in self.samples.items():
            array = np.asarray(array, dtype=float)
            if array.shape != self.grid.shape:
                raise ValueError(f"Sample {key} has shape {array.shape}, grid is {self.grid.shape}")
            frozen[key] = array
        object.__setattr__(self, "samples", MappingProxyType(frozen))

    def has(self, name: str, dx: int = 0, dy: int = 0, dt: int = 0) -> bool:
        return (name, dx, dy, dt) in self.samples

    def get(self, name: str, dx: int = 0, dy: int = 0, dt: int = 0) -> np.ndarray:
        try:
            return self.samples[(name, dx, dy, dt)]
        except KeyError:
            raise KeyError(f"FieldState has no sample of {name} with derivative orders (x={dx}, y={dy}, t={dt})")

    def get_or_zero(self, name: str, dx: int = 0, dy: int = 0, dt: int = 0) -> np.ndarray:
        return self.samples.get((name, dx, dy, dt), np.zeros(self.grid.shape))

    def with_samples(self, extra: Mapping[FieldKey, np.ndarray]) -> "FieldState":
        merged = dict(self.samples)
        merged.update(extra)
        return FieldState(self.grid, merged)

    def is_zero(self, names: tuple[str, ...] = ("w",)) -> bool:
        return all(not np.any(a) for k, a in self.samples.items() if k[0] in names)


@dataclass(frozen=True)
class MultiplierField:
    """Lagrange multiplier samples on the grid.

    Optional derivative samples are keyed like "lambda1_x"; residual evaluators fall back to
    nodal differentiation when a derivative is absent.
    """
    variant: Variant
    values: Mapping[str, np.ndarray]
    derivatives: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        active = ACTIVE_MULTIPLIERS[self.variant]
        extra = set(self.values) - set(active)
        missing = set(active) - set(self.values)
        if extra or missing:
            raise VariantMismatch(
                f"{self.variant.value} carries multipliers {list(active)}; "
                f"missing {sorted(missing)}, unexpected {sorted(extra)}"
            )
        object.__setattr__(self, "values", MappingProxyType({k: np.asarray(v, dtype=float) for k, v in self.values.items()}))
        object.__setattr__(self, "derivatives", MappingProxyType({k: np.asarray(v, dtype=float) for k, v in self.derivatives.items()}))

    @property
    def active(self) -> tuple[str, ...]:
        return ACTIVE_MULTIPLIERS[self.variant]

    def derivative(self, name: str, axis: str) -> Optional[np.ndarray]:
        return self.derivatives.get(f"{name}_{axis}")

    @classmethod
    def zero(cls, variant: Variant, grid: "Grid") -> "MultiplierField":
        return cls(variant, {name: np.zeros(grid.shape) for name in ACTIVE_MULTIPLIERS[variant]})
