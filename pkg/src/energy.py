"""Kinetic and potential energy functionals evaluated by quadrature."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from kinematics import CurvatureVariant, check_slope, curvature, mid_plane_strains
from models import FieldState, ModelSpec, PlateParams, Variant

logger = logging.getLogger(__name__)


class EnergyForm(str, Enum):
    """Potential energy integrands; each model variant has a default form."""
    BEAM_ETA2 = "beam-eta2"
    BEAM_ETA4 = "beam-eta4"
    BEAM_EXACT = "beam-exact"
    PLATE_W = "plate-w"
    PLATE_III = "plate-III"
    PLATE_BULK = "plate-bulk"


DEFAULT_FORMS = {
    Variant.BEAM_ETA2: EnergyForm.BEAM_ETA2,
    Variant.BEAM_ETA4: EnergyForm.BEAM_ETA4,
    Variant.PLATE_I: EnergyForm.PLATE_W,
    Variant.PLATE_II: EnergyForm.PLATE_W,
    Variant.PLATE_III: EnergyForm.PLATE_III,
}


@dataclass(frozen=True)
class EnergyReport:
    kinetic: float
    potential: float
    total: float
    terms: dict[str, float] = field(default_factory=dict)


def kinetic_energy(state: FieldState, model: ModelSpec) -> float:
    """1/2 int (u_t^2 + v_t^2 + w_t^2); missing in-plane velocities count as zero."""
    grid = state.grid
    density = state.get("w", 0, 0, 1) ** 2 + state.get_or_zero("u", 0, 0, 1) ** 2
    if not model.is_beam:
        density = density + state.get_or_zero("v", 0, 0, 1) ** 2
    return 0.5 * grid.integrate(density)


# ==================== Densities ====================

def _beam_factor(w_x: np.ndarray, form: EnergyForm) -> tuple[np.ndarray, np.ndarray]:
    """f(w_x) and f'(w_x) in kappa^2 = w_xx^2 f(w_x)."""
    if form is EnergyForm.BEAM_ETA2:
        return 1.0 + w_x**2, 2.0 * w_x
    if form is EnergyForm.BEAM_ETA4:
        return 1.0 + w_x**2 + w_x**4, 2.0 * w_x + 4.0 * w_x**3
    if form is EnergyForm.BEAM_EXACT:
        check_slope(w_x)
        inv = 1.0 / (1.0 - w_x**2)
        return inv, 2.0 * w_x * inv**2
    raise ValueError(f"{form.value} is not a beam energy form")


def _plate_quadratic(state: FieldState, nu: float) -> np.ndarray:
    w_xx, w_xy, w_yy = state.get("w", 2, 0), state.get("w", 1, 1), state.get("w", 0, 2)
    return w_xx**2 + w_yy**2 + 2.0 * nu * w_xx * w_yy + 2.0 * (1.0 - nu) * w_xy**2


def energy_density(state: FieldState, model: ModelSpec, form: Optional[EnergyForm] = None) -> dict[str, np.ndarray]:
    """Pointwise potential energy density split into named terms."""
    form = form or DEFAULT_FORMS[model.variant]
    D = model.stiffness

    if form in (EnergyForm.BEAM_ETA2, EnergyForm.BEAM_ETA4, EnergyForm.BEAM_EXACT):
        w_x, w_xx = state.get("w", 1), state.get("w", 2)
        factor, _ = _beam_factor(w_x, form)
        return {
            "bending": 0.5 * D * w_xx**2,
            "nonlinear_stiffness": 0.5 * D * w_xx**2 * (factor - 1.0),
        }

    params: PlateParams = model.params
    nu, h = params.poisson_ratio, params.thickness

    if form is EnergyForm.PLATE_W:
        quad = _plate_quadratic(state, nu)
        slope2 = state.get("w", 1, 0) ** 2 + state.get("w", 0, 1) ** 2
        return {"bending": 0.5 * D * quad, "nonlinear_stiffness": 0.5 * D * slope2 * quad}

    if form is EnergyForm.PLATE_III:
        d = state.get_or_zero
        w_x, w_y = d("w", 1, 0), d("w", 0, 1)
        w_xx, w_xy, w_yy = d("w", 2, 0), d("w", 1, 1), d("w", 0, 2)
        u_y, u_yy, v_x, v_xx = d("u", 0, 1), d("u", 0, 2), d("v", 1, 0), d("v", 2, 0)
        K, B = 6.0 * D / h, h**2 / 12.0
        return {
            "bending": K * B * _plate_quadratic(state, nu),
            "nonlinear_stiffness": K * B * (2.0 * (1.0 - nu) * w_xy**2 * (w_x**2 + w_y**2)
                                            + (w_x**2 - w_y**2) * (w_xx**2 - w_yy**2)),
            "coupling": K * B * (-2.0 * w_y * w_xx * v_xx - 2.0 * w_x * w_yy * u_yy
                                 - 2.0 * nu * (w_y * w_yy * v_xx + w_x * w_xx * u_yy)),
            "membrane_shear": K * 0.5 * (1.0 - nu) * (u_y + v_x + w_x * w_y) ** 2,
        }

    if form is EnergyForm.PLATE_BULK:
        # Per unit thickness, so the bending part carries D/2 like PLATE_W
        eps = mid_plane_strains(state)
        kap = curvature(state, CurvatureVariant.PLATE_FULL)
        membrane = params.youngs_modulus / (1.0 - nu**2)
        strain_form = eps["e11"] ** 2 + eps["e22"] ** 2 + 2 * nu * eps["e11"] * eps["e22"] + 0.5 * (1 - nu) * eps["e12"] ** 2
        bend_form = kap["k11"] ** 2 + kap["k22"] ** 2 + 2 * nu * kap["k11"] * kap["k22"] + 0.5 * (1 - nu) * kap["k12"] ** 2
        return {"membrane": 0.5 * membrane * strain_form, "bending": 0.5 * D * bend_form}

    raise ValueError(f"Energy form {form.value} does not apply to {model.variant.value}")


def density_partials(state: FieldState, model: ModelSpec, form: Optional[EnergyForm] = None) -> dict[tuple[str, int, int], np.ndarray]:
    """Partial derivatives of the density with respect to each field derivative it uses.

    Keys are (field, dx, dy). The bulk form has no partials; it is a diagnostic only.
    """
    form = form or DEFAULT_FORMS[model.variant]
    D = model.stiffness

    if form in (EnergyForm.BEAM_ETA2, EnergyForm.BEAM_ETA4, EnergyForm.BEAM_EXACT):
        w_x, w_xx = state.get("w", 1), state.get("w", 2)
        factor, dfactor = _beam_factor(w_x, form)
        return {("w", 1, 0): 0.5 * D * w_xx**2 * dfactor, ("w", 2, 0): D * w_xx * factor}

    params: PlateParams = model.params
    nu, h = params.poisson_ratio, params.thickness
    d = state.get_or_zero
    w_x, w_y = d("w", 1, 0), d("w", 0, 1)
    w_xx, w_xy, w_yy = d("w", 2, 0), d("w", 1, 1), d("w", 0, 2)

    if form is EnergyForm.PLATE_W:
        f = 1.0 + w_x**2 + w_y**2
        quad = _plate_quadratic(state, nu)
        return {
            ("w", 1, 0): D * w_x * quad,
            ("w", 0, 1): D * w_y * quad,
            ("w", 2, 0): D * f * (w_xx + nu * w_yy),
            ("w", 0, 2): D * f * (w_yy + nu * w_xx),
            ("w", 1, 1): 2.0 * D * (1.0 - nu) * f * w_xy,
        }

    if form is EnergyForm.PLATE_III:
        u_y, u_yy, v_x, v_xx = d("u", 0, 1), d("u", 0, 2), d("v", 1, 0), d("v", 2, 0)
        K, B = 6.0 * D / h, h**2 / 12.0
        S = u_y + v_x + w_x * w_y
        diff_slope = w_x**2 - w_y**2
        diff_curv = w_xx**2 - w_yy**2
        return {
            ("w", 1, 0): K * (B * (4.0 * (1 - nu) * w_xy**2 * w_x + 2.0 * w_x * diff_curv
                                   - 2.0 * w_yy * u_yy - 2.0 * nu * w_xx * u_yy) + (1 - nu) * S * w_y),
            ("w", 0, 1): K * (B * (4.0 * (1 - nu) * w_xy**2 * w_y - 2.0 * w_y * diff_curv
                                   - 2.0 * w_xx * v_xx - 2.0 * nu * w_yy * v_xx) + (1 - nu) * S * w_x),
            ("w", 2, 0): K * B * (2.0 * w_xx + 2.0 * nu * w_yy + 2.0 * diff_slope * w_xx
                                  - 2.0 * w_y * v_xx - 2.0 * nu * w_x * u_yy),
            ("w", 0, 2): K * B * (2.0 * w_yy + 2.0 * nu * w_xx - 2.0 * diff_slope * w_yy
                                  - 2.0 * w_x * u_yy - 2.0 * nu * w_y * v_xx),
            ("w", 1, 1): K * B * 4.0 * (1 - nu) * w_xy * (1.0 + w_x**2 + w_y**2),
            ("u", 0, 1): K * (1 - nu) * S,
            ("v", 1, 0): K * (1 - nu) * S,
            ("u", 0, 2): K * B * (-2.0 * w_x * w_yy - 2.0 * nu * w_x * w_xx),
            ("v", 2, 0): K * B * (-2.0 * w_y * w_xx - 2.0 * nu * w_y * w_yy),
        }

    raise ValueError(f"No analytic partials for energy form {form.value}")


# ==================== Functionals ====================

def potential_energy(state: FieldState, model: ModelSpec, form: Optional[EnergyForm] = None) -> EnergyReport:
    """Quadrature of the potential energy density; kinetic energy is included when w_t is sampled."""
    if state.is_zero(("w", "u", "v")):
        kinetic = kinetic_energy(state, model) if state.has("w", 0, 0, 1) else 0.0
        return EnergyReport(kinetic, 0.0, kinetic + 0.0, {})
    grid = state.grid
    terms = {name: grid.integrate(density) for name, density in energy_density(state, model, form).items()}
    potential = float(sum(terms.values()))
    kinetic = kinetic_energy(state, model) if state.has("w", 0, 0, 1) else 0.0
    return EnergyReport(kinetic, potential, kinetic + potential, terms)


def energy_order_gap(state: FieldState, model: ModelSpec, form_a: EnergyForm, form_b: EnergyForm) -> float:
    """|E_P(form_a) - E_P(form_b)| on the same state."""
    a = potential_energy(state, model, form_a).potential
    b = potential_energy(state, model, form_b).potential
    return abs(a - b)
