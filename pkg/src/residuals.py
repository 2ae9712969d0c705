"""Strong-form interior, boundary and multiplier-edge residuals of the printed equations.

Every operator is expanded analytically in terms of sampled derivatives, so w never goes
through nodal differentiation. Multiplier derivatives are taken from the MultiplierField
when supplied and from the grid otherwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

import numpy as np
import pandas as pd

import term_tables as tt
from basis import Grid
from errors import MissingMultipliers, UnsupportedMode
from kinematics import ConstraintFlavor, beam_flavor, constraint_residual
from models import ACTIVE_MULTIPLIERS, FieldState, ModelSpec, MultiplierField, PlateParams, Variant

logger = logging.getLogger(__name__)

PLATE_EDGES = ("E", "N", "W", "S")


class StiffnessForm(str, Enum):
    """Plate stiffness operator: as printed, or the exact variation of the energy."""
    PRINTED = "printed"
    VARIATIONAL = "variational"


@dataclass(frozen=True)
class ResidualReport:
    """Interior residual fields, boundary traces keyed (edge, condition) and their norms."""
    interior: dict[str, np.ndarray]
    boundary: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)
    norms: dict[str, tuple[float, float]] = field(default_factory=dict)

    def sup(self, key: str) -> float:
        return self.norms[key][0]

    def to_frame(self) -> pd.DataFrame:
        rows = [{"residual": k, "sup": s, "l2": l2} for k, (s, l2) in self.norms.items()]
        return pd.DataFrame(rows, columns=["residual", "sup", "l2"])


def _edge_weights(grid: Grid, edge: str) -> np.ndarray:
    if not grid.is_plate:
        return np.ones(1)
    return grid.y.weights if edge in ("E", "W") else grid.x.weights


def _report(grid: Grid, interior: dict[str, np.ndarray],
            boundary: Optional[dict[tuple[str, str], np.ndarray]] = None) -> ResidualReport:
    boundary = boundary or {}
    norms = {}
    for name, values in interior.items():
        if not np.all(np.isfinite(values)):
            raise FloatingPointError(f"Interior residual {name} is not finite")
        norms[name] = (float(np.max(np.abs(values))), float(np.sqrt(grid.integrate(values**2))))
    for (edge, condition), values in boundary.items():
        values = np.atleast_1d(values)
        if not np.all(np.isfinite(values)):
            raise FloatingPointError(f"Boundary residual {condition} on {edge} is not finite")
        norms[f"{edge}:{condition}"] = (float(np.max(np.abs(values))),
                                        float(np.sqrt(np.sum(_edge_weights(grid, edge) * values**2))))
    return ResidualReport(interior, boundary, norms)


def _w(state: FieldState) -> dict[str, np.ndarray]:
    """Short names for the w derivatives a plate operator needs."""
    names = {}
    for dx in range(5):
        for dy in range(5 - dx):
            if state.has("w", dx, dy):
                names["w_" + "x" * dx + "y" * dy if dx + dy else "w"] = state.get("w", dx, dy)
    return names


def _multiplier(multipliers: MultiplierField, grid: Grid, name: str, axis: str) -> np.ndarray:
    supplied = multipliers.derivative(name, axis)
    return supplied if supplied is not None else grid.diff(multipliers.values[name], axis)


# ==================== Stiffness operators ====================

def beam_stiffness(state: FieldState, model: ModelSpec) -> np.ndarray:
    """D [F w_xxxx + 2 F' w_xx w_xxx + F''/2 w_xx^3] with F = 1 + w_x^2 (+ w_x^4 at eta4)."""
    w_x, w_xx, w_xxx, w_xxxx = (state.get("w", d) for d in (1, 2, 3, 4))
    if model.variant is Variant.BEAM_ETA4:
        F, dF, d2F = 1 + w_x**2 + w_x**4, 2 * w_x + 4 * w_x**3, 2 + 12 * w_x**2
    else:
        F, dF, d2F = 1 + w_x**2, 2 * w_x, 2 * np.ones_like(w_x)
    return model.stiffness * (F * w_xxxx + 2 * dF * w_xx * w_xxx + 0.5 * d2F * w_xx**3)


def plate_stiffness_printed(state: FieldState, model: ModelSpec) -> np.ndarray:
    """D (Lap[(1 + |grad w|^2) Lap w] - div(|Lap w|^2 grad w)) with |Lap w|^2 = (w_xx + w_yy)^2."""
    d = _w(state)
    w_x, w_y = d["w_x"], d["w_y"]
    f = 1 + w_x**2 + w_y**2
    L = d["w_xx"] + d["w_yy"]
    L_x = d["w_xxx"] + d["w_xyy"]
    L_y = d["w_xxy"] + d["w_yyy"]
    lap_L = d["w_xxxx"] + 2 * d["w_xxyy"] + d["w_yyyy"]
    f_x = 2 * (w_x * d["w_xx"] + w_y * d["w_xy"])
    f_y = 2 * (w_x * d["w_xy"] + w_y * d["w_yy"])
    lap_f = 2 * (d["w_xx"] ** 2 + 2 * d["w_xy"] ** 2 + d["w_yy"] ** 2) + 2 * w_x * L_x + 2 * w_y * L_y
    first = f * lap_L + 2 * (f_x * L_x + f_y * L_y) + L * lap_f
    second = L**3 + 2 * L * (w_x * L_x + w_y * L_y)
    return model.stiffness * (first - second)


def plate_stiffness_variational(state: FieldState, model: ModelSpec) -> np.ndarray:
    """Euler-Lagrange operator of the Model I/II energy density D/2 (1 + |grad w|^2) Q(w)."""
    d = _w(state)
    D, nu = model.stiffness, model.params.poisson_ratio
    w_x, w_y = d["w_x"], d["w_y"]
    w_xx, w_xy, w_yy = d["w_xx"], d["w_xy"], d["w_yy"]
    w_xxx, w_xxy, w_xyy, w_yyy = d["w_xxx"], d["w_xxy"], d["w_xyy"], d["w_yyy"]

    f = 1 + w_x**2 + w_y**2
    f_x = 2 * (w_x * w_xx + w_y * w_xy)
    f_y = 2 * (w_x * w_xy + w_y * w_yy)
    f_xx = 2 * (w_xx**2 + w_x * w_xxx + w_xy**2 + w_y * w_xxy)
    f_yy = 2 * (w_xy**2 + w_x * w_xyy + w_yy**2 + w_y * w_yyy)
    f_xy = 2 * (w_xy * w_xx + w_x * w_xxy + w_yy * w_xy + w_y * w_xyy)

    m11, m11_x, m11_xx = w_xx + nu * w_yy, w_xxx + nu * w_xyy, d["w_xxxx"] + nu * d["w_xxyy"]
    m22, m22_y, m22_yy = w_yy + nu * w_xx, w_yyy + nu * w_xxy, d["w_yyyy"] + nu * d["w_xxyy"]
    moments = (f_xx * m11 + 2 * f_x * m11_x + f * m11_xx
               + f_yy * m22 + 2 * f_y * m22_y + f * m22_yy
               + 2 * (1 - nu) * (f_xy * w_xy + f_x * w_xyy + f_y * w_xxy + f * d["w_xxyy"]))

    Q = w_xx**2 + w_yy**2 + 2 * nu * w_xx * w_yy + 2 * (1 - nu) * w_xy**2
    Q_x = 2 * w_xx * w_xxx + 2 * w_yy * w_xyy + 2 * nu * (w_xxx * w_yy + w_xx * w_xyy) + 4 * (1 - nu) * w_xy * w_xxy
    Q_y = 2 * w_xx * w_xxy + 2 * w_yy * w_yyy + 2 * nu * (w_xxy * w_yy + w_xx * w_yyy) + 4 * (1 - nu) * w_xy * w_xyy
    return D * (moments - (Q * (w_xx + w_yy) + w_x * Q_x + w_y * Q_y))


def stiffness_form_gap(state: FieldState, model: ModelSpec) -> np.ndarray:
    """Printed minus variational plate stiffness; lower order than either operator."""
    return plate_stiffness_printed(state, model) - plate_stiffness_variational(state, model)


def _plate_stiffness(state: FieldState, model: ModelSpec, form: StiffnessForm) -> np.ndarray:
    if form is StiffnessForm.VARIATIONAL:
        return plate_stiffness_variational(state, model)
    return plate_stiffness_printed(state, model)


# ==================== Interior ====================

def interior_residual(state: FieldState, multipliers: Optional[MultiplierField], model: ModelSpec, *,
                      closed: bool = False, stiffness: StiffnessForm = StiffnessForm.PRINTED,
                      body_force: Optional[Mapping[str, np.ndarray]] = None) -> ResidualReport:
    """Pointwise residual of each equation of the variant.

    With closed=True the multipliers are eliminated through their integral formulas (beams and
    Model II only), so the w-equation needs u_tt and v_tt samples instead of multiplier fields.
    body_force entries are subtracted from the equation of the same name.
    """
    grid = state.grid
    if closed and model.variant not in (Variant.BEAM_ETA2, Variant.BEAM_ETA4, Variant.PLATE_II):
        raise UnsupportedMode(f"{model.variant.value} has no closed form without multipliers")
    if not closed and multipliers is None:
        raise MissingMultipliers(f"{model.variant.value} residuals need {'/'.join(ACTIVE_MULTIPLIERS[model.variant])} fields")
    if multipliers is not None and multipliers.variant is not model.variant:
        raise MissingMultipliers(f"Multipliers are for {multipliers.variant.value}, model is {model.variant.value}")

    if model.is_beam:
        interior = _beam_interior(state, multipliers, model, closed)
    elif model.variant is Variant.PLATE_III:
        interior = _model_iii_interior(state, multipliers, model)
    else:
        interior = _plate_interior(state, multipliers, model, closed, stiffness)

    for name, force in (body_force or {}).items():
        interior[name] = interior[name] - force
    return _report(grid, interior)


def _beam_interior(state, multipliers, model, closed) -> dict[str, np.ndarray]:
    grid = state.grid
    w_x, w_xx = state.get("w", 1), state.get("w", 2)
    u_tt = state.get("u", 0, 0, 2)
    if closed:
        lam, lam_x = grid.reverse(u_tt), -u_tt
    else:
        lam, lam_x = multipliers.values["lambda"], _multiplier(multipliers, grid, "lambda", "x")
    interior = {
        "w": state.get("w", 0, 0, 2) + beam_stiffness(state, model) + lam_x * w_x + lam * w_xx,
        "span": constraint_residual(state, beam_flavor(model.variant))["span"],
    }
    if not closed:
        interior["u"] = u_tt + lam_x
    return interior


def _plate_interior(state, multipliers, model, closed, stiffness) -> dict[str, np.ndarray]:
    grid = state.grid
    w_x, w_y = state.get("w", 1, 0), state.get("w", 0, 1)
    w_xx, w_xy, w_yy = state.get("w", 2, 0), state.get("w", 1, 1), state.get("w", 0, 2)
    u_tt, v_tt = state.get("u", 0, 0, 2), state.get("v", 0, 0, 2)
    w_eq = state.get("w", 0, 0, 2) + _plate_stiffness(state, model, stiffness)
    constraints = constraint_residual(state, ConstraintFlavor.QUAD_PLATE)

    if closed:
        # d/dx(w_x int_x^Lx u_tt) - d/dy(w_y int_0^y v_tt)
        w_eq = (w_eq + w_xx * grid.reverse(u_tt, "x") - w_x * u_tt
                - w_yy * grid.cumulative(v_tt, "y") - w_y * v_tt)
        return {"w": w_eq, "span": constraints["span"], "chord": constraints["chord"]}

    lam1, lam2 = multipliers.values["lambda1"], multipliers.values["lambda2"]
    lam1_x = _multiplier(multipliers, grid, "lambda1", "x")
    lam2_y = _multiplier(multipliers, grid, "lambda2", "y")
    u_eq = u_tt + lam1_x
    v_eq = v_tt + lam2_y
    w_eq = w_eq + lam1_x * w_x + lam1 * w_xx + lam2_y * w_y + lam2 * w_yy
    interior = {"u": u_eq, "v": v_eq, "w": w_eq, "span": constraints["span"], "chord": constraints["chord"]}

    if model.variant is Variant.PLATE_I:
        lam3 = multipliers.values["lambda3"]
        lam3_x = _multiplier(multipliers, grid, "lambda3", "x")
        lam3_y = _multiplier(multipliers, grid, "lambda3", "y")
        interior["u"] = u_eq + lam3_y
        interior["v"] = v_eq + lam3_x
        interior["w"] = w_eq + lam3_x * w_y + lam3_y * w_x + 2 * lam3 * w_xy
        interior["shear"] = constraints["shear"]
    return interior


def _plate_constants(model: ModelSpec) -> tuple[float, float, float]:
    params: PlateParams = model.params
    return model.stiffness, params.thickness, params.poisson_ratio


def _model_iii_interior(state, multipliers, model) -> dict[str, np.ndarray]:
    grid = state.grid
    D, h, nu = _plate_constants(model)
    w_x, w_y = state.get("w", 1, 0), state.get("w", 0, 1)
    lam1, lam2 = multipliers.values["lambda1"], multipliers.values["lambda2"]
    lam1_x = _multiplier(multipliers, grid, "lambda1", "x")
    lam2_y = _multiplier(multipliers, grid, "lambda2", "y")
    constraints = constraint_residual(state, ConstraintFlavor.QUAD_PLATE)
    return {
        "u": state.get("u", 0, 0, 2) + lam1_x + tt.U_BODY.evaluate(state, D, h, nu),
        "v": state.get("v", 0, 0, 2) + lam2_y + tt.V_BODY.evaluate(state, D, h, nu),
        "w": (state.get("w", 0, 0, 2) + lam1_x * w_x + lam1 * state.get("w", 2, 0)
              + lam2_y * w_y + lam2 * state.get("w", 0, 2) + tt.W_BODY.evaluate(state, D, h, nu)),
        "span": constraints["span"],
        "chord": constraints["chord"],
    }


# ==================== Boundary ====================

def boundary_residual(state: FieldState, model: ModelSpec) -> ResidualReport:
    """Natural-condition traces on the free edges, clamped traces on W and the linear reference set.

    Linear reference traces carry the sign of the leading linear part of the nonlinear condition,
    so their difference isolates the nonlinear terms.
    """
    grid = state.grid
    if model.is_beam:
        boundary = _beam_boundary(state, model)
    else:
        boundary = _plate_boundary(state, model)
    return _report(grid, {}, boundary)


def _beam_boundary(state, model) -> dict[tuple[str, str], np.ndarray]:
    grid = state.grid
    w_x, w_xx, w_xxx = state.get("w", 1), state.get("w", 2), state.get("w", 3)
    if model.variant is Variant.BEAM_ETA4:
        F, half_dF = 1 + w_x**2 + w_x**4, w_x + 2 * w_x**3
    else:
        F, half_dF = 1 + w_x**2, w_x
    trace = lambda f, edge="E": grid.trace(f, edge)
    return {
        ("E", "second"): trace(F * w_xx),
        ("E", "third"): trace(F * w_xxx + half_dF * w_xx**2),
        ("E", "second_linear"): trace(w_xx),
        ("E", "third_linear"): trace(w_xxx),
        ("W", "clamped_w"): trace(state.get("w", 0), "W"),
        ("W", "clamped_slope"): trace(w_x, "W"),
    }


def _plate_boundary(state, model) -> dict[tuple[str, str], np.ndarray]:
    grid = state.grid
    D, h, nu = _plate_constants(model)
    d = _w(state)
    w_x, w_y = d["w_x"], d["w_y"]
    w_xx, w_xy, w_yy = d["w_xx"], d["w_xy"], d["w_yy"]
    f = 1 + w_x**2 + w_y**2
    out: dict[tuple[str, str], np.ndarray] = {
        ("W", "clamped_w"): grid.trace(d["w"], "W"),
        ("W", "clamped_slope"): grid.trace(w_x, "W"),
    }

    e_linear_second = w_xx + nu * w_yy
    e_linear_third = d["w_xxx"] + (2 - nu) * d["w_xyy"]
    sn_linear_second = w_yy + nu * w_xx
    sn_linear_third = d["w_yyy"] + (2 - nu) * d["w_xxy"]

    if model.variant is Variant.PLATE_III:
        e_fields = {
            "second_a": tt.E_SECOND_A.evaluate(state, D, h, nu),
            "second_b": tt.E_SECOND_B.evaluate(state, D, h, nu),
            "third_a": tt.E_THIRD_A.evaluate(state, D, h, nu),
            "third_b": tt.E_THIRD_B.evaluate(state, D, h, nu),
            "second_linear": e_linear_second,
            "third_linear": -(h**2 / 6) * e_linear_third,
        }
        sn_fields = {
            "second_a": tt.SN_SECOND_A.evaluate(state, D, h, nu),
            "second_b": tt.SN_SECOND_B.evaluate(state, D, h, nu),
            "third_a": tt.SN_THIRD_A.evaluate(state, D, h, nu),
            "third_b": tt.SN_THIRD_B.evaluate(state, D, h, nu),
            "second_linear": sn_linear_second,
            "third_linear": -(h**2 / 6) * sn_linear_third,
        }
        out[("W", "clamped_u")] = grid.trace(state.get("u", 0, 0), "W")
        out[("W", "clamped_v")] = grid.trace(state.get("v", 0, 0), "W")
    else:
        e_fields = {
            "second": e_linear_second,
            "third": ((1 - nu) * ((1 + nu) * w_x * w_yy**2 - 2 * w_x * w_xy**2 - 4 * w_y * w_yy * w_xy)
                      - f * e_linear_third),
            "second_linear": e_linear_second,
            "third_linear": -e_linear_third,
        }
        sn_fields = {
            "second": sn_linear_second,
            "third": ((1 - nu) * ((1 + nu) * w_y * w_xx**2 - 2 * w_y * w_xy**2 - 4 * w_x * w_xx * w_xy)
                      - f * sn_linear_third),
            "second_linear": sn_linear_second,
            "third_linear": -sn_linear_third,
        }
    for name, values in e_fields.items():
        out[("E", name)] = grid.trace(values, "E")
    for edge in ("S", "N"):
        for name, values in sn_fields.items():
            out[(edge, name)] = grid.trace(values, edge)
    return out


# ==================== Multiplier edges ====================

@dataclass(frozen=True)
class MultiplierTraces:
    """Multiplier edge values from the integral formulas, and supplied traces minus formulas.

    Homogeneous conditions have formula 0, so their residual is the supplied trace itself.
    """
    formulas: dict[tuple[str, str], np.ndarray]
    residuals: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)

    def sup_residual(self) -> float:
        if not self.residuals:
            return 0.0
        return max(float(np.max(np.abs(r))) for r in self.residuals.values())


def multiplier_boundary_values(state: FieldState, model: ModelSpec,
                               multipliers: Optional[MultiplierField] = None) -> MultiplierTraces:
    """lambda traces on each edge from the integral formulas; keys are (multiplier, edge).

    The clamped-edge value of lambda1 is the span integral of the x-equation; the
    "lambda1"/"W_printed" entry keeps the chord integral written for Models II and III.
    """
    grid = state.grid
    if model.is_beam:
        u_tt = state.get("u", 0, 0, 2)
        reverse = grid.reverse(u_tt)
        formulas = {("lambda", "E"): grid.trace(reverse, "E"), ("lambda", "W"): grid.trace(reverse, "W")}
    elif model.variant is Variant.PLATE_I:
        formulas = _model_i_edges(state, multipliers)
    else:
        formulas = _two_multiplier_edges(state, model)

    residuals = {}
    if multipliers is not None:
        for (name, edge), value in formulas.items():
            if edge.endswith("_printed"):
                continue
            residuals[(name, edge)] = grid.trace(multipliers.values[name], edge) - value
    return MultiplierTraces(formulas, residuals)


def _zero_edge(grid: Grid, edge: str) -> np.ndarray:
    return np.zeros(grid.y.n if edge in ("E", "W") else grid.x.n)


def _two_multiplier_edges(state: FieldState, model: ModelSpec) -> dict[tuple[str, str], np.ndarray]:
    grid = state.grid
    U = state.get("u", 0, 0, 2)
    V = state.get("v", 0, 0, 2)
    if model.variant is Variant.PLATE_III:
        D, h, nu = _plate_constants(model)
        U = U + tt.U_BODY.evaluate(state, D, h, nu)
        V = V + tt.V_BODY.evaluate(state, D, h, nu)
    span_tail = grid.reverse(U, "x")
    chord_tail = grid.reverse(V, "y")
    printed_w = grid.y.weights @ grid.trace(U, "W")
    return {
        ("lambda1", "E"): _zero_edge(grid, "E"),
        ("lambda1", "W"): grid.line_integral(U, "x"),
        ("lambda1", "W_printed"): np.full(grid.y.n, printed_w),
        ("lambda1", "S"): grid.trace(span_tail, "S"),
        ("lambda1", "N"): grid.trace(span_tail, "N"),
        ("lambda2", "S"): _zero_edge(grid, "S"),
        ("lambda2", "N"): _zero_edge(grid, "N"),
        ("lambda2", "W"): grid.trace(chord_tail, "W"),
        ("lambda2", "E"): grid.trace(chord_tail, "E"),
    }


def _model_i_edges(state: FieldState, multipliers: Optional[MultiplierField]) -> dict[tuple[str, str], np.ndarray]:
    grid = state.grid
    if multipliers is None:
        raise MissingMultipliers("Model I edge formulas need lambda2 and lambda3 fields")
    u_tt, v_tt = state.get("u", 0, 0, 2), state.get("v", 0, 0, 2)
    lam3_x = _multiplier(multipliers, grid, "lambda3", "x")
    lam3_y = _multiplier(multipliers, grid, "lambda3", "y")
    lam2_y = _multiplier(multipliers, grid, "lambda2", "y")
    span = u_tt + lam3_y
    chord = v_tt + lam3_x
    span_tail = grid.reverse(span, "x")
    chord_tail = grid.reverse(chord, "y")
    return {
        ("lambda1", "E"): _zero_edge(grid, "E"),
        ("lambda3", "E"): _zero_edge(grid, "E"),
        ("lambda2", "S"): _zero_edge(grid, "S"),
        ("lambda3", "S"): _zero_edge(grid, "S"),
        ("lambda2", "N"): _zero_edge(grid, "N"),
        ("lambda3", "N"): _zero_edge(grid, "N"),
        ("lambda1", "W"): grid.line_integral(span, "x"),
        ("lambda2", "W"): grid.trace(chord_tail, "W"),
        ("lambda3", "W"): grid.line_integral(v_tt + lam2_y, "x"),
        ("lambda1", "S"): grid.trace(span_tail, "S"),
        ("lambda1", "N"): grid.trace(span_tail, "N"),
        ("lambda2", "E"): grid.trace(chord_tail, "E"),
    }
