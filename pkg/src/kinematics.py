"""Inextensibility constraints, in-plane recovery, multiplier recovery and curvatures."""

from __future__ import annotations

import logging
from enum import Enum
from typing import Callable

import numpy as np

from basis import Grid
from config import SLOPE_GUARD
from errors import SlopeTooLarge
from models import FieldState, MultiplierField, Variant

logger = logging.getLogger(__name__)


class ConstraintFlavor(str, Enum):
    EXACT_BEAM = "exact-beam"
    ETA2_BEAM = "eta2-beam"
    ETA4_BEAM = "eta4-beam"
    FULL_PLATE = "full-plate"
    QUAD_PLATE = "quad-plate"
    QUARTIC_PLATE = "quartic-plate"


class CurvatureVariant(str, Enum):
    BEAM_EXACT = "beam-exact"
    BEAM_ETA2 = "beam-eta2"
    BEAM_ETA4 = "beam-eta4"
    PLATE_FULL = "plate-full"
    PLATE_SIMPLIFIED = "plate-simplified"
    PLATE_IN_W = "plate-in-w"


BEAM_FLAVORS = (ConstraintFlavor.EXACT_BEAM, ConstraintFlavor.ETA2_BEAM, ConstraintFlavor.ETA4_BEAM)


def check_slope(w_x: np.ndarray) -> None:
    max_slope = float(np.max(np.abs(w_x))) if w_x.size else 0.0
    if max_slope >= 1.0 - SLOPE_GUARD:
        raise SlopeTooLarge(max_slope, SLOPE_GUARD)


def span_law(flavor: ConstraintFlavor) -> tuple[Callable, Callable, Callable]:
    """u_x = g(w_x) with its first two derivatives for a beam flavor."""
    if flavor is ConstraintFlavor.ETA2_BEAM:
        return (lambda s: -0.5 * s**2, lambda s: -s, lambda s: -np.ones_like(s))
    if flavor is ConstraintFlavor.ETA4_BEAM:
        return (lambda s: -0.5 * s**2 - 0.125 * s**4,
                lambda s: -s - 0.5 * s**3,
                lambda s: -1.0 - 1.5 * s**2)
    if flavor is ConstraintFlavor.EXACT_BEAM:
        def g(s):
            check_slope(s)
            # -1 + sqrt(1 - s^2) without cancellation
            return -s**2 / (1.0 + np.sqrt(1.0 - s**2))
        return (g, lambda s: -s / np.sqrt(1.0 - s**2), lambda s: -(1.0 - s**2) ** -1.5)
    raise ValueError(f"{flavor.value} is not a beam constraint flavor")


def beam_flavor(variant: Variant) -> ConstraintFlavor:
    return ConstraintFlavor.ETA4_BEAM if variant is Variant.BEAM_ETA4 else ConstraintFlavor.ETA2_BEAM


def beam_recover_u(state: FieldState, flavor: ConstraintFlavor) -> FieldState:
    """Add u = int_0^x g(w_x) and its derivatives (and u_t, u_tt when w_t, w_tt exist)."""
    grid = state.grid
    g, dg, d2g = span_law(flavor)
    w_x = state.get("w", 1)
    if state.is_zero():
        zero = np.zeros(grid.shape)
        keys = [("u", d, 0, dt) for d in range(4) for dt in range(3) if dt == 0 or state.has("w", 1, 0, dt)]
        return state.with_samples({k: zero for k in keys})

    w_xx, w_xxx = state.get("w", 2), state.get("w", 3)
    u_x = g(w_x)
    samples = {
        ("u", 0, 0, 0): grid.cumulative(u_x),
        ("u", 1, 0, 0): u_x,
        ("u", 2, 0, 0): dg(w_x) * w_xx,
        ("u", 3, 0, 0): d2g(w_x) * w_xx**2 + dg(w_x) * w_xxx,
    }
    if state.has("w", 1, 0, 1):
        w_xt = state.get("w", 1, 0, 1)
        u_xt = dg(w_x) * w_xt
        samples[("u", 0, 0, 1)] = grid.cumulative(u_xt)
        samples[("u", 1, 0, 1)] = u_xt
        if state.has("w", 1, 0, 2):
            u_xtt = d2g(w_x) * w_xt**2 + dg(w_x) * state.get("w", 1, 0, 2)
            samples[("u", 0, 0, 2)] = grid.cumulative(u_xtt)
            samples[("u", 1, 0, 2)] = u_xtt
    return state.with_samples(samples)


def beam_recover_lambda(u_tt: np.ndarray, grid: Grid, variant: Variant = Variant.BEAM_ETA2) -> MultiplierField:
    """lambda(x) = int_x^L u_tt, so lambda(L) = 0 and lambda_x = -u_tt."""
    return MultiplierField(
        variant,
        {"lambda": grid.reverse(u_tt)},
        {"lambda_x": -np.asarray(u_tt, dtype=float)},
    )


def lambda_edge_value(u_tt: np.ndarray, grid: Grid) -> float:
    """Reverse integral evaluated at x = L."""
    return float((grid.x.reverse_matrix([grid.x.b]) @ u_tt)[0])


def _plate_gradients(state: FieldState) -> dict[str, np.ndarray]:
    names = {
        "u_x": ("u", 1, 0), "u_y": ("u", 0, 1), "v_x": ("v", 1, 0), "v_y": ("v", 0, 1),
        "w_x": ("w", 1, 0), "w_y": ("w", 0, 1),
    }
    return {k: state.get_or_zero(*key) for k, key in names.items()}


def constraint_residual(state: FieldState, flavor: ConstraintFlavor) -> dict[str, np.ndarray]:
    """Pointwise constraint residuals: 'span' for beams; 'span', 'chord', 'shear' for plates."""
    if flavor in BEAM_FLAVORS:
        u_x, w_x = state.get("u", 1), state.get("w", 1)
        if flavor is ConstraintFlavor.EXACT_BEAM:
            return {"span": (1.0 + u_x) ** 2 + w_x**2 - 1.0}
        return {"span": u_x - span_law(flavor)[0](w_x)}

    f = _plate_gradients(state)
    u_x, u_y, v_x, v_y, w_x, w_y = (f[k] for k in ("u_x", "u_y", "v_x", "v_y", "w_x", "w_y"))
    full_shear = u_y + v_x + u_x * u_y + v_x * v_y + w_x * w_y
    if flavor is ConstraintFlavor.FULL_PLATE:
        return {
            "span": (1.0 + u_x) ** 2 + v_x**2 + w_x**2 - 1.0,
            "chord": u_y**2 + (1.0 + v_y) ** 2 + w_y**2 - 1.0,
            "shear": full_shear,
        }
    if flavor is ConstraintFlavor.QUAD_PLATE:
        return {
            "span": u_x + 0.5 * w_x**2,
            "chord": v_y + 0.5 * w_y**2,
            "shear": u_y + v_x + w_x * w_y,
        }
    if flavor is ConstraintFlavor.QUARTIC_PLATE:
        return {
            "span": u_x + 0.5 * v_x**2 + 0.5 * w_x**2 + 0.25 * v_x**2 * w_x**2 + 0.125 * v_x**4 + 0.125 * w_x**4,
            "chord": v_y + 0.5 * u_y**2 + 0.5 * w_y**2 + 0.25 * u_y**2 * w_y**2 + 0.125 * u_y**4 + 0.125 * w_y**4,
            "shear": full_shear,
        }
    raise ValueError(f"Unknown constraint flavor {flavor!r}")


def plate_recover_inplane(state: FieldState) -> FieldState:
    """Add u, v slaved to w with u = v = 0 on x = 0.

    u_x = -w_x^2 / 2 and u_y + v_x = -w_x w_y hold pointwise; derivatives up to second
    order are formed from the integrands rather than by differentiating the integrals.
    """
    grid = state.grid
    if state.is_zero():
        zero = np.zeros(grid.shape)
        return state.with_samples({(n, dx, dy, 0): zero for n in ("u", "v") for dx in range(3) for dy in range(3 - dx)})

    cx = lambda f: grid.cumulative(f, "x")
    w = {(dx, dy): state.get("w", dx, dy) for dx, dy in
         [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (1, 2), (0, 3), (1, 3)]}
    w_x, w_y, w_xx, w_xy, w_yy = w[(1, 0)], w[(0, 1)], w[(2, 0)], w[(1, 1)], w[(0, 2)]
    w_xyy, w_yyy, w_xyyy = w[(1, 2)], w[(0, 3)], w[(1, 3)]

    a = w_x * w_xy
    a_y = w_xy**2 + w_x * w_xyy
    a_yy = 3.0 * w_xy * w_xyy + w_x * w_xyyy
    b = w_x * w_y
    b_y = w_xy * w_y + w_x * w_yy
    b_yy = w_xyy * w_y + 2.0 * w_xy * w_yy + w_x * w_yyy

    samples = {
        ("u", 0, 0, 0): -0.5 * cx(w_x**2),
        ("u", 1, 0, 0): -0.5 * w_x**2,
        ("u", 0, 1, 0): -cx(a),
        ("u", 2, 0, 0): -w_x * w_xx,
        ("u", 1, 1, 0): -a,
        ("u", 0, 2, 0): -cx(a_y),
        ("v", 0, 0, 0): cx(cx(a)) - cx(b),
        ("v", 1, 0, 0): cx(a) - b,
        ("v", 0, 1, 0): cx(cx(a_y)) - cx(b_y),
        ("v", 2, 0, 0): -w_xx * w_y,
        ("v", 1, 1, 0): cx(a_y) - b_y,
        ("v", 0, 2, 0): cx(cx(a_yy)) - cx(b_yy),
    }
    return state.with_samples(samples)


def plate_vtt_closure(state: FieldState) -> tuple[np.ndarray, np.ndarray]:
    """In-plane accelerations slaved to w, with v_tt(x, 0) fixed by a zero y-mean."""
    grid = state.grid
    if state.is_zero(("w",)) or not state.has("w", 1, 0, 2):
        zero = np.zeros(grid.shape)
        return zero, zero.copy()
    w_x, w_y = state.get("w", 1, 0), state.get("w", 0, 1)
    w_xt, w_yt = state.get("w", 1, 0, 1), state.get("w", 0, 1, 1)
    w_xtt, w_ytt = state.get("w", 1, 0, 2), state.get("w", 0, 1, 2)
    u_tt = -grid.cumulative(w_xt**2 + w_x * w_xtt, "x")
    tail = grid.cumulative(w_yt**2 + w_y * w_ytt, "y")
    v_tt = grid.mean(tail, "y")[:, None] - tail
    return u_tt, v_tt


# ==================== Curvature ====================

def curvature(state: FieldState, variant: CurvatureVariant) -> dict[str, np.ndarray]:
    """Curvature fields; beams return 'kappa2' (plus 'kappa' for the exact form)."""
    if variant in (CurvatureVariant.BEAM_EXACT, CurvatureVariant.BEAM_ETA2, CurvatureVariant.BEAM_ETA4):
        w_x, w_xx = state.get("w", 1), state.get("w", 2)
        if variant is CurvatureVariant.BEAM_EXACT:
            check_slope(w_x)
            kappa = w_xx / np.sqrt(1.0 - w_x**2)
            return {"kappa": kappa, "kappa2": kappa**2}
        factor = 1.0 + w_x**2 if variant is CurvatureVariant.BEAM_ETA2 else 1.0 + w_x**2 + w_x**4
        return {"kappa2": w_xx**2 * factor}

    d = lambda name, dx, dy: state.get_or_zero(name, dx, dy)
    w_x, w_y = d("w", 1, 0), d("w", 0, 1)
    w_xx, w_xy, w_yy = d("w", 2, 0), d("w", 1, 1), d("w", 0, 2)

    if variant is CurvatureVariant.PLATE_IN_W:
        stretch = 1.0 + 0.5 * w_x**2 + 0.5 * w_y**2
        return {"k11": -w_xx * stretch, "k22": -w_yy * stretch, "k12": -2.0 * w_xy * stretch}

    u_x, u_y, v_x, v_y = d("u", 1, 0), d("u", 0, 1), d("v", 1, 0), d("v", 0, 1)
    u_xx, u_xy, u_yy = d("u", 2, 0), d("u", 1, 1), d("u", 0, 2)
    v_xx, v_xy, v_yy = d("v", 2, 0), d("v", 1, 1), d("v", 0, 2)

    if variant is CurvatureVariant.PLATE_SIMPLIFIED:
        dil = 1.0 + u_x + v_y
        return {
            "k11": w_y * v_xx + w_x * u_xx - dil * w_xx,
            # printed form: u_yy appears in both lead terms
            "k22": u_yy * w_x + w_y * u_yy - dil * w_yy,
            "k12": 2.0 * (v_xy * w_y + u_xy * w_x - dil * w_xy),
        }

    if variant is CurvatureVariant.PLATE_FULL:
        theta = -(1.0 + v_y) * w_x + v_x * w_y
        psi = -(1.0 + u_x) * w_y + u_y * w_x
        chi = u_x + v_y + u_x * v_y - u_y * v_x
        p, q = 1.0 + u_x, 1.0 + v_y
        br_a = v_xx * w_y + v_x * w_xy - v_xy * w_x - q * w_xx
        br_b = u_xy * w_x + u_y * w_xx - u_xx * w_y - p * w_xy
        br_c = u_xx + v_xy + u_xx * v_y + u_x * v_xy - u_xy * v_x - u_y * v_xx
        br_d = v_xy * w_y + v_x * w_yy - v_yy * w_x - q * w_xy
        br_e = u_yy * w_x + u_y * w_xy - u_xy * w_y - p * w_yy
        br_f = q * u_xy + p * v_yy - u_yy * v_x - u_y * v_xy
        return {
            "k11": p * br_a + v_x * br_b + w_x * br_c,
            "k22": u_y * br_d + q * br_e + w_y * br_f,
            "k12": p * br_d + q * br_b + u_y * br_a + v_x * br_e + w_x * br_f + w_y * br_c,
            "theta": theta, "psi": psi, "chi": chi,
        }
    raise ValueError(f"Unknown curvature variant {variant!r}")


# ==================== Diagnostics ====================

def mid_plane_strains(state: FieldState) -> dict[str, np.ndarray]:
    f = _plate_gradients(state)
    u_x, u_y, v_x, v_y, w_x, w_y = (f[k] for k in ("u_x", "u_y", "v_x", "v_y", "w_x", "w_y"))
    return {
        "e11": u_x + 0.5 * (u_x**2 + v_x**2 + w_x**2),
        "e22": v_y + 0.5 * (u_y**2 + v_y**2 + w_y**2),
        "e12": u_y + v_x + u_x * u_y + v_x * v_y + w_x * w_y,
    }


def composite_defect(state: FieldState) -> np.ndarray:
    """4 u_x v_y - 2 u_y v_x - (u_y^2 + v_x^2)."""
    f = _plate_gradients(state)
    return 4.0 * f["u_x"] * f["v_y"] - 2.0 * f["u_y"] * f["v_x"] - (f["u_y"] ** 2 + f["v_x"] ** 2)


def gaussian_curvature_defect(state: FieldState) -> np.ndarray:
    """w_xx w_yy - w_xy^2; zero for developable w."""
    return state.get("w", 2, 0) * state.get("w", 0, 2) - state.get("w", 1, 1) ** 2


def free_edge_trace_identity(state: FieldState) -> dict[str, np.ndarray | float]:
    """Both sides of w_yy(Lx, y) = [w_x w_xy] between y = 0 and y = Ly at x = Lx."""
    grid = state.grid
    edge = grid.trace(state.get("w", 1, 0) * state.get("w", 1, 1), "E")
    y_row = grid.y.interpolation_matrix([grid.y.a, grid.y.b])
    ends = y_row @ edge
    return {"w_yy_trace": grid.trace(state.get("w", 0, 2), "E"), "jump": float(ends[1] - ends[0])}
