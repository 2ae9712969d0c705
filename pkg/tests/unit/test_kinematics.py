"""Unit tests for constraint recovery, multiplier recovery and curvature forms."""

import numpy as np
import pytest

from basis import Grid, QuadratureGrid1D
from errors import SlopeTooLarge
from kinematics import (
    ConstraintFlavor,
    CurvatureVariant,
    beam_recover_lambda,
    beam_recover_u,
    composite_defect,
    constraint_residual,
    curvature,
    gaussian_curvature_defect,
    lambda_edge_value,
    plate_recover_inplane,
    plate_vtt_closure,
)
from models import FieldState


def beam_state(grid, amplitude, velocity=None, acceleration=None):
    """Analytic field w = a (x^2 - x^3 / 3) sampled with its x-derivatives."""
    x = grid.x.nodes
    samples = {
        ("w", 0, 0, 0): amplitude * (x**2 - x**3 / 3.0),
        ("w", 1, 0, 0): amplitude * (2.0 * x - x**2),
        ("w", 2, 0, 0): amplitude * (2.0 - 2.0 * x),
        ("w", 3, 0, 0): np.full_like(x, -2.0 * amplitude),
    }
    if velocity is not None:
        samples[("w", 1, 0, 1)] = velocity * np.cos(3.0 * x)
    if acceleration is not None:
        samples[("w", 1, 0, 2)] = acceleration * np.sin(2.0 * x)
    return FieldState(grid, samples)


def developable_state(grid, scale=0.1):
    """w = scale x^2 g(y) with g = 1 / (1 + y/2); w_xx w_yy = w_xy^2 and w_y = 0 on x = 0."""
    X, Y = grid.mesh
    base = 1.0 + 0.5 * Y
    g = [1.0 / base, -0.5 / base**2, 0.5 / base**3, -0.75 / base**4]
    samples = {}
    for dy in range(4):
        samples[("w", 0, dy, 0)] = scale * X**2 * g[dy]
        samples[("w", 1, dy, 0)] = scale * 2.0 * X * g[dy]
        samples[("w", 2, dy, 0)] = scale * 2.0 * g[dy]
    return FieldState(grid, samples)


@pytest.fixture
def line_grid():
    return Grid(QuadratureGrid1D(16, 0.0, 1.0))


@pytest.fixture
def square_grid():
    return Grid(QuadratureGrid1D(12, 0.0, 1.0), QuadratureGrid1D(10, 0.0, 1.0))


class TestBeamRecovery:
    """Test u recovered from w for each beam constraint flavor."""

    @pytest.mark.parametrize("flavor", [ConstraintFlavor.ETA2_BEAM, ConstraintFlavor.ETA4_BEAM,
                                        ConstraintFlavor.EXACT_BEAM])
    def test_recovered_u_satisfies_its_constraint(self, line_grid, flavor):
        state = beam_recover_u(beam_state(line_grid, 0.3), flavor)
        residual = constraint_residual(state, flavor)["span"]
        assert np.max(np.abs(residual)) <= 1e-12, f"{flavor.value} residual {np.max(np.abs(residual)):.2e}"

    def test_recovered_u_vanishes_at_clamp(self, line_grid):
        state = beam_recover_u(beam_state(line_grid, 0.3), ConstraintFlavor.ETA2_BEAM)
        u0 = line_grid.x.interpolation_matrix([0.0]) @ state.get("u")
        assert abs(u0[0]) < 1e-12

    def test_recovered_u_is_consistent_with_u_x(self, line_grid):
        """Test spectral d/dx of u reproduces the pointwise u_x."""
        state = beam_recover_u(beam_state(line_grid, 0.2), ConstraintFlavor.ETA2_BEAM)
        assert np.allclose(line_grid.diff(state.get("u")), state.get("u", 1), atol=1e-10)

    def test_time_derivatives_follow_chain_rule(self, line_grid):
        state = beam_recover_u(beam_state(line_grid, 0.2, velocity=0.5, acceleration=0.7),
                               ConstraintFlavor.ETA2_BEAM)
        w_x, w_xt, w_xtt = state.get("w", 1), state.get("w", 1, 0, 1), state.get("w", 1, 0, 2)
        assert np.allclose(state.get("u", 1, 0, 1), -w_x * w_xt)
        assert np.allclose(state.get("u", 1, 0, 2), -w_xt**2 - w_x * w_xtt)

    def test_zero_state_gives_zero_u(self, line_grid):
        state = beam_recover_u(beam_state(line_grid, 0.0), ConstraintFlavor.ETA4_BEAM)
        assert not np.any(state.get("u"))
        assert not np.any(state.get("u", 3))

    def test_exact_flavor_guards_slope(self, line_grid):
        """Test slopes reaching one raise SlopeTooLarge."""
        with pytest.raises(SlopeTooLarge):
            beam_recover_u(beam_state(line_grid, 1.2), ConstraintFlavor.EXACT_BEAM)

    def test_truncated_constraints_miss_exact_by_expected_order(self, line_grid):
        """Test the exact residual of eta2 and eta4 recoveries scales as a^4 and a^6."""
        def exact_gap(flavor, amplitude):
            state = beam_recover_u(beam_state(line_grid, amplitude), flavor)
            return np.max(np.abs(constraint_residual(state, ConstraintFlavor.EXACT_BEAM)["span"]))

        for flavor, order in ((ConstraintFlavor.ETA2_BEAM, 4), (ConstraintFlavor.ETA4_BEAM, 6)):
            ratio = exact_gap(flavor, 0.1) / exact_gap(flavor, 0.05)
            assert abs(np.log2(ratio) - order) < 0.1, f"{flavor.value}: observed order {np.log2(ratio):.3f}"


class TestMultiplierRecovery:
    """Test lambda(x) = int_x^L u_tt."""

    def test_lambda_vanishes_at_tip(self, line_grid):
        u_tt = np.cos(line_grid.x.nodes)
        assert lambda_edge_value(u_tt, line_grid) == 0.0

    def test_lambda_derivative_balances_u_tt(self, line_grid):
        u_tt = np.exp(line_grid.x.nodes)
        field = beam_recover_lambda(u_tt, line_grid)
        lam = field.values["lambda"]
        assert np.allclose(line_grid.diff(lam) + u_tt, 0.0, atol=1e-10)
        assert np.allclose(field.derivative("lambda", "x"), -u_tt)
        assert np.allclose(lam, np.e - np.exp(line_grid.x.nodes), atol=1e-12)


class TestPlateRecovery:
    """Test in-plane recovery, the composite identity and the v_tt closure."""

    def test_span_and_shear_hold_for_random_fields(self, plate_basis, rng):
        c = 0.05 * rng.standard_normal(plate_basis.n_coefficients)
        state = plate_recover_inplane(plate_basis.field_state(c))
        residual = constraint_residual(state, ConstraintFlavor.QUAD_PLATE)
        assert np.max(np.abs(residual["span"])) <= 1e-10
        assert np.max(np.abs(residual["shear"])) <= 1e-10

    def test_composite_defect_tracks_chord_residual(self, plate_basis, rng):
        """Test 4 u_x v_y - 2 u_y v_x - (u_y^2 + v_x^2) = -2 w_x^2 (chord residual)."""
        c = 0.05 * rng.standard_normal(plate_basis.n_coefficients)
        state = plate_recover_inplane(plate_basis.field_state(c))
        chord = constraint_residual(state, ConstraintFlavor.QUAD_PLATE)["chord"]
        expected = -2.0 * state.get("w", 1) ** 2 * chord
        assert np.max(np.abs(composite_defect(state) - expected)) <= 1e-11

    def test_developable_field_satisfies_all_constraints(self, square_grid):
        state = plate_recover_inplane(developable_state(square_grid))
        residual = constraint_residual(state, ConstraintFlavor.QUAD_PLATE)
        for name in ("span", "chord", "shear"):
            assert np.max(np.abs(residual[name])) <= 1e-10, f"{name} residual too large"
        assert np.max(np.abs(composite_defect(state))) <= 1e-10
        assert np.max(np.abs(gaussian_curvature_defect(state))) <= 1e-12

    def test_recovery_clamps_inplane_fields(self, square_grid):
        state = plate_recover_inplane(developable_state(square_grid))
        for name in ("u", "v"):
            trace = square_grid.trace(state.get(name), "W")
            assert np.max(np.abs(trace)) < 1e-12, f"{name} not zero on x = 0"

    def test_static_fields_have_no_inplane_acceleration(self, plate_basis, rng):
        c = 0.05 * rng.standard_normal(plate_basis.n_coefficients)
        u_tt, v_tt = plate_vtt_closure(plate_basis.field_state(c))
        assert not np.any(u_tt) and not np.any(v_tt)

    def test_closure_makes_v_tt_mean_zero(self, plate_basis, rng):
        """Test lambda2 = -int_0^y v_tt vanishes at y = Ly as well as y = 0."""
        n = plate_basis.n_coefficients
        c, cdot, cddot = (0.05 * rng.standard_normal(n) for _ in range(3))
        state = plate_basis.field_state(c, cdot, cddot)
        _, v_tt = plate_vtt_closure(state)
        assert np.max(np.abs(plate_basis.grid.mean(v_tt, "y"))) < 1e-12

    def test_y_independent_motion_matches_beam(self, plate_basis, rng):
        """Test a y-uniform plate motion has v_tt = 0 and the beam u_tt."""
        n_x, n_y = plate_basis.x.n_modes, plate_basis.y.n_modes
        modal = [0.05 * rng.standard_normal(n_x) for _ in range(3)]
        lifted = []
        for a in modal:
            full = np.zeros(n_x * n_y)
            full[::n_y] = a * np.sqrt(plate_basis.y.length)
            lifted.append(full)
        u_tt, v_tt = plate_vtt_closure(plate_basis.field_state(*lifted))
        assert np.max(np.abs(v_tt)) < 1e-14

        grid = plate_basis.grid
        w_x, w_xt, w_xtt = (plate_basis.x.samples[1] @ a for a in modal)
        beam_u_tt = -grid.x.cumulative @ (w_xt**2 + w_x * w_xtt)
        assert np.allclose(u_tt, beam_u_tt[:, None], atol=1e-12)


class TestCurvature:
    """Test curvature variants and their truncation orders."""

    def test_beam_variants_agree_for_small_slopes(self, line_grid):
        state = beam_state(line_grid, 1e-4)
        exact = curvature(state, CurvatureVariant.BEAM_EXACT)["kappa2"]
        eta2 = curvature(state, CurvatureVariant.BEAM_ETA2)["kappa2"]
        assert np.allclose(exact, eta2, rtol=1e-12, atol=0.0)

    @pytest.mark.parametrize("variant,order", [(CurvatureVariant.BEAM_ETA2, 4), (CurvatureVariant.BEAM_ETA4, 6)])
    def test_relative_truncation_slope(self, line_grid, variant, order):
        """Test the relative kappa^2 gap has the expected log-log slope over two decades."""
        amplitudes = np.logspace(-2.2, -0.2, 5)
        gaps = []
        for a in amplitudes:
            state = beam_state(line_grid, a)
            exact = curvature(state, CurvatureVariant.BEAM_EXACT)["kappa2"]
            truncated = curvature(state, variant)["kappa2"]
            interior = exact > 0
            gaps.append(np.max(np.abs(exact[interior] - truncated[interior]) / exact[interior]))
        slope = np.polyfit(np.log(amplitudes), np.log(gaps), 1)[0]
        assert abs(slope - order) <= 0.25, f"slope {slope:.3f} for {variant.value}"

    def test_exact_curvature_guards_slope(self, line_grid):
        with pytest.raises(SlopeTooLarge):
            curvature(beam_state(line_grid, 1.5), CurvatureVariant.BEAM_EXACT)

    def test_plate_in_w_reduces_to_linear_for_small_fields(self, plate_basis, rng):
        c = 1e-6 * rng.standard_normal(plate_basis.n_coefficients)
        state = plate_basis.field_state(c)
        k = curvature(state, CurvatureVariant.PLATE_IN_W)
        for name, linear in (("k11", -state.get("w", 2, 0)), ("k12", -2.0 * state.get("w", 1, 1))):
            # cubic terms are relatively O(|c|^2); compare in the sup norm, nodes near zero included
            deviation = np.max(np.abs(k[name] - linear)) / np.max(np.abs(linear))
            assert deviation <= 1e-9, f"{name} deviates by {deviation:.2e} relative to its sup norm"

    def test_full_plate_curvature_linearizes(self, plate_basis, rng):
        """Test the full curvature tensor reduces to -w_xx, -w_yy for a pure transverse field."""
        c = 0.01 * rng.standard_normal(plate_basis.n_coefficients)
        state = plate_basis.field_state(c)
        k = curvature(state, CurvatureVariant.PLATE_FULL)
        assert np.allclose(k["k11"], -state.get("w", 2, 0))
        assert np.allclose(k["k22"], -state.get("w", 0, 2))
        assert np.allclose(k["theta"], -state.get("w", 1, 0))
        assert not np.any(k["chi"])
