"""Unit tests for mode bases, quadrature grids and nodal operators."""

import math

import numpy as np
import pytest

from basis import (
    Basis,
    ModeBasis,
    QuadratureGrid1D,
    clamped_free_roots,
    eval_basis,
    free_free_roots,
    make_basis,
    quadrature_rule,
)
from errors import InvalidParameter


class TestCharacteristicRoots:
    """Test the clamped-free and free-free root solvers."""

    def test_first_clamped_free_root(self):
        """Test the fundamental cantilever root."""
        beta = clamped_free_roots(1)[0]
        assert abs(beta - 1.87510407) < 1e-8, f"Got {beta}"

    def test_first_free_free_root(self):
        """Test the first elastic free-free root."""
        beta = free_free_roots(1)[0]
        assert abs(beta - 4.73004074) < 1e-8, f"Got {beta}"

    def test_first_six_clamped_free_roots(self):
        """Test the higher cantilever roots against tabulated values."""
        expected = [1.87510407, 4.69409113, 7.85475744, 10.99554073, 14.13716839, 17.27875953]
        roots = clamped_free_roots(6)
        assert len(roots) == 6
        for k, (beta, ref) in enumerate(zip(roots, expected), start=1):
            assert abs(beta - ref) < 1e-7, f"Root {k}: got {beta}, expected {ref}"

    def test_first_three_free_free_roots(self):
        expected = [4.73004074, 7.85320462, 10.99560784]
        for beta, ref in zip(free_free_roots(3), expected):
            assert abs(beta - ref) < 1e-7, f"Got {beta}, expected {ref}"

    def test_roots_solve_characteristic_equations(self):
        """Test that every root zeroes the scaled characteristic function."""
        for beta in clamped_free_roots(10):
            assert abs(math.cos(beta) + 1.0 / math.cosh(beta)) < 1e-12
        for beta in free_free_roots(10):
            assert abs(math.cos(beta) - 1.0 / math.cosh(beta)) < 1e-12

    def test_roots_increase_and_approach_asymptote(self):
        """Test ordering and the (k - 1/2) pi asymptote for high modes."""
        roots = clamped_free_roots(12)
        assert all(b2 > b1 for b1, b2 in zip(roots, roots[1:]))
        assert abs(roots[-1] - 11.5 * math.pi) < 1e-9

    def test_invalid_counts_raise(self):
        with pytest.raises(InvalidParameter):
            clamped_free_roots(0)
        with pytest.raises(InvalidParameter):
            free_free_roots(-1)


class TestModeBasis:
    """Test orthonormality, boundary conditions and the mode equation."""

    @pytest.mark.parametrize("kind", ["clamped-free", "free-free"])
    def test_orthonormal_on_working_grid(self, kind):
        """Test the Gram matrix on the Gauss grid is the identity."""
        basis = ModeBasis.build(kind, 1.3, 8)
        phi = basis.samples[0]
        gram = phi.T @ (basis.grid.weights[:, None] * phi)
        error = np.max(np.abs(gram - np.eye(8)))
        assert error <= 1e-10, f"{kind} Gram error {error:.2e}"

    def test_clamped_free_boundary_conditions(self):
        """Test phi(0) = phi'(0) = 0 and phi''(L) = phi'''(L) = 0."""
        length = 2.0
        basis = ModeBasis.build("clamped-free", length, 8)
        for k, beta in enumerate(basis.roots):
            scale = beta / length
            assert abs(eval_basis(basis, k, 0, 0.0)[0]) < 1e-10
            assert abs(eval_basis(basis, k, 1, 0.0)[0]) < 1e-10 * scale
            assert abs(eval_basis(basis, k, 2, length)[0]) < 1e-9 * scale**2
            assert abs(eval_basis(basis, k, 3, length)[0]) < 1e-9 * scale**3

    def test_free_free_boundary_conditions(self):
        """Test zero moment and shear at both ends of the elastic free-free modes."""
        basis = ModeBasis.build("free-free", 1.0, 6)
        for k in range(2, 6):
            scale = basis.roots[k]
            for end in (0.0, 1.0):
                assert abs(eval_basis(basis, k, 2, end)[0]) < 1e-9 * scale**2
                assert abs(eval_basis(basis, k, 3, end)[0]) < 1e-9 * scale**3

    def test_free_free_rigid_functions(self):
        """Test the first two free-free functions are the normalized constant and line."""
        basis = ModeBasis.build("free-free", 2.0, 4)
        x = np.linspace(0.0, 2.0, 7)
        assert np.allclose(eval_basis(basis, 0, 0, x), 1.0 / math.sqrt(2.0))
        assert np.allclose(eval_basis(basis, 1, 0, x), (x - 1.0) * math.sqrt(3.0 / 2.0))
        assert basis.roots[:2] == (0.0, 0.0)

    def test_fourth_derivative_matches_mode_equation(self):
        """Test phi'''' = (beta / L)^4 phi at interior points."""
        basis = ModeBasis.build("clamped-free", 1.0, 6)
        x = np.linspace(0.05, 0.95, 11)
        for k, beta in enumerate(basis.roots):
            lhs = eval_basis(basis, k, 4, x)
            rhs = beta**4 * eval_basis(basis, k, 0, x)
            assert np.max(np.abs(lhs - rhs)) < 1e-8 * beta**4

    def test_eval_basis_rejects_bad_arguments(self):
        basis = ModeBasis.build("clamped-free", 1.0, 3)
        with pytest.raises(InvalidParameter):
            eval_basis(basis, 3, 0, 0.5)
        with pytest.raises(InvalidParameter):
            eval_basis(basis, 0, 5, 0.5)
        with pytest.raises(InvalidParameter):
            eval_basis(basis, 0, 0, 1.5)

    def test_build_rejects_bad_sizes(self):
        with pytest.raises(InvalidParameter):
            ModeBasis.build("clamped-free", 1.0, 0)
        with pytest.raises(InvalidParameter):
            ModeBasis.build("clamped-free", -1.0, 3)


class TestQuadratureGrid:
    """Test nodal differentiation and integration on polynomials."""

    def test_rule_integrates_polynomials_exactly(self):
        nodes, weights = quadrature_rule(5, (0.0, 2.0))
        assert abs(np.sum(weights * nodes**9) - 2.0**10 / 10.0) < 1e-10

    def test_rule_needs_two_points(self):
        with pytest.raises(InvalidParameter):
            quadrature_rule(1)

    def test_differentiation_is_exact_on_polynomials(self):
        grid = QuadratureGrid1D(12, 0.0, 1.5)
        x = grid.nodes
        derivative = grid.differentiation @ (x**5 - 2.0 * x**2)
        assert np.allclose(derivative, 5.0 * x**4 - 4.0 * x, atol=1e-10)

    def test_cumulative_and_reverse_integrals(self):
        """Test J and R against closed-form antiderivatives."""
        grid = QuadratureGrid1D(10, 0.0, 2.0)
        x = grid.nodes
        assert np.allclose(grid.cumulative @ x**2, x**3 / 3.0, atol=1e-12)
        assert np.allclose(grid.reverse @ x**2, (8.0 - x**3) / 3.0, atol=1e-12)
        assert np.allclose(grid.reverse_matrix([2.0]) @ np.ones(10), 0.0, atol=1e-14)

    def test_interpolation_reproduces_polynomials(self):
        grid = QuadratureGrid1D(8, 0.0, 1.0)
        points = np.array([0.0, 0.3, 1.0])
        values = grid.interpolation_matrix(points) @ (grid.nodes**3 + 1.0)
        assert np.allclose(values, points**3 + 1.0, atol=1e-12)


class TestRitzBasis:
    """Test tensor bases, adjoints and load vectors."""

    def test_beam_and_plate_sizes(self, beam_basis, plate_basis):
        assert not beam_basis.is_plate
        assert beam_basis.n_coefficients == 6
        assert plate_basis.is_plate
        assert plate_basis.n_coefficients == 12
        assert plate_basis.grid.shape == (plate_basis.x.grid.n, plate_basis.y.grid.n)

    def test_plate_basis_needs_modes_y(self, plate_models):
        with pytest.raises(InvalidParameter):
            make_basis(plate_models["plate-I"], 3)

    @pytest.mark.parametrize("dx,dy", [(0, 0), (2, 0), (1, 1), (0, 2)])
    def test_adjoint_is_transpose(self, plate_basis, rng, dx, dy):
        """Test <S c, g> = <c, S^T g> for the sampling operator."""
        c = rng.standard_normal(plate_basis.n_coefficients)
        g = rng.standard_normal(plate_basis.grid.shape)
        lhs = np.sum(plate_basis.w_samples(c, dx, dy) * g)
        rhs = c @ plate_basis.w_adjoint(g, dx, dy)
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))

    def test_evaluate_matches_grid_samples(self, plate_basis, rng):
        c = rng.standard_normal(plate_basis.n_coefficients)
        X, Y = plate_basis.grid.mesh
        points = np.column_stack([X.ravel(), Y.ravel()])
        values = plate_basis.evaluate(c, points, dx=1).reshape(plate_basis.grid.shape)
        assert np.allclose(values, plate_basis.w_samples(c, dx=1), atol=1e-10)

    def test_mode_samples_stack_every_function(self, plate_basis):
        stacked = plate_basis.mode_samples(0, 0)
        e3 = np.zeros(plate_basis.n_coefficients)
        e3[3] = 1.0
        assert np.allclose(stacked[3], plate_basis.w_samples(e3))

    def test_load_vectors(self, beam_basis, plate_basis):
        """Test tip and pressure vectors and rejection of mismatched kinds."""
        tip = beam_basis.load_vector("tip")
        assert np.allclose(tip, beam_basis.x.matrix(0, [1.0])[0])
        pressure = beam_basis.load_vector("pressure")
        assert pressure.shape == (6,)
        assert plate_basis.load_vector("edge").shape == (12,)
        with pytest.raises(InvalidParameter):
            beam_basis.load_vector("edge")
        with pytest.raises(InvalidParameter):
            plate_basis.load_vector("tip")

    def test_basis_is_plain_composition(self):
        x = ModeBasis.build("clamped-free", 1.0, 2)
        basis = Basis(x)
        assert basis.grid.shape == (x.grid.n,)
