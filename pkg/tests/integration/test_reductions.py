"""Integration tests tying the models together: 1D reduction, mode equivalence and symmetries."""

import numpy as np

from basis import make_basis
from dynamics import measure_period, semidiscretize, simulate
from models import make_model

# D = E h^2 / (12 (1 - nu^2)) = 1
UNIT_D_PLATE = {"length_x": 1.0, "length_y": 1.0, "thickness": 0.1, "youngs_modulus": 1092.0, "poisson_ratio": 0.3}


def first_mode(amplitude, n):
    c = np.zeros(n)
    c[0] = amplitude
    return c


class TestPlateToBeamReduction:
    """Test y-independent Model II motion reproduces the beam."""

    def test_y_uniform_plate_tracks_beam(self):
        plate = make_model("plate-II", UNIT_D_PLATE)
        beam = make_model("beam-eta2", {"length": 1.0, "stiffness": plate.stiffness})
        n_x = 4
        # y functions 1 and 2y - 1 only, so y-uniform states stay y-uniform
        plate_basis = make_basis(plate, n_x, 2)
        beam_basis = make_basis(beam, n_x)

        c_beam = first_mode(0.1, n_x)
        c_plate = np.zeros(2 * n_x)
        c_plate[0::2] = c_beam * np.sqrt(plate.params.length_y)

        plate_run = simulate(semidiscretize(plate, plate_basis), c_plate, np.zeros(2 * n_x), 0.01, 1.0)
        beam_run = simulate(semidiscretize(beam, beam_basis), c_beam, np.zeros(n_x), 0.01, 1.0)

        uniform = plate_run.modal[:, 0::2] / np.sqrt(plate.params.length_y)
        assert np.max(np.abs(uniform - beam_run.modal)) <= 1e-8
        assert np.max(np.abs(plate_run.modal[:, 1::2])) <= 1e-12
        assert np.allclose(plate_run.series("w_tip"), beam_run.series("w_tip"), atol=1e-8)
        assert np.allclose(plate_run.series("E"), plate.params.length_y * beam_run.series("E"), rtol=1e-8)


class TestModeEquivalence:
    """Test the reduced and multiplier formulations agree."""

    def test_beam_reduced_and_multiplier_agree(self, beam_eta2):
        basis = make_basis(beam_eta2, 6)
        c0 = first_mode(0.1, 6)
        runs = [simulate(semidiscretize(beam_eta2, basis, mode), c0, np.zeros(6), 0.01, 5.0)
                for mode in ("multiplier", "reduced")]
        assert np.max(np.abs(runs[0].modal - runs[1].modal)) <= 1e-6
        assert np.allclose(runs[0].series("lambda_root"), runs[1].series("lambda_root"), atol=1e-6)

    def test_plate_ii_reduced_and_multiplier_agree(self, plate_models, rng):
        model = plate_models["plate-II"]
        basis = make_basis(model, 3, 3)
        c0 = 0.02 * rng.standard_normal(9)
        dt = 0.05 / np.sqrt(model.stiffness)
        runs = [simulate(semidiscretize(model, basis, mode), c0, np.zeros(9), dt, 10 * dt)
                for mode in ("multiplier", "reduced")]
        assert np.max(np.abs(runs[0].modal - runs[1].modal)) <= 1e-9


class TestSymmetry:
    """Test reflection w -> -w."""

    def test_beam_dynamics_are_odd_in_w(self, beam_eta4):
        basis = make_basis(beam_eta4, 4)
        c0 = np.array([0.1, -0.02, 0.005, 0.0])
        cdot0 = np.array([0.0, 0.3, 0.0, -0.1])
        up = simulate(semidiscretize(beam_eta4, basis), c0, cdot0, 0.02, 0.5)
        down = simulate(semidiscretize(beam_eta4, basis), -c0, -cdot0, 0.02, 0.5)
        assert np.allclose(up.modal, -down.modal, atol=1e-12)
        assert np.allclose(up.series("lambda_mid"), down.series("lambda_mid"), atol=1e-12)
        assert np.allclose(up.series("E"), down.series("E"), rtol=1e-12)


class TestInplaneInertia:
    """Test the nonlocal in-plane inertia is active."""

    def test_inertia_changes_large_amplitude_period(self, beam_eta2):
        basis = make_basis(beam_eta2, 4)
        tip = float(basis.evaluate(np.eye(4)[0], [1.0])[0])
        c0 = first_mode(0.3 / tip, 4)
        periods = []
        for inertia in (True, False):
            system = semidiscretize(beam_eta2, basis, inplane_inertia=inertia)
            run = simulate(system, c0, np.zeros(4), 0.01, 4.5)
            periods.append(measure_period(run.times, run.modal[:, 0]))
        assert abs(periods[0] - periods[1]) / periods[1] > 1e-3
        assert periods[0] > periods[1], "in-plane inertia should lengthen the period"

    def test_linear_limit_ignores_inertia(self, beam_eta2):
        basis = make_basis(beam_eta2, 4)
        c0 = first_mode(1e-4, 4)
        runs = [simulate(semidiscretize(beam_eta2, basis, inplane_inertia=inertia), c0, np.zeros(4), 0.01, 0.5)
                for inertia in (True, False)]
        assert np.allclose(runs[0].modal, runs[1].modal, rtol=0, atol=1e-9)
