"""Unit tests for the semi-discrete equations of motion and the integrators."""

import math
from dataclasses import replace

import numpy as np
import pytest

from basis import make_basis
from dynamics import (
    ConstraintMode,
    NewtonWorkspace,
    Scheme,
    initial_state,
    linear_frequency,
    measure_period,
    project_initial_field,
    semidiscretize,
    simulate,
    step,
    _fd_jacobian,
)
from errors import NewtonDivergence, SimulationAborted, UnsupportedMode

OMEGA_1 = 3.5160152


@pytest.fixture(scope="module")
def small_basis(beam_eta2):
    return make_basis(beam_eta2, 4)


def first_mode(amplitude, n=4):
    c = np.zeros(n)
    c[0] = amplitude
    return c


class TestAssembly:
    """Test system construction and mode restrictions."""

    def test_model_iii_has_no_dynamics(self, plate_models):
        model = plate_models["plate-III"]
        with pytest.raises(UnsupportedMode):
            semidiscretize(model, make_basis(model, 3, 3))

    def test_model_i_needs_multipliers(self, plate_models):
        model = plate_models["plate-I"]
        with pytest.raises(UnsupportedMode):
            semidiscretize(model, make_basis(model, 3, 3), mode="reduced")

    def test_state_sizes(self, beam_eta2, small_basis):
        reduced = semidiscretize(beam_eta2, small_basis, "reduced")
        multiplier = semidiscretize(beam_eta2, small_basis, "multiplier")
        assert reduced.n == 4 and reduced.m == 0
        assert multiplier.n == 4 + multiplier.discretization.n_z
        assert multiplier.m == multiplier.discretization.n_dep

    def test_initial_state_lies_on_manifold(self, plate_models, rng):
        model = plate_models["plate-I"]
        system = semidiscretize(model, make_basis(model, 3, 3))
        c0 = 0.05 * rng.standard_normal(9)
        cdot0 = 0.1 * rng.standard_normal(9)
        state = initial_state(system, c0, cdot0)
        d = system.discretization
        assert np.max(np.abs(d.constraints(state.q))) <= 1e-13
        assert np.max(np.abs(d.constraint_jacobian_apply(state.q, state.qdot))) <= 1e-12

    def test_initial_state_shape_check(self, beam_eta2, small_basis):
        system = semidiscretize(beam_eta2, small_basis)
        with pytest.raises(ValueError):
            initial_state(system, np.zeros(3), np.zeros(4))

    def test_project_initial_field(self, small_basis):
        samples = 0.3 * small_basis.x.samples[0][:, 1]
        c = project_initial_field(small_basis, samples)
        assert np.allclose(c, [0.0, 0.3, 0.0, 0.0], atol=1e-9)
        from_callable = project_initial_field(small_basis, lambda x: 0.0 * x + 1.0)
        assert from_callable[0] == pytest.approx(small_basis.load_vector("pressure")[0], rel=1e-12)


class TestStep:
    """Test single steps of both schemes."""

    def test_rejects_non_positive_dt(self, beam_eta2, small_basis):
        system = semidiscretize(beam_eta2, small_basis)
        state = initial_state(system, first_mode(0.01), np.zeros(4))
        with pytest.raises(ValueError):
            step(system, state, 0.0)

    def test_rk4_needs_reduced_mode(self, beam_eta2, small_basis):
        system = semidiscretize(beam_eta2, small_basis, "multiplier")
        state = initial_state(system, first_mode(0.01), np.zeros(4))
        with pytest.raises(UnsupportedMode):
            step(system, state, 0.01, Scheme.RK4)

    @pytest.mark.parametrize("variant", ["plate-I", "plate-II"])
    def test_multiplier_step_stays_on_manifold(self, plate_models, rng, variant):
        model = plate_models[variant]
        system = semidiscretize(model, make_basis(model, 3, 3))
        state = initial_state(system, 0.02 * rng.standard_normal(9), np.zeros(9))
        dt = 0.05 / math.sqrt(model.stiffness)
        new = step(system, state, dt)
        d = system.discretization
        assert new.t == pytest.approx(dt)
        assert np.max(np.abs(d.constraints(new.q))) <= 1e-12
        assert new.multipliers is not None and new.multipliers.size == d.m

    def test_slow_chord_iteration_refreshes_jacobian(self, beam_eta2, small_basis, monkeypatch):
        """Test a reused Jacobian that only contracts linearly is rebuilt within the step."""
        system = semidiscretize(beam_eta2, small_basis, "reduced")
        state = initial_state(system, first_mode(0.1), np.zeros(4))
        dt = 0.05
        exact = _fd_jacobian(system, state.q, state.qdot, state.qdot, 0.0, dt)
        # chord error contracts by 1 - 0.57 = 0.43 per iteration with this Jacobian
        workspace = NewtonWorkspace(jacobian=exact / 0.57, dt=dt)
        monkeypatch.setattr("dynamics.NEWTON_MAX_ITERATIONS", 8)

        step(system, state, dt, workspace=workspace)

        report = workspace.last_report
        assert report.jacobian_refreshes >= 1, "slow contraction should trigger a refresh"
        assert report.newton_iterations <= 8

    def test_singular_jacobian_is_a_solver_failure(self, beam_eta2, small_basis):
        system = semidiscretize(beam_eta2, small_basis, "reduced")
        state = initial_state(system, first_mode(0.1), np.zeros(4))
        workspace = NewtonWorkspace(jacobian=np.zeros((4, 4)), dt=0.05)
        with pytest.raises(NewtonDivergence):
            step(system, state, 0.05, workspace=workspace)
        assert workspace.jacobian is None, "a singular Jacobian must not be reused"

    def test_projection_removes_perturbed_inplane_state(self, plate_models, rng):
        """Test an off-manifold z is reported as drift and projected away."""
        model = plate_models["plate-II"]
        system = semidiscretize(model, make_basis(model, 3, 3))
        d = system.discretization
        state = initial_state(system, 0.02 * rng.standard_normal(9), np.zeros(9))
        q = state.q.copy()
        q[d.n_c:] += 1e-3 * rng.standard_normal(q.size - d.n_c)
        perturbed = replace(state, q=q)
        assert np.max(np.abs(d.constraints(perturbed.q))) > 1e-9, "perturbation should leave the manifold"

        workspace = NewtonWorkspace()
        new = step(system, perturbed, 0.05 / math.sqrt(model.stiffness), workspace=workspace)

        assert workspace.last_report.drift > 1e-9, "drift should expose the perturbed prediction"
        assert np.max(np.abs(d.constraints(new.q))) <= 1e-12
        assert np.max(np.abs(d.constraint_jacobian_apply(new.q, new.qdot))) <= 1e-12

    def test_modes_agree_on_modal_trajectory(self, beam_eta2, small_basis):
        """Test reduced and multiplier systems produce the same w history."""
        c0 = first_mode(0.1)
        runs = [simulate(semidiscretize(beam_eta2, small_basis, mode), c0, np.zeros(4), 0.02, 0.2)
                for mode in ConstraintMode]
        assert np.allclose(runs[0].modal, runs[1].modal, atol=1e-11)


class TestSimulation:
    """Test trajectories, diagnostics and failure reporting."""

    def test_last_step_lands_on_final_time(self, beam_eta2, small_basis):
        trajectory = simulate(semidiscretize(beam_eta2, small_basis), first_mode(0.01), np.zeros(4), 0.03, 0.1)
        assert len(trajectory.states) == 5
        assert trajectory.times[-1] == pytest.approx(0.1, abs=1e-12)

    def test_linear_period_midpoint(self, beam_eta2, small_basis):
        trajectory = simulate(semidiscretize(beam_eta2, small_basis, "reduced"),
                              first_mode(1e-3), np.zeros(4), 0.01, 4.0)
        period = measure_period(trajectory.times, trajectory.modal[:, 0])
        assert period == pytest.approx(2 * np.pi / OMEGA_1, rel=1e-3)

    def test_linear_period_rk4(self, beam_eta2, small_basis):
        trajectory = simulate(semidiscretize(beam_eta2, small_basis, "reduced"),
                              first_mode(1e-3), np.zeros(4), 0.005, 4.0, scheme=Scheme.RK4)
        period = measure_period(trajectory.times, trajectory.modal[:, 0])
        assert period == pytest.approx(2 * np.pi / OMEGA_1, rel=1e-3)

    def test_energy_is_nearly_conserved(self, beam_eta2, small_basis):
        trajectory = simulate(semidiscretize(beam_eta2, small_basis), first_mode(0.1), np.zeros(4), 0.01, 2.0)
        energy = trajectory.series("E")
        assert np.max(np.abs(energy - energy[0])) <= 1e-3 * energy[0]
        assert max(trajectory.series("g_inf")) <= 1e-12

    def test_diagnostics_columns(self, beam_eta2, small_basis):
        trajectory = simulate(semidiscretize(beam_eta2, small_basis), first_mode(0.01), np.zeros(4), 0.05, 0.1)
        frame = trajectory.to_frame()
        for column in ("t", "E_K", "E_P", "E", "g_inf", "Gqdot_inf", "drift", "w_tip",
                       "lambda_root", "lambda_mid", "c0", "c3"):
            assert column in frame.columns, f"missing column {column}"
        assert frame["w_tip"].iloc[0] == pytest.approx(0.01 * small_basis.load_vector("tip")[0])

    def test_failure_carries_partial_trajectory(self, beam_eta2, small_basis, monkeypatch):
        monkeypatch.setattr("dynamics.NEWTON_MAX_ITERATIONS", 0)
        with pytest.raises(SimulationAborted) as info:
            simulate(semidiscretize(beam_eta2, small_basis), first_mode(0.1), np.zeros(4), 0.05, 0.5)
        assert info.value.step_index == 1
        assert len(info.value.trajectory.states) == 1

    def test_rejects_bad_times(self, beam_eta2, small_basis):
        system = semidiscretize(beam_eta2, small_basis)
        with pytest.raises(ValueError):
            simulate(system, first_mode(0.01), np.zeros(4), 0.01, 0.0)


class TestHelpers:
    """Test closed-form frequencies and period measurement."""

    def test_linear_frequency(self, beam_eta2):
        assert linear_frequency(beam_eta2) == pytest.approx(OMEGA_1, rel=1e-7)
        assert linear_frequency(beam_eta2, 2) == pytest.approx(22.0345, rel=1e-5)

    def test_linear_frequency_beams_only(self, plate_models):
        with pytest.raises(UnsupportedMode):
            linear_frequency(plate_models["plate-II"])

    def test_measure_period(self):
        t = np.linspace(0.0, 10.0, 2001)
        assert measure_period(t, np.cos(2 * np.pi * t / 1.7)) == pytest.approx(1.7, rel=1e-4)

    def test_measure_period_needs_two_crossings(self):
        t = np.linspace(0.0, 1.0, 11)
        with pytest.raises(ValueError):
            measure_period(t, np.cos(t))
