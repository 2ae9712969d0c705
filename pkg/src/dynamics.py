"""Semi-discrete constrained equations of motion and their time integration."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
import pandas as pd
from scipy import linalg

from basis import Basis, clamped_free_roots
from config import (
    FD_STEP,
    NEWTON_CHORD_LIMIT,
    NEWTON_CONTRACTION,
    NEWTON_MAX_ITERATIONS,
    NEWTON_TOLERANCE,
    PROJECTION_TOLERANCE,
)
from discretization import ConstrainedDiscretization
from errors import NewtonDivergence, ProjectionFailure, SimulationAborted, SolverError, UnsupportedMode
from models import ModelSpec, Variant
from tracer import trace_function

logger = logging.getLogger(__name__)


class ConstraintMode(str, Enum):
    MULTIPLIER = "multiplier"
    REDUCED = "reduced"


class Scheme(str, Enum):
    IMPLICIT_MIDPOINT = "implicit-midpoint-projected"
    RK4 = "explicit-rk4-reduced"


Forcing = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class SemiDiscreteSystem:
    """Discrete operators for one model, basis and constraint mode.

    In reduced mode the state is the modal vector c alone and u, v are recovered on demand;
    in multiplier mode the state carries the in-plane unknowns as well and the constraints
    are maintained by projection after every step.
    """
    discretization: ConstrainedDiscretization
    mode: ConstraintMode
    forcing: Optional[Forcing] = None

    @property
    def model(self) -> ModelSpec:
        return self.discretization.model

    @property
    def basis(self) -> Basis:
        return self.discretization.basis

    @property
    def n(self) -> int:
        d = self.discretization
        return d.n_c if self.mode is ConstraintMode.REDUCED else d.n

    @property
    def m(self) -> int:
        return 0 if self.mode is ConstraintMode.REDUCED else self.discretization.m

    @property
    def constraint_names(self) -> tuple[str, ...]:
        return self.discretization.constraint_names

    def force(self, t: float) -> Optional[np.ndarray]:
        return None if self.forcing is None else np.asarray(self.forcing(t), dtype=float)

    def full_coordinates(self, q: np.ndarray, qdot: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(q, qdot) over every discrete unknown, slaving z to c in reduced mode."""
        if self.mode is ConstraintMode.MULTIPLIER:
            return q, qdot
        d = self.discretization
        return d.full_coordinates(q), np.concatenate([qdot, qdot @ d.dependent_jacobian(q)])

    def potential_force(self, q: np.ndarray) -> np.ndarray:
        """Gradient of the potential in the state's coordinates."""
        d = self.discretization
        if self.mode is ConstraintMode.MULTIPLIER:
            return d.potential_gradient(q)
        grad = d.potential_gradient(d.full_coordinates(q))
        return grad[:d.n_c] + d.dependent_jacobian(q) @ grad[d.n_c:]

    def constraint(self, q: np.ndarray) -> np.ndarray:
        if self.mode is ConstraintMode.REDUCED:
            return np.zeros(0)
        return self.discretization.constraints(q)


@dataclass(frozen=True)
class ModalState:
    t: float
    q: np.ndarray
    qdot: np.ndarray
    multipliers: Optional[np.ndarray] = None


@dataclass(frozen=True)
class StepReport:
    newton_iterations: int = 0
    jacobian_refreshes: int = 0
    drift: float = 0.0


@dataclass
class NewtonWorkspace:
    """Finite-difference Jacobian reused across steps until convergence slows."""
    jacobian: Optional[np.ndarray] = None
    dt: Optional[float] = None
    last_report: StepReport = field(default_factory=StepReport)


@dataclass
class Trajectory:
    """Accepted states with per-step diagnostics."""
    system: SemiDiscreteSystem
    states: list[ModalState] = field(default_factory=list)
    diagnostics: list[dict[str, float]] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def q(self) -> np.ndarray:
        return np.array([s.q for s in self.states])

    @property
    def qdot(self) -> np.ndarray:
        return np.array([s.qdot for s in self.states])

    @property
    def modal(self) -> np.ndarray:
        return self.q[:, :self.system.discretization.n_c]

    def series(self, name: str) -> np.ndarray:
        return np.array([d[name] for d in self.diagnostics])

    def append(self, state: ModalState, diagnostics: dict[str, float]) -> None:
        if self.states and state.t <= self.states[-1].t:
            raise ValueError(f"Time stamps must increase: {state.t} after {self.states[-1].t}")
        self.states.append(state)
        self.diagnostics.append(diagnostics)

    def to_frame(self) -> pd.DataFrame:
        n_c = self.system.discretization.n_c
        frame = pd.DataFrame(self.diagnostics)
        frame.insert(0, "t", self.times)
        modal = pd.DataFrame(self.modal, columns=[f"c{k}" for k in range(n_c)])
        return pd.concat([frame, modal], axis=1)


# ==================== Assembly ====================

@trace_function(span_kind="assembly")
def semidiscretize(model: ModelSpec, basis: Basis, mode: ConstraintMode | str = ConstraintMode.MULTIPLIER,
                   inplane_inertia: bool = True, forcing: Optional[Forcing] = None) -> SemiDiscreteSystem:
    """Build the semi-discrete system; Model I has no reduced form and Model III no dynamics."""
    mode = ConstraintMode(mode)
    if model.variant is Variant.PLATE_III:
        raise UnsupportedMode("Model III is available for statics, modal analysis and residual checks only")
    if model.variant is Variant.PLATE_I and mode is ConstraintMode.REDUCED:
        raise UnsupportedMode("Model I keeps the shear multiplier; only multiplier mode is available")
    discretization = ConstrainedDiscretization(model, basis, inplane_inertia=inplane_inertia)
    logger.info(f"Semi-discrete {model.variant.value} system in {mode.value} mode: n={discretization.n_c} modes")
    return SemiDiscreteSystem(discretization, mode, forcing)


def initial_state(system: SemiDiscreteSystem, c0: np.ndarray, cdot0: np.ndarray) -> ModalState:
    """State at t = 0 from modal w data; in-plane unknowns always come from recovery."""
    c0, cdot0 = np.asarray(c0, dtype=float), np.asarray(cdot0, dtype=float)
    d = system.discretization
    if c0.shape != (d.n_c,) or cdot0.shape != (d.n_c,):
        raise ValueError(f"Initial modal data must have {d.n_c} entries")
    acc = d.acceleration(c0, cdot0, system.force(0.0))
    if system.mode is ConstraintMode.REDUCED:
        return ModalState(0.0, c0, cdot0, acc.multipliers)
    return ModalState(0.0, np.concatenate([c0, acc.z]), np.concatenate([cdot0, acc.zdot]), acc.multipliers)


def project_initial_field(basis: Basis, values) -> np.ndarray:
    """Modal coefficients of w data given as grid samples or a callable of the coordinates."""
    grid = basis.grid
    samples = values(*grid.mesh) if callable(values) else np.asarray(values, dtype=float)
    samples = np.broadcast_to(samples, grid.shape)
    # modes are orthonormal, so projection is a weighted inner product
    return basis.w_adjoint(grid.weights * samples, 0, 0)


# ==================== Time stepping ====================

def _midpoint_residual(system: SemiDiscreteSystem, c0, v0, v1, t, dt):
    c_mid = c0 + 0.25 * dt * (v0 + v1)
    acc = system.discretization.acceleration(c_mid, 0.5 * (v0 + v1), system.force(t + 0.5 * dt))
    return v1 - v0 - dt * acc.a_c, acc


def _fd_jacobian(system, c0, v0, v1, t, dt) -> np.ndarray:
    n = v1.size
    J = np.empty((n, n))
    h = FD_STEP * max(1.0, float(np.max(np.abs(v1))))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        plus, _ = _midpoint_residual(system, c0, v0, v1 + e, t, dt)
        minus, _ = _midpoint_residual(system, c0, v0, v1 - e, t, dt)
        J[:, k] = (plus - minus) / (2.0 * h)
    return J


def _solve_midpoint(system: SemiDiscreteSystem, c0, v0, t, dt, workspace: NewtonWorkspace):
    d = system.discretization
    v1 = v0 + dt * d.acceleration(c0, v0, system.force(t)).a_c
    scale = max(1.0, float(np.max(np.abs(v0))))
    if workspace.dt != dt:
        workspace.jacobian, workspace.dt = None, dt

    trace, refreshes, chord = [], 0, 0
    R, acc = _midpoint_residual(system, c0, v0, v1, t, dt)
    for iteration in range(NEWTON_MAX_ITERATIONS + 1):
        norm = float(np.max(np.abs(R)))
        trace.append(norm)
        if not math.isfinite(norm):
            break
        if norm <= NEWTON_TOLERANCE * scale:
            return v1, acc, StepReport(iteration, refreshes)
        if iteration == NEWTON_MAX_ITERATIONS:
            break
        # a chord step contracting slower than NEWTON_CONTRACTION is only linear
        slow = len(trace) > 1 and norm > NEWTON_CONTRACTION * trace[-2]
        if workspace.jacobian is None or slow or chord >= NEWTON_CHORD_LIMIT:
            workspace.jacobian = _fd_jacobian(system, c0, v0, v1, t, dt)
            refreshes, chord = refreshes + 1, 0
        try:
            v1 = v1 - linalg.solve(workspace.jacobian, R)
        except (linalg.LinAlgError, ValueError) as exc:
            workspace.jacobian = None
            raise NewtonDivergence(f"Singular midpoint Jacobian at t={t:.6g}, dt={dt:.3g}: {exc}", trace) from exc
        chord += 1
        R, acc = _midpoint_residual(system, c0, v0, v1, t, dt)
    raise NewtonDivergence(f"Implicit midpoint Newton failed at t={t:.6g}, dt={dt:.3g}", trace)


def _rk4(system: SemiDiscreteSystem, c0, v0, t, dt):
    d = system.discretization

    def rate(c, v, time):
        return v, d.acceleration(c, v, system.force(time)).a_c

    k1 = rate(c0, v0, t)
    k2 = rate(c0 + 0.5 * dt * k1[0], v0 + 0.5 * dt * k1[1], t + 0.5 * dt)
    k3 = rate(c0 + 0.5 * dt * k2[0], v0 + 0.5 * dt * k2[1], t + 0.5 * dt)
    k4 = rate(c0 + dt * k3[0], v0 + dt * k3[1], t + dt)
    c1 = c0 + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    v1 = v0 + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return c1, v1


def step(system: SemiDiscreteSystem, state: ModalState, dt: float,
         scheme: Scheme | str = Scheme.IMPLICIT_MIDPOINT, workspace: Optional[NewtonWorkspace] = None) -> ModalState:
    """Advance one step.

    Implicit midpoint solves for the end velocity by Newton and, in multiplier mode, advances
    the in-plane unknowns with the midpoint acceleration before projecting them back onto
    g = 0 and G qdot = 0. The pre-projection constraint residual is kept as drift.

    The dynamic variants have no free in-plane unknowns, so the projection is the exact
    constraint solve for z given the new c and the predicted z only feeds the drift figure.
    The end-of-step constraint norms therefore hold by construction; drift is the measured
    quantity.
    """
    scheme = Scheme(scheme)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if scheme is Scheme.RK4 and system.mode is not ConstraintMode.REDUCED:
        raise UnsupportedMode("explicit-rk4-reduced needs a reduced-mode system")
    workspace = workspace if workspace is not None else NewtonWorkspace()
    d = system.discretization
    c0, v0 = state.q[:d.n_c], state.qdot[:d.n_c]

    if scheme is Scheme.RK4:
        c1, v1 = _rk4(system, c0, v0, state.t, dt)
        report = StepReport()
        mid = None
    else:
        v1, mid, report = _solve_midpoint(system, c0, v0, state.t, dt, workspace)
        c1 = c0 + 0.5 * dt * (v0 + v1)

    t1 = state.t + dt
    end = d.acceleration(c1, v1, system.force(t1))
    if system.mode is ConstraintMode.REDUCED:
        workspace.last_report = report
        return ModalState(t1, c1, v1, end.multipliers)

    z0, zdot0 = state.q[d.n_c:], state.qdot[d.n_c:]
    zdot_pred = zdot0 + dt * mid.a_z
    z_pred = z0 + 0.5 * dt * (zdot0 + zdot_pred)
    drift = float(np.max(np.abs(d.constraints(np.concatenate([c1, z_pred])))))

    q1 = np.concatenate([c1, end.z])
    qdot1 = np.concatenate([v1, end.zdot])
    position = float(np.max(np.abs(d.constraints(q1))))
    velocity = float(np.max(np.abs(d.constraint_jacobian_apply(q1, qdot1))))
    if position > PROJECTION_TOLERANCE or velocity > PROJECTION_TOLERANCE:
        raise ProjectionFailure(f"Projection left |g| = {position:.3e}, |G qdot| = {velocity:.3e} at t={t1:.6g}")
    workspace.last_report = replace(report, drift=drift)
    return ModalState(t1, q1, qdot1, end.multipliers)


# ==================== Diagnostics ====================

def _probe_points(system: SemiDiscreteSystem) -> dict[str, np.ndarray]:
    model = system.model
    if model.is_beam:
        L = model.params.length
        return {"root": np.array([0.0]), "mid": np.array([0.5 * L]), "tip": np.array([L])}
    Lx, Ly = model.lengths
    return {"root": np.array([[0.0, 0.5 * Ly]]), "mid": np.array([[0.5 * Lx, 0.5 * Ly]]),
            "tip": np.array([[Lx, 0.5 * Ly]])}


def step_diagnostics(system: SemiDiscreteSystem, state: ModalState, report: StepReport = StepReport()) -> dict[str, float]:
    """Energies, constraint residuals, tip deflection and multiplier probes for one state."""
    d = system.discretization
    q, qdot = system.full_coordinates(state.q, state.qdot)
    kinetic = d.kinetic(q, qdot)
    potential = d.potential(q)
    c = q[:d.n_c]
    probes = _probe_points(system)
    out = {
        "E_K": kinetic,
        "E_P": potential,
        "E": kinetic + potential,
        "g_inf": float(np.max(np.abs(d.constraints(q)))),
        "Gqdot_inf": float(np.max(np.abs(d.constraint_jacobian_apply(q, qdot)))),
        "drift": report.drift,
        "newton_iterations": float(report.newton_iterations),
        "w_tip": float(d.basis.evaluate(c, probes["tip"])[0]),
    }
    if state.multipliers is not None:
        for name, values in d.multiplier_fields(state.multipliers).items():
            for where in ("root", "mid"):
                out[f"{name}_{where}"] = float(np.atleast_1d(d.grid.interpolate(values, probes[where]))[0])
    return out


# ==================== Driver ====================

@trace_function(span_kind="simulation")
def simulate(system: SemiDiscreteSystem, c0: np.ndarray, cdot0: np.ndarray, dt: float, t_final: float,
             scheme: Scheme | str = Scheme.IMPLICIT_MIDPOINT,
             callback: Optional[Callable[[ModalState, dict], None]] = None) -> Trajectory:
    """Integrate from modal initial data to t_final.

    The last step is shortened to land on t_final. Solver failures raise SimulationAborted
    carrying the step index and the trajectory accepted so far.
    """
    if not dt > 0 or not t_final > 0:
        raise ValueError(f"dt and t_final must be positive, got dt={dt}, t_final={t_final}")
    scheme = Scheme(scheme)
    trajectory = Trajectory(system)
    state = initial_state(system, c0, cdot0)
    trajectory.append(state, step_diagnostics(system, state))

    workspace = NewtonWorkspace()
    n_steps = int(math.ceil(t_final / dt - 1e-9))
    logger.info(f"Simulating {system.model.variant.value} to t={t_final} in {n_steps} steps ({scheme.value})")
    for index in range(1, n_steps + 1):
        h = min(dt, t_final - state.t) if index == n_steps else dt
        try:
            state = step(system, state, h, scheme, workspace)
        except SolverError as exc:
            logger.error(f"Step {index} failed at t={state.t:.6g}: {exc}")
            raise SimulationAborted(index, exc, trajectory) from exc
        diagnostics = step_diagnostics(system, state, workspace.last_report)
        trajectory.append(state, diagnostics)
        if callback is not None:
            callback(state, diagnostics)
    logger.info(f"Finished at t={state.t:.6g}; max |g| {max(trajectory.series('g_inf')):.3e}")
    return trajectory


def measure_period(times: np.ndarray, signal: np.ndarray) -> float:
    """Mean spacing of upward zero crossings, located by linear interpolation."""
    times, signal = np.asarray(times, dtype=float), np.asarray(signal, dtype=float)
    idx = np.nonzero((signal[:-1] < 0.0) & (signal[1:] >= 0.0))[0]
    if idx.size < 2:
        raise ValueError("Need at least two upward zero crossings to measure a period")
    s0, s1 = signal[idx], signal[idx + 1]
    crossings = times[idx] - s0 * (times[idx + 1] - times[idx]) / (s1 - s0)
    return float(np.mean(np.diff(crossings)))


def linear_frequency(model: ModelSpec, k: int = 1) -> float:
    """k-th clamped-free beam frequency beta_k^2 sqrt(D) / L^2 of the linearized equation."""
    if not model.is_beam:
        raise UnsupportedMode("Closed-form linear frequencies exist for beams only")
    beta = clamped_free_roots(k)[-1]
    return beta**2 * math.sqrt(model.stiffness) / model.params.length**2
