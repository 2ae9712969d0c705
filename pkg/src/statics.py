"""Static equilibria under transverse loads by constrained minimization of E_P - Work."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import linalg

from basis import Basis
from config import (
    CONTINUATION_MIN_STEP,
    CONTINUATION_START,
    FD_STEP,
    N_JOBS,
    STATIC_MAX_ITERATIONS,
    STATIC_TOLERANCE,
)
from discretization import ConstrainedDiscretization
from energy import EnergyReport, potential_energy
from errors import ContinuationStall, InvalidParameter, NewtonDivergence, SolverError
from models import ModelSpec
from tracer import trace_function

logger = logging.getLogger(__name__)

LoadKind = Literal["tip", "edge", "pressure"]


@dataclass(frozen=True)
class LoadSpec:
    """Transverse load: tip force (beam), line load on x = Lx (plate) or uniform pressure."""
    kind: LoadKind
    magnitude: float

    def __post_init__(self):
        if self.kind not in ("tip", "edge", "pressure"):
            raise InvalidParameter(f"Unknown load kind {self.kind!r}")
        if not math.isfinite(self.magnitude):
            raise InvalidParameter(f"Load magnitude must be finite, got {self.magnitude}")

    def scaled(self, factor: float) -> "LoadSpec":
        return LoadSpec(self.kind, self.magnitude * factor)


@dataclass(frozen=True)
class StaticTolerances:
    optimality: float = STATIC_TOLERANCE
    max_iterations: int = STATIC_MAX_ITERATIONS
    continuation_start: float = CONTINUATION_START
    min_step: float = CONTINUATION_MIN_STEP


@dataclass(frozen=True)
class EquilibriumReport:
    load: LoadSpec
    q: np.ndarray
    multipliers: np.ndarray
    optimality: float
    constraint_norm: float
    energy: EnergyReport
    total_potential: float
    load_displacement: float
    probes: dict[str, float] = field(default_factory=dict)
    iterations: int = 0
    min_reduced_eigenvalue: Optional[float] = None
    load_factor: float = 1.0

    @property
    def converged(self) -> bool:
        return self.load_factor == 1.0


class StaticProblem:
    """Reduced gradient and Hessian of E_P - Work over the independent coordinates (c, free z)."""

    def __init__(self, discretization: ConstrainedDiscretization, load: Optional[LoadSpec] = None):
        self.disc = discretization
        self.load = load or LoadSpec("pressure", 0.0)
        self.unit_force = discretization.basis.load_vector(self.load.kind)
        self.n_independent = discretization.n_c + discretization.n_free

    def coordinates(self, x: np.ndarray) -> np.ndarray:
        d = self.disc
        return d.full_coordinates(x[:d.n_c], x[d.n_c:])

    def force(self, scale: float = 1.0) -> np.ndarray:
        f = np.zeros(self.disc.n)
        f[:self.disc.n_c] = scale * self.load.magnitude * self.unit_force
        return f

    def reduced_gradient(self, x: np.ndarray, scale: float = 1.0) -> np.ndarray:
        q = self.coordinates(x)
        return self.disc.null_space(q).T @ (self.disc.potential_gradient(q) - self.force(scale))

    def reduced_hessian(self, x: np.ndarray, scale: float = 1.0) -> np.ndarray:
        """Central differences of the reduced gradient, symmetrized."""
        n = x.size
        H = np.empty((n, n))
        h = FD_STEP * max(1.0, float(np.max(np.abs(x))) if n else 1.0)
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            H[:, k] = (self.reduced_gradient(x + e, scale) - self.reduced_gradient(x - e, scale)) / (2 * h)
        return 0.5 * (H + H.T)

    def multipliers(self, q: np.ndarray) -> np.ndarray:
        d = self.disc
        grad_dep = d.potential_gradient(q)[d.n_c:d.n_c + d.n_dep]
        return d.solve_dependent_transpose(grad_dep)

    def newton(self, x0: np.ndarray, scale: float, tolerances: StaticTolerances) -> tuple[np.ndarray, int, float]:
        x = x0.copy()
        force_scale = max(1.0, abs(self.load.magnitude * scale) * float(np.max(np.abs(self.unit_force))))
        r = self.reduced_gradient(x, scale)
        trace = []
        for iteration in range(tolerances.max_iterations + 1):
            norm = float(np.max(np.abs(r))) / force_scale if r.size else 0.0
            trace.append(norm)
            if not math.isfinite(norm):
                break
            if norm <= tolerances.optimality:
                return x, iteration, norm
            if iteration == tolerances.max_iterations:
                break
            try:
                dx = linalg.solve(self.reduced_hessian(x, scale), -r, assume_a="sym")
            except linalg.LinAlgError:
                break
            # backtrack on the gradient norm
            step = 1.0
            for _ in range(12):
                trial = x + step * dx
                r_trial = self.reduced_gradient(trial, scale)
                if np.all(np.isfinite(r_trial)) and np.max(np.abs(r_trial)) < (1 - 1e-4 * step) * np.max(np.abs(r)):
                    break
                step *= 0.5
            x, r = trial, r_trial
        raise NewtonDivergence(f"Static Newton failed at load {self.load.magnitude * scale:.6g}", trace)

    def report(self, x: np.ndarray, scale: float, iterations: int, optimality: float) -> EquilibriumReport:
        d = self.disc
        q = self.coordinates(x)
        state = d.field_state(q, max_order=2)
        energy = potential_energy(state, d.model, d.energy_form)
        load = self.load.scaled(scale)
        displacement = float(self.unit_force @ q[:d.n_c])
        eigenvalues = linalg.eigvalsh(self.reduced_hessian(x, scale)) if x.size else np.zeros(1)
        return EquilibriumReport(
            load=load,
            q=q,
            multipliers=self.multipliers(q),
            optimality=optimality,
            constraint_norm=float(np.max(np.abs(d.constraints(q)))),
            energy=energy,
            total_potential=energy.potential - load.magnitude * displacement,
            load_displacement=displacement,
            probes=_probes(d.basis, d.model, q[:d.n_c]),
            iterations=iterations,
            min_reduced_eigenvalue=float(eigenvalues[0]),
            load_factor=scale,
        )


def _probes(basis: Basis, model: ModelSpec, c: np.ndarray) -> dict[str, float]:
    if model.is_beam:
        L = model.params.length
        return {"w_tip": float(basis.evaluate(c, [L])[0]), "w_mid": float(basis.evaluate(c, [0.5 * L])[0])}
    Lx, Ly = model.lengths
    values = basis.evaluate(c, [[Lx, 0.5 * Ly], [Lx, 0.0], [Lx, Ly]])
    return {"w_tip": float(values[0]), "w_corner_S": float(values[1]), "w_corner_N": float(values[2])}


@trace_function(span_kind="statics")
def solve_static(model: ModelSpec, load: LoadSpec, basis: Basis,
                 tolerances: StaticTolerances = StaticTolerances()) -> EquilibriumReport:
    """Equilibrium at the full load, by direct Newton or by load continuation when that fails.

    Continuation starts at tolerances.continuation_start of the target, halves its increment on
    divergence and raises ContinuationStall below tolerances.min_step.
    """
    problem = StaticProblem(ConstrainedDiscretization(model, basis), load)
    x0 = np.zeros(problem.n_independent)
    try:
        x, iterations, optimality = problem.newton(x0, 1.0, tolerances)
        logger.info(f"{model.variant.value} {load.kind} load {load.magnitude:g}: converged in {iterations} iterations")
        return problem.report(x, 1.0, iterations, optimality)
    except SolverError as exc:
        logger.warning(f"Direct Newton failed ({exc}); switching to load continuation")

    factor, step, x = 0.0, tolerances.continuation_start, x0
    last: Optional[EquilibriumReport] = None
    total_iterations = 0
    while factor < 1.0:
        target = min(1.0, factor + step)
        try:
            x_new, iterations, optimality = problem.newton(x, target, tolerances)
        except SolverError:
            step *= 0.5
            logger.debug(f"Continuation step halved to {step:g} at factor {factor:g}")
            if step < tolerances.min_step:
                raise ContinuationStall(f"Load continuation stalled for {load.kind} load {load.magnitude:g}",
                                        factor, last)
            continue
        factor, x = target, x_new
        total_iterations += iterations
        if factor < 1.0:
            last = problem.report(x, factor, total_iterations, optimality)
    logger.info(f"{model.variant.value} {load.kind} load {load.magnitude:g}: continuation converged")
    return problem.report(x, 1.0, total_iterations, optimality)


def load_sweep(model: ModelSpec, basis: Basis, kind: LoadKind, magnitudes: Sequence[float],
               tolerances: StaticTolerances = StaticTolerances(), n_jobs: int = N_JOBS) -> list[EquilibriumReport]:
    """Independent solves over load magnitudes, optionally in parallel; order follows magnitudes."""
    return Parallel(n_jobs=n_jobs)(
        delayed(solve_static)(model, LoadSpec(kind, float(m)), basis, tolerances) for m in magnitudes
    )


def sweep_frame(reports: Sequence[EquilibriumReport]) -> pd.DataFrame:
    return pd.DataFrame([
        {
            "magnitude": r.load.magnitude,
            **r.probes,
            "load_displacement": r.load_displacement,
            "E_P": r.energy.potential,
            "total_potential": r.total_potential,
            "optimality": r.optimality,
            "constraint_norm": r.constraint_norm,
            "min_reduced_eigenvalue": r.min_reduced_eigenvalue,
        }
        for r in reports
    ])
