"""Acceptance checks run on finished trajectories, equilibria and modal reports (the --check flag)."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Literal, Optional

import numpy as np

from dynamics import ModalState, Scheme, SemiDiscreteSystem, Trajectory, linear_frequency
from modal import ModalReport
from models import FieldState
from statics import EquilibriumReport

logger = logging.getLogger(__name__)

CONSTRAINT_TOLERANCE = 1e-9
RECOVERY_TOLERANCE = 1e-10
ENERGY_TOLERANCE = 1e-4
MULTIPLIER_TOLERANCE = 1e-8
STATIC_OPTIMALITY = 1e-10
STABILITY_FLOOR = -1e-8
FREQUENCY_TOLERANCE = 1e-6
MAX_CHECKED_STATES = 200


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    comparison: Literal["le", "ge"] = "le"

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        return self.value <= self.threshold if self.comparison == "le" else self.value >= self.threshold

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def _sampled(trajectory: Trajectory) -> list[ModalState]:
    states = trajectory.states
    if len(states) <= MAX_CHECKED_STATES:
        return states
    index = np.unique(np.linspace(0, len(states) - 1, MAX_CHECKED_STATES).round().astype(int))
    return [states[i] for i in index]


def accelerated_state(system: SemiDiscreteSystem, state: ModalState) -> tuple[FieldState, np.ndarray]:
    """Field samples with velocities and accelerations, plus the discrete multipliers."""
    disc = system.discretization
    q, qdot = system.full_coordinates(state.q, state.qdot)
    c, _ = disc.split(q)
    cdot, _ = disc.split(qdot)
    acc = disc.acceleration(c, cdot, system.force(state.t))
    qddot = np.concatenate([acc.a_c, acc.a_z])
    return disc.field_state(q, qdot, qddot), acc.multipliers


# ==================== Dynamics ====================

def energy_spread(trajectory: Trajectory) -> float:
    """(max E - min E) / |E(0)|, or the absolute spread when E(0) vanishes."""
    energy = trajectory.series("E")
    spread = float(np.max(energy) - np.min(energy))
    scale = abs(float(energy[0]))
    return spread / scale if scale > 0 else spread


def recovery_residual(trajectory: Trajectory) -> float:
    """Sup of the pointwise span/chord residuals over sampled states."""
    disc = trajectory.system.discretization
    worst = 0.0
    for state in _sampled(trajectory):
        q, _ = trajectory.system.full_coordinates(state.q, state.qdot)
        for name, values in disc.span_residual(q).items():
            if name != "shear":
                worst = max(worst, float(np.max(np.abs(values))))
    return worst


def beam_multiplier_residuals(trajectory: Trajectory) -> dict[str, float]:
    """lambda(L), L2 of lambda_x + u_tt for the recovered multiplier, and its gap to the discrete one."""
    system = trajectory.system
    grid = system.discretization.grid
    edge, balance, gap = 0.0, 0.0, 0.0
    for state in _sampled(trajectory):
        field_state, mu = accelerated_state(system, state)
        u_tt = field_state.get("u", 0, 0, 2)
        lam = grid.reverse(u_tt)
        edge = max(edge, abs(float(grid.x.reverse_matrix([grid.x.b])[0] @ u_tt)))
        balance = max(balance, float(np.sqrt(grid.integrate((grid.diff(lam) + u_tt) ** 2))))
        scale = max(1.0, float(np.max(np.abs(u_tt))))
        gap = max(gap, float(np.max(np.abs(mu - lam))) / scale)
    return {"lambda_tip": edge, "lambda_balance_l2": balance, "lambda_discrete_gap": gap}


def dynamics_checks(trajectory: Trajectory, scheme: Scheme | str) -> list[CheckResult]:
    system = trajectory.system
    results = [
        CheckResult("constraint_maintenance", float(np.max(trajectory.series("g_inf"))), CONSTRAINT_TOLERANCE),
        CheckResult("constraint_recovery", recovery_residual(trajectory), RECOVERY_TOLERANCE),
    ]
    if Scheme(scheme) is Scheme.IMPLICIT_MIDPOINT and system.forcing is None:
        results.append(CheckResult("energy_conservation", energy_spread(trajectory), ENERGY_TOLERANCE))
    if system.model.is_beam:
        lam = beam_multiplier_residuals(trajectory)
        results += [
            CheckResult("lambda_tip", lam["lambda_tip"], MULTIPLIER_TOLERANCE),
            CheckResult("lambda_balance", lam["lambda_balance_l2"], MULTIPLIER_TOLERANCE),
            CheckResult("lambda_discrete_gap", lam["lambda_discrete_gap"], MULTIPLIER_TOLERANCE),
        ]
    _log(results)
    return results


# ==================== Statics and modes ====================

def static_checks(report: EquilibriumReport, is_beam: bool) -> list[CheckResult]:
    results = [
        CheckResult("static_optimality", report.optimality, STATIC_OPTIMALITY),
        CheckResult("static_constraints", report.constraint_norm, STATIC_OPTIMALITY),
        CheckResult("static_stability", report.min_reduced_eigenvalue, STABILITY_FLOOR, "ge"),
    ]
    if is_beam:
        # no in-plane inertia, so the multiplier vanishes at equilibrium
        results.append(CheckResult("static_multiplier", float(np.max(np.abs(report.multipliers))), STATIC_OPTIMALITY))
    _log(results)
    return results


def modal_checks(report: ModalReport, n_reference: Optional[int] = 3) -> list[CheckResult]:
    omega = report.frequencies
    results = [
        CheckResult("frequencies_nonnegative", float(np.min(omega)), 0.0, "ge"),
        CheckResult("frequencies_sorted", float(np.min(np.diff(omega))) if omega.size > 1 else 0.0, 0.0, "ge"),
    ]
    if report.model.is_beam and n_reference:
        for k in range(1, min(n_reference, omega.size) + 1):
            exact = linear_frequency(report.model, k)
            results.append(CheckResult(f"beam_frequency_{k}", abs(omega[k - 1] - exact) / exact, FREQUENCY_TOLERANCE))
    _log(results)
    return results


def _log(results: list[CheckResult]) -> None:
    for r in results:
        if r.passed:
            logger.debug(f"check {r.name}: {r.value:.3e} ok")
        else:
            logger.warning(f"check {r.name} failed: {r.value:.3e} vs {r.threshold:.1e}")


def as_manifest_entries(results: list[CheckResult]) -> dict[str, dict]:
    return {r.name: r.to_dict() for r in results}
