"""Linearized vibration modes about the undeformed state."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import linalg

from basis import Basis
from discretization import ConstrainedDiscretization
from errors import InvalidParameter
from models import ModelSpec
from statics import StaticProblem
from tracer import tracer

logger = logging.getLogger(__name__)

KERNEL_TOLERANCE = 1e-10


@dataclass(frozen=True)
class ModalReport:
    """Sorted frequencies and mode shapes in the independent coordinates (c, then free in-plane)."""
    model: ModelSpec
    frequencies: np.ndarray
    shapes: np.ndarray
    n_c: int

    def transverse(self, k: int) -> np.ndarray:
        """Modal coefficients of w for mode k, unit Euclidean norm."""
        c = self.shapes[:self.n_c, k]
        return c / (np.linalg.norm(c) or 1.0)

    def y_uniformity(self, k: int, n_y: int) -> float:
        """Share of mode k's w-content carried by the y-constant function (plates)."""
        c = self.transverse(k).reshape(-1, n_y)
        return float(np.sum(c[:, 0] ** 2))

    def to_frame(self) -> pd.DataFrame:
        with np.errstate(divide="ignore"):
            periods = 2 * np.pi / self.frequencies
        return pd.DataFrame({"mode": np.arange(1, self.frequencies.size + 1), "omega": self.frequencies, "period": periods})


def _inplane_range(K_pp: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the in-plane directions with nonzero linear stiffness."""
    if K_pp.size == 0:
        return np.zeros((0, 0))
    values, vectors = linalg.eigh(K_pp)
    keep = values > KERNEL_TOLERANCE * max(1.0, float(np.max(np.abs(values))))
    if not np.all(keep):
        logger.debug(f"Projected out {int(np.sum(~keep))} in-plane kernel directions")
    return vectors[:, keep]


def linear_modes(model: ModelSpec, basis: Basis, n: int) -> ModalReport:
    """First n eigenpairs of the zero-state stiffness and mass.

    Slaved in-plane unknowns have zero first-order sensitivity at the undeformed state, so the
    transverse mass is the identity; free in-plane unknowns keep their own mass block.
    """
    with tracer.start_as_current_span("linear_modes") as span:
        span.set_attribute("sim.variant", model.variant.value)
        disc = ConstrainedDiscretization(model, basis)
        problem = StaticProblem(disc)
        n_i = problem.n_independent
        if not 1 <= n <= n_i:
            raise InvalidParameter(f"Requested {n} modes from a {n_i}-dimensional model")

        K = problem.reduced_hessian(np.zeros(n_i))
        n_c = disc.n_c
        Q = _inplane_range(K[n_c:, n_c:])
        T = np.zeros((n_i, n_c + Q.shape[1]))
        T[:n_c, :n_c] = np.eye(n_c)
        T[n_c:, n_c:] = Q

        M = np.eye(n_i)
        if disc.n_free:
            free = np.zeros((disc.n_free, disc.n_z))
            free[:, disc.n_dep:] = np.eye(disc.n_free)
            M[n_c:, n_c:] = disc.mass_z_apply(free)[:, disc.n_dep:]

        K_r, M_r = T.T @ K @ T, T.T @ M @ T
        values, vectors = linalg.eigh(0.5 * (K_r + K_r.T), 0.5 * (M_r + M_r.T))
        if n > values.size:
            raise InvalidParameter(f"Only {values.size} modes remain after removing the in-plane kernel")
        if values[0] < -KERNEL_TOLERANCE * max(1.0, float(values[-1])):
            logger.warning(f"Negative linear stiffness eigenvalue {values[0]:.3e}")
        frequencies = np.sqrt(np.clip(values[:n], 0.0, None))
        span.set_attribute("sim.omega1", float(frequencies[0]))
        logger.info(f"{model.variant.value}: first frequencies {np.array2string(frequencies[:4], precision=6)}")
        return ModalReport(model, frequencies, T @ vectors[:, :n], n_c)
