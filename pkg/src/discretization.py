"""Ritz discretization of the constrained Lagrangian.

Generalized coordinates are q = (c, z): c are transverse modal coefficients and z are
nodal in-plane strain unknowns from which u and v are built by exact integration along
the clamped direction:

    beam        u = Jx s                           z = s
    plate II    u = Jx s1,  v = P0(Jy s2)          z = (s1, s2)
    plate I     u = Jx s1,  v = Jx p + Jy s2       z = (s1, s2, p)
    plate III   as plate I, p unconstrained

P0 removes the y-mean. The constraints are quadrature-weighted residuals, linear in z with a
constant, invertible Jacobian block G_D for the dependent unknowns. Plate I's shear
constraint is tested against x-only functions, which makes it square with p.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import linalg

from basis import Basis
from energy import DEFAULT_FORMS, EnergyForm, density_partials, energy_density
from kinematics import ConstraintFlavor, beam_flavor, span_law
from models import FieldState, ModelSpec, Variant

logger = logging.getLogger(__name__)


class ConstrainedDiscretization:
    """Coordinates, constraints, mass and potential for one model on one basis."""

    def __init__(self, model: ModelSpec, basis: Basis, inplane_inertia: bool = True,
                 energy_form: Optional[EnergyForm] = None):
        if model.is_beam == basis.is_plate:
            raise ValueError("Basis dimension does not match the model")
        self.model, self.basis, self.grid = model, basis, basis.grid
        self.variant = model.variant
        self.inplane_inertia = inplane_inertia
        self.energy_form = energy_form or DEFAULT_FORMS[model.variant]
        self.n_c = basis.n_coefficients

        shape = self.grid.shape
        if model.is_beam:
            self._span = span_law(beam_flavor(model.variant))
            dep, free = [("s", shape)], []
        elif self.variant is Variant.PLATE_II:
            dep, free = [("s1", shape), ("s2", shape)], []
        elif self.variant is Variant.PLATE_I:
            dep, free = [("s1", shape), ("s2", shape), ("p", shape[:1])], []
        else:
            dep, free = [("s1", shape), ("s2", shape)], [("p", shape[:1])]
        self._blocks = dep + free
        self._sizes = [int(np.prod(s)) for _, s in self._blocks]
        self.n_dep = sum(int(np.prod(s)) for _, s in dep)
        self.n_free = sum(int(np.prod(s)) for _, s in free)
        self.n_z = self.n_dep + self.n_free
        self.n = self.n_c + self.n_z
        self.m = self.n_dep

        W = self.grid.weights
        self._w_flat = W.ravel()
        if self.grid.is_plate:
            self._line_weight = self.grid.x.weights * self.grid.y.length
        logger.debug(f"{self.variant.value}: {self.n_c} modal, {self.n_dep} slaved, {self.n_free} free in-plane unknowns")

    # ==================== Layout ====================

    @property
    def constraint_names(self) -> tuple[str, ...]:
        if self.model.is_beam:
            return ("span",)
        return ("span", "chord", "shear") if self.variant is Variant.PLATE_I else ("span", "chord")

    def split(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return q[..., :self.n_c], q[..., self.n_c:]

    def blocks(self, z: np.ndarray) -> dict[str, np.ndarray]:
        """Unpack z (or a batch of z along the leading axis) into named nodal arrays."""
        out, start = {}, 0
        lead = z.shape[:-1]
        for (name, shape), size in zip(self._blocks, self._sizes):
            out[name] = z[..., start:start + size].reshape(*lead, *shape)
            start += size
        return out

    def pack(self, blocks: dict[str, np.ndarray], lead: tuple[int, ...] = ()) -> np.ndarray:
        parts = [blocks[name].reshape(*lead, size) for (name, _), size in zip(self._blocks, self._sizes)]
        return np.concatenate(parts, axis=-1)

    # ==================== Nodal operators ====================

    @cached_property
    def _powers(self) -> dict[str, list[np.ndarray]]:
        out = {}
        for axis in ("x", "y") if self.grid.is_plate else ("x",):
            D = self.grid._axis(axis).differentiation
            mats = [np.eye(D.shape[0])]
            for _ in range(4):
                mats.append(D @ mats[-1])
            out[axis] = mats
        return out

    def _ax(self, M: np.ndarray, f: np.ndarray) -> np.ndarray:
        return M @ f if self.grid.is_plate else f @ M.T

    def _ay(self, M: np.ndarray, f: np.ndarray) -> np.ndarray:
        return f @ M.T

    def _ax_adj(self, M: np.ndarray, g: np.ndarray) -> np.ndarray:
        return M.T @ g if self.grid.is_plate else g @ M

    def _ay_adj(self, M: np.ndarray, g: np.ndarray) -> np.ndarray:
        return g @ M

    def _mean_free(self, f: np.ndarray) -> np.ndarray:
        y = self.grid.y
        return f - (f @ y.weights)[..., None] / y.length

    def _mean_free_adj(self, g: np.ndarray) -> np.ndarray:
        y = self.grid.y
        return g - np.sum(g, axis=-1)[..., None] * y.weights / y.length

    def inplane_sample(self, blocks: dict[str, np.ndarray], name: str, a: int, b: int) -> np.ndarray:
        """d^a/dx^a d^b/dy^b of u or v from nodal unknowns; batched over a leading axis."""
        Dx = self._powers["x"]
        Jx = self.grid.x.cumulative
        if name == "u":
            s1 = blocks["s"] if self.model.is_beam else blocks["s1"]
            base = self._ax(Dx[a - 1], s1) if a >= 1 else self._ax(Jx, s1)
            return base if b == 0 else self._ay(self._powers["y"][b], base)

        Dy, Jy = self._powers["y"], self.grid.y.cumulative
        s2 = blocks["s2"]
        if b >= 1:
            out = self._ay(Dy[b - 1], self._ax(Dx[a], s2))
        else:
            out = self._ay(Jy, self._ax(Dx[a], s2))
            if self.variant is Variant.PLATE_II:
                out = self._mean_free(out)
        if "p" in blocks and b == 0:
            p = blocks["p"]
            trace = p @ (Dx[a - 1] if a >= 1 else Jx).T
            out = out + trace[..., None]
        return out

    def inplane_adjoint(self, G: np.ndarray, name: str, a: int, b: int) -> dict[str, np.ndarray]:
        """Transpose of inplane_sample acting on a grid array (or batch)."""
        Dx = self._powers["x"]
        Jx = self.grid.x.cumulative
        if name == "u":
            g = G if b == 0 else self._ay_adj(self._powers["y"][b], G)
            g = self._ax_adj(Dx[a - 1], g) if a >= 1 else self._ax_adj(Jx, g)
            return {"s" if self.model.is_beam else "s1": g}

        Dy, Jy = self._powers["y"], self.grid.y.cumulative
        out = {}
        if b >= 1:
            out["s2"] = self._ax_adj(Dx[a], self._ay_adj(Dy[b - 1], G))
        else:
            g = self._mean_free_adj(G) if self.variant is Variant.PLATE_II else G
            out["s2"] = self._ax_adj(Dx[a], self._ay_adj(Jy, g))
        if "p" in self._block_names and b == 0:
            out["p"] = np.sum(G, axis=-1) @ (Dx[a - 1] if a >= 1 else Jx)
        return out

    @cached_property
    def _block_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self._blocks)

    def _adjoint_to_z(self, parts: dict[str, np.ndarray], lead: tuple[int, ...] = ()) -> np.ndarray:
        full = {name: np.zeros((*lead, *shape)) for name, shape in self._blocks}
        for name, value in parts.items():
            full[name] = full[name] + value
        return self.pack(full, lead)

    # ==================== Constraints ====================

    def _w_first(self, c: np.ndarray) -> tuple[np.ndarray, Optional[np.ndarray]]:
        w_x = self.basis.w_samples(c, 1, 0)
        w_y = None if self.model.is_beam else self.basis.w_samples(c, 0, 1)
        return w_x, w_y

    def _line_sum(self, f: np.ndarray) -> np.ndarray:
        """sum_j W_ij f_ij, batched."""
        return np.sum(self.grid.weights * f, axis=-1)

    def constraint_offset(self, c: np.ndarray) -> np.ndarray:
        """g(c, z_D = 0)."""
        W = self.grid.weights
        w_x, w_y = self._w_first(c)
        if self.model.is_beam:
            return (-W * self._span[0](w_x)).ravel()
        parts = [(W * 0.5 * w_x**2).ravel(), (W * 0.5 * w_y**2).ravel()]
        if self.variant is Variant.PLATE_I:
            parts.append(self._line_sum(w_x * w_y))
        return np.concatenate(parts)

    def constraint_dependent_apply(self, zd: np.ndarray) -> np.ndarray:
        """G_D z_D, batched."""
        lead = zd.shape[:-1]
        W = self.grid.weights
        if self.model.is_beam:
            return zd * self._w_flat
        blocks = self.blocks(np.concatenate([zd, np.zeros((*lead, self.n_free))], axis=-1))
        parts = [(W * blocks["s1"]).reshape(*lead, -1), (W * blocks["s2"]).reshape(*lead, -1)]
        if self.variant is Variant.PLATE_I:
            shear = self.inplane_sample(blocks, "u", 0, 1) + self.inplane_sample(blocks, "v", 1, 0)
            parts.append(self._line_sum(shear))
        return np.concatenate(parts, axis=-1)

    def constraints(self, q: np.ndarray) -> np.ndarray:
        c, z = self.split(q)
        return self.constraint_offset(c) + self.constraint_dependent_apply(z[..., :self.n_dep])

    def solve_dependent(self, r: np.ndarray) -> np.ndarray:
        """G_D^{-1} r, batched over a leading axis."""
        if self.model.is_beam:
            return r / self._w_flat
        nq = self._w_flat.size
        z1, z2 = r[..., :nq] / self._w_flat, r[..., nq:2 * nq] / self._w_flat
        if self.variant is not Variant.PLATE_I:
            return np.concatenate([z1, z2], axis=-1)
        lead = r.shape[:-1]
        partial = np.concatenate([z1, z2, np.zeros((*lead, self.grid.shape[0]))], axis=-1)
        coupled = self.constraint_dependent_apply(partial)[..., 2 * nq:]
        z3 = (r[..., 2 * nq:] - coupled) / self._line_weight
        return np.concatenate([z1, z2, z3], axis=-1)

    def solve_dependent_transpose(self, r: np.ndarray) -> np.ndarray:
        """G_D^{-T} r, batched over a leading axis."""
        if self.model.is_beam:
            return r / self._w_flat
        nq = self._w_flat.size
        if self.variant is not Variant.PLATE_I:
            return np.concatenate([r[..., :nq] / self._w_flat, r[..., nq:2 * nq] / self._w_flat], axis=-1)
        mu3 = r[..., 2 * nq:] / self._line_weight
        back = self._shear_adjoint(mu3)
        mu1 = (r[..., :nq] - back["s1"].reshape(*mu3.shape[:-1], -1)) / self._w_flat
        mu2 = (r[..., nq:2 * nq] - back["s2"].reshape(*mu3.shape[:-1], -1)) / self._w_flat
        return np.concatenate([mu1, mu2, mu3], axis=-1)

    def _shear_adjoint(self, mu3: np.ndarray) -> dict[str, np.ndarray]:
        """Transpose of (s1, s2) -> sum_j W_ij (u_y + v_x)_ij, excluding the p part."""
        G = self.grid.weights * mu3[..., :, None]
        return {
            "s1": self.inplane_adjoint(G, "u", 0, 1)["s1"],
            "s2": self.inplane_adjoint(G, "v", 1, 0)["s2"],
        }

    def constraint_c_jacobian(self, c: np.ndarray) -> np.ndarray:
        """Rows are dg/dc_k, shape (n_c, m)."""
        W = self.grid.weights
        w_x, w_y = self._w_first(c)
        phi_x = self.basis.mode_samples(1, 0)
        if self.model.is_beam:
            return (-W * self._span[1](w_x) * phi_x).reshape(self.n_c, -1)
        phi_y = self.basis.mode_samples(0, 1)
        parts = [(W * w_x * phi_x).reshape(self.n_c, -1), (W * w_y * phi_y).reshape(self.n_c, -1)]
        if self.variant is Variant.PLATE_I:
            parts.append(self._line_sum(w_y * phi_x + w_x * phi_y))
        return np.concatenate(parts, axis=-1)

    def constraint_c_curvature(self, c: np.ndarray, cdot: np.ndarray) -> np.ndarray:
        """d^2 g / dc^2 [cdot, cdot]."""
        W = self.grid.weights
        w_x, w_y = self._w_first(c)
        w_xt, w_yt = self._w_first(cdot)
        if self.model.is_beam:
            return (-W * self._span[2](w_x) * w_xt**2).ravel()
        parts = [(W * w_xt**2).ravel(), (W * w_yt**2).ravel()]
        if self.variant is Variant.PLATE_I:
            parts.append(self._line_sum(2.0 * w_xt * w_yt))
        return np.concatenate(parts)

    def constraint_jacobian_apply(self, q: np.ndarray, qdot: np.ndarray) -> np.ndarray:
        c, _ = self.split(q)
        cdot, zdot = self.split(qdot)
        return cdot @ self.constraint_c_jacobian(c) + self.constraint_dependent_apply(zdot[..., :self.n_dep])

    def constraint_transpose_apply(self, q: np.ndarray, mu: np.ndarray) -> np.ndarray:
        """G^T mu."""
        c, _ = self.split(q)
        grad_c = self.constraint_c_jacobian(c) @ mu
        W = self.grid.weights
        if self.model.is_beam:
            grad_z = mu * self._w_flat
        else:
            nq = self._w_flat.size
            g1, g2 = mu[:nq] * self._w_flat, mu[nq:2 * nq] * self._w_flat
            if self.variant is Variant.PLATE_I:
                mu3 = mu[2 * nq:]
                back = self._shear_adjoint(mu3)
                g1 = g1 + back["s1"].ravel()
                g2 = g2 + back["s2"].ravel()
                grad_z = np.concatenate([g1, g2, mu3 * self._line_weight])
            else:
                grad_z = np.concatenate([g1, g2, np.zeros(self.n_free)])
        return np.concatenate([grad_c, grad_z])

    # ==================== Slaved coordinates ====================

    def dependent_of(self, c: np.ndarray) -> np.ndarray:
        """z_D(c) solving g = 0."""
        return -self.solve_dependent(self.constraint_offset(c))

    def dependent_jacobian(self, c: np.ndarray) -> np.ndarray:
        """dz_D/dc, shape (n_c, n_dep) (row k is the sensitivity to c_k)."""
        return -self.solve_dependent(self.constraint_c_jacobian(c))

    def dependent_curvature(self, c: np.ndarray, cdot: np.ndarray) -> np.ndarray:
        return -self.solve_dependent(self.constraint_c_curvature(c, cdot))

    def full_coordinates(self, c: np.ndarray, free: Optional[np.ndarray] = None) -> np.ndarray:
        free = np.zeros(self.n_free) if free is None else free
        return np.concatenate([c, self.dependent_of(c), free])

    def null_space(self, q: np.ndarray) -> np.ndarray:
        """Columns span ker G at q; independent coordinates are c then the free z."""
        c, _ = self.split(q)
        Z = np.zeros((self.n, self.n_c + self.n_free))
        Z[:self.n_c, :self.n_c] = np.eye(self.n_c)
        Z[self.n_c:self.n_c + self.n_dep, :self.n_c] = self.dependent_jacobian(c).T
        if self.n_free:
            Z[self.n_c + self.n_dep:, self.n_c:] = np.eye(self.n_free)
        return Z

    # ==================== Mass, energies ====================

    def inplane_values(self, z: np.ndarray) -> dict[str, np.ndarray]:
        blocks = self.blocks(z)
        out = {"u": self.inplane_sample(blocks, "u", 0, 0)}
        if self.grid.is_plate:
            out["v"] = self.inplane_sample(blocks, "v", 0, 0)
        return out

    def mass_z_apply(self, zdot: np.ndarray) -> np.ndarray:
        """In-plane mass M_z applied to z-velocities, batched."""
        lead = zdot.shape[:-1]
        if not self.inplane_inertia:
            return np.zeros_like(zdot)
        W = self.grid.weights
        parts: dict[str, np.ndarray] = {}
        for name, values in self.inplane_values(zdot).items():
            for block, value in self.inplane_adjoint(W * values, name, 0, 0).items():
                parts[block] = parts.get(block, 0.0) + value
        return self._adjoint_to_z(parts, lead)

    def kinetic(self, q: np.ndarray, qdot: np.ndarray) -> float:
        cdot, zdot = self.split(qdot)
        return 0.5 * float(cdot @ cdot) + 0.5 * float(zdot @ self.mass_z_apply(zdot))

    def field_state(self, q: np.ndarray, qdot: Optional[np.ndarray] = None, qddot: Optional[np.ndarray] = None,
                    max_order: int = 4) -> FieldState:
        """w and in-plane samples; in-plane time derivatives carry values and first derivatives."""
        c, z = self.split(q)
        cdot = None if qdot is None else self.split(qdot)[0]
        cddot = None if qddot is None else self.split(qddot)[0]
        samples = self.basis.w_sample_dict(c, cdot, cddot, max_order)
        names = ("u",) if self.model.is_beam else ("u", "v")
        orders = [(a, b) for (a, b) in self.basis.orders if a + b <= max_order]
        blocks = self.blocks(z)
        for name in names:
            for a, b in orders:
                samples[(name, a, b, 0)] = self.inplane_sample(blocks, name, a, b)
        for dt, vec in ((1, qdot), (2, qddot)):
            if vec is None:
                continue
            vblocks = self.blocks(self.split(vec)[1])
            for name in names:
                for a, b in [(0, 0), (1, 0), (0, 1)] if self.grid.is_plate else [(0, 0), (1, 0)]:
                    samples[(name, a, b, dt)] = self.inplane_sample(vblocks, name, a, b)
        return FieldState(self.grid, samples)

    def potential(self, q: np.ndarray) -> float:
        state = self.field_state(q, max_order=2)
        return float(sum(self.grid.integrate(d) for d in energy_density(state, self.model, self.energy_form).values()))

    def potential_gradient(self, q: np.ndarray) -> np.ndarray:
        state = self.field_state(q, max_order=2)
        W = self.grid.weights
        grad_c = np.zeros(self.n_c)
        parts: dict[str, np.ndarray] = {}
        for (name, a, b), partial in density_partials(state, self.model, self.energy_form).items():
            if name == "w":
                grad_c += self.basis.w_adjoint(W * partial, a, b)
            else:
                for block, value in self.inplane_adjoint(W * partial, name, a, b).items():
                    parts[block] = parts.get(block, 0.0) + value
        return np.concatenate([grad_c, self._adjoint_to_z(parts)])

    def span_residual(self, q: np.ndarray) -> dict[str, np.ndarray]:
        """Pointwise constraint residuals of the discrete fields."""
        c, z = self.split(q)
        w_x, w_y = self._w_first(c)
        blocks = self.blocks(z)
        if self.model.is_beam:
            return {"span": blocks["s"] - self._span[0](w_x)}
        out = {"span": blocks["s1"] + 0.5 * w_x**2, "chord": blocks["s2"] + 0.5 * w_y**2}
        if self.variant is Variant.PLATE_I:
            out["shear"] = (self.inplane_sample(blocks, "u", 0, 1) + self.inplane_sample(blocks, "v", 1, 0)
                            + w_x * w_y)
        return out

    @property
    def flavor(self) -> ConstraintFlavor:
        return beam_flavor(self.variant) if self.model.is_beam else ConstraintFlavor.QUAD_PLATE

    # ==================== Constrained dynamics ====================

    def acceleration(self, c: np.ndarray, cdot: np.ndarray, force: Optional[np.ndarray] = None) -> Acceleration:
        """Modal acceleration on the constraint manifold, with slaved z and multipliers.

        Solves (I + Zc M Zc^T) a = -(grad_c + Zc grad_z) - Zc M z_hh; the multipliers satisfy
        G_D^T mu = M a_z + grad_z.
        """
        if self.n_free:
            raise ValueError("Constrained dynamics needs every in-plane unknown slaved to w")
        Zc = self.dependent_jacobian(c)
        z = self.dependent_of(c)
        q = np.concatenate([c, z])
        grad = self.potential_gradient(q)
        grad_c, grad_z = grad[:self.n_c], grad[self.n_c:]
        z_hh = self.dependent_curvature(c, cdot)

        MZt = self.mass_z_apply(Zc)
        A = np.eye(self.n_c) + Zc @ MZt.T
        rhs = -grad_c - Zc @ grad_z - Zc @ self.mass_z_apply(z_hh)
        if force is not None:
            rhs = rhs + force
        a_c = linalg.solve(A, rhs, assume_a="pos")
        a_z = a_c @ Zc + z_hh
        mu = self.solve_dependent_transpose(self.mass_z_apply(a_z) + grad_z)
        return Acceleration(a_c=a_c, z=z, zdot=cdot @ Zc, a_z=a_z, multipliers=mu)

    def multiplier_fields(self, mu: np.ndarray) -> dict[str, np.ndarray]:
        """Nodal multiplier vector as grid fields named like the residual evaluators expect."""
        shape = self.grid.shape
        if self.model.is_beam:
            return {"lambda": mu.reshape(shape)}
        nq = self._w_flat.size
        out = {"lambda1": mu[:nq].reshape(shape), "lambda2": mu[nq:2 * nq].reshape(shape)}
        if self.variant is Variant.PLATE_I:
            out["lambda3"] = np.repeat(mu[2 * nq:, None], shape[1], axis=1)
        return out

    def project(self, q: np.ndarray) -> np.ndarray:
        """Replace the dependent unknowns by their slaved values; exact since g is linear in z_D."""
        c, z = self.split(q)
        return np.concatenate([c, self.dependent_of(c), z[self.n_dep:]])


@dataclass(frozen=True)
class Acceleration:
    a_c: np.ndarray
    z: np.ndarray
    zdot: np.ndarray
    a_z: np.ndarray
    multipliers: np.ndarray
