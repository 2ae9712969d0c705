"""Euler-Bernoulli mode bases, Gauss-Legendre grids and nodal operators."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Literal, Optional, Sequence

import numpy as np
from numpy.polynomial import legendre
from scipy.optimize import brentq

from config import QUADRATURE_FACTOR, QUADRATURE_PAD, ROOT_TOLERANCE
from errors import InvalidParameter
from models import FieldState, ModelSpec

logger = logging.getLogger(__name__)

BasisKind = Literal["clamped-free", "free-free"]
Edge = Literal["E", "W", "S", "N"]

MAX_DERIVATIVE = 4


# ==================== Quadrature ====================

def quadrature_rule(n: int, interval: tuple[float, float] = (0.0, 1.0)) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on an interval (exact to degree 2n-1)."""
    if n < 2:
        raise InvalidParameter(f"quadrature_rule needs n >= 2, got {n}")
    a, b = interval
    t, w = legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (t + 1.0), half * w


class QuadratureGrid1D:
    """Gauss-Legendre nodes on [a, b] with nodal differentiation and integration matrices.

    All operators act on nodal samples through the interpolating Legendre series.
    """

    def __init__(self, n: int, a: float, b: float):
        self.n, self.a, self.b = n, float(a), float(b)
        self._t, self._w_ref = legendre.leggauss(n)
        self.nodes, self.weights = quadrature_rule(n, (a, b))
        # V is orthogonal under the Gauss weights, so its inverse is explicit
        self._vander = legendre.legvander(self._t, n - 1)
        self._to_coef = ((2.0 * np.arange(n) + 1.0) / 2.0)[:, None] * (self._vander.T * self._w_ref[None, :])

    @property
    def length(self) -> float:
        return self.b - self.a

    def _reference(self, points) -> np.ndarray:
        p = np.atleast_1d(np.asarray(points, dtype=float))
        return 2.0 * (p - self.a) / self.length - 1.0

    @cached_property
    def differentiation(self) -> np.ndarray:
        d_coef = legendre.legder(np.eye(self.n), axis=0)
        return legendre.legvander(self._t, self.n - 2) @ d_coef @ self._to_coef * (2.0 / self.length)

    @cached_property
    def cumulative(self) -> np.ndarray:
        """J f approximates the integral from a to each node."""
        return self.cumulative_matrix(self.nodes)

    @cached_property
    def reverse(self) -> np.ndarray:
        """R f approximates the integral from each node to b."""
        return self.reverse_matrix(self.nodes)

    def cumulative_matrix(self, points) -> np.ndarray:
        i_coef = legendre.legint(np.eye(self.n), lbnd=-1.0, axis=0)
        return legendre.legvander(self._reference(points), self.n) @ i_coef @ self._to_coef * (self.length / 2.0)

    def reverse_matrix(self, points) -> np.ndarray:
        """Rows vanish identically at x = b."""
        return self.cumulative_matrix([self.b]) - self.cumulative_matrix(points)

    def interpolation_matrix(self, points) -> np.ndarray:
        return legendre.legvander(self._reference(points), self.n - 1) @ self._to_coef


# ==================== Characteristic roots ====================

def _polish(f, df, beta: float) -> float:
    for _ in range(3):
        step = f(beta) / df(beta)
        beta -= step
        if abs(step) <= 4 * np.finfo(float).eps * beta:
            break
    return beta


def clamped_free_roots(n: int) -> list[float]:
    """First n roots of 1 + cos(b) cosh(b) = 0.

    Solved in the scaled form cos(b) + 1/cosh(b) = 0 so bracketing stays well conditioned.
    The k-th root lies in ((k - 1) pi, k pi), where f changes sign.
    """
    if n < 1:
        raise InvalidParameter(f"clamped_free_roots needs n >= 1, got {n}")
    f = lambda b: math.cos(b) + 1.0 / math.cosh(b)
    df = lambda b: -math.sin(b) - math.tanh(b) / math.cosh(b)
    roots = []
    for k in range(1, n + 1):
        beta = brentq(f, (k - 1) * math.pi, k * math.pi, xtol=ROOT_TOLERANCE,
                      rtol=4 * np.finfo(float).eps, maxiter=200)
        roots.append(_polish(f, df, beta))
    return roots


def free_free_roots(n: int) -> list[float]:
    """First n nonzero roots of 1 - cos(b) cosh(b) = 0."""
    if n < 0:
        raise InvalidParameter(f"free_free_roots needs n >= 0, got {n}")
    f = lambda b: math.cos(b) - 1.0 / math.cosh(b)
    df = lambda b: -math.sin(b) + math.tanh(b) / math.cosh(b)
    roots = []
    for k in range(1, n + 1):
        beta = brentq(f, k * math.pi, (k + 1) * math.pi, xtol=ROOT_TOLERANCE, rtol=4 * np.finfo(float).eps, maxiter=200)
        roots.append(_polish(f, df, beta))
    return roots


def _elastic_mode(kind: BasisKind, beta: float, z: np.ndarray, d: int) -> np.ndarray:
    """d-th z-derivative of the unnormalized mode in a cancellation-free form.

    Growing and decaying exponentials are split so nothing of size cosh(beta) is formed.
    """
    e = math.exp(-beta)
    s, c = math.sin(beta), math.cos(beta)
    shifted_cos = np.cos(z + d * math.pi / 2)
    shifted_sin = np.sin(z + d * math.pi / 2)
    if kind == "clamped-free":
        denom = 1.0 - e * e + 2.0 * s * e
        sigma = (1.0 + e * e + 2.0 * c * e) / denom
        grow = np.exp(z - beta) * (s - c - e) / denom
        decay = 0.5 * np.exp(-z) * (1.0 + sigma)
        return grow + (-1) ** d * decay - shifted_cos + sigma * shifted_sin
    denom = 1.0 - e * e - 2.0 * s * e
    sigma = (1.0 + e * e - 2.0 * c * e) / denom
    grow = np.exp(z - beta) * (c - s - e) / denom
    decay = 0.5 * np.exp(-z) * (1.0 + sigma)
    return grow + (-1) ** d * decay + shifted_cos - sigma * shifted_sin


# ==================== Mode bases ====================

@dataclass(frozen=True, eq=False)
class ModeBasis:
    """1D orthonormal mode basis sampled on its own Gauss grid.

    Free-free bases start with the orthonormalized rigid functions 1 and x before the
    elastic modes; their roots are reported as 0.
    """
    kind: BasisKind
    length: float
    n_modes: int
    roots: tuple[float, ...]
    grid: QuadratureGrid1D
    norms: tuple[float, ...]
    samples: tuple[np.ndarray, ...]

    @classmethod
    def build(cls, kind: BasisKind, length: float, n_modes: int, n_points: Optional[int] = None) -> "ModeBasis":
        if n_modes < 1:
            raise InvalidParameter(f"Mode count must be >= 1, got {n_modes}")
        if length <= 0:
            raise InvalidParameter(f"Basis length must be positive, got {length}")
        if kind == "clamped-free":
            roots = tuple(clamped_free_roots(n_modes))
        elif kind == "free-free":
            roots = tuple([0.0, 0.0][:n_modes] + free_free_roots(max(n_modes - 2, 0)))
        else:
            raise InvalidParameter(f"Unknown basis kind {kind!r}")

        n_points = n_points or QUADRATURE_FACTOR * n_modes + QUADRATURE_PAD
        grid = QuadratureGrid1D(n_points, 0.0, length)

        # Normalize on a dense rule independent of the working grid
        fine_nodes, fine_weights = quadrature_rule(64 + 16 * n_modes, (0.0, length))
        norms = []
        for k in range(n_modes):
            raw = _raw_mode(kind, roots, k, length, fine_nodes, 0)
            norms.append(math.sqrt(float(np.sum(fine_weights * raw * raw))))

        basis = cls(kind, float(length), n_modes, roots, grid, tuple(norms), ())
        samples = tuple(basis.matrix(d, grid.nodes) for d in range(MAX_DERIVATIVE + 1))
        for block in samples:
            block.setflags(write=False)
        object.__setattr__(basis, "samples", samples)
        logger.debug(f"Built {kind} basis: N={n_modes}, L={length}, {n_points} Gauss points")
        return basis

    def matrix(self, d: int, points) -> np.ndarray:
        """Samples of every mode's d-th derivative, shape (len(points), N)."""
        points = np.atleast_1d(np.asarray(points, dtype=float))
        return np.column_stack([
            _raw_mode(self.kind, self.roots, k, self.length, points, d) / self.norms[k]
            for k in range(self.n_modes)
        ])


def _raw_mode(kind: BasisKind, roots: Sequence[float], k: int, length: float, x: np.ndarray, d: int) -> np.ndarray:
    if kind == "free-free" and k < 2:
        if k == 0:
            return np.ones_like(x) if d == 0 else np.zeros_like(x)
        if d == 0:
            return 2.0 * x / length - 1.0
        return np.full_like(x, 2.0 / length) if d == 1 else np.zeros_like(x)
    beta = roots[k]
    return _elastic_mode(kind, beta, beta * x / length, d) * (beta / length) ** d


def eval_basis(basis: ModeBasis, k: int, d: int, points) -> np.ndarray:
    """Values of the k-th mode's d-th derivative at points in [0, L]."""
    if not 0 <= k < basis.n_modes:
        raise InvalidParameter(f"Mode index {k} outside [0, {basis.n_modes})")
    if not 0 <= d <= MAX_DERIVATIVE:
        raise InvalidParameter(f"Derivative order {d} outside [0, {MAX_DERIVATIVE}]")
    points = np.atleast_1d(np.asarray(points, dtype=float))
    if np.any(points < 0.0) or np.any(points > basis.length):
        raise InvalidParameter(f"Evaluation points must lie in [0, {basis.length}]")
    return basis.matrix(d, points)[:, k]


# ==================== Sample grids ====================

class Grid:
    """Tensor Gauss grid on [0, Lx] or [0, Lx] x [0, Ly]; axis 0 is x."""

    def __init__(self, x: QuadratureGrid1D, y: Optional[QuadratureGrid1D] = None):
        self.x, self.y = x, y

    @property
    def is_plate(self) -> bool:
        return self.y is not None

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.x.n,) if self.y is None else (self.x.n, self.y.n)

    @cached_property
    def weights(self) -> np.ndarray:
        return self.x.weights if self.y is None else np.outer(self.x.weights, self.y.weights)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, ...]:
        if self.y is None:
            return (self.x.nodes,)
        return tuple(np.meshgrid(self.x.nodes, self.y.nodes, indexing="ij"))

    def _axis(self, axis: str) -> QuadratureGrid1D:
        if axis == "x":
            return self.x
        if self.y is None:
            raise ValueError("Beam grids have no y axis")
        return self.y

    def _apply(self, matrix: np.ndarray, f: np.ndarray, axis: str) -> np.ndarray:
        return matrix @ f if axis == "x" else f @ matrix.T

    def integrate(self, f: np.ndarray) -> float:
        return float(np.sum(self.weights * f))

    def diff(self, f: np.ndarray, axis: str = "x", order: int = 1) -> np.ndarray:
        for _ in range(order):
            f = self._apply(self._axis(axis).differentiation, f, axis)
        return f

    def cumulative(self, f: np.ndarray, axis: str = "x") -> np.ndarray:
        return self._apply(self._axis(axis).cumulative, f, axis)

    def reverse(self, f: np.ndarray, axis: str = "x") -> np.ndarray:
        return self._apply(self._axis(axis).reverse, f, axis)

    def line_integral(self, f: np.ndarray, axis: str = "x") -> np.ndarray:
        """Integral over the full span along one axis."""
        return self.x.weights @ f if axis == "x" else f @ self._axis("y").weights

    def mean(self, f: np.ndarray, axis: str = "y") -> np.ndarray:
        return self.line_integral(f, axis) / self._axis(axis).length

    def trace(self, f: np.ndarray, edge: Edge) -> np.ndarray:
        """Interpolated boundary trace; beams only have E (x = L) and W (x = 0)."""
        if edge in ("E", "W"):
            point = self.x.b if edge == "E" else self.x.a
            row = self.x.interpolation_matrix([point])
            return (row @ f)[0] if self.y is not None else row @ f
        y = self._axis("y")
        row = y.interpolation_matrix([y.b if edge == "N" else y.a])
        return (f @ row.T)[:, 0]

    def interpolate(self, f: np.ndarray, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.y is None:
            return self.x.interpolation_matrix(points.reshape(-1)) @ f
        points = points.reshape(-1, 2)
        ix = self.x.interpolation_matrix(points[:, 0])
        iy = self.y.interpolation_matrix(points[:, 1])
        return np.einsum("pi,ij,pj->p", ix, f, iy)


class Basis:
    """Transverse Ritz basis for a model: clamped-free in x, free-free in y for plates.

    Plate coefficients are stored row-major as c[a * Ny + b] for mode a in x and b in y.
    """

    def __init__(self, x: ModeBasis, y: Optional[ModeBasis] = None):
        self.x, self.y = x, y
        self.grid = Grid(x.grid, None if y is None else y.grid)

    @property
    def is_plate(self) -> bool:
        return self.y is not None

    @property
    def n_coefficients(self) -> int:
        return self.x.n_modes * (1 if self.y is None else self.y.n_modes)

    @property
    def orders(self) -> list[tuple[int, int]]:
        if self.y is None:
            return [(dx, 0) for dx in range(MAX_DERIVATIVE + 1)]
        return [(dx, dy) for dx in range(MAX_DERIVATIVE + 1) for dy in range(MAX_DERIVATIVE + 1 - dx)]

    def _coef(self, c: np.ndarray) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        return c if self.y is None else c.reshape(self.x.n_modes, self.y.n_modes)

    def w_samples(self, c: np.ndarray, dx: int = 0, dy: int = 0) -> np.ndarray:
        if self.y is None:
            return self.x.samples[dx] @ c
        return self.x.samples[dx] @ self._coef(c) @ self.y.samples[dy].T

    def w_adjoint(self, g: np.ndarray, dx: int = 0, dy: int = 0) -> np.ndarray:
        """Transpose of w_samples: maps a grid array to coefficient space."""
        if self.y is None:
            return self.x.samples[dx].T @ g
        return (self.x.samples[dx].T @ g @ self.y.samples[dy]).ravel()

    @cached_property
    def _stacked(self) -> dict[tuple[int, int], np.ndarray]:
        """Every basis function's derivative samples, shape (n_coefficients, *grid.shape)."""
        out = {}
        for dx, dy in self.orders:
            if self.y is None:
                out[(dx, dy)] = np.ascontiguousarray(self.x.samples[dx].T)
            else:
                out[(dx, dy)] = np.einsum("ia,jb->abij", self.x.samples[dx], self.y.samples[dy]).reshape(
                    self.n_coefficients, *self.grid.shape
                )
        return out

    def mode_samples(self, dx: int = 0, dy: int = 0) -> np.ndarray:
        return self._stacked[(dx, dy)]

    def w_sample_dict(self, c: np.ndarray, cdot: Optional[np.ndarray] = None, cddot: Optional[np.ndarray] = None,
                      max_order: int = MAX_DERIVATIVE) -> dict:
        samples = {}
        for dt, coef in enumerate((c, cdot, cddot)):
            if coef is None:
                continue
            for dx, dy in self.orders:
                if dx + dy <= max_order:
                    samples[("w", dx, dy, dt)] = self.w_samples(coef, dx, dy)
        return samples

    def field_state(self, c: np.ndarray, cdot: Optional[np.ndarray] = None, cddot: Optional[np.ndarray] = None,
                    max_order: int = MAX_DERIVATIVE) -> FieldState:
        """w and its space/time derivative samples from modal coefficients."""
        return FieldState(self.grid, self.w_sample_dict(c, cdot, cddot, max_order))

    def evaluate(self, c: np.ndarray, points, dx: int = 0, dy: int = 0) -> np.ndarray:
        """w derivative at arbitrary points (x for beams, (x, y) pairs for plates)."""
        points = np.asarray(points, dtype=float)
        if self.y is None:
            return self.x.matrix(dx, points.reshape(-1)) @ c
        points = points.reshape(-1, 2)
        px = self.x.matrix(dx, points[:, 0])
        py = self.y.matrix(dy, points[:, 1])
        return np.einsum("pa,ab,pb->p", px, self._coef(c), py)

    def load_vector(self, kind: str) -> np.ndarray:
        """Generalized force per unit load for tip, edge or pressure loading."""
        if kind == "pressure":
            ix = self.x.grid.weights @ self.x.samples[0]
            if self.y is None:
                return ix
            return np.outer(ix, self.y.grid.weights @ self.y.samples[0]).ravel()
        tip = self.x.matrix(0, [self.x.length])[0]
        if kind == "tip" and self.y is None:
            return tip
        if kind == "edge" and self.y is not None:
            return np.outer(tip, self.y.grid.weights @ self.y.samples[0]).ravel()
        raise InvalidParameter(f"Load kind {kind!r} does not apply to a {'plate' if self.y is not None else 'beam'}")


def make_basis(model: ModelSpec, modes_x: int, modes_y: Optional[int] = None,
               quadrature_factor: int = QUADRATURE_FACTOR, quadrature_pad: int = QUADRATURE_PAD) -> Basis:
    """Tensor Ritz basis matched to the model geometry."""
    if model.is_beam:
        n = quadrature_factor * modes_x + quadrature_pad
        return Basis(ModeBasis.build("clamped-free", model.params.length, modes_x, n))
    if modes_y is None:
        raise InvalidParameter("Plate bases need modes_y")
    x = ModeBasis.build("clamped-free", model.params.length_x, modes_x, quadrature_factor * modes_x + quadrature_pad)
    y = ModeBasis.build("free-free", model.params.length_y, modes_y, quadrature_factor * modes_y + quadrature_pad)
    return Basis(x, y)
