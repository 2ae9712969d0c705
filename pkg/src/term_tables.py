"""Monomial tables for the Model III equations and boundary conditions.

Each table is a list of groups; a group has a named prefactor and monomials whose
coefficients are linear in nu ("4-2nu", "-1-3nu", "1-nu"). Monomials are written as
products of derivative names such as "w_x w_xy w_xxy"; a name's x and y letters give the
derivative orders, so "w_yyx" and "w_xyy" are the same factor. docs/model_iii_terms.md
lists the same rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from models import FieldState

PREFACTORS = {
    "1": lambda D, h, nu: 1.0,
    "-D": lambda D, h, nu: -D,
    "-2D": lambda D, h, nu: -2.0 * D,
    "h^2/6": lambda D, h, nu: h**2 / 6.0,
    "6D/h^2(1-nu)": lambda D, h, nu: 6.0 * D / h**2 * (1.0 - nu),
    "-12D/h^2(1-nu)": lambda D, h, nu: -12.0 * D / h**2 * (1.0 - nu),
}


def parse_factor(text: str) -> tuple[str, int, int]:
    """'w_xxy' -> ('w', 2, 1)."""
    name, _, orders = text.partition("_")
    if name not in ("u", "v", "w") or set(orders) - {"x", "y"}:
        raise ValueError(f"Bad factor {text!r}")
    return name, orders.count("x"), orders.count("y")


def parse_coefficient(text: str) -> tuple[float, float]:
    """'4-2nu' -> (4, -2); the value is a + b * nu."""
    if "nu" not in text:
        return float(text), 0.0
    if not text.endswith("nu"):
        raise ValueError(f"Bad coefficient {text!r}")
    body = text[:-2]
    cut = max(body.rfind("+"), body.rfind("-"))
    if cut <= 0:
        constant, nu_part = "0", body
    else:
        constant, nu_part = body[:cut], body[cut:]
    nu_coef = {"": 1.0, "+": 1.0, "-": -1.0}.get(nu_part)
    return float(constant), float(nu_part) if nu_coef is None else nu_coef


@dataclass(frozen=True)
class Term:
    coefficient: str
    monomial: str

    @cached_property
    def factors(self) -> tuple[tuple[str, int, int], ...]:
        return tuple(parse_factor(f) for f in self.monomial.split())

    def value(self, nu: float) -> float:
        a, b = parse_coefficient(self.coefficient)
        return a + b * nu


@dataclass(frozen=True)
class TermGroup:
    prefactor: str
    terms: tuple[Term, ...]


@dataclass(frozen=True)
class TermTable:
    name: str
    groups: tuple[TermGroup, ...]

    @property
    def terms(self) -> list[tuple[str, Term]]:
        return [(g.prefactor, t) for g in self.groups for t in g.terms]

    def required(self) -> set[tuple[str, int, int]]:
        return {f for _, t in self.terms for f in t.factors}

    def evaluate(self, state: FieldState, D: float, h: float, nu: float) -> np.ndarray:
        total = np.zeros(state.grid.shape)
        for group in self.groups:
            scale = PREFACTORS[group.prefactor](D, h, nu)
            for term in group.terms:
                product = term.value(nu) * scale
                for name, dx, dy in term.factors:
                    product = product * state.get(name, dx, dy)
                total = total + product
        return total


def _table(name: str, *groups: tuple[str, list[tuple[str, str]]]) -> TermTable:
    return TermTable(name, tuple(TermGroup(p, tuple(Term(c, m) for c, m in rows)) for p, rows in groups))


# ==================== Interior ====================

# u-equation without u_tt and the multiplier derivative
U_BODY = _table(
    "u-equation",
    ("-12D/h^2(1-nu)", [("1", "u_yy"), ("1", "w_x w_yy")]),
    ("-2D", [
        ("1", "w_xyy w_yy"), ("2", "w_xy w_yyy"), ("1", "w_x w_yyyy"),
        ("nu", "w_xyy w_xx"), ("2nu", "w_xy w_xxy"), ("nu", "w_x w_xxyy"),
    ]),
)

V_BODY = _table(
    "v-equation",
    ("-12D/h^2(1-nu)", [("1", "v_xx"), ("1", "w_xx w_y")]),
    ("-2D", [
        ("1", "w_xxy w_xx"), ("2", "w_xy w_xxx"), ("1", "w_y w_xxxx"),
        ("nu", "w_xxy w_yy"), ("2nu", "w_xy w_xyy"), ("nu", "w_y w_xxyy"),
    ]),
)

# w-equation without w_tt and the multiplier divergence terms
W_BODY = _table(
    "w-equation",
    ("-D", [
        ("1", "w_xxxx"), ("1", "w_xxxx w_x w_x"), ("-1", "w_xxxx w_y w_y"),
        ("1", "w_yyyy"), ("-1", "w_yyyy w_x w_x"), ("1", "w_yyyy w_y w_y"),
        ("2", "w_xxyy"), ("2", "w_xxyy w_x w_x"), ("2", "w_xxyy w_y w_y"),
        ("-nu", "w_xxyy w_x w_x"), ("-nu", "w_xxyy w_y w_y"),
        ("-1", "w_x u_yyyy"), ("-1", "w_y v_xxxx"),
        ("4", "w_x w_xx w_xxx"), ("4", "w_y w_yy w_yyy"),
        ("-1", "w_x w_yy w_xyy"), ("-1", "w_y w_xx w_xxy"),
        ("4-2nu", "w_x w_xy w_xxy"), ("4-2nu", "w_y w_xy w_xyy"),
        ("-4", "w_x w_xy w_yyy"), ("-4", "w_y w_xy w_xxx"),
        ("-2", "w_xy v_xxx"), ("-2", "w_xy u_yyy"),
        ("4-4nu", "w_x w_xx w_xyy"), ("4-4nu", "w_y w_yy w_xxy"),
        ("1", "w_xx w_xx w_xx"), ("1", "w_yy w_yy w_yy"),
        ("1", "w_xx w_yy w_yy"), ("1", "w_yy w_xx w_xx"),
        ("-1-3nu", "w_xx w_xy w_xy"), ("-1-3nu", "w_yy w_xy w_xy"),
    ]),
    ("6D/h^2(1-nu)", [
        ("1", "w_xx w_y w_y"), ("2", "w_x w_y w_xy"), ("2", "u_y w_xy"), ("1", "v_xx w_y"),
        ("2", "v_x w_xy"), ("1", "w_x w_x w_yy"), ("1", "u_yy w_x"),
    ]),
)

# ==================== Boundary ====================

E_SECOND_A = _table("E second-order (a)", ("1", [("1", "w_xx"), ("nu", "w_yy")]))

E_SECOND_B = _table(
    "E second-order (b)",
    ("1", [
        ("1", "w_xx"), ("1", "w_xx w_x w_x"), ("-1", "w_xx w_y w_y"), ("-1", "w_y v_xx"),
        ("nu", "w_yy"), ("-nu", "w_x u_yy"),
    ]),
)

SN_SECOND_A = _table("S/N second-order (a)", ("1", [("1", "w_yy"), ("nu", "w_xx")]))

SN_SECOND_B = _table(
    "S/N second-order (b)",
    ("1", [
        ("1", "w_yy"), ("-1", "w_yy w_x w_x"), ("1", "w_yy w_y w_y"), ("-1", "w_x u_yy"),
        ("nu", "w_xx"), ("-nu", "w_y v_xx"),
    ]),
)

E_THIRD_A = _table(
    "E third-order (a)",
    ("h^2/6", [("1", "w_y w_xxx"), ("nu", "w_y w_xyy")]),
    ("1", [("1-nu", "v_x"), ("1-nu", "w_x w_y"), ("1-nu", "u_y")]),
)

E_THIRD_B = _table(
    "E third-order (b)",
    ("h^2/6", [
        ("-1", "w_x w_xx w_xx"), ("-1", "w_x w_yy w_yy"), ("-1", "w_yy u_yy"),
        ("-2+nu", "w_x w_xy w_xy"),
        ("-1", "w_xxx"), ("-1", "w_xxx w_x w_x"), ("1", "w_xxx w_y w_y"),
        ("2", "w_y w_xx w_xy"), ("1", "w_xy v_xx"), ("1", "w_y v_xxx"),
        ("-nu", "w_xyy"), ("-nu", "w_x w_x w_xyy"),
        ("-2+2nu", "w_xyy"), ("-2+2nu", "w_xyy w_x w_x"), ("-2+2nu", "w_xyy w_y w_y"),
        ("-4+4nu", "w_y w_xy w_yy"),
    ]),
    ("1", [("1-nu", "w_x w_y w_y"), ("1-nu", "u_y w_y"), ("1-nu", "v_x w_y")]),
)

SN_THIRD_A = _table(
    "S/N third-order (a)",
    ("h^2/6", [("1", "w_x w_yyy"), ("nu", "w_x w_xxy")]),
    ("1", [("1-nu", "u_y"), ("1-nu", "w_x w_y"), ("1-nu", "v_x")]),
)

SN_THIRD_B = _table(
    "S/N third-order (b)",
    ("h^2/6", [
        ("-1", "w_y w_yy w_yy"), ("-1", "w_y w_xx w_xx"), ("-1", "w_xx v_xx"),
        ("-2+nu", "w_y w_xy w_xy"),
        ("-1", "w_yyy"), ("1", "w_yyy w_x w_x"), ("-1", "w_yyy w_y w_y"),
        ("2", "w_x w_yy w_xy"), ("1", "w_xy u_yy"), ("1", "w_x u_yyy"),
        ("-nu", "w_xxy"), ("-nu", "w_y w_y w_xyy"),
        ("-2+2nu", "w_xxy"), ("-2+2nu", "w_xxy w_x w_x"), ("-2+2nu", "w_xxy w_y w_y"),
        ("-4+4nu", "w_x w_xy w_xx"),
    ]),
    ("1", [("1-nu", "w_x w_x w_y"), ("1-nu", "u_y w_x"), ("1-nu", "v_x w_x")]),
)

ALL_TABLES = (
    U_BODY, V_BODY, W_BODY,
    E_SECOND_A, E_SECOND_B, SN_SECOND_A, SN_SECOND_B,
    E_THIRD_A, E_THIRD_B, SN_THIRD_A, SN_THIRD_B,
)


def render_markdown() -> str:
    """Rows in the layout used by docs/model_iii_terms.md."""
    lines = []
    for table in ALL_TABLES:
        lines += [f"## {table.name}", "", "| prefactor | coefficient | monomial |", "|---|---|---|"]
        lines += [f"| {p} | {t.coefficient} | {t.monomial} |" for p, t in table.terms]
        lines.append("")
    return "\n".join(lines)
