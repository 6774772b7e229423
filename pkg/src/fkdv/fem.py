"""Periodic cubic Hermite finite element space on a uniform grid.

The trial space is spanned by translates of two C^1 shape functions: a value
shape f with f(0) = 1, f'(0) = 0 and a slope shape g with g(0) = 0,
g'(0) = 1, both supported on two elements.  Node j carries the pair of
degrees of freedom (u(x_j), dx * u'(x_j)); the slope is scaled by the mesh
width so both coefficients share the units of u.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .circulant import block_symbol, solve_symbol
from .quad import gauss_rule

__all__ = [
    "Grid",
    "FemFunction",
    "shape_f",
    "shape_g",
    "shape_f_deriv",
    "shape_g_deriv",
    "hermite_interpolate",
    "l2_project",
    "mass_offset_blocks",
]


def shape_f(y):
    """Value shape 1 + y^2 (2|y| - 3) on |y| <= 1, zero outside."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    out = np.where(a <= 1.0, 1.0 + y * y * (2.0 * a - 3.0), 0.0)
    return out if out.ndim else float(out)


def shape_g(y):
    """Slope shape y (1 - |y|)^2 on |y| <= 1, zero outside."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    out = np.where(a <= 1.0, y * (1.0 - a) ** 2, 0.0)
    return out if out.ndim else float(out)


def shape_f_deriv(y):
    """Derivative of shape_f: 6 y (|y| - 1) on the support."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    out = np.where(a <= 1.0, 6.0 * y * (a - 1.0), 0.0)
    return out if out.ndim else float(out)


def shape_g_deriv(y):
    """Derivative of shape_g: (1 - |y|)(1 - 3|y|) on the support."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    out = np.where(a <= 1.0, (1.0 - a) * (1.0 - 3.0 * a), 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with n_elems elements on [left, right]."""

    left: float
    right: float
    n_elems: int

    def __post_init__(self) -> None:
        if not self.right > self.left:
            raise ValueError(f"empty domain [{self.left}, {self.right}]")
        if self.n_elems < 4:
            raise ValueError(f"need at least 4 elements, got {self.n_elems}")

    @property
    def width(self) -> float:
        return self.right - self.left

    @property
    def dx(self) -> float:
        return self.width / self.n_elems

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_elems

    def nodes(self) -> np.ndarray:
        return self.left + self.dx * np.arange(self.n_elems)

    def locate(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Element index and local coordinate xi in [0, 1) for points x."""
        t = (np.asarray(x, dtype=float) - self.left) / self.dx
        t = t % self.n_elems
        elem = np.minimum(t.astype(int), self.n_elems - 1)
        return elem, t - elem


class FemFunction:
    """Element of the Hermite space: a grid plus a coefficient vector.

    coeffs[2j] is the nodal value at x_j and coeffs[2j+1] the scaled slope
    dx * u'(x_j).
    """

    def __init__(self, grid: Grid, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (grid.n_dofs,):
            raise ValueError(
                f"expected {grid.n_dofs} coefficients, got {coeffs.shape}")
        self.grid = grid
        self.coeffs = coeffs

    @property
    def node_values(self) -> np.ndarray:
        return self.coeffs[0::2]

    @property
    def node_slopes(self) -> np.ndarray:
        """Unscaled nodal derivatives u'(x_j)."""
        return self.coeffs[1::2] / self.grid.dx

    def _gather(self, x):
        grid = self.grid
        elem, xi = grid.locate(x)
        nxt = (elem + 1) % grid.n_elems
        c = self.coeffs
        return xi, c[2 * elem], c[2 * elem + 1], c[2 * nxt], c[2 * nxt + 1]

    def __call__(self, x):
        xi, c0, c1, c2, c3 = self._gather(x)
        out = (c0 * shape_f(xi) + c1 * shape_g(xi)
               + c2 * shape_f(xi - 1.0) + c3 * shape_g(xi - 1.0))
        return out if np.ndim(x) else float(out)

    def deriv(self, x):
        xi, c0, c1, c2, c3 = self._gather(x)
        out = (c0 * shape_f_deriv(xi) + c1 * shape_g_deriv(xi)
               + c2 * shape_f_deriv(xi - 1.0)
               + c3 * shape_g_deriv(xi - 1.0)) / self.grid.dx
        return out if np.ndim(x) else float(out)

    def second_deriv(self, x):
        """Second derivative (piecewise linear, discontinuous at nodes)."""
        xi, c0, c1, c2, c3 = self._gather(x)
        # f'' = 12|y| - 6 (sign-even), g'' = 6y - 4 sign(y) on each side.
        d2f0 = 12.0 * xi - 6.0
        d2g0 = 6.0 * xi - 4.0
        d2f1 = -12.0 * (xi - 1.0) - 6.0
        d2g1 = 6.0 * (xi - 1.0) + 4.0
        out = (c0 * d2f0 + c1 * d2g0 + c2 * d2f1 + c3 * d2g1) / self.grid.dx ** 2
        return out if np.ndim(x) else float(out)

    def sup_norm(self, samples_per_elem: int = 17) -> float:
        """Max of |u| over a dense per-element sample (close upper bound)."""
        xi = np.linspace(0.0, 1.0, samples_per_elem)
        x = (self.grid.nodes()[:, None] + xi[None, :] * self.grid.dx).ravel()
        return float(np.max(np.abs(self(x))))

    def copy(self) -> "FemFunction":
        return FemFunction(self.grid, self.coeffs.copy())

    def __add__(self, other: "FemFunction") -> "FemFunction":
        return FemFunction(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "FemFunction") -> "FemFunction":
        return FemFunction(self.grid, self.coeffs - other.coeffs)

    def __rmul__(self, scalar: float) -> "FemFunction":
        return FemFunction(self.grid, float(scalar) * self.coeffs)


def hermite_interpolate(grid: Grid,
                        func: Callable,
                        deriv: Callable) -> FemFunction:
    """Interpolant matching nodal values and derivatives of ``func``."""
    x = grid.nodes()
    coeffs = np.empty(grid.n_dofs)
    coeffs[0::2] = func(x)
    coeffs[1::2] = grid.dx * np.asarray(deriv(x), dtype=float)
    return FemFunction(grid, coeffs)


# Exact element mass integrals: int_0^1 H_p H_q dxi for the four cubic
# Hermite shapes (value-left, slope-left, value-right, slope-right).
_ELEM_MASS = np.array([
    [13 / 35, 11 / 210, 9 / 70, -13 / 420],
    [11 / 210, 1 / 105, 13 / 420, -1 / 140],
    [9 / 70, 13 / 420, 13 / 35, -11 / 210],
    [-13 / 420, -1 / 140, -11 / 210, 1 / 105],
])


def mass_offset_blocks(grid: Grid) -> np.ndarray:
    """Offset blocks of the mass matrix <v_j, v_i> (exact rationals)."""
    n, dx = grid.n_elems, grid.dx
    blocks = np.zeros((n, 2, 2))
    blocks[0] = dx * (_ELEM_MASS[:2, :2] + _ELEM_MASS[2:, 2:])
    blocks[1] = dx * _ELEM_MASS[:2, 2:]        # test at node 0, trial at node 1
    blocks[n - 1] = dx * _ELEM_MASS[2:, :2]    # test at node 0, trial at node -1
    return blocks


def load_vector(grid: Grid, func: Callable, npts: int = 8) -> np.ndarray:
    """Loads <func, v_i> by an npts Gauss rule on each element."""
    xi, w = gauss_rule(npts)
    x = grid.nodes()[:, None] + xi[None, :] * grid.dx
    fvals = np.asarray(func(x), dtype=float) * (w[None, :] * grid.dx)
    shapes = np.stack([shape_f(xi), shape_g(xi),
                       shape_f(xi - 1.0), shape_g(xi - 1.0)])
    local = np.einsum("eq,pq->ep", fvals, shapes)
    loads = np.zeros(grid.n_dofs)
    elems = np.arange(grid.n_elems)
    nxt = (elems + 1) % grid.n_elems
    for p, dof in enumerate([2 * elems, 2 * elems + 1, 2 * nxt, 2 * nxt + 1]):
        np.add.at(loads, dof, local[:, p])
    return loads


def l2_project(grid: Grid, func: Callable, npts: int = 8) -> FemFunction:
    """L2 projection of ``func`` onto the Hermite space."""
    symbol = block_symbol(mass_offset_blocks(grid))
    inv = np.linalg.inv(symbol)
    coeffs = solve_symbol(inv, load_vector(grid, func, npts=npts))
    return FemFunction(grid, coeffs)
