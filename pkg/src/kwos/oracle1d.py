"""Exact closed-form solution of the 1D two-point boundary value problem

    (1/2) u'' = lam(x) u  on (x_1, x_M),   u(x_1), u(x_M) given,

with lam piecewise constant on the cells between breakpoints.  Cells with
lam = 0 carry a linear solution A + B x; cells with lam > 0 carry
A cosh(kappa x) + B sinh(kappa x) with kappa = sqrt(2 lam).  The coefficients
come from a dense solve of the boundary conditions plus C0/C1 matching at
interior breakpoints, which is what makes u a C1 function.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Piecewise1DSolution", "solve_1d", "eval_1d", "eval_1d_deriv"]

# cosh/sinh in global coordinates are well conditioned only while
# kappa * cell_width stays moderate; reject pathological inputs.
_MAX_KAPPA_WIDTH = 300.0


@dataclass(frozen=True, eq=False)
class Piecewise1DSolution:
    breakpoints: np.ndarray  # sorted, length M >= 2
    lambdas: np.ndarray  # length M - 1, >= 0
    coefficients: np.ndarray  # (M - 1, 2); (A, B) per cell

    @property
    def n_cells(self) -> int:
        return len(self.lambdas)

    def cell_of(self, x: float) -> int:
        """0-based cell index containing x; breakpoints belong to the cell on
        their left (except the first)."""
        bp = self.breakpoints
        if not (bp[0] <= x <= bp[-1]):
            raise ValueError(f"x={x} outside the solution range [{bp[0]}, {bp[-1]}]")
        idx = bisect.bisect_left(list(bp), x) - 1
        return min(max(idx, 0), self.n_cells - 1)

    def cell_value(self, i: int, x: float) -> float:
        a_coef, b_coef = self.coefficients[i]
        lam = self.lambdas[i]
        if lam == 0.0:
            return a_coef + b_coef * x
        kappa = math.sqrt(2.0 * lam)
        return a_coef * math.cosh(kappa * x) + b_coef * math.sinh(kappa * x)

    def cell_deriv(self, i: int, x: float) -> float:
        a_coef, b_coef = self.coefficients[i]
        lam = self.lambdas[i]
        if lam == 0.0:
            return b_coef
        kappa = math.sqrt(2.0 * lam)
        return kappa * (a_coef * math.sinh(kappa * x) + b_coef * math.cosh(kappa * x))

    def cell_second_deriv(self, i: int, x: float) -> float:
        # u'' = 2 lam u on a hyperbolic cell, 0 on a linear one -- by basis choice.
        lam = self.lambdas[i]
        if lam == 0.0:
            return 0.0
        return 2.0 * lam * self.cell_value(i, x)


def solve_1d(breakpoints, lambdas, u_left: float, u_right: float) -> Piecewise1DSolution:
    """Solve the piecewise problem; returns the per-cell coefficient table.

    The 2(M-1) unknowns satisfy the two boundary values plus value and slope
    matching at every interior breakpoint.
    """
    bp = np.asarray(breakpoints, dtype=float)
    lams = np.asarray(lambdas, dtype=float)
    if bp.ndim != 1 or bp.size < 2:
        raise ValueError("need at least two breakpoints")
    if np.any(np.diff(bp) <= 0.0):
        raise ValueError("breakpoints must be strictly increasing")
    if lams.shape != (bp.size - 1,):
        raise ValueError(f"expected {bp.size - 1} rates for {bp.size} breakpoints, got {lams.size}")
    if np.any(lams < 0.0):
        raise ValueError("rates must be >= 0")
    widths = np.diff(bp)
    kappa_width = np.sqrt(2.0 * lams) * widths
    if np.any(kappa_width > _MAX_KAPPA_WIDTH):
        raise ValueError(
            f"cell with sqrt(2 lam) * width = {kappa_width.max():.3g} > {_MAX_KAPPA_WIDTH}: "
            "hyperbolic basis too ill-conditioned"
        )

    n_cells = bp.size - 1

    def basis(i: int, x: float) -> tuple[float, float, float, float]:
        """(value, value, deriv, deriv) weights of (A_i, B_i) at x."""
        lam = lams[i]
        if lam == 0.0:
            return 1.0, x, 0.0, 1.0
        kappa = math.sqrt(2.0 * lam)
        ch, sh = math.cosh(kappa * x), math.sinh(kappa * x)
        return ch, sh, kappa * sh, kappa * ch

    size = 2 * n_cells
    mat = np.zeros((size, size))
    rhs = np.zeros(size)

    v0, v1, _, _ = basis(0, bp[0])
    mat[0, 0:2] = (v0, v1)
    rhs[0] = u_left
    row = 1
    for j in range(1, n_cells):  # interior breakpoint between cells j-1 and j
        xl = bp[j]
        lv0, lv1, ld0, ld1 = basis(j - 1, xl)
        rv0, rv1, rd0, rd1 = basis(j, xl)
        mat[row, 2 * (j - 1) : 2 * j] = (lv0, lv1)
        mat[row, 2 * j : 2 * j + 2] = (-rv0, -rv1)
        mat[row + 1, 2 * (j - 1) : 2 * j] = (ld0, ld1)
        mat[row + 1, 2 * j : 2 * j + 2] = (-rd0, -rd1)
        row += 2
    v0, v1, _, _ = basis(n_cells - 1, bp[-1])
    mat[row, size - 2 : size] = (v0, v1)
    rhs[row] = u_right

    try:
        coeffs = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular matching system: {exc}") from exc
    return Piecewise1DSolution(bp, lams, coeffs.reshape(n_cells, 2))


def eval_1d(sol: Piecewise1DSolution, x: float) -> float:
    """Evaluate u(x); x at a breakpoint uses the cell on its left."""
    return sol.cell_value(sol.cell_of(x), x)


def eval_1d_deriv(sol: Piecewise1DSolution, x: float) -> float:
    """Evaluate u'(x) with the same cell convention as eval_1d."""
    return sol.cell_deriv(sol.cell_of(x), x)
