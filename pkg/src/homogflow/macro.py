"""Macroscopic Darcy problem and the weak-limit pressure.

The macro unknown u solves  -div(A_h grad u) = |Y1| f1 + alpha_hat f2  with
homogeneous Dirichlet data on the unit square, and the weak-limit pressure
is recomposed pointwise as U = u + G with the constant-in-y lift
G = alpha_bulk * f2.  Solving for u and adding G avoids differentiating the
data, so f2 only needs to be continuous (required for the pointwise lift;
documented strengthening over square-integrable sources).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cell import HomogenizedData
from .coefficients import CoefficientField
from .errors import SolverError
from .fem import (
    FieldSolution,
    apply_constraints,
    assemble_load,
    assemble_stiffness,
    solve_spd,
)
from .geometry import CellGeometry, Mesh, build_unit_cell_mesh


def build_macro_mesh(resolution: int) -> Mesh:
    """Uniform triangulation of the unit square (no block, no duplicates)."""
    return build_unit_cell_mesh(CellGeometry(block=None, resolution=resolution))


def _as_source(f):
    if callable(f):
        return f
    const = float(f)
    return lambda x1, x2: np.full(np.shape(x1), const)


@dataclass
class MacroProblem:
    """Constant effective tensor plus sources and cell functionals."""

    tensor: np.ndarray
    f1: object
    f2: object
    y1_volume: float = 1.0
    alpha_hat: float = 0.0
    alpha_bulk: float = 0.0

    def __post_init__(self):
        self.tensor = np.asarray(self.tensor, dtype=float)
        self.f1 = _as_source(self.f1)
        self.f2 = _as_source(self.f2)
        lam_min = 0.5 * (self.tensor[0, 0] + self.tensor[1, 1]) - np.hypot(
            0.5 * (self.tensor[0, 0] - self.tensor[1, 1]), self.tensor[0, 1]
        )
        if lam_min <= 0.0:
            raise SolverError(f"effective tensor is not SPD (min eig {lam_min:g})")

    @classmethod
    def from_homogenized(cls, data: HomogenizedData, f1, f2) -> "MacroProblem":
        return cls(
            tensor=data.tensor,
            f1=f1,
            f2=f2,
            y1_volume=data.y1_volume,
            alpha_hat=data.alpha_hat,
            alpha_bulk=data.alpha_bulk,
        )

    def effective_source(self, x1, x2):
        """F* = |Y1| f1 + alpha_hat f2."""
        return self.y1_volume * self.f1(x1, x2) + self.alpha_hat * self.f2(x1, x2)

    def lift(self, x1, x2):
        """G = alpha_bulk f2."""
        return self.alpha_bulk * self.f2(x1, x2)


def solve_macro(problem: MacroProblem, mesh: Mesh, rel_tol: float = 1e-10) -> FieldSolution:
    """Solve the homogeneous-Dirichlet macro problem for u."""
    coeff = CoefficientField.constant_matrix(problem.tensor)
    system = assemble_stiffness(mesh, coeff)
    system += assemble_load(mesh, problem.effective_source)
    bnodes = mesh.boundary_nodes
    reduced = apply_constraints(system, dirichlet=(bnodes, np.zeros(len(bnodes))))
    return FieldSolution(mesh, solve_spd(reduced, rel_tol=rel_tol))


def compose_limit_pressure(u: FieldSolution, problem: MacroProblem) -> FieldSolution:
    """U = u + G, evaluated nodally; on the outer boundary U equals G."""
    x = u.mesh.nodes
    return FieldSolution(u.mesh, u.values + problem.lift(x[:, 0], x[:, 1]))
