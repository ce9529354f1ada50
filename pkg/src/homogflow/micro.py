"""The eps-resolved micro model on the tiled mesh.

One monolithic symmetric system couples the matrix pressure (zero trace on
the outer boundary) and the block pressure through interface exchange
blocks only:

    int A(x/e) grad(u).grad(phi) + e^2 int B(x/e) grad(v).grad(psi)
      + e int_Gamma h(x/e) (u - v)(phi - psi) ds = int f1 phi + int f2 psi.

Block permeability carries the e^2 weight and the interface exchange the
single e weight; the energy-report components mirror the same weights
without the coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientField
from .fem import (
    FieldSolution,
    SparseSystem,
    apply_constraints,
    assemble_interface_mass,
    assemble_load,
    assemble_stiffness,
    grad_energy,
    interface_jump_sq,
    lumped_mass,
    solve_spd,
)
from .geometry import (
    BLOCK_TAG,
    MATRIX_TAG,
    CellGeometry,
    Mesh,
    build_epsilon_mesh,
    extract_interface_pairing,
)


@dataclass
class MicroProblem:
    """Cell geometry + coefficients + sources at one period eps = 1/m."""

    eps: float
    mesh: Mesh
    coeff_a: CoefficientField
    coeff_b: CoefficientField
    coeff_h: CoefficientField
    f1: object = 0.0
    f2: object = 0.0

    @property
    def m(self) -> int:
        return int(round(1.0 / self.eps))

    @classmethod
    def build(cls, geom: CellGeometry, eps: float, coeff_a, coeff_b, coeff_h,
              f1=0.0, f2=0.0) -> "MicroProblem":
        mesh = build_epsilon_mesh(geom, eps)
        return cls(eps=eps, mesh=mesh, coeff_a=coeff_a, coeff_b=coeff_b,
                   coeff_h=coeff_h, f1=f1, f2=f2)


@dataclass
class MicroSolution:
    """Coupled nodal solution; matrix and block DOFs are disjoint."""

    mesh: Mesh
    values: np.ndarray
    eps: float
    _matrix_mask: np.ndarray | None = field(default=None, repr=False)
    _block_mask: np.ndarray | None = field(default=None, repr=False)

    @property
    def matrix_mask(self) -> np.ndarray:
        if self._matrix_mask is None:
            m = np.zeros(self.mesh.n_nodes, dtype=bool)
            m[self.mesh.subdomain_dofs(MATRIX_TAG)] = True
            self._matrix_mask = m
        return self._matrix_mask

    @property
    def block_mask(self) -> np.ndarray:
        if self._block_mask is None:
            m = np.zeros(self.mesh.n_nodes, dtype=bool)
            m[self.mesh.subdomain_dofs(BLOCK_TAG)] = True
            self._block_mask = m
        return self._block_mask

    @property
    def u_eps(self) -> FieldSolution:
        """Matrix-side pressure (zero at block-only DOFs)."""
        return FieldSolution(self.mesh, np.where(self.matrix_mask, self.values, 0.0))

    @property
    def v_eps(self) -> FieldSolution:
        """Block-side pressure (zero at matrix-only DOFs)."""
        return FieldSolution(self.mesh, np.where(self.block_mask, self.values, 0.0))


def assemble_micro(problem: MicroProblem) -> SparseSystem:
    """Assemble the monolithic micro system (matrix DOFs + block DOFs)."""
    mesh = problem.mesh
    m = problem.m
    eps = problem.eps
    system = assemble_stiffness(mesh, problem.coeff_a.pullback(m), subdomain=MATRIX_TAG)
    system += assemble_stiffness(mesh, problem.coeff_b.pullback(m),
                                 subdomain=BLOCK_TAG, scale=eps**2)
    pairs = extract_interface_pairing(mesh)
    system += assemble_interface_mass(mesh, problem.coeff_h.pullback(m),
                                      pairs=pairs, scale=eps)
    system += assemble_load(mesh, problem.f1, subdomain=MATRIX_TAG)
    system += assemble_load(mesh, problem.f2, subdomain=BLOCK_TAG)
    return system


def solve_micro(problem: MicroProblem, rel_tol: float = 1e-10,
                max_iter: int | None = None) -> MicroSolution:
    """Solve the micro model; Dirichlet applies to the matrix trace only."""
    system = assemble_micro(problem)
    bnodes = problem.mesh.boundary_nodes
    reduced = apply_constraints(system, dirichlet=(bnodes, np.zeros(len(bnodes))))
    values = solve_spd(reduced, rel_tol=rel_tol, max_iter=max_iter)
    return MicroSolution(mesh=problem.mesh, values=values, eps=problem.eps)


def combined_pressure(sol: MicroSolution) -> FieldSolution:
    """Overall pressure: u on the matrix, v on the blocks.

    On the duplicated-DOF mesh this is exactly the solution vector;
    interface nodes keep both traces.  Use :func:`collapse_to_nodes` when a
    single-valued nodal array is needed (export, plotting).
    """
    return FieldSolution(sol.mesh, sol.values.copy())


def collapse_to_nodes(sol: MicroSolution) -> np.ndarray:
    """Single-valued nodal pressure; duplicated interface nodes are merged
    by subdomain-area weighting.  Intended for visualization only -- the
    convergence metrics integrate per subdomain and never need this."""
    w = lumped_mass(sol.mesh)
    merged = sol.values.copy()
    pairs = sol.mesh.node_pairs
    if len(pairs):
        wu = w[pairs[:, 0]]
        wv = w[pairs[:, 1]]
        avg = (wu * sol.values[pairs[:, 0]] + wv * sol.values[pairs[:, 1]]) / (wu + wv)
        merged[pairs[:, 0]] = avg
        merged[pairs[:, 1]] = avg
    return merged


@dataclass
class EnergyReport:
    """Components of the natural energy norm of the coupled solution."""

    eps: float
    grad_u_sq: float
    eps2_grad_v_sq: float
    jump_sq: float

    @property
    def h_eps_norm(self) -> float:
        return float(np.sqrt(self.grad_u_sq + self.eps2_grad_v_sq + self.jump_sq))


def energy_report(sol: MicroSolution, problem: MicroProblem) -> EnergyReport:
    """Coefficient-free energy components with the eps^2 and eps weights."""
    grad_u_sq = grad_energy(sol.mesh, sol.values, subdomain=MATRIX_TAG)
    grad_v_sq = grad_energy(sol.mesh, sol.values, subdomain=BLOCK_TAG)
    jump = interface_jump_sq(sol.mesh, sol.values)
    return EnergyReport(
        eps=sol.eps,
        grad_u_sq=grad_u_sq,
        eps2_grad_v_sq=problem.eps**2 * grad_v_sq,
        jump_sq=problem.eps * jump,
    )
