"""Unit-cell problems and the homogenized quantities they produce.

Two problems live on the same unit-cell mesh:

* the corrector problems on the matrix part Y1 -- periodic on the cell
  boundary, natural (do-nothing) on the interface, determined up to a
  constant and fixed by zero mean over Y1;
* the block problem on Y2 -- unit source, Robin exchange on the interface.

Sign convention for the Robin term: the interface normal points out of the
matrix, i.e. *into* the block, so in the block-local weak form the exchange
term enters with a plus sign:  int_Y2 B grad(a).grad(z) + int_Gamma h a z
= int_Y2 z.  (Writing nu_b for the block's own outward normal, the boundary
condition B grad(a).nu = h a becomes B grad(a).nu_b = -h a, and integration
by parts flips the sign once more.)  The radial closed-form oracle in the
test suite pins this convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientField
from .errors import GeometryError
from .fem import (
    FieldSolution,
    apply_constraints,
    assemble_gradient_load,
    assemble_interface_robin,
    assemble_load,
    assemble_stiffness,
    gradient_per_triangle,
    integrate,
    lumped_mass,
    solve_spd,
)
from .geometry import (
    BLOCK_TAG,
    MATRIX_TAG,
    CellGeometry,
    Mesh,
    PeriodicMap,
    build_periodic_map,
    build_unit_cell_mesh,
)


@dataclass
class CellSolution:
    """Corrector fields on Y1 and the block field on Y2, sharing one mesh."""

    mesh: Mesh
    omega: tuple[FieldSolution, FieldSolution]
    alpha: FieldSolution | None
    geometry: CellGeometry


@dataclass
class HomogenizedData:
    """Everything the macroscopic model needs from the unit cell."""

    tensor: np.ndarray
    alpha_hat: float
    alpha_bulk: float
    y1_volume: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tensor = np.asarray(self.tensor, dtype=float)
        if self.tensor.shape != (2, 2):
            raise ValueError(f"tensor must be 2x2, got {self.tensor.shape}")

    def min_eigenvalue(self) -> float:
        t = self.tensor
        return float(0.5 * (t[0, 0] + t[1, 1]) - np.hypot(0.5 * (t[0, 0] - t[1, 1]), t[0, 1]))

    def to_json(self) -> str:
        doc = {
            "tensor": self.tensor.tolist(),
            "alpha_hat": self.alpha_hat,
            "alpha_bulk": self.alpha_bulk,
            "y1_volume": self.y1_volume,
            "provenance": self.provenance,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "HomogenizedData":
        from .errors import ConfigError

        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"homogenized data is not valid JSON: {exc}") from None
        required = {"tensor", "alpha_hat", "alpha_bulk", "y1_volume"}
        if not isinstance(doc, dict) or not required.issubset(doc):
            missing = required - set(doc) if isinstance(doc, dict) else required
            raise ConfigError(f"homogenized data missing fields: {sorted(missing)}")
        tensor = np.asarray(doc["tensor"], dtype=float)
        if tensor.shape != (2, 2) or not np.all(np.isfinite(tensor)):
            raise ConfigError("homogenized tensor must be a finite 2x2 matrix")
        data = cls(
            tensor=tensor,
            alpha_hat=float(doc["alpha_hat"]),
            alpha_bulk=float(doc["alpha_bulk"]),
            y1_volume=float(doc["y1_volume"]),
            provenance=doc.get("provenance", {}),
        )
        if data.min_eigenvalue() <= 0.0:
            raise ConfigError("homogenized tensor is not positive definite")
        return data


def solve_corrector(direction: int, mesh: Mesh, pmap: PeriodicMap, coeff: CoefficientField,
                    rel_tol: float = 1e-10) -> FieldSolution:
    """Solve the matrix-part cell problem for one coordinate direction.

    Weak form on Y1:  int A grad(w).grad(z) = -int (A e_dir).grad(z)  over
    periodic test fields z, with zero mean over Y1.  The interface carries
    no term (natural condition).
    """
    if direction not in (0, 1):
        raise ValueError("direction must be 0 or 1")
    system = assemble_stiffness(mesh, coeff, subdomain=MATRIX_TAG)
    system += assemble_gradient_load(mesh, coeff, direction, subdomain=MATRIX_TAG, scale=-1.0)
    active = np.zeros(mesh.n_nodes, dtype=bool)
    active[mesh.subdomain_dofs(MATRIX_TAG)] = True
    reduced = apply_constraints(
        system,
        periodic=pmap,
        mean_zero=lumped_mass(mesh, MATRIX_TAG),
        active=active,
    )
    return FieldSolution(mesh, solve_spd(reduced, rel_tol=rel_tol))


def homogenized_tensor(omega: tuple[FieldSolution, FieldSolution], mesh: Mesh,
                       coeff: CoefficientField, form: str = "energy") -> np.ndarray:
    """Effective tensor from the correctors.

    ``form="energy"`` evaluates  a_ij = int_Y1 A (grad w_i + e_i).(grad w_j + e_j);
    ``form="flux"`` evaluates    a_ij = int_Y1 A (grad w_j + e_j).e_i .
    The two agree up to solver tolerance (Galerkin consistency) and the
    energy form is symmetric by construction.
    """
    for w in omega:
        if w.mesh is not mesh:
            raise ValueError("corrector fields must live on the supplied mesh")
    g1, idx = gradient_per_triangle(mesh, omega[0].values, MATRIX_TAG)
    g2, _ = gradient_per_triangle(mesh, omega[1].values, MATRIX_TAG)
    g1 = g1 + np.array([1.0, 0.0])
    g2 = g2 + np.array([0.0, 1.0])
    m = coeff.matrix_at(mesh.centroids[idx])
    area = mesh.areas[idx]
    out = np.empty((2, 2))
    grads = (g1, g2)
    for i in range(2):
        for j in range(2):
            if form == "energy":
                quad = np.einsum("kd,kde,ke->k", grads[i], m, grads[j])
            elif form == "flux":
                quad = np.einsum("kde,ke->kd", m, grads[j])[:, i]
            else:
                raise ValueError(f"unknown tensor form {form!r}")
            out[i, j] = float((area * quad).sum())
    return out


def solve_alpha(mesh: Mesh, coeff_b: CoefficientField, coeff_h: CoefficientField,
                rel_tol: float = 1e-10) -> FieldSolution:
    """Solve the block problem: unit source in Y2, Robin exchange on Gamma.

    Weak form:  int_Y2 B grad(a).grad(z) + int_Gamma h a z = int_Y2 z.
    The Robin term makes the system nonsingular, so no mean constraint is
    needed.
    """
    block_dofs = mesh.subdomain_dofs(BLOCK_TAG)
    if len(block_dofs) == 0:
        raise GeometryError("cell has no block; the block problem is undefined")
    system = assemble_stiffness(mesh, coeff_b, subdomain=BLOCK_TAG)
    system += assemble_interface_robin(mesh, coeff_h, side="block")
    system += assemble_load(mesh, 1.0, subdomain=BLOCK_TAG)
    active = np.zeros(mesh.n_nodes, dtype=bool)
    active[block_dofs] = True
    reduced = apply_constraints(system, active=active)
    return FieldSolution(mesh, solve_spd(reduced, rel_tol=rel_tol))


def alpha_functionals(alpha: FieldSolution | None, mesh: Mesh) -> tuple[float, float, float]:
    """(interface integral of alpha, block integral of alpha, |Y1|)."""
    y1_volume = mesh.subdomain_area(MATRIX_TAG)
    if alpha is None:
        return 0.0, 0.0, y1_volume
    alpha_hat = integrate(mesh, alpha, region="interface", side="block")
    alpha_bulk = integrate(mesh, alpha, region=BLOCK_TAG)
    return alpha_hat, alpha_bulk, y1_volume


def compute_cell_data(geom: CellGeometry, coeff_a: CoefficientField,
                      coeff_b: CoefficientField, coeff_h: CoefficientField,
                      rel_tol: float = 1e-10,
                      provenance: dict | None = None) -> tuple[HomogenizedData, CellSolution]:
    """Run both cell problems and collect the homogenized quantities."""
    mesh = build_unit_cell_mesh(geom)
    pmap = build_periodic_map(mesh)
    omega = (
        solve_corrector(0, mesh, pmap, coeff_a, rel_tol=rel_tol),
        solve_corrector(1, mesh, pmap, coeff_a, rel_tol=rel_tol),
    )
    tensor = homogenized_tensor(omega, mesh, coeff_a)
    alpha = None
    if geom.block is not None:
        alpha = solve_alpha(mesh, coeff_b, coeff_h, rel_tol=rel_tol)
    alpha_hat, alpha_bulk, y1_volume = alpha_functionals(alpha, mesh)
    data = HomogenizedData(
        tensor=tensor,
        alpha_hat=alpha_hat,
        alpha_bulk=alpha_bulk,
        y1_volume=y1_volume,
        provenance=provenance or {},
    )
    return data, CellSolution(mesh=mesh, omega=omega, alpha=alpha, geometry=geom)
