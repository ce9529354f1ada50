"""P1 finite-element kernels: assembly, constraints, SPD solve, integrals.

Degrees of freedom coincide with mesh node indices (interface nodes are
duplicated in the mesh itself, so a single nodal vector carries fields that
jump across the interface).  Stiffness uses centroid-evaluated coefficients,
exact for P1 with piecewise-constant data; loads use the degree-2 midedge
rule; interface terms use 2-point Gauss on each edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConstraintError, SolverError, TopologyError
from .geometry import BLOCK_TAG, MATRIX_TAG, Mesh, PeriodicMap


@dataclass
class FieldSolution:
    """Nodal scalar field on a mesh (one value per DOF)."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.values) != self.mesh.n_nodes:
            raise ValueError(
                f"field has {len(self.values)} values for {self.mesh.n_nodes} DOFs"
            )


class SparseSystem:
    """Symmetric sparse system in triplet form plus a right-hand side."""

    def __init__(self, n: int):
        self.n = int(n)
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self.rhs = np.zeros(self.n)

    def add_matrix_triplets(self, rows, cols, vals) -> None:
        self._rows.append(np.asarray(rows, dtype=np.int64).ravel())
        self._cols.append(np.asarray(cols, dtype=np.int64).ravel())
        self._vals.append(np.asarray(vals, dtype=float).ravel())

    def add_to_rhs(self, idx, vals) -> None:
        np.add.at(self.rhs, np.asarray(idx, dtype=np.int64).ravel(),
                  np.asarray(vals, dtype=float).ravel())

    def merge(self, other: "SparseSystem") -> "SparseSystem":
        if other.n != self.n:
            raise ValueError("cannot merge systems of different size")
        self._rows.extend(other._rows)
        self._cols.extend(other._cols)
        self._vals.extend(other._vals)
        self.rhs += other.rhs
        return self

    def __iadd__(self, other: "SparseSystem") -> "SparseSystem":
        return self.merge(other)

    def matrix(self) -> sp.csr_matrix:
        if not self._rows:
            return sp.csr_matrix((self.n, self.n))
        coo = sp.coo_matrix(
            (np.concatenate(self._vals),
             (np.concatenate(self._rows), np.concatenate(self._cols))),
            shape=(self.n, self.n),
        )
        return coo.tocsr()


# -- element geometry helpers ----------------------------------------------


def _tri_grads(mesh: Mesh, tri_idx: np.ndarray):
    """Per-triangle P1 basis gradients (K,3,2) and areas (K,)."""
    tris = mesh.triangles[tri_idx]
    p = mesh.nodes[tris]
    x = p[..., 0]
    y = p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = mesh.areas[tri_idx]
    grads = np.stack([b, c], axis=2) / (2.0 * area)[:, None, None]
    return grads, area, tris


def _select_tris(mesh: Mesh, subdomain) -> np.ndarray:
    if subdomain is None:
        return np.arange(mesh.n_triangles)
    return np.nonzero(mesh.tri_tags == subdomain)[0]


def gradient_per_triangle(mesh: Mesh, values: np.ndarray, subdomain=None):
    """Constant P1 gradient per triangle: (K,2) array plus triangle indices."""
    idx = _select_tris(mesh, subdomain)
    grads, _, tris = _tri_grads(mesh, idx)
    g = np.einsum("kid,ki->kd", grads, values[tris])
    return g, idx


# -- assembly ----------------------------------------------------------------


def assemble_stiffness(mesh: Mesh, coeff, subdomain=None, scale: float = 1.0) -> SparseSystem:
    """Stiffness contribution  scale * int_subdomain coeff grad(u).grad(v).

    The coefficient is evaluated at triangle centroids (exact quadrature for
    P1 with piecewise-constant data); its ellipticity is checked there.
    """
    sys_ = SparseSystem(mesh.n_nodes)
    idx = _select_tris(mesh, subdomain)
    if len(idx) == 0:
        return sys_
    grads, area, tris = _tri_grads(mesh, idx)
    m = coeff.matrix_at(mesh.centroids[idx])
    local = np.einsum("kid,kde,kje->kij", grads, m, grads) * (scale * area)[:, None, None]
    rows = np.repeat(tris, 3, axis=1).reshape(-1)
    cols = np.tile(tris, (1, 3)).reshape(-1)
    sys_.add_matrix_triplets(rows, cols, local.reshape(-1))
    return sys_


# Degree-2 rule: edge midpoints, weight area/3 each.
_MIDEDGE_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])

# Degree-4 Dunavant rule (6 points), used for smooth-error integrals.
_D4_W = np.array([0.223381589678011] * 3 + [0.109951743655322] * 3)
_D4_BARY = np.array([
    [0.108103018168070, 0.445948490915965, 0.445948490915965],
    [0.445948490915965, 0.108103018168070, 0.445948490915965],
    [0.445948490915965, 0.445948490915965, 0.108103018168070],
    [0.816847572980459, 0.091576213509771, 0.091576213509771],
    [0.091576213509771, 0.816847572980459, 0.091576213509771],
    [0.091576213509771, 0.091576213509771, 0.816847572980459],
])


def _as_callable(f):
    if callable(f):
        return f
    const = float(f)
    return lambda x1, x2: np.full(np.shape(x1), const)


def assemble_load(mesh: Mesh, f, subdomain=None, scale: float = 1.0) -> SparseSystem:
    """Load contribution  scale * int_subdomain f v  (midedge rule)."""
    sys_ = SparseSystem(mesh.n_nodes)
    idx = _select_tris(mesh, subdomain)
    if len(idx) == 0:
        return sys_
    fn = _as_callable(f)
    p = mesh.nodes[mesh.triangles[idx]]
    area = mesh.areas[idx]
    local = np.zeros((len(idx), 3))
    for bary in _MIDEDGE_BARY:
        q = np.einsum("i,kid->kd", bary, p)
        fq = np.asarray(fn(q[:, 0], q[:, 1]), dtype=float)
        local += np.outer(fq, bary)
    local *= (scale * area / 3.0)[:, None]
    sys_.add_to_rhs(mesh.triangles[idx].reshape(-1), local.reshape(-1))
    return sys_


def assemble_gradient_load(mesh: Mesh, coeff, direction: int, subdomain=None,
                           scale: float = 1.0) -> SparseSystem:
    """Load  scale * int_subdomain (coeff e_dir) . grad(v)  (cell-problem RHS)."""
    sys_ = SparseSystem(mesh.n_nodes)
    idx = _select_tris(mesh, subdomain)
    if len(idx) == 0:
        return sys_
    grads, area, tris = _tri_grads(mesh, idx)
    m = coeff.matrix_at(mesh.centroids[idx])
    flux = m[:, :, direction]
    local = np.einsum("kid,kd->ki", grads, flux) * (scale * area)[:, None]
    sys_.add_to_rhs(tris.reshape(-1), local.reshape(-1))
    return sys_


_GAUSS2_T = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


def _edge_mass_blocks(mesh: Mesh, hfield, scale: float):
    """Per-interface-edge 2x2 mass blocks  scale * int_e h N_i N_j ds."""
    a = mesh.nodes[mesh.iface_nodes_u[:, 0]]
    b = mesh.nodes[mesh.iface_nodes_u[:, 1]]
    length = np.hypot(*(b - a).T)
    blocks = np.zeros((mesh.n_interface_edges, 2, 2))
    for t in _GAUSS2_T:
        q = (1.0 - t) * a + t * b
        hq = hfield.scalar_at(q)
        shape = np.array([1.0 - t, t])
        blocks += 0.5 * hq[:, None, None] * np.outer(shape, shape)
    return blocks * (scale * length)[:, None, None]


def assemble_interface_mass(mesh: Mesh, hfield, pairs=None, scale: float = 1.0) -> SparseSystem:
    """Jump coupling  scale * int_Gamma h (u - v)(phi - psi) ds.

    Couples the matrix-side and block-side copies of each interface edge
    with the sign pattern [+h, -h; -h, +h].  ``pairs`` (from
    ``extract_interface_pairing``) is validated against the edges when
    given.
    """
    sys_ = SparseSystem(mesh.n_nodes)
    if mesh.n_interface_edges == 0:
        return sys_
    if pairs is not None:
        pair_of = dict(zip(pairs[:, 0].tolist(), pairs[:, 1].tolist()))
        for k in range(mesh.n_interface_edges):
            for s in range(2):
                ku = int(mesh.iface_nodes_u[k, s])
                if pair_of.get(ku) != int(mesh.iface_nodes_v[k, s]):
                    raise TopologyError(f"interface edge {k} endpoint {ku} has no pair")
    blocks = _edge_mass_blocks(mesh, hfield, scale)
    dofs = np.concatenate([mesh.iface_nodes_u, mesh.iface_nodes_v], axis=1)  # (E,4)
    sign = np.array([1.0, 1.0, -1.0, -1.0])
    local = blocks[:, [0, 1, 0, 1], :][:, :, [0, 1, 0, 1]] * np.outer(sign, sign)
    rows = np.repeat(dofs, 4, axis=1).reshape(-1)
    cols = np.tile(dofs, (1, 4)).reshape(-1)
    sys_.add_matrix_triplets(rows, cols, local.reshape(-1))
    return sys_


def assemble_interface_robin(mesh: Mesh, hfield, side: str = "block",
                             scale: float = 1.0) -> SparseSystem:
    """One-sided interface term  scale * int_Gamma h u v ds on one trace.

    Used by the block cell problem, where only the block-side DOFs carry
    the exchange term.
    """
    sys_ = SparseSystem(mesh.n_nodes)
    if mesh.n_interface_edges == 0:
        return sys_
    blocks = _edge_mass_blocks(mesh, hfield, scale)
    dofs = mesh.iface_nodes_v if side == "block" else mesh.iface_nodes_u
    rows = np.repeat(dofs, 2, axis=1).reshape(-1)
    cols = np.tile(dofs, (1, 2)).reshape(-1)
    sys_.add_matrix_triplets(rows, cols, blocks.reshape(-1))
    return sys_


# -- constraints -------------------------------------------------------------


@dataclass
class ReducedSystem:
    """Constrained linear system plus the recovery map back to full DOFs."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    transfer: sp.csr_matrix
    dirichlet_full: np.ndarray
    mean_weights: np.ndarray | None
    active: np.ndarray

    def recover(self, x_reduced: np.ndarray) -> np.ndarray:
        x = self.transfer @ x_reduced + self.dirichlet_full
        if self.mean_weights is not None:
            w = self.mean_weights
            x = x - np.where(self.active, (w @ x) / w.sum(), 0.0)
        return x


def apply_constraints(system: SparseSystem, dirichlet=None, periodic=None,
                      mean_zero=None, active=None) -> ReducedSystem:
    """Reduce a system by Dirichlet, periodic and zero-mean constraints.

    Parameters
    ----------
    dirichlet : (ids, values) or None
        Fixed DOFs, eliminated with right-hand-side correction.
    periodic : PeriodicMap or (S,2) array or None
        Slave/master identifications; slave columns fold onto masters.
    mean_zero : ndarray or None
        Nonnegative quadrature weights over the constrained subdomain.  One
        weighted DOF is pinned to zero during the solve and the recovered
        field is shifted to exact zero weighted mean (quotient by
        constants).
    active : bool ndarray or None
        DOFs that participate at all; inactive DOFs are dropped and read
        back as zero.

    Raises
    ------
    ConstraintError
        If a DOF appears in both the Dirichlet set and a periodic pair.
    """
    n = system.n
    if active is None:
        active = np.ones(n, dtype=bool)
    else:
        active = np.asarray(active, dtype=bool).copy()

    if isinstance(periodic, PeriodicMap):
        ident = periodic.all_identifications()
    elif periodic is not None:
        ident = np.asarray(periodic, dtype=np.int64)
    else:
        ident = np.empty((0, 2), dtype=np.int64)

    dir_ids = np.empty(0, dtype=np.int64)
    dir_vals = np.empty(0)
    if dirichlet is not None:
        dir_ids = np.asarray(dirichlet[0], dtype=np.int64)
        dir_vals = np.broadcast_to(np.asarray(dirichlet[1], dtype=float), dir_ids.shape).copy()
        if len(np.unique(dir_ids)) != len(dir_ids):
            raise ConstraintError("duplicate DOF in the Dirichlet set")

    if len(ident) and len(dir_ids):
        touched = set(ident[:, 0].tolist()) | set(ident[:, 1].tolist())
        overlap = touched.intersection(dir_ids.tolist())
        if overlap:
            raise ConstraintError(
                f"DOF {sorted(overlap)[0]} is both periodic and Dirichlet"
            )

    master_of = np.arange(n, dtype=np.int64)
    if len(ident):
        if np.intersect1d(ident[:, 0], ident[:, 1]).size:
            raise ConstraintError("a periodic master is also a slave")
        master_of[ident[:, 0]] = ident[:, 1]

    weights = None
    if mean_zero is not None:
        weights = np.asarray(mean_zero, dtype=float)
        # Pin an unconstrained DOF: not Dirichlet, not in any periodic pair.
        untouched = np.ones(n, dtype=bool)
        if len(ident):
            untouched[ident[:, 0]] = False
            untouched[ident[:, 1]] = False
        pin_candidates = np.nonzero(active & (weights > 0.0) & untouched)[0]
        pin_candidates = np.setdiff1d(pin_candidates, dir_ids, assume_unique=False)
        if len(pin_candidates) == 0:
            raise ConstraintError("no DOF available to pin for the zero-mean constraint")
        dir_ids = np.append(dir_ids, pin_candidates[0])
        dir_vals = np.append(dir_vals, 0.0)

    is_dir = np.zeros(n, dtype=bool)
    is_dir[dir_ids] = True
    is_slave = np.zeros(n, dtype=bool)
    is_slave[ident[:, 0]] = True

    free = active & ~is_dir & ~is_slave
    n_red = int(free.sum())
    red_index = -np.ones(n, dtype=np.int64)
    red_index[free] = np.arange(n_red)

    # Transfer rows: free DOFs map to themselves, slaves to their master.
    row_ids = np.nonzero(active & ~is_dir)[0]
    col_ids = red_index[master_of[row_ids]]
    if np.any(col_ids < 0):
        raise ConstraintError("periodic slave points at a non-free master")
    transfer = sp.csr_matrix(
        (np.ones(len(row_ids)), (row_ids, col_ids)), shape=(n, n_red)
    )

    g = np.zeros(n)
    g[dir_ids] = dir_vals

    a_full = system.matrix()
    rhs = system.rhs - a_full @ g
    a_red = (transfer.T @ a_full @ transfer).tocsr()
    b_red = transfer.T @ rhs
    return ReducedSystem(
        matrix=a_red,
        rhs=b_red,
        transfer=transfer,
        dirichlet_full=g,
        mean_weights=weights,
        active=active,
    )


# -- solver ------------------------------------------------------------------


def solve_spd(reduced: ReducedSystem, rel_tol: float = 1e-10,
              max_iter: int | None = None) -> np.ndarray:
    """Jacobi-preconditioned conjugate gradients on the reduced system.

    Returns the full nodal vector with constraints back-substituted.

    Raises
    ------
    SolverError
        On nonpositive diagonal / negative curvature (matrix not SPD) or
        when ``max_iter`` iterations do not reach ``rel_tol``.
    """
    a = reduced.matrix
    b = reduced.rhs
    n = len(b)
    if n == 0:
        return reduced.recover(np.zeros(0))
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return reduced.recover(np.zeros(n))
    if max_iter is None:
        max_iter = 20 * n

    diag = a.diagonal()
    if np.any(diag <= 0.0):
        k = int(np.argmin(diag))
        raise SolverError(
            f"reduced matrix is not positive definite (diagonal {diag[k]:g} at row {k})"
        )
    inv_diag = 1.0 / diag

    x = np.zeros(n)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    res = b_norm
    for it in range(1, max_iter + 1):
        ap = a @ p
        pap = p @ ap
        if pap <= 0.0:
            raise SolverError(
                "negative curvature encountered; matrix is not positive definite",
                residual=res / b_norm, iterations=it,
            )
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        res = np.linalg.norm(r)
        if res <= rel_tol * b_norm:
            return reduced.recover(x)
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"conjugate gradients did not converge in {max_iter} iterations "
        f"(relative residual {res / b_norm:.3e})",
        residual=res / b_norm, iterations=max_iter,
    )


# -- integration -------------------------------------------------------------


def lumped_mass(mesh: Mesh, subdomain=None) -> np.ndarray:
    """Nodal quadrature weights: one third of incident triangle areas."""
    idx = _select_tris(mesh, subdomain)
    w = np.zeros(mesh.n_nodes)
    np.add.at(w, mesh.triangles[idx].reshape(-1), np.repeat(mesh.areas[idx] / 3.0, 3))
    return w


def _field_values(field, mesh: Mesh) -> np.ndarray:
    if isinstance(field, FieldSolution):
        return field.values
    arr = np.asarray(field, dtype=float)
    if arr.ndim == 0:
        return np.full(mesh.n_nodes, float(arr))
    if len(arr) != mesh.n_nodes:
        raise ValueError("nodal field length does not match the mesh")
    return arr


def integrate(mesh: Mesh, field, region="all", side: str = "block", order: int = 2) -> float:
    """Integral of a nodal field, callable or constant over a region.

    ``region`` is ``"all"``, a subdomain tag (1 matrix / 2 block), or
    ``"interface"``; interface integrals use the trapezoid rule on the
    requested ``side`` trace.  Callable integrands use the degree-``order``
    area rule (2 or 4).
    """
    if region == "interface":
        if callable(field):
            raise ValueError("interface integration expects a nodal field")
        vals = _field_values(field, mesh)
        dofs = mesh.iface_nodes_v if side == "block" else mesh.iface_nodes_u
        if len(dofs) == 0:
            return 0.0
        length = mesh.interface_edge_lengths()
        return float((length * 0.5 * (vals[dofs[:, 0]] + vals[dofs[:, 1]])).sum())

    subdomain = None if region in (None, "all") else region
    idx = _select_tris(mesh, subdomain)
    if len(idx) == 0:
        return 0.0
    if callable(field):
        p = mesh.nodes[mesh.triangles[idx]]
        area = mesh.areas[idx]
        bary, wts = _quad_rule(order)
        total = 0.0
        for bc, w in zip(bary, wts):
            q = np.einsum("i,kid->kd", bc, p)
            total += w * float((area * field(q[:, 0], q[:, 1])).sum())
        return total
    vals = _field_values(field, mesh)
    tri_vals = vals[mesh.triangles[idx]]
    return float((mesh.areas[idx] * tri_vals.mean(axis=1)).sum())


def _quad_rule(order: int):
    if order <= 2:
        return _MIDEDGE_BARY, np.full(3, 1.0 / 3.0)
    return _D4_BARY, _D4_W


def integrate_product(mesh: Mesh, values, fn, subdomain=None, order: int = 2) -> float:
    """Integral of (P1 nodal field) * (smooth callable)."""
    idx = _select_tris(mesh, subdomain)
    if len(idx) == 0:
        return 0.0
    vals = _field_values(values, mesh)
    tri_vals = vals[mesh.triangles[idx]]
    p = mesh.nodes[mesh.triangles[idx]]
    area = mesh.areas[idx]
    bary, wts = _quad_rule(order)
    fn = _as_callable(fn)
    total = 0.0
    for bc, w in zip(bary, wts):
        q = np.einsum("i,kid->kd", bc, p)
        total += w * float((area * (tri_vals @ bc) * fn(q[:, 0], q[:, 1])).sum())
    return total


def l2_norm_sq(mesh: Mesh, values, subdomain=None) -> float:
    """Exact squared L2 norm of a P1 nodal field."""
    idx = _select_tris(mesh, subdomain)
    if len(idx) == 0:
        return 0.0
    vals = _field_values(values, mesh)
    v = vals[mesh.triangles[idx]]
    quad = (v**2).sum(axis=1) + v[:, 0] * v[:, 1] + v[:, 1] * v[:, 2] + v[:, 0] * v[:, 2]
    return float((mesh.areas[idx] / 6.0 * quad).sum())


def l2_error(mesh: Mesh, values, exact, subdomain=None, order: int = 4) -> float:
    """L2 distance between a P1 field and a smooth exact function."""
    idx = _select_tris(mesh, subdomain)
    vals = _field_values(values, mesh)
    tri_vals = vals[mesh.triangles[idx]]
    p = mesh.nodes[mesh.triangles[idx]]
    area = mesh.areas[idx]
    bary, wts = _quad_rule(order)
    total = 0.0
    for bc, w in zip(bary, wts):
        q = np.einsum("i,kid->kd", bc, p)
        diff = tri_vals @ bc - exact(q[:, 0], q[:, 1])
        total += w * float((area * diff**2).sum())
    return float(np.sqrt(total))


def interface_jump_sq(mesh: Mesh, values) -> float:
    """Exact  int_Gamma (u - v)^2 ds  for the duplicated P1 traces."""
    if mesh.n_interface_edges == 0:
        return 0.0
    vals = _field_values(values, mesh)
    ja = vals[mesh.iface_nodes_u[:, 0]] - vals[mesh.iface_nodes_v[:, 0]]
    jb = vals[mesh.iface_nodes_u[:, 1]] - vals[mesh.iface_nodes_v[:, 1]]
    length = mesh.interface_edge_lengths()
    return float((length * (ja**2 + ja * jb + jb**2) / 3.0).sum())


def grad_energy(mesh: Mesh, values, coeff=None, subdomain=None) -> float:
    """int |grad u|^2 (or grad u . coeff grad u) over a subdomain."""
    vals = _field_values(values, mesh)
    g, idx = gradient_per_triangle(mesh, vals, subdomain)
    if coeff is None:
        quad = np.einsum("kd,kd->k", g, g)
    else:
        m = coeff.matrix_at(mesh.centroids[idx])
        quad = np.einsum("kd,kde,ke->k", g, m, g)
    return float((mesh.areas[idx] * quad).sum())
