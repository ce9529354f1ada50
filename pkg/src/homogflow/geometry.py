"""Unit-cell and tiled meshes for a periodic matrix/block microstructure.

The unit cell Y = (0,1)^2 holds an optional compact block Y2 (disk or
axis-aligned square); the surrounding matrix is Y1.  Meshes start from a
structured grid of squares, each split into four triangles through its
center, and nodes adjacent to the block boundary are snapped onto the exact
curve so that element edges trace a polygonal approximation of the
interface with vertices on the curve.  Interface nodes are then duplicated
(one matrix-side copy, one block-side copy) so nodal fields may jump across
the interface.

The same machinery tiles the unit cell m x m into the macro domain
Omega = (0,1)^2 with cell size eps = 1/m, merging nodes on shared cell
faces and keeping the interface duplicates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, MeshError, PairingError, TopologyError

# Tolerance for "two coordinates are the same point" decisions.
COORD_TOL = 1e-12


@dataclass(frozen=True)
class Disk:
    """Circular block: center point and radius."""

    center: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class SquareBlock:
    """Axis-aligned square block: center point and half side length."""

    center: tuple[float, float]
    half_width: float


@dataclass(frozen=True)
class CellGeometry:
    """Unit-cell description: optional block shape plus target resolution.

    Parameters
    ----------
    block : Disk | SquareBlock | None
        Block occupying Y2.  ``None`` means the cell is all matrix (Y2
        empty), which is useful for reference computations.
    resolution : int
        Number of grid edges per unit length of the background grid.

    The block must be compactly contained in Y with a margin of at least
    ``2 / resolution`` from every side of the cell; this guarantees that the
    tiled interface never touches cell faces and that the matrix part stays
    connected under periodic extension.
    """

    block: Disk | SquareBlock | None
    resolution: int

    def validate(self) -> None:
        if self.resolution < 2:
            raise GeometryError(f"resolution must be >= 2, got {self.resolution}")
        if self.block is None:
            return
        margin = self.boundary_margin()
        required = 2.0 / self.resolution
        if margin < required - COORD_TOL:
            raise GeometryError(
                f"block boundary must stay at least 2/n = {required:.6g} away "
                f"from the cell boundary; margin is {margin:.6g}"
            )

    def boundary_margin(self) -> float:
        """Distance from the block boundary to the cell boundary."""
        if self.block is None:
            return 0.5
        cx, cy = self.block.center
        if isinstance(self.block, Disk):
            r = self.block.radius
        else:
            r = self.block.half_width
        if r <= 0:
            raise GeometryError("block size must be positive")
        return min(cx, 1.0 - cx, cy, 1.0 - cy) - r

    def level_set(self, pts: np.ndarray) -> np.ndarray:
        """Signed distance-like function: negative inside the block."""
        if self.block is None:
            return np.full(len(pts), np.inf)
        d = pts - np.asarray(self.block.center)
        if isinstance(self.block, Disk):
            return np.hypot(d[:, 0], d[:, 1]) - self.block.radius
        return np.max(np.abs(d), axis=1) - self.block.half_width

    def project_to_block_boundary(self, pts: np.ndarray) -> np.ndarray:
        """Project points onto the block boundary curve."""
        if self.block is None:
            raise GeometryError("cell has no block")
        c = np.asarray(self.block.center)
        d = pts - c
        if isinstance(self.block, Disk):
            r = np.hypot(d[:, 0], d[:, 1])
            return c + self.block.radius * d / r[:, None]
        w = self.block.half_width
        out = np.clip(d, -w, w)
        inside = np.max(np.abs(d), axis=1) < w
        if np.any(inside):
            di = out[inside]
            j = np.argmax(np.abs(di), axis=1)
            di[np.arange(len(di)), j] = w * np.sign(di[np.arange(len(di)), j])
            out[inside] = di
        return c + out

    def curvature_radius(self) -> float:
        """Smallest curvature radius of the block boundary (inf for squares)."""
        if isinstance(self.block, Disk):
            return self.block.radius
        return np.inf

    def block_area(self) -> float:
        if self.block is None:
            return 0.0
        if isinstance(self.block, Disk):
            return np.pi * self.block.radius**2
        return (2.0 * self.block.half_width) ** 2

    def block_perimeter(self) -> float:
        if self.block is None:
            return 0.0
        if isinstance(self.block, Disk):
            return 2.0 * np.pi * self.block.radius
        return 8.0 * self.block.half_width

    def to_dict(self) -> dict:
        if self.block is None:
            blk = None
        elif isinstance(self.block, Disk):
            blk = {
                "shape": "disk",
                "center": list(self.block.center),
                "radius": self.block.radius,
            }
        else:
            blk = {
                "shape": "square",
                "center": list(self.block.center),
                "half_width": self.block.half_width,
            }
        return {"block": blk, "resolution": self.resolution}


MATRIX_TAG = 1
BLOCK_TAG = 2


@dataclass
class Mesh:
    """Conforming P1 triangulation with subdomain tags and interface data.

    Degrees of freedom coincide with node indices.  Where the mesh carries a
    matrix/block interface, the interface nodes appear twice in ``nodes``:
    the original (matrix-side) copy referenced by tag-1 triangles and a
    block-side copy referenced by tag-2 triangles.  ``node_pairs`` lists the
    (matrix copy, block copy) index pairs.

    Interface edges are stored side by side: ``iface_nodes_u[k]`` holds the
    matrix-side endpoint indices of edge k, ``iface_nodes_v[k]`` the
    coincident block-side indices, ``iface_tri_u``/``iface_tri_v`` the
    adjacent triangles, and ``iface_normals[k]`` the unit normal pointing
    from the matrix into the block.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    tri_tags: np.ndarray
    iface_nodes_u: np.ndarray
    iface_nodes_v: np.ndarray
    iface_tri_u: np.ndarray
    iface_tri_v: np.ndarray
    iface_normals: np.ndarray
    node_pairs: np.ndarray
    boundary_edges: np.ndarray
    _areas: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_interface_edges(self) -> int:
        return len(self.iface_nodes_u)

    @property
    def areas(self) -> np.ndarray:
        if self._areas is None:
            p = self.nodes[self.triangles]
            v1 = p[:, 1] - p[:, 0]
            v2 = p[:, 2] - p[:, 0]
            self._areas = 0.5 * (v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])
        return self._areas

    @property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    @property
    def boundary_nodes(self) -> np.ndarray:
        if len(self.boundary_edges) == 0:
            return np.empty(0, dtype=np.int64)
        return np.unique(self.boundary_edges)

    def subdomain_area(self, tag: int) -> float:
        return float(self.areas[self.tri_tags == tag].sum())

    def interface_length(self) -> float:
        if self.n_interface_edges == 0:
            return 0.0
        a = self.nodes[self.iface_nodes_u[:, 0]]
        b = self.nodes[self.iface_nodes_u[:, 1]]
        return float(np.hypot(*(b - a).T).sum())

    def interface_edge_lengths(self) -> np.ndarray:
        a = self.nodes[self.iface_nodes_u[:, 0]]
        b = self.nodes[self.iface_nodes_u[:, 1]]
        return np.hypot(*(b - a).T)

    def subdomain_dofs(self, tag: int) -> np.ndarray:
        """Sorted unique node indices referenced by triangles of ``tag``."""
        return np.unique(self.triangles[self.tri_tags == tag])


@dataclass
class PeriodicMap:
    """Master/slave identification of opposite-face boundary nodes.

    ``pairs[k] = (slave, master)`` identifies one non-corner boundary node
    with its counterpart one lattice vector away; the four cell corners form
    a single group collapsing onto ``corner_master``.
    """

    pairs: np.ndarray
    corner_master: int
    corner_slaves: np.ndarray

    def all_identifications(self) -> np.ndarray:
        """(slave, master) rows including the corner group."""
        corner = np.column_stack(
            [self.corner_slaves, np.full(len(self.corner_slaves), self.corner_master)]
        )
        if len(self.pairs) == 0:
            return corner
        return np.vstack([self.pairs, corner])


def _structured_crossed_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n x n grid of squares, each split into 4 triangles via its center.

    The crossed split keeps the mesh symmetric under reflections about the
    cell midplanes and under quarter turns, which the cell problems rely on
    for symmetry checks.
    """
    xs = np.linspace(0.0, 1.0, n + 1)
    gx, gy = np.meshgrid(xs, xs, indexing="xy")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    cc = 0.5 * (xs[:-1] + xs[1:])
    cx, cy = np.meshgrid(cc, cc, indexing="xy")
    centers = np.column_stack([cx.ravel(), cy.ravel()])
    nodes = np.vstack([grid, centers])

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    i = i.ravel()
    j = j.ravel()
    bl = j * (n + 1) + i
    br = bl + 1
    tl = bl + (n + 1)
    tr = tl + 1
    c = (n + 1) ** 2 + j * n + i
    tris = np.empty((4 * n * n, 3), dtype=np.int64)
    tris[0::4] = np.column_stack([bl, br, c])
    tris[1::4] = np.column_stack([br, tr, c])
    tris[2::4] = np.column_stack([tr, tl, c])
    tris[3::4] = np.column_stack([tl, bl, c])
    return nodes, tris


def _unique_edges(triangles: np.ndarray) -> np.ndarray:
    e = np.vstack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def _edge_triangle_incidence(triangles: np.ndarray):
    """Map sorted edge -> list of incident triangle indices."""
    e = np.vstack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e.sort(axis=1)
    tri_of = np.tile(np.arange(len(triangles)), 3)
    order = np.lexsort((e[:, 1], e[:, 0]))
    e = e[order]
    tri_of = tri_of[order]
    uniq, start, counts = np.unique(e, axis=0, return_index=True, return_counts=True)
    return uniq, start, counts, tri_of


def _snap_nodes_to_block(geom: CellGeometry, nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Move grid nodes adjacent to the block boundary onto the exact curve.

    A node is snapped when it is the closer endpoint of an edge that
    strictly crosses the boundary, or when it sits within the curvature
    band ~h^2/R of the curve (the band catches near-tangency cases where a
    straddling triangle would otherwise keep all vertices off the curve).

    Where the curve runs nearly parallel to a grid line, all three vertices
    of a triangle can land on the curve and the triangle flips.  A thinning
    pass repairs this: one vertex of such a triangle is released back to
    its grid position, chosen so that every strictly crossing edge keeps a
    snapped endpoint (the interface then follows the chord between the two
    remaining vertices and the released node becomes a thin but valid
    element).
    """
    h = 1.0 / geom.resolution
    d = geom.level_set(nodes)
    band = max(COORD_TOL, 0.75 * h * h / geom.curvature_radius())
    mark = np.abs(d) <= band

    edges = _unique_edges(triangles)
    da, db = d[edges[:, 0]], d[edges[:, 1]]
    crossing = ((da < -COORD_TOL) & (db > COORD_TOL)) | ((da > COORD_TOL) & (db < -COORD_TOL))
    ce = edges[crossing]
    near_is_a = np.abs(d[ce[:, 0]]) <= np.abs(d[ce[:, 1]])
    mark[ce[near_is_a, 0]] = True
    mark[ce[~near_is_a, 1]] = True

    neighbors: dict[int, list[int]] | None = None
    for _ in range(20):
        snapped = nodes.copy()
        snapped[mark] = geom.project_to_block_boundary(nodes[mark])
        areas = _signed_areas(snapped, triangles)
        bad = np.nonzero(areas <= 1e-14)[0]
        if len(bad) == 0:
            break
        if neighbors is None:
            neighbors = {}
            for a, b in edges:
                neighbors.setdefault(int(a), []).append(int(b))
                neighbors.setdefault(int(b), []).append(int(a))
        progress = False
        for t in bad:
            vs = triangles[t]
            if not np.all(mark[vs]):
                continue
            for v in sorted(vs.tolist(), key=lambda q: -abs(d[q])):
                if abs(d[v]) <= COORD_TOL:
                    continue  # genuinely on the curve; keep
                if _release_keeps_coverage(v, mark, d, neighbors):
                    mark[v] = False
                    progress = True
                    break
        if not progress:
            break

    snapped = nodes.copy()
    snapped[mark] = geom.project_to_block_boundary(nodes[mark])

    # After snapping, no element edge may still cross the curve strictly.
    d2 = geom.level_set(snapped)
    d2[mark] = 0.0
    da, db = d2[edges[:, 0]], d2[edges[:, 1]]
    eps_chk = 1e-9
    still = ((da < -eps_chk) & (db > eps_chk)) | ((da > eps_chk) & (db < -eps_chk))
    if np.any(still):
        raise MeshError(
            f"{int(still.sum())} element edges still cross the block boundary "
            "after node snapping; refine the resolution"
        )
    return snapped


def _release_keeps_coverage(v: int, mark: np.ndarray, d: np.ndarray,
                            neighbors: dict[int, list[int]]) -> bool:
    """May node v return to its grid position without exposing a crossing?"""
    for y in neighbors[v]:
        if mark[y]:
            continue
        if (d[v] < -COORD_TOL and d[y] > COORD_TOL) or (d[v] > COORD_TOL and d[y] < -COORD_TOL):
            return False
    return True


def _signed_areas(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = nodes[triangles]
    v1 = p[:, 1] - p[:, 0]
    v2 = p[:, 2] - p[:, 0]
    return 0.5 * (v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])


def _boundary_edges_of(triangles: np.ndarray, exclude: set[tuple[int, int]] | None = None) -> np.ndarray:
    uniq, start, counts, tri_of = _edge_triangle_incidence(triangles)
    single = uniq[counts == 1]
    if exclude:
        keep = [k for k in range(len(single)) if tuple(single[k]) not in exclude]
        single = single[keep]
    return single.astype(np.int64)


def build_unit_cell_mesh(geom: CellGeometry) -> Mesh:
    """Triangulate the unit cell, conforming to the block boundary.

    Parameters
    ----------
    geom : CellGeometry
        Validated cell description (resolution n, optional block).

    Returns
    -------
    Mesh
        Triangulation with positive triangles, subdomain tags, interface
        edges whose vertices lie on the exact block boundary, duplicated
        interface nodes, and outer boundary edges.  Nodes on the cell
        boundary sit at exactly matching positions on opposite faces.

    Raises
    ------
    GeometryError
        If the block violates the compact-containment margin.
    MeshError
        If snapping produces an inverted/degenerate triangle or the
        interface polyline is not closed.
    """
    geom.validate()
    nodes, tris = _structured_crossed_grid(geom.resolution)

    if geom.block is None:
        tags = np.full(len(tris), MATRIX_TAG, dtype=np.int64)
        bedges = _boundary_edges_of(tris)
        empty_pairs = np.empty((0, 2), dtype=np.int64)
        return Mesh(
            nodes=nodes,
            triangles=tris,
            tri_tags=tags,
            iface_nodes_u=np.empty((0, 2), dtype=np.int64),
            iface_nodes_v=np.empty((0, 2), dtype=np.int64),
            iface_tri_u=np.empty(0, dtype=np.int64),
            iface_tri_v=np.empty(0, dtype=np.int64),
            iface_normals=np.empty((0, 2)),
            node_pairs=empty_pairs,
            boundary_edges=bedges,
        )

    nodes = _snap_nodes_to_block(geom, nodes, tris)
    areas = _signed_areas(nodes, tris)
    if np.any(areas <= 1e-14):
        raise MeshError(
            f"snapping produced {int((areas <= 1e-14).sum())} inverted or "
            "degenerate triangles; refine the resolution"
        )

    centroid_level = geom.level_set(tris_centroids(nodes, tris))
    tags = np.where(centroid_level < 0.0, BLOCK_TAG, MATRIX_TAG).astype(np.int64)
    if not np.any(tags == BLOCK_TAG):
        raise MeshError("block too small for the resolution: no block triangles")

    # Outer boundary before interface duplication (interface is interior).
    bedges = _boundary_edges_of(tris)

    # Interface edges: interior edges shared by a matrix and a block triangle.
    uniq, start, counts, tri_of = _edge_triangle_incidence(tris)
    iface_u = []
    iface_tm = []
    iface_tb = []
    for k in np.nonzero(counts == 2)[0]:
        t1, t2 = tri_of[start[k]], tri_of[start[k] + 1]
        if tags[t1] == tags[t2]:
            continue
        tm, tb = (t1, t2) if tags[t1] == MATRIX_TAG else (t2, t1)
        iface_u.append(uniq[k])
        iface_tm.append(tm)
        iface_tb.append(tb)
    iface_u = np.array(iface_u, dtype=np.int64).reshape(-1, 2)
    iface_tm = np.array(iface_tm, dtype=np.int64)
    iface_tb = np.array(iface_tb, dtype=np.int64)
    if len(iface_u) == 0:
        raise MeshError("block produced no interface edges")

    on_curve = np.abs(geom.level_set(nodes[np.unique(iface_u)])) < 1e-9
    if not np.all(on_curve):
        raise MeshError("interface edge vertex off the block boundary curve")

    # Closed polyline: every interface node has exactly two incident edges.
    ids, cnt = np.unique(iface_u, return_counts=True)
    if not np.all(cnt == 2):
        raise MeshError("interface polyline is not closed")

    # Duplicate interface nodes; block triangles switch to the block copies.
    iface_node_ids = ids
    n_orig = len(nodes)
    copies = np.arange(n_orig, n_orig + len(iface_node_ids), dtype=np.int64)
    nodes = np.vstack([nodes, nodes[iface_node_ids]])
    remap = np.arange(len(nodes), dtype=np.int64)
    remap[iface_node_ids] = copies
    block_rows = tags == BLOCK_TAG
    tris[block_rows] = remap[tris[block_rows]]
    iface_v = remap[iface_u]
    node_pairs = np.column_stack([iface_node_ids, copies])

    normals = _interface_normals(nodes, tris, iface_u, iface_tb)

    return Mesh(
        nodes=nodes,
        triangles=tris,
        tri_tags=tags,
        iface_nodes_u=iface_u,
        iface_nodes_v=iface_v,
        iface_tri_u=iface_tm,
        iface_tri_v=iface_tb,
        iface_normals=normals,
        node_pairs=node_pairs,
        boundary_edges=bedges,
    )


def tris_centroids(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    return nodes[triangles].mean(axis=1)


def _interface_normals(nodes, tris, iface_u, iface_tb) -> np.ndarray:
    a = nodes[iface_u[:, 0]]
    b = nodes[iface_u[:, 1]]
    t = b - a
    n = np.column_stack([t[:, 1], -t[:, 0]])
    n /= np.hypot(n[:, 0], n[:, 1])[:, None]
    mid = 0.5 * (a + b)
    toward_block = tris_centroids(nodes, tris[iface_tb]) - mid
    flip = np.einsum("ij,ij->i", n, toward_block) < 0.0
    n[flip] = -n[flip]
    return n


def build_periodic_map(mesh: Mesh) -> PeriodicMap:
    """Pair opposite-face boundary nodes of a unit-cell mesh.

    Right-face and top-face nodes become slaves of their left/bottom
    counterparts; the four corners collapse onto the (0,0) corner.

    Raises
    ------
    PairingError
        If any boundary node has no counterpart within ``COORD_TOL``.
    """
    bn = mesh.boundary_nodes
    x = mesh.nodes[bn, 0]
    y = mesh.nodes[bn, 1]
    on_l = np.abs(x) <= COORD_TOL
    on_r = np.abs(x - 1.0) <= COORD_TOL
    on_b = np.abs(y) <= COORD_TOL
    on_t = np.abs(y - 1.0) <= COORD_TOL
    if not np.all(on_l | on_r | on_b | on_t):
        raise PairingError("boundary node not on any face of the unit cell")

    is_corner = (on_l | on_r) & (on_b | on_t)
    corners = bn[is_corner]
    if len(corners) != 4:
        raise PairingError(f"expected 4 corner nodes, found {len(corners)}")
    corner_master = int(corners[np.lexsort((mesh.nodes[corners, 1], mesh.nodes[corners, 0]))[0]])
    corner_slaves = corners[corners != corner_master]

    def match(slaves: np.ndarray, masters: np.ndarray, axis: int) -> np.ndarray:
        sc = mesh.nodes[slaves, axis]
        mc = mesh.nodes[masters, axis]
        order_s = np.argsort(sc)
        order_m = np.argsort(mc)
        if len(slaves) != len(masters):
            raise PairingError(
                f"face node counts differ: {len(slaves)} vs {len(masters)}"
            )
        if len(slaves) and np.max(np.abs(sc[order_s] - mc[order_m])) > COORD_TOL:
            raise PairingError("opposite-face node positions do not match within 1e-12")
        return np.column_stack([slaves[order_s], masters[order_m]])

    right = bn[on_r & ~is_corner]
    left = bn[on_l & ~is_corner]
    top = bn[on_t & ~is_corner]
    bottom = bn[on_b & ~is_corner]
    pairs = np.vstack([match(right, left, 1), match(top, bottom, 0)]).astype(np.int64)

    claimed = set(pairs[:, 0]) | set(pairs[:, 1]) | set(corners.tolist())
    if claimed != set(bn.tolist()):
        raise PairingError("some boundary nodes are neither paired nor corners")
    return PeriodicMap(pairs=pairs, corner_master=corner_master,
                       corner_slaves=corner_slaves.astype(np.int64))


def build_epsilon_mesh(geom: CellGeometry, eps: float) -> Mesh:
    """Tile the scaled unit-cell mesh m x m over Omega = (0,1)^2, eps = 1/m.

    Nodes on shared cell faces are merged; interface nodes keep their
    duplicated matrix/block copies in every tile; outer boundary edges are
    collected for the Dirichlet condition of the micro model.

    Raises
    ------
    ValueError
        If ``eps`` is not the reciprocal of an integer m >= 2.
    """
    m = int(round(1.0 / eps))
    if m < 2 or abs(eps * m - 1.0) > 1e-9:
        raise ValueError(f"eps must be 1/m with integer m >= 2, got {eps}")

    unit = build_unit_cell_mesh(geom)
    n = geom.resolution
    quantum = n * m

    # Unit-cell boundary nodes are unsnapped lattice points, so an integer
    # lattice key merges them exactly across tiles.
    unit_bnodes = unit.boundary_nodes
    is_face_node = np.zeros(unit.n_nodes, dtype=bool)
    is_face_node[unit_bnodes] = True

    shared: dict[tuple[int, int], int] = {}
    tile_maps = []
    coords: list[np.ndarray] = []
    next_id = 0
    for j in range(m):
        for i in range(m):
            pts = (unit.nodes + np.array([i, j], dtype=float)) * eps
            node_map = np.empty(unit.n_nodes, dtype=np.int64)
            keys = np.rint(pts * quantum).astype(np.int64)
            for k in range(unit.n_nodes):
                if is_face_node[k]:
                    key = (int(keys[k, 0]), int(keys[k, 1]))
                    got = shared.get(key)
                    if got is None:
                        shared[key] = next_id
                        node_map[k] = next_id
                        coords.append(pts[k])
                        next_id += 1
                    else:
                        node_map[k] = got
                else:
                    node_map[k] = next_id
                    coords.append(pts[k])
                    next_id += 1
            tile_maps.append(node_map)
    nodes = np.array(coords)

    t_unit = unit.n_triangles
    tris = np.empty((m * m * t_unit, 3), dtype=np.int64)
    tags = np.tile(unit.tri_tags, m * m)
    iface_u = []
    iface_v = []
    iface_tm = []
    iface_tb = []
    pairs = []
    for tile, node_map in enumerate(tile_maps):
        tris[tile * t_unit:(tile + 1) * t_unit] = node_map[unit.triangles]
        iface_u.append(node_map[unit.iface_nodes_u])
        iface_v.append(node_map[unit.iface_nodes_v])
        iface_tm.append(unit.iface_tri_u + tile * t_unit)
        iface_tb.append(unit.iface_tri_v + tile * t_unit)
        pairs.append(node_map[unit.node_pairs])

    mesh = Mesh(
        nodes=nodes,
        triangles=tris,
        tri_tags=tags,
        iface_nodes_u=np.vstack(iface_u) if iface_u else np.empty((0, 2), dtype=np.int64),
        iface_nodes_v=np.vstack(iface_v) if iface_v else np.empty((0, 2), dtype=np.int64),
        iface_tri_u=np.concatenate(iface_tm) if iface_tm else np.empty(0, dtype=np.int64),
        iface_tri_v=np.concatenate(iface_tb) if iface_tb else np.empty(0, dtype=np.int64),
        iface_normals=np.tile(unit.iface_normals, (m * m, 1)),
        node_pairs=np.vstack(pairs) if pairs else np.empty((0, 2), dtype=np.int64),
        boundary_edges=np.empty((0, 2), dtype=np.int64),
    )

    exclude = set(map(tuple, np.sort(mesh.iface_nodes_u, axis=1)))
    exclude |= set(map(tuple, np.sort(mesh.iface_nodes_v, axis=1)))
    mesh.boundary_edges = _boundary_edges_of(mesh.triangles, exclude)
    return mesh


def extract_interface_pairing(mesh: Mesh) -> np.ndarray:
    """Validated (matrix copy, block copy) node pairs of the interface.

    Returns
    -------
    numpy.ndarray, shape (K, 2)
        One row per geometric interface node.

    Raises
    ------
    TopologyError
        If a duplicate is orphaned, an interface edge endpoint has no pair,
        or paired copies are not geometrically coincident.
    """
    pairs = mesh.node_pairs
    if len(pairs) == 0:
        return pairs
    u_ids = np.unique(mesh.iface_nodes_u)
    v_ids = np.unique(mesh.iface_nodes_v)
    if not (np.array_equal(np.sort(pairs[:, 0]), u_ids)
            and np.array_equal(np.sort(pairs[:, 1]), v_ids)):
        raise TopologyError("interface pairing does not cover the interface edges")
    if len(np.unique(pairs[:, 0])) != len(pairs) or len(np.unique(pairs[:, 1])) != len(pairs):
        raise TopologyError("orphan duplicate: a node appears in two pairs")
    gap = np.abs(mesh.nodes[pairs[:, 0]] - mesh.nodes[pairs[:, 1]]).max()
    if gap != 0.0:
        raise TopologyError(f"paired interface copies are not coincident (gap {gap:g})")
    return pairs
