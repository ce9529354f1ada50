"""Pointwise P1 evaluation of nodal fields at arbitrary locations."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Mesh

_BARY_SLACK = 1e-9


def interpolate_p1(mesh: Mesh, values: np.ndarray, points: np.ndarray,
                   subdomain=None) -> np.ndarray:
    """Evaluate a P1 nodal field at the given points.

    Candidate triangles are found through a KD-tree over centroids; points
    that fall just outside the (sub)triangulation -- e.g. on the polygonal
    approximation of a curved boundary -- are evaluated with clamped
    barycentric coordinates of the best nearby triangle.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if subdomain is None:
        tri_idx = np.arange(mesh.n_triangles)
    else:
        tri_idx = np.nonzero(mesh.tri_tags == subdomain)[0]
    if len(tri_idx) == 0:
        raise ValueError("no triangles in the requested subdomain")
    tris = mesh.triangles[tri_idx]
    p0 = mesh.nodes[tris[:, 0]]
    edge1 = mesh.nodes[tris[:, 1]] - p0
    edge2 = mesh.nodes[tris[:, 2]] - p0
    det = edge1[:, 0] * edge2[:, 1] - edge1[:, 1] * edge2[:, 0]
    # Inverse of [edge1 edge2]; triangles are positively oriented.
    inv = np.empty((len(tris), 2, 2))
    inv[:, 0, 0] = edge2[:, 1] / det
    inv[:, 0, 1] = -edge2[:, 0] / det
    inv[:, 1, 0] = -edge1[:, 1] / det
    inv[:, 1, 1] = edge1[:, 0] / det

    centroids = mesh.centroids[tri_idx]
    tree = cKDTree(centroids)
    k = min(12, len(tri_idx))
    _, neighbors = tree.query(points, k=k)
    neighbors = np.atleast_2d(neighbors)

    out = np.empty(len(points))
    best_bary = np.full((len(points), 3), -np.inf)
    best_tri = np.zeros(len(points), dtype=np.int64)
    found = np.zeros(len(points), dtype=bool)
    vals_tri = values[tris]
    for col in range(neighbors.shape[1]):
        cand = neighbors[:, col]
        d = points - p0[cand]
        lam12 = np.einsum("kde,ke->kd", inv[cand], d)
        lam0 = 1.0 - lam12.sum(axis=1)
        bary = np.column_stack([lam0, lam12])
        inside = bary.min(axis=1) >= -_BARY_SLACK
        take = inside & ~found
        if np.any(take):
            out[take] = np.einsum("ki,ki->k", bary[take], vals_tri[cand[take]])
            found[take] = True
        better = (~found) & (bary.min(axis=1) > best_bary.min(axis=1))
        best_bary[better] = bary[better]
        best_tri[better] = cand[better]
        if found.all():
            break

    if not found.all():
        miss = ~found
        bary = np.clip(best_bary[miss], 0.0, None)
        bary /= bary.sum(axis=1, keepdims=True)
        out[miss] = np.einsum("ki,ki->k", bary, vals_tri[best_tri[miss]])
    return out
