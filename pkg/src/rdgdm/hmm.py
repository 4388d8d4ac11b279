"""Concrete discretisations: hybrid cell/face finite volumes and P1 FEM.

The hybrid scheme carries one unknown per cell and one per face.  Its
reconstructed gradient on the sub-triangle joining cell centroid and face F is
the consistent cell average

    G_K(w) = (1/|K|) sum_F |F| w_F n_KF

plus the stabilizing correction sqrt(2) * eta * R_KF(w) / d_KF * n_KF with
R_KF(w) = w_F - w_K - G_K(w) . (x_F - x_K), the standard construction for
polytopal cells (eta is the dimensionless stabilization weight).  The P1
builder provides a conforming cross-check on simplicial meshes.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from .exceptions import GeometryError, UnsupportedMeshError
from .gdcore import GradientDiscretisation

_SQRT2 = math.sqrt(2.0)


def build_hmm(mesh, stab_coeff=1.0):
    """Hybrid cell/face discretisation of a polygonal mesh.

    DOF layout: cells first, then faces; boundary-face DOFs are exactly the
    non-interior DOFs.  Requires every cell star-shaped with respect to its
    centroid (positive centroid-to-face distances).
    """
    if stab_coeff <= 0.0:
        raise ValueError("stab_coeff must be positive")
    n_cells = mesh.n_cells
    n_faces = mesh.n_faces
    n_dofs = n_cells + n_faces

    interior_mask = np.ones(n_dofs, dtype=bool)
    interior_mask[n_cells + np.flatnonzero(mesh.boundary_flags)] = False

    dof_points = np.vstack((mesh.cell_centroid, mesh.face_centroid))

    pi = sp.csr_matrix(
        (np.ones(n_cells), (np.arange(n_cells), np.arange(n_cells))),
        shape=(n_cells, n_dofs),
    )

    n_regions = sum(len(f) for f in mesh.cell_faces)
    grad_weights = np.empty(n_regions)
    grad_points = np.empty((n_regions, 2))
    grad_cell = np.empty(n_regions, dtype=int)

    rows, cols, vals = [], [], []
    region = 0
    for k in range(n_cells):
        f_ids = mesh.cell_faces[k]
        area = mesh.cell_area[k]
        xk = mesh.cell_centroid[k]
        normals = mesh.outward_normals(k)            # (nf, 2)
        lengths = mesh.face_length[f_ids]
        xf = mesh.face_centroid[f_ids]
        rel = xf - xk                                 # (nf, 2)
        dist = (normals * rel).sum(axis=1)            # signed centroid-face distance
        if np.any(dist <= 1e-14 * mesh.h_m):
            raise GeometryError(
                f"cell {k} is not star-shaped w.r.t. its centroid "
                f"(min face distance {dist.min():.3e})"
            )

        face_dofs = n_cells + f_ids
        consist = normals * (lengths / area)[:, None]  # G_K coefficient per face DOF

        for e, fid in enumerate(f_ids):
            grad_weights[region] = 0.5 * lengths[e] * dist[e]
            a, b = mesh.faces[fid]
            grad_points[region] = (xk + mesh.vertices[a] + mesh.vertices[b]) / 3.0
            grad_cell[region] = k

            # residual coefficients: w_F - w_K - G_K(w) . rel_e
            r_face = -(consist @ rel[e])
            r_face[e] += 1.0
            stab = (_SQRT2 * stab_coeff / dist[e]) * normals[e]

            coeff = consist + np.outer(r_face, stab)   # per face DOF, (nf, 2)
            for comp in (0, 1):
                rows.extend([2 * region + comp] * (len(f_ids) + 1))
                cols.extend(face_dofs.tolist() + [k])
                vals.extend(coeff[:, comp].tolist() + [-stab[comp]])
            region += 1

    grad = sp.csr_matrix(
        (vals, (rows, cols)), shape=(2 * n_regions, n_dofs)
    )

    return GradientDiscretisation(
        name="hmm",
        mesh=mesh,
        n_dofs=n_dofs,
        interior_mask=interior_mask,
        Pi=pi,
        Grad=grad,
        quad_weights=mesh.cell_area.copy(),
        dof_points=dof_points,
        value_points=mesh.cell_centroid.copy(),
        grad_weights=grad_weights,
        grad_points=grad_points,
        grad_cell=grad_cell,
    )


def build_p1(mesh):
    """Conforming P1 finite elements on a triangular mesh.

    Vertex DOFs; reconstructed values are the element-centroid averages and
    the reconstructed gradient is the (constant) element gradient.
    """
    if any(len(c) != 3 for c in mesh.cells):
        raise UnsupportedMeshError("P1 requires a simplicial (triangular) mesh")

    n_cells = mesh.n_cells
    n_dofs = mesh.n_vertices

    interior_mask = np.ones(n_dofs, dtype=bool)
    bnd_faces = np.flatnonzero(mesh.boundary_flags)
    interior_mask[np.unique(mesh.faces[bnd_faces])] = False

    tri = np.vstack(mesh.cells)                       # (n_cells, 3)

    # value reconstruction: centroid value = mean of the vertex values
    rows = np.repeat(np.arange(n_cells), 3)
    pi = sp.csr_matrix(
        (np.full(3 * n_cells, 1.0 / 3.0), (rows, tri.ravel())),
        shape=(n_cells, n_dofs),
    )

    # hat gradients: grad(lambda_i) = rot(-90)(p_{i+1} - p_{i+2}) / (2A)
    p = mesh.vertices[tri]                            # (n_cells, 3, 2)
    edge = p[:, [1, 2, 0], :] - p[:, [2, 0, 1], :]    # p_{i+1} - p_{i+2}
    two_a = 2.0 * mesh.cell_area
    gx = edge[:, :, 1] / two_a[:, None]
    gy = -edge[:, :, 0] / two_a[:, None]

    grows, gcols, gvals = [], [], []
    for i in range(3):
        grows.append(2 * np.arange(n_cells))
        gcols.append(tri[:, i])
        gvals.append(gx[:, i])
        grows.append(2 * np.arange(n_cells) + 1)
        gcols.append(tri[:, i])
        gvals.append(gy[:, i])
    grad = sp.csr_matrix(
        (np.concatenate(gvals), (np.concatenate(grows), np.concatenate(gcols))),
        shape=(2 * n_cells, n_dofs),
    )

    return GradientDiscretisation(
        name="p1",
        mesh=mesh,
        n_dofs=n_dofs,
        interior_mask=interior_mask,
        Pi=pi,
        Grad=grad,
        quad_weights=mesh.cell_area.copy(),
        dof_points=mesh.vertices.copy(),
        value_points=mesh.cell_centroid.copy(),
        grad_weights=mesh.cell_area.copy(),
        grad_points=mesh.cell_centroid.copy(),
        grad_cell=np.arange(n_cells),
    )


def build_scheme(name, mesh, stab_coeff=1.0):
    """Dispatch by scheme name ('hmm' or 'p1')."""
    if name == "hmm":
        return build_hmm(mesh, stab_coeff=stab_coeff)
    if name == "p1":
        return build_p1(mesh)
    raise ValueError(f"unknown scheme {name!r}; expected 'hmm' or 'p1'")
