"""Planar polygonal meshes of the unit square.

Provides the mesh data structure (cell/face/vertex incidence plus derived
geometry), three structured mesh families (triangular, hexagonal, cartesian)
with halving refinement, and a small text file format.

Mesh file grammar (UTF-8, ``#`` starts a comment line)::

    vertices
    <index> <x> <y>          # indices consecutive from 0, 17-digit decimals
    ...
    cells
    <index> <v0> <v1> ...    # CCW vertex indices, >= 3 per cell
    ...
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import MeshParseError, MeshValidationError

FAMILIES = ("triangular", "hexagonal", "cartesian")

_GEOM_TOL = 1e-12


@dataclass
class Mesh:
    """Conforming polygonal mesh with precomputed incidence and geometry.

    Faces carry a fixed orientation: ``face_normal[f]`` points outward from
    ``face_cells[f, 0]``.  Per-cell outward normals are recovered through
    ``cell_face_sign``.  Instances are immutable by convention once built.
    """

    vertices: np.ndarray          # (n_vertices, 2)
    cells: list                   # per cell: int array of CCW vertex indices
    faces: np.ndarray             # (n_faces, 2) vertex index pairs
    face_cells: np.ndarray        # (n_faces, 2), second entry -1 on boundary
    cell_faces: list              # per cell: int array of face indices (edge order)
    cell_face_sign: list          # per cell: +1/-1, outward = sign * face_normal
    cell_area: np.ndarray         # (n_cells,)
    cell_centroid: np.ndarray     # (n_cells, 2)
    face_length: np.ndarray       # (n_faces,)
    face_centroid: np.ndarray     # (n_faces, 2)
    face_normal: np.ndarray       # (n_faces, 2), unit length
    boundary_flags: np.ndarray    # (n_faces,) bool
    h_m: float                    # max cell diameter
    family: str = "custom"

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_faces(self):
        return len(self.faces)

    def outward_normals(self, k):
        """Outward unit normals of cell ``k``, one row per face (edge order)."""
        f = self.cell_faces[k]
        return self.face_normal[f] * self.cell_face_sign[k][:, None]


def build_mesh(vertices, cells, family="custom"):
    """Assemble a :class:`Mesh` from vertex coordinates and CCW cell lists.

    Derives the face table, adjacency, geometry and the mesh size, then
    checks every structural invariant.  Raises
    :class:`~rdgdm.exceptions.MeshValidationError` on inconsistent input.
    """
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshValidationError("vertex array must have shape (n, 2)")
    n_vertices = len(vertices)
    cells = [np.asarray(c, dtype=int) for c in cells]

    for k, cell in enumerate(cells):
        if len(cell) < 3:
            raise MeshValidationError(f"cell {k} has fewer than 3 vertices")
        if cell.min() < 0 or cell.max() >= n_vertices:
            raise MeshValidationError(
                f"cell {k} references missing vertex {int(cell.max())}"
            )
        if len(np.unique(cell)) != len(cell):
            raise MeshValidationError(f"cell {k} repeats a vertex")

    # Face table: canonical key is the sorted vertex pair; stored orientation
    # is as first encountered, so the normal points out of the first cell.
    face_index = {}
    faces = []
    face_cells = []
    cell_faces = []
    cell_face_sign = []
    for k, cell in enumerate(cells):
        nf = len(cell)
        f_ids = np.empty(nf, dtype=int)
        f_sgn = np.empty(nf, dtype=int)
        for e in range(nf):
            a, b = int(cell[e]), int(cell[(e + 1) % nf])
            key = (a, b) if a < b else (b, a)
            fid = face_index.get(key)
            if fid is None:
                fid = len(faces)
                face_index[key] = fid
                faces.append((a, b))
                face_cells.append([k, -1])
                f_sgn[e] = 1
            else:
                if face_cells[fid][1] != -1:
                    raise MeshValidationError(
                        f"face {key} shared by more than two cells"
                    )
                face_cells[fid][1] = k
                f_sgn[e] = -1
            f_ids[e] = fid
        cell_faces.append(f_ids)
        cell_face_sign.append(f_sgn)

    faces = np.asarray(faces, dtype=int)
    face_cells = np.asarray(face_cells, dtype=int)
    boundary_flags = face_cells[:, 1] == -1

    tang = vertices[faces[:, 1]] - vertices[faces[:, 0]]
    face_length = np.hypot(tang[:, 0], tang[:, 1])
    if np.any(face_length <= 0.0):
        bad = int(np.argmin(face_length))
        raise MeshValidationError(f"face {tuple(faces[bad])} has zero length")
    face_centroid = 0.5 * (vertices[faces[:, 0]] + vertices[faces[:, 1]])
    # CCW traversal of the first cell leaves its interior to the left, so the
    # outward normal is the tangent rotated clockwise.
    face_normal = np.column_stack((tang[:, 1], -tang[:, 0])) / face_length[:, None]

    cell_area = np.empty(len(cells))
    cell_centroid = np.empty((len(cells), 2))
    h_m = 0.0
    for k, cell in enumerate(cells):
        pts = vertices[cell]
        x, y = pts[:, 0], pts[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area2 = cross.sum()
        if area2 <= 0.0:
            raise MeshValidationError(
                f"cell {k} has nonpositive area (vertices not CCW?)"
            )
        cell_area[k] = 0.5 * area2
        cell_centroid[k, 0] = ((x + xn) * cross).sum() / (3.0 * area2)
        cell_centroid[k, 1] = ((y + yn) * cross).sum() / (3.0 * area2)
        diff = pts[:, None, :] - pts[None, :, :]
        h_m = max(h_m, math.sqrt((diff ** 2).sum(axis=2).max()))

    mesh = Mesh(
        vertices=vertices,
        cells=cells,
        faces=faces,
        face_cells=face_cells,
        cell_faces=cell_faces,
        cell_face_sign=cell_face_sign,
        cell_area=cell_area,
        cell_centroid=cell_centroid,
        face_length=face_length,
        face_centroid=face_centroid,
        face_normal=face_normal,
        boundary_flags=boundary_flags,
        h_m=h_m,
        family=family,
    )
    validate_mesh(mesh)
    return mesh


def validate_mesh(mesh, tol=_GEOM_TOL):
    """Check the structural invariants; raise MeshValidationError on failure.

    Verified: positive areas and lengths, unit normals, the per-cell closure
    identity sum_F |F| n_KF = 0 (relative tolerance), two cells per interior
    face / one per boundary face, closed boundary loops, and the h_M formula.
    """
    if np.any(mesh.cell_area <= 0.0):
        raise MeshValidationError("nonpositive cell area")
    if np.any(mesh.face_length <= 0.0):
        raise MeshValidationError("nonpositive face length")
    norm_err = np.abs(np.hypot(mesh.face_normal[:, 0], mesh.face_normal[:, 1]) - 1.0)
    if norm_err.max() > tol:
        raise MeshValidationError("face normal not unit length")

    for k in range(mesh.n_cells):
        f = mesh.cell_faces[k]
        n_out = mesh.outward_normals(k)
        resid = (mesh.face_length[f][:, None] * n_out).sum(axis=0)
        scale = mesh.face_length[f].sum()
        if np.abs(resid).max() > tol * scale:
            raise MeshValidationError(f"closure identity fails on cell {k}")

    # Boundary faces must chain into closed loops: every vertex touched by a
    # boundary face belongs to exactly two of them.
    bnd = np.flatnonzero(mesh.boundary_flags)
    counts = {}
    for fid in bnd:
        for v in mesh.faces[fid]:
            counts[int(v)] = counts.get(int(v), 0) + 1
    if any(c != 2 for c in counts.values()):
        raise MeshValidationError("boundary faces do not form closed loops")

    h = 0.0
    for cell in mesh.cells:
        pts = mesh.vertices[cell]
        diff = pts[:, None, :] - pts[None, :, :]
        h = max(h, math.sqrt((diff ** 2).sum(axis=2).max()))
    if abs(h - mesh.h_m) > tol * max(h, 1.0):
        raise MeshValidationError("stored h_M disagrees with vertex distances")


def mesh_diameter(mesh):
    """Mesh size h_M: the maximum over cells of the cell diameter."""
    return mesh.h_m


# ---------------------------------------------------------------------------
# structured families on the unit square
# ---------------------------------------------------------------------------

def cartesian_grid(nx, ny=None):
    """Uniform nx-by-ny quadrilateral grid of (0,1)^2."""
    if ny is None:
        ny = nx
    xs = np.linspace(0.0, 1.0, nx + 1)
    ys = np.linspace(0.0, 1.0, ny + 1)

    def vid(i, j):
        return j * (nx + 1) + i

    vertices = np.array([(x, y) for y in ys for x in xs])
    cells = [
        [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]
        for j in range(ny)
        for i in range(nx)
    ]
    return build_mesh(vertices, cells, family="cartesian")


def triangular_grid(n):
    """Crisscross triangulation: n-by-n squares each split at the centre.

    The four triangles per square are right isoceles with the square side as
    hypotenuse, so the cell diameter is exactly 1/n.
    """
    xs = np.linspace(0.0, 1.0, n + 1)
    grid = np.array([(x, y) for y in xs for x in xs])
    centres = np.array(
        [((i + 0.5) / n, (j + 0.5) / n) for j in range(n) for i in range(n)]
    )
    vertices = np.vstack((grid, centres))
    off = (n + 1) ** 2

    def vid(i, j):
        return j * (n + 1) + i

    cells = []
    for j in range(n):
        for i in range(n):
            c = off + j * n + i
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            cells += [[v00, v10, c], [v10, v11, c], [v11, v01, c], [v01, v00, c]]
    return build_mesh(vertices, cells, family="triangular")


def _clip_unit_square(poly):
    """Sutherland-Hodgman clip of a convex CCW polygon to [0,1]^2.

    Intersection points are computed with lexicographically ordered segment
    endpoints so that the two cells sharing a clipped edge obtain bit-identical
    coordinates (keeps the welded mesh conforming).
    """

    def intersect(a, b, axis, value):
        if b < a:
            a, b = b, a
        t = (value - a[axis]) / (b[axis] - a[axis])
        if axis == 0:
            return (value, a[1] + t * (b[1] - a[1]))
        return (a[0] + t * (b[0] - a[0]), value)

    for axis, value, keep_ge in (
        (0, 0.0, True),
        (0, 1.0, False),
        (1, 0.0, True),
        (1, 1.0, False),
    ):
        if not poly:
            return []
        out = []
        for i, a in enumerate(poly):
            b = poly[(i + 1) % len(poly)]
            a_in = a[axis] >= value if keep_ge else a[axis] <= value
            b_in = b[axis] >= value if keep_ge else b[axis] <= value
            if a_in:
                out.append(a)
                if not b_in:
                    out.append(intersect(a, b, axis, value))
            elif b_in:
                out.append(intersect(a, b, axis, value))
        poly = [p for i, p in enumerate(out) if p != out[i - 1]]
    return poly


def hexagonal_grid(nrows):
    """Regular hexagon tiling clipped to the unit square.

    Pointy-top hexagons with circumradius R = 2/(3*nrows); centre rows sit on
    y = 0 and y = 1, so boundary cells are clipped polygons.  Corner
    coordinates come from one shared honeycomb lattice, which makes shared
    vertices (and clipped edges) bit-identical between neighbours.
    """
    radius = 2.0 / (3.0 * nrows)
    dx = 0.5 * math.sqrt(3.0) * radius  # corner lattice pitch in x
    dy = 0.5 * radius                   # corner lattice pitch in y

    corner_id = {}
    coords = []

    def corner(j, m):
        key = (j, m)
        cid = corner_id.get(key)
        if cid is None:
            cid = len(coords)
            corner_id[key] = cid
            coords.append((j * dx, m * dy))
        return cid

    raw_cells = []
    n_cols = int(math.ceil(1.0 / (2.0 * dx))) + 1
    for row in range(nrows + 1):
        p = row & 1
        m0 = 3 * row
        for col in range(-1, n_cols + 1):
            j0 = 2 * col + p
            if (j0 + 1) * dx <= 0.0 or (j0 - 1) * dx >= 1.0:
                continue
            hexagon = [
                corner(j0 + 1, m0 + 1),
                corner(j0, m0 + 2),
                corner(j0 - 1, m0 + 1),
                corner(j0 - 1, m0 - 1),
                corner(j0, m0 - 2),
                corner(j0 + 1, m0 - 1),
            ]
            raw_cells.append([coords[c] for c in hexagon])

    weld = {}
    vertices = []
    cells = []
    for poly in raw_cells:
        clipped = _clip_unit_square(poly)
        if len(clipped) < 3:
            continue
        area2 = 0.0
        for i, (x0, y0) in enumerate(clipped):
            x1, y1 = clipped[(i + 1) % len(clipped)]
            area2 += x0 * y1 - x1 * y0
        if area2 <= 1e-14:
            continue
        ids = []
        for pt in clipped:
            vid = weld.get(pt)
            if vid is None:
                vid = len(vertices)
                weld[pt] = vid
                vertices.append(pt)
            ids.append(vid)
        cells.append(ids)
    return build_mesh(np.asarray(vertices), cells, family="hexagonal")


def generate_family(family, level):
    """Structured mesh of (0,1)^2 whose size h_M halves per refinement level.

    cartesian level 0 is an 8x8 grid (h_M = sqrt(2)/8), triangular level 0 a
    crisscross 8x8 split with h_M = 0.125, hexagonal level 0 a 10-row clipped
    tiling with h_M = 2/15.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    if family == "cartesian":
        return cartesian_grid(8 * 2 ** level)
    if family == "triangular":
        return triangular_grid(8 * 2 ** level)
    if family == "hexagonal":
        return hexagonal_grid(10 * 2 ** level)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def save_mesh(mesh, path):
    """Write a mesh to the text format; coordinates keep 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# rdgdm polygonal mesh\n")
        fh.write("vertices\n")
        for i, (x, y) in enumerate(mesh.vertices):
            fh.write(f"{i} {x:.17g} {y:.17g}\n")
        fh.write("cells\n")
        for k, cell in enumerate(mesh.cells):
            fh.write(f"{k} " + " ".join(str(int(v)) for v in cell) + "\n")


def load_mesh(path):
    """Parse a mesh file and build the mesh (with full validation)."""
    vertices = []
    cells = []
    section = None
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line == "vertices":
                section = "vertices"
                continue
            if line == "cells":
                section = "cells"
                continue
            if section is None:
                raise MeshParseError(line_no, f"data before section header: {line!r}")
            parts = line.split()
            if section == "vertices":
                if len(parts) != 3:
                    raise MeshParseError(line_no, "vertex line needs: index x y")
                try:
                    idx = int(parts[0])
                    xy = (float(parts[1]), float(parts[2]))
                except ValueError as exc:
                    raise MeshParseError(line_no, str(exc)) from None
                if idx != len(vertices):
                    raise MeshParseError(
                        line_no, f"vertex index {idx}, expected {len(vertices)}"
                    )
                vertices.append(xy)
            else:
                if len(parts) < 4:
                    raise MeshParseError(
                        line_no, "cell line needs: index and >= 3 vertex indices"
                    )
                try:
                    idx = int(parts[0])
                    vs = [int(p) for p in parts[1:]]
                except ValueError as exc:
                    raise MeshParseError(line_no, str(exc)) from None
                if idx != len(cells):
                    raise MeshParseError(
                        line_no, f"cell index {idx}, expected {len(cells)}"
                    )
                cells.append(vs)
    if not vertices or not cells:
        raise MeshParseError(0, "file has no vertices or no cells")
    return build_mesh(np.asarray(vertices), cells)
