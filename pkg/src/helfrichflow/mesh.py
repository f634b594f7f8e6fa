"""Triangle mesh container, topology checks, OBJ input/output and basic solids."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateTriangle, Disconnected, MeshError, NonManifold

logger = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-12
GRID_TAG = "helfrichflow-grid"


class TriMesh:
    """Closed oriented triangle mesh.

    Parameters
    ----------
    vertices : array_like, shape (n, 3)
        Vertex positions.
    triangles : array_like, shape (m, 3)
        Vertex indices of each triangle. The cyclic order fixes the
        orientation; the outward normal of a counter-clockwise triangle
        (seen from outside) is ``(p1 - p0) x (p2 - p0)``.
    grid_shape : tuple of int, optional
        ``(n_u, n_v)`` when the mesh samples a surface of revolution about the
        x-axis on a tensor grid, vertex ``i * n_v + j`` sitting at profile
        parameter ``u_i`` and rotation angle ``v_j = 2 pi j / n_v``.

    Notes
    -----
    Instances are treated as immutable snapshots. Derived quantities are
    cached on the instance, so never modify ``vertices`` in place; use
    :meth:`with_vertices` instead.
    """

    def __init__(self, vertices, triangles, grid_shape=None):
        v = np.array(vertices, dtype=float)
        t = np.array(triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError("vertices must have shape (n, 3)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshError("triangles must have shape (m, 3)")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshError("triangle index out of range")
        v.setflags(write=False)
        t.setflags(write=False)
        self.vertices = v
        self.triangles = t
        self.grid_shape = None if grid_shape is None else (int(grid_shape[0]), int(grid_shape[1]))
        if self.grid_shape is not None and self.grid_shape[0] * self.grid_shape[1] != len(v):
            raise MeshError("grid_shape does not match the vertex count")
        self._cache = {}

    def __repr__(self):
        return f"TriMesh(n_vertices={self.n_vertices}, n_triangles={self.n_triangles})"

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def edges(self):
        """Unique undirected edges as sorted index pairs, shape (e, 2)."""
        if "edges" not in self._cache:
            t = self.triangles
            e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
            e.sort(axis=1)
            self._cache["edges"] = np.unique(e, axis=0)
        return self._cache["edges"]

    @property
    def euler_characteristic(self):
        return self.n_vertices - len(self.edges) + self.n_triangles

    @property
    def genus(self):
        return (2 - self.euler_characteristic) // 2

    def with_vertices(self, vertices):
        """Return a mesh with new positions and the same connectivity."""
        m = TriMesh.__new__(TriMesh)
        v = np.array(vertices, dtype=float)
        if v.shape != self.vertices.shape:
            raise MeshError("vertex array shape changed")
        v.setflags(write=False)
        m.vertices = v
        m.triangles = self.triangles
        m.grid_shape = self.grid_shape
        m._cache = {k: self._cache[k] for k in ("edges", "adjacency") if k in self._cache}
        return m

    def scaled(self, r):
        return self.with_vertices(r * self.vertices)

    def translated(self, offset):
        return self.with_vertices(self.vertices + np.asarray(offset, dtype=float))

    def rotated(self, matrix):
        return self.with_vertices(self.vertices @ np.asarray(matrix, dtype=float).T)

    def flipped(self):
        """Same surface with reversed orientation."""
        return TriMesh(self.vertices, self.triangles[:, ::-1], grid_shape=self.grid_shape)

    def vertex_adjacency(self):
        """Symmetric sparse vertex adjacency matrix."""
        if "adjacency" not in self._cache:
            e = self.edges
            n = self.n_vertices
            data = np.ones(2 * len(e))
            rows = np.concatenate([e[:, 0], e[:, 1]])
            cols = np.concatenate([e[:, 1], e[:, 0]])
            self._cache["adjacency"] = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
        return self._cache["adjacency"]

    def bounding_scale(self):
        """Length of the bounding box diagonal."""
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))


@dataclass
class MeshDiagnostics:
    """Outcome of :func:`validate`."""

    mesh: TriMesh
    closed: bool
    orientable: bool
    connected: bool
    euler_characteristic: int
    genus: int
    min_quality: float
    min_area: float
    reoriented: bool
    flipped: bool

    def to_dict(self):
        return {
            "closed": self.closed,
            "orientable": self.orientable,
            "connected": self.connected,
            "euler_characteristic": self.euler_characteristic,
            "genus": self.genus,
            "min_quality": self.min_quality,
            "min_area": self.min_area,
            "reoriented": self.reoriented,
            "flipped": self.flipped,
        }


def triangle_quality(vertices, triangles):
    """Normalized shape quality 4*sqrt(3)*area / sum(edge^2), 1 for equilateral."""
    p = vertices[triangles]
    e0 = p[:, 1] - p[:, 0]
    e1 = p[:, 2] - p[:, 1]
    e2 = p[:, 0] - p[:, 2]
    area = 0.5 * np.linalg.norm(np.cross(e0, -e2), axis=1)
    denom = (e0**2).sum(1) + (e1**2).sum(1) + (e2**2).sum(1)
    return 4.0 * np.sqrt(3.0) * area / denom, area


def _orient_faces(triangles):
    """Make face orientations consistent by breadth-first propagation.

    Returns the reoriented triangles and whether any face was flipped.
    Raises NonManifold for non-manifold or non-orientable complexes.
    """
    t = triangles.copy()
    m = len(t)
    half = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    face_of = np.tile(np.arange(m), 3)
    key = np.sort(half, axis=1)
    order = np.lexsort((key[:, 1], key[:, 0]))
    key_sorted = key[order]
    same = np.all(key_sorted[1:] == key_sorted[:-1], axis=1)
    # every undirected edge must appear exactly twice
    starts = np.flatnonzero(np.concatenate([[True], ~same]))
    counts = np.diff(np.concatenate([starts, [len(order)]]))
    if np.any(counts != 2):
        bad = key_sorted[starts[counts != 2][0]]
        raise NonManifold(f"edge {tuple(int(x) for x in bad)} has {counts[counts != 2][0]} incident triangles")
    a = order[starts]
    b = order[starts + 1]
    fa, fb = face_of[a], face_of[b]
    neighbors = [[] for _ in range(m)]
    for x, y, ha, hb in zip(fa.tolist(), fb.tolist(), a.tolist(), b.tolist()):
        # consistent orientation <=> the two half-edges run in opposite directions
        agree = bool(half[ha, 0] == half[hb, 1])
        neighbors[x].append((y, agree))
        neighbors[y].append((x, agree))
    flip = np.full(m, -1, dtype=np.int8)
    changed = False
    for seed in range(m):
        if flip[seed] >= 0:
            continue
        flip[seed] = 0
        queue = deque([seed])
        while queue:
            f = queue.popleft()
            for g, agree in neighbors[f]:
                want = flip[f] if agree else 1 - flip[f]
                if flip[g] < 0:
                    flip[g] = want
                    queue.append(g)
                elif flip[g] != want:
                    raise NonManifold("surface is not orientable")
    if np.any(flip == 1):
        changed = True
        t[flip == 1] = t[flip == 1][:, ::-1]
    return t, changed


def validate(mesh, degeneracy_tol=DEGENERACY_TOL):
    """Check that ``mesh`` is a closed connected orientable surface.

    Face orientations are made consistent and the global orientation is
    chosen so that the enclosed signed volume is nonnegative. The normalized
    mesh is returned in the diagnostics record.

    Raises
    ------
    NonManifold
        An edge with a number of incident triangles other than two, or a
        non-orientable complex.
    Disconnected
        More than one connected component.
    DegenerateTriangle
        A triangle with repeated vertices or with area below
        ``degeneracy_tol * scale**2`` (``scale`` the bounding box diagonal).
    """
    t = mesh.triangles
    if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
        raise DegenerateTriangle("triangle with repeated vertex index")
    used = np.zeros(mesh.n_vertices, bool)
    used[t.ravel()] = True
    if not used.all():
        raise Disconnected(f"{int((~used).sum())} isolated vertices")
    ncomp, _ = connected_components(mesh.vertex_adjacency(), directed=False)
    if ncomp != 1:
        raise Disconnected(f"mesh has {ncomp} connected components")
    t_oriented, reoriented = _orient_faces(t)
    quality, area = triangle_quality(mesh.vertices, t_oriented)
    scale = mesh.bounding_scale()
    if area.min() < degeneracy_tol * scale**2:
        raise DegenerateTriangle(f"triangle {int(np.argmin(area))} has area {area.min():.3e}")
    p = mesh.vertices[t_oriented]
    vol = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0
    flipped = vol < 0
    if flipped:
        t_oriented = t_oriented[:, ::-1]
    if reoriented or flipped:
        out = TriMesh(mesh.vertices, t_oriented, grid_shape=mesh.grid_shape)
    else:
        out = mesh
    chi = out.euler_characteristic
    return MeshDiagnostics(
        mesh=out,
        closed=True,
        orientable=True,
        connected=True,
        euler_characteristic=int(chi),
        genus=int((2 - chi) // 2),
        min_quality=float(quality.min()),
        min_area=float(area.min()),
        reoriented=bool(reoriented),
        flipped=bool(flipped),
    )


# ----------------------------------------------------------------------------
# Wavefront OBJ


def read_obj(path):
    """Read a triangle-only Wavefront OBJ file.

    Only ``v`` and ``f`` records are interpreted; texture and normal indices
    in face records (``f 1/1/1 ...``) are ignored. Faces with more than three
    vertices are rejected.
    """
    vertices, faces = [], []
    grid_shape = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "#":
                if len(parts) == 4 and parts[1] == GRID_TAG:
                    grid_shape = (int(parts[2]), int(parts[3]))
                continue
            if parts[0] == "v":
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise MeshError(f"{path}:{lineno}: only triangles are supported, got {len(idx)}-gon")
                faces.append([i - 1 if i > 0 else len(vertices) + i for i in idx])
    if grid_shape is not None and grid_shape[0] * grid_shape[1] != len(vertices):
        grid_shape = None
    return TriMesh(np.array(vertices).reshape(-1, 3), np.array(faces).reshape(-1, 3), grid_shape=grid_shape)


def write_obj(mesh, path):
    """Write ``mesh`` as OBJ with 17 significant digits (round-trip exact)."""
    path = Path(path)
    lines = []
    if mesh.grid_shape is not None:
        lines.append(f"# {GRID_TAG} {mesh.grid_shape[0]} {mesh.grid_shape[1]}\n")
    lines.extend("v %.17g %.17g %.17g\n" % tuple(p) for p in mesh.vertices)
    lines.extend("f %d %d %d\n" % tuple(f + 1) for f in mesh.triangles)
    path.write_text("".join(lines), encoding="utf-8")
    return path


# ----------------------------------------------------------------------------
# Basic solids


def _icosahedron():
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def icosphere(subdiv=3, radius=1.0, center=(0.0, 0.0, 0.0)):
    """Subdivided icosahedron projected onto a sphere.

    ``subdiv`` levels of 1-to-4 midpoint refinement give
    ``10 * 4**subdiv + 2`` vertices (642 for 3, 2562 for 4, 10242 for 5).
    """
    v, f = _icosahedron()
    for _ in range(int(subdiv)):
        edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        edges.sort(axis=1)
        uniq, inverse = np.unique(edges, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        mid = v[uniq[:, 0]] + v[uniq[:, 1]]
        mid /= np.linalg.norm(mid, axis=1, keepdims=True)
        m = len(f)
        a = inverse[:m] + len(v)
        b = inverse[m : 2 * m] + len(v)
        c = inverse[2 * m :] + len(v)
        v = np.concatenate([v, mid])
        f = np.concatenate(
            [
                np.stack([f[:, 0], a, c], 1),
                np.stack([f[:, 1], b, a], 1),
                np.stack([f[:, 2], c, b], 1),
                np.stack([a, b, c], 1),
            ]
        )
    return TriMesh(radius * v + np.asarray(center, dtype=float), f)


def ellipsoid(axes=(1.0, 1.0, 1.3), subdiv=4):
    """Icosphere mapped linearly onto the ellipsoid with semi-axes ``axes``."""
    s = icosphere(subdiv)
    return s.with_vertices(s.vertices * np.asarray(axes, dtype=float))
