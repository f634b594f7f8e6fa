"""Discrete measurements on a closed triangle mesh.

Conventions follow the smooth setting of the flow: the unit normal ``nu``
points *into* the enclosed region (the mesh itself is stored with outward
counter-clockwise triangles), so that a round sphere of radius ``r`` has
mean curvature ``H = 2 / r > 0``.

* mean curvature vector: cotangent Laplacian of the positions divided by the
  mixed Voronoi area (Meyer et al.), ``Hvec = Y / A_v`` with
  ``Y = -dArea/dx``;
* scalar mean curvature: ``H = <Hvec, nu>`` with ``nu`` the normalized,
  area-weighted sum of incident triangle normals (pointing inward);
* Gauss curvature: angle defect over mixed area;
* ``|A0|^2 = H^2 / 2 - 2 K``, clamped at zero.

All integrals are lumped onto vertices with the mixed Voronoi areas, which
sum exactly to the surface area.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.spatial import ConvexHull
from scipy.spatial.distance import cdist

from .errors import DegenerateTriangle
from .mesh import DEGENERACY_TOL

COT_CAP = 1e6


def _scatter(index, values, n):
    """Sum ``values`` (shape (k,) or (k, d)) into ``n`` bins, deterministically."""
    if values.ndim == 1:
        return np.bincount(index, weights=values, minlength=n)
    return np.stack([np.bincount(index, weights=values[:, c], minlength=n) for c in range(values.shape[1])], axis=1)


@dataclass(frozen=True)
class FaceData:
    p: np.ndarray  # (m, 3 corners, 3)
    cross: np.ndarray  # (m, 3) (p1-p0) x (p2-p0), outward, length 2*area
    cross_norm: np.ndarray  # (m,)
    area: np.ndarray  # (m,)
    dots: np.ndarray  # (m, 3) dot of the two edges leaving corner k
    cots: np.ndarray  # (m, 3) capped cotangent of corner k
    angles: np.ndarray  # (m, 3)
    obtuse: np.ndarray  # (m, 3) bool, corner k obtuse


def face_data(vertices, triangles, degeneracy_tol=DEGENERACY_TOL):
    p = vertices[triangles]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    cross_norm = np.linalg.norm(cross, axis=1)
    scale = np.linalg.norm(vertices.max(axis=0) - vertices.min(axis=0))
    area = 0.5 * cross_norm
    if area.min() < degeneracy_tol * scale**2:
        raise DegenerateTriangle(f"triangle {int(np.argmin(area))} has area {area.min():.3e}")
    dots = np.empty((len(triangles), 3))
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        dots[:, k] = np.einsum("ij,ij->i", a, b)
    cots = np.clip(dots / cross_norm[:, None], -COT_CAP, COT_CAP)
    angles = np.arctan2(cross_norm[:, None], dots)
    return FaceData(p, cross, cross_norm, area, dots, cots, angles, dots < 0)


def mixed_areas(fd, triangles, n):
    """Mixed Voronoi vertex areas; they partition the total area exactly."""
    contrib = np.empty((len(triangles), 3))
    any_obtuse = fd.obtuse.any(axis=1)
    for k in range(3):
        k1, k2 = (k + 1) % 3, (k + 2) % 3
        e1 = ((fd.p[:, k] - fd.p[:, k1]) ** 2).sum(1)  # edge k-k1, opposite corner k2
        e2 = ((fd.p[:, k] - fd.p[:, k2]) ** 2).sum(1)  # edge k-k2, opposite corner k1
        voronoi = (e1 * fd.cots[:, k2] + e2 * fd.cots[:, k1]) / 8.0
        fallback = np.where(fd.obtuse[:, k], fd.area / 2.0, fd.area / 4.0)
        contrib[:, k] = np.where(any_obtuse, fallback, voronoi)
    return _scatter(triangles.ravel(), contrib.ravel(), n), contrib


def cotan_matrix(fd, triangles, n):
    """Positive semidefinite cotangent stiffness matrix ``L``.

    ``(L u)_i = 1/2 sum_j (cot a_ij + cot b_ij) (u_i - u_j)``, so the discrete
    Laplace-Beltrami operator is ``-M^{-1} L`` with lumped mass ``M``.
    """
    rows, cols, vals = [], [], []
    for k in range(3):
        i = triangles[:, (k + 1) % 3]
        j = triangles[:, (k + 2) % 3]
        w = 0.5 * fd.cots[:, k]
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    L = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    L.sum_duplicates()
    return L


@dataclass(frozen=True)
class SurfaceGeometry:
    """Per-vertex discrete geometry of one mesh snapshot."""

    faces: FaceData
    vertex_area: np.ndarray  # mixed Voronoi areas, sums to the total area
    area_contrib: np.ndarray  # (m, 3) per-corner pieces of vertex_area
    normal_sum: np.ndarray  # sum of incident (p1-p0)x(p2-p0), outward
    nu: np.ndarray  # inward unit vertex normal
    Y: np.ndarray  # cotangent Laplacian of positions, equals -dArea/dx
    Hvec: np.ndarray  # mean curvature vector Y / A_v
    H: np.ndarray  # scalar mean curvature <Hvec, nu>
    angle_defect: np.ndarray
    K: np.ndarray
    A0sq: np.ndarray  # clamped |A0|^2
    A0sq_raw: np.ndarray  # unclamped H^2/2 - 2K
    area: float
    volume: float
    L: sparse.csr_matrix

    @property
    def Asq(self):
        """|A|^2 = |A0|^2 + H^2 / 2."""
        return self.A0sq + 0.5 * self.H**2

    @property
    def volume_normal(self):
        """Inward field ``-dV/dx / A_v``; the lumped L2 representative of ``nu``.

        With this field ``int <x, nu> dmu = -3 V`` holds exactly.
        """
        return -self.normal_sum / (6.0 * self.vertex_area[:, None])

    def laplacian(self, u):
        """Discrete Laplace-Beltrami ``-M^{-1} L u`` of a per-vertex field."""
        Lu = self.L @ u
        if Lu.ndim == 1:
            return -Lu / self.vertex_area
        return -Lu / self.vertex_area[:, None]

    def integrate(self, u):
        """Lumped integral of a scalar field."""
        return float(np.dot(self.vertex_area, u))


def compute_geometry(mesh):
    """Return the (cached) :class:`SurfaceGeometry` of ``mesh``."""
    cached = mesh._cache.get("geometry")
    if cached is not None:
        return cached
    v, t = mesh.vertices, mesh.triangles
    n = len(v)
    fd = face_data(v, t)
    vertex_area, contrib = mixed_areas(fd, t, n)
    Y = np.zeros((n, 3))
    for k in range(3):
        i = t[:, (k + 1) % 3]
        j = t[:, (k + 2) % 3]
        d = 0.5 * fd.cots[:, k, None] * (v[j] - v[i])
        Y += _scatter(i, d, n) - _scatter(j, d, n)
    normal_sum = _scatter(t[:, 0], fd.cross, n)
    normal_sum += _scatter(t[:, 1], fd.cross, n) + _scatter(t[:, 2], fd.cross, n)
    nu = -normal_sum / np.linalg.norm(normal_sum, axis=1, keepdims=True)
    Hvec = Y / vertex_area[:, None]
    H = np.einsum("ij,ij->i", Hvec, nu)
    angle_defect = 2.0 * np.pi - _scatter(t.ravel(), fd.angles.ravel(), n)
    K = angle_defect / vertex_area
    A0sq_raw = 0.5 * H**2 - 2.0 * K
    p = fd.p
    volume = float(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0)
    geo = SurfaceGeometry(
        faces=fd,
        vertex_area=vertex_area,
        area_contrib=contrib,
        normal_sum=normal_sum,
        nu=nu,
        Y=Y,
        Hvec=Hvec,
        H=H,
        angle_defect=angle_defect,
        K=K,
        A0sq=np.maximum(A0sq_raw, 0.0),
        A0sq_raw=A0sq_raw,
        area=float(fd.area.sum()),
        volume=volume,
        L=cotan_matrix(fd, t, n),
    )
    mesh._cache["geometry"] = geo
    return geo


# ----------------------------------------------------------------------------
# Public measurement functions


def area(mesh):
    return compute_geometry(mesh).area


def signed_volume(mesh):
    """Enclosed volume, ``(1/6) sum p0 . (p1 x p2)``; negative if inside out."""
    return compute_geometry(mesh).volume


def mean_curvature(mesh):
    """Return ``(H, Hvec)``: scalar mean curvature and mean curvature vector."""
    geo = compute_geometry(mesh)
    return geo.H, geo.Hvec


def gauss_curvature(mesh):
    return compute_geometry(mesh).K


def tracefree_sq(mesh):
    """|A0|^2 = H^2/2 - 2K per vertex, clamped at zero."""
    return compute_geometry(mesh).A0sq


def vertex_areas(mesh):
    return compute_geometry(mesh).vertex_area


def unreliable_normals(mesh, rel_tol=1e-3, angle_tol=np.pi / 4):
    """Flag vertices where the sign of H is a guess.

    A vertex is flagged when its mean curvature vector is tiny compared to
    the mesh-average magnitude, or makes a large angle with the vertex normal
    line, so that projecting onto the normal is dominated by noise.
    """
    geo = compute_geometry(mesh)
    mag = np.linalg.norm(geo.Hvec, axis=1)
    ref = np.sqrt(np.dot(geo.vertex_area, mag**2) / geo.area)
    small = mag < rel_tol * ref
    cos = np.abs(geo.H) / np.maximum(mag, np.finfo(float).tiny)
    return small | (cos < np.cos(angle_tol))


def diameter(mesh):
    """Largest distance between two vertices (exact, via the convex hull)."""
    v = mesh.vertices
    try:
        pts = v[ConvexHull(v).vertices]
    except Exception:  # flat or tiny inputs
        pts = v
    best = 0.0
    chunk = max(1, 2_000_000 // max(len(pts), 1))
    for s in range(0, len(pts), chunk):
        best = max(best, float(cdist(pts[s : s + chunk], pts).max()))
    return best


def mean_edge_length(mesh):
    e = mesh.edges
    return float(np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1).mean())


def min_edge_length(mesh):
    e = mesh.edges
    return float(np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1).min())


# ----------------------------------------------------------------------------
# Exact derivative of the discrete Helfrich energy


def helfrich_energy_and_gradient(mesh, c0):
    """Discrete energy ``1/4 sum_v A_v (H_v - c0)^2`` and its exact gradient.

    The gradient is the Euclidean derivative with respect to each vertex
    position (shape (n, 3)), obtained by reverse-mode differentiation through
    the cotangent weights, the mixed areas and the vertex normals. Mixed
    areas are piecewise smooth; the derivative is exact away from right
    triangles.
    """
    geo = compute_geometry(mesh)
    v, t = mesh.vertices, mesh.triangles
    n = len(v)
    fd = geo.faces
    A, H = geo.vertex_area, geo.H
    dH = H - c0
    energy = 0.25 * float(np.dot(A, dH**2))

    gY = 0.5 * dH[:, None] * geo.nu
    g_nu = 0.5 * dH[:, None] * geo.Y
    gA = 0.25 * dH**2 - 0.5 * dH * H

    # nu = -N / |N|
    Nn = np.linalg.norm(geo.normal_sum, axis=1, keepdims=True)
    Nhat = geo.normal_sum / Nn
    gN = -(g_nu - np.einsum("ij,ij->i", g_nu, Nhat)[:, None] * Nhat) / Nn

    grad = np.zeros((n, 3))
    gcross = gN[t[:, 0]] + gN[t[:, 1]] + gN[t[:, 2]]
    gcot = np.zeros((len(t), 3))
    gcross_norm = np.zeros(len(t))
    gp = np.zeros_like(fd.p)

    # Y_i += w (p_j - p_i), Y_j -= w (p_j - p_i), w = cot_k / 2
    for k in range(3):
        k1, k2 = (k + 1) % 3, (k + 2) % 3
        i, j = t[:, k1], t[:, k2]
        d = fd.p[:, k2] - fd.p[:, k1]
        gdiff = gY[i] - gY[j]
        w = 0.5 * fd.cots[:, k]
        gcot[:, k] += 0.5 * np.einsum("ij,ij->i", gdiff, d)
        gp[:, k2] += w[:, None] * gdiff
        gp[:, k1] -= w[:, None] * gdiff

    # mixed areas
    gAc = gA[t]  # (m, 3)
    any_obtuse = fd.obtuse.any(axis=1)
    for k in range(3):
        k1, k2 = (k + 1) % 3, (k + 2) % 3
        g = np.where(any_obtuse, 0.0, gAc[:, k]) / 8.0
        e1 = fd.p[:, k] - fd.p[:, k1]
        e2 = fd.p[:, k] - fd.p[:, k2]
        gcot[:, k2] += g * (e1**2).sum(1)
        gcot[:, k1] += g * (e2**2).sum(1)
        gp[:, k] += 2.0 * (g * fd.cots[:, k2])[:, None] * e1 + 2.0 * (g * fd.cots[:, k1])[:, None] * e2
        gp[:, k1] -= 2.0 * (g * fd.cots[:, k2])[:, None] * e1
        gp[:, k2] -= 2.0 * (g * fd.cots[:, k1])[:, None] * e2
        coef = np.where(fd.obtuse[:, k], 0.5, 0.25)
        gcross_norm += np.where(any_obtuse, gAc[:, k] * coef, 0.0) * 0.5

    # cot_k = dot_k / |cross|, zero derivative where the cap is active
    live = np.abs(fd.dots / fd.cross_norm[:, None]) < COT_CAP
    gdot = np.where(live, gcot / fd.cross_norm[:, None], 0.0)
    gcross_norm -= np.where(live, gcot * fd.cots, 0.0).sum(1) / fd.cross_norm
    for k in range(3):
        k1, k2 = (k + 1) % 3, (k + 2) % 3
        a = fd.p[:, k1] - fd.p[:, k]
        b = fd.p[:, k2] - fd.p[:, k]
        ga = gdot[:, k, None] * b
        gb = gdot[:, k, None] * a
        gp[:, k1] += ga
        gp[:, k2] += gb
        gp[:, k] -= ga + gb

    # |cross| and cross = (p1 - p0) x (p2 - p0)
    gcross += gcross_norm[:, None] * fd.cross / fd.cross_norm[:, None]
    e1 = fd.p[:, 1] - fd.p[:, 0]
    e2 = fd.p[:, 2] - fd.p[:, 0]
    ge1 = np.cross(e2, gcross)
    ge2 = np.cross(gcross, e1)
    gp[:, 1] += ge1
    gp[:, 2] += ge2
    gp[:, 0] -= ge1 + ge2

    for k in range(3):
        grad += _scatter(t[:, k], gp[:, k], n)
    return energy, grad


def area_gradient(mesh):
    """Euclidean gradient of the total area, ``-Y``."""
    return -compute_geometry(mesh).Y


def volume_gradient(mesh):
    """Euclidean gradient of the enclosed volume, ``N_v / 6``."""
    return compute_geometry(mesh).normal_sum / 6.0
