"""Surfaces of revolution about the x-axis and their profile curves.

A profile curve lives in the half-plane ``{(x, y) : y > 0}``; rotating it
about the x-axis gives ``f(u, v) = (x(u), y(u) cos v, y(u) sin v)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import eval_legendre

from .energy import isoperimetric_sigma
from .errors import AxisTouch, InvalidParams, NoGridStructure, TargetSigmaUnreachable
from .geometry import diameter
from .mesh import TriMesh, ellipsoid, icosphere, validate

AXIS_FLOOR = 1e-9


@dataclass
class ProfileCurve:
    """Closed polygon in the hyperbolic half-plane."""

    points: np.ndarray  # (n, 2), columns x and y
    closed: bool = True

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)

    def scaled(self, r):
        return ProfileCurve(r * self.points, self.closed)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y"])
            for x, y in self.points:
                w.writerow([repr(float(x)), repr(float(y))])

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data)


def circle_profile(R, a, n):
    """Circle of radius ``a`` centred at height ``R`` above the axis."""
    u = 2.0 * np.pi * np.arange(n) / n
    return ProfileCurve(np.stack([a * np.cos(u), R + a * np.sin(u)], axis=1))


def surface_of_revolution(profile, n_v):
    """Triangulate the torus obtained by rotating a closed profile curve.

    Vertex ``i * n_v + j`` is the profile node ``i`` rotated by
    ``2 pi j / n_v``; the mesh records this grid structure.
    """
    pts = np.asarray(profile.points if isinstance(profile, ProfileCurve) else profile, dtype=float)
    n_u = len(pts)
    if np.any(pts[:, 1] <= 0):
        raise InvalidParams("profile curve must stay strictly above the axis")
    v = 2.0 * np.pi * np.arange(n_v) / n_v
    x = np.repeat(pts[:, 0], n_v)
    y = np.outer(pts[:, 1], np.cos(v)).ravel()
    z = np.outer(pts[:, 1], np.sin(v)).ravel()
    i, j = np.meshgrid(np.arange(n_u), np.arange(n_v), indexing="ij")
    i, j = i.ravel(), j.ravel()
    a = i * n_v + j
    b = ((i + 1) % n_u) * n_v + j
    c = ((i + 1) % n_u) * n_v + (j + 1) % n_v
    d = i * n_v + (j + 1) % n_v
    tris = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    mesh = TriMesh(np.stack([x, y, z], axis=1), tris, grid_shape=(n_u, n_v))
    return validate(mesh).mesh


def make_torus(R, a, n_u=64, n_v=32):
    """Torus of revolution with tube radius ``a`` and centre-line radius ``R``.

    ``n_u`` nodes around the tube (profile circle), ``n_v`` around the axis.
    """
    if not (a > 0 and R > a):
        raise InvalidParams(f"need R > a > 0, got R={R}, a={a}")
    if n_u < 8 or n_v < 8:
        raise InvalidParams("need n_u, n_v >= 8")
    return surface_of_revolution(circle_profile(R, a, n_u), n_v)


def _radial_sphere(subdiv, radius_fn):
    s = icosphere(subdiv)
    v = s.vertices
    r = radius_fn(v)
    return s.with_vertices(v * r[:, None])


def _legendre_radius(modes):
    def fn(v):
        ct = np.clip(v[:, 2], -1.0, 1.0)
        r = np.ones(len(v))
        for degree, amp in modes.items():
            r += amp * eval_legendre(int(degree), ct)
        return r

    return fn


def _solve_amplitude(build, target_sigma, upper, what):
    if not (0.0 < target_sigma < 1.0):
        raise TargetSigmaUnreachable(f"sigma must lie in (0, 1), got {target_sigma}")
    s0 = isoperimetric_sigma(build(0.0))
    if target_sigma >= s0:
        raise TargetSigmaUnreachable(f"target sigma {target_sigma} not below the undeformed value {s0:.6f}")
    hi = upper / 64.0
    while isoperimetric_sigma(build(hi)) > target_sigma:
        hi *= 2.0
        if hi > upper:
            raise TargetSigmaUnreachable(f"{what}: target sigma {target_sigma} out of reach")
    amp = brentq(lambda x: isoperimetric_sigma(build(x)) - target_sigma, 0.0, hi, xtol=1e-12, rtol=1e-12)
    return amp


def make_perturbed_sphere(radius=1.0, modes=None, target_sigma=None, mode=2, subdiv=4, jitter=0.0, seed=None):
    """Sphere with axisymmetric Legendre perturbations of its radius.

    ``r(theta) = radius * (1 + sum_l a_l P_l(cos theta))`` with ``theta`` the
    polar angle from the z-axis. If ``target_sigma`` is given, the amplitude
    of ``mode`` is solved by bracketing and bisection so that the isoperimetric
    ratio of the mesh hits the target; any other entries of ``modes`` are kept
    fixed. A positive degree-2 amplitude gives a prolate shape.

    ``jitter`` adds seeded radial noise of that relative size per vertex.
    """
    modes = dict(modes or {})
    noise = 0.0
    if jitter:
        n = 10 * 4 ** int(subdiv) + 2
        noise = jitter * np.random.default_rng(seed).standard_normal(n)

    def build(amp):
        m = dict(modes)
        if target_sigma is not None:
            m[mode] = amp
        base = _legendre_radius(m)
        return _radial_sphere(subdiv, lambda v: radius * (base(v) + noise))

    if target_sigma is None:
        return validate(build(0.0)).mesh
    # keep 1 + a P_l > 0
    amp = _solve_amplitude(build, target_sigma, 0.95, f"mode {mode}")
    return validate(build(amp)).mesh


def make_ellipsoid(axes=(1.0, 1.0, 1.3), subdiv=4):
    return validate(ellipsoid(axes, subdiv)).mesh


BICONCAVE_COEFFS = (0.207, 2.003, -1.123)


def make_biconcave(radius=1.0, thickness=1.0, target_sigma=None, subdiv=4, coeffs=BICONCAVE_COEFFS):
    """Red-blood-cell shape from the Evans-Fung thickness profile.

    Unit-sphere points ``(x, y, z)`` map to
    ``radius * (x, y, thickness * z * (C0 + C1 s + C2 s^2) / 2)`` with
    ``s = 1 - z^2 = (rho / radius)^2``. If ``target_sigma`` is given, the
    thickness factor is solved by bisection.
    """
    c0, c1, c2 = coeffs

    def build(t):
        s = icosphere(subdiv)
        v = s.vertices
        q = 1.0 - v[:, 2] ** 2
        z = t * 0.5 * v[:, 2] * (c0 + c1 * q + c2 * q * q)
        return s.with_vertices(radius * np.stack([v[:, 0], v[:, 1], z], axis=1))

    if target_sigma is None:
        return validate(build(thickness)).mesh
    if not (0.0 < target_sigma < 1.0):
        raise TargetSigmaUnreachable(f"sigma must lie in (0, 1), got {target_sigma}")
    sig = lambda t: isoperimetric_sigma(build(t)) - target_sigma  # noqa: E731
    lo, hi = 1e-3, 1.0
    while sig(hi) < 0:
        hi *= 2.0
        if hi > 64:
            raise TargetSigmaUnreachable(f"biconcave: target sigma {target_sigma} out of reach")
    if sig(lo) > 0:
        raise TargetSigmaUnreachable(f"biconcave: target sigma {target_sigma} too small")
    t = brentq(sig, lo, hi, xtol=1e-12, rtol=1e-12)
    return validate(build(t)).mesh


def make_dumbbell(neck=0.35, neck_width=0.3, length=1.5, subdiv=4):
    """Two lobes joined by a narrow neck around the plane z = 0."""

    def fn(v):
        return 1.0 - (1.0 - neck) * np.exp(-((v[:, 2] / neck_width) ** 2))

    s = icosphere(subdiv)
    v = s.vertices
    g = fn(v)
    return validate(s.with_vertices(np.stack([v[:, 0] * g, v[:, 1] * g, length * v[:, 2]], axis=1))).mesh


# ----------------------------------------------------------------------------
# Profile curves


def hyperbolic_length(curve):
    """Length of a closed profile in the metric ``(dx^2 + dy^2) / y^2``.

    Each segment contributes its Euclidean length divided by its midpoint
    height.

    Raises
    ------
    AxisTouch
        If some node is within ``1e-9 * scale`` of the axis.
    """
    p = curve.points if isinstance(curve, ProfileCurve) else np.asarray(curve, dtype=float)
    scale = float(np.abs(p).max())
    if p[:, 1].min() <= AXIS_FLOOR * scale:
        raise AxisTouch(f"profile reaches the axis (min height {p[:, 1].min():.3e})")
    q = np.roll(p, -1, axis=0)
    if not getattr(curve, "closed", True):
        p, q = p[:-1], q[:-1]
    seg = np.linalg.norm(q - p, axis=1)
    mid = 0.5 * (p[:, 1] + q[:, 1])
    return float(np.sum(seg / mid))


def _rotation_x(phi):
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _slice_half_plane(mesh, phi=0.0):
    """Ordered intersection of the mesh with the half-plane at angle ``phi``."""
    v = mesh.vertices @ _rotation_x(-phi).T
    t = mesh.triangles
    side = v[:, 2] >= 0.0
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    crossing = side[e[:, 0]] != side[e[:, 1]]
    key = np.sort(e, axis=1)
    pts_of = {}
    tri_edges = {}
    m = len(t)
    for h in np.flatnonzero(crossing):
        a, b = key[h]
        za, zb = v[a, 2], v[b, 2]
        p = v[a] + (v[b] - v[a]) * (za / (za - zb))
        if p[1] <= 0.0:
            continue
        k = (int(a), int(b))
        pts_of[k] = p
        tri_edges.setdefault(h % m, []).append(k)
    adj = {}
    for f, ks in tri_edges.items():
        if len(ks) != 2:
            continue
        adj.setdefault(ks[0], []).append(ks[1])
        adj.setdefault(ks[1], []).append(ks[0])
    if not adj:
        raise NoGridStructure("half-plane does not meet the surface")
    start = min(adj)
    order = [start]
    prev, cur = None, start
    while True:
        nxt = [k for k in adj[cur] if k != prev]
        if not nxt or nxt[0] == start:
            break
        prev, cur = cur, nxt[0]
        order.append(cur)
    pts = np.array([pts_of[k] for k in order])
    return np.stack([pts[:, 0], np.hypot(pts[:, 1], pts[:, 2])], axis=1)


def extract_profile(mesh, axis=None):
    """Profile curve of a surface of revolution about the x-axis.

    Uses the recorded grid (the ``v = 0`` ring) when present. Otherwise, if
    ``axis="x"`` is given, the mesh is sliced with the half-plane
    ``{z = 0, y > 0}``. The height is the distance to the axis, which fixes
    the reflection ambiguity of the profile.
    """
    if mesh.grid_shape is not None:
        n_u, n_v = mesh.grid_shape
        ring = mesh.vertices.reshape(n_u, n_v, 3)[:, 0, :]
        return ProfileCurve(np.stack([ring[:, 0], np.hypot(ring[:, 1], ring[:, 2])], axis=1))
    if axis is None:
        raise NoGridStructure("mesh has no grid structure and no axis hint was given")
    if axis != "x":
        raise InvalidParams("only the x-axis is supported as axis hint")
    return ProfileCurve(_slice_half_plane(mesh, 0.0))


def _polyline_distance(points, poly):
    """Max over ``points`` of the distance to the closed polyline ``poly``."""
    a = poly
    b = np.roll(poly, -1, axis=0)
    ab = b - a
    denom = np.maximum((ab**2).sum(1), np.finfo(float).tiny)
    best = np.full(len(points), np.inf)
    for s in range(0, len(points), 256):
        p = points[s : s + 256, None, :]
        tt = np.clip(((p - a) * ab).sum(-1) / denom, 0.0, 1.0)
        d = np.linalg.norm(p - (a + tt[..., None] * ab), axis=-1).min(axis=1)
        best[s : s + 256] = d
    return float(best.max())


def axisymmetry_defect(mesh, axis=None, n_angles=16):
    """Relative deviation from an exact surface of revolution about the x-axis.

    With a grid: the largest ``|f(u, v + phi) - R_phi f(u, v)|`` over all grid
    rotations ``phi = 2 pi k / n_v`` plus the largest ``|f_z(u, 0)|``, both
    divided by the diameter. Without a grid (``axis="x"``): symmetric
    Hausdorff distance between the profile slices at ``n_angles`` angles and
    the slice at angle 0, divided by the diameter.
    """
    diam = diameter(mesh)
    if mesh.grid_shape is not None:
        n_u, n_v = mesh.grid_shape
        F = mesh.vertices.reshape(n_u, n_v, 3)
        worst = 0.0
        for k in range(1, n_v):
            phi = 2.0 * np.pi * k / n_v
            rotated = F @ _rotation_x(phi).T
            shifted = np.roll(F, -k, axis=1)
            worst = max(worst, float(np.abs(shifted - rotated).max()))
        plane = float(np.abs(F[:, 0, 2]).max())
        return (worst + plane) / diam
    if axis is None:
        raise NoGridStructure("mesh has no grid structure and no axis hint was given")
    ref = _slice_half_plane(mesh, 0.0)
    worst = 0.0
    for k in range(1, n_angles):
        other = _slice_half_plane(mesh, 2.0 * np.pi * k / n_angles)
        worst = max(worst, _polyline_distance(other, ref), _polyline_distance(ref, other))
    return worst / diam
