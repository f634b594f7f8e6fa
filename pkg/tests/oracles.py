"""Independent reference computations used by the tests.

Nothing here imports the package under test except where noted; the
smooth-surface oracles integrate the revolution parametrizations with
scipy quadrature, and the mesh oracles assemble their quantities from
per-triangle formulas written out from scratch.
"""

import math

import numpy as np
from scipy import integrate


# ----------------------------------------------------------------------------
# Torus of revolution: tube radius a, centre-line radius R.
# Point at tube angle u, rotation angle v; distance to the axis rho = R + a sin u.
# With inward normal, H = 1/a + sin u / (R + a sin u).


def _torus_quad(f, R, a):
    val, _ = integrate.quad(lambda u: f(u) * a * (R + a * math.sin(u)), 0.0, 2.0 * math.pi, epsabs=1e-13, epsrel=1e-13)
    return 2.0 * math.pi * val


def torus_area(R, a):
    return _torus_quad(lambda u: 1.0, R, a)


def torus_volume(R, a):
    # Pappus with the cross-section disk integrated in polar coordinates
    val, _ = integrate.dblquad(
        lambda s, u: 2.0 * math.pi * (R + s * math.sin(u)) * s, 0.0, 2.0 * math.pi, 0.0, a, epsabs=1e-13, epsrel=1e-13
    )
    return val


def torus_principal(u, R, a):
    u = np.asarray(u, dtype=float)
    return 1.0 / a + 0.0 * u, np.sin(u) / (R + a * np.sin(u))


def torus_mean_curvature(u, R, a):
    k1, k2 = torus_principal(u, R, a)
    return k1 + k2


def torus_helfrich(R, a, c0):
    return _torus_quad(lambda u: 0.25 * (float(torus_mean_curvature(u, R, a)) - c0) ** 2, R, a)


def torus_cmc_deficit(R, a):
    A = torus_area(R, a)
    hbar = _torus_quad(lambda u: float(torus_mean_curvature(u, R, a)), R, a) / A
    return _torus_quad(lambda u: 0.25 * (float(torus_mean_curvature(u, R, a)) - hbar) ** 2, R, a)


def torus_tracefree_sq(u, R, a):
    k1, k2 = torus_principal(u, R, a)
    return 0.5 * (k1 - k2) ** 2


def torus_li_yau_at_center(R, a, c0):
    """``H_c0 - 2 c0 int <f, nu> / |f|^2`` for the axis centre ``p = 0``.

    ``f = (a cos u, rho cos v, rho sin v)``, inward
    ``nu = -(cos u, sin u cos v, sin u sin v)``, so
    ``<f, nu> = -(a + R sin u)`` and ``|f|^2 = R^2 + a^2 + 2 R a sin u``.
    """
    sing = _torus_quad(lambda u: -(a + R * math.sin(u)) / (R * R + a * a + 2.0 * R * a * math.sin(u)), R, a)
    return torus_helfrich(R, a, c0) - 2.0 * c0 * sing


def hyperbolic_circle_length(R, a):
    """Hyperbolic length of the circle of radius a at height R, by quadrature."""
    val, _ = integrate.quad(lambda s: a / (R + a * math.sin(s)), 0.0, 2.0 * math.pi, epsabs=1e-13, epsrel=1e-13)
    return val


# ----------------------------------------------------------------------------
# Ellipsoid x^2/a^2 + y^2/b^2 + z^2/c^2 = 1


def ellipsoid_mean_curvature(points, axes):
    """Sum of principal curvatures (inward normal) at points on the ellipsoid.

    ``div(n / |n|)`` for ``n = grad F``, ``F = sum x_i^2 / (2 a_i^2)``.
    """
    inv = 1.0 / np.asarray(axes, dtype=float) ** 2
    n = points * inv
    nn = np.sqrt((n**2).sum(1))
    return (inv.sum() * nn**2 - (n**2 * inv).sum(1)) / nn**3


# ----------------------------------------------------------------------------
# Unit sphere quantities


def gamma_translated_unit_sphere(d, rho, c0=0.0):
    """Monotonicity quantity about the origin for the unit sphere centred at distance d.

    For the sphere, H = 2, ``<h, Hvec> = -2 <h, n_out>``,
    ``<h, n_out> = (|h|^2 + 1 - d^2) / 2`` and the area of
    ``{|h| <= r}`` on the sphere is ``pi (r^2 - (d - 1)^2) / d``; only c0 = 0.
    """
    if c0 != 0.0:
        raise NotImplementedError
    m, M = (d - 1.0) ** 2, (d + 1.0) ** 2
    P = min(max(rho * rho, m), M)
    # d(area) = pi / d * d(s), s = |h|^2
    area = math.pi / d * (P - m)
    energy = area * 4.0 / 16.0
    # int <h, Hvec> = int -2 * (s + 1 - d^2) / 2 * pi/d ds
    hH = -math.pi / d * ((P * P - m * m) / 2.0 + (1.0 - d * d) * (P - m))
    return (area + 0.5 * hH) / rho**2 + energy


def unit_sphere_bump_energy(rho, bump):
    """``int |A|^2 phi^4`` on the unit sphere for a bump centred at a surface point.

    Points at chord distance s from the centre have area element
    ``2 pi s ds``; ``|A|^2 = 2``.
    """
    val, _ = integrate.quad(lambda s: 2.0 * bump(s, rho) ** 4 * 2.0 * math.pi * s, 0.0, min(rho, 2.0), limit=200)
    return val


# ----------------------------------------------------------------------------
# Threshold


def omega_reference(A0, V0, c0, C):
    if c0 < 0:
        return 4 * math.pi + math.sqrt(16 * math.pi**2 + abs(c0) * V0 / (2 * C * C * A0))
    a = max(math.sqrt(8 * math.pi) - 0.5 * abs(c0) * math.sqrt(A0), 0.0) ** 2
    b = 8 * math.pi - 6 * c0 * (4 * math.pi**2 * V0) ** (1 / 3)
    return max(a, b)


# ----------------------------------------------------------------------------
# Mesh-level oracles


def triangle_area_volume_gradients(vertices, triangles):
    """Euclidean gradients of total area and enclosed volume, per vertex."""
    p0, p1, p2 = (vertices[triangles[:, k]] for k in range(3))
    cr = np.cross(p1 - p0, p2 - p0)
    nhat = cr / np.linalg.norm(cr, axis=1, keepdims=True)
    gA = np.zeros_like(vertices)
    gV = np.zeros_like(vertices)
    for k, (a, b) in enumerate(((p1, p2), (p2, p0), (p0, p1))):
        np.add.at(gA, triangles[:, k], 0.5 * np.cross(b - a, nhat))
        np.add.at(gV, triangles[:, k], np.cross(a, b) / 6.0)
    return gA, gV


def orthogonality_multipliers(vertices, triangles, speed_grad, speed_H, speed_n, nu):
    """Multipliers making ``dA/dt = dV/dt = 0`` for the normal velocity.

    The velocity is ``(-2 speed_grad + l1 speed_H + l2 speed_n) nu``; the rates
    are assembled from the triangle-level area and volume gradients.
    """
    gA, gV = triangle_area_volume_gradients(vertices, triangles)
    a = np.einsum("ij,ij->i", gA, nu)
    v = np.einsum("ij,ij->i", gV, nu)
    M = np.array([[a @ speed_H, a @ speed_n], [v @ speed_H, v @ speed_n]])
    rhs = 2.0 * np.array([a @ speed_grad, v @ speed_grad])
    return np.linalg.solve(M, rhs)


def central_difference(f, x0, direction, eps):
    return (f(x0 + eps * direction) - f(x0 - eps * direction)) / (2.0 * eps)
