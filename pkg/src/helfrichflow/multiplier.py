"""Helfrich gradient, area/volume Lagrange multipliers and the stationarity residual.

Two representatives of the L2 gradient of ``H_c0`` are available:

``geometric_gradient``
    the smooth first-variation formula
    ``2 grad H_c0 = [Lap H + |A0|^2 (H - c0) + c0 H (H - c0) / 2] nu``
    evaluated with the discrete curvatures;
``discrete_gradient``
    the exact derivative of the discrete energy divided by the vertex areas,
    so that ``sum_v A_v <g_v, phi_v>`` is the directional derivative.

The multipliers make the velocity ``-2 g + lambda1 Hnu + lambda2 nu``
orthogonal, in the lumped L2 product, to the discrete fields ``Hnu`` and
``nu`` defined as the (negative, area-normalized) Euclidean gradients of
area and volume. This is what makes the discrete area and volume rates
vanish to rounding.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .energy import total_mean_curvature, willmore
from .errors import DegenerateConstraint
from .geometry import compute_geometry, helfrich_energy_and_gradient

DEGENERACY_FLOOR = 1e-8


@dataclass
class MultiplierSolution:
    lambda1: float
    lambda2: float
    denominator: float  # 4 W A - (int H)^2
    gram_determinant: float
    degenerate: bool

    def to_dict(self):
        return asdict(self)


def geometric_gradient(mesh, c0):
    """L2 gradient of H_c0 from the first-variation formula, shape (n, 3)."""
    geo = compute_geometry(mesh)
    H = geo.H
    bracket = geo.laplacian(H) + geo.A0sq * (H - c0) + 0.5 * c0 * H * (H - c0)
    return 0.5 * bracket[:, None] * geo.nu


helfrich_gradient = geometric_gradient


def discrete_gradient(mesh, c0):
    """Exact derivative of the discrete energy, as a lumped L2 field."""
    _, grad = helfrich_energy_and_gradient(mesh, c0)
    return grad / compute_geometry(mesh).vertex_area[:, None]


def constraint_fields(mesh, normal=True):
    """Discrete ``Hnu`` and ``nu`` fields: ``-dA/dx / A_v`` and ``-dV/dx / A_v``.

    With ``normal=True`` the tangential part of the mean curvature vector is
    dropped, giving ``H nu`` with the scalar ``H``; the volume field is
    normal either way.
    """
    geo = compute_geometry(mesh)
    a1 = geo.H[:, None] * geo.nu if normal else geo.Hvec
    return a1, geo.volume_normal


def _inner(geo, a, b):
    return float(np.dot(geo.vertex_area, np.einsum("ij,ij->i", a, b)))


def _gradient_field(mesh, c0, gradient, normal):
    if gradient == "discrete":
        g = discrete_gradient(mesh, c0)
    elif gradient == "geometric":
        g = geometric_gradient(mesh, c0)
    else:
        raise ValueError(f"unknown gradient {gradient!r}")
    if normal:
        nu = compute_geometry(mesh).nu
        g = np.einsum("ij,ij->i", g, nu)[:, None] * nu
    return g


def cmc_denominator(mesh):
    """4 W A - (int H)^2, which vanishes exactly on CMC surfaces."""
    geo = compute_geometry(mesh)
    return 4.0 * willmore(mesh) * geo.area - total_mean_curvature(mesh) ** 2


def solve_multipliers(mesh, g, a1, a2, floor=DEGENERACY_FLOOR):
    """Closed-form 2x2 solve making ``-2 g + l1 a1 + l2 a2`` orthogonal to a1, a2."""
    geo = compute_geometry(mesh)
    g11, g12, g22 = _inner(geo, a1, a1), _inner(geo, a1, a2), _inner(geo, a2, a2)
    r1, r2 = 2.0 * _inner(geo, g, a1), 2.0 * _inner(geo, g, a2)
    det = g11 * g22 - g12 * g12
    denom = cmc_denominator(mesh)
    W4A = 4.0 * willmore(mesh) * geo.area
    degenerate = bool(denom < floor * W4A or det < floor * g11 * g22)
    if degenerate:
        return MultiplierSolution(float("nan"), float("nan"), denom, det, True)
    lam1 = (g22 * r1 - g12 * r2) / det
    lam2 = (g11 * r2 - g12 * r1) / det
    return MultiplierSolution(lam1, lam2, denom, det, False)


def lagrange_multipliers(mesh, c0, gradient="discrete", normal=True, floor=DEGENERACY_FLOOR):
    """Area and volume multipliers of the constrained Helfrich flow.

    Parameters
    ----------
    gradient : {"discrete", "geometric"}
        Which representative of grad H_c0 enters the right-hand side.
    normal : bool
        Use only normal components (the velocity is then purely normal).
    floor : float
        Relative floor on ``4 W A - (int H)^2`` below which the surface is
        treated as CMC.

    Raises
    ------
    DegenerateConstraint
        If the surface has (numerically) constant mean curvature.
    """
    g = _gradient_field(mesh, c0, gradient, normal)
    a1, a2 = constraint_fields(mesh, normal)
    sol = solve_multipliers(mesh, g, a1, a2, floor)
    if sol.degenerate:
        raise DegenerateConstraint(
            f"4WA - (int H)^2 = {sol.denominator:.3e} is below the floor; the surface is CMC"
        )
    return sol


def flow_velocity(mesh, c0, gradient="discrete", normal=True, floor=DEGENERACY_FLOOR):
    """Velocity ``-2 grad H_c0 + lambda1 H nu + lambda2 nu`` and its multipliers."""
    g = _gradient_field(mesh, c0, gradient, normal)
    a1, a2 = constraint_fields(mesh, normal)
    sol = solve_multipliers(mesh, g, a1, a2, floor)
    if sol.degenerate:
        raise DegenerateConstraint(
            f"4WA - (int H)^2 = {sol.denominator:.3e} is below the floor; the surface is CMC"
        )
    return -2.0 * g + sol.lambda1 * a1 + sol.lambda2 * a2, sol


def stationarity_residual(mesh, c0, lambda1, lambda2, gradient="geometric"):
    """Pointwise residual of the constrained Helfrich equation.

    ``Lap H + |A0|^2 H + c0 (H^2/2 - |A0|^2) - (lambda1 + c0^2/2) H - lambda2``

    With ``gradient="discrete"`` the first four terms are replaced by twice
    the normal component of the discrete gradient and ``H``, ``1`` by the
    normal components of the discrete constraint fields, i.e. the residual
    is ``-<v, nu>`` for the discrete flow velocity ``v``.
    """
    geo = compute_geometry(mesh)
    if gradient == "geometric":
        H = geo.H
        return (
            geo.laplacian(H)
            + geo.A0sq * H
            + c0 * (0.5 * H**2 - geo.A0sq)
            - (lambda1 + 0.5 * c0 * c0) * H
            - lambda2
        )
    if gradient != "discrete":
        raise ValueError(f"unknown gradient {gradient!r}")
    nu = geo.nu
    g = np.einsum("ij,ij->i", discrete_gradient(mesh, c0), nu)
    a2 = np.einsum("ij,ij->i", geo.volume_normal, nu)
    return 2.0 * g - lambda1 * geo.H - lambda2 * a2


def remove_translations(mesh, residual):
    """Lumped-L2 projection of a scalar normal field off ``<e_i, nu>``.

    Rigid translations move a surface without changing any energy, so a
    normal residual is only meaningful modulo their normal components.
    """
    geo = compute_geometry(mesh)
    T = geo.nu.T
    gram = (T * geo.vertex_area) @ T.T
    coef = np.linalg.solve(gram, (T * geo.vertex_area) @ residual)
    return residual - coef @ T


def l2_norm(mesh, field):
    """Lumped L2 norm of a scalar or vector field."""
    geo = compute_geometry(mesh)
    f = np.asarray(field)
    sq = f**2 if f.ndim == 1 else np.einsum("ij,ij->i", f, f)
    return float(np.sqrt(np.dot(geo.vertex_area, sq)))
