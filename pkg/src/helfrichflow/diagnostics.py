"""Analysis quantities: energy threshold, Li-Yau functional, curvature concentration.

Pointwise integrals use the same vertex-lumped quadrature as the energies.
Ball-restricted integrals keep a vertex when it lies in the closed ball.
Singular integrands drop the vertices within ``2 h`` (``h`` the mean edge
length) of the singular point; the dropped area is reported.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .energy import helfrich, isoperimetric_sigma, willmore
from .errors import InvalidParams, OriginOnSurface, PointOnSurfaceUnresolved, SigmaOutOfRange
from .geometry import compute_geometry, mean_edge_length
from .multiplier import DEGENERACY_FLOOR, cmc_denominator

log = logging.getLogger(__name__)

C_DIAM_DEFAULT = 1.0
C_DIAM_WARNING = (
    "C_diam is the best constant of a diameter estimate and has no known numerical value; "
    "the neg_c0 branch of omega depends on the configured value"
)
SIGMA_TOL = 1e-3
EXCLUSION_FACTOR = 2.0
EXCLUDED_AREA_MAX = 0.01


# ----------------------------------------------------------------------------
# Energy threshold


def omega(A0, V0, c0, C_diam=C_DIAM_DEFAULT):
    """Energy threshold below which flow limits stay embedded.

    Returns
    -------
    value : float
    branch : {"neg_c0", "pos_plus_part", "pos_volume"}
        ``neg_c0`` for ``c0 < 0``; otherwise the larger of the two ``c0 >= 0``
        candidates (ties go to ``pos_plus_part``).
    """
    if A0 <= 0 or V0 <= 0 or C_diam <= 0:
        raise InvalidParams("omega needs A0, V0, C_diam > 0")
    if c0 < 0:
        return 4.0 * math.pi + math.sqrt((4.0 * math.pi) ** 2 + abs(c0) * V0 / (2.0 * C_diam**2 * A0)), "neg_c0"
    plus = max(0.0, math.sqrt(8.0 * math.pi) - 0.5 * math.sqrt(c0 * c0 * A0)) ** 2
    vol = 8.0 * math.pi - 6.0 * c0 * (4.0 * math.pi**2 * V0) ** (1.0 / 3.0)
    if vol > plus * (1.0 + 1e-12):
        return vol, "pos_volume"
    return plus, "pos_plus_part"


@dataclass
class ThresholdReport:
    omega: float
    branch_used: str
    sqrt_energy: float
    sqrt_term_a: float
    sqrt_term_b: float
    admissible: bool
    margin_a: float
    margin_b: float
    strict_admissible: bool
    sigma: float
    area: float
    volume: float
    c0: float
    C_diam: float
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def threshold_check(mesh, c0, C_diam=C_DIAM_DEFAULT, sigma_tol=SIGMA_TOL):
    """Evaluate the energy threshold for the flow started at ``mesh``.

    ``admissible`` is the non-strict test
    ``sqrt(H_c0) <= min(sqrt(omega), sqrt(4 pi / sigma) - c0 sqrt(A) / 2)``;
    ``strict_admissible`` uses ``<``. Both margins are reported
    (positive means the inequality holds).

    Raises
    ------
    SigmaOutOfRange
        If ``sigma >= 1 - sigma_tol`` or the mean curvature is numerically
        constant (the flow is undefined on round spheres).
    """
    geo = compute_geometry(mesh)
    A, V = geo.area, geo.volume
    sigma = isoperimetric_sigma(mesh)
    if not (0.0 < sigma < 1.0 - sigma_tol):
        raise SigmaOutOfRange(f"sigma = {sigma:.9f} is not below 1 - {sigma_tol:g}")
    if cmc_denominator(mesh) < DEGENERACY_FLOOR * 4.0 * willmore(mesh) * A:
        raise SigmaOutOfRange("mean curvature is constant to within the degeneracy floor (round sphere)")
    om, branch = omega(A, V, c0, C_diam)
    e = math.sqrt(helfrich(mesh, c0))
    ta = math.sqrt(om)
    tb = math.sqrt(4.0 * math.pi / sigma) - 0.5 * c0 * math.sqrt(A)
    ma, mb = ta - e, tb - e
    warnings = [C_DIAM_WARNING]
    if branch == "neg_c0":
        log.warning(C_DIAM_WARNING)
    return ThresholdReport(
        omega=om,
        branch_used=branch,
        sqrt_energy=e,
        sqrt_term_a=ta,
        sqrt_term_b=tb,
        admissible=bool(ma >= 0 and mb >= 0),
        margin_a=ma,
        margin_b=mb,
        strict_admissible=bool(ma > 0 and mb > 0),
        sigma=sigma,
        area=A,
        volume=V,
        c0=float(c0),
        C_diam=float(C_diam),
        warnings=warnings,
    )


# ----------------------------------------------------------------------------
# Singular integrals


def _exclusion_mask(mesh, point, error_cls):
    geo = compute_geometry(mesh)
    radius = EXCLUSION_FACTOR * mean_edge_length(mesh)
    d = np.linalg.norm(mesh.vertices - point, axis=1)
    near = d <= radius
    dropped = float(geo.vertex_area[near].sum())
    if dropped > EXCLUDED_AREA_MAX * geo.area:
        raise error_cls(
            f"point lies on the surface: excluding a {radius:.3e} neighbourhood drops "
            f"{dropped / geo.area:.2%} of the area"
        )
    return ~near, dropped


@dataclass
class LiYauResult:
    value: float
    multiplicity_bound: int
    excluded_area: float

    def to_dict(self):
        return asdict(self)


def li_yau_functional(mesh, point, c0, tol=1e-6):
    """``H_c0 - 2 c0 int <f - p, nu> / |f - p|^2 dmu`` and the multiplicity bound.

    The normal field is the volume-consistent one, so for the centre of a
    sphere the singular integral equals ``-3 V / r^2`` exactly.
    """
    p = np.asarray(point, dtype=float)
    geo = compute_geometry(mesh)
    keep, dropped = _exclusion_mask(mesh, p, PointOnSurfaceUnresolved)
    x = mesh.vertices[keep] - p
    nu = geo.volume_normal[keep]
    integrand = np.einsum("ij,ij->i", x, nu) / np.einsum("ij,ij->i", x, x)
    singular = float(np.dot(geo.vertex_area[keep], integrand))
    value = helfrich(mesh, c0) - 2.0 * c0 * singular
    return LiYauResult(value, int(math.floor(value / (4.0 * math.pi) + tol)), dropped)


# ----------------------------------------------------------------------------
# Curvature concentration


@dataclass
class KappaResult:
    value: float
    argmax_center: np.ndarray
    argmax_vertex: int
    rho: float

    def to_dict(self):
        return {
            "value": self.value,
            "argmax_center": [float(c) for c in self.argmax_center],
            "argmax_vertex": self.argmax_vertex,
            "rho": self.rho,
        }


def _ball_sums(points, centers, weights, rho, chunk=1024):
    out = np.empty(len(centers))
    r2 = rho * rho
    sq = (points**2).sum(1)
    for s in range(0, len(centers), chunk):
        c = centers[s : s + chunk]
        d2 = sq[None, :] - 2.0 * c @ points.T + (c**2).sum(1)[:, None]
        out[s : s + chunk] = (d2 <= r2) @ weights
    return out


def kappa_concentration(mesh, rho, refine=False):
    """``sup_x int_{B_rho(x)} |A|^2 dmu`` over centres at the vertices.

    With ``refine=True`` a 5x5x5 grid of spacing ``h / 2`` around the best
    vertex is also tried. Ties go to the lowest vertex index.
    """
    if rho <= 0:
        raise InvalidParams("rho must be positive")
    geo = compute_geometry(mesh)
    w = geo.Asq * geo.vertex_area
    x = mesh.vertices
    sums = _ball_sums(x, x, w, rho)
    k = int(np.argmax(sums))
    best, center = float(sums[k]), x[k].copy()
    if refine:
        step = 0.5 * mean_edge_length(mesh)
        g = np.arange(-2, 3) * step
        offs = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
        cand = x[k] + offs
        vals = _ball_sums(x, cand, w, rho)
        j = int(np.argmax(vals))
        if vals[j] > best:
            best, center = float(vals[j]), cand[j]
    return KappaResult(best, center, k, float(rho))


# ----------------------------------------------------------------------------
# Monotonicity quantity


@dataclass
class GammaProfile:
    rho: np.ndarray
    values: np.ndarray
    violations: list  # indices k with values[k+1] < values[k] - tol
    tol: float
    excluded_area: float

    def to_dict(self):
        return {
            "rho": self.rho.tolist(),
            "values": self.values.tolist(),
            "violations": self.violations,
            "tol": self.tol,
            "excluded_area": self.excluded_area,
        }


def gamma_monotonicity(mesh, c0, rho_list, tol=1e-4):
    """Monotonicity quantity about the origin at each radius in ``rho_list``.

    ``mu(B)/rho^2 + 1/16 int_B (H - c0)^2 - c0/2 int_B <h, nu>/|h|^2
    + 1/(2 rho^2) int_B <h, nu> H`` over the closed ball ``B`` of radius
    ``rho``. The last term uses the mean curvature vector, for which
    ``sum_v <x_v, Hvec_v> A_v = -2 A`` holds exactly.

    Raises
    ------
    OriginOnSurface
        If the origin is too close to the surface for the ``1/|h|^2`` term.
    """
    rho = np.asarray(rho_list, dtype=float)
    if np.any(rho <= 0) or np.any(np.diff(rho) < 0):
        raise InvalidParams("rho_list must be positive and sorted ascending")
    geo = compute_geometry(mesh)
    x = mesh.vertices
    Av = geo.vertex_area
    r = np.linalg.norm(x, axis=1)
    dropped = 0.0
    if c0 != 0.0:
        keep, dropped = _exclusion_mask(mesh, np.zeros(3), OriginOnSurface)
    else:
        keep = np.ones(len(x), bool)
    hn = np.einsum("ij,ij->i", x, geo.volume_normal)
    sing = np.where(keep, hn / np.where(keep, r * r, 1.0), 0.0)
    hH = np.einsum("ij,ij->i", x, geo.Hvec)
    dens = (geo.H - c0) ** 2 * Av / 16.0 - 0.5 * c0 * sing * Av
    order = np.argsort(r, kind="stable")
    rs = r[order]
    cum_area = np.concatenate([[0.0], np.cumsum(Av[order])])
    cum_dens = np.concatenate([[0.0], np.cumsum(dens[order])])
    cum_hH = np.concatenate([[0.0], np.cumsum((hH * Av)[order])])
    idx = np.searchsorted(rs, rho, side="right")
    vals = (cum_area[idx] + 0.5 * cum_hH[idx]) / rho**2 + cum_dens[idx]
    viol = [int(k) for k in np.flatnonzero(np.diff(vals) < -tol)]
    return GammaProfile(rho, vals, viol, tol, dropped)


# ----------------------------------------------------------------------------
# Localized energy


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def bump(distance, rho):
    """Cutoff equal to 1 on ``B_{rho/2}`` and 0 outside ``B_rho``."""
    return smooth_step(2.0 * (1.0 - np.asarray(distance) / rho))


def localized_curvature_energy(mesh, center, rho):
    """``int |A|^2 phi^4 dmu`` with ``phi`` the smooth cutoff around ``center``."""
    if rho <= 0:
        raise InvalidParams("rho must be positive")
    geo = compute_geometry(mesh)
    d = np.linalg.norm(mesh.vertices - np.asarray(center, dtype=float), axis=1)
    return geo.integrate(geo.Asq * bump(d, rho) ** 4)
