"""Scalar functionals of a closed surface."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import compute_geometry

ABS_TOL = 1e-9
REL_TOL = 1e-6


@dataclass
class EnergyReport:
    willmore: float
    helfrich: float
    c0: float
    w0: float
    cmc_deficit: float
    total_mean_curvature: float
    sigma: float
    area: float
    volume: float
    genus: int

    def to_dict(self):
        return asdict(self)


def willmore(mesh):
    """W = 1/4 int H^2 dmu."""
    geo = compute_geometry(mesh)
    return 0.25 * geo.integrate(geo.H**2)


def helfrich(mesh, c0):
    """H_c0 = 1/4 int (H - c0)^2 dmu."""
    geo = compute_geometry(mesh)
    return 0.25 * geo.integrate((geo.H - c0) ** 2)


def total_mean_curvature(mesh):
    geo = compute_geometry(mesh)
    return geo.integrate(geo.H)


def tracefree_energy(mesh):
    """W0 = int |A0|^2 dmu."""
    geo = compute_geometry(mesh)
    return geo.integrate(geo.A0sq)


def cmc_deficit(mesh):
    """1/4 int (H - Hbar)^2 dmu with Hbar the area-weighted mean of H.

    Satisfies ``4 W A - (int H)^2 = 4 A cmc_deficit`` at the discrete level,
    since both sides are the same weighted variance.
    """
    geo = compute_geometry(mesh)
    hbar = geo.integrate(geo.H) / geo.area
    return 0.25 * geo.integrate((geo.H - hbar) ** 2)


def isoperimetric_sigma(mesh):
    """36 pi V^2 / A^3; equals 1 only for round spheres."""
    geo = compute_geometry(mesh)
    return 36.0 * math.pi * geo.volume**2 / geo.area**3


def willmore_helfrich_bound(mesh, c0, abs_tol=ABS_TOL, rel_tol=REL_TOL):
    """Compare W with the upper bound (sqrt(H_c0) + sqrt(c0^2 A) / 2)^2."""
    lhs = willmore(mesh)
    rhs = (math.sqrt(helfrich(mesh, c0)) + 0.5 * math.sqrt(c0 * c0 * compute_geometry(mesh).area)) ** 2
    return {"lhs": lhs, "rhs": rhs, "holds": bool(lhs <= rhs + abs_tol + rel_tol * abs(rhs))}


def energy_report(mesh, c0=0.0):
    geo = compute_geometry(mesh)
    return EnergyReport(
        willmore=willmore(mesh),
        helfrich=helfrich(mesh, c0),
        c0=float(c0),
        w0=tracefree_energy(mesh),
        cmc_deficit=cmc_deficit(mesh),
        total_mean_curvature=total_mean_curvature(mesh),
        sigma=isoperimetric_sigma(mesh),
        area=geo.area,
        volume=geo.volume,
        genus=int(mesh.genus),
    )


def variance_identity_gap(mesh):
    """|4 W A - (int H)^2 - 4 A deficit| relative to 4 W A."""
    geo = compute_geometry(mesh)
    W = willmore(mesh)
    lhs = 4.0 * W * geo.area - total_mean_curvature(mesh) ** 2
    return abs(lhs - 4.0 * geo.area * cmc_deficit(mesh)) / (4.0 * W * geo.area)


def gauss_bonnet_gap(mesh):
    """|int K dmu - 4 pi (1 - g)| relative to 1 + |int K dmu|."""
    geo = compute_geometry(mesh)
    total = float(np.sum(geo.angle_defect))
    return abs(total - 4.0 * math.pi * (1 - mesh.genus)) / (1.0 + abs(total))
