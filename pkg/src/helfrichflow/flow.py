"""Area- and volume-preserving Helfrich flow on triangle meshes.

Each step moves the vertices along their unit normals with a speed ``d``
that solves

    (M + theta dt L M^-1 L) d = M (-2 g + mu1 H + mu2 n),

where ``g`` and ``n`` are the normal components of the discrete energy
gradient and of the volume field, ``M`` is the lumped mass matrix and ``L``
the cotangent stiffness matrix. The two scalars ``mu`` make ``d`` orthogonal
to ``H`` and ``n``, so area and volume are stationary to first order and
the energy decreases to first order for every ``dt``. With ``theta = 0``
(explicit integrator) ``d`` is exactly the normal flow velocity
``-2 grad H_c0 + lambda1 H nu + lambda2 nu``.

After the move, area and volume are restored by Newton iteration along
``H nu`` and ``nu``, and the step is accepted only if the energy did not
increase by more than ``decay_slack``; otherwise ``dt`` is halved.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .axisym import extract_profile, hyperbolic_length
from .diagnostics import kappa_concentration
from .energy import cmc_deficit, helfrich, isoperimetric_sigma, willmore
from .errors import (
    AxisTouch,
    ConfigError,
    DegenerateConstraint,
    DtUnderflow,
    MeshDegeneracy,
    MeshError,
)
from .geometry import compute_geometry, diameter, helfrich_energy_and_gradient, min_edge_length
from .mesh import TriMesh, validate, write_obj
from .multiplier import (
    DEGENERACY_FLOOR,
    MultiplierSolution,
    constraint_fields,
    l2_norm,
    lagrange_multipliers,
    remove_translations,
    solve_multipliers,
    stationarity_residual,
)

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "step",
    "t",
    "dt",
    "energy_helfrich",
    "energy_willmore",
    "area",
    "volume",
    "sigma",
    "lambda1",
    "lambda2",
    "cmc_deficit",
    "velocity_l2",
    "max_a_sq",
    "diameter",
    "hyperbolic_length",
    "kappa_rho",
    "accepted",
)

INTEGRATORS = ("semi_implicit", "explicit")


@dataclass
class FlowConfig:
    """Time-step policy, tolerances and stopping rules."""

    dt_init: float = 1e-3
    dt_min: float = 1e-14
    dt_max: float = 1.0
    dt_growth: float = 1.5
    cfl_c: float = 0.1
    integrator: str = "semi_implicit"
    implicit_weight: float = 2.0
    normal_velocity: bool = True
    fix_translation: bool = True
    constraint_tol: float = 1e-8
    decay_slack: float = 1e-10
    stop_velocity_tol: float = 1e-4
    t_max: float = math.inf
    max_steps: int = 100000
    snapshot_every: int = 0
    tangential_smoothing: bool = False
    smoothing_strength: float = 0.1
    newton_max_iter: int = 10
    degeneracy_floor: float = DEGENERACY_FLOOR
    kappa_rho: float | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ConfigError("need 0 < dt_min <= dt_init <= dt_max")
        for name in ("cfl_c", "implicit_weight", "constraint_tol", "decay_slack", "stop_velocity_tol", "degeneracy_floor"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.dt_growth < 1:
            raise ConfigError("dt_growth must be >= 1")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator must be one of {INTEGRATORS}")
        if self.t_max < 0 or self.max_steps < 0 or self.snapshot_every < 0:
            raise ConfigError("t_max, max_steps and snapshot_every must be nonnegative")
        if self.kappa_rho is not None and not self.kappa_rho > 0:
            raise ConfigError("kappa_rho must be positive")

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass
class FlowState:
    mesh: TriMesh
    t: float
    c0: float
    targets: tuple  # (A0, V0)
    last: MultiplierSolution | None = None
    energy: float = float("nan")
    step_count: int = 0
    dt: float = 0.0


@dataclass
class Trajectory:
    """Per-step records of a flow run, including rejected attempts.

    Accepted records have strictly increasing ``t``.
    """

    c0: float
    targets: tuple
    kappa_radius: float | None = None
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    def append(self, row):
        if row["accepted"]:
            acc = self.accepted()
            if acc and not row["t"] > acc[-1]["t"]:
                raise ValueError("accepted records must have increasing time")
        self.records.append(row)

    def accepted(self):
        return [r for r in self.records if r["accepted"]]

    def column(self, name, accepted_only=True):
        rows = self.accepted() if accepted_only else self.records
        return np.array([np.nan if r.get(name) is None else r[name] for r in rows], dtype=float)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in self.records:
                w.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])

    @classmethod
    def from_csv(cls, path, c0=0.0, targets=(float("nan"), float("nan"))):
        traj = cls(c0, targets)
        with open(path, encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                rec = {}
                for c in CSV_COLUMNS:
                    s = row[c]
                    if c in ("step", "accepted"):
                        rec[c] = int(s)
                    else:
                        rec[c] = None if s == "" else float(s)
                traj.records.append(rec)
        return traj


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.16e}"


@dataclass
class RunResult:
    status: str  # CONVERGED, TIMEOUT or SINGULAR
    state: FlowState
    trajectory: Trajectory
    summary: dict


# ----------------------------------------------------------------------------
# Velocity and step


def _flow_fields(mesh, c0, normal):
    """``-2 g``, ``a1`` and ``a2`` as (n, 3) fields, plus the energy.

    ``normal=True`` keeps only normal components: ``-2 <g, nu> nu``,
    ``H nu`` and ``<nu_V, nu> nu`` with ``nu_V`` the volume field.
    ``normal=False`` uses the full discrete gradient, mean curvature vector
    and volume field.
    """
    geo = compute_geometry(mesh)
    energy, grad = helfrich_energy_and_gradient(mesh, c0)
    g = grad / geo.vertex_area[:, None]
    if normal:
        nu = geo.nu
        gn = np.einsum("ij,ij->i", g, nu)
        n = np.einsum("ij,ij->i", geo.volume_normal, nu)
        return geo, energy, -2.0 * gn[:, None] * nu, geo.H[:, None] * nu, n[:, None] * nu
    return geo, energy, -2.0 * g, geo.Hvec, geo.volume_normal


def _translation_fields(geo, normal):
    if normal:
        return [geo.nu[:, i : i + 1] * geo.nu for i in range(3)]
    return [np.broadcast_to(e, geo.nu.shape) for e in np.eye(3)]


def flow_velocity(mesh, c0, normal=True, floor=DEGENERACY_FLOOR, fix_translation=True):
    """Discrete flow velocity ``-2 g + lambda1 a1 + lambda2 a2``.

    With ``fix_translation`` the velocity is also made orthogonal to the
    three rigid translations (their normal components when ``normal``).
    The smooth velocity is orthogonal to them anyway; discretely the normal
    part of the gradient keeps an O(h^2) translation component.

    Returns
    -------
    v : (n, 3) array
    sol : MultiplierSolution
    energy : float

    Raises
    ------
    DegenerateConstraint
        On surfaces of constant mean curvature.
    """
    geo, energy, G, a1, a2 = _flow_fields(mesh, c0, normal)
    sol = solve_multipliers(mesh, -0.5 * G, a1, a2, floor)
    if sol.degenerate:
        raise DegenerateConstraint(
            f"4WA - (int H)^2 = {sol.denominator:.3e} is below the floor; the surface is CMC"
        )
    if not fix_translation:
        return G + sol.lambda1 * a1 + sol.lambda2 * a2, sol, energy
    B = np.stack([a1, a2, *_translation_fields(geo, normal)], axis=0)
    Av = geo.vertex_area
    gram = np.einsum("v,ivk,jvk->ij", Av, B, B)
    mu = np.linalg.solve(gram, -np.einsum("v,ivk,vk->i", Av, B, G))
    v = G + np.einsum("i,ivk->vk", mu, B)
    sol = dataclasses.replace(sol, lambda1=float(mu[0]), lambda2=float(mu[1]))
    return v, sol, energy


def _projected_direction(mesh, c0, dt, theta, normal, fix_translation=False):
    geo, _, G, a1, a2 = _flow_fields(mesh, c0, normal)
    Av = geo.vertex_area
    n = len(Av)
    extra = _translation_fields(geo, False) if fix_translation else []
    if normal:
        # scalar normal speeds
        nu = geo.nu
        fields = np.stack([np.einsum("ij,ij->i", f, nu) for f in (G, a1, a2, *extra)], axis=1)[:, :, None]
    else:
        fields = np.stack([G, a1, a2, *extra], axis=1)
    k = fields.shape[2]
    if theta > 0:
        L = geo.L
        P = sparse.diags(Av) + (theta * dt) * (L @ sparse.diags(1.0 / Av) @ L)
        lu = splu(P.tocsc(), permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
        m = fields.shape[1]
        z = lu.solve((Av[:, None, None] * fields).reshape(n, m * k)).reshape(n, m, k)
    else:
        z = fields
    S = np.einsum("v,vik,vjk->ij", Av, fields[:, 1:], z[:, 1:])
    rhs = -np.einsum("v,vik,vk->i", Av, fields[:, 1:], z[:, 0])
    mu = np.linalg.solve(S, rhs)
    d = z[:, 0] + np.einsum("vjk,j->vk", z[:, 1:], mu)
    if normal:
        return d[:, 0:1] * geo.nu
    return d


def restore_constraints(mesh, A0, V0, tol, max_iter=10):
    """Newton iteration on ``(A - A0, V - V0)`` along ``H nu`` and ``nu``.

    Returns the corrected mesh and the number of iterations.

    Raises
    ------
    MeshDegeneracy
        If the iteration does not reach ``tol`` (relative).
    """
    for it in range(max_iter + 1):
        geo = compute_geometry(mesh)
        rA, rV = geo.area - A0, geo.volume - V0
        if abs(rA) <= tol * A0 and abs(rV) <= tol * V0:
            return mesh, it
        if it == max_iter:
            break
        a1, a2 = constraint_fields(mesh, normal=True)
        dA = -geo.Y
        dV = geo.normal_sum / 6.0
        J = np.array([[np.sum(dA * a1), np.sum(dA * a2)], [np.sum(dV * a1), np.sum(dV * a2)]])
        s, u = np.linalg.solve(J, [-rA, -rV])
        mesh = mesh.with_vertices(mesh.vertices + s * a1 + u * a2)
    raise MeshDegeneracy(f"constraint restoration did not converge (rA={rA:.3e}, rV={rV:.3e})")


def _tangential_smoothing(mesh, strength):
    geo = compute_geometry(mesh)
    adj = mesh.vertex_adjacency()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    disp = adj @ mesh.vertices / deg[:, None] - mesh.vertices
    nu = geo.nu
    disp -= np.einsum("ij,ij->i", disp, nu)[:, None] * nu
    return mesh.with_vertices(mesh.vertices + strength * disp)


def _dt_cap(mesh, cfg):
    if cfg.integrator == "explicit":
        return min(cfg.dt_max, cfg.cfl_c * min_edge_length(mesh) ** 4)
    return cfg.dt_max


def _trial(state, cfg, dt):
    theta = cfg.implicit_weight if cfg.integrator == "semi_implicit" else 0.0
    A0, V0 = state.targets
    mesh = state.mesh
    d = _projected_direction(mesh, state.c0, dt, theta, cfg.normal_velocity, cfg.fix_translation)
    cand = mesh.with_vertices(mesh.vertices + dt * d)
    rtol = 1e-3 * cfg.constraint_tol
    cand, _ = restore_constraints(cand, A0, V0, rtol, cfg.newton_max_iter)
    if cfg.tangential_smoothing:
        cand = _tangential_smoothing(cand, cfg.smoothing_strength)
        cand, _ = restore_constraints(cand, A0, V0, rtol, cfg.newton_max_iter)
    return cand


def step(state, cfg):
    """One accepted step, halving ``dt`` after every rejection.

    Returns
    -------
    new_state : FlowState
        With ``dt`` set to the step size that was accepted.
    rejections : list of (dt, candidate energy or nan)

    Raises
    ------
    DegenerateConstraint
        If the current surface has constant mean curvature.
    DtUnderflow
        If ``dt`` drops below ``cfg.dt_min``.
    """
    # fail fast on CMC input
    flow_velocity(state.mesh, state.c0, cfg.normal_velocity, cfg.degeneracy_floor, cfg.fix_translation)
    dt = min(state.dt if state.dt > 0 else cfg.dt_init, _dt_cap(state.mesh, cfg))
    E_old = helfrich(state.mesh, state.c0)
    rejections = []
    while True:
        if dt < cfg.dt_min:
            raise DtUnderflow(f"dt = {dt:.3e} below dt_min after {len(rejections)} rejections")
        try:
            cand = _trial(state, cfg, dt)
            E_new = helfrich(cand, state.c0)
        except (MeshError, np.linalg.LinAlgError, RuntimeError) as exc:
            log.debug("trial with dt=%.3e failed: %s", dt, exc)
            rejections.append((dt, float("nan"), None))
            dt *= 0.5
            continue
        if E_new <= E_old + cfg.decay_slack:
            break
        rejections.append((dt, E_new, cand))
        dt *= 0.5
    new = FlowState(
        mesh=cand,
        t=state.t + dt,
        c0=state.c0,
        targets=state.targets,
        last=None,
        energy=E_new,
        step_count=state.step_count + 1,
        dt=dt,
    )
    return new, rejections


# ----------------------------------------------------------------------------
# Run loop


def _row(state, step_no, dt, accepted, sol, vel, cfg):
    mesh = state.mesh
    geo = compute_geometry(mesh)
    hyp = None
    if mesh.grid_shape is not None:
        try:
            hyp = hyperbolic_length(extract_profile(mesh))
        except AxisTouch:
            hyp = math.inf
    kap = kappa_concentration(mesh, cfg.kappa_rho).value if cfg.kappa_rho else None
    return {
        "step": step_no,
        "t": state.t,
        "dt": dt,
        "energy_helfrich": helfrich(mesh, state.c0),
        "energy_willmore": willmore(mesh),
        "area": geo.area,
        "volume": geo.volume,
        "sigma": isoperimetric_sigma(mesh),
        "lambda1": None if sol is None else sol.lambda1,
        "lambda2": None if sol is None else sol.lambda2,
        "cmc_deficit": cmc_deficit(mesh),
        "velocity_l2": vel,
        "max_a_sq": float(geo.Asq.max()),
        "diameter": diameter(mesh),
        "hyperbolic_length": hyp,
        "kappa_rho": kap,
        "accepted": int(accepted),
    }


def _rejected_row(state, step_no, dt, energy, cand):
    row = {c: None for c in CSV_COLUMNS}
    row.update(step=step_no, t=state.t + dt, dt=dt, energy_helfrich=energy, accepted=0)
    if cand is not None:
        geo = compute_geometry(cand)
        row.update(area=geo.area, volume=geo.volume, sigma=isoperimetric_sigma(cand))
    return row


def run(mesh, c0, cfg=None, output_dir=None):
    """Flow ``mesh`` until the velocity is below ``cfg.stop_velocity_tol``.

    Targets ``(A0, V0)`` are read off the initial mesh. Termination is
    ``CONVERGED``, ``TIMEOUT`` (``t_max`` or ``max_steps`` reached) or
    ``SINGULAR`` (dt underflow or mesh degeneracy). When ``output_dir`` is
    given, ``trajectory.csv``, ``summary.json`` and ``snap_<step>.obj``
    files are written there.

    Raises
    ------
    DegenerateConstraint
        If the initial surface has constant mean curvature.
    """
    cfg = cfg or FlowConfig()
    wall0 = time.perf_counter()
    mesh = validate(mesh).mesh
    geo = compute_geometry(mesh)
    state = FlowState(mesh, 0.0, float(c0), (geo.area, geo.volume), dt=cfg.dt_init)
    vel, sol, energy = flow_velocity(mesh, c0, cfg.normal_velocity, cfg.degeneracy_floor, cfg.fix_translation)
    state.last, state.energy = sol, energy
    traj = Trajectory(float(c0), state.targets, cfg.kappa_rho)
    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)

    written = set()

    def snapshot(st):
        if output_dir is None or st.step_count in written:
            return
        path = os.path.join(output_dir, f"snap_{st.step_count}.obj")
        write_obj(st.mesh, path)
        traj.snapshots.append(path)
        written.add(st.step_count)

    vnorm = l2_norm(mesh, vel)
    traj.append(_row(state, 0, 0.0, True, sol, vnorm, cfg))
    snapshot(state)
    status, reason = None, ""
    n_rej = 0
    if cfg.tangential_smoothing:
        log.info("tangential smoothing is on (strength %g)", cfg.smoothing_strength)
    while True:
        if vnorm < cfg.stop_velocity_tol:
            status = "CONVERGED"
            break
        if state.t >= cfg.t_max or state.step_count >= cfg.max_steps:
            status, reason = "TIMEOUT", "t_max" if state.t >= cfg.t_max else "max_steps"
            break
        try:
            new, rejections = step(state, cfg)
            for dt_r, e_r, cand in rejections:
                traj.append(_rejected_row(state, state.step_count + 1, dt_r, e_r, cand))
            n_rej += len(rejections)
            vel, sol, energy = flow_velocity(new.mesh, c0, cfg.normal_velocity, cfg.degeneracy_floor, cfg.fix_translation)
        except (DtUnderflow, MeshError, DegenerateConstraint) as exc:
            status, reason = "SINGULAR", f"{type(exc).__name__}: {exc}"
            log.warning("flow stopped at t=%.6g: %s", state.t, reason)
            break
        new.last = sol
        state = new
        vnorm = l2_norm(state.mesh, vel)
        traj.append(_row(state, state.step_count, state.dt, True, sol, vnorm, cfg))
        if cfg.snapshot_every and state.step_count % cfg.snapshot_every == 0:
            snapshot(state)
        state.dt = min(state.dt * cfg.dt_growth, _dt_cap(state.mesh, cfg))
        if state.step_count % 100 == 0:
            log.info("step %d t=%.4g E=%.10g |v|=%.3e dt=%.2e", state.step_count, state.t, state.energy, vnorm, state.dt)
    snapshot(state)
    summary = _summary(state, status, reason, n_rej, traj, cfg, time.perf_counter() - wall0)
    if output_dir is not None:
        traj.to_csv(os.path.join(output_dir, "trajectory.csv"))
        with open(os.path.join(output_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return RunResult(status, state, traj, summary)


def _summary(state, status, reason, n_rej, traj, cfg, wall):
    mesh = state.mesh
    sol = state.last
    out = {
        "status": status,
        "reason": reason,
        "steps": state.step_count,
        "rejected_steps": n_rej,
        "t": state.t,
        "c0": state.c0,
        "A0": state.targets[0],
        "V0": state.targets[1],
        "energy_helfrich": helfrich(mesh, state.c0),
        "sigma": isoperimetric_sigma(mesh),
        "cmc_deficit": cmc_deficit(mesh),
        "lambda1": sol.lambda1 if sol else None,
        "lambda2": sol.lambda2 if sol else None,
        "velocity_l2": traj.accepted()[-1]["velocity_l2"],
        "tangential_smoothing": cfg.tangential_smoothing,
        "integrator": cfg.integrator,
        "wall_time_s": wall,
    }
    if sol is not None:
        res = stationarity_residual(mesh, state.c0, sol.lambda1, sol.lambda2, gradient="discrete")
        out["stationarity_residual"] = l2_norm(mesh, remove_translations(mesh, res))
        out["stationarity_residual_raw"] = l2_norm(mesh, res)
        try:
            geo_sol = lagrange_multipliers(mesh, state.c0, gradient="geometric", floor=cfg.degeneracy_floor)
            res = stationarity_residual(mesh, state.c0, geo_sol.lambda1, geo_sol.lambda2, gradient="geometric")
            out["stationarity_residual_geometric"] = l2_norm(mesh, res)
        except DegenerateConstraint:
            out["stationarity_residual_geometric"] = None
    if status == "SINGULAR":
        rho = cfg.kappa_rho or 0.1 * diameter(mesh)
        k = kappa_concentration(mesh, rho)
        out["kappa_at_singularity"] = {"rho": rho, "value": k.value, "center": [float(c) for c in k.argmax_center]}
    return out


# ----------------------------------------------------------------------------
# Parabolic rescaling


def _rescale_row(row, r):
    out = dict(row)
    factors = {
        "t": r**-4,
        "dt": r**-4,
        "area": r**-2,
        "volume": r**-3,
        "lambda1": r**2,
        "lambda2": r**3,
        "velocity_l2": r**2,
        "max_a_sq": r**2,
        "diameter": 1.0 / r,
    }
    for k, f in factors.items():
        if out.get(k) is not None:
            out[k] = out[k] * f
    return out


def parabolic_rescale(obj, r):
    """Apply ``f -> f / r`` with ``t -> t / r^4`` to a state or trajectory.

    ``c0 -> r c0``, ``A0 -> A0 / r^2``, ``V0 -> V0 / r^3``,
    ``lambda1 -> r^2 lambda1``, ``lambda2 -> r^3 lambda2``; energies,
    ``sigma`` and the hyperbolic length are unchanged.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    if not isinstance(obj, (FlowState, Trajectory)):
        raise TypeError(f"cannot rescale {type(obj).__name__}")
    A0, V0 = obj.targets
    targets = (A0 / r**2, V0 / r**3)
    if isinstance(obj, FlowState):
        last = obj.last
        if last is not None:
            last = dataclasses.replace(
                last,
                lambda1=last.lambda1 * r**2,
                lambda2=last.lambda2 * r**3,
                denominator=last.denominator / r**2,
                gram_determinant=last.gram_determinant / r**2,
            )
        return FlowState(
            mesh=obj.mesh.scaled(1.0 / r),
            t=obj.t / r**4,
            c0=obj.c0 * r,
            targets=targets,
            last=last,
            energy=obj.energy,
            step_count=obj.step_count,
            dt=obj.dt / r**4,
        )
    kr = None if obj.kappa_radius is None else obj.kappa_radius / r
    return Trajectory(
        c0=obj.c0 * r,
        targets=targets,
        kappa_radius=kr,
        records=[_rescale_row(row, r) for row in obj.records],
        snapshots=list(obj.snapshots),
    )
