"""Command-line entry point: ``generate``, ``flow``, ``analyze`` and ``certify``.

Every command takes one configuration file of ``key = value`` lines; text
after ``#`` is a comment. Unknown or repeated keys are errors, relative
paths are resolved against the directory of the configuration file, and
the fully resolved configuration is echoed to ``resolved_config.txt`` in
the output directory (``certify`` also embeds it in its JSON report).

Exit codes: 0 success, 3 certification negative, 2 error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import axisym
from .diagnostics import (
    C_DIAM_DEFAULT,
    SIGMA_TOL,
    gamma_monotonicity,
    kappa_concentration,
    li_yau_functional,
    threshold_check,
)
from .energy import energy_report
from .errors import ConfigError, HelfrichFlowError, SigmaOutOfRange
from .flow import FlowConfig, run
from .geometry import diameter
from .mesh import icosphere, read_obj, validate, write_obj

log = logging.getLogger(__name__)

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 2, 3
COMMANDS = ("generate", "flow", "analyze", "certify")
MESH_KINDS = ("sphere", "ellipsoid", "torus", "perturbed_sphere", "biconcave", "dumbbell")


# ----------------------------------------------------------------------------
# Value parsers


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    return [float(x) for x in text.replace(",", " ").split()]


def _vec3(text):
    v = _floats(text)
    if len(v) != 3:
        raise ValueError(f"expected three numbers, got {len(v)}")
    return v


def _points(text):
    return [_vec3(p) for p in text.split(";") if p.strip()]


def _modes(text):
    out = {}
    for item in text.replace(",", " ").split():
        deg, _, amp = item.partition(":")
        out[int(deg)] = float(amp)
    return out


def _optional_float(text):
    return None if text.strip().lower() in ("", "none") else float(text)


def _choice(options):
    def parse(text):
        t = text.strip()
        if t not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return t

    return parse


@dataclass(frozen=True)
class Key:
    parse: object
    default: object
    commands: tuple
    help: str
    is_path: bool = False


_G, _F, _A, _C = ("generate",), ("flow",), ("analyze",), ("certify",)
_FLOW_DEFAULTS = FlowConfig()

KEYS = {
    # shared
    "mesh_in": Key(str, None, _F + _A + _C, "input OBJ mesh", True),
    "output_dir": Key(str, "output", _G + _F + _A + _C, "directory for all outputs", True),
    "c0": Key(float, 0.0, _G + _F + _A + _C, "spontaneous curvature"),
    "C_diam": Key(float, C_DIAM_DEFAULT, _A + _C, "diameter-estimate constant used by omega for c0 < 0"),
    "sigma_tol": Key(float, SIGMA_TOL, _A + _C, "isoperimetric ratios above 1 - sigma_tol are rejected"),
    "log_level": Key(str, "WARNING", _G + _F + _A + _C, "python logging level"),
    # generate
    "mesh_kind": Key(_choice(MESH_KINDS), None, _G, "one of " + ", ".join(MESH_KINDS)),
    "mesh_out": Key(str, "mesh.obj", _G, "output OBJ (relative to the config file); a .json sidecar is written next to it", True),
    "radius": Key(float, 1.0, _G, "sphere, perturbed_sphere and biconcave radius"),
    "axes": Key(_vec3, [1.0, 1.0, 1.3], _G, "ellipsoid semi-axes"),
    "R": Key(float, 2.0, _G, "torus distance from axis to tube centre"),
    "a": Key(float, 1.0, _G, "torus tube radius"),
    "n_u": Key(int, 64, _G, "torus nodes along the profile"),
    "n_v": Key(int, 32, _G, "torus nodes around the axis"),
    "subdiv": Key(int, 4, _G, "icosphere subdivision level for sphere-like kinds"),
    "modes": Key(_modes, {}, _G, "perturbed_sphere Legendre amplitudes, e.g. '2:0.1, 3:0.05'"),
    "target_sigma": Key(_optional_float, None, _G, "solve the perturbation (or biconcave thickness) for this ratio"),
    "mode": Key(int, 2, _G, "Legendre degree adjusted to reach target_sigma"),
    "jitter": Key(float, 0.0, _G, "relative seeded radial noise for perturbed_sphere"),
    "seed": Key(int, 0, _G, "seed for jitter"),
    "thickness": Key(float, 1.0, _G, "biconcave thickness factor"),
    "neck": Key(float, 0.35, _G, "dumbbell neck radius factor"),
    "neck_width": Key(float, 0.3, _G, "dumbbell neck width"),
    "length": Key(float, 1.5, _G, "dumbbell half length"),
    # flow
    "dt_init": Key(float, _FLOW_DEFAULTS.dt_init, _F, "initial time step"),
    "dt_min": Key(float, _FLOW_DEFAULTS.dt_min, _F, "time steps below this end the run as SINGULAR"),
    "dt_max": Key(float, _FLOW_DEFAULTS.dt_max, _F, "largest time step"),
    "dt_growth": Key(float, _FLOW_DEFAULTS.dt_growth, _F, "time-step growth factor after an accepted step"),
    "cfl_c": Key(float, _FLOW_DEFAULTS.cfl_c, _F, "explicit integrator: dt <= cfl_c * h^4"),
    "integrator": Key(_choice(("semi_implicit", "explicit")), _FLOW_DEFAULTS.integrator, _F, "semi_implicit or explicit"),
    "implicit_weight": Key(float, _FLOW_DEFAULTS.implicit_weight, _F, "weight of the implicit bilaplacian term"),
    "normal_velocity": Key(_bool, _FLOW_DEFAULTS.normal_velocity, _F, "move vertices along normals only"),
    "fix_translation": Key(_bool, _FLOW_DEFAULTS.fix_translation, _F, "remove rigid translations from the velocity"),
    "constraint_tol": Key(float, _FLOW_DEFAULTS.constraint_tol, _F, "relative area/volume tolerance per step"),
    "decay_slack": Key(float, _FLOW_DEFAULTS.decay_slack, _F, "allowed energy increase per accepted step"),
    "stop_velocity_tol": Key(float, _FLOW_DEFAULTS.stop_velocity_tol, _F, "CONVERGED once the velocity L2 norm is below this"),
    "t_max": Key(float, _FLOW_DEFAULTS.t_max, _F, "TIMEOUT at this flow time"),
    "max_steps": Key(int, _FLOW_DEFAULTS.max_steps, _F, "TIMEOUT after this many accepted steps"),
    "snapshot_every": Key(int, _FLOW_DEFAULTS.snapshot_every, _F, "write snap_<step>.obj every n steps (0: first and last only)"),
    "tangential_smoothing": Key(_bool, _FLOW_DEFAULTS.tangential_smoothing, _F, "redistribute vertices tangentially after each step"),
    "smoothing_strength": Key(float, _FLOW_DEFAULTS.smoothing_strength, _F, "tangential smoothing step size"),
    "newton_max_iter": Key(int, _FLOW_DEFAULTS.newton_max_iter, _F, "constraint restoration iterations"),
    "degeneracy_floor": Key(float, _FLOW_DEFAULTS.degeneracy_floor, _F, "relative floor of 4WA - (int H)^2 that counts as CMC"),
    # flow and analyze
    "kappa_rho": Key(_floats, [], _F + _A, "curvature concentration radii; flow records the first one per step"),
    # analyze
    "gamma_rho": Key(_floats, [], _A, "radii for the monotonicity quantity about the origin"),
    "gamma_tol": Key(float, 1e-4, _A, "tolerance for monotonicity violations"),
    "liyau_points": Key(_points, [], _A, "points for the Li-Yau functional, e.g. '0 0 0; 3 0 0'"),
    "axis": Key(_choice(("grid", "x")), "grid", _A, "profile extraction: recorded grid or slicing about the x axis"),
}


def keys_help():
    lines = ["configuration keys (key = value, '#' starts a comment):"]
    for name, key in KEYS.items():
        default = "required" if key.default is None and name in ("mesh_in", "mesh_kind") else repr(key.default)
        lines.append(f"  {name:22s} [{', '.join(key.commands)}] {key.help} (default {default})")
    return "\n".join(lines)


# ----------------------------------------------------------------------------
# Configuration


def parse_config(path, command):
    """Read a ``key = value`` file into a dict with defaults filled in.

    Raises
    ------
    ConfigError
        On unknown, repeated or malformed keys, or a missing required key.
    """
    path = Path(path)
    base = path.resolve().parent
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        name = name.strip()
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        if name not in KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {name!r}")
        if name in raw:
            raise ConfigError(f"{path}:{lineno}: key {name!r} given twice")
        raw[name] = value.strip()
    cfg = {}
    for name, key in KEYS.items():
        if command not in key.commands:
            continue
        if name in raw:
            try:
                cfg[name] = key.parse(raw[name])
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for {name}: {exc}") from exc
        else:
            cfg[name] = key.default
        if key.is_path and cfg[name] is not None:
            cfg[name] = str((base / cfg[name]).resolve())
    for name in ("mesh_in",) if command != "generate" else ("mesh_kind",):
        if cfg.get(name) is None:
            raise ConfigError(f"{path}: missing required key {name!r}")
    return cfg


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, dict):
        return ", ".join(f"{k}:{x!r}" for k, x in sorted(v.items()))
    if isinstance(v, list):
        if v and isinstance(v[0], list):
            return "; ".join(" ".join(repr(x) for x in p) for p in v)
        return ", ".join(repr(x) for x in v)
    return "none" if v is None else str(v)


def resolved_config_text(cfg):
    return "".join(f"{k} = {_format_value(v)}\n" for k, v in sorted(cfg.items()))


def _write_resolved(cfg):
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.txt").write_text(resolved_config_text(cfg), encoding="utf-8")
    return out


# ----------------------------------------------------------------------------
# JSON and CSV output


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def dump_json(obj, path=None):
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _write_profile(path, rho, values):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rho", "value"])
        for r, v in zip(rho, values):
            w.writerow([f"{r:.16e}", f"{v:.16e}"])


# ----------------------------------------------------------------------------
# Commands


def build_mesh(cfg):
    kind = cfg["mesh_kind"]
    if kind == "sphere":
        return validate(icosphere(cfg["subdiv"], cfg["radius"])).mesh
    if kind == "ellipsoid":
        return axisym.make_ellipsoid(tuple(cfg["axes"]), cfg["subdiv"])
    if kind == "torus":
        return axisym.make_torus(cfg["R"], cfg["a"], cfg["n_u"], cfg["n_v"])
    if kind == "perturbed_sphere":
        return axisym.make_perturbed_sphere(
            cfg["radius"], cfg["modes"], cfg["target_sigma"], cfg["mode"], cfg["subdiv"], cfg["jitter"], cfg["seed"]
        )
    if kind == "biconcave":
        return axisym.make_biconcave(cfg["radius"], cfg["thickness"], cfg["target_sigma"], cfg["subdiv"])
    return axisym.make_dumbbell(cfg["neck"], cfg["neck_width"], cfg["length"], cfg["subdiv"])


def cmd_generate(cfg):
    """Write the generated mesh and a JSON sidecar with A, V, sigma, W and H_c0."""
    _write_resolved(cfg)
    mesh = build_mesh(cfg)
    out = Path(cfg["mesh_out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    write_obj(mesh, out)
    rep = energy_report(mesh, cfg["c0"])
    sidecar = {
        "mesh_kind": cfg["mesh_kind"],
        "n_vertices": mesh.n_vertices,
        "n_triangles": len(mesh.triangles),
        "area": rep.area,
        "volume": rep.volume,
        "sigma": rep.sigma,
        "willmore": rep.willmore,
        "helfrich": rep.helfrich,
        "c0": rep.c0,
        "genus": rep.genus,
    }
    dump_json(sidecar, out.with_suffix(".json"))
    return EXIT_OK, sidecar


def _flow_config(cfg):
    fields = {k: cfg[k] for k in KEYS if "flow" in KEYS[k].commands and k in FlowConfig.__dataclass_fields__}
    fields["kappa_rho"] = cfg["kappa_rho"][0] if cfg["kappa_rho"] else None
    return FlowConfig(**fields)


def cmd_flow(cfg):
    """Run the flow; writes trajectory.csv, summary.json and snapshots."""
    fc = _flow_config(cfg)
    out = _write_resolved(cfg)
    mesh = read_obj(cfg["mesh_in"])
    result = run(mesh, cfg["c0"], fc, output_dir=str(out))
    return EXIT_OK, result.summary


def analyze_mesh(mesh, cfg):
    """All diagnostics of one mesh as a JSON-ready dict plus profile arrays."""
    c0 = cfg["c0"]
    doc = {"c0": c0, "energy": energy_report(mesh, c0).to_dict(), "diameter": diameter(mesh)}
    try:
        doc["threshold"] = threshold_check(mesh, c0, cfg["C_diam"], cfg["sigma_tol"]).to_dict()
    except SigmaOutOfRange as exc:
        doc["threshold"] = {"admissible": False, "reason": "SigmaOutOfRange", "message": str(exc)}
    axis = None if cfg["axis"] == "grid" else cfg["axis"]
    if mesh.grid_shape is not None or axis is not None:
        try:
            doc["hyperbolic_length"] = axisym.hyperbolic_length(axisym.extract_profile(mesh, axis))
            doc["axisymmetry_defect"] = axisym.axisymmetry_defect(mesh, axis)
        except HelfrichFlowError as exc:
            doc["hyperbolic_length"] = None
            doc["axisymmetry_error"] = f"{type(exc).__name__}: {exc}"
    kappa = [kappa_concentration(mesh, r) for r in cfg["kappa_rho"]]
    doc["kappa"] = [k.to_dict() for k in kappa]
    profiles = {}
    if kappa:
        profiles["kappa_profile.csv"] = ([k.rho for k in kappa], [k.value for k in kappa])
    if cfg["gamma_rho"]:
        g = gamma_monotonicity(mesh, c0, sorted(cfg["gamma_rho"]), cfg["gamma_tol"])
        doc["gamma"] = g.to_dict()
        profiles["gamma_profile.csv"] = (g.rho, g.values)
    doc["li_yau"] = []
    for p in cfg["liyau_points"]:
        try:
            entry = li_yau_functional(mesh, p, c0).to_dict()
        except HelfrichFlowError as exc:
            entry = {"error": f"{type(exc).__name__}: {exc}"}
        entry["point"] = p
        doc["li_yau"].append(entry)
    return doc, profiles


def cmd_analyze(cfg):
    """Write diagnostics.json and the kappa/gamma profile CSVs."""
    out = _write_resolved(cfg)
    mesh = validate(read_obj(cfg["mesh_in"])).mesh
    doc, profiles = analyze_mesh(mesh, cfg)
    dump_json(doc, out / "diagnostics.json")
    for name, (rho, values) in profiles.items():
        _write_profile(out / name, rho, values)
    return EXIT_OK, doc


def cmd_certify(cfg):
    """Threshold report; exit 0 if admissible, 3 if not."""
    mesh = validate(read_obj(cfg["mesh_in"])).mesh
    try:
        rep = threshold_check(mesh, cfg["c0"], cfg["C_diam"], cfg["sigma_tol"]).to_dict()
        code = EXIT_OK if rep["admissible"] else EXIT_NEGATIVE
        rep["reason"] = "" if rep["admissible"] else "above threshold"
    except SigmaOutOfRange as exc:
        rep = {"admissible": False, "reason": "SigmaOutOfRange", "message": str(exc)}
        code = EXIT_NEGATIVE
    rep["resolved_config"] = resolved_config_text(cfg)
    return code, rep


HANDLERS = {"generate": cmd_generate, "flow": cmd_flow, "analyze": cmd_analyze, "certify": cmd_certify}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="helfrichflow",
        description="Area- and volume-preserving Helfrich flow on triangle meshes.",
        epilog=keys_help() + "\n\nexit codes: 0 ok, 3 certification negative, 2 error",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    blurbs = {
        "generate": "write an initial mesh and its JSON sidecar",
        "flow": "run the constrained flow from mesh_in",
        "analyze": "write diagnostics.json for mesh_in",
        "certify": "print the threshold report; exit 0 admissible, 3 not",
    }
    for name in COMMANDS:
        relevant = "\n".join(
            f"  {k:22s} {v.help} (default {v.default!r})" for k, v in KEYS.items() if name in v.commands
        )
        p = sub.add_parser(
            name,
            help=blurbs[name],
            description=blurbs[name],
            epilog="keys:\n" + relevant,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        p.add_argument("config", help="path to a key = value configuration file")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.command)
        logging.basicConfig(level=getattr(logging, str(cfg["log_level"]).upper(), logging.WARNING))
        code, payload = HANDLERS[args.command](cfg)
    except (HelfrichFlowError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.command == "certify" or args.command == "generate":
        sys.stdout.write(dump_json(payload))
    else:
        print(f"{args.command}: done ({cfg['output_dir']})")
    return code


if __name__ == "__main__":
    sys.exit(main())
