import json
import math
import subprocess
import sys

import pytest

import oracles as O
from helfrichflow.cli import KEYS, main, parse_config
from helfrichflow.errors import ConfigError
from helfrichflow.mesh import read_obj


def _config(path, **items):
    path.write_text("".join(f"{k} = {v}\n" for k, v in items.items()))
    return str(path)


def _generate(tmp_path, name, **items):
    cfg = _config(tmp_path / f"gen_{name}.cfg", mesh_out=f"{name}.obj", output_dir=f"out_{name}", **items)
    assert main(["generate", cfg]) == 0
    return tmp_path / f"{name}.obj"


def test_generate_torus_sidecar(tmp_path, capsys):
    obj = _generate(tmp_path, "torus", mesh_kind="torus", R=2.0, a=1.0, n_u=64, n_v=32)
    side = json.loads(obj.with_suffix(".json").read_text())
    assert abs(side["sigma"] / (9 / (8 * math.pi)) - 1) < 5e-3
    assert side["genus"] == 1 and side["n_vertices"] == 64 * 32
    assert json.loads(capsys.readouterr().out) == side
    assert read_obj(obj).n_vertices == 2048
    assert (tmp_path / "out_torus" / "resolved_config.txt").exists()


def test_generate_sphere_sidecar(tmp_path):
    obj = _generate(tmp_path, "sphere", mesh_kind="sphere", subdiv=4)
    side = json.loads(obj.with_suffix(".json").read_text())
    assert abs(side["sigma"] - 1) < 5e-3
    assert abs(side["willmore"] / (4 * math.pi) - 1) < 1e-2


@pytest.mark.parametrize(
    "items",
    [
        {"mesh_kind": "torus", "R": 1.0, "a": 1.0},
        {"mesh_kind": "perturbed_sphere", "target_sigma": 1.5},
        {"mesh_kind": "cube"},
        {"mesh_kind": "torus", "n_u": "many"},
    ],
)
def test_generate_bad_parameters_exit_2(tmp_path, items):
    cfg = _config(tmp_path / "bad.cfg", mesh_out="x.obj", **items)
    assert main(["generate", cfg]) == 2


def test_certify_exit_codes(tmp_path, capsys):
    ell = _generate(tmp_path, "ell", mesh_kind="ellipsoid", axes="1 1 1.3", subdiv=3)
    sph = _generate(tmp_path, "sph", mesh_kind="sphere", subdiv=3)
    capsys.readouterr()
    assert main(["certify", _config(tmp_path / "c1.cfg", mesh_in="ell.obj")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["admissible"] and "mesh_in" in rep["resolved_config"]
    assert main(["certify", _config(tmp_path / "c2.cfg", mesh_in="sph.obj")]) == 3
    assert json.loads(capsys.readouterr().out)["reason"] == "SigmaOutOfRange"
    assert main(["certify", _config(tmp_path / "c3.cfg", mesh_in="missing.obj")]) == 2
    big_c0 = 20 / math.sqrt(json.loads(ell.with_suffix(".json").read_text())["area"])
    assert main(["certify", _config(tmp_path / "c4.cfg", mesh_in="ell.obj", c0=big_c0)]) == 3
    assert sph.exists()


def test_unknown_and_repeated_keys(tmp_path):
    (tmp_path / "u.cfg").write_text("mesh_in = a.obj\nbogus = 1\n")
    assert main(["certify", str(tmp_path / "u.cfg")]) == 2
    (tmp_path / "r.cfg").write_text("mesh_in = a.obj\nmesh_in = b.obj\n")
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "r.cfg", "certify")


def test_paths_resolve_relative_to_config(tmp_path, monkeypatch):
    sub = tmp_path / "configs"
    sub.mkdir()
    cfg = parse_config(_config(sub / "a.cfg", mesh_in="../m.obj", output_dir="res"), "analyze")
    assert cfg["mesh_in"] == str(tmp_path / "m.obj")
    assert cfg["output_dir"] == str(sub / "res")
    monkeypatch.chdir(tmp_path)
    assert parse_config("configs/a.cfg", "analyze")["mesh_in"] == str(tmp_path / "m.obj")


def test_comments_and_defaults(tmp_path):
    (tmp_path / "c.cfg").write_text("# flow settings\nmesh_in = m.obj  # initial shape\n\n")
    cfg = parse_config(tmp_path / "c.cfg", "flow")
    assert cfg["dt_init"] == KEYS["dt_init"].default
    assert cfg["c0"] == 0.0


def test_help_lists_every_key(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for name in KEYS:
        assert name in out
    for cmd in ("generate", "flow", "analyze", "certify"):
        assert cmd in out


def test_subcommand_help_lists_its_keys(capsys):
    with pytest.raises(SystemExit):
        main(["flow", "--help"])
    out = capsys.readouterr().out
    for name, key in KEYS.items():
        if "flow" in key.commands:
            assert name in out


def test_flow_command_is_reproducible(tmp_path):
    _generate(tmp_path, "pro", mesh_kind="perturbed_sphere", target_sigma=0.9, subdiv=2)
    for run in ("a", "b"):
        cfg = _config(tmp_path / f"f{run}.cfg", mesh_in="pro.obj", output_dir=f"run_{run}", max_steps=3, snapshot_every=3)
        assert main(["flow", cfg]) == 0
    a, b = tmp_path / "run_a", tmp_path / "run_b"
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()
    summary = json.loads((a / "summary.json").read_text())
    assert summary["status"] == "TIMEOUT" and summary["steps"] == 3
    assert (a / "snap_3.obj").exists() and (a / "resolved_config.txt").exists()
    assert "max_steps = 3" in (a / "resolved_config.txt").read_text()


def test_analyze_torus(tmp_path):
    _generate(tmp_path, "tor", mesh_kind="torus", R=2.0, a=1.0, n_u=64, n_v=32)
    cfg = _config(
        tmp_path / "an.cfg",
        mesh_in="tor.obj",
        output_dir="an",
        kappa_rho="0.5, 1.0",
        gamma_rho="3.5, 4.0, 5.0",
        liyau_points="0 0 0; 0 0 5",
    )
    assert main(["analyze", cfg]) == 0
    doc = json.loads((tmp_path / "an" / "diagnostics.json").read_text())
    assert abs(doc["hyperbolic_length"] / O.hyperbolic_circle_length(2, 1) - 1) < 1e-2
    assert doc["axisymmetry_defect"] < 1e-12
    assert doc["threshold"]["admissible"] in (True, False)
    assert [k["rho"] for k in doc["kappa"]] == [0.5, 1.0]
    assert len(doc["li_yau"]) == 2
    assert abs(doc["li_yau"][0]["value"] / O.torus_li_yau_at_center(2, 1, 0.0) - 1) < 1e-2
    assert len((tmp_path / "an" / "kappa_profile.csv").read_text().splitlines()) == 3
    assert len((tmp_path / "an" / "gamma_profile.csv").read_text().splitlines()) == 4


def test_console_entry_point(tmp_path):
    cfg = _config(tmp_path / "c.cfg", mesh_in="nothing.obj")
    proc = subprocess.run([sys.executable, "-m", "helfrichflow.cli", "certify", cfg], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "error" in proc.stderr
