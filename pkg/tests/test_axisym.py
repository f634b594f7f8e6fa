import math

import numpy as np
import pytest

import oracles as O
from helfrichflow import TriMesh
from helfrichflow.axisym import (
    ProfileCurve,
    axisymmetry_defect,
    circle_profile,
    extract_profile,
    hyperbolic_length,
    make_biconcave,
    make_perturbed_sphere,
    make_torus,
    surface_of_revolution,
)
from helfrichflow.energy import isoperimetric_sigma, willmore
from helfrichflow.errors import AxisTouch, InvalidParams, NoGridStructure, TargetSigmaUnreachable
from helfrichflow.flow import FlowConfig, FlowState, step
from helfrichflow.geometry import area, compute_geometry, signed_volume


def test_torus_matches_revolution_formulas(torus_fine):
    assert abs(area(torus_fine) / O.torus_area(2, 1) - 1) < 2e-3
    assert abs(signed_volume(torus_fine) / O.torus_volume(2, 1) - 1) < 2.1e-3
    assert abs(isoperimetric_sigma(torus_fine) / (9 / (8 * math.pi)) - 1) < 2e-3
    assert torus_fine.genus == 1


def test_clifford_ratio_torus_willmore():
    assert abs(willmore(make_torus(math.sqrt(2), 1.0, 128, 64)) / O.torus_helfrich(math.sqrt(2), 1, 0.0) - 1) < 2e-2


def test_torus_errors_decrease_with_refinement():
    errs = [abs(area(make_torus(2, 1, 16 * k, 8 * k)) / O.torus_area(2, 1) - 1) for k in (1, 2, 4)]
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("R,a,nu,nv", [(1.0, 1.0, 32, 16), (0.5, 1.0, 32, 16), (2.0, 0.0, 32, 16), (2.0, 1.0, 4, 16)])
def test_invalid_torus_parameters(R, a, nu, nv):
    with pytest.raises(InvalidParams):
        make_torus(R, a, nu, nv)


def test_zero_amplitude_is_round_sphere():
    assert abs(isoperimetric_sigma(make_perturbed_sphere(modes={}, subdiv=4)) - 1) < 5e-3


def test_prolate_sphere_hits_target_sigma(prolate):
    assert 0.891 <= isoperimetric_sigma(prolate) <= 0.909
    z = prolate.vertices[:, 2]
    assert z.max() - z.min() > 2.0
    assert prolate.n_vertices == 2562


def test_unreachable_sigma():
    with pytest.raises(TargetSigmaUnreachable):
        make_perturbed_sphere(target_sigma=1.2)
    with pytest.raises(TargetSigmaUnreachable):
        make_biconcave(target_sigma=1.2)


def test_biconcave_shape():
    m = make_biconcave(target_sigma=0.35, subdiv=3)
    assert abs(isoperimetric_sigma(m) - 0.35) < 3.5e-3
    assert m.genus == 0
    v = m.vertices
    rho = np.hypot(v[:, 0], v[:, 1])
    centre = np.abs(v[rho < 0.1, 2]).max()
    rim = np.abs(v[(rho > 0.6) & (rho < 0.8), 2]).max()
    assert centre < rim


def test_perturbed_sphere_jitter_is_seeded():
    a = make_perturbed_sphere(modes={2: 0.1}, subdiv=2, jitter=0.01, seed=3)
    b = make_perturbed_sphere(modes={2: 0.1}, subdiv=2, jitter=0.01, seed=3)
    c = make_perturbed_sphere(modes={2: 0.1}, subdiv=2, jitter=0.01, seed=4)
    assert np.array_equal(a.vertices, b.vertices)
    assert not np.array_equal(a.vertices, c.vertices)


def test_hyperbolic_length_of_circle():
    ref = O.hyperbolic_circle_length(2.0, 1.0)
    assert ref == pytest.approx(2 * math.pi / math.sqrt(3), rel=1e-12)
    assert abs(hyperbolic_length(circle_profile(2.0, 1.0, 256)) / ref - 1) < 5e-3


@pytest.mark.parametrize("r", [0.1, 0.5, 2.0, 10.0])
def test_hyperbolic_length_is_dilation_invariant(r):
    c = circle_profile(3.0, 1.2, 100)
    assert hyperbolic_length(c.scaled(r)) == pytest.approx(hyperbolic_length(c), rel=1e-10)


def test_hyperbolic_length_diverges_towards_axis():
    lengths = [hyperbolic_length(circle_profile(1.0 + eps, 1.0, 512)) for eps in (0.5, 0.1, 0.02, 0.004)]
    assert all(b > a for a, b in zip(lengths, lengths[1:]))
    with pytest.raises(AxisTouch):
        hyperbolic_length(ProfileCurve([[0.0, 1.0], [1.0, 0.0], [0.0, 2.0]]))


def test_profile_of_torus(torus_fine):
    prof = extract_profile(torus_fine)
    assert np.all(prof.points[:, 1] > 0)
    assert abs(hyperbolic_length(prof) / O.hyperbolic_circle_length(2, 1) - 1) < 1e-2


def test_sliced_profile_without_grid(torus_coarse):
    bare = TriMesh(torus_coarse.vertices, torus_coarse.triangles)
    with pytest.raises(NoGridStructure):
        extract_profile(bare)
    prof = extract_profile(bare, axis="x")
    assert abs(hyperbolic_length(prof) / O.hyperbolic_circle_length(2, 1) - 1) < 1e-2


def test_profile_csv_round_trip(tmp_path):
    c = circle_profile(2.0, 1.0, 17)
    c.to_csv(tmp_path / "p.csv")
    assert np.array_equal(ProfileCurve.from_csv(tmp_path / "p.csv").points, c.points)


def test_general_profile_revolution():
    u = 2 * np.pi * np.arange(48) / 48
    prof = ProfileCurve(np.stack([1.5 * np.cos(u), 3.0 + 0.7 * np.sin(u) + 0.1 * np.sin(2 * u)], axis=1))
    m = surface_of_revolution(prof, 32)
    assert m.genus == 1
    assert np.allclose(extract_profile(m).points, prof.points)
    assert axisymmetry_defect(m) < 1e-12


def test_generated_torus_is_exactly_axisymmetric(torus_fine):
    assert axisymmetry_defect(torus_fine) < 1e-12


def test_jittered_torus_defect_measures_jitter(torus_coarse):
    rng = np.random.default_rng(0)
    v = torus_coarse.vertices + 1e-2 * rng.uniform(-1, 1, torus_coarse.vertices.shape)
    d = axisymmetry_defect(torus_coarse.with_vertices(v))
    assert 1e-3 < d < 1e-1


def test_sliced_defect_is_rotation_invariant(torus_coarse):
    bare = TriMesh(torus_coarse.vertices, torus_coarse.triangles)
    c, s = math.cos(0.37), math.sin(0.37)
    rot = np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    d0 = axisymmetry_defect(bare, axis="x")
    d1 = axisymmetry_defect(bare.rotated(rot), axis="x")
    assert d0 < 5e-3
    assert d1 == pytest.approx(d0, rel=0.5)


def test_one_flow_step_keeps_torus_axisymmetric(torus_coarse):
    geo = compute_geometry(torus_coarse)
    state = FlowState(torus_coarse, 0.0, 0.0, (geo.area, geo.volume), dt=1e-3)
    new, _ = step(state, FlowConfig(dt_init=1e-3))
    assert axisymmetry_defect(new.mesh) < 1e-6
