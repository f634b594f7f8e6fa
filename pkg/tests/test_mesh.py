import numpy as np
import pytest

from helfrichflow import TriMesh, icosphere, make_torus, read_obj, validate, write_obj
from helfrichflow.errors import DegenerateTriangle, Disconnected, MeshError, NonManifold
from helfrichflow.geometry import signed_volume


def test_icosphere_is_closed_genus_zero():
    d = validate(icosphere(3))
    assert d.closed and d.orientable and d.connected
    assert d.genus == 0 and d.euler_characteristic == 2
    assert icosphere(3).n_vertices == 642


def test_torus_grid_is_genus_one():
    d = validate(make_torus(2.0, 1.0, 64, 32))
    assert d.genus == 1 and d.euler_characteristic == 0


def test_deleted_triangle_is_non_manifold():
    s = icosphere(2)
    with pytest.raises(NonManifold):
        validate(TriMesh(s.vertices, s.triangles[1:]))


def test_two_components_are_rejected():
    a = icosphere(1)
    b = a.translated([5.0, 0.0, 0.0])
    m = TriMesh(np.vstack([a.vertices, b.vertices]), np.vstack([a.triangles, b.triangles + a.n_vertices]))
    with pytest.raises(Disconnected):
        validate(m)


def test_degenerate_triangle_is_rejected():
    s = icosphere(1)
    v = s.vertices.copy()
    i, j, k = s.triangles[0]
    v[k] = 0.5 * (v[i] + v[j])
    with pytest.raises(DegenerateTriangle):
        validate(TriMesh(v, s.triangles))


def test_orientation_is_normalized_to_positive_volume():
    s = icosphere(3)
    flipped = s.flipped()
    assert signed_volume(flipped) == pytest.approx(-signed_volume(s), rel=1e-14)
    d = validate(flipped)
    assert d.flipped
    assert signed_volume(d.mesh) == pytest.approx(signed_volume(s), rel=1e-14)


def test_inconsistent_faces_are_reoriented():
    s = icosphere(2)
    t = s.triangles.copy()
    t[::3] = t[::3, ::-1]
    d = validate(TriMesh(s.vertices, t))
    assert d.reoriented
    assert signed_volume(d.mesh) == pytest.approx(signed_volume(s), rel=1e-14)


def test_obj_round_trip_is_exact(tmp_path):
    m = make_torus(2.0, 1.0, 16, 8)
    path = write_obj(m, tmp_path / "t.obj")
    back = read_obj(path)
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.triangles, m.triangles)
    assert back.grid_shape == (16, 8)


def test_obj_reader_rejects_quads(tmp_path):
    p = tmp_path / "q.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(MeshError):
        read_obj(p)


def test_obj_reader_ignores_texture_indices(tmp_path):
    p = tmp_path / "t.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3\n")
    m = read_obj(p)
    assert m.triangles.tolist() == [[0, 1, 2]]


def test_mesh_arrays_are_read_only():
    m = icosphere(1)
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 1.0
