import math
import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from helfrichflow import icosphere, make_dumbbell, make_ellipsoid, make_perturbed_sphere, make_torus  # noqa: E402

settings.register_profile(
    "repo",
    max_examples=25,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def sphere5():
    return icosphere(5)


@pytest.fixture(scope="session")
def sphere3():
    return icosphere(3)


@pytest.fixture(scope="session")
def ellipsoid4():
    return make_ellipsoid((1.0, 1.0, 1.3), 4)


@pytest.fixture(scope="session")
def ellipsoid3():
    return make_ellipsoid((1.0, 1.0, 1.3), 3)


@pytest.fixture(scope="session")
def torus_fine():
    return make_torus(2.0, 1.0, 128, 64)


@pytest.fixture(scope="session")
def torus_coarse():
    return make_torus(2.0, 1.0, 64, 32)


@pytest.fixture(scope="session")
def prolate():
    """Perturbed prolate sphere with sigma = 0.9, 2562 vertices."""
    return make_perturbed_sphere(target_sigma=0.9, modes={3: 0.05}, subdiv=4)


@pytest.fixture(scope="session")
def prolate_small():
    return make_perturbed_sphere(target_sigma=0.9, modes={3: 0.05}, subdiv=3)


@pytest.fixture(scope="session")
def corpus():
    """Twenty closed meshes: spheres, tori, ellipsoids, dumbbells and perturbed shapes."""
    meshes = []
    for s in (1, 2, 3, 4):
        meshes.append(icosphere(s, radius=0.5 + 0.5 * s))
    for R, a, nu, nv in ((2.0, 1.0, 32, 16), (2.0, 1.0, 64, 32), (math.sqrt(2), 1.0, 48, 24), (3.0, 0.5, 40, 20), (1.5, 1.0, 24, 12)):
        meshes.append(make_torus(R, a, nu, nv))
    for axes in ((1.0, 1.0, 1.3), (1.0, 2.0, 3.0), (0.5, 1.0, 1.0), (2.0, 1.0, 1.0)):
        meshes.append(make_ellipsoid(axes, 3))
    for neck, width in ((0.35, 0.3), (0.5, 0.4), (0.25, 0.2)):
        meshes.append(make_dumbbell(neck, width, subdiv=3))
    rng = np.random.default_rng(7)
    for k in range(4):
        meshes.append(make_perturbed_sphere(modes={2: 0.2 * rng.random(), 3: 0.1 * rng.random()}, subdiv=3, jitter=0.01, seed=k))
    assert len(meshes) == 20
    return meshes


def random_rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
