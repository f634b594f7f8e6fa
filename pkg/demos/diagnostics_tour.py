"""Evaluate the embeddedness and concentration diagnostics on simple shapes.

* Li-Yau functional at the centre of a unit sphere for several c0;
* monotonicity quantity about the origin for a centred and a shifted sphere;
* curvature concentration radius scan on a dumbbell, whose neck carries
  the largest local curvature energy.

    python demos/diagnostics_tour.py
"""

import math

import numpy as np

from helfrichflow import icosphere, make_dumbbell
from helfrichflow.diagnostics import gamma_monotonicity, kappa_concentration, li_yau_functional


def main():
    sphere = icosphere(5)
    print("Li-Yau functional at the sphere centre")
    for c0 in (-2.0, -1.0, 0.0, 1.0, 2.0):
        r = li_yau_functional(sphere, [0, 0, 0], c0)
        print(f"  c0 = {c0:+.1f}: {r.value:9.4f}   pi (2 + c0)^2 = {math.pi * (2 + c0) ** 2:9.4f}")

    rho = np.array([0.5, 1.0, 1.5, 2.0, 3.0, 4.0])
    print("\nmonotonicity quantity / pi")
    print("  rho     " + " ".join(f"{r:7.2f}" for r in rho))
    for shift in (0.0, 2.0):
        g = gamma_monotonicity(sphere.translated([shift, 0, 0]), 0.0, rho)
        print(f"  d = {shift:.1f} " + " ".join(f"{v / math.pi:7.4f}" for v in g.values))

    bell = make_dumbbell()
    print("\ncurvature concentration on a dumbbell")
    for r in (0.1, 0.3, 1.0, 3.0):
        k = kappa_concentration(bell, r)
        print(f"  rho = {r:.1f}: kappa = {k.value:8.3f} at z = {k.argmax_center[2]:+.3f}")


if __name__ == "__main__":
    main()
