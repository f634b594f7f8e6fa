"""Area- and volume-preserving Helfrich flow on closed triangle meshes."""

from .axisym import (
    ProfileCurve,
    axisymmetry_defect,
    extract_profile,
    hyperbolic_length,
    make_biconcave,
    make_dumbbell,
    make_ellipsoid,
    make_perturbed_sphere,
    make_torus,
)
from .diagnostics import (
    gamma_monotonicity,
    kappa_concentration,
    li_yau_functional,
    localized_curvature_energy,
    omega,
    threshold_check,
)
from .energy import (
    cmc_deficit,
    energy_report,
    helfrich,
    isoperimetric_sigma,
    willmore,
    willmore_helfrich_bound,
)
from .errors import *  # noqa: F401,F403
from .flow import FlowConfig, FlowState, Trajectory, parabolic_rescale, run, step
from .geometry import (
    area,
    compute_geometry,
    diameter,
    gauss_curvature,
    mean_curvature,
    signed_volume,
    tracefree_sq,
)
from .mesh import TriMesh, ellipsoid, icosphere, read_obj, validate, write_obj
from .multiplier import (
    discrete_gradient,
    helfrich_gradient,
    lagrange_multipliers,
    stationarity_residual,
)

__version__ = "0.1.0"
