"""Numerical geometry of rotationally symmetric metrics on spheres.

A metric ``ds^2 + f(s)^2 g_rd`` on ``S^n`` is described by a
:class:`MetricProfile`.  The subpackages compute curvature, the width of the
canonical sweepout, geodesic distances, a-priori estimates, the conformal
picture of a hemisphere and Gromov-Hausdorff / intrinsic-flat upper bounds
against the round sphere.
"""
__version__ = "0.1.0"

from .errors import WarpGeoError  # noqa: E402
from .profile import (  # noqa: E402
    MetricProfile,
    sampled_profile,
    scal,
    ricci_radial,
    mean_curvature,
    volume,
    validate_profile,
    to_radial_chart,
)
from .families import (  # noqa: E402
    FamilySpec,
    round_sphere,
    scaled_round,
    ellipsoid,
    capped_cylinder,
    neck_counterexample,
    designed_from_scal,
    near_extremal_family,
    ricci_capped_family,
)
from .sweepout import width, find_minimal_leaves, check_near_extremal_structure  # noqa: E402
from .geodesic import distance, oracle_distance  # noqa: E402
from .comparison import build_comparison, sweep_eta, triangle_bound, surgery_bad_set  # noqa: E402
from .serialize import load_profile, save_profile  # noqa: E402

__all__ = [
    "WarpGeoError", "MetricProfile", "sampled_profile", "scal", "ricci_radial", "mean_curvature",
    "volume", "validate_profile", "to_radial_chart", "FamilySpec", "round_sphere", "scaled_round",
    "ellipsoid", "capped_cylinder", "neck_counterexample", "designed_from_scal", "near_extremal_family",
    "ricci_capped_family", "width", "find_minimal_leaves", "check_near_extremal_structure", "distance",
    "oracle_distance", "build_comparison", "sweep_eta", "triangle_bound", "surgery_bad_set",
    "load_profile", "save_profile",
]
