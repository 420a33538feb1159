import math

import numpy as np
import pytest

from warpgeo import families
from warpgeo.sweepout import (check_near_extremal_structure, find_minimal_leaves, leaf_area,
                              radius_threshold, width)


def test_round_width_and_single_unstable_leaf(round3):
    assert width(round3) == pytest.approx(4 * math.pi, abs=1e-12)
    rep = find_minimal_leaves(round3)
    assert rep.kinds() == ["unstable"]
    assert rep.leaves[0].s == pytest.approx(math.pi / 2, abs=1e-12)
    assert rep.min_a_symmetric == pytest.approx(4 * math.pi, rel=1e-12)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_width_of_scaled_round(n):
    from warpgeo.profile import sphere_area

    rho = 0.7
    p = families.scaled_round(n, rho)
    assert width(p) == pytest.approx(sphere_area(n - 1) * rho ** (n - 1), rel=1e-12)


def test_leaf_area_vectorised(round3):
    s = np.array([0.5, 1.0])
    assert np.allclose(leaf_area(round3, s), 4 * math.pi * np.sin(s) ** 2, rtol=1e-14)


def test_neck_leaves():
    p = families.neck_counterexample(3, 0.3, 0.95)
    rep = find_minimal_leaves(p)
    assert rep.kinds() == ["unstable", "stable", "unstable"]
    assert rep.min_a_symmetric == pytest.approx(4 * math.pi * 0.09, abs=1e-6)
    assert rep.width == pytest.approx(4 * math.pi * 0.95**2, rel=1e-12)
    st = check_near_extremal_structure(p, 0.05, rep)
    assert not st.unique_minimal
    assert [lf.kind for lf in st.violating_leaves] == ["stable"]
    assert st.violating_leaves[0].radius < st.radius_threshold


def test_cylinder_plateau():
    p = families.capped_cylinder(3, 2.0, 1.0)
    rep = find_minimal_leaves(p)
    assert rep.kinds() == ["plateau"]
    lo, hi = rep.leaves[0].plateau_extent
    assert hi - lo == pytest.approx(2.0, abs=1e-3)


def test_near_extremal_structure_clean_member():
    p = families.near_extremal_family(3, 4)
    st = check_near_extremal_structure(p, 2.0**-4)
    assert st.unique_minimal and not st.violating_leaves


def test_radius_threshold_closed_form():
    for e in (0.0, 0.05, 0.2):
        assert radius_threshold(3, e) == pytest.approx(math.sqrt(1 / 3) / (1 - e), rel=1e-15)
    assert radius_threshold(5, 0.0) == pytest.approx(math.sqrt(3 / 5), rel=1e-15)


def test_leaf_report_serialises():
    rep = find_minimal_leaves(families.neck_counterexample(3, 0.3, 0.95))
    d = rep.to_dict()
    assert [lf["kind"] for lf in d["leaves"]] == rep.kinds()
