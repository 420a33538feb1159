import math

import numpy as np
import pytest

from warpgeo import families
from warpgeo.errors import GluingFailure, HypothesisViolated, NegativeV, NoClosure
from warpgeo.families import FamilySpec, ScalProfile, designed_from_scal, generate
from warpgeo.profile import ricci_radial, scal, validate_profile
from warpgeo.serialize import dumps, profile_to_dict
from warpgeo.sweepout import width


def test_ellipsoid_equal_axes_is_round():
    p = families.ellipsoid(3, 1.0, 1.0)
    s = np.linspace(0.0, math.pi, 101)
    assert p.D == pytest.approx(math.pi, rel=1e-14)
    assert np.max(np.abs(p.f(s) - np.sin(s))) < 1e-12


def test_ellipsoid_meridian_length():
    # meridian of the ellipse x = a cos t, z = b sin t has length 2 b E(1 - a^2/b^2)
    from scipy.special import ellipe

    a, b = 1.0, 2.0
    p = families.ellipsoid(3, a, b)
    assert p.D == pytest.approx(2 * b * ellipe(1 - a * a / (b * b)), rel=1e-12)
    assert p.max_leaf[1] == pytest.approx(b, rel=1e-12)  # b is the equatorial semi-axis
    assert validate_profile(p).ok


def test_capped_cylinder_barrel_curvature():
    p = families.capped_cylinder(3, 5.0, 1.0)
    s = np.linspace(0.01 * p.D, 0.99 * p.D, 4001)
    assert float(np.min(ricci_radial(p, s))) >= -1e-9
    sc = scal(p, s)
    barrel = np.abs(p.f(s) - 1.0) < 1e-12
    assert barrel.sum() > 100
    assert np.allclose(sc[barrel], 2.0, atol=1e-9)
    assert float(np.min(sc)) == pytest.approx(2.0, abs=1e-9)


def test_capped_cylinder_zero_length_close_to_round():
    p = families.capped_cylinder(3, 0.0, 1.0)
    assert validate_profile(p).ok
    s = np.linspace(0.0, p.D, 401)
    # the blend zone (width 0.05 pi) is the only departure from the unit sphere
    assert p.max_leaf[1] == pytest.approx(1.0, abs=1e-12)
    assert abs(p.D - math.pi) <= 0.05 * math.pi + 1e-12
    assert np.max(np.abs(p.f(s) - np.sin(s * math.pi / p.D))) < 0.05


def test_neck_geometry_and_gluing_errors():
    p = families.neck_counterexample(3, 0.3, 0.95)
    assert validate_profile(p).ok
    assert p.max_leaf[1] == pytest.approx(0.95, rel=1e-12)
    with pytest.raises(GluingFailure):
        families.neck_counterexample(3, 1.0, 0.95)
    with pytest.raises(GluingFailure):
        families.neck_counterexample(3, 0.0, 0.95)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_designed_constant_scal_reproduces_round(n):
    dm = designed_from_scal(n, ScalProfile(n * (n - 1.0)))
    r = np.linspace(0.05, 0.95, 40)
    assert np.max(np.abs(dm.chart.V(r) - (1 - r * r))) < 1e-8
    assert dm.r_max == pytest.approx(1.0, abs=1e-9)
    s = np.linspace(0.0, dm.profile.D, 201)
    assert np.max(np.abs(dm.profile.f(s) - np.sin(s))) < 1e-8


def test_designed_scaled_constant():
    # Scal = n(n-1)/rho^2 closes at r = rho
    rho = 1.25
    dm = designed_from_scal(3, ScalProfile(6.0 / rho**2))
    assert dm.r_max == pytest.approx(rho, rel=1e-8)
    assert dm.profile.D == pytest.approx(math.pi * rho, rel=1e-8)


def test_designed_no_closure_and_negative_v():
    with pytest.raises(NoClosure):
        designed_from_scal(3, ScalProfile(0.0))
    with pytest.raises(NegativeV):
        designed_from_scal(3, ScalProfile(6.0), r_max=1.5)
    with pytest.raises(NoClosure):
        designed_from_scal(3, ScalProfile(6.0), r_max=0.5)


def test_designed_round_trip_scal():
    sp = ScalProfile(5.0, ((0.2, 0.5, 1.2),))
    p = designed_from_scal(3, sp).profile
    s = np.linspace(0.02 * p.D, 0.98 * p.D, 400)
    want = sp(p.f(s))
    assert np.max(np.abs(scal(p, s) / want - 1.0)) < 1e-6


def test_scal_profile_dict_round_trip():
    sp = ScalProfile(5.0, ((0.2, 0.5, 1.2), (0.6, 0.7, -0.3)))
    assert ScalProfile.from_dict(sp.to_dict()) == sp


@pytest.mark.parametrize("k", [1, 3, 6])
def test_near_extremal_member_hypotheses(k):
    p = families.near_extremal_family(3, k)
    checks = families.check_hypotheses(p, 2.0**-k)
    assert all(v[0] for v in checks.values())
    assert width(p) >= 4 * math.pi * (1 - 2.0**-k) ** 2


def test_ricci_capped_member_hypotheses():
    p = families.ricci_capped_family(3, 4)
    checks = families.check_hypotheses(p, 2.0**-4, ricci=True)
    assert all(v[0] for v in checks.values())


def test_hypothesis_violation_is_reported():
    with pytest.raises(HypothesisViolated) as info:
        families._verified(families.neck_counterexample(3, 0.3, 0.95), 0.05, False)
    assert info.value.check in {"scal", "min_a", "unique_minimal"}


def test_every_generator_validates():
    specs = ["round", "scaled_round:rho=0.8", "ellipsoid:a_axis=1,b_axis=1.4",
             "capped_cylinder:length=2,radius=0.7", "neck:neck_radius=0.4,bump_radius=1",
             "near_extremal:k=2", "ricci_capped:k=2", "perturbed_round:beta=0.2"]
    for text in specs:
        p = FamilySpec.parse(text).generate()
        assert validate_profile(p).ok, text


def test_family_spec_parse_and_determinism():
    spec = FamilySpec.parse("ellipsoid:a_axis=1,b_axis=2.5,n=4")
    assert spec.n == 4 and spec.params == {"a_axis": 1, "b_axis": 2.5}
    assert FamilySpec.from_dict(spec.to_dict()) == spec
    a = dumps(profile_to_dict(spec.generate()))
    b = dumps(profile_to_dict(FamilySpec.from_dict(spec.to_dict()).generate()))
    assert a == b


def test_random_designed_deterministic():
    p, q = families.random_designed(3, 7), families.random_designed(3, 7)
    s = np.linspace(0, p.D, 50)
    assert np.array_equal(p.f(s), q.f(s))


def test_unknown_generator():
    with pytest.raises(ValueError):
        generate("torus", 3)
