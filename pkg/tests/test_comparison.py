import dataclasses
import math

import pytest

from warpgeo import families
from warpgeo.comparison import (bound_report, build_comparison, gh_bound, if_bound, lambda_distortion,
                                ls_quantities, surgery_bad_set, surgery_bound, sweep_eta, triangle_bound,
                                vif_bound)
from warpgeo.errors import AllEtaFailed, ChartsDontCover, NotUniqueMinimal


@pytest.fixture(scope="module")
def same_round():
    rd = families.round_sphere(3)
    return build_comparison(rd, rd, 0.1)


def test_identical_metrics(same_round):
    r = same_round
    assert r.identical and r.eps_c0 == 0 and r.lambda_ == 0 and r.h == 0 and r.hbar == 0 and r.a == 0
    assert r.lambda_inflation > 0
    assert gh_bound(r).value == pytest.approx(math.asin(0.1), abs=1e-12)
    total_bdry = r.vol_bdry_U1 + r.vol_bdry_U2
    assert total_bdry == pytest.approx(4 * 4 * math.pi * 0.01, rel=1e-12)
    cap = 4 * math.pi * (math.asin(0.1) / 2 - math.sin(2 * math.asin(0.1)) / 4)
    assert r.vol_compl_1 == pytest.approx(2 * cap, rel=1e-9)
    assert if_bound(r).value == pytest.approx(4 * cap, rel=1e-9)
    assert r.D_U1 == pytest.approx(math.pi)


@pytest.mark.parametrize("rho", [1.001, 1.05, 1.2, 0.95])
def test_eps_on_scaled_rounds(rho):
    r = build_comparison(families.scaled_round(3, rho), None, 0.1)
    want = rho - 1 if rho > 1 else 1 / rho - 1
    assert abs(r.eps_c0 - want) <= 1e-3
    lo, hi = r.correspondence["metric_ratio"]
    assert lo == pytest.approx(rho**2, rel=1e-9) and hi == pytest.approx(rho**2, rel=1e-9)


def test_small_leaf_does_not_cover():
    with pytest.raises(ChartsDontCover):
        build_comparison(families.scaled_round(3, 0.9), None, 0.1)
    with pytest.raises(AllEtaFailed):
        sweep_eta(families.scaled_round(3, 0.9), None, (0.05, 0.1))


def test_neck_rejected():
    with pytest.raises(NotUniqueMinimal):
        build_comparison(families.neck_counterexample(3, 0.3, 0.95), None, 0.1)


def test_eta_range():
    with pytest.raises(ValueError):
        build_comparison(families.round_sphere(3), None, 0.6)


def test_lambda_scaled_round_and_swap():
    g1, g2 = families.scaled_round(3, 1.1), families.round_sphere(3)
    a = lambda_distortion(g1, g2, 0.1)
    b = lambda_distortion(g2, g1, 0.1)
    assert a["sampled"] >= 0.06
    assert a["sampled"] == pytest.approx(b["sampled"], abs=1e-12)
    with pytest.raises(ValueError):
        lambda_distortion(g1, g2, 0.1, n_s=4)


def test_ls_identities():
    r = build_comparison(families.scaled_round(3, 1.03), None, 0.12)
    a, h, hbar = ls_quantities(r.eps_c0, r.lambda_, r.D_U1, r.D_U2)
    assert abs(a - r.a) <= 1e-12 and abs(h - r.h) <= 1e-12 and abs(hbar - r.hbar) <= 1e-12
    assert r.a > math.acos(1 / (1 + r.eps_c0)) / math.pi * max(r.D_U1, r.D_U2)
    # hand value from the closed form
    assert ls_quantities(0.1, 0.0, math.pi, 0.0)[0] == pytest.approx(1.01 * math.acos(1 / 1.1), rel=1e-14)
    assert ls_quantities(0.1, 0.0, math.pi, 0.0)[0] == pytest.approx(0.434, abs=1e-3)


def test_bounds_monotone_in_eps_and_lambda():
    r = build_comparison(families.scaled_round(3, 1.03), None, 0.12)
    base = bound_report(r)
    for field, bump in (("eps_c0", 0.01), ("lambda_", 0.05)):
        eps = r.eps_c0 + (bump if field == "eps_c0" else 0)
        lam = r.lambda_ + (bump if field == "lambda_" else 0)
        a, h, hbar = ls_quantities(eps, lam, r.D_U1, r.D_U2)
        r2 = dataclasses.replace(r, eps_c0=eps, lambda_=lam, a=a, h=h, hbar=hbar)
        rep = bound_report(r2)
        assert rep.gh.value >= base.gh.value and rep.if_.value >= base.if_.value
        assert rep.vif.value >= base.vif.value


def test_vif_decomposition():
    r = build_comparison(families.scaled_round(3, 1.05), None, 0.1)
    v, i = vif_bound(r), if_bound(r)
    assert v.value == pytest.approx(i.value + abs(r.vol_1 - r.vol_2), rel=1e-15)
    assert min(v.value, i.value, gh_bound(r).value) >= 0


def test_sweep_identical_rounds():
    rd = families.round_sphere(3)
    rep = sweep_eta(rd, rd)
    assert rep.vif.value <= 0.05
    assert rep.eta_used == pytest.approx(0.02)


def test_triangle():
    rd = families.round_sphere(3)
    self_rep = sweep_eta(rd, rd)
    tri = triangle_bound(rd, rd)
    assert tri.vif.value == pytest.approx(2 * self_rep.vif.value, rel=1e-12)
    tri2 = triangle_bound(families.scaled_round(3, 1.02), families.scaled_round(3, 0.98), (0.05, 0.1))
    assert math.isfinite(tri2.gh.value) and len(tri2.legs) == 2
    assert tri2.gh.value == pytest.approx(tri2.legs[0].gh.value + tri2.legs[1].gh.value)
    assert set(tri2.to_dict()["gh"]["terms"]) == {"leg1", "leg2"}


def test_surgery_round():
    rec = surgery_bad_set(families.round_sphere(3), 0.1)
    cap = 4 * math.pi * (math.asin(0.1) / 2 - math.sin(2 * math.asin(0.1)) / 4)
    assert rec.vol_Z == pytest.approx(2 * cap, rel=1e-9)
    assert rec.vol_Z == pytest.approx(0.00844, abs=5e-5)
    assert rec.vol_bdry_Z == pytest.approx(0.2513, abs=1e-4)
    assert rec.vol_Z <= surgery_bound(3, 0.1, math.pi) == rec.psi_bound
    small = surgery_bad_set(families.round_sphere(3), 0.01)
    assert small.vol_Z < rec.vol_Z / 100 and small.vol_bdry_Z < rec.vol_bdry_Z / 50


def test_report_serialises(same_round):
    d = bound_report(same_round).to_dict()
    assert {"gh", "if", "vif", "eta_used", "warnings"} <= set(d)
    assert {"a", "hbar", "haus_1", "haus_2", "eps", "lambda"} <= set(d["gh"]["terms"])
