"""Chart correspondence between two warped spheres and the resulting
Gromov-Hausdorff, intrinsic-flat and volume-intrinsic-flat upper bounds.

Points are matched through the normalised leaf radius: a point at ``s`` on
``M_i`` with ``f_i(s) = R_i sin(sigma)`` is sent to the point with the same
``sigma`` (hemisphere kept) and the same angle on the other sphere.  The band
``U_i`` is ``{f_i > eta R_i}``, i.e. ``sigma in (arcsin eta, pi - arcsin eta)``.
In ``(sigma, theta)`` coordinates each metric is
``q_i(sigma)^2 dsigma^2 + R_i^2 sin^2(sigma) g_rd`` with
``q_i = ds_i/dsigma = R_i cos(sigma) / f_i'(s_i)``, so the metric ratio
splits into a radial part ``(q_1/q_2)^2`` and a tangential constant
``(R_1/R_2)^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import pmap
from .errors import AllEtaFailed, ChartsDontCover, NotUniqueMinimal, WarpGeoError
from .geodesic import distance_table, hausdorff_defect
from .profile import MetricProfile, invert_monotone, sphere_area, volume, volume_between

MU_A = 0.01
ETA_GRID = tuple(round(0.02 * k, 10) for k in range(1, 16))
CHART_RADIUS = 0.9
CHART_MARGIN = 0.01
LEAF_GAP = 1e-3  # |sigma - pi/2| below which the radial factor uses its leaf limit
N_SAMPLE = 48


# --------------------------------------------------------------------------
# one side of the correspondence


@dataclass(frozen=True, eq=False)
class _Side:
    p: MetricProfile
    R: float
    s_max: float

    @classmethod
    def of(cls, p: MetricProfile) -> "_Side":
        sm, R = p.max_leaf
        return cls(p, R, sm)

    def s_at(self, sigma) -> np.ndarray:
        sigma = np.asarray(sigma, float)
        r = self.R * np.sin(sigma)
        tol = 1e-15 * self.p.D
        north = invert_monotone(self.p.f, r, 0.0, self.s_max, True, tol)
        south = invert_monotone(self.p.f, r, self.s_max, self.p.D, False, tol)
        out = np.where(sigma <= 0.5 * math.pi, north, south)
        return np.where(sigma == 0.5 * math.pi, self.s_max, out)

    def leaf_factor(self) -> float:
        return math.sqrt(self.R / abs(float(self.p.fpp(self.s_max))))

    def radial_factor(self, sigma) -> np.ndarray:
        """``ds/dsigma`` (positive), with the leaf limit ``sqrt(R/|f''|)``."""
        sigma = np.asarray(sigma, float)
        s = self.s_at(sigma)
        fp = np.abs(np.asarray(self.p.fp(s), float))
        near = np.abs(sigma - 0.5 * math.pi) < LEAF_GAP
        safe = np.where(near, 1.0, fp)
        return np.where(near, self.leaf_factor(), self.R * np.abs(np.cos(sigma)) / safe)


def _same_metric(g1: MetricProfile, g2: MetricProfile) -> bool:
    if g1 is g2:
        return True
    if g1.n != g2.n or g1.D != g2.D:
        return False
    s = np.linspace(0.0, g1.D, 257)
    return all(np.array_equal(np.asarray(a(s)), np.asarray(b(s)))
               for a, b in ((g1.f, g2.f), (g1.fp, g2.fp), (g1.fpp, g2.fpp)))


def _require_unique(p: MetricProfile) -> None:
    from .sweepout import find_minimal_leaves

    kinds = find_minimal_leaves(p).kinds()
    if kinds != ["unstable"]:
        raise NotUniqueMinimal(f"{p.name or 'profile'}: minimal leaves {kinds}, need one unstable leaf")


def _caps(p: MetricProfile, band) -> float:
    # direct cap integrals avoid cancellation against the total volume
    return volume_between(p, 0.0, band[0]) + volume_between(p, band[1], p.D)


def _check_cover(side: _Side, eta: float, label: str) -> None:
    p = side.p
    if side.R <= CHART_RADIUS + CHART_MARGIN:
        raise ChartsDontCover(f"{label}: maximal leaf radius {side.R:.6g} leaves no room for the "
                              f"radial chart up to {CHART_RADIUS}")
    if side.s_max <= CHART_RADIUS or p.D - side.s_max <= CHART_RADIUS:
        raise ChartsDontCover(f"{label}: leaf chart of half-width {CHART_RADIUS} would contain a pole")
    if eta >= CHART_RADIUS:
        raise ChartsDontCover(f"eta={eta} above the radial chart")


# --------------------------------------------------------------------------
# the region


def ls_quantities(eps: float, lam: float, D_U1: float, D_U2: float,
                  mu_a: float = MU_A) -> tuple[float, float, float]:
    """``(a, h, hbar)`` from the C^0 closeness ``eps``, distortion ``lam`` and diameters.

    ``a = (1 + mu_a) arccos(1/(1+eps)) max(D_U) / pi``,
    ``h = sqrt(lam (max(D_U) + lam/4))``,
    ``hbar = max(h, sqrt(eps^2 + 2 eps) D_U1, sqrt(eps^2 + 2 eps) D_U2)``.
    """
    dmax = max(D_U1, D_U2)
    a = (1.0 + mu_a) * math.acos(1.0 / (1.0 + eps)) / math.pi * dmax
    h = math.sqrt(lam * (dmax + lam / 4.0))
    k = math.sqrt(eps * eps + 2.0 * eps)
    return a, h, max(h, k * D_U1, k * D_U2)


@dataclass(frozen=True, eq=False)
class ComparisonRegion:
    """Common band of two warped spheres together with every term of the bounds."""

    eta: float
    g1: MetricProfile
    g2: MetricProfile
    correspondence: dict
    eps_c0: float
    lambda_: float
    lambda_sampled: float
    lambda_inflation: float
    a: float
    h: float
    hbar: float
    D_U1: float
    D_U2: float
    vol_U1: float
    vol_U2: float
    vol_bdry_U1: float
    vol_bdry_U2: float
    vol_compl_1: float
    vol_compl_2: float
    vol_1: float
    vol_2: float
    haus_1: float
    haus_2: float
    identical: bool = False

    def to_dict(self) -> dict:
        keys = ("eta", "eps_c0", "lambda_sampled", "lambda_inflation", "a", "h", "hbar",
                "D_U1", "D_U2", "vol_U1", "vol_U2", "vol_bdry_U1", "vol_bdry_U2",
                "vol_compl_1", "vol_compl_2", "vol_1", "vol_2", "haus_1", "haus_2", "identical")
        out = {k: getattr(self, k) for k in keys}
        out["lambda"] = self.lambda_
        out["correspondence"] = dict(self.correspondence)
        return out


def _eps_c0(s1: _Side, s2: _Side, sig_lo: float, n_ratio: int) -> tuple[float, float, float]:
    sig = np.linspace(sig_lo, math.pi - sig_lo, n_ratio)
    sig = sig[np.abs(sig - 0.5 * math.pi) >= LEAF_GAP]
    sig = np.append(sig, 0.5 * math.pi)
    rad = (s1.radial_factor(sig) / s2.radial_factor(sig)) ** 2
    tan = (s1.R / s2.R) ** 2
    lo = min(float(rad.min()), tan)
    hi = max(float(rad.max()), tan)
    return max(math.sqrt(hi), 1.0 / math.sqrt(lo)) - 1.0, lo, hi


def lambda_distortion(g1: MetricProfile, g2: MetricProfile, eta: float, eps_c0: float = 0.0,
                      n_s: int = N_SAMPLE, n_phi: int = N_SAMPLE) -> dict:
    """Sampled ``sup |d_1 - d_2|`` over the band under the correspondence.

    Returns the sampled maximum, the resolution inflation
    ``2 (1 + eps) diag_2`` (``diag_i`` the ``g_i``-diagonal of one sample
    cell), the sampled band diameters and cell diagonals.
    """
    if n_s < 8 or n_phi < 8:
        raise ValueError("n_s and n_phi must be at least 8")
    s1, s2 = _Side.of(g1), _Side.of(g2)
    sig_lo = math.asin(eta)
    sig = np.linspace(sig_lo, math.pi - sig_lo, n_s)
    phis = np.linspace(0.0, math.pi, n_phi)
    a1, a2 = s1.s_at(sig), s2.s_at(sig)
    try:
        d1 = distance_table(g1, a1, a1, phis)
        d2 = d1 if _same_metric(g1, g2) else distance_table(g2, a2, a2, phis)
    except WarpGeoError as exc:  # attach the sampled band
        raise type(exc)(f"{exc} (band sigma in [{sig_lo:.6g}, {math.pi - sig_lo:.6g}])") from exc
    dphi = math.pi / (n_phi - 1)
    diag1 = math.hypot(float(np.max(np.diff(a1))), s1.R * dphi)
    diag2 = math.hypot(float(np.max(np.diff(a2))), s2.R * dphi)
    return {
        "sampled": float(np.max(np.abs(d1 - d2))),
        "inflation": 2.0 * (1.0 + eps_c0) * diag2,
        "max_d1": float(np.max(d1)),
        "max_d2": float(np.max(d2)),
        "diag1": diag1,
        "diag2": diag2,
    }


def build_comparison(g1: MetricProfile, g2: MetricProfile | None = None, eta: float = 0.1,
                     n_s: int = N_SAMPLE, n_phi: int = N_SAMPLE, n_ratio: int = 4001) -> ComparisonRegion:
    """Assemble the common band ``Omega_eta`` and every quantity of the bounds.

    ``g2`` defaults to the unit round sphere of the same dimension.  For
    identical metrics the correspondence is the identity, so the distortion
    is exactly zero; the inflation is still reported.
    """
    from .families import round_sphere

    if not (0.0 < eta < 0.5):
        raise ValueError(f"eta={eta} not in (0, 0.5)")
    g2 = round_sphere(g1.n) if g2 is None else g2
    if g1.n != g2.n:
        raise ValueError("dimensions differ")
    _require_unique(g1)
    _require_unique(g2)
    s1, s2 = _Side.of(g1), _Side.of(g2)
    _check_cover(s1, eta, "g1")
    _check_cover(s2, eta, "g2")
    same = _same_metric(g1, g2)

    sig_lo = math.asin(eta)
    if same:
        eps = 0.0
        ratio = (1.0, 1.0)
    else:
        eps, lo, hi = _eps_c0(s1, s2, sig_lo, n_ratio)
        ratio = (lo, hi)
    lam = lambda_distortion(g1, g2, eta, eps, n_s, n_phi)
    lam_val = 0.0 if same else lam["sampled"] + lam["inflation"]
    D_U1 = min(g1.D, lam["max_d1"] + lam["diag1"])
    D_U2 = min(g2.D, lam["max_d2"] + lam["diag2"])
    a, h, hbar = ls_quantities(eps, lam_val, D_U1, D_U2)

    band1 = (float(s1.s_at(sig_lo)), float(s1.s_at(math.pi - sig_lo)))
    band2 = (float(s2.s_at(sig_lo)), float(s2.s_at(math.pi - sig_lo)))
    m = g1.n - 1
    sig_area = sphere_area(m)
    V1, V2 = volume(g1), volume(g2)
    vU1, vU2 = volume_between(g1, *band1), volume_between(g2, *band2)
    corr = {
        "sigma_band": (sig_lo, math.pi - sig_lo),
        "band_1": band1,
        "band_2": band2,
        "R1": s1.R,
        "R2": s2.R,
        "S1": s1.s_max,
        "S2": s2.s_max,
        "metric_ratio": ratio,
    }
    return ComparisonRegion(
        eta=eta, g1=g1, g2=g2, correspondence=corr, eps_c0=eps,
        lambda_=lam_val, lambda_sampled=0.0 if same else lam["sampled"], lambda_inflation=lam["inflation"],
        a=a, h=h, hbar=hbar, D_U1=D_U1, D_U2=D_U2,
        vol_U1=vU1, vol_U2=vU2,
        vol_bdry_U1=2.0 * sig_area * (eta * s1.R) ** m,
        vol_bdry_U2=2.0 * sig_area * (eta * s2.R) ** m,
        vol_compl_1=_caps(g1, band1), vol_compl_2=_caps(g2, band2),
        vol_1=V1, vol_2=V2,
        haus_1=hausdorff_defect(g1, band1), haus_2=hausdorff_defect(g2, band2),
        identical=same,
    )


# --------------------------------------------------------------------------
# bounds


@dataclass(frozen=True)
class Bound:
    value: float
    terms: dict

    def to_dict(self) -> dict:
        return {"value": self.value, "terms": dict(self.terms)}


def gh_bound(region: ComparisonRegion, drop_haus_1: bool = False) -> Bound:
    """``a + 2 hbar + max(d_H(U_1, M_1), d_H(U_2, M_2))``."""
    haus1 = 0.0 if drop_haus_1 else region.haus_1
    haus = max(haus1, region.haus_2)
    val = region.a + 2.0 * region.hbar + haus
    return Bound(val, {"a": region.a, "hbar": region.hbar, "haus_1": haus1,
                       "haus_2": region.haus_2, "eps": region.eps_c0, "lambda": region.lambda_})


def if_bound(region: ComparisonRegion) -> Bound:
    """``(a + 2 hbar)(Vol U_1 + Vol U_2 + Vol dU_1 + Vol dU_2) + Vol(M_1 - U_1) + Vol(M_2 - U_2)``."""
    r = region
    vols = r.vol_U1 + r.vol_U2 + r.vol_bdry_U1 + r.vol_bdry_U2
    val = (r.a + 2.0 * r.hbar) * vols + r.vol_compl_1 + r.vol_compl_2
    return Bound(val, {"a": r.a, "hbar": r.hbar, "eps": r.eps_c0, "lambda": r.lambda_,
                       "vol_U1": r.vol_U1, "vol_U2": r.vol_U2, "vol_bdry_U1": r.vol_bdry_U1,
                       "vol_bdry_U2": r.vol_bdry_U2, "vol_compl_1": r.vol_compl_1,
                       "vol_compl_2": r.vol_compl_2})


def vif_bound(region: ComparisonRegion) -> Bound:
    """Intrinsic-flat bound plus ``|Vol(M_1) - Vol(M_2)|``."""
    b = if_bound(region)
    dv = abs(region.vol_1 - region.vol_2)
    return Bound(b.value + dv, {"if": b.value, "vol_diff": dv})


@dataclass(frozen=True)
class BoundReport:
    gh: Bound
    if_: Bound
    vif: Bound
    eta_used: float | None
    eta_gh: float | None = None
    warnings: tuple = ()
    legs: tuple = ()
    region: dict | None = field(default=None, compare=False)

    @property
    def gh_bound(self) -> float:
        return self.gh.value

    @property
    def if_bound(self) -> float:
        return self.if_.value

    @property
    def vif_bound(self) -> float:
        return self.vif.value

    def to_dict(self) -> dict:
        out = {"gh": self.gh.to_dict(), "if": self.if_.to_dict(), "vif": self.vif.to_dict(),
               "eta_used": self.eta_used, "eta_gh": self.eta_gh, "warnings": list(self.warnings)}
        if self.legs:
            out["legs"] = [leg.to_dict() for leg in self.legs]
        if self.region is not None:
            out["region"] = self.region
        return out


def bound_report(region: ComparisonRegion) -> BoundReport:
    return BoundReport(gh_bound(region), if_bound(region), vif_bound(region), region.eta, region.eta,
                       region=region.to_dict())


def sweep_eta(g1: MetricProfile, g2: MetricProfile | None = None, eta_grid=ETA_GRID,
              **kw) -> BoundReport:
    """Evaluate the bounds over ``eta_grid``; keep the least VIF and, separately, the least GH.

    Grid points whose charts do not cover the band are skipped with a warning.
    """
    grid = [float(e) for e in eta_grid]
    if not grid or any(not (0.0 < e < 0.5) for e in grid):
        raise ValueError("eta grid must be nonempty and inside (0, 0.5)")

    def one(eta):
        try:
            return bound_report(build_comparison(g1, g2, eta, **kw))
        except ChartsDontCover as exc:
            return exc

    results = pmap(one, grid)
    good = [r for r in results if isinstance(r, BoundReport)]
    notes = tuple(f"eta={e}: {r}" for e, r in zip(grid, results) if not isinstance(r, BoundReport))
    if not good:
        raise AllEtaFailed("no eta in the grid admits covering charts: " + "; ".join(notes))
    best_v = min(good, key=lambda r: r.vif.value)
    best_g = min(good, key=lambda r: r.gh.value)
    return BoundReport(best_g.gh, best_v.if_, best_v.vif, best_v.eta_used, best_g.eta_used, notes,
                       region=best_v.region)


def triangle_bound(g1: MetricProfile, g2: MetricProfile, eta_grid=ETA_GRID, **kw) -> BoundReport:
    """Bound a general pair through the round sphere: ``B(g1, round) + B(round, g2)``."""
    from .families import round_sphere

    rd = round_sphere(g1.n)
    leg1 = sweep_eta(g1, rd, eta_grid, **kw)
    leg2 = sweep_eta(rd, g2, eta_grid, **kw)

    def add(x: Bound, y: Bound) -> Bound:
        return Bound(x.value + y.value, {"leg1": x.value, "leg2": y.value})

    return BoundReport(add(leg1.gh, leg2.gh), add(leg1.if_, leg2.if_), add(leg1.vif, leg2.vif),
                       None, None, leg1.warnings + leg2.warnings, (leg1, leg2))


# --------------------------------------------------------------------------
# surgery


@dataclass(frozen=True)
class SurgeryRecord:
    Z: tuple
    vol_Z: float
    vol_bdry_Z: float
    gh_bound_excised: float
    psi_bound: float
    region: dict

    def to_dict(self) -> dict:
        return {"Z": [list(z) for z in self.Z], "vol_Z": self.vol_Z, "vol_bdry_Z": self.vol_bdry_Z,
                "gh_bound_excised": self.gh_bound_excised, "psi_bound": self.psi_bound,
                "region": self.region}


def surgery_bound(n: int, eta: float, D: float) -> float:
    """``n omega_n eta^(n-1) D + 2 sigma_{n-1} eta^(n-1)``, omega_n the unit-ball volume."""
    from .profile import ball_volume

    return n * ball_volume(n) * eta ** (n - 1) * D + 2.0 * sphere_area(n - 1) * eta ** (n - 1)


def surgery_bad_set(p: MetricProfile, eta: float = 0.1, **kw) -> SurgeryRecord:
    """Excise the polar caps ``{f < eta}`` and bound the GH distance of the rest to the round sphere.

    The comparison runs on the band ``f > eta`` (its normalised level is
    ``eta / R``); the Hausdorff term of the excised side is dropped.
    """
    _require_unique(p)
    side = _Side.of(p)
    if not (0.0 < eta < side.R):
        raise ValueError(f"eta={eta} must lie in (0, R={side.R:.6g})")
    sig = math.asin(eta / side.R)
    lo, hi = float(side.s_at(sig)), float(side.s_at(math.pi - sig))
    vol_Z = _caps(p, (lo, hi))
    vol_bd = 2.0 * sphere_area(p.n - 1) * eta ** (p.n - 1)
    region = build_comparison(p, None, eta / side.R, **kw)
    gh = gh_bound(region, drop_haus_1=True)
    return SurgeryRecord(((0.0, lo), (hi, p.D)), vol_Z, vol_bd, gh.value,
                         surgery_bound(p.n, eta, p.D), region.to_dict())
