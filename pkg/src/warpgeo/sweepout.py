"""Canonical sweepout by distance spheres, width and the symmetric MinA proxy."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import ResolutionLimit
from .profile import MetricProfile, sphere_area

TAU_CRIT = 1e-10
SCAN_N = 4096


@dataclass(frozen=True)
class Leaf:
    s: float
    area: float
    kind: str  # stable | unstable | degenerate | plateau
    plateau_extent: tuple[float, float] | None = None
    radius: float = 0.0
    fpp: float = 0.0


@dataclass(frozen=True)
class LeafReport:
    leaves: tuple[Leaf, ...]
    width: float
    width_location: float
    min_a_symmetric: float | None

    def kinds(self) -> list[str]:
        return [lf.kind for lf in self.leaves]

    def to_dict(self) -> dict:
        return {
            "leaves": [
                {"s": lf.s, "area": lf.area, "kind": lf.kind, "radius": lf.radius,
                 "plateau_extent": list(lf.plateau_extent) if lf.plateau_extent else None}
                for lf in self.leaves
            ],
            "width": self.width,
            "width_location": self.width_location,
            "min_a_symmetric": self.min_a_symmetric,
        }


def leaf_area(p: MetricProfile, s):
    """Volume ``sigma_{n-1} f(s)^{n-1}`` of the leaf at ``s``."""
    f = np.abs(np.asarray(p.f(s), dtype=float))
    out = sphere_area(p.n - 1) * f ** (p.n - 1)
    return out if out.ndim else float(out)


def _argmax_f(p: MetricProfile, n_scan: int = SCAN_N) -> tuple[float, float]:
    s = np.linspace(0.0, p.D, n_scan + 1)
    fv = np.asarray(p.f(s), dtype=float)
    i = int(np.argmax(fv))
    lo, hi = s[max(i - 1, 0)], s[min(i + 1, n_scan)]
    fp_lo, fp_hi = float(p.fp(lo)), float(p.fp(hi))
    if fp_lo > 0 > fp_hi:
        sm = optimize.brentq(lambda x: float(p.fp(x)), lo, hi, xtol=1e-14 * p.D, rtol=1e-15)
    else:
        sm = optimize.minimize_scalar(lambda x: -float(p.f(x)), bounds=(lo, hi), method="bounded",
                                      options={"xatol": 1e-12 * p.D}).x
    fm = float(p.f(sm))
    if fm < fv[i]:
        sm, fm = float(s[i]), float(fv[i])
    return float(sm), fm


def width(p: MetricProfile) -> float:
    """``W = max_s sigma_{n-1} f(s)^{n-1}``."""
    return sphere_area(p.n - 1) * p.max_leaf[1] ** (p.n - 1)


def _classify(p: MetricProfile, s: float, tau_class: float) -> tuple[str, float]:
    fpp = float(p.fpp(s))
    if fpp < -tau_class:
        return "unstable", fpp
    if fpp > tau_class:
        return "stable", fpp
    return "degenerate", fpp


def find_minimal_leaves(p: MetricProfile, tol: float = TAU_CRIT, n_scan: int = SCAN_N) -> LeafReport:
    """Locate and classify every leaf with ``f' = 0``.

    Sign changes of ``f'`` on the scan grid are refined by Brent's method.
    Runs of grid points with ``|f'| <= tol`` form plateaus; isolated local
    minima of ``|f'|`` without a sign change are refined by minimising
    ``f'^2`` and kept if they reach ``tol`` (touching, degenerate zeros).
    """
    D = p.D
    step = D / n_scan
    tau_class = 1e-8 / (D * D)
    s = np.linspace(0.0, D, n_scan + 1)
    fp = np.asarray(p.fp(s), dtype=float)
    inner = slice(1, n_scan)
    si, gi = s[inner], fp[inner]
    flat = np.abs(gi) <= tol

    cands: list[Leaf] = []
    sigma = sphere_area(p.n - 1)

    def make(x: float) -> Leaf:
        kind, fpp = _classify(p, x, tau_class)
        r = float(p.f(x))
        return Leaf(float(x), sigma * r ** (p.n - 1), kind, None, r, fpp)

    # plateaus: maximal runs of flat points (length >= 2)
    plateau_mask = np.zeros_like(flat)
    i = 0
    while i < flat.size:
        if flat[i]:
            j = i
            while j + 1 < flat.size and flat[j + 1]:
                j += 1
            if j > i:
                plateau_mask[i:j + 1] = True
                a, b = float(si[i]), float(si[j])
                mid = 0.5 * (a + b)
                r = float(p.f(mid))
                cands.append(Leaf(mid, sigma * r ** (p.n - 1), "plateau", (a, b), r, float(p.fpp(mid))))
            i = j + 1
        else:
            i += 1

    # sign changes outside plateaus
    sgn = np.sign(gi)
    for idx in range(gi.size - 1):
        if plateau_mask[idx] or plateau_mask[idx + 1]:
            continue
        a, b = gi[idx], gi[idx + 1]
        if a == 0.0:
            if idx == 0 or sgn[idx - 1] != 0:
                cands.append(make(si[idx]))
            continue
        if a * b < 0:
            x = optimize.brentq(lambda t: float(p.fp(t)), si[idx], si[idx + 1],
                                xtol=1e-12 * D, rtol=1e-15)
            cands.append(make(x))
    if gi[-1] == 0.0 and not plateau_mask[-1]:
        cands.append(make(si[-1]))

    # touching zeros: local minima of |f'| with no sign change nearby
    absg = np.abs(gi)
    for idx in range(1, gi.size - 1):
        if plateau_mask[idx] or not (absg[idx] <= absg[idx - 1] and absg[idx] <= absg[idx + 1]):
            continue
        if sgn[idx - 1] != sgn[idx + 1] or np.sign(gi[idx]) != sgn[idx - 1]:
            continue  # handled as a sign change
        if absg[idx] > 1e3 * max(tol, abs(gi[idx - 1] - gi[idx + 1])):
            continue
        res = optimize.minimize_scalar(lambda t: float(p.fp(t)) ** 2,
                                       bounds=(si[idx - 1], si[idx + 1]), method="bounded",
                                       options={"xatol": 1e-12 * D})
        if abs(float(p.fp(res.x))) <= tol:
            cands.append(make(res.x))

    cands.sort(key=lambda lf: lf.s)
    for u, v in zip(cands, cands[1:]):
        gap = v.s - u.s
        if u.plateau_extent or v.plateau_extent:
            continue
        if gap < 0.5 * step:
            raise ResolutionLimit(f"critical leaves at s={u.s:.12g} and s={v.s:.12g} closer than scan step")

    sm, fm = p.max_leaf
    W = sigma * fm ** (p.n - 1)
    mina = min((lf.area for lf in cands), default=None)
    return LeafReport(tuple(cands), W, sm, mina)


@dataclass(frozen=True)
class NearExtremalStructure:
    unique_minimal: bool
    radius_threshold: float
    violating_leaves: tuple[Leaf, ...] = field(default_factory=tuple)


def radius_threshold(n: int, eps: float) -> float:
    """``(1/(1-eps)) sqrt((n-2)/n)``: the largest radius a stable leaf may have."""
    return math.sqrt((n - 2) / n) / (1.0 - eps)


def check_near_extremal_structure(p: MetricProfile, eps: float,
                                  report: LeafReport | None = None) -> NearExtremalStructure:
    """Flag leaves incompatible with the one-minimal-leaf structure.

    A leaf violates if it is stable, degenerate or a plateau, or if its radius
    is at most :func:`radius_threshold`.
    """
    rep = report if report is not None else find_minimal_leaves(p)
    thr = radius_threshold(p.n, eps)
    bad = tuple(lf for lf in rep.leaves if lf.kind != "unstable" or lf.radius <= thr)
    unique = len(rep.leaves) == 1 and rep.leaves[0].kind == "unstable"
    return NearExtremalStructure(unique, thr, bad)
