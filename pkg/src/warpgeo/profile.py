"""Rotationally symmetric metrics ``g = ds^2 + f(s)^2 g_rd`` on the n-sphere.

A :class:`MetricProfile` carries the warping function ``f`` and its first two
derivatives as vectorised evaluators on ``[0, D]``.  Everything in this module
is a pure function of the profile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import integrate, interpolate
from scipy.special import gamma

from .errors import (
    EmptyDomain,
    NonFiniteEvaluation,
    NotMonotone,
    PoleSingularity,
    QuadratureFailure,
)

TAU_END = 1e-6
TAU_QUAD = 1e-10
TAU_CHART = 1e-8
POLE_FRACTION = 1e-6
ROOT_FRACTION = 1e-12

Evaluator = Callable[[np.ndarray], np.ndarray]


def sphere_area(m: int) -> float:
    """Volume of the unit round m-sphere, ``2 pi^((m+1)/2) / Gamma((m+1)/2)``."""
    return 2.0 * math.pi ** ((m + 1) / 2.0) / gamma((m + 1) / 2.0)


def ball_volume(n: int) -> float:
    """Volume of the Euclidean unit n-ball."""
    return math.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0)


@dataclass(frozen=True)
class Samples:
    grid: np.ndarray
    f: np.ndarray
    fp: np.ndarray | None = None
    fpp: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class MetricProfile:
    """Warping function of a rotationally symmetric metric.

    Parameters
    ----------
    n : int
        Dimension of the sphere (``n >= 3``).
    D : float
        Meridian length; the coordinate ``s`` ranges over ``[0, D]``.
    f, fp, fpp : callable
        Vectorised evaluators of ``f``, ``f'`` and ``f''``.
    kind : {"analytic", "sampled"}
    name, params :
        Generator name and parameters; used to serialise analytic profiles.
    samples : Samples, optional
        Raw grid data for sampled profiles.
    """

    n: int
    D: float
    f: Evaluator
    fp: Evaluator
    fpp: Evaluator
    kind: str = "analytic"
    name: str = "custom"
    params: Mapping = field(default_factory=dict)
    samples: Samples | None = None

    @property
    def tau_pole(self) -> float:
        return POLE_FRACTION * self.D

    @cached_property
    def max_leaf(self) -> tuple[float, float]:
        """``(s, f(s))`` at the global maximum of ``f``."""
        from .sweepout import _argmax_f

        return _argmax_f(self)

    @cached_property
    def geodesic_table(self):
        from .geodesic import GeodesicTable

        return GeodesicTable.from_profile(self)

    def __repr__(self) -> str:  # dataclass repr would dump the callables
        return f"MetricProfile(name={self.name!r}, n={self.n}, D={self.D:.6g}, kind={self.kind!r})"


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def sampled_profile(n: int, grid: Sequence[float], f_values: Sequence[float],
                    fp: Sequence[float] | None = None,
                    fpp: Sequence[float] | None = None,
                    name: str = "sampled", params: Mapping | None = None) -> MetricProfile:
    """Build a profile from grid data.

    With only ``f`` given, a cubic spline clamped to ``f'(0) = 1`` and
    ``f'(D) = -1`` is used.  When derivative arrays are supplied the
    interpolant is the matching Hermite polynomial (cubic with ``fp``,
    quintic with ``fp`` and ``fpp``).
    """
    grid = _arr(grid)
    fv = _arr(f_values)
    if grid.ndim != 1 or grid.shape != fv.shape or grid.size < 4:
        raise ValueError("grid and f must be 1-D arrays of equal length >= 4")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if grid[0] != 0.0:
        raise ValueError("grid must start at s=0")
    D = float(grid[-1])
    if fp is None:
        spl = interpolate.CubicSpline(grid, fv, bc_type=((1, 1.0), (1, -1.0)))
        d1, d2 = spl.derivative(1), spl.derivative(2)
        fp_arr = fpp_arr = None
    else:
        fp_arr = _arr(fp)
        cols = [fv, fp_arr]
        fpp_arr = None
        if fpp is not None:
            fpp_arr = _arr(fpp)
            cols.append(fpp_arr)
        spl = interpolate.BPoly.from_derivatives(grid, np.column_stack(cols))
        d1, d2 = spl.derivative(1), spl.derivative(2)
    samples = Samples(grid, fv, fp_arr, fpp_arr)

    def clip(s):
        return np.clip(_arr(s), 0.0, D)

    return MetricProfile(
        n=n, D=D,
        f=lambda s: spl(clip(s)),
        fp=lambda s: d1(clip(s)),
        fpp=lambda s: d2(clip(s)),
        kind="sampled", name=name, params=dict(params or {}), samples=samples,
    )


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tol: float


@dataclass(frozen=True)
class Diagnostics:
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


def _finite(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NonFiniteEvaluation(f"{what} returned a non-finite value")
    return values


def validate_profile(p: MetricProfile, n_grid: int = 4097, tol: float = TAU_END) -> Diagnostics:
    """Check the endpoint smoothness conditions and positivity of ``f``."""
    if not p.D > 0:
        raise EmptyDomain(f"meridian length D={p.D} must be positive")
    s = np.linspace(0.0, p.D, n_grid)
    f = _finite(_arr(p.f(s)), "f")
    fp = _finite(_arr(p.fp(s)), "f'")
    fpp = _finite(_arr(p.fpp(s)), "f''")
    interior = f[1:-1]
    min_int = float(interior.min())
    checks = (
        Check("dimension>=3", p.n >= 3, float(p.n), 3.0),
        Check("f(0)=0", abs(f[0]) <= tol, abs(float(f[0])), tol),
        Check("f(D)=0", abs(f[-1]) <= tol, abs(float(f[-1])), tol),
        Check("f>0 interior", min_int > 0.0, min_int, 0.0),
        Check("f'(0)=1", abs(fp[0] - 1.0) <= tol, abs(float(fp[0] - 1.0)), tol),
        Check("f'(D)=-1", abs(fp[-1] + 1.0) <= tol, abs(float(fp[-1] + 1.0)), tol),
        Check("f''(0)=0", abs(fpp[0]) <= tol, abs(float(fpp[0])), tol),
        Check("f''(D)=0", abs(fpp[-1]) <= tol, abs(float(fpp[-1])), tol),
    )
    return Diagnostics(checks)


# --------------------------------------------------------------------------
# pointwise geometry


def _pole_split(p: MetricProfile, s):
    s = _arr(s)
    near0 = s <= p.tau_pole
    nearD = s >= p.D - p.tau_pole
    return s, near0, nearD


def _third_derivative_at_poles(p: MetricProfile) -> tuple[float, float]:
    """``f'''`` at both poles from ``f''(h)/h`` (``f''`` vanishes there)."""
    h = 1e-4 * p.D
    lo = float(p.fpp(h)) / h
    # d^3/dx^3 f(D - x) at x=0 equals -f'''(D); we return the former so that
    # both poles use the same limit formula.
    hi = float(p.fpp(p.D - h)) / h
    return lo, hi


def _with_poles(p, s, interior_fn, pole_fn, limit, what):
    s, near0, nearD = _pole_split(p, s)
    bad = near0 | nearD
    if np.any(bad) and not limit:
        raise PoleSingularity(f"{what} evaluated within {p.tau_pole:.3g} of a pole")
    out = np.empty_like(s)
    ok = ~bad
    if np.any(ok):
        out[ok] = interior_fn(s[ok])
    if np.any(bad):
        t0, tD = _third_derivative_at_poles(p)
        out[near0] = pole_fn(t0)
        out[nearD] = pole_fn(tD)
    return out if out.ndim else float(out)


def scal(p: MetricProfile, s, limit: bool = False):
    """Scalar curvature ``(n-1)(n-2)[(1-f'^2)/f^2 - 2/(n-2) f''/f]``."""
    n = p.n

    def inner(x):
        f, fp, fpp = p.f(x), p.fp(x), p.fpp(x)
        return (n - 1) * (n - 2) * ((1.0 - fp * fp) / (f * f) - 2.0 / (n - 2) * fpp / f)

    return _with_poles(p, s, inner, lambda t3: -n * (n - 1) * t3, limit, "scal")


def ricci_radial(p: MetricProfile, s, limit: bool = False):
    """``Ric(d_s, d_s) = -(n-1) f''/f``."""
    n = p.n
    return _with_poles(p, s, lambda x: -(n - 1) * p.fpp(x) / p.f(x),
                       lambda t3: -(n - 1) * t3, limit, "ricci_radial")


def _no_limit(what):
    def fn(t3):
        raise PoleSingularity(f"{what} diverges at a pole")
    return fn


def mean_curvature(p: MetricProfile, s):
    """Mean curvature ``(n-1) f'/f`` of the leaf, normal along ``+d_s``."""
    return _with_poles(p, s, lambda x: (p.n - 1) * p.fp(x) / p.f(x),
                       _no_limit("mean curvature"), False, "mean_curvature")


def second_form_norm_sq(p: MetricProfile, s):
    """``|A|^2 = (n-1)(f'/f)^2``."""
    def inner(x):
        q = p.fp(x) / p.f(x)
        return (p.n - 1) * q * q

    return _with_poles(p, s, inner, _no_limit("|A|^2"), False, "second_form_norm_sq")


def leaf_intrinsic_scal(p: MetricProfile, s):
    """Scalar curvature of the leaf ``Sigma_s`` (round sphere of radius ``f(s)``)."""
    f = _arr(p.f(s))
    return (p.n - 1) * (p.n - 2) / (f * f)


# --------------------------------------------------------------------------
# quadrature

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def integrate_s(p: MetricProfile, g: Callable[[np.ndarray], np.ndarray],
                a: float = 0.0, b: float | None = None, tol: float = TAU_QUAD) -> float:
    """Integrate ``g(s)`` over ``[a, b]`` to relative tolerance ``tol``.

    Profiles backed by grid data are integrated interval-by-interval with
    10-point Gauss-Legendre (exact for the piecewise-polynomial interpolant
    up to degree 19); closed-form ones adaptively.
    """
    b = p.D if b is None else b
    if b <= a:
        return 0.0
    if p.samples is not None:
        knots = p.samples.grid
        inner = knots[(knots > a) & (knots < b)]
        edges = np.concatenate(([a], inner, [b]))
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * np.diff(edges)
        x = mid[:, None] + half[:, None] * _GL_X[None, :]
        return float(np.sum(half[:, None] * _GL_W[None, :] * g(x)))
    out = integrate.quad(lambda x: float(g(np.asarray(x))), a, b,
                         epsabs=0.0, epsrel=tol, limit=400, full_output=1)
    val, err = out[0], out[1]
    if len(out) > 3:
        # quad flagged a problem; accept only if the estimate is still tight
        if err > max(100 * tol * abs(val), 1e-13):
            raise QuadratureFailure(f"quadrature error {err:.3g} above tolerance: {out[3]}")
    return float(val)


def volume_between(p: MetricProfile, a: float = 0.0, b: float | None = None) -> float:
    """Volume of the band ``a <= s <= b``, ``sigma_{n-1} int f^{n-1} ds``."""
    m = p.n - 1
    return sphere_area(m) * integrate_s(p, lambda x: np.abs(p.f(x)) ** m, a, b)


def volume(p: MetricProfile) -> float:
    """Total n-volume."""
    return volume_between(p, 0.0, p.D)


# --------------------------------------------------------------------------
# radial chart


@dataclass(frozen=True, eq=False)
class RadialChart:
    """A monotone band written as ``dr^2/V(r) + r^2 g_rd``."""

    n: int
    band: tuple[float, float]
    V: Evaluator
    Vp: Evaluator
    orientation: str
    s_of_r: Evaluator | None = None

    def __repr__(self) -> str:
        return f"RadialChart(n={self.n}, band={self.band}, orientation={self.orientation!r})"


def invert_monotone(func: Evaluator, r, lo: float, hi: float, increasing: bool,
                    xtol: float) -> np.ndarray:
    """Vectorised bisection for ``func(s) = r`` on ``[lo, hi]``."""
    r = _arr(r)
    a = np.full(r.shape, lo, dtype=float)
    b = np.full(r.shape, hi, dtype=float)
    n_iter = int(math.ceil(math.log2(max(hi - lo, xtol) / xtol))) + 2
    for _ in range(n_iter):
        m = 0.5 * (a + b)
        fm = _arr(func(m))
        below = fm < r if increasing else fm > r
        a = np.where(below, m, a)
        b = np.where(below, b, m)
    return 0.5 * (a + b)


def to_radial_chart(p: MetricProfile, band: tuple[float, float], n_scan: int = 2049) -> RadialChart:
    """Rewrite the band ``s in band`` in the radius coordinate ``r = f(s)``."""
    s_lo, s_hi = float(band[0]), float(band[1])
    if not (0.0 <= s_lo < s_hi <= p.D):
        raise ValueError(f"band {band} not inside [0, {p.D}]")
    scan = np.linspace(s_lo, s_hi, n_scan)[1:-1]
    fp = _arr(p.fp(scan))
    if np.any(np.abs(fp) <= 1e-12) or not (np.all(fp > 0) or np.all(fp < 0)):
        raise NotMonotone(f"f' vanishes or changes sign on ({s_lo}, {s_hi})")
    increasing = bool(fp[0] > 0)
    f_lo, f_hi = float(p.f(s_lo)), float(p.f(s_hi))
    r_band = (min(f_lo, f_hi), max(f_lo, f_hi))
    xtol = ROOT_FRACTION * p.D

    def s_of_r(r):
        return invert_monotone(p.f, r, s_lo, s_hi, increasing, xtol)

    def V(r):
        d = p.fp(s_of_r(r))
        return d * d

    def Vp(r):
        return 2.0 * p.fpp(s_of_r(r))

    return RadialChart(p.n, r_band, V, Vp, "increasing" if increasing else "decreasing", s_of_r)


def chart_round_trip_error(p: MetricProfile, chart: RadialChart, band, n: int = 257) -> float:
    """``max |V(f(s)) - f'(s)^2|`` over the band interior."""
    s = np.linspace(band[0], band[1], n)[1:-1]
    return float(np.max(np.abs(chart.V(p.f(s)) - p.fp(s) ** 2)))
