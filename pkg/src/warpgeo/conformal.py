"""Conformal picture of a hemisphere.

A hemisphere ``s in [0, S~]`` (pole to maximal leaf) is conformal to the unit
ball: with ``rho(s) = exp(-int_s^{S~} dxi / f)`` the metric becomes
``u^{4/(n-2)} (d rho^2 + rho^2 g_rd)`` for ``u = (f / rho)^{(n-2)/2}``.  The
scalar-curvature bound turns into the differential inequality
``-Lap u >= n(n-2)/4 u^{(n+2)/(n-2)}`` checked by :func:`yamabe_residual`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DerivativeUnavailable, NotHemisphere, QuadratureFailure
from .profile import MetricProfile, invert_monotone, scal, sphere_area

TAU_CONF = 1e-8
TAU_YAM = 1e-4
TAU_RIG = 1e-6

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


@dataclass(frozen=True, eq=False)
class ConformalFactor:
    """Radial conformal factor on the unit ball.

    ``u``, ``du``, ``d2u`` are evaluators in ``rho``; ``du``/``d2u`` may be
    ``None`` when only values are known.
    """

    n: int
    u: Callable
    rho_of_s: Callable
    s_of_rho: Callable | None = None
    du: Callable | None = None
    d2u: Callable | None = None
    s_max: float = float("nan")


def _gl(fn, a, b):
    """Composite-free 12-point Gauss-Legendre on each ``[a_i, b_i]`` (vectorised)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid[..., None] + half[..., None] * _GL_X
    return half * np.sum(_GL_W * fn(x), axis=-1)


def hemisphere_to_conformal(p: MetricProfile, hemisphere: str = "north", n_nodes: int = 2049) -> ConformalFactor:
    """Conformal factor of the hemisphere between a pole and the maximal leaf.

    ``hemisphere="south"`` uses the reflected profile ``f(D - s)``.
    """
    sm, _ = p.max_leaf
    if hemisphere == "north":
        f = p.f
        fp = p.fp
        fpp = p.fpp
        S = sm
    elif hemisphere == "south":
        D = p.D
        f = lambda s: p.f(D - np.asarray(s, float))  # noqa: E731
        fp = lambda s: -p.fp(D - np.asarray(s, float))  # noqa: E731
        fpp = lambda s: p.fpp(D - np.asarray(s, float))  # noqa: E731
        S = D - sm
    else:
        raise ValueError("hemisphere must be 'north' or 'south'")
    scan = np.linspace(0.0, S, 4097)[1:-1]
    d = np.asarray(fp(scan), float)
    if np.any(d <= 0.0):
        raise NotHemisphere("f' vanishes inside the segment from the pole to the maximal leaf")

    # 1/f = 1/s + g(s) with g bounded; integrate g in pieces and the log analytically
    def g(x):
        return 1.0 / f(x) - 1.0 / x

    nodes = np.linspace(0.0, S, n_nodes)
    pieces = _gl(g, nodes[:-1], nodes[1:])
    if not np.all(np.isfinite(pieces)):
        raise QuadratureFailure("non-finite integrand in the conformal coordinate")
    tail = np.concatenate((np.cumsum(pieces[::-1])[::-1], [0.0]))  # int_{node_k}^{S} g
    step = S / (n_nodes - 1)

    def G(s):
        # int_s^S g = int_s^{node_{k+1}} g + tail[k+1]
        s = np.clip(np.asarray(s, float), 0.0, S)
        k = np.minimum((s / step).astype(np.int64), n_nodes - 2)
        right = nodes[k + 1]
        return _gl(g, s, right) + tail[k + 1]

    def rho_of_s(s):
        s = np.asarray(s, float)
        return (s / S) * np.exp(-G(s))

    G0 = float(tail[0])
    u0 = (S * math.exp(G0)) ** ((p.n - 2) / 2.0)
    e = (p.n - 2) / 2.0

    def s_of_rho(r):
        return invert_monotone(rho_of_s, r, 0.0, S, True, 1e-14 * S)

    def _at(r):
        r = np.asarray(r, float)
        s = s_of_rho(r)
        return r, s, np.asarray(f(s), float)

    def u(r):
        r, s, fs = _at(r)
        safe = np.where(r > 0, r, 1.0)
        out = np.where(r > 0, (fs / safe) ** e, u0)
        return out if out.ndim else float(out)

    def du(r):
        r, s, fs = _at(r)
        uu = (fs / r) ** e
        return uu * (p.n - 2) * (np.asarray(fp(s), float) - 1.0) / (2.0 * r)

    def d2u(r):
        r, s, fs = _at(r)
        uu = (fs / r) ** e
        q = np.asarray(fp(s), float) - 1.0
        br = (p.n - 2) * q * q / (2.0 * fs) + np.asarray(fpp(s), float) - q / fs
        return e * (fs / (r * r)) * uu * br

    return ConformalFactor(p.n, u, rho_of_s, s_of_rho, du, d2u, S)


def round_conformal_factor(n: int, rho):
    """``(2 / (1 + rho^2))^((n-2)/2)``."""
    rho = np.asarray(rho, float)
    return (2.0 / (1.0 + rho * rho)) ** ((n - 2) / 2.0)


def yamabe_residual(cf: ConformalFactor, rho_grid) -> np.ndarray:
    """``-(u'' + (n-1) u'/rho) - n(n-2)/4 u^((n+2)/(n-2))`` on the grid.

    Nonnegative residuals up to ``TAU_YAM`` certify the differential
    inequality; on a metric with ``Scal = n(n-1)`` the residual vanishes.
    """
    if cf.du is None or cf.d2u is None:
        raise DerivativeUnavailable("conformal factor carries no derivative data")
    n = cf.n
    r = np.asarray(rho_grid, float)
    u = np.asarray(cf.u(r), float)
    lap = np.asarray(cf.d2u(r), float) + (n - 1) * np.asarray(cf.du(r), float) / r
    return -lap - n * (n - 2) / 4.0 * u ** ((n + 2) / (n - 2))


def conformal_round_trip_error(p: MetricProfile, cf: ConformalFactor, n_grid: int = 201) -> float:
    """``max |u^{2/(n-2)} rho - f|`` over the hemisphere interior."""
    s = np.linspace(0.0, cf.s_max, n_grid)[1:-1]
    r = cf.rho_of_s(s)
    back = np.asarray(cf.u(r), float) ** (2.0 / (p.n - 2)) * r
    return float(np.max(np.abs(back - p.f(s))))


@dataclass(frozen=True)
class RigidityReport:
    scal_ok: bool
    width_ok: bool
    min_scal: float
    width: float
    boundary_u: float
    max_dev_from_round: float | None


def rigidity_check(p: MetricProfile, tol: float = TAU_RIG, n_grid: int = 2001) -> RigidityReport:
    """Test ``Scal >= n(n-1)`` and ``W >= sigma_{n-1}``; if both hold, measure
    ``max |f(s) - sin(s pi / D)|``, which must vanish."""
    from .sweepout import width

    n = p.n
    s = np.linspace(0.0, p.D, n_grid)
    min_scal = float(np.min(scal(p, s, limit=True)))
    W = width(p)
    scal_ok = min_scal >= n * (n - 1) * (1.0 - tol)
    width_ok = W >= sphere_area(n - 1) * (1.0 - tol)
    dev = None
    if scal_ok and width_ok:
        dev = float(np.max(np.abs(p.f(s) - np.sin(s * math.pi / p.D))))
    bu = p.max_leaf[1] ** ((n - 2) / 2.0)
    return RigidityReport(bool(scal_ok), bool(width_ok), min_scal, W, bu, dev)
