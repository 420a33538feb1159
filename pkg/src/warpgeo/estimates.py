"""A-priori estimates as checkable predicates.

Every statement that holds "for k large enough" is taken here with an
explicit ``eps`` argument.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BadEps, DomainError, ThresholdViolation
from .profile import MetricProfile, ricci_radial, scal

TAU_LIP = 1e-9
ENVELOPE_SLACK = -1e-8


@dataclass(frozen=True)
class LipschitzReport:
    min_scal: float
    max_abs_fprime: float
    holds: bool


def lipschitz_check(p: MetricProfile, n_grid: int = 4001, tol: float = 0.0,
                    tau_lip: float = TAU_LIP) -> LipschitzReport:
    """``Scal >= 0`` implies ``|f'| <= 1``; reports both extrema.

    ``holds`` is the implication evaluated on a dense scan.  Scalar curvature
    is scanned on the interior with the pole limits included.
    """
    s = np.linspace(0.0, p.D, n_grid)
    min_scal = float(np.min(scal(p, s, limit=True)))
    max_fp = float(np.max(np.abs(p.fp(s))))
    holds = (not min_scal >= -tol) or max_fp <= 1.0 + tau_lip
    return LipschitzReport(min_scal, max_fp, bool(holds))


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not (0.0 <= eps < 1.0):
        raise BadEps(f"eps={eps} not in [0, 1)")
    return eps


def rk_envelope(eps: float) -> tuple[float, float]:
    """Admissible range ``[1 - eps, 1/(1 - eps)]`` of the maximal leaf radius."""
    eps = _check_eps(eps)
    return 1.0 - eps, 1.0 / (1.0 - eps)


def rk_contains(p: MetricProfile, eps: float) -> bool:
    lo, hi = rk_envelope(eps)
    R = p.max_leaf[1]
    return lo - 1e-12 <= R <= hi + 1e-12


def v_envelope(n: int, eps: float, R: float, r):
    """Lower and upper bounds on ``V(r)`` for ``0 < r <= R``.

    ``upper = 1 - (1-eps)^2 r^2`` and
    ``lower = upper + ((1-eps)^2 R^n - R^(n-2)) / r^(n-2)``.
    """
    eps = _check_eps(eps)
    r = np.asarray(r, float)
    if np.any(r <= 0):
        raise DomainError("v_envelope needs r > 0")
    q = (1.0 - eps) ** 2
    upper = 1.0 - q * r * r
    lower = upper + (q * R**n - R ** (n - 2)) / r ** (n - 2)
    if upper.ndim == 0:
        return float(lower), float(upper)
    return lower, upper


@dataclass(frozen=True)
class Envelope:
    lower: Callable
    upper: Callable
    interval: tuple[float, float]
    slack_tol: float = ENVELOPE_SLACK


@dataclass(frozen=True)
class EnvelopeCheck:
    min_slack_lower: float
    min_slack_upper: float
    ok: bool
    radius: float


def hemisphere_v(p: MetricProfile, r, side: str = "north") -> np.ndarray:
    """``V(r) = f'(f^{-1}(r))^2`` on a hemisphere (pole to maximal leaf)."""
    from .profile import invert_monotone

    sm, _ = p.max_leaf
    r = np.asarray(r, float)
    if side == "north":
        s = invert_monotone(p.f, r, 0.0, sm, True, 1e-13 * p.D)
    else:
        s = invert_monotone(p.f, r, sm, p.D, False, 1e-13 * p.D)
    return np.asarray(p.fp(s), float) ** 2


def check_v_envelope(p: MetricProfile, eps: float, r_min: float = 0.1, n_grid: int = 400,
                     slack: float = ENVELOPE_SLACK) -> EnvelopeCheck:
    """Containment of each hemisphere's ``V`` in :func:`v_envelope` on ``[r_min, R]``."""
    _, R = p.max_leaf
    r = np.linspace(r_min, R, n_grid)
    lower, upper = v_envelope(p.n, eps, R, r)
    lo_sl, up_sl = np.inf, np.inf
    for side in ("north", "south"):
        V = hemisphere_v(p, r, side)
        lo_sl = min(lo_sl, float(np.min(V - lower)))
        up_sl = min(up_sl, float(np.min(upper - V)))
    return EnvelopeCheck(lo_sl, up_sl, lo_sl >= slack and up_sl >= slack, R)


def f_sine_limit(s, S_tilde: float):
    """``sin(s + pi/2 - S_tilde)``, the profile the near-extremal metrics approach."""
    out = np.sin(np.asarray(s, float) + math.pi / 2 - S_tilde)
    return out if out.ndim else float(out)


def sine_deviation(p: MetricProfile, n_grid: int = 401) -> float:
    """``sup |f / f_limit - 1|`` over ``s in [S~ - 1, S~]``, ``S~`` the maximal leaf."""
    sm, _ = p.max_leaf
    s = np.linspace(max(sm - 1.0, 0.0), sm, n_grid)
    lim = f_sine_limit(s, sm)
    keep = lim > 1e-12
    return float(np.max(np.abs(p.f(s[keep]) / lim[keep] - 1.0)))


def d0_bound(n: int, Lambda: float, w0: float) -> float:
    """Explicit bound on the hemisphere length.

    ``D0 = (2 n w0/(n-2)) / (L w0^2 - ln(L w0^2) - 1)`` with
    ``L = Lambda / ((n-1)(n-2))``; requires ``w0 > 1/sqrt(L)``.
    """
    if n < 3:
        raise ValueError("n >= 3 required")
    lt = Lambda / ((n - 1) * (n - 2))
    if not (lt > 0 and w0 > 1.0 / math.sqrt(lt)):
        raise ThresholdViolation(f"w0={w0} must exceed sqrt((n-1)(n-2)/Lambda)="
                                 f"{math.sqrt(1.0 / lt) if lt > 0 else math.inf:.6g}")
    x = lt * w0 * w0
    return (2.0 * n * w0 / (n - 2)) / (x - math.log(x) - 1.0)


@dataclass(frozen=True)
class DiameterCheck:
    hemisphere_length: float
    d0: float | None
    w0: float
    min_scal: float
    min_ricci: float
    applicable: bool
    ok: bool


def check_diameter_bound(p: MetricProfile, Lambda: float | None = None, n_grid: int = 4001) -> DiameterCheck:
    """Compare each hemisphere's length from the maximal leaf with ``D0``.

    ``Lambda`` defaults to the measured minimum of the scalar curvature and
    ``w0`` to the maximal leaf radius.  Not applicable when ``Ric`` goes
    negative or ``w0`` sits at or below the threshold.
    """
    s = np.linspace(0.0, p.D, n_grid)
    min_scal = float(np.min(scal(p, s, limit=True)))
    min_ric = float(np.min(ricci_radial(p, s, limit=True)))
    sm, w0 = p.max_leaf
    lam = min_scal if Lambda is None else Lambda
    hemi = max(sm, p.D - sm)
    try:
        d0 = d0_bound(p.n, lam, w0)
    except ThresholdViolation:
        return DiameterCheck(hemi, None, w0, min_scal, min_ric, False, True)
    applicable = min_ric >= -1e-9 and min_scal >= lam * (1 - 1e-9)
    return DiameterCheck(hemi, d0, w0, min_scal, min_ric, applicable, (not applicable) or hemi <= d0)
