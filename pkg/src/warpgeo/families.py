"""Generators of test metrics.

Exact models (round, scaled round, ellipsoid, capped cylinder), metrics
inverse-designed from a prescribed scalar curvature, the near-extremal
stability families and a dumbbell whose neck is a stable minimal leaf.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import integrate
from scipy.special import ellipeinc

from .errors import (
    GluingFailure,
    HypothesisViolated,
    NegativeV,
    NoClosure,
    QuadratureFailure,
)
from .profile import (
    MetricProfile,
    RadialChart,
    invert_monotone,
    sampled_profile,
    sphere_area,
)


def _arr(x):
    return np.asarray(x, dtype=float)


# --------------------------------------------------------------------------
# exact models


def scaled_round(n: int, rho: float = 1.0) -> MetricProfile:
    """``f(s) = rho sin(s / rho)`` on ``[0, rho pi]``."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    rho = float(rho)
    name = "round" if rho == 1.0 else "scaled_round"
    params = {} if rho == 1.0 else {"rho": rho}
    return MetricProfile(
        n=n, D=rho * math.pi,
        f=lambda s: rho * np.sin(_arr(s) / rho),
        fp=lambda s: np.cos(_arr(s) / rho),
        fpp=lambda s: -np.sin(_arr(s) / rho) / rho,
        name=name, params=params,
    )


def round_sphere(n: int) -> MetricProfile:
    return scaled_round(n, 1.0)


def perturbed_round(n: int, beta: float) -> MetricProfile:
    """``f = sin s + beta sin^3 s cos s``; steepens the profile for ``beta > 0``.

    Keeps the pole conditions exactly and is used to produce profiles with
    ``max |f'| > 1``.
    """
    beta = float(beta)

    def f(s):
        s = _arr(s)
        return np.sin(s) + beta * np.sin(s) ** 3 * np.cos(s)

    def fp(s):
        s = _arr(s)
        sn, cs = np.sin(s), np.cos(s)
        return cs + beta * (3 * sn**2 * cs**2 - sn**4)

    def fpp(s):
        s = _arr(s)
        sn, cs = np.sin(s), np.cos(s)
        return -sn + beta * (6 * sn * cs**3 - 10 * sn**3 * cs)

    return MetricProfile(n=n, D=math.pi, f=f, fp=fp, fpp=fpp,
                         name="perturbed_round", params={"beta": beta})


def ellipsoid(n: int, a_axis: float, b_axis: float) -> MetricProfile:
    """Ellipsoid of revolution with axis half-length ``a_axis`` and equatorial radius ``b_axis``.

    The meridian is ``t -> (a cos t, b sin t)``; arc length is the incomplete
    elliptic integral ``s(t) = b E(t | 1 - a^2/b^2)`` and is inverted by
    safeguarded Newton iteration.
    """
    a, b = float(a_axis), float(b_axis)
    if not (a > 0 and b > 0):
        raise ValueError("axes must be positive")
    m = 1.0 - (a * a) / (b * b)
    D = float(2.0 * b * ellipeinc(math.pi / 2, m))

    def speed(t):
        return np.sqrt(a * a * np.sin(t) ** 2 + b * b * np.cos(t) ** 2)

    t_tab = np.linspace(0.0, math.pi, 4097)
    s_tab = b * ellipeinc(t_tab, m)

    def t_of_s(s):
        s = np.clip(_arr(s), 0.0, D)
        t = np.interp(s, s_tab, t_tab)
        for _ in range(60):
            step = (b * ellipeinc(t, m) - s) / speed(t)
            t = np.clip(t - step, 0.0, math.pi)
            if np.all(np.abs(step) < 1e-15 * max(D, 1.0)):
                break
        else:
            raise QuadratureFailure("ellipsoid arc-length inversion did not converge")
        return t

    def f(s):
        return b * np.sin(t_of_s(s))

    def fp(s):
        t = t_of_s(s)
        return b * np.cos(t) / speed(t)

    def fpp(s):
        t = t_of_s(s)
        w = speed(t)
        dw = (a * a - b * b) * np.sin(t) * np.cos(t) / w
        return (-b * np.sin(t) / w - b * np.cos(t) * dw / (w * w)) / w

    return MetricProfile(n=n, D=D, f=f, fp=fp, fpp=fpp, name="ellipsoid",
                         params={"a_axis": a, "b_axis": b})


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10 - 15 * x + 6 * x * x)


def _smoothstep_integral(x):
    x = np.clip(x, 0.0, 1.0)
    return x**4 * (2.5 - 3 * x + x * x)


_GL20_X, _GL20_W = np.polynomial.legendre.leggauss(20)


def capped_cylinder(n: int, length: float, radius: float, blend: float = 0.05 * math.pi) -> MetricProfile:
    """Round caps joined by a flat cylinder of the given length.

    The profile is written as ``f' = cos(theta)``.  On the caps ``theta' = 1``;
    over a blend zone of width ``blend`` (unit-cap scale) ``theta'`` drops to 0
    through a quintic smoothstep, which keeps ``f`` C^2 (in fact C^3) at both
    junctions.  The result is rescaled so the barrel radius equals ``radius``.
    """
    if not (length >= 0 and radius > 0 and 0 < blend < math.pi / 2):
        raise GluingFailure("capped_cylinder needs length >= 0, radius > 0, 0 < blend < pi/2")
    w = float(blend)
    sj = math.pi / 2 - w / 2

    def theta_u(s):
        t = np.clip(s - sj, 0.0, w)
        th = np.where(s <= sj, s, sj + t - w * _smoothstep_integral(t / w))
        return np.where(s >= sj + w, math.pi / 2, th)

    def dtheta_u(s):
        return np.where(s <= sj, 1.0, 1.0 - _smoothstep((s - sj) / w))

    def f_half_u(s):
        # f on the first cap, s in [0, sj + w]; constant beyond
        s = np.minimum(s, sj + w)
        t = np.clip(s - sj, 0.0, None)
        nodes = sj + 0.5 * t[..., None] * (1.0 + _GL20_X)
        blend_part = 0.5 * t * np.sum(_GL20_W * np.cos(theta_u(nodes)), axis=-1)
        return np.sin(np.minimum(s, sj)) + blend_part

    R_u = float(f_half_u(np.array(sj + w)))
    lam = radius / R_u
    L_u = length / lam
    D_u = 2 * (sj + w) + L_u

    def fold(s):
        s = np.clip(_arr(s) / lam, 0.0, D_u)
        mirrored = s > D_u / 2
        return np.where(mirrored, D_u - s, s), mirrored

    def f(s):
        x, _ = fold(s)
        return lam * f_half_u(x)

    def fp(s):
        x, mir = fold(s)
        v = np.cos(theta_u(x))
        return np.where(mir, -v, v)

    def fpp(s):
        x, _ = fold(s)
        return -np.sin(theta_u(x)) * dtheta_u(x) / lam

    return MetricProfile(n=n, D=lam * D_u, f=f, fp=fp, fpp=fpp, name="capped_cylinder",
                         params={"length": float(length), "radius": float(radius), "blend": w})


def neck_counterexample(n: int, neck_radius: float, bump_radius: float) -> MetricProfile:
    """Dumbbell: two round caps of radius ``bump_radius`` joined by a cosine neck.

    The neck is ``f = nu + (b - nu)(1 + cos(pi x / L)) / 2`` for ``x in [0, 2L]``
    with ``L = pi sqrt(b (b - nu) / 2)``, the unique length matching the cap's
    second derivative ``-1/b`` at the junction.  The narrowest leaf has radius
    exactly ``nu`` and is a stable minimal leaf.
    """
    nu, b = float(neck_radius), float(bump_radius)
    if not (0 < nu < b):
        raise GluingFailure(f"need 0 < neck_radius < bump_radius, got {nu}, {b}")
    L = math.pi * math.sqrt(b * (b - nu) / 2.0)
    s_cap = b * math.pi / 2
    D = 2 * s_cap + 2 * L
    k = math.pi / L
    amp = 0.5 * (b - nu)

    def parts(s):
        s = np.clip(_arr(s), 0.0, D)
        left = s <= s_cap
        right = s >= D - s_cap
        x = s - s_cap
        return s, left, right, x

    def f(s):
        s, left, right, x = parts(s)
        neck = nu + amp * (1 + np.cos(k * x))
        return np.where(left, b * np.sin(s / b), np.where(right, b * np.sin((D - s) / b), neck))

    def fp(s):
        s, left, right, x = parts(s)
        neck = -amp * k * np.sin(k * x)
        return np.where(left, np.cos(s / b), np.where(right, -np.cos((D - s) / b), neck))

    def fpp(s):
        s, left, right, x = parts(s)
        neck = -amp * k * k * np.cos(k * x)
        return np.where(left, -np.sin(s / b) / b, np.where(right, -np.sin((D - s) / b) / b, neck))

    return MetricProfile(n=n, D=D, f=f, fp=fp, fpp=fpp, name="neck",
                         params={"neck_radius": nu, "bump_radius": b})


# --------------------------------------------------------------------------
# scalar-curvature designed metrics


def _bump(x):
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - xi * xi))
    return out


@dataclass(frozen=True)
class ScalProfile:
    """Radial scalar-curvature target ``base + sum_i amp_i chi_i(r)``.

    Each ``chi_i`` is the smooth bump ``exp(1 - 1/(1 - x^2))`` rescaled to the
    interval ``[lo_i, hi_i]``, with peak value 1.
    """

    base: float
    bumps: tuple[tuple[float, float, float], ...] = ()

    def __call__(self, r):
        r = _arr(r)
        out = np.full(r.shape, self.base, dtype=float)
        for lo, hi, amp in self.bumps:
            x = (2.0 * r - (lo + hi)) / (hi - lo)
            out = out + amp * _bump(np.atleast_1d(x)).reshape(r.shape)
        return out

    @property
    def minimum_bound(self) -> float:
        """Lower bound ``base + sum of negative amplitudes``."""
        return self.base + sum(min(a, 0.0) for _, _, a in self.bumps)

    def to_dict(self) -> dict:
        return {"base": self.base, "bumps": [list(b) for b in self.bumps]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScalProfile":
        return cls(float(d["base"]), tuple(tuple(float(v) for v in b) for b in d.get("bumps", ())))


@dataclass(frozen=True, eq=False)
class DesignedMetric:
    chart: RadialChart
    profile: MetricProfile
    r_max: float
    s_max: float


S0 = 1e-3
N_NODES = 2048
R_CAP = 1e3


def _J_quad(scal_fn, n, r):
    r = np.atleast_1d(_arr(r))
    out = np.empty_like(r)
    for i, ri in enumerate(r):
        out[i] = integrate.quad(lambda t: float(scal_fn(t)) * t ** (n - 1) / (n - 1), 0.0, ri,
                                epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    return out


def designed_from_scal(n: int, scal_profile: Callable | ScalProfile, r_max: float | None = None,
                       name: str = "designed", params: Mapping | None = None) -> DesignedMetric:
    """Metric whose radial profile solves ``(r^{n-2}(1 - V))' = Scal r^{n-1}/(n-1)``.

    The hemisphere is integrated in arc length as the second-order system

        f'' = V'(f) / 2,   V'(r) = (n-2) r^{1-n} J - Scal r / (n-1),
        J' = Scal(f) f^{n-1} f' / (n-1),

    started from the pole series, until ``f'`` vanishes.  That leaf is the
    closure radius; the sphere is its mirror image across it.

    Parameters
    ----------
    scal_profile : callable or ScalProfile
        Target ``Scal(r)``, vectorised.
    r_max : float, optional
        Expected closure radius.  ``None`` detects it.

    Raises
    ------
    NoClosure
        ``V`` never vanishes, touches zero tangentially, or vanishes after ``r_max``.
    NegativeV
        ``V`` crosses zero before ``r_max``.
    """
    if n < 3:
        raise ValueError("n >= 3 required")
    scal_fn = scal_profile
    c0 = float(scal_fn(np.array([0.0]))[0])
    series_c = c0 / (6.0 * n * (n - 1))

    def rhs(s, y):
        f, fp, J = y
        sc = float(scal_fn(np.array([f]))[0])
        fpp = 0.5 * ((n - 2) * f ** (1 - n) * J - sc * f / (n - 1))
        return [fp, fpp, sc * f ** (n - 1) * fp / (n - 1)]

    f0 = S0 - series_c * S0**3
    y0 = [f0, 1.0 - 3.0 * series_c * S0**2, c0 * f0**n / (n * (n - 1))]

    def crest(s, y):
        return y[1]
    crest.terminal = True
    crest.direction = -1

    def runaway(s, y):
        return y[0] - R_CAP
    runaway.terminal = True

    s_cap = 10.0 * R_CAP
    sol = integrate.solve_ivp(rhs, (S0, s_cap), y0, method="DOP853", rtol=1e-13, atol=1e-15, max_step=0.01,
                              events=(crest, runaway), dense_output=True)
    if sol.status < 0:
        raise QuadratureFailure(f"designed ODE failed: {sol.message}")
    if len(sol.t_events[0]) == 0:
        raise NoClosure("V never reaches 0")
    S = float(sol.t_events[0][0])
    yS = sol.y_events[0][0]
    R = float(yS[0])
    curv = rhs(S, [R, 0.0, yS[2]])[1]
    if curv > -1e-8:
        raise NoClosure(f"V reaches 0 tangentially at r={R:.6g} (V'={2 * curv:.3g})")
    if r_max is not None:
        tol = 1e-6 * max(r_max, 1.0)
        if R < r_max - tol:
            raise NegativeV(f"V crosses 0 at r={R:.10g} before r_max={r_max}")
        if R > r_max + tol:
            raise NoClosure(f"V stays positive up to r_max={r_max} (closes at r={R:.10g})")

    s_nodes = np.linspace(S0, S, N_NODES)
    Y = sol.sol(s_nodes)
    Y[1, -1] = 0.0
    fpp_nodes = np.array([rhs(si, yi)[1] for si, yi in zip(s_nodes, Y.T)])
    # prepend the pole with exact series data
    grid_h = np.concatenate(([0.0], s_nodes))
    f_h = np.concatenate(([0.0], Y[0]))
    fp_h = np.concatenate(([1.0], Y[1]))
    fpp_h = np.concatenate(([0.0], fpp_nodes))
    grid = np.concatenate((grid_h, 2 * S - grid_h[-2::-1]))
    fv = np.concatenate((f_h, f_h[-2::-1]))
    fpv = np.concatenate((fp_h, -fp_h[-2::-1]))
    fppv = np.concatenate((fpp_h, fpp_h[-2::-1]))
    fv[-1] = 0.0
    if params is None:
        params = {"scal": scal_fn.to_dict()} if isinstance(scal_fn, ScalProfile) else {}
    prof = sampled_profile(n, grid, fv, fpv, fppv, name=name, params=params)
    prof = replace(prof, kind="analytic" if isinstance(scal_fn, ScalProfile) else "sampled")

    def V(r):
        r = _arr(r)
        return 1.0 - r ** (2.0 - n) * _J_quad(scal_fn, n, r).reshape(r.shape)

    def Vp(r):
        r = _arr(r)
        J = _J_quad(scal_fn, n, r).reshape(r.shape)
        return (n - 2) * r ** (1.0 - n) * J - _arr(scal_fn(r)) * r / (n - 1)

    def s_of_r(r):
        return invert_monotone(prof.f, r, 0.0, S, True, 1e-12 * prof.D)

    chart = RadialChart(n, (0.0, R), V, Vp, "increasing", s_of_r)
    return DesignedMetric(chart, prof, R, S)


def near_extremal_scal(n: int, k: int, support=(0.2, 0.5)) -> ScalProfile:
    eps = 2.0 ** (-k)
    base = n * (n - 1) * (1.0 - eps) ** 2
    return ScalProfile(base, ((support[0], support[1], base * eps),))


def _check_hypotheses(p: MetricProfile, eps: float, ricci: bool = False) -> dict:
    from .profile import ricci_radial, scal
    from .sweepout import check_near_extremal_structure, find_minimal_leaves

    n = p.n
    # curvature is checked away from the poles, where (1 - f'^2)/f^2 loses
    # digits to cancellation; the target is constant near the poles anyway
    s = np.linspace(0.01 * p.D, 0.99 * p.D, 4001)
    target = n * (n - 1) * (1 - eps) ** 2
    min_scal = float(np.min(scal(p, s)))
    rep = find_minimal_leaves(p)
    mina = rep.min_a_symmetric if rep.min_a_symmetric is not None else 0.0
    mina_target = sphere_area(n - 1) * (1 - eps) ** (n - 1)
    struct = check_near_extremal_structure(p, eps, report=rep)
    checks = {
        "scal": (min_scal >= target * (1 - 1e-6), min_scal, target),
        "min_a": (mina >= mina_target * (1 - 1e-9), mina, mina_target),
        "unique_minimal": (struct.unique_minimal, len(rep.leaves), 1),
    }
    if ricci:
        min_ric = float(np.min(ricci_radial(p, s)))
        checks["ricci"] = (min_ric >= -1e-9, min_ric, 0.0)
        # the capped family is also required to keep its width above the round floor
        checks["width"] = (rep.width >= mina_target * (1 - 1e-9), rep.width, mina_target)
    return checks


check_hypotheses = _check_hypotheses


def _verified(p: MetricProfile, eps: float, ricci: bool) -> MetricProfile:
    checks = _check_hypotheses(p, eps, ricci)
    for key, (ok, val, want) in checks.items():
        if not ok:
            raise HypothesisViolated(f"{p.name}: check {key} failed (value {val}, required {want})",
                                     check=key)
    return p


def near_extremal_family(n: int, k: int, verify: bool = True) -> MetricProfile:
    """Member ``k`` of the stability family, ``eps_k = delta_k = 2^-k``.

    ``Scal = n(n-1)(1-eps)^2 (1 + delta chi(r))`` with ``chi`` a bump on
    ``r in [0.2, 0.5]``.  Both hypotheses (scalar curvature and MinA bound at
    ``eps_k``) and uniqueness of the minimal leaf are re-checked.
    """
    if k < 1:
        raise ValueError("k >= 1 required")
    dm = designed_from_scal(n, near_extremal_scal(n, k), name="near_extremal",
                            params={"k": int(k)})
    return _verified(dm.profile, 2.0 ** (-k), False) if verify else dm.profile


def ricci_capped_family(n: int, k: int, verify: bool = True) -> MetricProfile:
    """Like :func:`near_extremal_family` with the bump on ``[0.5, 0.8]`` and ``Ric >= 0`` enforced."""
    if k < 1:
        raise ValueError("k >= 1 required")
    dm = designed_from_scal(n, near_extremal_scal(n, k, (0.5, 0.8)), name="ricci_capped",
                            params={"k": int(k)})
    return _verified(dm.profile, 2.0 ** (-k), True) if verify else dm.profile


def random_scal_profile(rng: np.random.Generator, n: int, nonneg: bool = True) -> ScalProfile:
    """Random target with ``Scal >= 0`` (when ``nonneg``) that still closes up."""
    base = n * (n - 1) * rng.uniform(0.3, 2.0)
    bumps = []
    for _ in range(rng.integers(0, 4)):
        lo = rng.uniform(0.0, 0.6)
        hi = lo + rng.uniform(0.05, 0.4)
        amp = base * rng.uniform(-0.9 if nonneg else -2.0, 2.0)
        bumps.append((lo, hi, amp))
    if nonneg:
        neg = sum(min(a, 0.0) for _, _, a in bumps)
        if base + neg < 0:
            # overlapping negative bumps could push below zero; rescale them
            factor = 0.9 * base / -neg
            bumps = [(lo, hi, a * factor if a < 0 else a) for lo, hi, a in bumps]
    return ScalProfile(base, tuple(bumps))


def random_designed(n: int, seed: int) -> MetricProfile:
    rng = np.random.default_rng(seed)
    sp = random_scal_profile(rng, n)
    return designed_from_scal(n, sp, name="designed").profile


# --------------------------------------------------------------------------
# named generators


def _designed_from_params(n, scal, r_max=None):
    return designed_from_scal(n, ScalProfile.from_dict(scal), r_max).profile


GENERATORS: dict[str, Callable[..., MetricProfile]] = {
    "round": lambda n: round_sphere(n),
    "scaled_round": lambda n, rho: scaled_round(n, rho),
    "ellipsoid": lambda n, a_axis, b_axis: ellipsoid(n, a_axis, b_axis),
    "capped_cylinder": lambda n, length, radius, blend=0.05 * math.pi: capped_cylinder(n, length, radius, blend),
    "neck": lambda n, neck_radius, bump_radius: neck_counterexample(n, neck_radius, bump_radius),
    "designed": _designed_from_params,
    "near_extremal": lambda n, k: near_extremal_family(n, int(k)),
    "ricci_capped": lambda n, k: ricci_capped_family(n, int(k)),
    "perturbed_round": lambda n, beta: perturbed_round(n, beta),
}


def generate(name: str, n: int, **params) -> MetricProfile:
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; known: {sorted(GENERATORS)}") from None
    try:
        return gen(n, **params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for family {name!r}: {exc}") from None


@dataclass(frozen=True)
class FamilySpec:
    """Named generator with parameters; ``k`` may be supplied per member."""

    name: str
    n: int
    params: Mapping = field(default_factory=dict)
    seed: int = 0

    def generate(self, **overrides) -> MetricProfile:
        params = {**self.params, **overrides}
        if self.name == "random_designed":
            return random_designed(self.n, int(params.get("seed", self.seed)))
        return generate(self.name, self.n, **params)

    def to_dict(self) -> dict:
        return {"name": self.name, "n": self.n, "params": dict(self.params), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: Mapping) -> "FamilySpec":
        return cls(d["name"], int(d["n"]), dict(d.get("params", {})), int(d.get("seed", 0)))

    @classmethod
    def parse(cls, text: str, n: int = 3) -> "FamilySpec":
        """Parse ``name:key=value,key=value`` as used on the command line."""
        name, _, rest = text.partition(":")
        params: dict = {}
        for item in filter(None, rest.split(",")):
            key, _, val = item.partition("=")
            try:
                params[key.strip()] = int(val)
            except ValueError:
                params[key.strip()] = float(val)
        n = int(params.pop("n", n))
        return cls(name.strip(), n, params)
