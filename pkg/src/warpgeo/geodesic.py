"""Distances on warped-product spheres.

Every geodesic of ``ds^2 + f(s)^2 g_rd`` lies in a totally geodesic meridian
2-surface ``ds^2 + f(s)^2 dphi^2``, so the distance between ``(s1, theta1)`` and
``(s2, theta2)`` depends only on ``s1, s2`` and the spherical angle ``dphi``
between ``theta1, theta2``.  It is computed as the minimum over

* the meridian paths through a pole, ``min(s1 + s2, 2D - s1 - s2)``;
* the same-meridian segment ``|s1 - s2|`` when ``dphi`` vanishes;
* geodesics of the reduced surface found by shooting from ``(s1, 0)``.

A graph shortest-path oracle on an ``(s, phi)`` grid provides an independent
check.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, sparse
from scipy.sparse.csgraph import dijkstra

from . import kernels
from .errors import DiameterViolation, ShootingDivergence, ShootingWarning
from .profile import MetricProfile

TAU_ODE = 1e-10
TAU_ANGLE = 1e-9
TABLE_N = 4097
H_MAX = 0.02
FAN_N = 64


def tau_dist(p: MetricProfile) -> float:
    return 1e-6 * p.D


@dataclass(frozen=True, eq=False)
class GeodesicTable:
    """``f, f', f''`` on a uniform grid, consumed by the shooting kernel."""

    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    hs: float
    D: float

    @classmethod
    def from_profile(cls, p: MetricProfile, n: int = TABLE_N) -> "GeodesicTable":
        s = np.linspace(0.0, p.D, n)
        return cls(np.asarray(p.f(s), float), np.asarray(p.fp(s), float),
                   np.asarray(p.fpp(s), float), p.D / (n - 1), p.D)

    def shoot(self, s1, alphas, levels, t_cap, rtol=TAU_ODE, h_max=H_MAX):
        return kernels.shoot_fan(self.f, self.fp, self.fpp, self.hs, self.D, float(s1),
                                 np.atleast_1d(np.asarray(alphas, float)),
                                 np.atleast_1d(np.asarray(levels, float)),
                                 float(t_cap), rtol, h_max)


def ray_fan(n: int) -> np.ndarray:
    """Initial angles clustered toward 0 and pi.

    Geodesics to targets near a pole leave almost along the meridian, so the
    angles are cosine-spaced and padded with a geometric tail at each end.
    """
    u = (np.arange(n) + 0.5) / n
    core = 0.5 * math.pi * (1.0 - np.cos(math.pi * u))
    tail = np.geomspace(1e-8, 0.9 * core[0], 10)
    return np.concatenate((tail, core, math.pi - tail[::-1]))


def _through_pole(p: MetricProfile, s1, s2):
    return np.minimum(s1 + s2, 2.0 * p.D - s1 - s2)


def _check_args(p, s1, s2, dphi):
    if not (0.0 <= dphi <= math.pi + 1e-12):
        raise ValueError(f"dphi={dphi} outside [0, pi]")
    for v in (s1, s2):
        if not (-1e-12 * p.D <= v <= p.D * (1 + 1e-12)):
            raise ValueError(f"s={v} outside [0, {p.D}]")
    return min(max(s1, 0.0), p.D), min(max(s2, 0.0), p.D), min(dphi, math.pi)


@dataclass(frozen=True)
class DistanceResult:
    value: float
    method: str
    candidates: tuple = ()
    warnings: tuple = ()


def distance_detail(p: MetricProfile, s1: float, s2: float, dphi: float,
                    n_fan: int = FAN_N) -> DistanceResult:
    """Distance with the winning candidate class and all converged lengths."""
    s1, s2, dphi = _check_args(p, float(s1), float(s2), float(dphi))
    if dphi <= TAU_ANGLE:
        return DistanceResult(abs(s1 - s2), "meridian", (abs(s1 - s2),))
    L_a = float(_through_pole(p, s1, s2))
    edge = 1e-12 * p.D
    if min(s1, s2) <= edge or max(s1, s2) >= p.D - edge:
        return DistanceResult(L_a, "pole", (L_a,))
    # shoot from the point farther from the poles: the fan is better conditioned
    if min(s2, p.D - s2) > min(s1, p.D - s1):
        s1, s2 = s2, s1
    tab = p.geodesic_table
    t_cap = 1.01 * p.D
    alphas = ray_fan(n_fan)
    sc, tc, *_ = tab.shoot(s1, alphas, [dphi], t_cap)
    g = sc[:, 0] - s2

    def miss(a):
        r = tab.shoot(s1, [a], [dphi], t_cap)
        return float(r[0][0, 0] - s2), float(r[1][0, 0])

    cands = []
    for i in range(alphas.size - 1):
        ga, gb = g[i], g[i + 1]
        if not (np.isfinite(ga) and np.isfinite(gb)):
            continue
        if ga == 0.0:
            cands.append(float(tc[i, 0]))
            continue
        if ga * gb < 0:
            try:
                root = optimize.brentq(lambda a: miss(a)[0], alphas[i], alphas[i + 1],
                                       xtol=1e-13, rtol=1e-14, maxiter=200)
            except ValueError:
                continue  # the ray family is not continuous between the two samples
            err, length = miss(root)
            if np.isfinite(length) and abs(err) <= 10 * tau_dist(p):
                cands.append(length)
    if cands:
        best = min(cands)
        if best < L_a:
            return DistanceResult(best, "shooting", tuple(sorted(cands)) + (L_a,))
        return DistanceResult(L_a, "pole", tuple(sorted(cands)) + (L_a,))
    # no shot converged: the meridian path is all we have; let the oracle judge
    oracle = oracle_distance(p, s1, s2, dphi, grid_n=192)
    step = p.D / 191
    msg = f"no shooting candidate converged for ({s1:.6g}, {s2:.6g}, {dphi:.6g}); oracle {oracle:.6g}"
    if oracle < L_a - 2 * step:
        raise ShootingDivergence(msg, oracle_value=oracle)
    if oracle < L_a - tau_dist(p):
        # shorter within the oracle's resolution: keep the pole path but say so
        warnings.warn(msg, ShootingWarning, stacklevel=3)
    return DistanceResult(L_a, "pole", (L_a,), (msg,))


def distance(p: MetricProfile, s1: float, s2: float, dphi: float) -> float:
    """Distance between ``(s1, theta1)`` and ``(s2, theta2)`` at spherical angle ``dphi``.

    Raises
    ------
    ShootingDivergence
        If no shot converges and the graph oracle finds a path clearly
        shorter than the candidate through a pole.
    """
    return distance_detail(p, s1, s2, dphi).value


def round_distance(rho: float, s1, s2, dphi):
    """Closed form on the round sphere of radius ``rho``."""
    s1, s2, dphi = (np.asarray(x, float) for x in (s1, s2, dphi))
    c = np.cos(s1 / rho) * np.cos(s2 / rho) + np.sin(s1 / rho) * np.sin(s2 / rho) * np.cos(dphi)
    return rho * np.arccos(np.clip(c, -1.0, 1.0))


def _round_radius(p: MetricProfile) -> float | None:
    if p.name == "round":
        return 1.0
    if p.name == "scaled_round":
        return float(p.params["rho"])
    return None


def is_reflection_symmetric(p: MetricProfile, tol: float = 1e-12) -> bool:
    """Whether ``f(D - s) = f(s)`` on the geodesic table."""
    f = p.geodesic_table.f
    return bool(np.max(np.abs(f - f[::-1])) <= tol * max(1.0, float(np.max(f))))


def distance_table(p: MetricProfile, s_src, s_dst, phis, n_rays: int = 256,
                   closed_form: bool = True, rtol: float = 1e-7, h_max: float = 0.1) -> np.ndarray:
    """Distances ``d[i, j, k]`` between ``(s_src[i], 0)`` and ``(s_dst[j], phis[k])``.

    One fan of ``n_rays`` shots per source records the crossing of every
    ``phi`` level; for each target the crossings bracketing ``s_dst[j]`` are
    interpolated in the ray angle.  For reflection-symmetric profiles a
    source in the upper half reuses the fan of its mirror image.  Intended
    for dense sampling; single queries should use :func:`distance`.
    """
    s_src = np.atleast_1d(np.asarray(s_src, float))
    s_dst = np.atleast_1d(np.asarray(s_dst, float))
    phis = np.atleast_1d(np.asarray(phis, float))
    rho = _round_radius(p) if closed_form else None
    if rho is not None:
        return round_distance(rho, s_src[:, None, None], s_dst[None, :, None], phis[None, None, :])
    out = np.empty((s_src.size, s_dst.size, phis.size))
    order = np.argsort(phis)
    lev = phis[order]
    pos = lev > TAU_ANGLE
    tab = p.geodesic_table
    alphas = ray_fan(n_rays)
    t_cap = 1.01 * p.D
    mirror = is_reflection_symmetric(p)
    fans: dict = {}
    for i, s1 in enumerate(s_src):
        L_a = _through_pole(p, s1, s_dst)
        best = np.repeat(L_a[:, None], phis.size, axis=1)
        best[:, order[~pos]] = np.minimum(best[:, order[~pos]], np.abs(s1 - s_dst)[:, None])
        if np.any(pos) and p.tau_pole < s1 < p.D - p.tau_pole:
            src, tgt = s1, s_dst
            if mirror and s1 > 0.5 * p.D:
                src, tgt = p.D - s1, p.D - s_dst
            key = round(src, 12)
            if key not in fans:
                sc, tc, *_ = tab.shoot(src, alphas, lev[pos], t_cap, rtol, h_max)
                fans[key] = (sc, tc)
            sc, tc = fans[key]
            best[:, order[pos]] = np.minimum(best[:, order[pos]], kernels.fan_min_length(sc, tc, tgt))
        out[i] = best
    return out


# --------------------------------------------------------------------------
# graph oracle

_STENCIL = ((1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (1, -2), (2, 1), (2, -1))


@dataclass(eq=False)
class GraphOracle:
    """Shortest paths on an ``(s, phi)`` grid over ``[0, D] x [0, pi]``.

    ``grid_n`` rows in ``s`` (the two polar rows contracted to single nodes)
    times ``grid_n`` columns in ``phi``; 16-neighbour stencil; edge weights are
    Simpson approximations of the reduced-metric length of the straight
    coordinate segment.
    """

    p: MetricProfile
    grid_n: int = 512
    _graph: sparse.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        if self.grid_n < 16:
            raise ValueError("grid_n too small")
        n = self.grid_n
        p = self.p
        self.s = np.linspace(0.0, p.D, n)
        self.phi = np.linspace(0.0, math.pi, n)
        self.ds = p.D / (n - 1)
        self.dphi = math.pi / (n - 1)
        half = np.linspace(0.0, p.D, 2 * n - 1)
        fh = np.abs(np.asarray(p.f(half), float))
        rows, cols, wts = [], [], []
        ids = self._ids
        I, J = np.meshgrid(np.arange(1, n - 1), np.arange(n), indexing="ij")
        for di, dj in _STENCIL:
            i2, j2 = I + di, J + dj
            ok = (i2 <= n - 1) & (j2 >= 0) & (j2 <= n - 1)
            a, b = I[ok], J[ok]
            c, d = i2[ok], j2[ok]
            f0, fm, f1 = fh[2 * a], fh[a + c], fh[2 * c]
            Ds, Dp = di * self.ds, dj * self.dphi
            w = (np.sqrt(Ds**2 + (f0 * Dp) ** 2) + 4 * np.sqrt(Ds**2 + (fm * Dp) ** 2)
                 + np.sqrt(Ds**2 + (f1 * Dp) ** 2)) / 6.0
            rows.append(ids(a, b))
            cols.append(ids(c, d))
            wts.append(w)
        # edges from the pole at s = 0 to rows 1 and 2 (meridians)
        for r in (1, 2):
            j = np.arange(n)
            rows.append(np.zeros(n, dtype=np.int64))
            cols.append(ids(np.full(n, r), j))
            wts.append(np.full(n, r * self.ds))
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        w = np.concatenate(wts)
        keep = r != c
        N = self.n_nodes
        g = sparse.coo_matrix((w[keep], (r[keep], c[keep])), shape=(N, N)).tocsr()
        g.sum_duplicates()
        self._graph = g

    @property
    def n_nodes(self) -> int:
        return (self.grid_n - 2) * self.grid_n + 2

    def _ids(self, i, j):
        """Node index of grid point ``(i, j)``; the polar rows map to 0 and N-1."""
        i = np.asarray(i)
        j = np.asarray(j)
        n = self.grid_n
        out = 1 + (i - 1) * n + j
        out = np.where(i == 0, 0, out)
        return np.where(i == n - 1, (n - 2) * n + 1, out).astype(np.int64)

    def snap(self, s, phi):
        i = int(round(s / self.ds))
        j = int(round(phi / self.dphi))
        return min(max(i, 0), self.grid_n - 1), min(max(j, 0), self.grid_n - 1)

    def node_coords(self, node: int):
        n = self.grid_n
        if node == 0:
            return 0.0, None
        if node == self.n_nodes - 1:
            return self.p.D, None
        q = node - 1
        return self.s[1 + q // n], self.phi[q % n]

    def from_source(self, s, phi=0.0, return_predecessors=False):
        src = int(self._ids(*self.snap(s, phi)))
        return dijkstra(self._graph, directed=False, indices=src,
                        return_predecessors=return_predecessors)

    def distances(self, s1, s2_list, phi_list):
        """Graph distances from ``(s1, 0)`` to each ``(s2_list[k], phi_list[k])``."""
        d = self.from_source(s1, 0.0)
        nodes = [int(self._ids(*self.snap(a, b))) for a, b in zip(s2_list, phi_list)]
        return d[nodes]

    def path(self, s1, phi1, s2, phi2, tree=None):
        d, pred = tree if tree is not None else self.from_source(s1, phi1, return_predecessors=True)
        tgt = int(self._ids(*self.snap(s2, phi2)))
        seq = [tgt]
        while pred[seq[-1]] >= 0:
            seq.append(int(pred[seq[-1]]))
        seq.reverse()
        return float(d[tgt]), seq

    def refined(self, s1, s2, dphi, n_points: int = 65, tree=None) -> float:
        """Graph path relaxed into a smooth curve; its length.

        The lattice limits graph distances to a fixed anisotropic error, so
        the path is resampled and its interior vertices are moved to minimise
        the reduced-metric length with the true endpoints.  The result is the
        length of an actual curve and so still bounds the distance from above
        (up to the midpoint-rule error of the length functional).
        """
        _, seq = self.path(s1, 0.0, s2, dphi, tree)
        pts = []
        for node in seq:
            s, ph = self.node_coords(node)
            pts.append([s, np.nan if ph is None else ph])
        pts = np.array(pts, float)
        # pole vertices inherit the angle of their neighbour
        for k in range(len(pts)):
            if np.isnan(pts[k, 1]):
                nb = pts[k + 1, 1] if k + 1 < len(pts) and not np.isnan(pts[k + 1, 1]) else pts[k - 1, 1]
                pts[k, 1] = nb if np.isfinite(nb) else 0.0
        pts[0] = (s1, 0.0)
        pts[-1] = (s2, dphi)
        p = self.p
        seg = np.sqrt(np.diff(pts[:, 0]) ** 2 + (np.abs(p.f(0.5 * (pts[1:, 0] + pts[:-1, 0]))) * np.diff(pts[:, 1])) ** 2)
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        if cum[-1] == 0.0:
            return 0.0
        u = np.linspace(0.0, cum[-1], n_points)
        init = np.column_stack([np.interp(u, cum, pts[:, 0]), np.interp(u, cum, pts[:, 1])])
        ends = init[[0, -1]]

        def polygon(x):
            P = np.vstack([ends[0], x.reshape(-1, 2), ends[1]])
            dS = np.diff(P[:, 0])
            dF = np.diff(P[:, 1])
            m = 0.5 * (P[1:, 0] + P[:-1, 0])
            return P, dS, dF, np.asarray(p.f(m), float), np.asarray(p.fp(m), float)

        def energy(x):
            # discrete energy: minimisers are constant-speed polygons, which
            # avoids the reparametrisation zero modes of the length functional
            P, dS, dF, F, Fp = polygon(x)
            common = F * Fp * dF**2
            gS = np.zeros(len(P))
            gP = np.zeros(len(P))
            gS[:-1] += -2 * dS + common
            gS[1:] += 2 * dS + common
            gP[:-1] += -2 * F * F * dF
            gP[1:] += 2 * F * F * dF
            grad = np.column_stack([gS, gP])[1:-1].ravel()
            return float(np.sum(dS**2 + (F * dF) ** 2)), grad

        def length(x):
            _, dS, dF, F, _ = polygon(x)
            return float(np.sum(np.sqrt(dS**2 + (F * dF) ** 2)))

        x0 = init[1:-1].ravel()
        bounds = [(0.0, p.D), (0.0, math.pi)] * (n_points - 2)
        res = optimize.minimize(energy, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                                options={"maxiter": 5000, "ftol": 1e-14, "gtol": 1e-12})
        return min(length(res.x), length(x0))


_ORACLES: dict = {}


def oracle_for(p: MetricProfile, grid_n: int) -> GraphOracle:
    key = (id(p), grid_n)
    hit = _ORACLES.get(key)
    if hit is None or hit.p is not p:
        if len(_ORACLES) > 8:
            _ORACLES.clear()
        hit = GraphOracle(p, grid_n)
        _ORACLES[key] = hit
    return hit


def oracle_distance(p: MetricProfile, s1: float, s2: float, dphi: float, grid_n: int = 512,
                    refine: bool = True) -> float:
    """Independent distance estimate from the grid graph.

    With ``refine=False`` this is the raw shortest-path length between the
    nearest grid nodes; otherwise the path is relaxed (see
    :meth:`GraphOracle.refined`).
    """
    if grid_n < 64:
        raise ValueError("grid_n >= 64 required")
    orc = oracle_for(p, grid_n)
    if not refine:
        return float(orc.distances(s1, [s2], [dphi])[0])
    return orc.refined(s1, s2, dphi)


def oracle_distances_from(p: MetricProfile, s1: float, targets, grid_n: int = 512,
                          refine: bool = True) -> np.ndarray:
    """Oracle distances from ``(s1, 0)`` to each ``(s2, dphi)`` in ``targets``, one Dijkstra run."""
    orc = oracle_for(p, grid_n)
    tree = orc.from_source(s1, 0.0, return_predecessors=True)
    out = []
    for s2, ph in targets:
        if refine:
            out.append(orc.refined(s1, s2, ph, tree=tree))
        else:
            out.append(float(tree[0][int(orc._ids(*orc.snap(s2, ph)))]))
    return np.array(out)


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DiameterReport:
    diameter: float
    max_sampled: float
    n_samples: int


def diameter(p: MetricProfile, sample_n: int = 64, seed: int = 0) -> DiameterReport:
    """``D`` (realised by the poles), checked against random pair distances."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(size=(sample_n, 3)) * np.array([p.D, p.D, math.pi])
    best = 0.0
    for s1, s2, ph in pts:
        d = distance(p, s1, s2, ph)
        if d > p.D + 10 * tau_dist(p):
            raise DiameterViolation(f"d({s1:.6g}, {s2:.6g}, {ph:.6g}) = {d:.9g} exceeds D = {p.D:.9g}")
        best = max(best, d)
    return DiameterReport(p.D, best, sample_n)


def hausdorff_defect(p: MetricProfile, band) -> float:
    """Hausdorff distance from the band ``s in [s_lo, s_hi]`` to the whole sphere."""
    s_lo, s_hi = float(band[0]), float(band[1])
    if not (0.0 <= s_lo < s_hi <= p.D):
        raise ValueError(f"band {band} not inside [0, {p.D}]")
    return max(s_lo, p.D - s_hi)


def clairaut_drift(p: MetricProfile, s1: float, alphas, t_cap: float | None = None) -> np.ndarray:
    """Max ``|f^2 phi' - c|`` along shots of length ``t_cap`` (default ``D``)."""
    t_cap = p.D if t_cap is None else t_cap
    r = p.geodesic_table.shoot(s1, alphas, [np.inf], t_cap)
    return r[2]
