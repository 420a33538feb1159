# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled geodesic shooting kernel (same interface as ``_kernels_py``)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, fabs, fmax, fmin, pow, isfinite, NAN

cnp.import_array()

cdef double[7] C_ = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0]
cdef double[7] E_ = [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
                     -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0]
cdef double[7][6] A_ = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
]


cdef struct Table:
    const double* f
    const double* fp
    const double* fpp
    Py_ssize_t n
    double hs
    double D


cdef inline double _herm(double y0, double y1, double m0, double m1, double h, double th) noexcept nogil:
    cdef double th2 = th * th
    cdef double th3 = th2 * th
    return ((2 * th3 - 3 * th2 + 1) * y0 + (th3 - 2 * th2 + th) * h * m0
            + (-2 * th3 + 3 * th2) * y1 + (th3 - th2) * h * m1)


cdef inline double _dherm(double y0, double y1, double m0, double m1, double h, double th) noexcept nogil:
    cdef double th2 = th * th
    return ((6 * th2 - 6 * th) * y0 + (3 * th2 - 4 * th + 1) * h * m0
            + (-6 * th2 + 6 * th) * y1 + (3 * th2 - 2 * th) * h * m1)


cdef inline double _cross(double y0, double y1, double m0, double m1, double h, double lev) noexcept nogil:
    """Solve herm(th) = lev on [0, 1] for a monotone cubic: Newton with a bisection guard."""
    cdef double lo = 0.0, up = 1.0, th, v, d
    cdef int it
    th = (lev - y0) / (y1 - y0) if y1 != y0 else 0.5
    th = fmin(1.0, fmax(0.0, th))
    for it in range(60):
        v = _herm(y0, y1, m0, m1, h, th) - lev
        if v < 0.0:
            lo = th
        else:
            up = th
        if up - lo < 1e-15:
            break
        d = _dherm(y0, y1, m0, m1, h, th)
        if d > 0.0:
            th = th - v / d
        if d <= 0.0 or th <= lo or th >= up:
            th = 0.5 * (lo + up)
        elif fabs(v) < 1e-15 * (1.0 + fabs(lev)):
            break
    return th


cdef inline void _eval(const Table* T, double s, double* f, double* fp) noexcept nogil:
    if s < 0.0:
        s = 0.0
    elif s > T.D:
        s = T.D
    cdef double x = s / T.hs
    cdef Py_ssize_t i = <Py_ssize_t> x
    if i > T.n - 2:
        i = T.n - 2
    cdef double th = x - i
    f[0] = _herm(T.f[i], T.f[i + 1], T.fp[i], T.fp[i + 1], T.hs, th)
    fp[0] = _herm(T.fp[i], T.fp[i + 1], T.fpp[i], T.fpp[i + 1], T.hs, th)


cdef inline void _rhs(const Table* T, const double* y, double* out) noexcept nogil:
    cdef double f, fp
    _eval(T, y[0], &f, &fp)
    out[0] = y[1]
    out[1] = f * fp * y[3] * y[3]
    out[2] = y[3]
    out[3] = -2.0 * fp / f * y[1] * y[3]


cdef void _shoot_one(const Table* T, double s1, double alpha, const double* levels, Py_ssize_t L,
                     double t_cap, double rtol, double h_max,
                     double* s_cross, double* t_cross, double* out) noexcept nogil:
    cdef double y[4]
    cdef double yn[4]
    cdef double tmp[4]
    cdef double k[7][4]
    cdef double f1, fp1, c, t = 0.0, h, en, sc, e, fac, fs, fps, drift = 0.0
    cdef double th
    cdef Py_ssize_t ptr = 0, st, j, q, guard = 0
    _eval(T, s1, &f1, &fp1)
    c = f1 * sin(alpha)
    y[0] = s1
    y[1] = cos(alpha)
    y[2] = 0.0
    y[3] = sin(alpha) / f1
    h = fmin(h_max, 1e-2)
    _rhs(T, y, k[0])
    while t < t_cap and ptr < L and guard < 2000000:
        guard += 1
        if h > t_cap - t:
            h = fmax(t_cap - t, 1e-14)
        for st in range(1, 7):
            for q in range(4):
                tmp[q] = y[q]
                for j in range(st):
                    tmp[q] += h * A_[st][j] * k[j][q]
            _rhs(T, tmp, k[st])
        for q in range(4):
            yn[q] = tmp[q]
        en = 0.0
        for q in range(4):
            e = 0.0
            for j in range(7):
                e += E_[j] * k[j][q]
            e = fabs(h * e)
            sc = rtol + rtol * fmax(fabs(y[q]), fabs(yn[q]))
            if not (isfinite(yn[q]) and isfinite(e)):
                en = NAN
                break
            en = fmax(en, e / sc)
        if not isfinite(en):
            # a stage landed on a pole: the ray ends there
            break
        if en > 0.0:
            fac = 0.9 * pow(en, -0.2)
        else:
            fac = 5.0
        fac = fmin(5.0, fmax(0.2, fac))
        if en > 1.0:
            h = fmin(h * fac, h_max)
            continue
        while ptr < L and yn[2] >= levels[ptr]:
            th = _cross(y[2], yn[2], k[0][2], k[6][2], h, levels[ptr])
            s_cross[ptr] = _herm(y[0], yn[0], k[0][0], k[6][0], h, th)
            t_cross[ptr] = t + th * h
            ptr += 1
        t += h
        for q in range(4):
            y[q] = yn[q]
            k[0][q] = k[6][q]
        _eval(T, y[0], &fs, &fps)
        drift = fmax(drift, fabs(fs * fs * y[3] - c))
        if y[0] <= 0.0 or y[0] >= T.D or not isfinite(y[0]):
            t = t_cap
        h = fmin(h * fac, h_max)
    out[0] = drift
    out[1] = y[0]
    out[2] = y[2]
    out[3] = t


def shoot_fan(tf, tfp, tfpp, double hs, double D, double s1, alphas, levels,
              double t_cap, double rtol, double h_max):
    cdef const double[::1] vf = np.ascontiguousarray(tf, dtype=np.float64)
    cdef const double[::1] vfp = np.ascontiguousarray(tfp, dtype=np.float64)
    cdef const double[::1] vfpp = np.ascontiguousarray(tfpp, dtype=np.float64)
    cdef const double[::1] va = np.ascontiguousarray(alphas, dtype=np.float64)
    cdef const double[::1] vl = np.ascontiguousarray(levels, dtype=np.float64)
    cdef Py_ssize_t M = va.shape[0], L = vl.shape[0], m
    s_cross = np.full((M, L), np.nan)
    t_cross = np.full((M, L), np.nan)
    res = np.zeros((M, 4))
    cdef double[:, ::1] vs = s_cross
    cdef double[:, ::1] vt = t_cross
    cdef double[:, ::1] vr = res
    cdef Table T
    T.f = &vf[0]
    T.fp = &vfp[0]
    T.fpp = &vfpp[0]
    T.n = vf.shape[0]
    T.hs = hs
    T.D = D
    cdef const double* lv = &vl[0] if L > 0 else NULL
    with nogil:
        for m in range(M):
            _shoot_one(&T, s1, va[m], lv, L, t_cap, rtol, h_max,
                       &vs[m, 0] if L > 0 else NULL, &vt[m, 0] if L > 0 else NULL, &vr[m, 0])
    return s_cross, t_cross, res[:, 0].copy(), res[:, 1].copy(), res[:, 2].copy(), res[:, 3].copy()


def fan_min_length(s_cross, t_cross, targets):
    """Shortest interpolated arc length reaching each target radius on each level.

    For every pair of neighbouring rays whose crossings straddle a target,
    the arc length is interpolated linearly in the crossing position.
    Returns an array of shape (len(targets), L), ``inf`` where no pair
    straddles.
    """
    cdef const double[:, ::1] sc = np.ascontiguousarray(s_cross, dtype=np.float64)
    cdef const double[:, ::1] tc = np.ascontiguousarray(t_cross, dtype=np.float64)
    cdef const double[::1] x = np.ascontiguousarray(targets, dtype=np.float64)
    cdef Py_ssize_t M = sc.shape[0], L = sc.shape[1], J = x.shape[0], m, q, j
    out = np.full((J, L), np.inf)
    cdef double[:, ::1] vo = out
    cdef double a, b, ta, tb, lo, hi, w, t
    with nogil:
        for q in range(L):
            for m in range(M - 1):
                a = sc[m, q]
                b = sc[m + 1, q]
                if not (isfinite(a) and isfinite(b)):
                    continue
                ta = tc[m, q]
                tb = tc[m + 1, q]
                lo = fmin(a, b)
                hi = fmax(a, b)
                for j in range(J):
                    if x[j] < lo or x[j] > hi:
                        continue
                    if b != a:
                        w = (x[j] - a) / (b - a)
                    else:
                        w = 0.0
                    t = ta + w * (tb - ta)
                    if t < vo[j, q]:
                        vo[j, q] = t
    return out
