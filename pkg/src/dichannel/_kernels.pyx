# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_fallback.py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, fmax, cos, sin, M_PI

cnp.import_array()


cdef inline double _transverse_max(double a, double g, double d2, double d3) noexcept nogil:
    cdef double m = d2 * d2 - d3 * d3
    cdef double end = fabs(a) + g * d3
    cdef double inner
    if m <= 0.0:
        return end
    if d2 * d2 * a * a <= m * (a * a + m * g * g):
        inner = d2 * sqrt(a * a / m + g * g)
        return fmax(end, inner)
    return end


cdef inline double _support(double c, double s, double d2, double d3, double c3) noexcept nogil:
    cdef double w = c + s
    cdef double g = fabs(c) + fabs(s)
    cdef double f = _transverse_max(w * c3, g, d2, d3)
    return fmax(w, 0.0) + fmax(0.0, 0.5 * (f - fabs(w)))


def support_values(cos_t, sin_t, double d2, double d3, double c3):
    cdef double[::1] cv = np.ascontiguousarray(cos_t, dtype=np.float64)
    cdef double[::1] sv = np.ascontiguousarray(sin_t, dtype=np.float64)
    cdef Py_ssize_t i, n = cv.shape[0]
    out = np.empty(n)
    cdef double[::1] ov = out
    d2 = fabs(d2)
    d3 = fabs(d3)
    with nogil:
        for i in range(n):
            ov[i] = _support(cv[i], sv[i], d2, d3, c3)
    return out


def contact_points(cos_t, sin_t, double d2, double d3, double c3):
    cdef double[::1] cv = np.ascontiguousarray(cos_t, dtype=np.float64)
    cdef double[::1] sv = np.ascontiguousarray(sin_t, dtype=np.float64)
    cdef Py_ssize_t i, n = cv.shape[0]
    out = np.empty((n, 2))
    cdef double[:, ::1] ov = out
    cdef double w, g, a, m, x, r, f, base, sg1, sg2, triv
    d2 = fabs(d2)
    d3 = fabs(d3)
    m = d2 * d2 - d3 * d3
    with nogil:
        for i in range(n):
            w = cv[i] + sv[i]
            g = fabs(cv[i]) + fabs(sv[i])
            a = w * c3
            x = -1.0 if a < 0.0 else 1.0
            if m > 0.0 and g > 0.0 and d2 * d2 * a * a <= m * (a * a + m * g * g):
                x = a * d2 / sqrt(m * (a * a + m * g * g))
                if x > 1.0:
                    x = 1.0
                elif x < -1.0:
                    x = -1.0
            r = sqrt(d2 * d2 * (1.0 - x * x) + d3 * d3 * x * x)
            f = a * x + g * r
            if f - fabs(w) > 0.0:
                sg1 = -1.0 if cv[i] < 0.0 else 1.0
                sg2 = -1.0 if sv[i] < 0.0 else 1.0
                base = 0.5 + 0.5 * c3 * x
                ov[i, 0] = base + 0.5 * sg1 * r
                ov[i, 1] = base + 0.5 * sg2 * r
            else:
                triv = 1.0 if w > 0.0 else 0.0
                ov[i, 0] = triv
                ov[i, 1] = triv
    return out


def polygon_from_support(cos_t, sin_t, h):
    cdef double[::1] cv = np.ascontiguousarray(cos_t, dtype=np.float64)
    cdef double[::1] sv = np.ascontiguousarray(sin_t, dtype=np.float64)
    cdef double[::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef Py_ssize_t i, j, n = cv.shape[0]
    out = np.empty((n, 2))
    cdef double[:, ::1] ov = out
    cdef double det
    with nogil:
        for i in range(n):
            j = i + 1
            if j == n:
                j = 0
            det = cv[i] * sv[j] - sv[i] * cv[j]
            ov[i, 0] = (hv[i] * sv[j] - sv[i] * hv[j]) / det
            ov[i, 1] = (cv[i] * hv[j] - hv[i] * cv[j]) / det
    return out


def max_margins(px, py, cos_t, sin_t, h, s11, s12, double k):
    cdef double[::1] xv = np.ascontiguousarray(px, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(py, dtype=np.float64)
    cdef double[::1] cv = np.ascontiguousarray(cos_t, dtype=np.float64)
    cdef double[::1] sv = np.ascontiguousarray(sin_t, dtype=np.float64)
    cdef double[::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef double[::1] e1 = np.ascontiguousarray(s11, dtype=np.float64)
    cdef double[::1] e2 = np.ascontiguousarray(s12, dtype=np.float64)
    cdef Py_ssize_t i, j, m = xv.shape[0], n = cv.shape[0]
    out = np.empty(m)
    cdef double[::1] ov = out
    cdef double best, val, a, b
    with nogil:
        for i in range(m):
            best = -1e300
            for j in range(n):
                val = xv[i] * cv[j] + yv[i] * sv[j] - hv[j]
                if k != 0.0:
                    a = cv[j] * e1[i]
                    b = sv[j] * e2[i]
                    val = val - k * sqrt(a * a + b * b)
                if val > best:
                    best = val
            ov[i] = best
    return out


cdef double GOLDEN = 0.6180339887498949
cdef int REFINE_ITERS = 48


cdef inline double _margin_at(double t, double x, double y, double e1, double e2, double k,
                              double d2, double d3, double c3) noexcept nogil:
    cdef double ct = cos(t), st = sin(t)
    cdef double v = x * ct + y * st - _support(ct, st, d2, d3, c3)
    cdef double a, b
    if k != 0.0:
        a = ct * e1
        b = st * e2
        v = v - k * sqrt(a * a + b * b)
    return v


def exact_margins(px, py, s11, s12, double k, double d2, double d3, double c3, Py_ssize_t n):
    cdef double[::1] xv = np.ascontiguousarray(px, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(py, dtype=np.float64)
    cdef double[::1] e1 = np.ascontiguousarray(s11, dtype=np.float64)
    cdef double[::1] e2 = np.ascontiguousarray(s12, dtype=np.float64)
    cdef Py_ssize_t i, j, jb, m = xv.shape[0]
    cdef double step = 2.0 * M_PI / n
    theta = step * np.arange(n)
    cdef double[::1] cv = np.cos(theta)
    cdef double[::1] sv = np.sin(theta)
    out = np.empty(m)
    cdef double[::1] ov = out
    cdef double[::1] hv = np.empty(n)
    cdef double best, val, a, b, x1, x2, f1, f2, ea, eb
    cdef int it
    d2 = fabs(d2)
    d3 = fabs(d3)
    with nogil:
        for j in range(n):
            hv[j] = _support(cv[j], sv[j], d2, d3, c3)
        for i in range(m):
            best = -1e300
            jb = 0
            for j in range(n):
                val = xv[i] * cv[j] + yv[i] * sv[j] - hv[j]
                if k != 0.0:
                    ea = cv[j] * e1[i]
                    eb = sv[j] * e2[i]
                    val = val - k * sqrt(ea * ea + eb * eb)
                if val > best:
                    best = val
                    jb = j
            a = step * jb - step
            b = step * jb + step
            x1 = b - GOLDEN * (b - a)
            x2 = a + GOLDEN * (b - a)
            f1 = _margin_at(x1, xv[i], yv[i], e1[i], e2[i], k, d2, d3, c3)
            f2 = _margin_at(x2, xv[i], yv[i], e1[i], e2[i], k, d2, d3, c3)
            for it in range(REFINE_ITERS):
                if f1 >= f2:
                    b = x2
                    x2 = x1
                    f2 = f1
                    x1 = b - GOLDEN * (b - a)
                    f1 = _margin_at(x1, xv[i], yv[i], e1[i], e2[i], k, d2, d3, c3)
                else:
                    a = x1
                    x1 = x2
                    f1 = f2
                    x2 = a + GOLDEN * (b - a)
                    f2 = _margin_at(x2, xv[i], yv[i], e1[i], e2[i], k, d2, d3, c3)
            ov[i] = fmax(best, fmax(f1, f2))
    return out


def clip_convex(subject, clipper):
    cdef double[:, ::1] cl = np.ascontiguousarray(clipper, dtype=np.float64)
    cdef Py_ssize_t nc = cl.shape[0]
    cdef Py_ssize_t cap = np.shape(subject)[0] + nc + 4
    buf_a = np.zeros((cap, 2))
    buf_b = np.zeros((cap, 2))
    cdef double[:, ::1] cur = buf_a
    cdef double[:, ::1] nxt = buf_b
    cdef double[:, ::1] tmp
    cdef double[:, ::1] sub = np.ascontiguousarray(subject, dtype=np.float64)
    cdef Py_ssize_t ncur = sub.shape[0], nn, i, j, jn
    cdef double ax, ay, ex, ey, sj, sjn, t
    for j in range(ncur):
        cur[j, 0] = sub[j, 0]
        cur[j, 1] = sub[j, 1]
    with nogil:
        for i in range(nc):
            if ncur == 0:
                break
            ax = cl[i, 0]
            ay = cl[i, 1]
            jn = i + 1
            if jn == nc:
                jn = 0
            ex = cl[jn, 0] - ax
            ey = cl[jn, 1] - ay
            nn = 0
            for j in range(ncur):
                jn = j + 1
                if jn == ncur:
                    jn = 0
                sj = ex * (cur[j, 1] - ay) - ey * (cur[j, 0] - ax)
                sjn = ex * (cur[jn, 1] - ay) - ey * (cur[jn, 0] - ax)
                if sj >= 0.0:
                    nxt[nn, 0] = cur[j, 0]
                    nxt[nn, 1] = cur[j, 1]
                    nn += 1
                if (sj >= 0.0) != (sjn >= 0.0):
                    t = sj / (sj - sjn)
                    nxt[nn, 0] = cur[j, 0] + t * (cur[jn, 0] - cur[j, 0])
                    nxt[nn, 1] = cur[j, 1] + t * (cur[jn, 1] - cur[j, 1])
                    nn += 1
            tmp = cur
            cur = nxt
            nxt = tmp
            ncur = nn
    return np.asarray(cur)[:ncur].copy()


def jacobi_eigvalsh(h, double tol=1e-14, int max_sweeps=64):
    a_np = np.array(h, dtype=np.complex128, order="C")
    cdef double complex[:, ::1] a = a_np
    cdef Py_ssize_t n = a.shape[0], p, q, r
    cdef int sweep
    cdef double off, scale = 0.0, b, app, aqq, tau, t, c, s
    cdef double complex ph, phc, x1, x2
    for p in range(n):
        for q in range(n):
            scale += a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag
    scale = fmax(1.0, sqrt(scale))
    with nogil:
        for sweep in range(max_sweeps):
            off = 0.0
            for p in range(n):
                for q in range(n):
                    if p != q:
                        off += a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag
            if sqrt(off) <= tol * scale:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    b = sqrt(a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag)
                    if b == 0.0:
                        continue
                    ph = a[p, q] / b
                    phc = ph.conjugate()
                    app = a[p, p].real
                    aqq = a[q, q].real
                    tau = (aqq - app) / (2.0 * b)
                    if tau >= 0.0:
                        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    for r in range(n):
                        x1 = a[r, p]
                        x2 = a[r, q]
                        a[r, p] = c * x1 - s * phc * x2
                        a[r, q] = s * x1 + c * phc * x2
                    for r in range(n):
                        x1 = a[p, r]
                        x2 = a[q, r]
                        a[p, r] = c * x1 - s * ph * x2
                        a[q, r] = s * x1 + c * ph * x2
                    a[p, q] = 0.0
                    a[q, p] = 0.0
    return np.sort(np.real(np.diagonal(a_np)).copy())
