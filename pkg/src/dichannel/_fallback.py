"""Pure numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_kernels.pyx``.
``dichannel.kernels`` picks one at import time.
"""
import math

import numpy as np

_CHUNK = 2048


def transverse_max(a, g, d2, d3):
    """Maximize ``a*x + g*sqrt(d2**2 (1 - x**2) + d3**2 x**2)`` over ``x`` in [-1, 1].

    Closed form: the objective is concave in ``x`` when ``|d2| > |d3|`` and
    convex otherwise, so the maximum is either the interior stationary
    point or an endpoint.
    """
    a = np.asarray(a, dtype=float)
    g = np.asarray(g, dtype=float)
    d2 = abs(d2)
    d3 = abs(d3)
    m = d2 * d2 - d3 * d3
    end = np.abs(a) + g * d3
    if m <= 0.0:
        return end
    inside = d2 * d2 * a * a <= m * (a * a + m * g * g)
    inner = d2 * np.sqrt(a * a / m + g * g)
    return np.maximum(end, np.where(inside, inner, end))


def support_values(cos_t, sin_t, d2, d3, c3):
    cos_t = np.asarray(cos_t, dtype=float)
    sin_t = np.asarray(sin_t, dtype=float)
    w = cos_t + sin_t
    g = np.abs(cos_t) + np.abs(sin_t)
    f = transverse_max(w * c3, g, d2, d3)
    return np.maximum(w, 0.0) + np.maximum(0.0, 0.5 * (f - np.abs(w)))


def contact_points(cos_t, sin_t, d2, d3, c3):
    """Points of the correlation set touching each support line.

    Ties (flat edges, degenerate sets) are broken toward fixed endpoints,
    so consecutive points trace the boundary in order.
    """
    cos_t = np.asarray(cos_t, dtype=float)
    sin_t = np.asarray(sin_t, dtype=float)
    d2 = abs(d2)
    d3 = abs(d3)
    w = cos_t + sin_t
    g = np.abs(cos_t) + np.abs(sin_t)
    a = w * c3
    m = d2 * d2 - d3 * d3
    x = np.where(a < 0.0, -1.0, 1.0)
    if m > 0.0:
        inside = d2 * d2 * a * a <= m * (a * a + m * g * g)
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = a * d2 / np.sqrt(m * (a * a + m * g * g))
        x = np.where(inside & (g > 0.0), xs, x)
    x = np.clip(x, -1.0, 1.0)
    r = np.sqrt(d2 * d2 * (1.0 - x * x) + d3 * d3 * x * x)
    f = a * x + g * r
    sg1 = np.where(cos_t < 0.0, -1.0, 1.0)
    sg2 = np.where(sin_t < 0.0, -1.0, 1.0)
    base = 0.5 + 0.5 * c3 * x
    proj = np.column_stack([base + 0.5 * sg1 * r, base + 0.5 * sg2 * r])
    triv = np.where(w > 0.0, 1.0, 0.0)
    trivial = np.column_stack([triv, triv])
    use_proj = (f - np.abs(w)) > 0.0
    return np.where(use_proj[:, None], proj, trivial)


def polygon_from_support(cos_t, sin_t, h):
    """Vertices where consecutive support lines meet (vertex k joins lines k, k+1)."""
    c1 = np.asarray(cos_t, dtype=float)
    s1 = np.asarray(sin_t, dtype=float)
    h1 = np.asarray(h, dtype=float)
    c2 = np.roll(c1, -1)
    s2 = np.roll(s1, -1)
    h2 = np.roll(h1, -1)
    det = c1 * s2 - s1 * c2
    x = (h1 * s2 - s1 * h2) / det
    y = (c1 * h2 - h1 * c2) / det
    return np.column_stack([x, y])


def max_margins(px, py, cos_t, sin_t, h, s11, s12, k):
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    s11 = np.asarray(s11, dtype=float)
    s12 = np.asarray(s12, dtype=float)
    out = np.empty(px.shape[0])
    use_sigma = k != 0.0 and (np.any(s11) or np.any(s12))
    for lo in range(0, px.shape[0], _CHUNK):
        hi = lo + _CHUNK
        m = px[lo:hi, None] * cos_t + py[lo:hi, None] * sin_t - h
        if use_sigma:
            m = m - k * np.sqrt((cos_t * s11[lo:hi, None]) ** 2 + (sin_t * s12[lo:hi, None]) ** 2)
        out[lo:hi] = m.max(axis=1)
    return out


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
REFINE_ITERS = 48


def _margin_at(t, px, py, s11, s12, k, d2, d3, c3):
    ct, st = np.cos(t), np.sin(t)
    v = px * ct + py * st - support_values(ct, st, d2, d3, c3)
    if k != 0.0:
        v = v - k * np.sqrt((ct * s11) ** 2 + (st * s12) ** 2)
    return v


def exact_margins(px, py, s11, s12, k, d2, d3, c3, n):
    """Margins ``max_u (u . p - h(u) - k sigma_u)`` over all unit directions.

    The maximum is located on ``n`` uniform directions and then refined by
    golden-section search between the neighbours of the best one, using the
    closed-form support function.
    """
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    s11 = np.asarray(s11, dtype=float)
    s12 = np.asarray(s12, dtype=float)
    step = 2.0 * np.pi / n
    theta = step * np.arange(n)
    c, s = np.cos(theta), np.sin(theta)
    h = support_values(c, s, d2, d3, c3)
    out = np.empty(px.shape[0])
    for lo in range(0, px.shape[0], _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        pts = (px[sl], py[sl], s11[sl], s12[sl], k, d2, d3, c3)
        m = pts[0][:, None] * c + pts[1][:, None] * s - h
        if k != 0.0:
            m = m - k * np.sqrt((c * pts[2][:, None]) ** 2 + (s * pts[3][:, None]) ** 2)
        j = m.argmax(axis=1)
        best = m[np.arange(m.shape[0]), j]
        a = theta[j] - step
        b = theta[j] + step
        x1 = b - _GOLDEN * (b - a)
        x2 = a + _GOLDEN * (b - a)
        f1 = _margin_at(x1, *pts)
        f2 = _margin_at(x2, *pts)
        for _ in range(REFINE_ITERS):
            left = f1 >= f2
            a = np.where(left, a, x1)
            b = np.where(left, x2, b)
            nx1 = np.where(left, b - _GOLDEN * (b - a), x2)
            nx2 = np.where(left, x1, a + _GOLDEN * (b - a))
            fe = _margin_at(np.where(left, nx1, nx2), *pts)
            f1, f2 = np.where(left, fe, f2), np.where(left, f1, fe)
            x1, x2 = nx1, nx2
        out[sl] = np.maximum(best, np.maximum(f1, f2))
    return out


def clip_convex(subject, clipper):
    """Sutherland-Hodgman clip of ``subject`` by the convex CCW polygon ``clipper``."""
    poly = np.asarray(subject, dtype=float)
    clipper = np.asarray(clipper, dtype=float)
    n = clipper.shape[0]
    for i in range(n):
        if poly.shape[0] == 0:
            break
        ax, ay = clipper[i]
        bx, by = clipper[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        side = ex * (poly[:, 1] - ay) - ey * (poly[:, 0] - ax)
        inside = side >= 0.0
        if inside.all():
            continue
        nxt = np.roll(poly, -1, axis=0)
        side_n = np.roll(side, -1)
        inside_n = np.roll(inside, -1)
        out = []
        for j in range(poly.shape[0]):
            if inside[j]:
                out.append(poly[j])
            if inside[j] != inside_n[j]:
                t = side[j] / (side[j] - side_n[j])
                out.append(poly[j] + t * (nxt[j] - poly[j]))
        poly = np.array(out).reshape(-1, 2)
    return poly


def jacobi_eigvalsh(h, tol=1e-14, max_sweeps=64):
    """Cyclic complex Jacobi eigenvalues of a small Hermitian matrix, ascending."""
    a = [[complex(v) for v in row] for row in np.asarray(h)]
    n = len(a)
    scale = max(1.0, math.sqrt(sum(abs(v) ** 2 for row in a for v in row)))
    for _ in range(max_sweeps):
        off = math.sqrt(sum(abs(a[i][j]) ** 2 for i in range(n) for j in range(n) if i != j))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                b = abs(apq)
                if b == 0.0:
                    continue
                ph = apq / b
                app = a[p][p].real
                aqq = a[q][q].real
                tau = (aqq - app) / (2.0 * b)
                t = (1.0 if tau >= 0.0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                phc = ph.conjugate()
                for r in range(n):
                    arp = a[r][p]
                    arq = a[r][q]
                    a[r][p] = c * arp - s * phc * arq
                    a[r][q] = s * arp + c * phc * arq
                for r in range(n):
                    apr = a[p][r]
                    aqr = a[q][r]
                    a[p][r] = c * apr - s * ph * aqr
                    a[q][r] = s * apr + c * ph * aqr
                a[p][q] = 0j
                a[q][p] = 0j
    return np.sort(np.array([a[i][i].real for i in range(n)]))

