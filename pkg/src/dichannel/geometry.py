"""Binary input/output correlation sets of D2-covariant channels.

A correlation is the pair ``(p11, p12)``: the probability of outcome 1 for
the first and for the second input state. For a channel, all such pairs
obtainable with arbitrary input states and binary effects form a convex
subset of the unit square. It is handled through its support function

    h(u) = max over the set of  u1 * p11 + u2 * p12

which has a closed form here (see :func:`support`). A :class:`Region`
samples ``h`` on ``n`` uniformly spaced directions. Membership is decided
by the half-planes ``u . p <= h(u)``: over the sampled directions, refined
to the exact maximizing direction when the region knows its channel
parameters. The boundary polyline runs through the points where each
support line touches the set, so its vertices lie on the true boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channels import D2Channel, UnphysicalChannelError, is_cp_explicit

DEFAULT_DIRECTIONS = 2048
MEMBERSHIP_SLACK = 1e-9
SQUARE_TOL = 1e-12
DEDUP_TOL = 1e-12


# --- coordinates -----------------------------------------------------------


def xy_to_p(x, y):
    """Cartesian coordinates to ``(p11, p12)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(x + y) > 1 + SQUARE_TOL) or np.any(np.abs(x - y) > 1 + SQUARE_TOL):
        raise ValueError("point outside the square |x + y| <= 1, |x - y| <= 1")
    return 0.5 * (1.0 + x - y), 0.5 * (1.0 + x + y)


def p_to_xy(p11, p12):
    p11 = np.asarray(p11, dtype=float)
    p12 = np.asarray(p12, dtype=float)
    if np.any((p11 < -SQUARE_TOL) | (p11 > 1 + SQUARE_TOL) | (p12 < -SQUARE_TOL) | (p12 > 1 + SQUARE_TOL)):
        raise ValueError("probabilities outside [0, 1]")
    return p11 + p12 - 1.0, p12 - p11


def ad_lhs(x, y, clamp=1e-12):
    """Left-hand side of the amplitude-damping inequality in Cartesian form."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r1 = 1.0 - 2.0 * y - x * x + y * y
    r2 = 1.0 + 2.0 * y - x * x + y * y
    if np.any(r1 < -clamp) or np.any(r2 < -clamp):
        raise ValueError("negative radicand: point outside the square")
    r1 = np.maximum(r1, 0.0)
    r2 = np.maximum(r2, 0.0)
    return 0.25 * (np.sqrt(r1) - np.sqrt(r2)) ** 2


def ad_contains(lam, x, y, slack=MEMBERSHIP_SLACK):
    """Analytic membership test for the amplitude-damping correlation set."""
    return ad_lhs(x, y) <= 1.0 - lam + slack


def mu(d2, d3, c3):
    """Equivalence-class label ``(1 - c3)(d2^2 - d3^2) / (c3 d3^2)``."""
    den = c3 * d3 * d3
    if den == 0.0:
        raise ZeroDivisionError("equivalence class undefined for c3 = 0 or d3 = 0")
    return (1.0 - c3) * (d2 * d2 - d3 * d3) / den


# --- data ------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationPoint:
    p11: float
    p12: float
    s11: float = 0.0
    s12: float = 0.0


@dataclass
class CorrelationData:
    """A batch of correlation points with optional standard errors."""

    p: np.ndarray
    sigma: np.ndarray = None
    pair_id: np.ndarray = None
    meas_id: np.ndarray = None

    def __post_init__(self):
        self.p = np.atleast_2d(np.asarray(self.p, dtype=float)).reshape(-1, 2)
        m = self.p.shape[0]
        self.sigma = np.zeros((m, 2)) if self.sigma is None else np.asarray(self.sigma, dtype=float).reshape(m, 2)
        self.pair_id = np.arange(m) if self.pair_id is None else np.asarray(self.pair_id, dtype=int)
        self.meas_id = np.zeros(m, dtype=int) if self.meas_id is None else np.asarray(self.meas_id, dtype=int)
        if np.any(self.sigma < 0):
            raise ValueError("negative standard error")

    def __len__(self):
        return self.p.shape[0]

    @classmethod
    def from_points(cls, points):
        pts = list(points)
        return cls(
            np.array([[q.p11, q.p12] for q in pts]).reshape(-1, 2),
            np.array([[q.s11, q.s12] for q in pts]).reshape(-1, 2),
        )

    def points(self):
        return [CorrelationPoint(*row, *sig) for row, sig in zip(self.p, self.sigma)]

    def subset(self, mask):
        return CorrelationData(self.p[mask], self.sigma[mask], self.pair_id[mask], self.meas_id[mask])

    def swap_inputs(self):
        return CorrelationData(self.p[:, ::-1], self.sigma[:, ::-1], self.pair_id, self.meas_id)

    def flip_outcomes(self):
        return CorrelationData(1.0 - self.p, self.sigma, self.pair_id, self.meas_id)


def as_data(data) -> CorrelationData:
    if isinstance(data, CorrelationData):
        return data
    if isinstance(data, CorrelationPoint):
        return CorrelationData.from_points([data])
    arr = np.asarray(data)
    if arr.dtype == object or (arr.ndim == 1 and arr.size and isinstance(arr.flat[0], CorrelationPoint)):
        return CorrelationData.from_points(data)
    return CorrelationData(arr)


# --- support function ------------------------------------------------------


def _params(ch):
    if isinstance(ch, D2Channel):
        return ch.transverse, abs(ch.d3), ch.c3
    d2, d3, c3 = ch
    return abs(d2), abs(d3), c3


def support(ch, u) -> float:
    """Support value ``h(u)`` of the correlation set of ``ch``.

    Maximizing ``u . p`` over states and effects ``t I + s . sigma``:
    the states align with the image direction ``D s``, ``t`` sits at an
    extreme of its allowed range, and the objective is then affine in
    ``|s|``, so ``|s|`` is 0 or 1/2. What remains is a one-dimensional
    maximization over the direction of ``s`` in the plane of the larger
    transverse axis and the translation axis, solved in closed form by
    :func:`kernels.transverse_max`.
    """
    if isinstance(ch, D2Channel) and not is_cp_explicit(ch):
        raise UnphysicalChannelError(f"{ch} is not completely positive")
    d2, d3, c3 = _params(ch)
    u1, u2 = float(u[0]), float(u[1])
    w = u1 + u2
    f = float(kernels.transverse_max(w * c3, abs(u1) + abs(u2), d2, d3))
    return max(w, 0.0) + max(0.0, 0.5 * (f - abs(w)))


def support_grid(ch, u, n_grid=4096, refine_iters=80) -> float:
    """Same quantity as :func:`support` via a grid search with golden-section refinement.

    Slow; kept as an independent check of the closed form.
    """
    d2, d3, c3 = _params(ch)
    u1, u2 = float(u[0]), float(u[1])
    w = u1 + u2
    g = abs(u1) + abs(u2)

    def obj(phi):
        return w * c3 * np.cos(phi) + g * np.sqrt((d2 * np.sin(phi)) ** 2 + (d3 * np.cos(phi)) ** 2)

    phis = np.linspace(0.0, np.pi, n_grid)
    vals = obj(phis)
    i = int(np.argmax(vals))
    lo = phis[max(i - 1, 0)]
    hi = phis[min(i + 1, n_grid - 1)]
    ratio = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - ratio * (b - a)
    x2 = a + ratio * (b - a)
    f1, f2 = obj(x1), obj(x2)
    for _ in range(refine_iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + ratio * (b - a)
            f2 = obj(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - ratio * (b - a)
            f1 = obj(x1)
    f = max(vals[i], f1, f2)
    return max(w, 0.0) + max(0.0, 0.5 * (f - abs(w)))


def exact_area(d2, d3, c3) -> float:
    """Area of the correlation set in closed form.

    In the coordinates ``x = p11 + p12 - 1``, ``y = p12 - p11`` a projective
    effect with Bloch component ``z/2`` along the translation axis reaches
    the square of half-diagonal ``r(z) = sqrt(d2^2 (1 - z^2) + d3^2 z^2)``
    centred at ``(c3 z, 0)``. The set is therefore the convex hull of the
    curve ``(c3 z, +-r(z))``, ``|z| <= 1``, and the corners ``(+-1, 0)``.
    For ``d2 > d3`` the curve is an ellipse arc, met by the tangent from
    ``(1, 0)`` at ``z = c3 d2^2 / (d2^2 - d3^2)``; otherwise the hull of the
    curve is the chord between its end points. The Jacobian to ``(p11, p12)``
    is 1/2, so the area is twice the quadrant ``x, y >= 0``.
    """
    d2, d3, c3 = abs(float(d2)), abs(float(d3)), abs(float(c3))
    m = d2 * d2 - d3 * d3
    if m <= 0.0:
        quad = 0.5 * d3 * (1.0 + c3)
    else:
        z = min(1.0, c3 * d2 * d2 / m)
        r = np.sqrt(max(d2 * d2 - m * z * z, 0.0))
        sm = np.sqrt(m)
        arc = c3 * (0.5 * z * r + d2 * d2 / (2.0 * sm) * np.arcsin(min(1.0, sm * z / d2)))
        quad = arc + 0.5 * (1.0 - c3 * z) * r
    return float(2.0 * quad)


# --- regions ---------------------------------------------------------------


def directions(n):
    theta = 2.0 * np.pi * np.arange(n) / n
    return theta, np.cos(theta), np.sin(theta)


def _dedup(vertices, tol=DEDUP_TOL):
    if vertices.shape[0] == 0:
        return vertices
    diff = np.abs(vertices - np.roll(vertices, 1, axis=0)).max(axis=1)
    keep = diff > tol
    if not keep.any():
        return vertices[:1]
    return vertices[keep]


def _shoelace(v):
    if v.shape[0] < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass(eq=False)
class Region:
    """Convex correlation set sampled by its support function.

    ``vertices`` defaults to the corners of the half-plane intersection
    when no contact points are supplied. ``params`` holds ``(d2, d3, c3)``
    for regions built from a channel and enables exact margins.
    """

    angles: np.ndarray
    support_values: np.ndarray
    vertices: np.ndarray = field(default=None)
    params: tuple = None

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        self.support_values = np.asarray(self.support_values, dtype=float)
        self.cos = np.cos(self.angles)
        self.sin = np.sin(self.angles)
        if self.vertices is None:
            self.vertices = self.outer_vertices()
        self.vertices = np.asarray(self.vertices, dtype=float)
        self._poly = None
        self._area = None

    def outer_vertices(self):
        """Corners of the polygon cut out by the support half-planes."""
        return kernels.polygon_from_support(self.cos, self.sin, self.support_values)

    @property
    def n(self):
        return self.angles.shape[0]

    @property
    def polygon(self):
        """Vertices with consecutive duplicates removed (CCW)."""
        if self._poly is None:
            self._poly = _dedup(self.vertices)
        return self._poly

    def area(self):
        if self._area is None:
            self._area = abs(_shoelace(self.polygon))
        return self._area

    def margins(self, data, k=0.0):
        """Largest signed distance past a support line, per point.

        With ``k > 0`` each direction ``u`` is granted ``k`` standard errors
        of ``u . p`` as extra room.
        """
        data = as_data(data)
        if len(data) == 0:
            return np.empty(0)
        if self.params is not None:
            return kernels.exact_margins(
                data.p[:, 0], data.p[:, 1], data.sigma[:, 0], data.sigma[:, 1], float(k), *self.params, self.n
            )
        return kernels.max_margins(
            data.p[:, 0], data.p[:, 1], self.cos, self.sin, self.support_values,
            data.sigma[:, 0], data.sigma[:, 1], float(k),
        )

    def margin(self, point, k=0.0):
        return float(self.margins(as_data(point), k)[0])

    def contains(self, point, slack=MEMBERSHIP_SLACK, k=0.0):
        return self.margin(point, k) <= slack


def boundary_params(d2, d3, c3, n=DEFAULT_DIRECTIONS) -> Region:
    """Region for raw parameters, without a complete-positivity check."""
    theta, c, s = directions(n)
    d2, d3, c3 = abs(d2), abs(d3), float(c3)
    h = kernels.support_values(c, s, d2, d3, c3)
    return Region(theta, h, kernels.contact_points(c, s, d2, d3, c3), (d2, d3, c3))


def boundary(ch: D2Channel, n=DEFAULT_DIRECTIONS) -> Region:
    if n < 64:
        raise ValueError("need at least 64 directions")
    if not is_cp_explicit(ch):
        raise UnphysicalChannelError(f"{ch} is not completely positive")
    return boundary_params(ch.transverse, ch.d3, ch.c3, n)


def region_from_polygon(vertices, n=DEFAULT_DIRECTIONS) -> Region:
    """Region whose support samples are those of a given convex polygon."""
    vertices = np.asarray(vertices, dtype=float)
    theta, c, s = directions(n)
    h = (np.outer(c, vertices[:, 0]) + np.outer(s, vertices[:, 1])).max(axis=1)
    return Region(theta, h)


def area(r: Region) -> float:
    return r.area()


def intersect_area(r1: Region, r2: Region) -> float:
    a, b = r1.polygon, r2.polygon
    if a.shape[0] < 3 or b.shape[0] < 3 or r1.area() == 0.0 or r2.area() == 0.0:
        return 0.0
    clipped = kernels.clip_convex(a, b)
    return abs(_shoelace(clipped))


def union_area(r1: Region, r2: Region) -> float:
    return r1.area() + r2.area() - intersect_area(r1, r2)


def delta(r1: Region, r2: Region) -> float:
    """Relative difference ``(A_union - A_intersection) / A_union``."""
    inter = intersect_area(r1, r2)
    union = r1.area() + r2.area() - inter
    if union <= 0.0:
        raise ValueError("both regions are empty")
    return float(np.clip((union - inter) / union, 0.0, 1.0))
