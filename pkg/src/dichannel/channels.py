"""Qubit channels as affine maps of the Bloch ball.

A channel acts on a Bloch vector ``v`` as ``v -> A v + b``. Channels
covariant under the dihedral group D2 have, up to rotations before and
after, the diagonal form ``A = diag(d1, d2, d3)``, ``b = (0, 0, c3)``,
stored as :class:`D2Channel`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import PAULIS, IDENTITY2, herm4_eigenvalues, signed_svd

CP_SLACK = 1e-9
CANON_TOL = 1e-6
STATE_TOL = 1e-12


class NotD2CovariantError(ValueError):
    pass


class UnphysicalChannelError(ValueError):
    pass


@dataclass(frozen=True)
class Effect:
    """Binary POVM element ``t I + s . sigma`` (outcome 1)."""

    t: float
    s: tuple

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "s", tuple(float(x) for x in self.s))

    @property
    def vec(self):
        return np.array(self.s)

    def is_valid(self, tol=STATE_TOL):
        r = float(np.linalg.norm(self.s))
        return self.t - r >= -tol and self.t + r <= 1.0 + tol

    def complement(self):
        return Effect(1.0 - self.t, tuple(-x for x in self.s))

    @classmethod
    def projector(cls, n):
        """Rank-one projector onto the Bloch direction ``n`` (a unit vector)."""
        n = np.asarray(n, dtype=float)
        return cls(0.5, tuple(0.5 * n / np.linalg.norm(n)))


@dataclass(frozen=True, eq=False)
class QubitChannel:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.array(self.A, dtype=float).reshape(3, 3)
        b = np.array(self.b, dtype=float).reshape(3)
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "b", b)

    def apply(self, v):
        return self.A @ np.asarray(v, dtype=float) + self.b

    def choi(self):
        return choi_affine(self.A, self.b)

    def cp_margin(self):
        """Smallest Choi eigenvalue; negative means not completely positive."""
        return float(herm4_eigenvalues(self.choi())[0])

    def is_physical(self, slack=CP_SLACK):
        return self.cp_margin() >= -slack


@dataclass(frozen=True)
class D2Channel:
    """Canonical D2-covariant channel: semi-axes ``d1, d2, d3`` and shift ``c3``."""

    d1: float
    d2: float
    d3: float
    c3: float

    def __post_init__(self):
        for name in ("d1", "d2", "d3", "c3"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def d(self):
        return np.array([self.d1, self.d2, self.d3])

    @property
    def transverse(self):
        """The transverse semi-axis the correlation set depends on."""
        return max(abs(self.d1), abs(self.d2))

    def as_tuple(self):
        return (self.d1, self.d2, self.d3, self.c3)

    def affine(self):
        return QubitChannel(np.diag(self.d), np.array([0.0, 0.0, self.c3]))

    def apply(self, v):
        return self.d * np.asarray(v, dtype=float) + np.array([0.0, 0.0, self.c3])

    def cp_lhs(self):
        """Left-hand sides of the two complete-positivity inequalities (each must be <= 1)."""
        d1, d2, d3, c3 = self.as_tuple()
        return (
            d3 + np.hypot(d1 - d2, c3),
            -d3 + np.hypot(d1 + d2, c3),
        )

    def cp_margin(self):
        return 1.0 - max(self.cp_lhs())


def apply(ch, v):
    return ch.apply(v)


def born(e: Effect, v) -> float:
    return e.t + float(np.dot(e.s, v))


def amplitude_damping(lam: float) -> D2Channel:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"damping parameter {lam} outside [0, 1]")
    r = np.sqrt(1.0 - lam)
    return D2Channel(r, r, 1.0 - lam, lam)


def dephase(ch: D2Channel, visibility: float) -> D2Channel:
    """Shrink the transverse semi-axes by ``visibility``."""
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility {visibility} outside [0, 1]")
    out = D2Channel(visibility * ch.d1, visibility * ch.d2, ch.d3, ch.c3)
    if not is_cp_explicit(out):
        raise UnphysicalChannelError("dephased channel violates complete positivity")
    return out


IDENTITY = D2Channel(1.0, 1.0, 1.0, 0.0)
DEPOLARIZING = D2Channel(0.0, 0.0, 0.0, 0.0)


def choi(ch: D2Channel) -> np.ndarray:
    """Choi matrix of the diagonal form (trace 2)."""
    d1, d2, d3, c3 = ch.as_tuple()
    e = np.array(
        [
            [1 + c3 + d3, 0, 0, d1 + d2],
            [0, 1 - c3 - d3, d1 - d2, 0],
            [0, d1 - d2, 1 + c3 - d3, 0],
            [d1 + d2, 0, 0, 1 - c3 + d3],
        ],
        dtype=complex,
    )
    return 0.5 * e


def _basis_images(a, b):
    """Images of |i><j| under the affine map, as 2x2 matrices."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = {}
    for i in range(2):
        for j in range(2):
            m = np.zeros((2, 2), dtype=complex)
            m[i, j] = 1.0
            m0 = 0.5 * np.trace(m)
            mk = np.array([0.5 * np.trace(s @ m) for s in PAULIS])
            img = m0 * (IDENTITY2 + sum(b[k] * PAULIS[k] for k in range(3)))
            for k in range(3):
                img = img + mk @ a[k] * PAULIS[k]
            out[i, j] = img
    return out


def choi_affine(a, b) -> np.ndarray:
    """Choi matrix ``sum_ij |i><j| (x) X(|i><j|)`` of the affine map ``(a, b)``."""
    images = _basis_images(a, b)
    j = np.zeros((4, 4), dtype=complex)
    for (r, c), img in images.items():
        j[2 * r : 2 * r + 2, 2 * c : 2 * c + 2] = img
    return j


def is_cp_explicit(ch: D2Channel, slack=CP_SLACK) -> bool:
    return max(ch.cp_lhs()) <= 1.0 + slack


def is_cp_choi(ch: D2Channel, slack=CP_SLACK) -> bool:
    return float(herm4_eigenvalues(choi(ch))[0]) >= -slack


def compose(outer: QubitChannel, inner: QubitChannel) -> QubitChannel:
    """``outer`` after ``inner``."""
    return QubitChannel(outer.A @ inner.A, outer.A @ inner.b + outer.b)


def rotated(ch, r_out, r_in) -> QubitChannel:
    """Conjugate by rotations: ``v -> r_out (A r_in v + b)``."""
    if isinstance(ch, D2Channel):
        ch = ch.affine()
    return QubitChannel(r_out @ ch.A @ r_in, r_out @ ch.b)


def d1_interval(d2: float, d3: float, c3: float, tol=1e-12):
    """Range of ``d1`` in ``[0, d2]`` keeping ``(d1, d2, d3, c3)`` completely positive.

    Returns ``None`` when no such ``d1`` exists; violations up to ``tol``
    (rounding on the boundary) are forgiven.
    """
    r1sq = (1.0 - d3) ** 2 - c3 * c3
    r2sq = (1.0 + d3) ** 2 - c3 * c3
    if d3 > 1.0 + tol or r1sq < -tol or r2sq < -tol:
        return None
    lo = max(0.0, d2 - np.sqrt(max(r1sq, 0.0)))
    hi = min(d2, np.sqrt(max(r2sq, 0.0)) - d2)
    if lo > hi + tol:
        return None
    return lo, max(lo, hi)


def _householder_align(c):
    """Proper rotation ``r`` with ``r.T @ c`` along the last axis (positive)."""
    k = c.shape[0]
    norm = np.linalg.norm(c)
    e = np.zeros(k)
    e[-1] = norm
    w = c - e
    if norm == 0.0 or np.linalg.norm(w) <= 1e-15 * norm:
        return np.eye(k)
    h = np.eye(k) - 2.0 * np.outer(w, w) / (w @ w)
    h[:, 0] = -h[:, 0]
    return h


def _align_degenerate(v, u, d, c, tol):
    order = np.argsort(d)
    groups = [[order[0]]]
    for i in order[1:]:
        if d[i] - d[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    for g in groups:
        if len(g) < 2:
            continue
        g = sorted(g)
        r = _householder_align(c[g])
        v[:, g] = v[:, g] @ r
        u[:, g] = u[:, g] @ r
        c[g] = r.T @ c[g]
    return v, u, c


def canonicalize(ch, tol=CANON_TOL):
    """Bring a channel to D2 canonical form.

    Returns ``(D2Channel, u, v)`` with ``A = v diag(d) u.T`` and
    ``b = v (0, 0, c3)``. ``v`` is a proper rotation; ``d >= 0`` and
    ``c3 >= 0``, so sign flips end up in ``u``, which may be improper.
    Transverse semi-axes are ordered ``d1 <= d2``.
    """
    if isinstance(ch, D2Channel):
        ch = ch.affine()
    v, d, u = signed_svd(ch.A)
    u = u * np.where(d < 0, -1.0, 1.0)
    d = np.abs(d)
    c = v.T @ ch.b
    v, u, c = _align_degenerate(v.copy(), u.copy(), d, c, tol)

    if np.all(np.abs(c) <= tol):
        order = list(np.argsort(d, kind="stable"))
    else:
        k = int(np.argmax(np.abs(c)))
        others = [i for i in range(3) if i != k]
        if max(abs(c[i]) for i in others) > tol:
            raise NotD2CovariantError(
                f"not D2-covariant within tolerance {tol}: translation {c} in the singular frame"
            )
        others.sort(key=lambda i: d[i])
        order = others + [k]

    v = v[:, order]
    u = u[:, order]
    d = d[order]
    c = c[order]
    if np.linalg.det(v) < 0:
        v[:, 0] = -v[:, 0]
        u[:, 0] = -u[:, 0]
        c[0] = -c[0]
    if c[2] < 0:
        v[:, 1:] = -v[:, 1:]
        u[:, 1:] = -u[:, 1:]
        c[1:] = -c[1:]
    return D2Channel(d[0], d[1], d[2], c[2]), u, v


def random_physical_d2(rng, size=None, low=-1.0):
    """Rejection-sample CP tuples uniformly from ``[low, 1]^3 x [-1, 1]``."""
    out = []
    n = 1 if size is None else size
    while len(out) < n:
        d = rng.uniform(low, 1.0, size=3)
        c3 = rng.uniform(-1.0, 1.0)
        ch = D2Channel(*d, c3)
        if is_cp_explicit(ch, slack=0.0):
            out.append(ch)
    return out[0] if size is None else out
