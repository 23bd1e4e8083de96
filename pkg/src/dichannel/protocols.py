"""Device-independent validation (DI-TV) and characterization (DI-CC).

DI-TV tests a tomographic hypothesis against observed correlations: the
hypothesis fails when some point lies outside its correlation set by more
than ``k`` propagated standard errors.

DI-CC finds the smallest-area correlation set of a D2-covariant channel
containing all observed points. The set depends on ``(d2, d3, |c3|)``
only and grows with each of them, so for fixed ``(d3, c3)`` the smallest
containing ``d2`` is a root of the largest data margin; the remaining two
parameters are searched with a bounded simplex method from many starts.
Areas come from the closed form :func:`geometry.exact_area`, since the
area differences between competing parameter sets can be far below the
discretization error of a sampled boundary. ``d1`` only has to keep the
channel completely positive and is not identified.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from . import kernels
from .channels import D2Channel, UnphysicalChannelError, d1_interval, is_cp_explicit
from .optimize import worker_count
from .geometry import (
    DEFAULT_DIRECTIONS,
    MEMBERSHIP_SLACK,
    CorrelationData,
    Region,
    as_data,
    boundary,
    boundary_params,
    delta,
    directions,
    exact_area,
    mu,
)

SEARCH_DIRECTIONS = 512
SCREEN_DIRECTIONS = 8192
ROOT_TOL = 1e-12
RANGE_TOL = 1e-4
DEGENERATE_AREA = 1e-9
LOCAL_SOLVES = 6
POLISH_SOLVES = 2
# prefers smaller parameters among sets of equal area
TIE_BREAK = 1e-10
MU_TOL = 1e-9
FLAT_TOL = 1e-9


class InfeasibleDataError(ValueError):
    """No physical channel reproduces the data; ``witnesses`` are the offending indices."""

    def __init__(self, message, witnesses=()):
        super().__init__(message)
        self.witnesses = [int(i) for i in witnesses]


class NotValidatedError(ValueError):
    pass


# --- reports ---------------------------------------------------------------


@dataclass
class ClassReport:
    d2: float
    d3: float
    c3: float
    mu: float
    in_regime: bool

    def as_dict(self):
        return {"d2": self.d2, "d3": self.d3, "c3": self.c3, "mu": self.mu, "in_regime": self.in_regime}


def equivalence_class(d2, d3, c3) -> ClassReport:
    m = mu(d2, d3, c3)
    return ClassReport(float(d2), float(d3), float(c3), float(m), bool(-MU_TOL <= m <= 1.0 + MU_TOL))


@dataclass
class Offender:
    index: int
    pair_id: int
    meas_id: int
    p11: float
    p12: float
    margin: float


@dataclass
class Verdict:
    validated: bool
    k_sigma: float
    offenders: list
    delta: float = None
    ranges: dict = None
    hypothesis: D2Channel = None

    def as_dict(self):
        return {
            "validated": self.validated,
            "k_sigma": self.k_sigma,
            "delta": self.delta,
            "offenders": [vars(o) for o in self.offenders],
            "ranges": self.ranges,
            "hypothesis": None if self.hypothesis is None else list(self.hypothesis.as_tuple()),
        }


@dataclass
class CharacterizationResult:
    report: ClassReport
    region: Region
    channel: D2Channel
    area: float
    d1_range: tuple
    degenerate: bool = False
    evaluations: int = 0
    candidates: list = field(default_factory=list)


# --- DI-TV -----------------------------------------------------------------


def offenders(region: Region, data, k=2.0, slack=MEMBERSHIP_SLACK):
    data = as_data(data)
    m = region.margins(data, k)
    out = []
    for i in np.flatnonzero(m > slack):
        out.append(Offender(int(i), int(data.pair_id[i]), int(data.meas_id[i]), float(data.p[i, 0]), float(data.p[i, 1]), float(m[i])))
    return out


def _hyp_params(hyp: D2Channel):
    return hyp.transverse, abs(hyp.d3), abs(hyp.c3)


def di_tv(hyp: D2Channel, data, k=2.0, reference_region=None, n=DEFAULT_DIRECTIONS, with_delta=True, **cc_options) -> Verdict:
    """Validate ``hyp`` against correlations.

    Δ is measured against ``reference_region``, by default the DI-CC fit
    of the same data.
    """
    if not is_cp_explicit(hyp):
        raise UnphysicalChannelError(f"{hyp} is not completely positive")
    data = as_data(data)
    region = boundary(hyp, n)
    bad = offenders(region, data, k)
    d = None
    if with_delta:
        if reference_region is None:
            reference_region = di_cc(data, **cc_options).region
        d = _safe_delta(region, reference_region)
    return Verdict(not bad, float(k), bad, d, None, hyp)


def _safe_delta(r1, r2):
    try:
        return delta(r1, r2)
    except ValueError:
        return 0.0


def parameter_ranges(hyp: D2Channel, data, delta0=None, reference_region=None, tol=RANGE_TOL, n=DEFAULT_DIRECTIONS, **cc_options):
    """Per-parameter offsets ``(lo, hi)`` of ``d2``, ``d3``, ``c3`` keeping the hypothesis acceptable.

    A perturbed hypothesis is acceptable while every point stays inside at
    one standard error, Δ against the reference stays within ``2 delta0``,
    and some ``d1`` keeps it completely positive. Each parameter is moved
    alone; ``d1`` is reported as undetermined.
    """
    data = as_data(data)
    base = np.array(_hyp_params(hyp))
    if offenders(boundary_params(*base, n), data, 1.0):
        raise NotValidatedError("hypothesis is not validated at one standard error")
    if reference_region is None:
        reference_region = di_cc(data, **cc_options).region
    if delta0 is None:
        delta0 = _safe_delta(boundary_params(*base, n), reference_region)

    def ok(params):
        d2, d3, c3 = params
        if min(d2, d3) < 0.0 or max(d2, d3, abs(c3)) > 1.0 or d1_interval(d2, d3, c3) is None:
            return False
        region = boundary_params(d2, d3, c3, n)
        if offenders(region, data, 1.0):
            return False
        return _safe_delta(region, reference_region) <= 2.0 * delta0 + 1e-12

    out = {}
    for i, name in enumerate(("d2", "d3", "c3")):
        ends = []
        for sign in (-1.0, 1.0):
            e = np.zeros(3)
            e[i] = sign
            lo, hi = 0.0, 1.0
            if ok(base + hi * e):
                ends.append(sign * hi)
                continue
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if ok(base + mid * e):
                    lo = mid
                else:
                    hi = mid
            ends.append(sign * lo + 0.0)
        out[name] = tuple(ends)
    out["d1"] = None
    return out


# --- DI-CC -----------------------------------------------------------------


def d2_ceiling(d3, c3):
    """Largest ``d2`` admitting a completely positive ``d1`` (``None`` if none)."""
    r1 = (1.0 - d3) ** 2 - c3 * c3
    if r1 < -1e-12 or d3 > 1.0:
        return None
    r2 = (1.0 + d3) ** 2 - c3 * c3
    return 0.5 * (np.sqrt(max(r1, 0.0)) + np.sqrt(r2))


def symmetrize(data: CorrelationData) -> CorrelationData:
    """Add the input-swapped and outcome-flipped images of every point.

    Every correlation set is invariant under both maps, so containment is
    unchanged; the fit then no longer depends on how the data were labelled.
    """
    imgs = [data, data.swap_inputs(), data.flip_outcomes(), data.swap_inputs().flip_outcomes()]
    p = np.vstack([d.p for d in imgs])
    s = np.vstack([d.sigma for d in imgs])
    key = np.lexsort((s[:, 1], s[:, 0], p[:, 1], p[:, 0]))
    p, s = p[key], s[key]
    keep = np.ones(len(p), dtype=bool)
    keep[1:] = np.any(np.abs(np.diff(np.hstack([p, s]), axis=0)) > 1e-15, axis=1)
    return CorrelationData(p[keep], s[keep])


def screen(data: CorrelationData, k=0.0, n=SCREEN_DIRECTIONS) -> CorrelationData:
    """Drop points that can never be the binding constraint.

    A point is kept if, in some sampled direction, it comes within ``tol``
    of the outermost point. ``u . p`` changes by at most ``|p|`` per radian,
    so ``tol`` covers what the unsampled directions between can hide.
    """
    if len(data) <= 3:
        return data
    radius = float(np.max(np.hypot(data.p[:, 0], data.p[:, 1])) + k * np.max(np.hypot(data.sigma[:, 0], data.sigma[:, 1])))
    tol = 2.0 * radius * np.pi / n + 1e-12
    _, c, s = directions(n)
    vals = np.outer(data.p[:, 0], c) + np.outer(data.p[:, 1], s)
    if k:
        vals -= k * np.sqrt(np.outer(data.sigma[:, 0], c) ** 2 + np.outer(data.sigma[:, 1], s) ** 2)
    keep = (vals >= vals.max(axis=0) - tol).any(axis=1)
    return data.subset(keep)


class AreaObjective:
    """Smallest containing area as a function of ``(d3, s)`` with ``c3 = s (1 - d3)``."""

    def __init__(self, data: CorrelationData, k=0.0, slack=MEMBERSHIP_SLACK):
        self.data = data
        self.k = float(k)
        self.slack = slack
        self.calls = 0
        # bound on the angular derivative of a margin: |p| + k|sigma| + max |h'| (<= sqrt 2)
        self.lipschitz = 2.0 * (
            float(np.max(np.hypot(data.p[:, 0], data.p[:, 1])))
            + self.k * float(np.max(np.hypot(data.sigma[:, 0], data.sigma[:, 1])))
            + np.sqrt(2.0)
        )

    def max_margin(self, d2, d3, c3, n):
        """Largest exact margin; only points near the sampled maximum are refined."""
        d = self.data
        _, c, s = directions(n)
        h = kernels.support_values(c, s, d2, d3, c3)
        rough = kernels.max_margins(d.p[:, 0], d.p[:, 1], c, s, h, d.sigma[:, 0], d.sigma[:, 1], self.k)
        sel = rough >= rough.max() - self.lipschitz * np.pi / n
        m = kernels.exact_margins(
            d.p[sel, 0], d.p[sel, 1], d.sigma[sel, 0], d.sigma[sel, 1], self.k, d2, d3, c3, n
        )
        return float(m.max())

    @staticmethod
    def unpack(z):
        d3, s = (min(max(float(v), 0.0), 1.0) for v in z)
        return d3, s * (1.0 - d3)

    def min_d2(self, d3, c3, n, tol=ROOT_TOL):
        """Smallest ``d2`` whose region contains the data (margins fall monotonically in ``d2``)."""
        hi = d2_ceiling(d3, c3)
        if hi is None:
            return None

        def excess(d2):
            return self.max_margin(d2, d3, c3, n) - self.slack

        e_hi = excess(hi)
        if e_hi > 0.0:
            return None
        if excess(0.0) <= 0.0:
            return 0.0
        if e_hi == 0.0:
            return hi
        root = brentq(excess, 0.0, hi, xtol=tol, rtol=4 * np.finfo(float).eps)
        # step to the contained side of the root
        while excess(root) > 0.0 and root < hi:
            root = min(hi, root + tol)
        return root

    def __call__(self, z, n=SEARCH_DIRECTIONS):
        self.calls += 1
        d3, c3 = self.unpack(z)
        d2 = self.min_d2(d3, c3, n)
        if d2 is None:
            # infeasible corner of the (d3, s) square; larger than any area
            return 2.0
        return exact_area(d2, d3, c3) + TIE_BREAK * (c3 + d3)


def class_representative(d2, d3, c3, iters=60):
    """Member with the smallest ``c3`` among channels sharing this correlation set.

    When the tangent from the corner ``(1, 0)`` touches the elliptic arc
    before its end (``mu > 1``), the set depends on ``d2`` and
    ``kappa = c3^2 / (d2^2 - d3^2)`` alone. Moving along that family to
    smaller ``c3`` ends at ``mu = 1``, or earlier if complete positivity
    is lost there.

    For ``d2 <= d3`` the set does not depend on ``d2`` at all; the member
    with ``d2 = 0`` is returned. Margins are flat in ``d2`` there, so the
    fitted ``d2`` lands anywhere in ``[0, d3]`` up to rounding.
    """
    if d2 <= d3 + FLAT_TOL:
        return 0.0, d3, c3
    m = d2 * d2 - d3 * d3
    if c3 <= 0.0 or c3 * d2 * d2 >= m:
        return d2, d3, c3
    kappa = c3 * c3 / m

    def member(c):
        return np.sqrt(max(d2 * d2 - c * c / kappa, 0.0)), c

    def feasible(c):
        e3, cc = member(c)
        top = d2_ceiling(e3, cc)
        return top is not None and d2 <= top + 1e-12

    lo, hi = kappa * d2 * d2, c3
    if feasible(lo):
        return (d2, *member(lo))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return (d2, *member(hi))


def _local(obj, z0, n, step):
    z0 = np.asarray(z0, dtype=float)
    simplex = np.array([z0, z0 + [step, 0.0], z0 + [0.0, step]])
    simplex = np.clip(simplex, 0.0, 1.0)
    before = obj.calls
    r = minimize(
        obj, z0, args=(n,), method="Nelder-Mead", bounds=[(0.0, 1.0), (0.0, 1.0)],
        options={"xatol": 1e-9, "fatol": 1e-13, "maxfev": 800, "initial_simplex": simplex},
    )
    return np.clip(r.x, 0.0, 1.0), float(r.fun), obj.calls - before


def _local_job(args):
    return _local(*args)


def _run_local(obj, starts, n, step, workers):
    jobs = [(obj, z, n, step) for z in starts]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            out = list(ex.map(_local_job, jobs))
        # the workers counted on copies of the objective
        obj.calls += sum(r[2] for r in out)
    else:
        out = [_local_job(j) for j in jobs]
    return [(z, f) for z, f, _ in out]


def di_cc(data, restarts=200, seed=0, k=0.0, n=DEFAULT_DIRECTIONS, workers=None) -> CharacterizationResult:
    """Minimal-area D2 correlation set containing every data point.

    ``restarts`` random ``(d3, s)`` starts are scored; the best
    ``LOCAL_SOLVES`` are refined with margins sampled on
    ``SEARCH_DIRECTIONS`` directions and the best of those again on ``n``.
    Parameters are reported for :func:`class_representative` of the optimum.
    Local solves are independent, so ``workers`` does not change the result.
    """
    data = as_data(data)
    if len(data) == 0:
        raise ValueError("no data points")
    full = boundary_params(1.0, 1.0, 0.0, n)
    outside = np.flatnonzero(full.margins(data, k) > MEMBERSHIP_SLACK)
    if outside.size:
        pts = ", ".join(f"#{i} ({data.p[i, 0]:.4g}, {data.p[i, 1]:.4g})" for i in outside[:10])
        raise InfeasibleDataError(f"no physical channel contains {outside.size} point(s): {pts}", outside)

    work = screen(symmetrize(data), k)
    obj = AreaObjective(work, k)
    rng = np.random.default_rng(seed)
    starts = np.vstack([[[1.0, 0.0], [0.5, 1.0], [0.0, 0.5]], rng.uniform(0.0, 1.0, (max(restarts, 1), 2))])
    scores = np.array([obj(z) for z in starts])
    order = np.argsort(scores, kind="stable")[:LOCAL_SOLVES]
    workers = worker_count(workers)
    local = _run_local(obj, [starts[i] for i in order], SEARCH_DIRECTIONS, 0.05, workers)
    local.sort(key=lambda r: r[1])
    polished = _run_local(obj, [z for z, _ in local[:POLISH_SOLVES]], n, 1e-3, workers)
    z, _ = min(polished, key=lambda r: r[1])

    d3, c3 = obj.unpack(z)
    d2, d3, c3 = class_representative(obj.min_d2(d3, c3, n), d3, c3)
    region = boundary_params(d2, d3, c3, n)
    # containment of the original points is re-checked on every run
    worst = float(region.margins(data, k).max())
    if worst > 1e-6:
        raise RuntimeError(f"fitted region misses a data point by {worst:.3g}")
    d1r = d1_interval(d2, d3, c3)
    ch = D2Channel(0.5 * (d1r[0] + d1r[1]), d2, d3, c3)
    degenerate = region.area() <= DEGENERATE_AREA
    if degenerate:
        warnings.warn("minimal region is degenerate (zero area); data do not constrain the channel")
    try:
        report = equivalence_class(d2, d3, c3)
    except ZeroDivisionError:
        report = ClassReport(d2, d3, c3, float("nan"), False)
    return CharacterizationResult(report, region, ch, region.area(), d1r, degenerate, obj.calls, [r[0] for r in local])
