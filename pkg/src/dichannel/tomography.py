"""Maximum-likelihood process tomography.

Both fits maximize ``sum_i f_i log p_i + (1 - f_i) log(1 - p_i)`` over
binary settings, with ``p_i`` the outcome-1 probability of the channel
``(A, b)`` on input state ``v_i`` and effect ``t_i I + s_i . sigma``:
``p_i = t_i + s_i . (A v_i + b)``. Probabilities are clamped below at
``PROB_FLOOR`` inside the logarithm.

The D2-restricted fit has ten parameters ``(m, n, d, c3)`` with
``A = V diag(d) U^T``, ``b = V (0, 0, c3)``, ``V = rot_exp(m)``,
``U = rot_exp(n)``; complete positivity enters through four smooth
inequalities equivalent to the two closed-form conditions. The general
fit has twelve parameters ``(A, b)`` and requires the smallest Choi
eigenvalue to be non-negative.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channels import (
    D2Channel,
    QubitChannel,
    canonicalize,
    choi_affine,
    is_cp_explicit,
)
from .linalg import rot_exp, rot_exp_derivatives
from .optimize import FitResult, InfeasibleError, ObjectiveProblem, best_of, multistart

PROB_FLOOR = 1e-12
PSD_TOL = 1e-9
DEGENERATE_TOL = 1e-7


class LogLikelihood:
    """Binary-outcome log-likelihood of an affine channel, with its gradient."""

    def __init__(self, f, settings):
        if len(settings) != len(f):
            raise ValueError("frequencies and settings differ in length")
        if len(settings) == 0:
            raise ValueError("no settings to fit")
        self.v = np.array([s.state for s in settings], dtype=float)
        self.t = np.array([s.effect.t for s in settings], dtype=float)
        self.s = np.array([s.effect.s for s in settings], dtype=float)
        self.f = np.asarray(f, dtype=float)

    def probabilities(self, a, b):
        return self.t + np.einsum("ik,ik->i", self.s, self.v @ np.asarray(a).T + np.asarray(b))

    def value(self, a, b):
        p = self.probabilities(a, b)
        p1 = np.maximum(p, PROB_FLOOR)
        p2 = np.maximum(1.0 - p, PROB_FLOOR)
        return float(np.sum(self.f * np.log(p1) + (1.0 - self.f) * np.log(p2)))

    def gradient(self, a, b):
        """``(dL/dA, dL/db)``."""
        p = self.probabilities(a, b)
        w = np.where(p > PROB_FLOOR, self.f / np.maximum(p, PROB_FLOOR), 0.0)
        w -= np.where(1.0 - p > PROB_FLOOR, (1.0 - self.f) / np.maximum(1.0 - p, PROB_FLOOR), 0.0)
        ws = w[:, None] * self.s
        return ws.T @ self.v, ws.sum(axis=0)

    def __call__(self, ch):
        if isinstance(ch, D2Channel):
            ch = ch.affine()
        return self.value(ch.A, ch.b)


# --- D2-restricted fit -----------------------------------------------------


def d2_affine(x):
    m, n, d, c3 = x[0:3], x[3:6], x[6:9], x[9]
    vr = rot_exp(m)
    ur = rot_exp(n)
    return vr @ np.diag(d) @ ur.T, vr @ np.array([0.0, 0.0, c3])


def cp_constraints(d, c3):
    """Smooth form of the two complete-positivity inequalities (all must be >= 0)."""
    d1, d2, d3 = d
    return np.array([
        1.0 - d3,
        (1.0 - d3) ** 2 - (d1 - d2) ** 2 - c3 * c3,
        1.0 + d3,
        (1.0 + d3) ** 2 - (d1 + d2) ** 2 - c3 * c3,
    ])


def cp_constraints_jac(d, c3):
    d1, d2, d3 = d
    return np.array([
        [0.0, 0.0, -1.0, 0.0],
        [-2.0 * (d1 - d2), 2.0 * (d1 - d2), -2.0 * (1.0 - d3), -2.0 * c3],
        [0.0, 0.0, 1.0, 0.0],
        [-2.0 * (d1 + d2), -2.0 * (d1 + d2), 2.0 * (1.0 + d3), -2.0 * c3],
    ])


class D2Objective:
    """Log-likelihood in the ten D2 parameters (picklable for worker pools)."""

    def __init__(self, ll: LogLikelihood):
        self.ll = ll

    def __call__(self, x):
        return self.ll.value(*d2_affine(x))

    def gradient(self, x):
        m, n, d, c3 = x[0:3], x[3:6], x[6:9], x[9]
        vr, ur = rot_exp(m), rot_exp(n)
        dv, du = rot_exp_derivatives(m), rot_exp_derivatives(n)
        dm = np.diag(d)
        ga, gb = self.ll.gradient(vr @ dm @ ur.T, vr @ np.array([0.0, 0.0, c3]))
        out = np.empty(10)
        for k in range(3):
            out[k] = np.sum(ga * (dv[k] @ dm @ ur.T)) + gb @ (dv[k][:, 2] * c3)
            out[3 + k] = np.sum(ga * (vr @ dm @ du[k].T))
        out[6:9] = np.einsum("ij,ik,jk->k", ga, vr, ur)
        out[9] = gb @ vr[:, 2]
        return out

    @staticmethod
    def constraints(x):
        return cp_constraints(x[6:9], x[9])

    @staticmethod
    def constraint_jac(x):
        j = np.zeros((4, 10))
        j[:, 6:10] = cp_constraints_jac(x[6:9], x[9])
        return j


D2_BOUNDS = [(-2 * np.pi, 2 * np.pi)] * 6 + [(-1.0, 1.0)] * 4


def d2_starts(rng, count):
    """Uniform rotation vectors in ``[-pi, pi]^3``; ``d`` in ``[0, 1]^3`` and ``c3`` in ``[-1, 1]`` filtered to CP."""
    out = []
    while len(out) < count:
        d = rng.uniform(0.0, 1.0, 3)
        c3 = rng.uniform(-1.0, 1.0)
        if not is_cp_explicit(D2Channel(*d, c3), slack=0.0):
            continue
        out.append(np.concatenate([rng.uniform(-np.pi, np.pi, 6), d, [c3]]))
    return out


def d2_problem(ll: LogLikelihood, x0=None):
    obj = D2Objective(ll)
    return ObjectiveProblem(
        dim=10,
        objective=obj,
        x0=np.zeros(10) if x0 is None else x0,
        gradient=obj.gradient,
        constraints=obj.constraints,
        constraint_jac=obj.constraint_jac,
        bounds=D2_BOUNDS,
    )


def loglik_for(freqs, settings=None) -> LogLikelihood:
    """Log-likelihood of a frequency table; settings recorded with zero shots are dropped.

    Exact tables (all shots zero) are used as they are.
    """
    settings = freqs.settings if settings is None else settings
    shots = np.asarray(freqs.shots)
    keep = np.ones(len(settings), dtype=bool)
    if shots.size and np.any(shots > 0):
        keep = shots > 0
        if not keep.all():
            warnings.warn(f"excluding {int((~keep).sum())} settings with zero shots")
    return LogLikelihood(np.asarray(freqs.f)[keep], [s for s, k in zip(settings, keep) if k])


@dataclass
class D2Fit:
    channel: D2Channel
    u: np.ndarray
    v: np.ndarray
    loglik: float
    result: FitResult
    restarts: int
    seed: int

    def affine(self):
        return QubitChannel(*d2_affine(self.result.x))


def fit_d2(freqs, settings=None, restarts=1000, seed=0, workers=None) -> D2Fit:
    ll = loglik_for(freqs, settings)
    rng = np.random.default_rng(seed)
    best, _ = multistart(d2_problem(ll), d2_starts(rng, restarts), workers)
    a, b = d2_affine(best.x)
    ch, u, v = canonicalize(QubitChannel(a, b))
    return D2Fit(ch, u, v, best.value, best, restarts, seed)


def mle_d2(freqs, settings=None, restarts=1000, seed=0, workers=None):
    """D2-restricted maximum-likelihood fit.

    Returns ``(D2Channel, u, v, loglik)`` in canonical form, so that the
    fitted affine map is ``A = v diag(d) u.T``, ``b = v (0, 0, c3)``.
    """
    fit = fit_d2(freqs, settings, restarts, seed, workers)
    return fit.channel, fit.u, fit.v, fit.loglik


# --- general fit -----------------------------------------------------------


def _choi_basis():
    e0 = choi_affine(np.zeros((3, 3)), np.zeros(3))
    basis = []
    for p in range(12):
        x = np.zeros(12)
        x[p] = 1.0
        basis.append(choi_affine(x[:9].reshape(3, 3), x[9:]) - e0)
    return e0, np.array(basis)


CHOI_E0, CHOI_BASIS = _choi_basis()


def choi_of(x):
    return CHOI_E0 + np.tensordot(x, CHOI_BASIS, axes=1)


class GeneralObjective:
    def __init__(self, ll: LogLikelihood):
        self.ll = ll

    def __call__(self, x):
        return self.ll.value(x[:9].reshape(3, 3), x[9:])

    def gradient(self, x):
        ga, gb = self.ll.gradient(x[:9].reshape(3, 3), x[9:])
        return np.concatenate([ga.ravel(), gb])

    @staticmethod
    def constraints(x):
        return np.array([np.linalg.eigvalsh(choi_of(x))[0]])

    @staticmethod
    def constraint_jac(x):
        # average over the near-degenerate bottom eigenspace: a symmetric subgradient
        w, q = np.linalg.eigh(choi_of(x))
        sel = q[:, w <= w[0] + DEGENERATE_TOL]
        g = np.einsum("ak,pab,bk->p", sel.conj(), CHOI_BASIS, sel).real / sel.shape[1]
        return g[None, :]


def general_problem(ll, x0):
    obj = GeneralObjective(ll)
    return ObjectiveProblem(
        dim=12,
        objective=obj,
        x0=x0,
        gradient=obj.gradient,
        constraints=obj.constraints,
        constraint_jac=obj.constraint_jac,
        bounds=[(-1.0, 1.0)] * 12,
    )


@dataclass
class GeneralFit:
    channel: QubitChannel
    loglik: float
    result: FitResult
    restarts: int
    seed: int


def mle_general(freqs, settings=None, restarts=20, seed=0, start=None, workers=None):
    """Unrestricted fit over ``(A, b)``; returns ``(QubitChannel, loglik)``.

    ``start`` (a channel or a :class:`D2Fit`) is always the first start
    and is kept as a candidate, so the result is never worse than it.
    """
    fit = fit_general(freqs, settings, restarts, seed, start, workers)
    return fit.channel, fit.loglik


def fit_general(freqs, settings=None, restarts=20, seed=0, start=None, workers=None) -> GeneralFit:
    ll = loglik_for(freqs, settings)
    rng = np.random.default_rng(seed)
    starts = []
    if start is not None:
        s = start.affine() if isinstance(start, (D2Channel, D2Fit)) else start
        starts.append(np.concatenate([s.A.ravel(), s.b]))
    for x in d2_starts(rng, max(0, restarts - len(starts))):
        a, b = d2_affine(x)
        starts.append(np.concatenate([a.ravel(), b]))
    problem = general_problem(ll, starts[0])
    _, results = multistart(problem, starts, workers)
    if start is not None:
        x = starts[0]
        viol = max(0.0, -float(GeneralObjective.constraints(x)[0]))
        results.append(FitResult(x=x, value=problem.objective(x), max_violation=viol, restart=len(starts)))
    try:
        best = best_of(results)
    except InfeasibleError:
        raise InfeasibleError("general fit: all restarts infeasible") from None
    return GeneralFit(QubitChannel(best.x[:9].reshape(3, 3), best.x[9:]), best.value, best, restarts, seed)


# --- fidelity --------------------------------------------------------------


def _psd_sqrt(m):
    w, q = np.linalg.eigh(m)
    if w[0] < -PSD_TOL:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {w[0]:.3g})")
    w = np.clip(w, 0.0, None)
    return (q * np.sqrt(w)) @ q.conj().T


def choi_fidelity(ch1, ch2) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(r) s sqrt(r)))^2`` of the normalized Choi states."""
    mats = []
    for ch in (ch1, ch2):
        if isinstance(ch, D2Channel):
            ch = ch.affine()
        j = ch.choi()
        mats.append(0.5 * (j + j.conj().T) / np.trace(j).real)
    r = _psd_sqrt(mats[0])
    inner = r @ mats[1] @ r
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.clip(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2, 0.0, 1.0))
