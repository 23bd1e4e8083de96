"""Inequality-constrained local maximization with multi-start.

Local solves use scipy's SLSQP. The first-order optimality residual is
recomputed afterwards from non-negative multipliers on the active set,
since SLSQP does not return them.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize, nnls

FEAS_TOL = 1e-7
ACTIVE_TOL = 1e-6
KKT_TOL = 1e-6
FD_STEP = 1e-7


class InfeasibleError(RuntimeError):
    pass


def _fd_grad(fun, x, h=FD_STEP):
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(fun(x))
    g = np.empty((f0.size, x.size))
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[:, i] = (np.atleast_1d(fun(x + e)) - np.atleast_1d(fun(x - e))) / (2.0 * h)
    return g


@dataclass
class ObjectiveProblem:
    """Maximize ``objective(x)`` subject to ``constraints(x) >= 0`` and box bounds.

    ``gradient`` and ``constraint_jac`` are optional; central differences
    are used when absent. ``constraints`` returns a 1-D array.
    """

    dim: int
    objective: object
    x0: np.ndarray
    gradient: object = None
    constraints: object = None
    constraint_jac: object = None
    bounds: list = None

    def grad(self, x):
        if self.gradient is not None:
            return np.asarray(self.gradient(x), dtype=float)
        return _fd_grad(self.objective, x)[0]

    def cons(self, x):
        if self.constraints is None:
            return np.empty(0)
        return np.atleast_1d(np.asarray(self.constraints(x), dtype=float))

    def cons_jac(self, x):
        if self.constraints is None:
            return np.empty((0, self.dim))
        if self.constraint_jac is not None:
            return np.atleast_2d(np.asarray(self.constraint_jac(x), dtype=float))
        return _fd_grad(self.constraints, x)

    def box(self, x):
        """Bound constraints as ``(values >= 0, jacobian)``."""
        vals, rows = [], []
        for i, (lo, hi) in enumerate(self.bounds or []):
            if lo is not None:
                vals.append(x[i] - lo)
                rows.append(np.eye(self.dim)[i])
            if hi is not None:
                vals.append(hi - x[i])
                rows.append(-np.eye(self.dim)[i])
        return np.array(vals), np.array(rows).reshape(-1, self.dim)


@dataclass
class FitResult:
    x: np.ndarray
    value: float
    max_violation: float
    restart: int = 0
    iterations: int = 0
    kkt_residual: float = np.nan
    success: bool = True
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def feasible(self):
        return self.max_violation <= FEAS_TOL


def kkt_residual(p: ObjectiveProblem, x) -> float:
    """Stationarity residual ``|grad f + J_active^T lam|`` with ``lam >= 0``, scaled by ``max(1, |grad f|)``."""
    g = p.grad(x)
    c = p.cons(x)
    jc = p.cons_jac(x)
    bv, bj = p.box(x)
    vals = np.concatenate([c, bv])
    jac = np.vstack([jc, bj]) if vals.size else np.empty((0, p.dim))
    act = vals <= ACTIVE_TOL
    if not act.any():
        res = float(np.linalg.norm(g))
    else:
        _, res = nnls(jac[act].T, -g)
    return float(res) / max(1.0, float(np.linalg.norm(g)))


def constrained_maximize(p: ObjectiveProblem, maxiter=500, ftol=1e-14) -> FitResult:
    cons = []
    if p.constraints is not None:
        cons.append({"type": "ineq", "fun": p.cons, "jac": p.cons_jac})
    x0 = np.asarray(p.x0, dtype=float)
    res = minimize(
        lambda x: -float(p.objective(x)),
        x0,
        jac=lambda x: -p.grad(x),
        method="SLSQP",
        bounds=p.bounds,
        constraints=cons,
        options={"maxiter": maxiter, "ftol": ftol},
    )
    x = np.asarray(res.x, dtype=float)
    if not np.all(np.isfinite(x)):
        x = x0
    viol = max(0.0, -float(np.min(np.concatenate([p.cons(x), p.box(x)[0], [0.0]]))))
    out = FitResult(
        x=x,
        value=float(p.objective(x)),
        max_violation=viol,
        iterations=int(res.nit),
        message=str(res.message),
    )
    out.kkt_residual = kkt_residual(p, x)
    if viol > FEAS_TOL:
        out.success = False
        out.message = f"infeasible: constraint violation {viol:.3g}"
    elif out.kkt_residual > KKT_TOL:
        out.success = False
        out.message = f"stopped with KKT residual {out.kkt_residual:.3g} after {out.iterations} iterations"
    return out


def _solve_one(args):
    problem, start, index, maxiter = args
    r = constrained_maximize(replace(problem, x0=np.asarray(start, dtype=float)), maxiter=maxiter)
    r.restart = index
    return r


def worker_count(workers=None):
    if workers is None:
        workers = int(os.environ.get("DICHANNEL_THREADS", "1") or 1)
    return max(1, int(workers))


def best_of(results):
    """Highest objective among feasible results; lowest restart index wins ties."""
    ok = [r for r in results if r.feasible and np.isfinite(r.value)]
    if not ok:
        raise InfeasibleError("no restart reached a feasible point")
    return max(ok, key=lambda r: (r.value, -r.restart))


def multistart(problem: ObjectiveProblem, starts, workers=None, maxiter=500):
    """Run a local solve from every start and return ``(best, all_results)``.

    Each solve depends only on its start, so the outcome does not depend on
    the number of workers.
    """
    jobs = [(problem, s, i, maxiter) for i, s in enumerate(starts)]
    workers = worker_count(workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_solve_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_solve_one(j) for j in jobs]
    return best_of(results), results
