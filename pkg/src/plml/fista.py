"""Accelerated projected-gradient (FISTA) with backtracking curvature search.

One engine drives both solvers in this package: the simplex-constrained
weight problem and the box-constrained dual of the basis-metric problem.
The caller supplies a fused objective/gradient callable and a projection
onto its feasible set.

The step-size search keeps a curvature estimate beta that only ever
doubles: a step is accepted once the objective at the candidate is no
worse than the quadratic surrogate

    f(y) + <grad f(y), x - y> + (beta / 2) * ||x - y||^2.

Acceleration makes the objective non-monotone across iterations, so the
engine remembers the best iterate seen (including the start point).
Convergence is declared on the projected-gradient residual

    ||x - P(x - grad f(x) / beta)|| / max(1, ||x||),

and a run that exhausts max_iter returns the best iterate instead, flagged
converged=False.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from .errors import SolverError

# Relative slack on the surrogate test; absorbs rounding once beta is far
# above the true curvature so the doubling loop cannot run away.
_SURROGATE_SLACK = 1e-12

# If beta passes this the objective/gradient pair is inconsistent.
_BETA_CAP = 1e30


class TraceRow(NamedTuple):
    iteration: int
    objective: float
    beta: float
    residual: float


@dataclass(frozen=True)
class FistaState:
    """Snapshot handed to callbacks after each accepted iteration."""

    x: np.ndarray          # current feasible iterate
    momentum: np.ndarray   # extrapolation point the step came from
    t: float
    beta: float
    iteration: int
    objective: float
    residual: float


@dataclass(frozen=True)
class FistaResult:
    x: np.ndarray
    objective: float
    residual: float
    iterations: int
    beta: float
    converged: bool


def fista(
    x0,
    fun_grad: Callable,
    project: Callable,
    *,
    tol: float = 1e-5,
    max_iter: int = 1000,
    callback: Optional[Callable[[FistaState], None]] = None,
    trace: Optional[List[TraceRow]] = None,
) -> FistaResult:
    """Minimize fun over project's feasible set starting from feasible x0.

    fun_grad(x) must return (objective, gradient) with the gradient shaped
    like x. Raises SolverError on non-finite objectives or a runaway
    curvature search.
    """
    x_prev = np.asarray(x0, dtype=float)
    if not np.all(np.isfinite(x_prev)):
        raise SolverError("starting point contains non-finite values")
    y = x_prev
    t = 1.0
    beta = 1.0
    f_y, g_y = fun_grad(y)
    _require_finite(f_y, "objective at the starting point")
    best_f, best_x = f_y, x_prev

    residual = math.inf
    iteration = 0
    for iteration in range(1, max_iter + 1):
        x = project(y - g_y / beta)
        f_x, g_x = fun_grad(x)
        while f_x > _surrogate(f_y, g_y, x, y, beta):
            beta *= 2.0
            if beta > _BETA_CAP:
                raise SolverError(
                    "curvature search diverged; gradient is inconsistent "
                    "with the objective"
                )
            x = project(y - g_y / beta)
            f_x, g_x = fun_grad(x)
        _require_finite(f_x, f"objective at iteration {iteration}")

        residual = _pg_residual(x, g_x, beta, project)
        if f_x < best_f:
            best_f, best_x = f_x, x
        if callback is not None or trace is not None:
            state = FistaState(
                x=x, momentum=y, t=t, beta=beta,
                iteration=iteration, objective=f_x, residual=residual,
            )
            if trace is not None:
                trace.append(
                    TraceRow(iteration, float(f_x), float(beta), float(residual))
                )
            if callback is not None:
                callback(state)
        if residual <= tol:
            return FistaResult(
                x=x, objective=float(f_x), residual=float(residual),
                iterations=iteration, beta=float(beta), converged=True,
            )

        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = x + ((t - 1.0) / t_next) * (x - x_prev)
        x_prev = x
        t = t_next
        f_y, g_y = fun_grad(y)
        _require_finite(f_y, f"objective at extrapolation {iteration}")

    # Iteration budget exhausted: hand back the best point seen, with the
    # residual evaluated there so the result is self-consistent.
    if best_x is not x_prev:
        _, g_best = fun_grad(best_x)
        residual = _pg_residual(best_x, g_best, beta, project)
    return FistaResult(
        x=best_x, objective=float(best_f), residual=float(residual),
        iterations=iteration, beta=float(beta), converged=False,
    )


def _surrogate(f_y, g_y, x, y, beta):
    diff = x - y
    val = f_y + float(np.vdot(g_y, diff)) + 0.5 * beta * float(np.vdot(diff, diff))
    return val + _SURROGATE_SLACK * max(1.0, abs(val))


def _pg_residual(x, g_x, beta, project):
    step = project(x - g_x / beta)
    return float(np.linalg.norm((x - step).ravel())
                 / max(1.0, np.linalg.norm(x.ravel())))


def _require_finite(value, what: str):
    if not math.isfinite(value):
        raise SolverError(f"{what} is not finite ({value})")
