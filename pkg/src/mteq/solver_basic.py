"""Damped Newton iteration for strictly positive right-hand sides.

Each step solves the Newton system of the transformed residual and then
backtracks along the direction until the trial point stays strictly
positive, remains inside the feasible region and achieves the descent
condition

    ||f(y + alpha d)||^2 <= (1 - 2 sigma alpha) ||f(y)||^2.

Feasibility of every iterate is what keeps the Jacobian an M-matrix and
the iteration well defined all the way to the solution.
"""

from __future__ import annotations

import time
from typing import NamedTuple

import numpy as np

from .linalg import SingularMatrixError, lu_solve
from .model import MTeqProblem, SolverConfig, in_feasible, residual, residual_jacobian
from .report import IterationRecord, SolveReport, SolveStatus
from .tensor import hadamard_power

__all__ = [
    "LineSearchResult",
    "newton_direction",
    "line_search_basic",
    "solve_positive",
]


class LineSearchResult(NamedTuple):
    alpha: float
    y_next: np.ndarray
    f_next: np.ndarray
    residual_norm: float
    backtracks: int


def newton_direction(p: MTeqProblem, y, f=None, J=None) -> np.ndarray:
    """Solve ``J(y) d = -f(y)`` for the Newton direction."""
    if f is None:
        f = residual(p, y)
    if J is None:
        J = residual_jacobian(p, y)
    return lu_solve(J, -f)


def line_search_basic(p: MTeqProblem, y, d, cfg: SolverConfig,
                      current_norm=None) -> LineSearchResult | None:
    """Largest ``rho**i`` step that keeps the trial feasible and descending.

    Returns ``None`` when no acceptable steplength is found within
    ``cfg.max_backtracks`` backtracks.
    """
    if current_norm is None:
        current_norm = float(np.linalg.norm(residual(p, y)))
    bound_base = current_norm * current_norm
    alpha = 1.0
    for i in range(cfg.max_backtracks + 1):
        yt = y + alpha * d
        if np.all(yt > 0.0):
            ft = residual(p, yt)
            if in_feasible(p, yt, cfg.eps, g=ft + p.b):
                rt = float(np.linalg.norm(ft))
                if rt * rt <= (1.0 - 2.0 * cfg.sigma * alpha) * bound_base:
                    return LineSearchResult(alpha, yt, ft, rt, i)
        alpha *= cfg.rho
    return None


def _stop_threshold(p: MTeqProblem, cfg: SolverConfig) -> float:
    if cfg.relative_stop:
        return cfg.eta * float(np.linalg.norm(p.b))
    return cfg.eta


def solve_positive(p: MTeqProblem, x0, cfg: SolverConfig | None = None) -> SolveReport:
    """Solve ``A x^{m-1} = b`` for ``b > 0`` starting from a feasible ``x0``.

    The starting point must be strictly positive with ``A x0^{m-1} >=
    eps * b``; otherwise the report comes back with status
    ``BAD_INITIAL_POINT``.  Right-hand sides with zero components belong to
    :func:`~mteq.solver_extended.solve_nonnegative`.
    """
    cfg = cfg or SolverConfig()
    if p.partition.i_zero.size:
        raise ValueError(
            "right-hand side has zero components; use solve_nonnegative")
    x0 = np.asarray(x0, dtype=float)
    threshold = _stop_threshold(p, cfg)
    if x0.shape != (p.n,) or np.any(x0 <= 0.0):
        return SolveReport(SolveStatus.BAD_INITIAL_POINT, x0, x0, [],
                           float("nan"), float("nan"),
                           stop_threshold=threshold,
                           message="starting point must be strictly positive")
    y = hadamard_power(x0, p.m - 1)
    f = residual(p, y)
    r = float(np.linalg.norm(f))
    if not in_feasible(p, y, cfg.eps, g=f + p.b):
        return SolveReport(SolveStatus.BAD_INITIAL_POINT, x0, y, [], r, r,
                           stop_threshold=threshold,
                           message="starting point outside the feasible region")
    r0 = r
    trace: list[IterationRecord] = []
    iterates = [y.copy()]
    status = SolveStatus.ITERATION_CAP
    message = ""
    for k in range(1, cfg.max_iter + 1):
        if r <= threshold:
            status = SolveStatus.CONVERGED
            break
        tic = time.perf_counter()
        try:
            d = newton_direction(p, y, f=f)
        except SingularMatrixError as exc:
            status = SolveStatus.LINE_SEARCH_FAILURE
            message = f"singular Jacobian at iteration {k}: {exc}"
            break
        step = line_search_basic(p, y, d, cfg, current_norm=r)
        if step is None:
            status = SolveStatus.LINE_SEARCH_FAILURE
            message = f"line search exhausted {cfg.max_backtracks} backtracks at iteration {k}"
            break
        assert step.residual_norm <= r
        y, f, r = step.y_next, step.f_next, step.residual_norm
        trace.append(IterationRecord(k, step.alpha, r, step.backtracks, True,
                                     (time.perf_counter() - tic) * 1e3))
        iterates.append(y.copy())
    else:
        if r <= threshold:
            status = SolveStatus.CONVERGED
    x = hadamard_power(y, 1.0 / (p.m - 1))
    return SolveReport(status, x, y, trace, r, r0, iterates,
                       stop_threshold=threshold, message=message)
