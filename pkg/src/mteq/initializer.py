"""Construct feasible starting points.

The recipe: find a positive vector ``u`` with ``A u^{m-1} > 0`` (the
all-ones vector when the tensor is diagonally dominant, otherwise iterate
the diagonal tensor splitting of ``A x^{m-1} = r`` for a positive target
``r``), then inflate it by the smallest factor ``t >= 1`` such that
``t^{m-1} A u^{m-1} >= eps * b`` holds strictly.  The inflated point lies
inside the feasible region by construction, so the solvers can start
descending immediately.

The splitting target ``r`` is the right-hand side itself whenever it is
strictly positive, and the all-ones vector otherwise.  Sweeping against
the actual right-hand side keeps the certificate shaped like the solution,
which is what keeps the inflated start close when ``b`` spans many orders
of magnitude; with zero components in ``b`` the all-ones target is used
instead so the positivity margin below stays meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import MTeqProblem, SolverConfig, in_feasible, in_feasible_split
from .tensor import Tensor, hadamard_power

__all__ = [
    "InitializationError",
    "InitialPoint",
    "jacobi_step",
    "find_certificate",
    "initial_point",
]

MAX_SWEEPS = 100_000

# Positivity of A x^{m-1} is only a usable certificate when it clears the
# noise floor and has some margin relative to the largest component:
# stopping at the first sign change produces inflation factors that grow
# without bound as the margin shrinks.
POSITIVITY_MARGIN = 0.1


def _noise_floor(A: Tensor) -> float:
    return 1e-12 * max(1.0, A.max_abs())


class InitializationError(RuntimeError):
    """No feasible starting point could be constructed."""


@dataclass(frozen=True)
class InitialPoint:
    """Feasible start: ``x0`` with its transform ``y0 = x0^{m-1}``.

    ``iterations`` counts splitting sweeps spent finding the certificate
    vector ``u`` (0 when the all-ones vector already works).
    """

    x0: np.ndarray
    y0: np.ndarray
    iterations: int
    u: np.ndarray


def jacobi_step(A: Tensor, rhs, x) -> np.ndarray:
    """One sweep of the diagonal tensor splitting for ``A x^{m-1} = rhs``.

    With ``B = diag(a_{i..i}) I - A`` (entrywise nonnegative for a Z-tensor)
    the update is ``x_i <- ((rhs_i + (B x^{m-1})_i) / a_{i..i})^{1/(m-1)}``,
    which maps positive vectors to positive vectors when ``rhs > 0``.
    """
    rhs = np.asarray(rhs, dtype=float)
    x = np.asarray(x, dtype=float)
    d = A.diagonal()
    if np.any(d <= 0.0):
        raise InitializationError(
            "tensor diagonal is not strictly positive; the splitting is unusable")
    m = A.order
    num = rhs + d * hadamard_power(x, m - 1) - A.apply(x)
    if np.any(num <= 0.0):
        raise InitializationError("splitting step left the positive cone")
    return hadamard_power(num / d, 1.0 / (m - 1))


def find_certificate(A: Tensor, rhs=None, max_sweeps=MAX_SWEEPS):
    """Positive ``u`` with ``A u^{m-1} > 0``, found by splitting sweeps.

    Returns ``(u, sweeps)``.  Sweeps solve ``A x^{m-1} = rhs`` approximately
    (all-ones target when ``rhs`` is omitted; an explicit target must be
    strictly positive).  The loop stops once ``A x^{m-1}`` clears both the
    rounding noise floor and a fixed fraction of the target on every
    component, so the certificate has a usable margin.  Raises
    :class:`InitializationError` when the cap is exhausted, which is the
    typical symptom of a tensor that is not a strong M-tensor.
    """
    e = np.ones(A.dim)
    if rhs is None:
        target = e
    else:
        target = np.asarray(rhs, dtype=float)
        if target.shape != (A.dim,):
            raise ValueError(f"target length {target.shape} does not match dimension {A.dim}")
        if not np.all(np.isfinite(target)) or np.any(target <= 0.0):
            raise ValueError("splitting target must be finite and strictly positive")
    x = e
    floor = np.maximum(_noise_floor(A), POSITIVITY_MARGIN * target)
    for sweep in range(int(max_sweeps) + 1):
        ax = A.apply(x)
        if np.all(ax > floor):
            return x, sweep
        x = jacobi_step(A, target, x)
    raise InitializationError(
        f"no positivity certificate after {max_sweeps} splitting sweeps; "
        "the tensor is likely not a strong M-tensor")


def initial_point(p: MTeqProblem, cfg: SolverConfig | None = None) -> InitialPoint:
    """Build a feasible starting point for either solver.

    Raises :class:`InitializationError` when no certificate vector exists
    within the sweep cap or the constructed point fails the feasibility
    check it was built to satisfy.
    """
    cfg = cfg or SolverConfig()
    part = p.partition
    if part.i_plus.size == 0:
        raise InitializationError(
            "right-hand side has no positive components; only x = 0 could solve this")
    if p.A.is_diag_dominant():
        # Row sums are positive, so the all-ones vector certifies directly.
        u, sweeps = np.ones(p.n), 0
    else:
        target = p.b if part.i_zero.size == 0 else None
        u, sweeps = find_certificate(p.A, rhs=target)
    au = p.A.apply(u)
    if au.min() <= 0.0:
        raise InitializationError("certificate vector lost positivity of its image")
    m = p.m
    # Smallest inflation with t^{m-1} (A u^{m-1})_i >= eps b_i on every
    # component; 1.01 keeps the inequalities strict under rounding.
    t = max(1.0, float(np.max(cfg.eps * p.b / au)) ** (1.0 / (m - 1))) * 1.01
    x0 = t * u
    y0 = hadamard_power(x0, m - 1)
    if part.i_zero.size:
        ok = in_feasible_split(p, y0, cfg.eps, cfg.eps2)
    else:
        ok = in_feasible(p, y0, cfg.eps)
    if not ok:
        raise InitializationError("constructed point failed the feasibility check")
    return InitialPoint(x0=x0, y0=y0, iterations=sweeps, u=u)
