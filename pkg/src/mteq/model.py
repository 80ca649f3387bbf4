"""Problem container and the transformed residual map with its feasibility
tests.

The solvers work in the transformed variable ``y = x^{m-1}`` (componentwise
power), where the residual

    f(y) = A (y^{1/(m-1)})^{m-1} - b

has a Jacobian that is an M-matrix on the feasible region.  Feasibility of
a point means ``A x^{m-1} >= eps * b`` componentwise; for right-hand sides
with zero components the zero-indexed rows instead compare against a
threshold built from the Jacobian blocks of the positive-indexed rows.

All strict inequalities from the underlying theory are implemented with an
additive slack of ``1e-14 * (1 + max|b|)``: exact float comparisons would
otherwise produce spurious line-search failures at points that are feasible
in exact arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import SingularMatrixError, lu_solve, submatrix
from .tensor import Tensor, hadamard_power

__all__ = [
    "IndexPartition",
    "MTeqProblem",
    "SolverConfig",
    "AssumptionReport",
    "partition_indices",
    "make_problem",
    "scale_problem",
    "feasibility_slack",
    "residual",
    "residual_jacobian",
    "in_feasible",
    "in_feasible_split",
    "zero_block_threshold",
    "check_assumption",
]


@dataclass(frozen=True)
class IndexPartition:
    """Indices of strictly positive and exactly zero entries of ``b``."""

    i_plus: np.ndarray
    i_zero: np.ndarray


def partition_indices(b) -> IndexPartition:
    b = np.asarray(b, dtype=float)
    if np.any(b < 0.0):
        raise ValueError("right-hand side must be nonnegative")
    return IndexPartition(np.flatnonzero(b > 0.0), np.flatnonzero(b == 0.0))


@dataclass
class SolverConfig:
    """Knobs shared by both solvers.

    ``eps``/``eps2`` shape the feasible region, ``sigma``/``rho`` drive the
    backtracking line search, ``eta`` is the stopping tolerance on the
    Euclidean residual norm (relative to ``||b||`` when ``relative_stop``
    is set), and ``c`` scales the retried near-unit steplength of the
    extended line search.
    """

    eps: float = 0.1
    eps2: float = 0.05
    sigma: float = 0.1
    rho: float = 0.5
    eta: float = 1e-10
    c: float = 1.0
    max_iter: int = 300
    max_backtracks: int = 60
    relative_stop: bool = False

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if not 0.0 < self.eps2 < self.eps:
            raise ValueError("eps2 must lie in (0, eps)")
        if not 0.0 < self.sigma < 0.5:
            raise ValueError("sigma must lie in (0, 1/2)")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")
        if self.c <= 0.0:
            raise ValueError("c must be positive")
        if self.max_iter < 1 or self.max_backtracks < 1:
            raise ValueError("iteration limits must be at least 1")


@dataclass
class MTeqProblem:
    """A multilinear equation ``A x^{m-1} = b`` with Z-sign structure.

    ``omega`` records the factor the raw data was divided by (see
    :func:`scale_problem`); iterates are invariant under that scaling, so
    solutions of the stored system solve the original one.  ``certificate``
    is a positive vector ``u`` with ``A u^{m-1} > 0`` when one is known,
    which certifies the strong M-tensor property.  Treat instances as
    immutable after construction.
    """

    A: Tensor
    b: np.ndarray
    omega: float = 1.0
    partition: IndexPartition = field(default=None)
    certificate: np.ndarray | None = None

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        if self.b.shape != (self.A.dim,):
            raise ValueError("right-hand side length does not match tensor dimension")
        if np.any(self.b < 0.0):
            raise ValueError("right-hand side must be nonnegative")
        if not self.A.is_z_tensor():
            raise ValueError("coefficient tensor must have nonpositive off-diagonal entries")
        if self.partition is None:
            self.partition = partition_indices(self.b)

    @property
    def m(self) -> int:
        return self.A.order

    @property
    def n(self) -> int:
        return self.A.dim

    @property
    def certified_strong_m(self) -> bool:
        return self.certificate is not None


def make_problem(A: Tensor, b, omega=1.0) -> MTeqProblem:
    """Wrap tensor and right-hand side, attaching the all-ones certificate
    when it happens to work."""
    cert = np.ones(A.dim) if A.is_diag_dominant() else None
    return MTeqProblem(A, np.asarray(b, dtype=float), float(omega),
                       certificate=cert)


def scale_problem(A: Tensor, b) -> MTeqProblem:
    """Divide tensor and right-hand side by their largest magnitude.

    Newton iterates are unchanged by this, but it keeps residual norms and
    the absolute stopping tolerance on a common footing across instances.
    """
    b = np.asarray(b, dtype=float)
    omega = max(A.max_abs(), float(np.abs(b).max()) if b.size else 0.0)
    if omega == 0.0:
        raise ValueError("cannot scale an all-zero problem")
    return make_problem(A.scaled(1.0 / omega), b / omega, omega=omega)


def feasibility_slack(b) -> float:
    b = np.asarray(b, dtype=float)
    bmax = float(np.abs(b).max()) if b.size else 0.0
    return 1e-14 * (1.0 + bmax)


def _check_transformed(p: MTeqProblem, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (p.n,):
        raise ValueError(f"expected vector of length {p.n}, got shape {y.shape}")
    if np.any(y <= 0.0):
        raise ValueError("transformed iterate must be strictly positive")
    return y


def residual(p: MTeqProblem, y) -> np.ndarray:
    """Evaluate ``f(y) = A x^{m-1} - b`` with ``x = y^{1/(m-1)}``."""
    y = _check_transformed(p, y)
    x = hadamard_power(y, 1.0 / (p.m - 1))
    return p.A.apply(x) - p.b


def residual_jacobian(p: MTeqProblem, y) -> np.ndarray:
    """Jacobian of :func:`residual` at ``y``.

    Chain rule: the derivative of ``A x^{m-1}`` at ``x = y^{1/(m-1)}``
    column-scaled by ``dx/dy = (1/(m-1)) y^{1/(m-1)-1}``.  Satisfies the
    identity ``J(y) @ y = f(y) + b`` by homogeneity.
    """
    y = _check_transformed(p, y)
    m = p.m
    x = hadamard_power(y, 1.0 / (m - 1))
    jac = p.A.jacobian_matrix(x)
    scale = hadamard_power(y, 1.0 / (m - 1) - 1.0) / (m - 1)
    return jac * scale[None, :]


def in_feasible(p: MTeqProblem, y, eps, g=None) -> bool:
    """Whether ``A x^{m-1} >= eps * b`` componentwise (with slack).

    ``g`` may carry a precomputed ``residual(p, y) + b`` to spare an
    evaluation inside line searches.
    """
    if g is None:
        g = residual(p, y) + p.b
    slack = feasibility_slack(p.b)
    return bool(np.all(g >= eps * p.b - slack))


def zero_block_threshold(p: MTeqProblem, y, eps2, J=None) -> np.ndarray:
    """Feasibility threshold for the zero-indexed rows.

    Returns ``eps2 * J[I0, I+] @ solve(J[I+, I+], b[I+])`` where ``J`` is
    the residual Jacobian at ``y``.  Nonpositive whenever the positive
    block is a nonsingular M-matrix, so it relaxes the plain ``eps * b``
    bound on rows where that bound degenerates to zero.  Propagates
    :class:`~mteq.linalg.SingularMatrixError` when the positive block
    cannot be solved.
    """
    part = p.partition
    if part.i_plus.size == 0:
        raise ValueError("right-hand side has no positive components")
    if part.i_zero.size == 0:
        return np.zeros(0)
    if J is None:
        J = residual_jacobian(p, y)
    block_pp = submatrix(J, part.i_plus, part.i_plus)
    block_zp = submatrix(J, part.i_zero, part.i_plus)
    z = lu_solve(block_pp, p.b[part.i_plus])
    return eps2 * (block_zp @ z)


def in_feasible_split(p: MTeqProblem, y, eps, eps2, g=None, J=None) -> bool:
    """Feasibility test honouring the zero/positive partition of ``b``.

    Positive-indexed rows must clear ``eps * b`` as in :func:`in_feasible`;
    zero-indexed rows must clear :func:`zero_block_threshold`.  A singular
    positive block simply reports the point as infeasible, so a line search
    can back away from it instead of aborting the solve.
    """
    part = p.partition
    if part.i_zero.size == 0:
        return in_feasible(p, y, eps, g=g)
    if g is None:
        g = residual(p, y) + p.b
    slack = feasibility_slack(p.b)
    if not np.all(g[part.i_plus] >= eps * p.b[part.i_plus] - slack):
        return False
    try:
        r = zero_block_threshold(p, y, eps2, J=J)
    except SingularMatrixError:
        return False
    return bool(np.all(g[part.i_zero] >= r - slack))


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the zero-row coupling check.

    ``ok`` holds when every zero-indexed row owns a nonzero entry whose
    trailing indices all lie in the positive index set; ``missing`` lists
    the rows (0-based) where no such entry exists.
    """

    ok: bool
    missing: tuple
    i_plus_size: int
    i_zero_size: int


def check_assumption(p: MTeqProblem) -> AssumptionReport:
    """Structural solvability check for right-hand sides with zeros.

    Rows with ``b_i = 0`` can only be driven to a positive solution if they
    couple to the positive-indexed variables: some ``a[i, i2, .., im] != 0``
    with every trailing index in ``I+``.  Vacuously true when ``b > 0``.
    """
    part = p.partition
    iplus = part.i_plus
    missing = []
    if part.i_zero.size:
        A = p.A
        if A.is_dense:
            block = tuple([iplus] * (A.order - 1))
            dense = A.to_dense_array()
            for i in part.i_zero:
                sub = dense[int(i)][np.ix_(*block)] if iplus.size else np.zeros(0)
                if not np.any(sub != 0.0):
                    missing.append(int(i))
        else:
            idx = A.coo_indices
            vals = A.coo_values
            if vals.size:
                trailing_ok = np.all(np.isin(idx[:, 1:], iplus), axis=1)
                usable = trailing_ok & (vals != 0.0)
                rows_with = set(idx[usable, 0].tolist())
            else:
                rows_with = set()
            missing = [int(i) for i in part.i_zero if int(i) not in rows_with]
    return AssumptionReport(ok=not missing, missing=tuple(missing),
                            i_plus_size=int(iplus.size),
                            i_zero_size=int(part.i_zero.size))
