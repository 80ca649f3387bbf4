"""Seeded benchmark problem generators.

All randomness comes from numpy's Philox bit generator (Philox4x64-10, a
counter-based 64-bit generator) keyed directly by the seed, with uniforms
drawn through the standard 53-bit mantissa path.  Together with a fixed
draw order per generator this makes every instance bit-reproducible.

Generators 1, 2, 4 and 5 return problems scaled by their largest magnitude
(see :func:`mteq.model.scale_problem`); generator 3 keeps its natural units
because its runs are judged by the relative residual.
"""

from __future__ import annotations

import itertools
import json
import os
from functools import lru_cache

import numpy as np

from .model import MTeqProblem, make_problem, scale_problem
from .tensor import Tensor, dense_cap, write_tensor, write_vector

__all__ = [
    "gen_problem1",
    "gen_problem2",
    "gen_problem3",
    "gen_problem4",
    "gen_problem5",
    "zero_out_rhs",
    "write_problem",
    "symmetrize_full",
    "problem1_parts",
    "problem2_tensor",
    "GRAVITATIONAL_CONSTANT",
    "CENTRAL_MASS",
]

GRAVITATIONAL_CONSTANT = 6.67e-11
CENTRAL_MASS = 5.98e24


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed)))


def _uniform_open(rng, size) -> np.ndarray:
    """U(0,1) draws with exact zeros redrawn (they would flip the index
    partition of a right-hand side)."""
    out = rng.random(size)
    while np.any(out == 0.0):
        zeros = out == 0.0
        out[zeros] = rng.random(int(zeros.sum()))
    return out


def _check_dense_size(m, n) -> None:
    if n ** m > dense_cap():
        raise ValueError(
            f"dense tensor of order {m}, dimension {n} needs {n ** m} entries, "
            f"above the cap {dense_cap()} (set MTEQ_DENSE_CAP to raise it)")


def symmetrize_full(array) -> np.ndarray:
    """Average an array over all permutations of all its axes."""
    a = np.asarray(array, dtype=float)
    perms = list(itertools.permutations(range(a.ndim)))
    acc = np.zeros_like(a)
    for p in perms:
        acc += np.transpose(a, p)
    return acc / len(perms)


def _shifted_identity(s, B: Tensor, semi_symmetric=None) -> Tensor:
    """Dense tensor ``s * I - B`` for a dense ``B``."""
    a = -B.to_dense_array()
    diag = tuple([np.arange(B.dim)] * B.order)
    a[diag] += s
    return Tensor.from_dense(a, semi_symmetric=semi_symmetric)


def problem1_parts(m, n, seed):
    """Raw ingredients of generator 1: ``(B, s, b)`` before scaling.

    Draw order: the ``n**m`` tensor uniforms first, then the ``n``
    right-hand side uniforms.
    """
    _check_dense_size(m, n)
    rng = _rng(seed)
    B = Tensor.from_dense(symmetrize_full(rng.random((n,) * m)),
                          semi_symmetric=True)
    s = 1.01 * float(B.apply(np.ones(n)).max())
    b = _uniform_open(rng, n)
    return B, s, b


def gen_problem1(m, n, seed) -> MTeqProblem:
    """Random fully symmetric nonnegative part.

    ``B`` is a uniform tensor averaged over all index permutations and
    ``A = s I - B`` with ``s = 1.01 * max_i (B e^{m-1})_i``, which makes
    ``A`` diagonally dominant by a one-percent margin.
    """
    B, s, b = problem1_parts(m, n, seed)
    A = _shifted_identity(s, B, semi_symmetric=True)
    return scale_problem(A, b)


@lru_cache(maxsize=8)
def problem2_tensor(m, n) -> Tensor:
    """Deterministic tensor ``n^{m-1} I - B`` with ``B = |sin(i1+..+im)|``
    (1-based index sums)."""
    _check_dense_size(m, n)
    grids = np.indices((n,) * m)
    total = grids.sum(axis=0) + m  # 1-based index sum
    B = Tensor.from_dense(np.abs(np.sin(total)), semi_symmetric=True)
    return _shifted_identity(float(n) ** (m - 1), B, semi_symmetric=True)


def gen_problem2(m, n, seed=0) -> MTeqProblem:
    """Deterministic sine tensor with a seeded right-hand side.

    The tensor does not depend on the seed; only the ``n`` uniforms of the
    right-hand side are drawn.
    """
    A = problem2_tensor(m, n)
    b = _uniform_open(_rng(seed), n)
    return scale_problem(A, b)


def gen_problem3(n, c0=1e7, c1=1e7) -> MTeqProblem:
    """Two-point boundary value stencil (order 4, sparse).

    Discretizes an inverse-square attraction law on ``n`` grid points with
    boundary values ``c0`` and ``c1``: row 1 and row ``n`` pin the cubes of
    the boundary values, interior rows couple each point to its neighbours
    through six ``-1/3`` entries.  Deterministic; kept in natural units.
    """
    n = int(n)
    if n < 3:
        raise ValueError("the boundary stencil needs n >= 3")
    rows = [(0, 0, 0, 0, 1.0), (n - 1, n - 1, n - 1, n - 1, 1.0)]
    for i in range(1, n - 1):
        rows.append((i, i, i, i, 2.0))
        for tup in ((i, i - 1, i, i), (i, i, i - 1, i), (i, i, i, i - 1),
                    (i, i + 1, i, i), (i, i, i + 1, i), (i, i, i, i + 1)):
            rows.append(tup + (-1.0 / 3.0,))
    idx = np.array([r[:4] for r in rows], dtype=np.int64)
    vals = np.array([r[4] for r in rows])
    A = Tensor.from_coo(4, n, idx, vals, semi_symmetric=True)
    b = np.full(n, GRAVITATIONAL_CONSTANT * CENTRAL_MASS / (n - 1) ** 2)
    b[0] = float(c0) ** 3
    b[-1] = float(c1) ** 3
    return make_problem(A, b, omega=1.0)


def gen_problem4(m, n, seed) -> MTeqProblem:
    """Random nonnegative part with no symmetrization.

    Same construction as generator 1 but the uniform tensor is used raw, so
    the coefficient tensor has no index symmetry at all.  Draw order:
    tensor uniforms, then right-hand side uniforms.
    """
    _check_dense_size(m, n)
    rng = _rng(seed)
    B = Tensor.from_dense(rng.random((n,) * m))
    s = 1.01 * float(B.apply(np.ones(n)).max())
    b = _uniform_open(rng, n)
    return scale_problem(_shifted_identity(s, B), b)


def gen_problem5(m, n, seed) -> MTeqProblem:
    """Strictly triangular nonnegative part with a sub-dominant shift.

    ``B`` keeps a uniform entry only where every trailing index is strictly
    below the leading one, and ``A = s I - B`` with the deliberately small
    shift ``s = 0.5 * max_i (B e^{m-1})_i``, so the all-ones dominance test
    fails even though the strictly triangular ``B`` is nilpotent and any
    positive shift would do.  Draw order: the full ``n**m`` uniform block
    (then masked), then the right-hand side uniforms.
    """
    if n < 2:
        raise ValueError("the triangular generator needs n >= 2")
    _check_dense_size(m, n)
    rng = _rng(seed)
    raw = rng.random((n,) * m)
    B = np.zeros_like(raw)
    for i in range(1, n):
        block = (i,) + (slice(0, i),) * (m - 1)
        B[block] = raw[block]
    B = Tensor.from_dense(B)
    s = 0.5 * float(B.apply(np.ones(n)).max())
    b = _uniform_open(rng, n)
    return scale_problem(_shifted_identity(s, B), b)


def zero_out_rhs(b, seed, keep=(), fraction=0.5) -> np.ndarray:
    """Zero a random strict subset of the entries of a positive vector.

    Roughly ``fraction * n`` entries are zeroed, never touching the 0-based
    indices in ``keep`` and always leaving at least one zero and at least
    one positive survivor.  Deterministic in the seed.
    """
    b = np.asarray(b, dtype=float).copy()
    n = b.size
    if np.any(b <= 0.0):
        raise ValueError("expected a strictly positive vector")
    keep = np.array(sorted({int(i) for i in keep}), dtype=np.int64)
    if keep.size and (keep.min() < 0 or keep.max() >= n):
        raise ValueError(f"keep index out of range 0..{n - 1}")
    candidates = np.setdiff1d(np.arange(n), keep)
    limit = candidates.size if keep.size else n - 1
    count = min(max(1, int(round(fraction * n))), limit)
    if candidates.size == 0 or count < 1:
        raise ValueError("no entries left to zero (vector too small or keep too large)")
    chosen = _rng(seed).choice(candidates, size=count, replace=False)
    b[chosen] = 0.0
    return b


def write_problem(outdir, p: MTeqProblem, manifest: dict) -> None:
    """Write ``tensor.mt``, ``rhs.vec`` and ``manifest.json`` into a directory."""
    os.makedirs(outdir, exist_ok=True)
    write_tensor(os.path.join(outdir, "tensor.mt"), p.A)
    write_vector(os.path.join(outdir, "rhs.vec"), p.b)
    payload = dict(manifest)
    payload.setdefault("m", p.m)
    payload.setdefault("n", p.n)
    payload.setdefault("omega", p.omega)
    payload.setdefault("rng", "philox4x64-10")
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
