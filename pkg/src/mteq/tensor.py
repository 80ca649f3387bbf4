"""Order-m tensor storage and the contraction kernels used by the solvers.

A tensor here is a real array ``a[i1, ..., im]`` with all indices ranging
over ``0 .. n-1``.  Two storage layouts are supported: dense (a numpy array
of shape ``(n,)*m``) and sparse COO (sorted unique index tuples with their
values).  Indices are 0-based in memory and 1-based in the ``.mt`` text
format; the conversion happens exactly once, at the file boundary.

The central operation is ``apply``, the multilinear map

    (A x^{m-1})_i = sum over i2..im of a[i, i2, .., im] * x[i2] * ... * x[im],

together with its derivative matrix, computed position by position so that
it is exact for tensors with no symmetry at all.
"""

from __future__ import annotations

import itertools
import math
import os

import numpy as np

__all__ = [
    "Tensor",
    "hadamard_power",
    "nqz_spectral_radius",
    "m_splitting",
    "dense_cap",
    "read_tensor",
    "write_tensor",
    "read_vector",
    "write_vector",
    "FormatError",
]

DEFAULT_DENSE_CAP = 200_000_000


def dense_cap() -> int:
    """Entry-count limit for dense storage; override via MTEQ_DENSE_CAP."""
    return int(os.environ.get("MTEQ_DENSE_CAP", DEFAULT_DENSE_CAP))


class FormatError(ValueError):
    """A ``.mt`` or ``.vec`` file could not be parsed."""


class Tensor:
    """Real tensor of order ``m >= 2`` and dimension ``n >= 1``.

    Instances are immutable: every operation returns a new object or a
    plain numpy array.  Use :meth:`from_dense`, :meth:`from_coo` or
    :meth:`identity` to construct one.
    """

    def __init__(self, order, dim, dense=None, indices=None, values=None,
                 semi_symmetric=None):
        self.order = int(order)
        self.dim = int(dim)
        if self.order < 2:
            raise ValueError("tensor order must be at least 2")
        if self.dim < 1:
            raise ValueError("tensor dimension must be at least 1")
        self._dense = dense
        self._idx = indices
        self._vals = values
        # True/False when known, None until somebody asks
        self._semi_symmetric = semi_symmetric

    # ------------------------------------------------------------------
    # construction

    @classmethod
    def from_dense(cls, array, semi_symmetric=None) -> "Tensor":
        a = np.ascontiguousarray(array, dtype=float)
        if a.ndim < 2:
            raise ValueError("dense tensor must have at least 2 axes")
        n = a.shape[0]
        if any(s != n for s in a.shape):
            raise ValueError(f"all axes must have equal length, got {a.shape}")
        return cls(a.ndim, n, dense=a, semi_symmetric=semi_symmetric)

    @classmethod
    def from_coo(cls, order, dim, indices, values, semi_symmetric=None) -> "Tensor":
        order = int(order)
        dim = int(dim)
        idx = np.asarray(indices, dtype=np.int64)
        idx = idx.reshape(-1, order) if idx.size else np.zeros((0, order), dtype=np.int64)
        vals = np.asarray(values, dtype=float).ravel()
        if idx.shape[0] != vals.shape[0]:
            raise ValueError("index and value counts differ")
        if idx.size and (idx.min() < 0 or idx.max() >= dim):
            raise ValueError("tensor index out of range")
        if idx.shape[0] > 1:
            key = np.lexsort(idx.T[::-1])
            idx = idx[key]
            vals = vals[key]
            dup = np.all(idx[1:] == idx[:-1], axis=1)
            if dup.any():
                where = idx[1:][dup][0]
                raise ValueError(f"duplicate index tuple {tuple(int(i) for i in where)}")
        idx.setflags(write=False)
        vals.setflags(write=False)
        return cls(order, dim, indices=idx, values=vals, semi_symmetric=semi_symmetric)

    @classmethod
    def identity(cls, order, dim, storage="coo") -> "Tensor":
        """Diagonal tensor with ones at every ``(i, i, .., i)``."""
        if storage == "coo":
            idx = np.tile(np.arange(dim, dtype=np.int64)[:, None], (1, order))
            return cls.from_coo(order, dim, idx, np.ones(dim), semi_symmetric=True)
        a = np.zeros((dim,) * order)
        a[_diag_index(order, dim)] = 1.0
        return cls.from_dense(a, semi_symmetric=True)

    # ------------------------------------------------------------------
    # basic queries

    @property
    def is_dense(self) -> bool:
        return self._dense is not None

    @property
    def storage(self) -> str:
        return "dense" if self.is_dense else "coo"

    @property
    def nnz(self) -> int:
        if self.is_dense:
            return int(np.count_nonzero(self._dense))
        return self._vals.shape[0]

    @property
    def coo_indices(self) -> np.ndarray:
        if self.is_dense:
            raise ValueError("dense tensor has no COO index array")
        return self._idx

    @property
    def coo_values(self) -> np.ndarray:
        if self.is_dense:
            raise ValueError("dense tensor has no COO value array")
        return self._vals

    def __repr__(self):
        return (f"Tensor(order={self.order}, dim={self.dim}, "
                f"storage={self.storage!r}, nnz={self.nnz})")

    def to_dense_array(self) -> np.ndarray:
        """Entries as a numpy array of shape ``(n,)*m`` (always a copy)."""
        if self.is_dense:
            return self._dense.copy()
        if self.dim ** self.order > dense_cap():
            raise ValueError(
                f"dense form needs {self.dim ** self.order} entries, above the "
                f"cap {dense_cap()} (set MTEQ_DENSE_CAP to raise it)")
        a = np.zeros((self.dim,) * self.order)
        if self._vals.size:
            a[tuple(self._idx.T)] = self._vals
        return a

    def to_dense(self) -> "Tensor":
        return Tensor.from_dense(self.to_dense_array(),
                                 semi_symmetric=self._semi_symmetric)

    def to_coo(self) -> "Tensor":
        if not self.is_dense:
            return self
        # argwhere walks the array in C order, which is already the sorted
        # lexicographic order from_coo expects
        idx = np.argwhere(self._dense != 0.0).astype(np.int64)
        vals = self._dense[tuple(idx.T)] if idx.size else np.zeros(0)
        return Tensor.from_coo(self.order, self.dim, idx, vals,
                               semi_symmetric=self._semi_symmetric)

    def max_abs(self) -> float:
        if self.is_dense:
            return float(np.abs(self._dense).max()) if self._dense.size else 0.0
        return float(np.abs(self._vals).max()) if self._vals.size else 0.0

    def min_entry(self) -> float:
        """Smallest entry, counting implicit zeros of COO storage."""
        if self.is_dense:
            return float(self._dense.min())
        stored = float(self._vals.min()) if self._vals.size else 0.0
        if self._vals.shape[0] < self.dim ** self.order:
            return min(stored, 0.0)
        return stored

    def scaled(self, factor) -> "Tensor":
        f = float(factor)
        if self.is_dense:
            return Tensor.from_dense(self._dense * f,
                                     semi_symmetric=self._semi_symmetric)
        return Tensor.from_coo(self.order, self.dim, self._idx, self._vals * f,
                               semi_symmetric=self._semi_symmetric)

    def diagonal(self) -> np.ndarray:
        """Vector of the entries ``a[i, i, .., i]``."""
        if self.is_dense:
            return self._dense[_diag_index(self.order, self.dim)].copy()
        d = np.zeros(self.dim)
        if self._vals.size:
            mask = np.all(self._idx == self._idx[:, :1], axis=1)
            d[self._idx[mask, 0]] = self._vals[mask]
        return d

    # ------------------------------------------------------------------
    # contraction kernels

    def apply(self, x) -> np.ndarray:
        """Evaluate ``A x^{m-1}`` for a vector ``x`` of length ``n``."""
        x = _check_vector(x, self.dim)
        if self.is_dense:
            out = self._dense
            for _ in range(self.order - 1):
                out = out @ x
            return np.asarray(out, dtype=float)
        if not self._vals.size:
            return np.zeros(self.dim)
        terms = self._vals * np.prod(x[self._idx[:, 1:]], axis=1)
        return np.bincount(self._idx[:, 0], weights=terms, minlength=self.dim)

    def jacobian_matrix(self, x) -> np.ndarray:
        """Derivative matrix of ``x -> A x^{m-1}``.

        Differentiates position by position, so the result is exact for
        tensors with no index symmetry; for a semi-symmetric tensor it
        equals ``(m-1)`` times the one-slot contraction.
        """
        x = _check_vector(x, self.dim)
        n, m = self.dim, self.order
        jac = np.zeros((n, n))
        if self.is_dense:
            for p in range(1, m):
                t = np.moveaxis(self._dense, p, 1)
                for _ in range(m - 2):
                    t = t @ x
                jac += t
            return jac
        if not self._vals.size:
            return jac
        cols = self._idx[:, 1:]
        xs = x[cols]
        for p in range(m - 1):
            others = self._vals * np.prod(np.delete(xs, p, axis=1), axis=1)
            np.add.at(jac, (self._idx[:, 0], cols[:, p]), others)
        return jac

    def semi_symmetrize(self) -> "Tensor":
        """Average over all permutations of the trailing ``m-1`` indices.

        Leaves ``apply`` unchanged while making the trailing block of the
        tensor fully symmetric.
        """
        if self._semi_symmetric is True:
            return self
        m = self.order
        perms = list(itertools.permutations(range(1, m)))
        if self.is_dense:
            acc = np.zeros_like(self._dense)
            for p in perms:
                acc += np.transpose(self._dense, (0,) + p)
            return Tensor.from_dense(acc / len(perms), semi_symmetric=True)
        if not self._vals.size:
            return Tensor.from_coo(m, self.dim, self._idx, self._vals,
                                   semi_symmetric=True)
        stacked = np.vstack([self._idx[:, (0,) + p] for p in perms])
        weights = np.tile(self._vals / len(perms), len(perms))
        uniq, inv = np.unique(stacked, axis=0, return_inverse=True)
        vals = np.bincount(inv.ravel(), weights=weights)
        keep = vals != 0.0
        return Tensor.from_coo(m, self.dim, uniq[keep], vals[keep],
                               semi_symmetric=True)

    def is_semi_symmetric(self, tol=1e-13) -> bool:
        """Whether the trailing indices can be permuted freely (within tol)."""
        if self._semi_symmetric is not None:
            return self._semi_symmetric
        scale = max(1.0, self.max_abs())
        sym = self.semi_symmetrize()
        if self.is_dense:
            ok = bool(np.max(np.abs(self._dense - sym.to_dense_array())) <= tol * scale)
        else:
            merged_idx = np.vstack([self._idx, sym.coo_indices])
            merged_val = np.concatenate([self._vals, -sym.coo_values])
            uniq, inv = np.unique(merged_idx, axis=0, return_inverse=True)
            diff = np.bincount(inv.ravel(), weights=merged_val,
                               minlength=uniq.shape[0])
            ok = bool(np.max(np.abs(diff), initial=0.0) <= tol * scale)
        self._semi_symmetric = ok
        return ok

    # ------------------------------------------------------------------
    # structural predicates

    def is_z_tensor(self) -> bool:
        """True when every off-diagonal entry is <= 0."""
        if self.is_dense:
            off = self._dense.copy()
            off[_diag_index(self.order, self.dim)] = 0.0
            return bool(np.all(off <= 0.0))
        if not self._vals.size:
            return True
        diag = np.all(self._idx == self._idx[:, :1], axis=1)
        return bool(np.all(self._vals[~diag] <= 0.0))

    def is_diag_dominant(self) -> bool:
        """Operational dominance test: ``A e^{m-1} > 0`` componentwise.

        The all-ones vector then certifies the splitting constant exceeds
        the spectral radius of the nonnegative part.  Comparison uses a
        small scale-relative margin so that rows whose coefficients sum to
        zero in exact arithmetic are not misclassified by rounding.
        """
        ax = self.apply(np.ones(self.dim))
        margin = 1e-12 * max(1.0, self.max_abs())
        return bool(np.all(ax > margin))


def _diag_index(order, dim):
    return tuple([np.arange(dim)] * order)


def _check_vector(x, n) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"expected vector of length {n}, got shape {x.shape}")
    return x


def hadamard_power(x, alpha) -> np.ndarray:
    """Componentwise power ``x_i ** alpha``.

    Fractional exponents require a nonnegative base; callers that need
    negative exponents must pass strictly positive vectors.
    """
    x = np.asarray(x, dtype=float)
    a = float(alpha)
    if not a.is_integer() and np.any(x < 0.0):
        raise ValueError("fractional power of a negative component")
    return x ** a


def m_splitting(t: Tensor, s=None):
    """Split ``t = s*I - B`` and return ``(s, B)``.

    By default ``s`` is the largest diagonal entry, which makes the
    diagonal of ``B`` nonnegative; for a Z-tensor the whole of ``B`` is
    then nonnegative.
    """
    d = t.diagonal()
    if s is None:
        s = float(d.max()) if d.size else 0.0
    s = float(s)
    if t.is_dense:
        b = -t.to_dense_array()
        b[_diag_index(t.order, t.dim)] += s
        return s, Tensor.from_dense(b)
    idx = t.coo_indices
    vals = t.coo_values
    if vals.size:
        diag_mask = np.all(idx == idx[:, :1], axis=1)
        off_idx = idx[~diag_mask]
        off_vals = -vals[~diag_mask]
        diag_vals = np.zeros(t.dim)
        diag_vals[idx[diag_mask, 0]] = vals[diag_mask]
    else:
        off_idx = np.zeros((0, t.order), dtype=np.int64)
        off_vals = np.zeros(0)
        diag_vals = np.zeros(t.dim)
    new_diag = s - diag_vals
    keep = new_diag != 0.0
    di = np.tile(np.flatnonzero(keep)[:, None], (1, t.order))
    all_idx = np.vstack([off_idx, di])
    all_vals = np.concatenate([off_vals, new_diag[keep]])
    return s, Tensor.from_coo(t.order, t.dim, all_idx, all_vals)


def nqz_spectral_radius(t: Tensor, tol=1e-10, max_iter=5000):
    """Bracket the spectral radius of a nonnegative tensor by power iteration.

    Iterates ``x <- (B x^{m-1})^{1/(m-1)}`` (max-normalized) and returns the
    final ``(lower, upper)`` Collatz-Wielandt bounds from the componentwise
    ratios ``(B x^{m-1})_i / x_i^{m-1}``.  If an iterate component collapses
    to zero (a reducible tensor), every entry is implicitly perturbed by
    ``1e-12`` to restore coupling; the returned bracket then bounds the
    radius of the perturbed tensor, which is an upper bound for the
    original one.
    """
    if t.min_entry() < 0.0:
        raise ValueError("spectral-radius bracket needs a nonnegative tensor")
    m, n = t.order, t.dim
    delta = 0.0

    def contract(x):
        v = t.apply(x)
        if delta:
            v = v + delta * float(np.sum(x)) ** (m - 1)
        return v

    x = np.ones(n)
    v = contract(x)
    if not np.any(v > 0.0):
        return 0.0, 0.0
    lower, upper = 0.0, math.inf
    for _ in range(int(max_iter)):
        if np.any(v <= 0.0):
            delta = 1e-12
            v = contract(x)
        y = v ** (1.0 / (m - 1))
        x = y / y.max()
        v = contract(x)
        ratios = v / x ** (m - 1)
        lower = float(ratios.min())
        upper = float(ratios.max())
        if upper - lower <= tol * upper:
            break
    return lower, upper


# ----------------------------------------------------------------------
# file formats
#
# ``.mt``  line 1:  MT1 <m> <n> <dense|coo> <count>
#          dense:   n**m values, lexicographic order, first index slowest
#          coo:     <count> lines of "i1 .. im value" with 1-based indices
# ``.vec`` line 1:  <n>
#          then:    n values
# Writers emit 17 significant digits, which round-trips IEEE doubles.

def write_tensor(path, t: Tensor) -> None:
    with open(path, "w") as fh:
        if t.is_dense:
            count = t.dim ** t.order
            fh.write(f"MT1 {t.order} {t.dim} dense {count}\n")
            flat = t.to_dense_array().reshape(-1, t.dim)
            np.savetxt(fh, flat, fmt="%.17g")
        else:
            idx = t.coo_indices
            vals = t.coo_values
            fh.write(f"MT1 {t.order} {t.dim} coo {vals.shape[0]}\n")
            for row, v in zip(idx, vals):
                ones_based = " ".join(str(int(i) + 1) for i in row)
                fh.write(f"{ones_based} {v:.17g}\n")


def read_tensor(path) -> Tensor:
    with open(path) as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 5 or parts[0] != "MT1":
            raise FormatError(
                f"{path}:1: expected header 'MT1 <m> <n> <dense|coo> <count>', "
                f"got {header.strip()!r}")
        try:
            m, n, count = int(parts[1]), int(parts[2]), int(parts[4])
        except ValueError:
            raise FormatError(f"{path}:1: non-integer field in header") from None
        storage = parts[3]
        if storage not in ("dense", "coo"):
            raise FormatError(f"{path}:1: unknown storage {storage!r}")
        if m < 2 or n < 1 or count < 0:
            raise FormatError(f"{path}:1: header values out of range")
        if storage == "dense":
            expected = n ** m
            if count != expected:
                raise FormatError(
                    f"{path}:1: dense count {count} does not match n**m = {expected}")
            if expected > dense_cap():
                raise FormatError(
                    f"{path}: dense tensor needs {expected} entries, above the cap "
                    f"{dense_cap()} (set MTEQ_DENSE_CAP to raise it)")
            try:
                values = np.array(fh.read().split(), dtype=float)
            except ValueError:
                raise FormatError(f"{path}: malformed value in dense body") from None
            if values.size != expected:
                raise FormatError(
                    f"{path}: expected {expected} values, found {values.size}")
            return Tensor.from_dense(values.reshape((n,) * m))
        rows = []
        vals = []
        lineno = 1
        for line in fh:
            lineno += 1
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != m + 1:
                raise FormatError(
                    f"{path}:{lineno}: expected {m} indices and a value, "
                    f"got {len(tokens)} fields")
            try:
                tup = [int(tok) for tok in tokens[:m]]
                val = float(tokens[m])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed entry") from None
            if any(i < 1 or i > n for i in tup):
                raise FormatError(
                    f"{path}:{lineno}: index out of range 1..{n}")
            rows.append([i - 1 for i in tup])
            vals.append(val)
        if len(vals) != count:
            raise FormatError(
                f"{path}: header promised {count} entries, found {len(vals)}")
        try:
            return Tensor.from_coo(m, n, rows, vals)
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None


def write_vector(path, x) -> None:
    x = np.asarray(x, dtype=float).ravel()
    with open(path, "w") as fh:
        fh.write(f"{x.size}\n")
        for v in x:
            fh.write(f"{v:.17g}\n")


def read_vector(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline()
        try:
            n = int(header.split()[0])
        except (IndexError, ValueError):
            raise FormatError(
                f"{path}:1: expected the vector length, got {header.strip()!r}") from None
        if n < 0:
            raise FormatError(f"{path}:1: negative length")
        try:
            values = np.array(fh.read().split(), dtype=float)
        except ValueError:
            raise FormatError(f"{path}: malformed value in vector body") from None
        if values.size != n:
            raise FormatError(f"{path}: expected {n} values, found {values.size}")
        return values
