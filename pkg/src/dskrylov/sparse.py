"""Square CSR matrices over float64 and Matrix Market I/O."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, ParseError


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Compressed sparse row storage of an n x n matrix.

    Column indices are strictly increasing within each row. Instances are
    treated as immutable; the arrays are flagged read-only on construction.
    """

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        row_ptr = np.asarray(self.row_ptr, dtype=np.int64)
        col_idx = np.asarray(self.col_idx, dtype=np.int64)
        vals = np.asarray(self.vals, dtype=float)
        if row_ptr.shape != (self.n + 1,) or row_ptr[0] != 0 or np.any(np.diff(row_ptr) < 0):
            raise ValueError("row_ptr must be nondecreasing, start at 0 and have length n+1")
        if row_ptr[-1] != col_idx.size or col_idx.size != vals.size:
            raise ValueError("row_ptr[n] must equal nnz")
        if col_idx.size and (col_idx.min() < 0 or col_idx.max() >= self.n):
            raise IndexOutOfRange("column index out of range")
        rows = np.repeat(np.arange(self.n), np.diff(row_ptr))
        same_row = rows[1:] == rows[:-1]
        if np.any(same_row & (np.diff(col_idx) <= 0)):
            raise ValueError("column indices must be strictly increasing within a row")
        for name, arr in (("row_ptr", row_ptr), ("col_idx", col_idx), ("vals", vals)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        rows.setflags(write=False)
        object.__setattr__(self, "_rows", rows)

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def nnz(self) -> int:
        return int(self.vals.size)

    @property
    def row_indices(self) -> np.ndarray:
        """Row index of every stored entry (the COO row array)."""
        return self._rows

    def __matmul__(self, x):
        x = np.asarray(x)
        if x.ndim == 1:
            return spmv(self, x)
        return spmm(self, x)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self._rows, self.col_idx] = self.vals
        return out

    def transpose(self) -> "SparseMatrix":
        return from_coo(self.n, zip(self.col_idx, self._rows, self.vals))

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.vals))

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.row_ptr, other.row_ptr)
                and np.array_equal(self.col_idx, other.col_idx)
                and np.array_equal(self.vals, other.vals))

    __hash__ = None


def from_coo(n: int, triplets: Iterable) -> SparseMatrix:
    """Assemble CSR from (row, col, value) triplets; duplicates are summed and
    entries that sum to zero are dropped."""
    trip = list(triplets)
    if not trip:
        return SparseMatrix(n, np.zeros(n + 1, np.int64), np.zeros(0, np.int64), np.zeros(0))
    rows = np.array([t[0] for t in trip], dtype=np.int64)
    cols = np.array([t[1] for t in trip], dtype=np.int64)
    vals = np.array([t[2] for t in trip], dtype=float)
    return from_arrays(n, rows, cols, vals)


def from_arrays(n: int, rows, cols, vals) -> SparseMatrix:
    """Vectorized :func:`from_coo` on parallel index/value arrays."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=float)
    if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
        raise IndexOutOfRange(f"triplet index outside [0, {n})")
    key = rows * n + cols
    order = np.argsort(key, kind="stable")
    key, vals = key[order], vals[order]
    uniq, start = np.unique(key, return_index=True)
    summed = np.add.reduceat(vals, start) if vals.size else vals
    keep = summed != 0.0
    uniq, summed = uniq[keep], summed[keep]
    r, c = np.divmod(uniq, n)
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=n), out=row_ptr[1:])
    return SparseMatrix(n, row_ptr, c, summed)


def from_dense(a) -> SparseMatrix:
    a = np.asarray(a, dtype=float)
    r, c = np.nonzero(a)
    return from_arrays(a.shape[0], r, c, a[r, c])


def identity(n: int) -> SparseMatrix:
    idx = np.arange(n)
    return SparseMatrix(n, np.arange(n + 1), idx, np.ones(n))


def spmv(a: SparseMatrix, x) -> np.ndarray:
    """y = A x. Each row is accumulated sequentially in stored order."""
    x = np.asarray(x, dtype=float)
    if x.shape != (a.n,):
        raise DimensionMismatch(f"expected vector of length {a.n}, got shape {x.shape}")
    return np.bincount(a.row_indices, weights=a.vals * x[a.col_idx], minlength=a.n)


def spmm(a: SparseMatrix, x) -> np.ndarray:
    """A X for a block of column vectors."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != a.n:
        raise DimensionMismatch(f"expected {a.n} rows, got shape {x.shape}")
    return np.column_stack([spmv(a, x[:, j]) for j in range(x.shape[1])]) if x.shape[1] else np.zeros_like(x)


def col_sums(a: SparseMatrix) -> np.ndarray:
    return np.bincount(a.col_idx, weights=a.vals, minlength=a.n)


def add(a: SparseMatrix, b: SparseMatrix, alpha: float = 1.0, beta: float = 1.0) -> SparseMatrix:
    """alpha*A + beta*B."""
    if a.n != b.n:
        raise DimensionMismatch("dimension mismatch")
    rows = np.concatenate([a.row_indices, b.row_indices])
    cols = np.concatenate([a.col_idx, b.col_idx])
    vals = np.concatenate([alpha * a.vals, beta * b.vals])
    return from_arrays(a.n, rows, cols, vals)


def kron(a, b) -> SparseMatrix:
    """Kronecker product of two small dense (or sparse) square matrices."""
    a = a.to_dense() if isinstance(a, SparseMatrix) else np.asarray(a, float)
    b = b.to_dense() if isinstance(b, SparseMatrix) else np.asarray(b, float)
    ra, ca = np.nonzero(a)
    rb, cb = np.nonzero(b)
    nb = b.shape[0]
    rows = (ra[:, None] * nb + rb[None, :]).ravel()
    cols = (ca[:, None] * nb + cb[None, :]).ravel()
    vals = (a[ra, ca][:, None] * b[rb, cb][None, :]).ravel()
    return from_arrays(a.shape[0] * nb, rows, cols, vals)


# --------------------------------------------------------------------------
# Matrix Market (coordinate, real, general)
# --------------------------------------------------------------------------

def write_matrix_market(path, a: SparseMatrix) -> None:
    lines = ["%%MatrixMarket matrix coordinate real general",
             f"{a.n} {a.n} {a.nnz}"]
    for r, c, v in zip(a.row_indices, a.col_idx, a.vals):
        lines.append(f"{r + 1} {c + 1} {v:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_market(path) -> SparseMatrix:
    """Read a square real (or pattern/integer) coordinate Matrix Market file.

    ``symmetric`` files are expanded. Indices in the file are 1-based.
    """
    text = Path(path).read_text().splitlines()
    if not text or not text[0].lower().startswith("%%matrixmarket"):
        raise ParseError(1, "missing %%MatrixMarket banner")
    banner = text[0].lower().split()
    if len(banner) < 5 or banner[1] != "matrix" or banner[2] != "coordinate":
        raise ParseError(1, "only 'matrix coordinate' files are supported")
    field, symmetry = banner[3], banner[4]
    if field not in ("real", "integer", "pattern"):
        raise ParseError(1, f"unsupported field '{field}'")
    if symmetry not in ("general", "symmetric"):
        raise ParseError(1, f"unsupported symmetry '{symmetry}'")

    size = None
    rows, cols, vals = [], [], []
    for lineno, line in enumerate(text[1:], start=2):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        parts = stripped.split()
        if size is None:
            if len(parts) != 3:
                raise ParseError(lineno, "expected 'rows cols nnz'")
            try:
                size = tuple(int(p) for p in parts)
            except ValueError:
                raise ParseError(lineno, "non-integer size line") from None
            if size[0] != size[1]:
                raise ParseError(lineno, "matrix is not square")
            continue
        expected = 2 if field == "pattern" else 3
        if len(parts) != expected:
            raise ParseError(lineno, f"expected {expected} fields, got {len(parts)}")
        try:
            r, c = int(parts[0]) - 1, int(parts[1]) - 1
            v = 1.0 if field == "pattern" else float(parts[2])
        except ValueError:
            raise ParseError(lineno, f"cannot parse entry '{stripped}'") from None
        if not (0 <= r < size[0] and 0 <= c < size[1]):
            raise ParseError(lineno, "index out of range")
        rows.append(r)
        cols.append(c)
        vals.append(v)
        if symmetry == "symmetric" and r != c:
            rows.append(c)
            cols.append(r)
            vals.append(v)
    if size is None:
        raise ParseError(len(text), "missing size line")
    return from_arrays(size[0], rows, cols, vals)
