"""Sketching operators and the subspace-distortion diagnostics built on them."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch
from .la_core import r_factor, thin_qr, thin_svd, triangular_inverse
from .rowselect import RowSelector


class SketchOperator:
    """An s x n map applied to blocks of column vectors."""

    tag = "sketch"

    def apply(self, x) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return self.apply(x)

    def rows(self, n: int) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class Identity(SketchOperator):
    tag = "identity"

    def apply(self, x):
        return np.asarray(x, dtype=float)

    def rows(self, n):
        return n


@dataclass(frozen=True)
class RowSubset(SketchOperator):
    selector: RowSelector
    tag = "rowsubset"

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if self.selector.p and max(self.selector.p) >= x.shape[0]:
            raise DimensionMismatch(f"selector index {max(self.selector.p)} exceeds {x.shape[0]} rows")
        return x[self.selector.indices]

    def rows(self, n):
        return len(self.selector)


@lru_cache(maxsize=16)
def _sparse_sign_pattern(seed: int, nnz: int, s: int, n: int):
    rng = np.random.default_rng(seed)
    rows = np.argsort(rng.random((n, s)), axis=1, kind="stable")[:, :nnz]
    signs = rng.choice(np.array([-1.0, 1.0]), size=(n, nnz))
    cols = np.repeat(np.arange(n), nnz)
    rows, signs = rows.ravel(), signs.ravel() / np.sqrt(nnz)
    for arr in (rows, signs, cols):
        arr.setflags(write=False)
    return rows, cols, signs


@dataclass(frozen=True)
class SparseSign(SketchOperator):
    """Sparse sign embedding: every column of S holds ``nnz_per_col`` entries
    ``+-1/sqrt(nnz_per_col)`` in distinct random rows. Fully determined by
    ``seed`` and the input dimension."""

    seed: int
    s: int
    nnz_per_col: int = 8
    tag = "sparsesign"

    def pattern(self, n: int):
        return _sparse_sign_pattern(int(self.seed), min(self.nnz_per_col, self.s), self.s, n)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        vector = x.ndim == 1
        x2 = x[:, None] if vector else x
        rows, cols, signs = self.pattern(x2.shape[0])
        out = np.column_stack([
            np.bincount(rows, weights=signs * x2[cols, j], minlength=self.s)
            for j in range(x2.shape[1])
        ]) if x2.shape[1] else np.zeros((self.s, 0))
        return out[:, 0] if vector else out

    def to_dense(self, n: int) -> np.ndarray:
        rows, cols, signs = self.pattern(n)
        out = np.zeros((self.s, n))
        np.add.at(out, (rows, cols), signs)
        return out

    def rows(self, n):
        return self.s


def sketch_apply(s: SketchOperator, x) -> np.ndarray:
    return s.apply(x)


@dataclass(frozen=True)
class DistortionReport:
    """Extreme singular values of V, SV and the whitened basis V R^{-1}.

    ``lower``/``upper`` are the sandwich constants
    sigma_min(SV)^2 / sigma_max(V)^2 <= ||Sv||^2 / ||v||^2 <= sigma_max(SV)^2 / sigma_min(V)^2.
    """

    sigma_min_sv: float
    sigma_max_sv: float
    sigma_min_v: float
    sigma_max_v: float
    sigma_min_whitened: float
    sigma_max_whitened: float

    @property
    def kappa_v(self) -> float:
        return _ratio(self.sigma_max_v, self.sigma_min_v)

    @property
    def kappa_sv(self) -> float:
        return _ratio(self.sigma_max_sv, self.sigma_min_sv)

    @property
    def kappa_whitened(self) -> float:
        return _ratio(self.sigma_max_whitened, self.sigma_min_whitened)

    @property
    def lower(self) -> float:
        return self.sigma_min_sv ** 2 / self.sigma_max_v ** 2

    @property
    def upper(self) -> float:
        return _ratio(self.sigma_max_sv ** 2, self.sigma_min_v ** 2)

    def as_dict(self) -> dict:
        return {
            "sigma_min_sv": self.sigma_min_sv, "sigma_max_sv": self.sigma_max_sv,
            "kappa_v": self.kappa_v, "kappa_whitened": self.kappa_whitened,
            "lower": self.lower, "upper": self.upper,
        }


def _ratio(num, den):
    return float(num / den) if den > 0 else float("inf")


def distortion_from_factors(r_v, r_sv) -> DistortionReport:
    """Report from the triangular factors of V and SV.

    With V = Q_V R_V, the whitened basis V R^{-1} has the singular values of
    R_V R^{-1}, so nothing of size n is touched here.
    """
    sv = thin_svd(r_sv).sigma
    vv = thin_svd(r_v).sigma
    wh = thin_svd(r_v @ triangular_inverse(r_sv)).sigma
    return DistortionReport(
        sigma_min_sv=float(sv[-1]), sigma_max_sv=float(sv[0]),
        sigma_min_v=float(vv[-1]), sigma_max_v=float(vv[0]),
        sigma_min_whitened=float(wh[-1]), sigma_max_whitened=float(wh[0]),
    )


def distortion_report(v, s: SketchOperator) -> DistortionReport:
    """Subspace-embedding constants of ``s`` restricted to range(v).

    Raises :class:`~dskrylov.errors.RankDeficient` when S v is numerically
    rank deficient.
    """
    v = np.asarray(v, dtype=float)
    qr = thin_qr(s.apply(v))
    return distortion_from_factors(r_factor(v), qr.r)
