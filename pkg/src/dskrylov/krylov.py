"""Krylov basis generation: k-truncated Arnoldi and the full Arnoldi reference."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import Breakdown
from .la_core import r_factor
from .sparse import SparseMatrix, spmv

BREAKDOWN_TOL = 1e-14


@dataclass(frozen=True)
class KrylovBasis:
    """Non-orthogonal basis ``v`` of K_m(A, b) with the stored product ``m_prod = A v``."""

    v: np.ndarray
    m_prod: np.ndarray
    k: int

    @property
    def m(self) -> int:
        return self.v.shape[1]

    @property
    def n(self) -> int:
        return self.v.shape[0]

    @cached_property
    def r_v(self) -> np.ndarray:
        """Triangular QR factor of ``v`` (no rank check); carries the singular values of V."""
        return r_factor(self.v)

    def truncate(self, m: int) -> "KrylovBasis":
        """The first ``m`` columns; identical to re-running the recurrence with ``m``.

        A QR factor already computed for the full basis is reused: the leading
        m x m block of R is the factor of the first m columns.
        """
        if m > self.m:
            raise ValueError(f"basis has only {self.m} columns, asked for {m}")
        out = KrylovBasis(v=self.v[:, :m], m_prod=self.m_prod[:, :m], k=self.k)
        if "r_v" in self.__dict__:
            out.__dict__["r_v"] = self.r_v[:m, :m]
        return out


def _normalize_start(b):
    b = np.asarray(b, dtype=float)
    beta = np.linalg.norm(b)
    if beta == 0.0 or not np.isfinite(beta):
        raise ValueError("starting vector must be nonzero and finite")
    return b, beta


def truncated_arnoldi(a: SparseMatrix, b, m: int, k: int, strict_alg1: bool = False) -> KrylovBasis:
    """k-truncated Arnoldi.

    Each new direction ``A v_{j-1}`` is orthogonalized (classical Gram-Schmidt)
    against the previous ``k`` basis vectors only, followed by one
    reorthogonalization pass over the same window unless ``strict_alg1``.

    Raises :class:`Breakdown` (carrying the partial basis) when the projected
    vector vanishes relative to ``||A v_{j-1}||``.
    """
    b, beta = _normalize_start(b)
    n = a.n
    if b.shape != (n,):
        raise ValueError(f"b must have length {n}")
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if k < 1:
        raise ValueError("truncation length k must be >= 1")

    v = np.zeros((n, m), order="F")
    mp = np.zeros((n, m), order="F")
    v[:, 0] = b / beta
    mp[:, 0] = spmv(a, v[:, 0])
    passes = 1 if strict_alg1 else 2
    for j in range(1, m):
        lo = max(0, j - k)
        window = v[:, lo:j]
        w = mp[:, j - 1].copy()
        for _ in range(passes):
            w -= window @ (window.T @ w)
        nrm = np.linalg.norm(w)
        if nrm <= BREAKDOWN_TOL * np.linalg.norm(mp[:, j - 1]):
            raise Breakdown(j, KrylovBasis(v=v[:, :j].copy(), m_prod=mp[:, :j].copy(), k=k))
        v[:, j] = w / nrm
        mp[:, j] = spmv(a, v[:, j])
    return KrylovBasis(v=v, m_prod=mp, k=k)


@dataclass(frozen=True)
class ArnoldiResult:
    """Orthonormal basis ``v`` (n x m), next vector ``v_next`` and the
    (m+1) x m Hessenberg matrix ``h`` with ``A v = [v, v_next] h``."""

    v: np.ndarray
    h: np.ndarray
    v_next: np.ndarray | None
    beta: float

    @property
    def m(self) -> int:
        return self.v.shape[1]

    @property
    def h_square(self) -> np.ndarray:
        return self.h[: self.m, : self.m]


def arnoldi(a: SparseMatrix, b, m: int) -> ArnoldiResult:
    """Full Arnoldi with classical Gram-Schmidt and one reorthogonalization.

    Breakdown while forming one of the first ``m`` columns raises; a
    vanishing ``v_{m+1}`` is a lucky breakdown and is returned as ``None``.
    """
    b, beta = _normalize_start(b)
    n = a.n
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    v = np.zeros((n, m + 1), order="F")
    h = np.zeros((m + 1, m))
    v[:, 0] = b / beta
    for j in range(m):
        w = spmv(a, v[:, j])
        wnorm = np.linalg.norm(w)
        basis = v[:, : j + 1]
        coeff = basis.T @ w
        w -= basis @ coeff
        corr = basis.T @ w
        w -= basis @ corr
        coeff += corr
        h[: j + 1, j] = coeff
        nrm = np.linalg.norm(w)
        if nrm <= BREAKDOWN_TOL * max(wnorm, 1e-300):
            if j + 1 < m:
                raise Breakdown(j + 1)
            return ArnoldiResult(v=v[:, :m].copy(), h=h, v_next=None, beta=beta)
        h[j + 1, j] = nrm
        v[:, j + 1] = w / nrm
    return ArnoldiResult(v=v[:, :m].copy(), h=h, v_next=v[:, m].copy(), beta=beta)
