"""Sketched Krylov solvers (dsFOM, dsGMRES, dsRR) and their orthogonal references.

All sketched solvers share one pipeline: a k-truncated Arnoldi basis V with
stored product M = A V, a sketch S (usually a row subset), a thin QR of a
sketched block, and a small dense problem. The inverse of the triangular
factor is only ever applied through back-substitution.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .krylov import KrylovBasis, arnoldi, truncated_arnoldi
from .la_core import (EigenPairs, MatrixFunction, back_substitute, dense_eig, expm,
                      thin_qr, thin_svd, triangular_inverse)
from .rowselect import RowSelector, random_rows, select_rows
from .sketch import (DistortionReport, Identity, RowSubset, SketchOperator, SparseSign,
                     distortion_from_factors)
from .sparse import SparseMatrix, spmm, spmv

UNRELIABLE_KAPPA = 1e8
SKETCH_STRATEGIES = ("deim", "qdeim", "mpe", "gpode", "sparsesign", "identity", "random")


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RitzPairs:
    """Approximate eigenpairs ``(values[i], vectors[:, i])`` of A, unit-norm vectors,
    sorted by descending |value|, with true and sketched residual norms."""

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    sketched_residuals: np.ndarray

    def __len__(self):
        return self.values.size

    @property
    def fiedler_index(self) -> int:
        """Index of the pair with the second-smallest |lambda| (the last when m = 1)."""
        return max(self.values.size - 2, 0)


@dataclass(frozen=True)
class SolveReport:
    """Result of one solver call.

    ``residual`` is a float for dsFOM/dsGMRES and an array (one per Ritz pair)
    for dsRR; the bound fields follow the same shape. ``bound_low`` is NaN
    where no lower bound is defined.
    """

    approximation: Any
    m_used: int
    selector: Any
    sigma_min_sv: float
    kappa_whitened: float
    residual: Any
    bound_low: Any
    bound_high: Any
    wall_times: dict = field(default_factory=dict)
    kappa_v: float = math.nan
    sketch_rows: int = 0
    distortion: DistortionReport | None = None

    @property
    def unreliable(self) -> bool:
        return not self.kappa_whitened <= UNRELIABLE_KAPPA


# --------------------------------------------------------------------------
# Sketch construction
# --------------------------------------------------------------------------

def parse_sketch_size(rule, m: int) -> int:
    """``rule`` is an absolute count (``12``) or a multiplier of m (``"1.1x"``).

    Multipliers are rounded up with exact rational arithmetic, so ``1.1x`` of
    10 is 11 and not 12.
    """
    if isinstance(rule, str):
        text = rule.strip().lower()
        if text.endswith("x"):
            return math.ceil(Fraction(text[:-1]) * m)
        if text.startswith("m+"):
            return m + int(text[2:])
        return int(text)
    return int(rule)


def default_sketch_size(strategy: str, m: int, solver: str = "dsfom") -> str | int:
    """Default sketch-size rule per strategy (eigensolvers oversample more)."""
    strategy = strategy.lower()
    if strategy in ("deim", "qdeim"):
        return m
    if solver in ("dsrr", "rr"):
        return "1.5x"
    return {"mpe": "1.1x", "gpode": "m+1", "sparsesign": "2x", "random": "2x"}.get(strategy, m)


def build_sketch(v, strategy: str, s=None, seed: int = 0, solver: str = "dsfom") -> SketchOperator:
    """The sketch used by the solvers for basis ``v`` (n x m)."""
    n, m = v.shape
    strategy = strategy.lower()
    if strategy == "identity":
        return Identity()
    rule = default_sketch_size(strategy, m, solver) if s is None else s
    size = parse_sketch_size(rule, m)
    if strategy in ("mpe", "gpode"):
        size = min(size, n)
    if size < m:
        raise ValueError(f"sketch size {size} is smaller than m={m}")
    if strategy == "sparsesign":
        return SparseSign(seed=seed, s=size)
    if strategy == "random":
        return RowSubset(random_rows(n, size, seed))
    if strategy in ("deim", "qdeim", "mpe", "gpode"):
        return RowSubset(select_rows(v, size, strategy))
    raise ValueError(f"unknown strategy {strategy!r}")


def _selector_of(sk: SketchOperator):
    return sk.selector if isinstance(sk, RowSubset) else sk.tag


def _prepare(a, b, m, k, strict_alg1, basis):
    if basis is None:
        return truncated_arnoldi(a, b, m, k, strict_alg1=strict_alg1)
    return basis if basis.m == m else basis.truncate(m)


def _sketch_for(basis: KrylovBasis, strategy, s, seed, sketch, solver):
    if sketch is not None:
        return sketch
    return build_sketch(basis.v, strategy, s, seed, solver)


# --------------------------------------------------------------------------
# dsFOM
# --------------------------------------------------------------------------

def dsfom(a: SparseMatrix, b, m: int, k: int = 4, s=None, strategy: str = "deim",
          f: MatrixFunction = expm, seed: int = 0, sketch: SketchOperator | None = None,
          basis: KrylovBasis | None = None, strict_alg1: bool = False,
          rank_tol: float = 0.0) -> SolveReport:
    """Sketched FOM approximation of f(A) b with basis whitening.

    f_m = V R^{-1} f(Q^T S A V R^{-1}) Q^T S b, where S V = Q R.

    ``residual`` is the sketched invariance defect
    ||S A V R^{-1} - Q Q^T S A V R^{-1}||_F, which reduces to the Arnoldi
    quantity h_{m+1,m} when S = I. ``bound_high`` is kappa(V R^{-1}), the
    distortion factor bounding the error relative to orthogonal FOM.

    ``rank_tol`` is passed to the whitening QR. The default only rejects an
    exactly singular S V: a numerically rank-deficient Krylov basis makes S V
    just as deficient, yet V R^{-1} can stay well conditioned, so the quality
    of the result is judged by ``kappa_whitened`` rather than by an exception.
    """
    times = {}
    t0 = time.perf_counter()
    basis = _prepare(a, b, m, k, strict_alg1, basis)
    times["basis"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    sk = _sketch_for(basis, strategy, s, seed, sketch, "dsfom")
    sv = sk.apply(basis.v)
    times["select"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    qr = thin_qr(sv, rank_tol=rank_tol)
    r_inv = triangular_inverse(qr.r)
    sam = sk.apply(basis.m_prod) @ r_inv
    h = qr.q.T @ sam
    c = qr.q.T @ sk.apply(np.asarray(b, dtype=float))
    fm = basis.v @ back_substitute(qr.r, f(h) @ c)
    defect = float(np.linalg.norm(sam - qr.q @ h))
    times["solve"] = time.perf_counter() - t0

    rep = distortion_from_factors(basis.r_v, qr.r)
    return SolveReport(
        approximation=fm, m_used=basis.m, selector=_selector_of(sk),
        sigma_min_sv=rep.sigma_min_sv, kappa_whitened=rep.kappa_whitened,
        residual=defect, bound_low=math.nan, bound_high=rep.kappa_whitened,
        wall_times=times, kappa_v=rep.kappa_v, sketch_rows=sv.shape[0], distortion=rep,
    )


def fom_reference(a: SparseMatrix, b, m: int, f: MatrixFunction = expm) -> SolveReport:
    """Orthogonal FOM, beta V f(H_m) e_1, from a full Arnoldi run."""
    t0 = time.perf_counter()
    arn = arnoldi(a, b, m)
    t1 = time.perf_counter()
    fm = arn.beta * (arn.v @ f(arn.h_square)[:, 0])
    t2 = time.perf_counter()
    return SolveReport(
        approximation=fm, m_used=m, selector="identity", sigma_min_sv=1.0,
        kappa_whitened=1.0, residual=float(arn.h[m, m - 1]), bound_low=math.nan,
        bound_high=1.0, wall_times={"basis": t1 - t0, "select": 0.0, "solve": t2 - t1},
        kappa_v=1.0, sketch_rows=a.n,
    )


# --------------------------------------------------------------------------
# dsGMRES
# --------------------------------------------------------------------------

def dsgmres(a: SparseMatrix, b, x0=None, m: int = 10, k: int = 4, s=None,
            strategy: str = "gpode", seed: int = 0, sketch: SketchOperator | None = None,
            basis: KrylovBasis | None = None, strict_alg1: bool = False,
            rank_tol: float = 0.0) -> SolveReport:
    """Sketched GMRES: y = argmin ||S (A V y - r0)||, via a thin QR of S A V.

    No whitening happens here, so by default the QR only rejects exactly
    singular factors (``rank_tol=0``): the least-squares solve stays
    meaningful for an ill-conditioned S A V, and the distortion shows up in
    the reported diagnostics instead of an exception.

    ``basis`` (if given) must span K_m(A, r0). The report carries the true
    residual ||b - A x_m||, kappa_whitened of the whitening factor of S V,
    and ``bound_high`` = kappa(S V R^{-1}) kappa(V R^{-1}) with R from the QR of
    S A V. ``bound_low`` is 1, the GMRES optimality floor on the residual ratio.
    """
    b = np.asarray(b, dtype=float)
    x0 = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=float)
    r0 = b - spmv(a, x0)
    times = {}
    t0 = time.perf_counter()
    basis = _prepare(a, r0, m, k, strict_alg1, basis)
    times["basis"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    sk = _sketch_for(basis, strategy, s, seed, sketch, "dsgmres")
    sv = sk.apply(basis.v)
    times["select"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    qr = thin_qr(sk.apply(basis.m_prod), rank_tol=rank_tol)
    y = back_substitute(qr.r, qr.q.T @ sk.apply(r0))
    x = x0 + basis.v @ y
    times["solve"] = time.perf_counter() - t0

    res = float(np.linalg.norm(b - spmv(a, x)))
    white = thin_qr(sv, rank_tol=0.0)
    rep = distortion_from_factors(basis.r_v, white.r)
    sv_r = thin_svd(sv @ triangular_inverse(qr.r)).sigma
    v_r = thin_svd(basis.r_v @ triangular_inverse(qr.r)).sigma
    bound = _kappa(sv_r) * _kappa(v_r)
    return SolveReport(
        approximation=x, m_used=basis.m, selector=_selector_of(sk),
        sigma_min_sv=rep.sigma_min_sv, kappa_whitened=rep.kappa_whitened,
        residual=res, bound_low=1.0, bound_high=bound, wall_times=times,
        kappa_v=rep.kappa_v, sketch_rows=sv.shape[0], distortion=rep,
    )


def _kappa(sigma) -> float:
    return float(sigma[0] / sigma[-1]) if sigma[-1] > 0 else math.inf


def gmres_reference(a: SparseMatrix, b, x0=None, m: int = 10) -> SolveReport:
    """Classical GMRES: Arnoldi plus the (m+1) x m Hessenberg least-squares problem."""
    b = np.asarray(b, dtype=float)
    x0 = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=float)
    r0 = b - spmv(a, x0)
    t0 = time.perf_counter()
    arn = arnoldi(a, r0, m)
    t1 = time.perf_counter()
    rhs = np.zeros(m + 1)
    rhs[0] = arn.beta
    qr = thin_qr(arn.h, rank_tol=0.0)
    y = back_substitute(qr.r, qr.q.T @ rhs)
    x = x0 + arn.v @ y
    t2 = time.perf_counter()
    res = float(np.linalg.norm(b - spmv(a, x)))
    return SolveReport(
        approximation=x, m_used=m, selector="identity", sigma_min_sv=1.0,
        kappa_whitened=1.0, residual=res, bound_low=1.0, bound_high=1.0,
        wall_times={"basis": t1 - t0, "select": 0.0, "solve": t2 - t1},
        kappa_v=1.0, sketch_rows=a.n,
    )


# --------------------------------------------------------------------------
# dsRR
# --------------------------------------------------------------------------

def _apply_complex(a: SparseMatrix, x):
    if np.iscomplexobj(x):
        return spmm(a, x.real) + 1j * spmm(a, x.imag)
    return spmm(a, x)


def _ritz(a, v, y, values, sk):
    x = v @ y
    x = x / np.linalg.norm(x, axis=0)
    r = _apply_complex(a, x) - x * values[None, :]
    res = np.linalg.norm(r, axis=0)
    sres = np.linalg.norm(sk.apply(r.real) + 1j * sk.apply(r.imag), axis=0)
    return RitzPairs(values=values, vectors=x, residuals=res, sketched_residuals=sres)


def dsrr(a: SparseMatrix, b, m: int, k: int = 4, s=None, strategy: str = "gpode",
         seed: int = 0, sketch: SketchOperator | None = None,
         basis: KrylovBasis | None = None, strict_alg1: bool = False,
         rank_tol: float = 0.0) -> SolveReport:
    """Sketched Rayleigh-Ritz on the whitened basis.

    Eigenpairs (lambda_i, y_i) of R^{-1} Q^T S A V give Ritz vectors
    x_i = V y_i / ||V y_i||. Per pair, ``bound_low``/``bound_high`` are
    sigma_min/max(V R^{-1}) ||S r_i|| and ``residual`` is the true ||r_i||.
    ``rank_tol`` is handled as in :func:`dsfom`.
    """
    times = {}
    t0 = time.perf_counter()
    basis = _prepare(a, b, m, k, strict_alg1, basis)
    times["basis"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    sk = _sketch_for(basis, strategy, s, seed, sketch, "dsrr")
    sv = sk.apply(basis.v)
    times["select"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    qr = thin_qr(sv, rank_tol=rank_tol)
    small = back_substitute(qr.r, qr.q.T @ sk.apply(basis.m_prod))
    eig = dense_eig(small)
    pairs = _ritz(a, basis.v, eig.vectors, eig.values, sk)
    times["solve"] = time.perf_counter() - t0

    rep = distortion_from_factors(basis.r_v, qr.r)
    return SolveReport(
        approximation=pairs, m_used=basis.m, selector=_selector_of(sk),
        sigma_min_sv=rep.sigma_min_sv, kappa_whitened=rep.kappa_whitened,
        residual=pairs.residuals,
        bound_low=rep.sigma_min_whitened * pairs.sketched_residuals,
        bound_high=rep.sigma_max_whitened * pairs.sketched_residuals,
        wall_times=times, kappa_v=rep.kappa_v, sketch_rows=sv.shape[0], distortion=rep,
    )


def rr_reference(a: SparseMatrix, b, m: int) -> SolveReport:
    """Rayleigh-Ritz on an orthonormal Arnoldi basis (eigenpairs of H_m)."""
    t0 = time.perf_counter()
    arn = arnoldi(a, b, m)
    t1 = time.perf_counter()
    eig: EigenPairs = dense_eig(arn.h_square)
    pairs = _ritz(a, arn.v, eig.vectors, eig.values, Identity())
    t2 = time.perf_counter()
    return SolveReport(
        approximation=pairs, m_used=m, selector="identity", sigma_min_sv=1.0,
        kappa_whitened=1.0, residual=pairs.residuals, bound_low=pairs.residuals,
        bound_high=pairs.residuals, wall_times={"basis": t1 - t0, "select": 0.0, "solve": t2 - t1},
        kappa_v=1.0, sketch_rows=a.n,
    )
