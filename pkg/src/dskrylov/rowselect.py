"""Deterministic row-subset selection for a tall basis V (n x m).

DEIM and Q-DEIM pick m rows; MPE and GappyPOD+E (``gpode``) greedily
append rows to raise sigma_min of the selected block, one row per step.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import Exhausted, SingularInterpolation
from .la_core import pivoted_qr, secular_smallest_eig_batch, thin_svd

SINGULAR_TOL = 1e-14

OVERSAMPLERS = ("mpe", "gpode")
STRATEGIES = ("deim", "qdeim", "mpe", "gpode")
# oversampling strategies and the m-row selector they start from
DEFAULT_INIT = {"mpe": "deim", "gpode": "qdeim"}


@dataclass(frozen=True)
class RowSelector:
    """Ordered, repeat-free row indices p; the sketch is S = I(p, :)."""

    p: tuple

    def __post_init__(self):
        p = tuple(int(i) for i in self.p)
        if len(set(p)) != len(p):
            raise ValueError("row selector has repeated indices")
        if p and min(p) < 0:
            raise ValueError("row indices must be nonnegative")
        object.__setattr__(self, "p", p)

    def __len__(self):
        return len(self.p)

    @property
    def indices(self) -> np.ndarray:
        return np.array(self.p, dtype=np.int64)

    def check_bound(self, n: int) -> None:
        if self.p and max(self.p) >= n:
            raise ValueError(f"row index {max(self.p)} out of range for n={n}")


def deim(v) -> RowSelector:
    """Greedy DEIM interpolation indices, one per column of ``v``."""
    v = np.asarray(v, dtype=float)
    n, m = v.shape
    first = v[:, 0]
    if not np.any(first):
        raise SingularInterpolation(0)
    p = [int(np.argmax(np.abs(first)))]
    for j in range(1, m):
        col = v[:, j]
        try:
            c = np.linalg.solve(v[p, :j], col[p])
        except np.linalg.LinAlgError:
            raise SingularInterpolation(j) from None
        r = col - v[:, :j] @ c
        r[p] = 0.0
        pj = int(np.argmax(np.abs(r)))
        if abs(r[pj]) <= SINGULAR_TOL * np.max(np.abs(col)):
            raise SingularInterpolation(j)
        p.append(pj)
    return RowSelector(tuple(p))


def qdeim(v) -> RowSelector:
    """First m column pivots of a pivoted QR of ``v^T``."""
    v = np.asarray(v, dtype=float)
    _, perm = pivoted_qr(v.T)
    return RowSelector(tuple(perm[: v.shape[1]]))


def mpe_scores(v_rows, svd) -> np.ndarray:
    """Post-update lambda_min of Sigma^2 + (v_+ W)^*(v_+ W) for each candidate row."""
    return secular_smallest_eig_batch(svd.sigma ** 2, v_rows @ svd.w)


def gpode_scores(v_rows, svd) -> np.ndarray:
    """Alignment |v_+ w_min| with the right singular vector of sigma_min."""
    return np.abs(v_rows @ svd.w[:, -1])


_SCORERS = {"mpe": mpe_scores, "gpode": gpode_scores}


@dataclass
class OversampleTrace:
    sigma_min: list = field(default_factory=list)
    picks: list = field(default_factory=list)


def oversample(v, p0: RowSelector, s: int, strategy: str = "mpe",
               trace: OversampleTrace | None = None) -> RowSelector:
    """Extend ``p0`` to ``s`` rows, each step taking the best-scoring unselected row.

    ``trace``, if given, records sigma_min of the selected block before every
    step (and once more at the end) together with the chosen rows.
    """
    v = np.asarray(v, dtype=float)
    n, m = v.shape
    strategy = strategy.lower()
    if strategy not in _SCORERS:
        raise ValueError(f"unknown oversampling strategy {strategy!r}")
    if s > n:
        raise Exhausted(f"cannot select {s} rows out of {n}")
    if not m <= len(p0) <= s:
        raise ValueError(f"need m <= len(p0) <= s, got m={m}, len(p0)={len(p0)}, s={s}")
    score = _SCORERS[strategy]
    p = list(p0.p)
    free = np.ones(n, dtype=bool)
    free[p] = False
    while len(p) < s:
        svd = thin_svd(v[p])
        cand = np.flatnonzero(free)
        scores = score(v[cand], svd)
        pick = int(cand[int(np.argmax(scores))])
        if trace is not None:
            trace.sigma_min.append(svd.sigma_min)
            trace.picks.append(pick)
        p.append(pick)
        free[pick] = False
    if trace is not None:
        trace.sigma_min.append(thin_svd(v[p]).sigma_min)
    return RowSelector(tuple(p))


def random_rows(n: int, s: int, seed: int = 0) -> RowSelector:
    """Uniformly random rows; a diagnostic baseline only."""
    if s > n:
        raise Exhausted(f"cannot select {s} rows out of {n}")
    rng = np.random.default_rng(seed)
    return RowSelector(tuple(sorted(int(i) for i in rng.choice(n, size=s, replace=False))))


def select_rows(v, s: int | None = None, strategy: str = "deim", init: str | None = None) -> RowSelector:
    """Row selection as used by the sketched solvers.

    ``deim``/``qdeim`` return exactly m rows. ``mpe`` and ``gpode`` start
    from ``init`` (by default DEIM for MPE and Q-DEIM for GappyPOD+E) and
    oversample to ``s`` rows.
    """
    v = np.asarray(v, dtype=float)
    m = v.shape[1]
    strategy = strategy.lower()
    s = m if s is None else int(s)
    if s < m:
        raise ValueError(f"sketch size s={s} is smaller than m={m}")
    if strategy in ("deim", "qdeim"):
        if s != m:
            raise ValueError(f"{strategy} selects exactly m={m} rows; use mpe or gpode to oversample")
        return deim(v) if strategy == "deim" else qdeim(v)
    if strategy not in OVERSAMPLERS:
        raise ValueError(f"unknown row selection strategy {strategy!r}")
    base = init or DEFAULT_INIT[strategy]
    p0 = deim(v) if base == "deim" else qdeim(v)
    return oversample(v, p0, s, strategy)
