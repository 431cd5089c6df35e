"""Dense linear-algebra kernels.

Everything here works on plain float64 ``numpy`` arrays. The kernels are
deliberately simple, sequential and deterministic; they are sized for the
small projected problems (a few hundred columns at most) that the sketched
Krylov solvers produce, plus the occasional tall basis.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NoConvergence, Overflow, RankDeficient, SingularTriangular

EPS = np.finfo(float).eps

MatrixFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QrFactors:
    q: np.ndarray
    r: np.ndarray


@dataclass(frozen=True)
class SvdFactors:
    u: np.ndarray
    sigma: np.ndarray
    w: np.ndarray

    @property
    def sigma_min(self) -> float:
        return float(self.sigma[-1])

    @property
    def sigma_max(self) -> float:
        return float(self.sigma[0])


@dataclass(frozen=True)
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray


def as_matrix(a, name="matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-d float64 array (copying only if needed)."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


# --------------------------------------------------------------------------
# Householder QR
# --------------------------------------------------------------------------

def _householder_qr(a: np.ndarray, pivoting: bool = False):
    """Householder QR of ``a`` (rows x cols), optionally with column pivoting.

    Returns ``(q, r, perm)`` with ``q`` of shape rows x t, ``r`` of shape
    t x cols, t = min(rows, cols), and ``a[:, perm] = q @ r``. The diagonal
    of ``r`` is made nonnegative.
    """
    work = np.array(a, dtype=float, order="F", copy=True)
    rows, cols = work.shape
    t = min(rows, cols)
    perm = np.arange(cols)
    reflectors = []
    for j in range(t):
        if pivoting:
            norms = np.einsum("ij,ij->j", work[j:, j:], work[j:, j:])
            # argmax returns the first maximum: ties go to the lowest index
            piv = j + int(np.argmax(norms))
            if piv != j:
                work[:, [j, piv]] = work[:, [piv, j]]
                perm[[j, piv]] = perm[[piv, j]]
        x = work[j:, j]
        normx = np.linalg.norm(x)
        if normx == 0.0:
            reflectors.append(None)
            continue
        alpha = -normx if x[0] >= 0 else normx
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)
        block = work[j:, j:]
        block -= 2.0 * np.outer(v, v @ block)
        work[j, j] = alpha
        work[j + 1:, j] = 0.0
        reflectors.append(v)

    q = np.zeros((rows, t))
    q[:t, :t] = np.eye(t)
    for j in range(t - 1, -1, -1):
        v = reflectors[j]
        if v is None:
            continue
        q[j:, j:] -= 2.0 * np.outer(v, v @ q[j:, j:])
    r = np.triu(work[:t, :])

    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    r *= signs[:, None]
    q *= signs[None, :]
    return q, r, perm


def thin_qr(a, rank_tol: float = 1e-14) -> QrFactors:
    """Thin QR ``a = q r`` of a tall matrix, with ``diag(r) >= 0``.

    Raises :class:`RankDeficient` for the first column whose diagonal entry
    falls to ``rank_tol * ||a||_F`` or below. Pass ``rank_tol=0`` to skip the
    check (exactly zero pivots still raise).
    """
    a = as_matrix(a)
    n, m = a.shape
    if n < m:
        raise ValueError(f"thin_qr needs rows >= cols, got {a.shape}")
    q, r, _ = _householder_qr(a)
    threshold = rank_tol * np.linalg.norm(a)
    small = np.flatnonzero(np.abs(np.diag(r)) <= threshold)
    if small.size:
        raise RankDeficient(int(small[0]))
    return QrFactors(q=q, r=r)


def r_factor(a) -> np.ndarray:
    """Triangular factor of a thin QR, without any rank check."""
    a = as_matrix(a)
    return _householder_qr(a)[1]


def pivoted_qr(a):
    """Householder QR with greedy column pivoting, ``a[:, perm] = q r``.

    At each step the remaining column of largest norm is moved to the front;
    exact ties go to the lowest column index. Rank deficiency shows up as
    trailing zero rows of ``r``.
    """
    a = as_matrix(a)
    if not np.any(a):
        raise ValueError("pivoted_qr of an all-zero matrix")
    q, r, perm = _householder_qr(a, pivoting=True)
    return QrFactors(q=q, r=r), perm


def back_substitute(r, b) -> np.ndarray:
    """Solve ``r x = b`` for upper-triangular ``r``; ``b`` may be a vector or a block."""
    r = np.asarray(r, dtype=float)
    b = np.asarray(b)
    m = r.shape[0]
    if r.shape != (m, m) or b.shape[0] != m:
        raise ValueError(f"shape mismatch: r {r.shape}, b {b.shape}")
    zero = np.flatnonzero(np.diag(r) == 0.0)
    if zero.size:
        raise SingularTriangular(int(zero[0]))
    x = np.zeros(b.shape, dtype=np.result_type(r, b, float))
    for i in range(m - 1, -1, -1):
        x[i] = (b[i] - r[i, i + 1:] @ x[i + 1:]) / r[i, i]
    return x


def triangular_inverse(r) -> np.ndarray:
    return back_substitute(r, np.eye(np.asarray(r).shape[0]))


# --------------------------------------------------------------------------
# One-sided Jacobi SVD
# --------------------------------------------------------------------------

def _round_robin(m: int):
    """Tournament schedule: m-1 (or m) rounds of disjoint column pairs."""
    size = m + (m % 2)
    players = list(range(size))
    rounds = []
    for _ in range(size - 1):
        left, right = [], []
        for i in range(size // 2):
            p, q = players[i], players[size - 1 - i]
            if max(p, q) < m:
                left.append(min(p, q))
                right.append(max(p, q))
        if left:
            rounds.append((np.array(left), np.array(right)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _complete_columns(u: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace columns not in ``keep`` by an orthonormal completion."""
    rows, cols = u.shape
    out = u.copy()
    basis = [out[:, j] for j in range(cols) if keep[j]]
    candidate = 0
    for j in range(cols):
        if keep[j]:
            continue
        while True:
            e = np.zeros(rows)
            e[candidate % rows] = 1.0
            candidate += 1
            for _ in range(2):
                for b in basis:
                    e -= (b @ e) * b
            nrm = np.linalg.norm(e)
            if nrm > 0.5:
                break
        out[:, j] = e / nrm
        basis.append(out[:, j])
    return out


def thin_svd(a, max_sweeps: int = 60) -> SvdFactors:
    """Thin SVD ``a = u diag(sigma) w^T`` of a tall matrix by one-sided Jacobi.

    Tall inputs are first reduced to their triangular QR factor so the
    rotations act on an m x m block.
    """
    a = as_matrix(a)
    s, m = a.shape
    if s < m:
        raise ValueError(f"thin_svd needs rows >= cols, got {a.shape}")
    if s > m:
        q0, work, _ = _householder_qr(a)
    else:
        q0, work = None, a.copy()
    work = np.array(work, order="F")
    w = np.eye(m)
    tol = EPS * max(m, 1)
    rounds = _round_robin(m)

    for _ in range(max_sweeps):
        rotated = False
        for left, right in rounds:
            bl, br = work[:, left], work[:, right]
            alpha = np.einsum("ij,ij->j", bl, bl)
            beta = np.einsum("ij,ij->j", br, br)
            gamma = np.einsum("ij,ij->j", bl, br)
            active = np.abs(gamma) > tol * np.sqrt(alpha * beta)
            if not active.any():
                continue
            rotated = True
            li, ri = left[active], right[active]
            zeta = (beta[active] - alpha[active]) / (2.0 * gamma[active])
            sgn = np.where(zeta >= 0, 1.0, -1.0)
            t = sgn / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            sn = c * t
            for mat in (work, w):
                x, y = mat[:, li], mat[:, ri]
                mat[:, li] = c * x - sn * y
                mat[:, ri] = sn * x + c * y
        if not rotated:
            break
    else:
        raise NoConvergence(f"one-sided Jacobi did not converge in {max_sweeps} sweeps")

    sigma = np.linalg.norm(work, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, work, w = sigma[order], work[:, order], w[:, order]
    keep = sigma > 0.0
    u = np.zeros_like(work)
    u[:, keep] = work[:, keep] / sigma[keep]
    if not keep.all():
        u = _complete_columns(u, keep)
    if q0 is not None:
        u = q0 @ u
    return SvdFactors(u=u, sigma=sigma, w=w)


def singular_values(a) -> np.ndarray:
    return thin_svd(a).sigma


# --------------------------------------------------------------------------
# Nonsymmetric eigenproblem: Hessenberg + Francis double shift
# --------------------------------------------------------------------------

def hessenberg(a):
    """Householder reduction ``a = q h q^T`` with ``h`` upper Hessenberg."""
    h = np.array(as_matrix(a), dtype=float, copy=True)
    n = h.shape[0]
    q = np.eye(n)
    for j in range(n - 2):
        x = h[j + 1:, j]
        normx = np.linalg.norm(x)
        if normx == 0.0:
            continue
        alpha = -normx if x[0] >= 0 else normx
        v = x.copy()
        v[0] -= alpha
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        h[j + 1:, :] -= 2.0 * np.outer(v, v @ h[j + 1:, :])
        h[:, j + 1:] -= 2.0 * np.outer(h[:, j + 1:] @ v, v)
        q[:, j + 1:] -= 2.0 * np.outer(q[:, j + 1:] @ v, v)
        h[j + 2:, j] = 0.0
    return h, q


def _hqr(h: np.ndarray, max_iter: int) -> np.ndarray:
    """Eigenvalues of an upper Hessenberg matrix by the Francis double-shift QR."""
    n = h.shape[0]
    # 1-based padded copy keeps the index bookkeeping of the classic hqr routine
    a = np.zeros((n + 1, n + 1))
    a[1:, 1:] = h
    wr = np.zeros(n + 1)
    wi = np.zeros(n + 1)
    anorm = np.abs(np.triu(h, -1)).sum()
    nn = n
    t = 0.0
    total = 0
    while nn >= 1:
        its = 0
        while True:
            l = 1
            for ll in range(nn, 1, -1):
                s = abs(a[ll - 1, ll - 1]) + abs(a[ll, ll])
                if s == 0.0:
                    s = anorm
                if abs(a[ll, ll - 1]) <= EPS * s:
                    a[ll, ll - 1] = 0.0
                    l = ll
                    break
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = np.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + (z if p >= 0 else -z)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = z
                    wi[nn] = -z
                nn -= 2
                break

            if total >= max_iter:
                raise NoConvergence(f"Francis QR exceeded {max_iter} iterations")
            if its > 0 and its % 10 == 0:
                # exceptional shift
                t += x
                for i in range(1, nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                y = x = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            total += 1

            m = nn - 2
            while m >= l:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u <= EPS * v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = np.sqrt(p * p + q * q + r * r)
                if p < 0:
                    s = -s
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                cols = slice(k, nn + 1)
                pv = a[k, cols] + q * a[k + 1, cols]
                if k != nn - 1:
                    pv += r * a[k + 2, cols]
                    a[k + 2, cols] -= pv * z
                a[k + 1, cols] -= pv * y
                a[k, cols] -= pv * x
                mmin = min(nn, k + 3)
                rows = slice(l, mmin + 1)
                pv = x * a[rows, k] + y * a[rows, k + 1]
                if k != nn - 1:
                    pv += z * a[rows, k + 2]
                    a[rows, k + 2] -= pv * r
                a[rows, k + 1] -= pv * q
                a[rows, k] -= pv
            if l >= nn - 1:
                break
    return wr[1:] + 1j * wi[1:]


def _inverse_iteration(h: np.ndarray, lam: complex, steps: int = 3) -> np.ndarray:
    n = h.shape[0]
    scale = max(np.linalg.norm(h), 1.0)
    shifted = h.astype(complex) - (lam + 10 * EPS * scale) * np.eye(n)
    x = np.ones(n, dtype=complex) / np.sqrt(n)
    for _ in range(steps):
        try:
            y = np.linalg.solve(shifted, x)
        except np.linalg.LinAlgError:
            shifted -= 100 * EPS * scale * np.eye(n)
            y = np.linalg.solve(shifted, x)
        nrm = np.linalg.norm(y)
        if not np.isfinite(nrm) or nrm == 0.0:
            break
        x = y / nrm
    return x


def dense_eig(m_mat, max_dim: int = 2000) -> EigenPairs:
    """All eigenpairs of a small real square matrix.

    Eigenvalues come from Francis double-shift QR on the Hessenberg form,
    eigenvectors from inverse iteration on that form. Pairs are sorted by
    descending magnitude (conjugate pairs: positive imaginary part first);
    each vector has unit norm and its largest entry real positive.
    """
    mat = as_matrix(m_mat)
    n = mat.shape[0]
    if mat.shape != (n, n):
        raise ValueError(f"dense_eig needs a square matrix, got {mat.shape}")
    if n > max_dim:
        raise ValueError(f"dense_eig is capped at {max_dim} rows")
    if n == 0:
        return EigenPairs(values=np.zeros(0, complex), vectors=np.zeros((0, 0), complex))
    h, q = hessenberg(mat)
    values = _hqr(h, max_iter=50 * n)
    order = np.lexsort((-values.imag, -np.abs(values)))
    values = values[order]

    vectors = np.zeros((n, n), dtype=complex)
    for i, lam in enumerate(values):
        if lam.imag < 0 and i > 0 and values[i - 1] == np.conj(lam):
            vectors[:, i] = np.conj(vectors[:, i - 1])
            continue
        x = q @ _inverse_iteration(h, lam)
        x /= np.linalg.norm(x)
        big = np.argmax(np.abs(x))
        x *= np.conj(x[big]) / abs(x[big])
        vectors[:, i] = x
    return EigenPairs(values=values, vectors=vectors)


# --------------------------------------------------------------------------
# Matrix exponential
# --------------------------------------------------------------------------

_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def expm(m_mat) -> np.ndarray:
    """Matrix exponential by scaling and squaring with the [13/13] Padé approximant.

    Raises :class:`Overflow` when the result does not fit in float64. A large
    norm alone is not an error: projected operators with a stable spectrum
    routinely have ||M||_1 in the thousands while exp(M) is tame.
    """
    a = as_matrix(m_mat)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"expm needs a square matrix, got {a.shape}")
    norm1 = np.abs(a).sum(axis=0).max() if n else 0.0
    if norm1 == 0.0:
        return np.eye(n)
    with np.errstate(over="ignore", invalid="ignore"):
        result = _expm_pade(a, n, norm1)
    if not np.all(np.isfinite(result)):
        raise Overflow(f"exp(M) overflows float64 (||M||_1 = {norm1:.3g})")
    return result


def _expm_pade(a, n, norm1):
    squarings = 0
    if norm1 > _THETA13:
        squarings = int(np.ceil(np.log2(norm1 / _THETA13)))
        a = a / 2.0 ** squarings
    b = _PADE13
    ident = np.eye(n)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    result = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        result = result @ result
    return result


# --------------------------------------------------------------------------
# Smallest eigenvalue of diag(d) + g g^T
# --------------------------------------------------------------------------

def secular_smallest_eig_batch(d, g, max_iter: int = 200) -> np.ndarray:
    """``lambda_min(diag(d) + g_i g_i^T)`` for every row ``g_i`` of ``g``.

    Bisection on ``[min(d), min(d) + ||g_i||^2]``. The number of eigenvalues
    below a trial point is read off the secular function
    ``1 + sum_j g_j^2 / (d_j - x)`` via the Haynsworth inertia formula, which
    handles deflated (zero or repeated) components without special cases.
    """
    d = np.asarray(d, dtype=float)
    g = np.atleast_2d(np.asarray(g, dtype=float))
    g2 = g * g
    dmin = d.min()
    lo = np.full(g.shape[0], dmin)
    hi = dmin + g2.sum(axis=1)
    nz = g2 != 0.0
    for _ in range(max_iter):
        width = hi - lo
        if np.all(width <= 2 * EPS * np.maximum(np.abs(hi), np.finfo(float).tiny)):
            break
        mid = 0.5 * (lo + hi)
        diff = d[None, :] - mid[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(nz, g2 / diff, 0.0)
        secular = 1.0 + terms.sum(axis=1)
        below = (diff < 0).sum(axis=1) - (secular <= 0)
        go_down = below >= 1
        hi = np.where(go_down, mid, hi)
        lo = np.where(go_down, lo, mid)
    return 0.5 * (lo + hi)


def secular_smallest_eig(d, g) -> float:
    """Smallest eigenvalue of ``diag(d) + g g^T`` (d nonnegative)."""
    return float(secular_smallest_eig_batch(d, np.asarray(g, dtype=float)[None, :])[0])
