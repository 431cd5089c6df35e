import numpy as np
import pytest
from hypothesis import given, strategies as st

from dskrylov.errors import Breakdown
from dskrylov.krylov import arnoldi, truncated_arnoldi
from dskrylov.la_core import thin_svd
from dskrylov.problems import tridiag
from dskrylov.sparse import from_dense, identity, spmv

seeds = st.integers(0, 2**32 - 1)


def principal_angles(x, y):
    # sines of the principal angles; arccos of cosines cannot resolve below ~1e-8
    qx, _ = np.linalg.qr(x)
    qy, _ = np.linalg.qr(y)
    return np.linalg.svd(qy - qx @ (qx.T @ qy), compute_uv=False)


def test_identity_breaks_down():
    b = np.array([3.0, 4.0, 0.0])
    with pytest.raises(Breakdown) as err:
        truncated_arnoldi(identity(3), b, 3, 1)
    assert err.value.index == 1
    assert np.allclose(err.value.basis.v[:, 0], b / 5)
    assert err.value.basis.m == 1


def test_full_window_is_orthonormal():
    rng = np.random.default_rng(0)
    a = from_dense(rng.standard_normal((30, 30)))
    b = rng.standard_normal(30)
    basis = truncated_arnoldi(a, b, 8, 8)
    assert np.abs(basis.v.T @ basis.v - np.eye(8)).max() <= 1e-10
    full = arnoldi(a, b, 8)
    assert np.abs(np.abs(np.sum(basis.v * full.v, axis=0)) - 1).max() <= 1e-10


def test_span_matches_full_arnoldi():
    a = from_dense(tridiag(16, 1, -2, 1))
    b = np.zeros(16)
    b[0] = 1.0
    basis = truncated_arnoldi(a, b, 10, 2)
    full = arnoldi(a, b, 10)
    assert principal_angles(basis.v, full.v).max() <= 1e-8


def test_stored_product():
    rng = np.random.default_rng(1)
    a = from_dense(rng.standard_normal((20, 20)))
    basis = truncated_arnoldi(a, rng.standard_normal(20), 6, 2)
    for j in range(6):
        y = spmv(a, basis.v[:, j])
        assert np.linalg.norm(basis.m_prod[:, j] - y) <= 1e-13 * np.linalg.norm(y)


def test_truncate_equals_rerun():
    rng = np.random.default_rng(2)
    a = from_dense(rng.standard_normal((25, 25)))
    b = rng.standard_normal(25)
    long = truncated_arnoldi(a, b, 10, 3)
    short = truncated_arnoldi(a, b, 6, 3)
    assert np.array_equal(long.truncate(6).v, short.v)
    assert np.allclose(long.r_v[:6, :6], long.truncate(6).r_v)


def test_strict_alg1_single_pass():
    rng = np.random.default_rng(3)
    a = from_dense(rng.standard_normal((40, 40)))
    b = rng.standard_normal(40)
    strict = truncated_arnoldi(a, b, 10, 2, strict_alg1=True)
    assert np.allclose(np.linalg.norm(strict.v, axis=0), 1.0)
    assert principal_angles(strict.v, truncated_arnoldi(a, b, 10, 2).v).max() <= 1e-8


def test_invalid_arguments():
    with pytest.raises(ValueError):
        truncated_arnoldi(identity(3), np.zeros(3), 2, 1)
    with pytest.raises(ValueError):
        truncated_arnoldi(identity(3), np.ones(3), 4, 1)
    with pytest.raises(ValueError):
        truncated_arnoldi(identity(3), np.ones(3), 2, 0)


def test_arnoldi_hessenberg_structure():
    rng = np.random.default_rng(4)
    a = from_dense(rng.standard_normal((15, 15)))
    res = arnoldi(a, rng.standard_normal(15), 7)
    assert np.all(np.tril(res.h, -2) == 0.0)
    assert np.allclose(a.to_dense() @ res.v, np.column_stack([res.v, res.v_next]) @ res.h)


def random_problem(seed, n):
    rng = np.random.default_rng(seed)
    dense = rng.standard_normal((n, n)) * (rng.random((n, n)) < 0.4) + np.diag(rng.random(n))
    return from_dense(dense), rng.standard_normal(n)


@given(seeds, st.integers(1, 6), st.integers(2, 14))
def test_prop_window_orthogonality(seed, k, m):
    a, b = random_problem(seed, 40)
    v = truncated_arnoldi(a, b, m, k).v
    assert np.allclose(np.linalg.norm(v, axis=0), 1.0, atol=1e-13)
    for j in range(m):
        for i in range(max(0, j - k), j):
            assert abs(v[:, j] @ v[:, i]) <= 1e-10


@given(seeds, st.integers(1, 6), st.integers(2, 24))
def test_prop_sigma_max_bound(seed, k, m):
    a, b = random_problem(seed, 60)
    v = truncated_arnoldi(a, b, m, k).v
    assert thin_svd(v).sigma_max <= m ** 0.75


@given(seeds, st.integers(1, 3), st.integers(2, 6))
def test_prop_span_matches_monomials(seed, k, m):
    a, b = random_problem(seed, 32)
    mono = [b / np.linalg.norm(b)]
    for _ in range(m - 1):
        w = spmv(a, mono[-1])
        mono.append(w / np.linalg.norm(w))
    mono = np.column_stack(mono)
    sig = np.linalg.svd(mono, compute_uv=False)
    if sig[-1] < 1e-8 * sig[0]:
        return  # monomial basis not numerically full rank: no oracle
    v = truncated_arnoldi(a, b, m, k).v
    joint = np.linalg.svd(np.column_stack([v, mono]), compute_uv=False)
    assert joint[m] <= 1e-8 * joint[0]
