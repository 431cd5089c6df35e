"""Acceptance criteria, one test each, at their stated tolerances and budgets.

Every test prints (and records for the terminal summary) one line
``criterion N: PASS|FAIL  <details>``.
"""
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from dskrylov.cli import ExperimentConfig, main, run_distortion, run_sweep
from dskrylov.krylov import truncated_arnoldi
from dskrylov.problems import (exp_euler_exact, exp_euler_problem, graph_in_laplacian,
                               implicit_euler_problem, preferential_attachment_edges)
from dskrylov.rowselect import RowSelector
from dskrylov.sketch import RowSubset, distortion_report
from dskrylov.solvers import (build_sketch, dsfom, dsgmres, dsrr, fom_reference,
                              gmres_reference, rr_reference)
from dskrylov.sparse import from_dense

TESTS = Path(__file__).parent


def verdict(record_property, number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    record_property("acceptance", line)
    assert ok, line


def rel(x, y):
    return np.linalg.norm(x - y) / np.linalg.norm(y)


def test_criterion_1_full_selection(record_property):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(40, 257))
        dense = rng.standard_normal((n, n)) * (rng.random((n, n)) < 0.08) / np.sqrt(0.08 * n)
        a = from_dense(dense - 0.5 * np.eye(n))
        b = rng.standard_normal(n)
        m = int(rng.integers(4, 13))
        full = RowSubset(RowSelector(tuple(range(n))))
        basis = truncated_arnoldi(a, b, m, 3)
        f_ds = dsfom(a, b, m, 3, sketch=full, basis=basis).approximation
        f_ref = fom_reference(a, b, m).approximation
        x_ds = dsgmres(a, b, None, m, 3, sketch=full, basis=basis)
        x_ref = gmres_reference(a, b, None, m)
        l_ds = np.sort_complex(dsrr(a, b, m, 3, sketch=full, basis=basis).approximation.values)
        l_ref = np.sort_complex(rr_reference(a, b, m).approximation.values)
        worst = max(worst, rel(f_ds, f_ref), rel(x_ds.approximation, x_ref.approximation),
                    abs(x_ds.residual - x_ref.residual) / np.linalg.norm(b),
                    np.max(np.abs(l_ds - l_ref)) / np.max(np.abs(l_ref)))
    elapsed = time.perf_counter() - t0
    verdict(record_property, 1, worst <= 1e-10 and elapsed < 10,
            f"max relative mismatch {worst:.2e} (tol 1e-10), {elapsed:.1f}s")


def test_criterion_2_laplacian_exp_euler(record_property):
    t0 = time.perf_counter()
    d, k, ms = 64, 2, range(10, 121, 10)
    a, b = exp_euler_problem(d)
    exact = exp_euler_exact(d)
    basis = truncated_arnoldi(a, b, max(ms), k)
    ref = {m: np.linalg.norm(fom_reference(a, b, m).approximation - exact) for m in ms}
    problems, best = [], {}
    for strategy in ("deim", "gpode", "mpe", "sparsesign"):
        errs = []
        for m in ms:
            rep = dsfom(a, b, m, k, strategy=strategy, basis=basis.truncate(m))
            err = np.linalg.norm(rep.approximation - exact)
            errs.append(err)
            if rep.kappa_whitened <= 100 and err > 100 * ref[m]:
                problems.append(f"{strategy} m={m}: {err:.1e} vs ref {ref[m]:.1e}")
        best[strategy] = min(errs)
        if best[strategy] > 1e-8:
            problems.append(f"{strategy} never reaches 1e-8 (best {best[strategy]:.1e})")
    elapsed = time.perf_counter() - t0
    if elapsed >= 120:
        problems.append(f"runtime {elapsed:.0f}s")
    detail = ", ".join(f"{s} best {e:.1e}" for s, e in best.items())
    verdict(record_property, 2, not problems, f"{detail}; {elapsed:.0f}s " + "; ".join(problems))


def test_criterion_3_qdeim_failure_and_cure(record_property):
    t0 = time.perf_counter()
    d, k, ms = 64, 2, range(10, 121, 10)
    a, b = exp_euler_problem(d)
    basis = truncated_arnoldi(a, b, max(ms), k)
    kq, kg = [], []
    for m in ms:
        v = basis.v[:, :m]
        kq.append(distortion_report(v, build_sketch(v, "qdeim")).kappa_whitened)
        kg.append(distortion_report(v, build_sketch(v, "gpode")).kappa_whitened)
    elapsed = time.perf_counter() - t0
    ok = max(kq) > 1e6 and max(kg) < 1e3 and elapsed < 60
    verdict(record_property, 3, ok,
            f"max kappa_whitened qdeim {max(kq):.2e} (need > 1e6), gpode {max(kg):.2e} (need < 1e3), "
            f"{elapsed:.0f}s")


def test_criterion_4_convdiff_gmres(record_property):
    t0 = time.perf_counter()
    d, k, ms = 64, 4, range(20, 201, 20)
    a, b = implicit_euler_problem(d, 1e-3)
    bnorm = np.linalg.norm(b)
    basis = truncated_arnoldi(a, b, max(ms), k)
    res, ref, floor_ok = {}, {}, True
    for m in ms:
        res[m] = dsgmres(a, b, None, m, k, strategy="gpode", s="m+1", basis=basis.truncate(m)).residual
        ref[m] = gmres_reference(a, b, None, m).residual
        floor_ok &= res[m] >= ref[m] - 1e-10 * bnorm
    m_best = min(res, key=res.get)
    ratio = res[m_best] / ref[m_best]
    elapsed = time.perf_counter() - t0
    verdict(record_property, 4, ratio <= 10 and floor_ok and elapsed < 120,
            f"best m={m_best}: {res[m_best]:.2e} vs ref {ref[m_best]:.2e} (ratio {ratio:.2f}), "
            f"floor {'holds' if floor_ok else 'violated'}, {elapsed:.0f}s")


def test_criterion_5_graph_ritz_sandwich(record_property):
    t0 = time.perf_counter()
    lap, _ = graph_in_laplacian(preferential_attachment_edges(2000, seed=0))
    b = np.random.default_rng(0).random(lap.n)
    rep = dsrr(lap, b, 60, 8, strategy="gpode", s="1.5x")
    pairs = rep.approximation
    conv = pairs.residuals < 1e-6
    res, lo, hi = pairs.residuals[conv], rep.bound_low[conv], rep.bound_high[conv]
    ok_pairs = np.all(lo / 1.1 <= res) and np.all(res <= 1.1 * hi)
    elapsed = time.perf_counter() - t0
    verdict(record_property, 5, bool(conv.any() and ok_pairs and elapsed < 60),
            f"n={lap.n}, {int(conv.sum())} pairs with residual < 1e-6, sandwich "
            f"{'holds' if ok_pairs else 'violated'} within 1.1, {elapsed:.0f}s")


PROPERTY_TESTS = (
    "test_sketch.py::test_prop_sandwich_any_selector",
    "test_rowselect.py::test_prop_sigma_min_monotone",
    "test_rowselect.py::test_prop_mpe_greedy_optimal",
    "test_krylov.py::test_prop_sigma_max_bound",
    "test_krylov.py::test_prop_window_orthogonality",
    "test_la_core.py::test_prop_qr_reconstruction",
    "test_la_core.py::test_prop_svd_reconstruction",
    "test_la_core.py::test_prop_eig_residuals",
    "test_la_core.py::test_prop_expm_taylor",
)


def test_criterion_6_property_suites(record_property):
    ids = [str(TESTS / t) for t in PROPERTY_TESTS]
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           "--hypothesis-show-statistics", *ids],
                          capture_output=True, text=True, cwd=TESTS.parent)
    passed = proc.stdout.count("passing examples")
    verdict(record_property, 6, proc.returncode == 0,
            f"{len(ids)} property suites, exit {proc.returncode}, {passed} with statistics"
            + ("" if proc.returncode == 0 else "\n" + proc.stdout[-2000:]))


def test_criterion_7_cli_determinism(record_property, tmp_path):
    runs = [
        ["sweep", "--d", "12", "--m", "5:20:5", "--strategy", "sparsesign", "--seed", "4"],
        ["sweep", "--d", "12", "--m", "5:20:5", "--strategy", "mpe"],
        ["sweep", "--problem", "convdiff", "--d", "12", "--m", "10,20", "--strategy", "gpode"],
        ["sweep", "--problem", "graph", "--graph-nodes", "200", "--m", "10", "--strategy", "gpode"],
        ["distortion", "--d", "12", "--m", "5:20:5", "--strategy", "deim,qdeim,gpode,mpe,sparsesign,random"],
    ]
    differing = []
    for i, args in enumerate(runs):
        outs = []
        for rep in range(2):
            out = tmp_path / f"{i}_{rep}.csv"
            # one run in-process, one in a fresh interpreter (different hash seed)
            if rep == 0:
                main(args + ["--out", str(out)])
            else:
                subprocess.run([sys.executable, "-m", "dskrylov", *args, "--out", str(out)],
                               check=False, capture_output=True)
            outs.append(out.read_bytes())
        if outs[0] != outs[1] or not outs[0]:
            differing.append(" ".join(args))
    verdict(record_property, 7, not differing,
            f"{len(runs)} CLI configurations byte-identical across runs"
            + ("" if not differing else f"; differing: {differing}"))
