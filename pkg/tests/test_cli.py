import csv
import io

import numpy as np
import pytest

from dskrylov.cli import (DISTORTION_COLUMNS, SWEEP_COLUMNS, ExperimentConfig, distortion_rows,
                          fmt, io_roundtrip, main, parse_m_list, run_distortion, run_sweep)
from dskrylov.errors import ParseError
from dskrylov.la_core import expm
from dskrylov.problems import exp_euler_problem


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_parse_m_list():
    assert parse_m_list("10,20,40") == (10, 20, 40)
    assert parse_m_list("10:50:20") == (10, 30, 50)


@pytest.mark.parametrize("m_list", [(), (10, 10), (20, 10)])
def test_config_rejects_bad_m_list(m_list):
    with pytest.raises(ValueError):
        ExperimentConfig(m_list=m_list)


def test_config_rejects_fom_without_oracle():
    with pytest.raises(ValueError):
        ExperimentConfig(problem="convdiff", solver="dsfom")


def test_fmt_seventeen_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(float("nan")) == ""
    assert fmt(True) == "1" and fmt(None) == ""


def test_sweep_laplacian_d8():
    text, n_err = run_sweep(ExperimentConfig(d=8, solver="dsfom", strategy="deim", m_list=(4, 8), k=2))
    assert n_err == 0
    assert text.splitlines()[0] == ",".join(SWEEP_COLUMNS)
    rows = rows_of(text)
    assert len(rows) == 2
    errs = [float(r["abs_error_or_residual"]) for r in rows]
    assert errs[1] < errs[0]
    # independent check against a dense exponential of the n = 65 operator
    a, b = exp_euler_problem(8)
    assert a.n == 65
    ref = expm(a.to_dense()) @ b
    from dskrylov.solvers import dsfom
    got = dsfom(a, b, 8, 2, strategy="deim").approximation
    assert np.isclose(np.linalg.norm(got - ref), errs[1], rtol=1e-6)


def test_sweep_identity_matches_reference():
    text, _ = run_sweep(ExperimentConfig(d=8, solver="dsfom", strategy="identity", m_list=(4, 8), k=2))
    rel = [float(r["rel_to_reference"]) for r in rows_of(text)]
    assert np.allclose(rel, 1.0, atol=1e-6)


@pytest.mark.parametrize("strategy", ["deim", "sparsesign", "random"])
def test_sweep_byte_identical(strategy):
    cfg = ExperimentConfig(d=8, solver="dsfom", strategy=strategy, m_list=(4, 8), k=2, seed=3)
    assert run_sweep(cfg)[0] == run_sweep(cfg)[0]


def test_sweep_timings_blank_by_default():
    rows = rows_of(run_sweep(ExperimentConfig(d=8, m_list=(4,), k=2))[0])
    assert rows[0]["t_basis"] == ""
    rows = rows_of(run_sweep(ExperimentConfig(d=8, m_list=(4,), k=2, record_times=True))[0])
    assert float(rows[0]["t_basis"]) >= 0


def test_sweep_gmres_and_rr_rows():
    text, n_err = run_sweep(ExperimentConfig(problem="convdiff", solver="dsgmres", strategy="gpode",
                                             d=10, m_list=(5, 10), k=4))
    assert n_err == 0 and len(rows_of(text)) == 2
    text, n_err = run_sweep(ExperimentConfig(problem="graph", solver="dsrr", strategy="gpode",
                                             graph_nodes=150, m_list=(10,), k=8))
    row = rows_of(text)[0]
    assert n_err == 0 and row["flagged_ritz"] != "" and row["bound_low"] != ""


def test_sweep_error_annotation(tmp_path):
    cfg = ExperimentConfig(d=4, solver="dsfom", strategy="deim", m_list=(4, 40), k=2)
    text, n_err = run_sweep(cfg)
    rows = rows_of(text)
    assert n_err == 1
    assert rows[0]["error"] == "" and rows[1]["error"].startswith("m=40:")


def test_distortion_identity_is_one():
    text, _ = run_distortion(ExperimentConfig(d=16, m_list=(10, 20), strategies=("identity",)))
    assert text.splitlines()[0] == ",".join(DISTORTION_COLUMNS)
    for r in rows_of(text):
        assert abs(float(r["kappa_whitened"]) - 1.0) <= 1e-10


def test_distortion_oversampling_raises_sigma_min():
    rows = distortion_rows(ExperimentConfig(d=16, m_list=(10, 20, 30), strategies=("deim", "mpe")))
    by = {(r["m"], r["strategy"]): r for r in rows}
    for m in (10, 20, 30):
        assert by[m, "mpe"]["sigma_min_sv"] >= by[m, "deim"]["sigma_min_sv"]


def test_distortion_qdeim_far_worse_than_gpode_d16():
    # Expected ordering: Q-DEIM with s = m is far worse conditioned than
    # GappyPOD+E with one extra row. Measured ratios stay below 3 at d = 16.
    rows = distortion_rows(ExperimentConfig(d=16, m_list=(10, 20, 30, 40), strategies=("qdeim", "gpode")))
    by = {(r["m"], r["strategy"]): r["kappa_whitened"] for r in rows}
    ratios = [by[m, "qdeim"] / by[m, "gpode"] for m in (10, 20, 30, 40)]
    assert max(ratios) >= 10, ratios


def test_main_exit_codes(tmp_path, capsys):
    out = tmp_path / "a.csv"
    assert main(["sweep", "--d", "8", "--m", "4,8", "--k", "2", "--out", str(out)]) == 0
    assert out.read_text().startswith("m,s,")
    assert main(["sweep", "--d", "4", "--m", "4,40", "--k", "2"]) == 1
    assert main(["sweep", "--problem", "convdiff", "--solver", "dsfom", "--d", "4", "--m", "4"]) == 2


def test_main_output_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["distortion", "--d", "12", "--m", "5:15:5", "--strategy", "sparsesign,gpode", "--seed", "7"]
    main(args + ["--out", str(a)])
    main(args + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_io_roundtrip_identity_mtx(tmp_path):
    p = tmp_path / "eye.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 1.0\n")
    mat, same = io_roundtrip(p)
    assert same and np.array_equal(mat.to_dense(), np.eye(2))


def test_io_roundtrip_edge_list_comments(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("# a comment\n0 1\n# another\n1 2\n2 0\n")
    edges, same = io_roundtrip(p)
    assert same and list(edges) == [(0, 1), (1, 2), (2, 0)]


def test_io_roundtrip_malformed_line(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("0 1\na b c d\n")
    with pytest.raises(ParseError) as info:
        io_roundtrip(p)
    assert info.value.line == 2


def test_convert_laplacian(tmp_path, capsys):
    src, dst = tmp_path / "g.txt", tmp_path / "lap.mtx"
    src.write_text("0 1\n1 2\n2 0\n")
    assert main(["convert", str(src), "--laplacian", "--out", str(dst)]) == 0
    assert main(["convert", str(dst)]) == 0
