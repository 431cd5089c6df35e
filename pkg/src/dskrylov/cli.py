"""Experiment driver: solver sweeps and distortion diagnostics written as CSV.

    python3 -m dskrylov sweep --problem laplacian2d --solver dsfom --strategy gpode \\
        --d 64 --m 10:120:10 --k 2 --out fom_gpode.csv
    python3 -m dskrylov distortion --problem laplacian2d --strategy qdeim,gpode \\
        --d 64 --m 10:120:10 --k 2 --out distortion.csv
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import problems
from .errors import Breakdown, DsKrylovError
from .krylov import KrylovBasis, truncated_arnoldi
from .sketch import distortion_report
from .solvers import (SKETCH_STRATEGIES, build_sketch, dsfom, dsgmres, dsrr, fom_reference,
                      gmres_reference, rr_reference)
from .sparse import SparseMatrix, read_matrix_market, spmv, write_matrix_market

PROBLEMS = ("laplacian2d", "convdiff", "graph")
SOLVERS = ("dsfom", "dsgmres", "dsrr", "fom", "gmres", "rr")
REFERENCE_OF = {"dsfom": "fom", "dsgmres": "gmres", "dsrr": "rr"}
DEFAULT_SOLVER = {"laplacian2d": "dsfom", "convdiff": "dsgmres", "graph": "dsrr"}

SWEEP_COLUMNS = ("m", "s", "abs_error_or_residual", "rel_to_reference", "sigma_min_sv",
                 "kappa_v", "kappa_whitened", "bound_low", "bound_high", "t_basis",
                 "t_select", "t_solve", "unreliable", "flagged_ritz", "error")
DISTORTION_COLUMNS = ("m", "strategy", "s", "sigma_min_sv", "sigma_max_sv", "kappa_v",
                      "kappa_whitened", "lower", "upper", "unreliable", "error")


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "laplacian2d"
    solver: str = "dsfom"
    strategy: str = "deim"
    d: int = 64
    m_list: tuple = (10, 20, 30)
    k: int = 2
    s_rule: str | None = None
    seed: int = 0
    out: str | None = None
    strict_alg1: bool = False
    graph: str | None = None
    graph_nodes: int = 2000
    scaling: str = "mesh"
    record_times: bool = False
    strategies: tuple = ()

    def __post_init__(self):
        m = tuple(int(x) for x in self.m_list)
        if not m or any(b <= a for a, b in zip(m, m[1:])) or m[0] < 1:
            raise ValueError("m_list must be nonempty, positive and strictly increasing")
        object.__setattr__(self, "m_list", m)
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.solver in ("dsfom", "fom") and self.problem != "laplacian2d":
            raise ValueError("dsfom/fom sweeps need the laplacian2d problem (exact exp oracle)")
        for strat in (self.strategy,) + tuple(self.strategies):
            if strat not in SKETCH_STRATEGIES:
                raise ValueError(f"unknown strategy {strat!r}")

    @property
    def reference_solver(self) -> str:
        return REFERENCE_OF.get(self.solver, self.solver)


@dataclass
class Problem:
    a: SparseMatrix
    b: np.ndarray
    exact: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


def load_problem(cfg: ExperimentConfig) -> Problem:
    if cfg.problem == "laplacian2d":
        a, b = problems.exp_euler_problem(cfg.d)
        return Problem(a, b, exact=problems.exp_euler_exact(cfg.d))
    if cfg.problem == "convdiff":
        a, b = problems.implicit_euler_problem(cfg.d, scaling=cfg.scaling)
        return Problem(a, b)
    if cfg.graph:
        path = Path(cfg.graph)
        edges = None if path.suffix == ".mtx" else problems.read_edge_list(path)
        if edges is None:
            adj = read_matrix_market(path)
            edges = list(zip(adj.row_indices.tolist(), adj.col_idx.tolist()))
    else:
        edges = problems.preferential_attachment_edges(cfg.graph_nodes, seed=cfg.seed)
    lap, kept = problems.graph_in_laplacian(edges)
    b = np.random.default_rng(cfg.seed).random(lap.n)
    return Problem(lap, b, meta={"kept": kept})


# --------------------------------------------------------------------------
# Formatting
# --------------------------------------------------------------------------

def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".17g")


def _write_csv(rows, columns, out) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) if c not in ("error", "strategy") else row.get(c, "")
                         for c in columns])
    text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    return text


def _describe(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}".replace("\n", " ")


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------

def _basis_or_error(prob: Problem, start, cfg: ExperimentConfig):
    """One basis of the largest dimension; prefixes serve the smaller m."""
    m_max = min(cfg.m_list[-1], prob.a.n)
    try:
        return truncated_arnoldi(prob.a, start, m_max, cfg.k, strict_alg1=cfg.strict_alg1), None
    except Breakdown as exc:
        return exc.basis, exc


def _basis_for(basis: KrylovBasis, breakdown, m: int):
    if m > basis.m:
        raise breakdown if breakdown is not None else ValueError(f"m={m} exceeds n")
    return basis.truncate(m)


def _measure(prob: Problem, solver: str, rep) -> tuple:
    """(quantity, extra) for one solver report: error for f(A)b, true residual
    for linear systems, Fiedler-pair residual for eigenproblems."""
    if solver in ("dsfom", "fom"):
        return float(np.linalg.norm(rep.approximation - prob.exact)), None
    if solver in ("dsgmres", "gmres"):
        return float(rep.residual), None
    pairs = rep.approximation
    return float(pairs.residuals[pairs.fiedler_index]), pairs


def _run_solver(name, prob, m, cfg, basis):
    if name == "dsfom":
        return dsfom(prob.a, prob.b, m, cfg.k, s=cfg.s_rule, strategy=cfg.strategy,
                     seed=cfg.seed, basis=basis)
    if name == "dsgmres":
        return dsgmres(prob.a, prob.b, None, m, cfg.k, s=cfg.s_rule, strategy=cfg.strategy,
                       seed=cfg.seed, basis=basis)
    if name == "dsrr":
        return dsrr(prob.a, prob.b, m, cfg.k, s=cfg.s_rule, strategy=cfg.strategy,
                    seed=cfg.seed, basis=basis)
    if name == "fom":
        return fom_reference(prob.a, prob.b, m)
    if name == "gmres":
        return gmres_reference(prob.a, prob.b, None, m)
    return rr_reference(prob.a, prob.b, m)


def sweep_rows(cfg: ExperimentConfig, prob: Problem | None = None) -> list:
    prob = prob or load_problem(cfg)
    sketched = cfg.solver.startswith("ds")
    basis, breakdown = _basis_or_error(prob, prob.b, cfg) if sketched else (None, None)
    a_norm = prob.a.frobenius_norm()
    rows = []
    for m in cfg.m_list:
        row = {"m": m}
        try:
            rep = _run_solver(cfg.solver, prob, m, cfg,
                              _basis_for(basis, breakdown, m) if sketched else None)
            value, pairs = _measure(prob, cfg.solver, rep)
            row["abs_error_or_residual"] = value
            if sketched:
                ref_value, _ = _measure(prob, cfg.reference_solver,
                                        _run_solver(cfg.reference_solver, prob, m, cfg, None))
                row["rel_to_reference"] = value / ref_value if ref_value > 0 else math.inf
            else:
                row["rel_to_reference"] = 1.0
            row.update(s=rep.sketch_rows, sigma_min_sv=rep.sigma_min_sv, kappa_v=rep.kappa_v,
                       kappa_whitened=rep.kappa_whitened, unreliable=rep.unreliable)
            if pairs is not None:
                i = pairs.fiedler_index
                row["bound_low"], row["bound_high"] = rep.bound_low[i], rep.bound_high[i]
                row["flagged_ritz"] = int(np.sum(pairs.residuals > 1e-2 * a_norm))
            else:
                row["bound_low"], row["bound_high"] = rep.bound_low, rep.bound_high
            if cfg.record_times:
                row.update(t_basis=rep.wall_times.get("basis"),
                           t_select=rep.wall_times.get("select"),
                           t_solve=rep.wall_times.get("solve"))
        except (DsKrylovError, ValueError, np.linalg.LinAlgError) as exc:
            row["error"] = f"m={m}: {_describe(exc)}"
        rows.append(row)
    return rows


def run_sweep(cfg: ExperimentConfig) -> tuple:
    """Run the sweep, write the CSV (if ``cfg.out``) and return ``(text, n_errors)``."""
    rows = sweep_rows(cfg)
    text = _write_csv(rows, SWEEP_COLUMNS, cfg.out)
    return text, sum(1 for r in rows if r.get("error"))


def distortion_rows(cfg: ExperimentConfig, prob: Problem | None = None) -> list:
    prob = prob or load_problem(cfg)
    start = prob.b
    basis, breakdown = _basis_or_error(prob, start, cfg)
    strategies = cfg.strategies or (cfg.strategy,)
    rows = []
    for m in cfg.m_list:
        for strat in strategies:
            row = {"m": m, "strategy": strat}
            try:
                sub = _basis_for(basis, breakdown, m)
                sk = build_sketch(sub.v, strat, cfg.s_rule, cfg.seed, cfg.solver)
                rep = distortion_report(sub.v, sk)
                row.update(s=sk.rows(sub.n), unreliable=rep.kappa_whitened > 1e8, **rep.as_dict())
            except (DsKrylovError, ValueError, np.linalg.LinAlgError) as exc:
                row["error"] = f"m={m}: {_describe(exc)}"
            rows.append(row)
    return rows


def run_distortion(cfg: ExperimentConfig) -> tuple:
    rows = distortion_rows(cfg)
    text = _write_csv(rows, DISTORTION_COLUMNS, cfg.out)
    return text, sum(1 for r in rows if r.get("error"))


# --------------------------------------------------------------------------
# File conversion
# --------------------------------------------------------------------------

def io_roundtrip(path, out=None):
    """Read a Matrix Market file or edge list, write it back out, re-read it.

    Returns ``(obj, same)`` where ``same`` says whether the re-read object is
    identical to the first read.
    """
    path = Path(path)
    is_mtx = path.suffix == ".mtx"
    first = read_matrix_market(path) if is_mtx else problems.read_edge_list(path)
    with tempfile.TemporaryDirectory() as tmp:
        target = Path(out) if out else Path(tmp) / ("roundtrip" + (".mtx" if is_mtx else ".txt"))
        if is_mtx:
            write_matrix_market(target, first)
            second = read_matrix_market(target)
        else:
            problems.write_edge_list(target, first)
            second = problems.read_edge_list(target)
    return first, first == second


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------

def parse_m_list(text: str) -> tuple:
    """``"10,20,40"`` or an inclusive range ``"10:120:10"``."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return tuple(range(start, stop + 1, step))
    return tuple(int(p) for p in text.split(",") if p.strip())


def _common(p: argparse.ArgumentParser):
    p.add_argument("--problem", choices=PROBLEMS, default="laplacian2d")
    p.add_argument("--solver", choices=SOLVERS, default=None)
    p.add_argument("--d", type=int, default=64, help="grid points per dimension")
    p.add_argument("--m", default="10:60:10", help="Krylov dimensions: '10,20' or '10:120:10'")
    p.add_argument("--k", type=int, default=None, help="truncation length (default 2/4/8 per problem)")
    p.add_argument("--s", default=None, help="sketch size: count, '1.1x' or 'm+1'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    p.add_argument("--strict-alg1", action="store_true",
                   help="single Gram-Schmidt pass in the truncated Arnoldi window")
    p.add_argument("--graph", default=None, help="edge list or .mtx adjacency for --problem graph")
    p.add_argument("--graph-nodes", type=int, default=2000,
                   help="size of the generated graph when --graph is not given")
    p.add_argument("--scaling", choices=("mesh", "literal"), default="mesh",
                   help="convection-diffusion stencil scaling")
    p.add_argument("--record-times", action="store_true",
                   help="fill the timing columns (output is then not byte-reproducible)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dskrylov", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sw = sub.add_parser("sweep", help="run one solver over a list of Krylov dimensions")
    _common(sw)
    sw.add_argument("--strategy", default=None, choices=SKETCH_STRATEGIES,
                    help="row selection or sketch (default: deim for dsfom, gpode otherwise)")
    di = sub.add_parser("distortion", help="subspace distortion of one or more sketches")
    _common(di)
    di.add_argument("--strategy", default="deim,qdeim,gpode,mpe",
                    help="comma-separated strategies")
    cv = sub.add_parser("convert", help="round-trip a .mtx file or an edge list")
    cv.add_argument("path")
    cv.add_argument("--out", default=None)
    cv.add_argument("--laplacian", action="store_true",
                    help="write the graph in-Laplacian of an edge list as Matrix Market")
    return parser


DEFAULT_K = {"laplacian2d": 2, "convdiff": 4, "graph": 8}


def config_from_args(args) -> ExperimentConfig:
    solver = args.solver or DEFAULT_SOLVER[args.problem]
    strategy = args.strategy or ("deim" if solver == "dsfom" else "gpode")
    strategies = tuple(s.strip() for s in strategy.split(",") if s.strip())
    return ExperimentConfig(
        problem=args.problem, solver=solver, strategy=strategies[0], d=args.d,
        m_list=parse_m_list(args.m), k=args.k or DEFAULT_K[args.problem], s_rule=args.s,
        seed=args.seed, out=args.out, strict_alg1=args.strict_alg1, graph=args.graph,
        graph_nodes=args.graph_nodes, scaling=args.scaling, record_times=args.record_times,
        strategies=strategies if args.command == "distortion" else (),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "convert":
        if args.laplacian:
            lap, _ = problems.graph_in_laplacian(problems.read_edge_list(args.path))
            if not args.out:
                print("--laplacian needs --out", file=sys.stderr)
                return 2
            write_matrix_market(args.out, lap)
            print(f"wrote {lap.n} x {lap.n} in-Laplacian with {lap.nnz} entries to {args.out}")
            return 0
        obj, same = io_roundtrip(args.path, args.out)
        size = f"{obj.n} x {obj.n}, {obj.nnz} entries" if isinstance(obj, SparseMatrix) else f"{len(obj)} edges"
        print(f"{args.path}: {size}; roundtrip {'identical' if same else 'DIFFERS'}")
        return 0 if same else 1
    try:
        cfg = config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    runner = run_sweep if args.command == "sweep" else run_distortion
    text, n_errors = runner(cfg)
    if not cfg.out:
        sys.stdout.write(text)
    if n_errors:
        print(f"{n_errors} row(s) carry an error annotation", file=sys.stderr)
    return 1 if n_errors else 0
