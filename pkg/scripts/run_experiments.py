"""Regenerate the CSVs for the three experiment families (scaled-down sizes by default).

    python3 scripts/run_experiments.py --outdir results
    python3 scripts/run_experiments.py --outdir results --full   # d=256 sweeps, slow
"""
import argparse
from pathlib import Path

from dskrylov.cli import main


def runs(full: bool):
    d = "256" if full else "64"
    m_fom = "10:300:10" if full else "10:120:10"
    m_gmres = "50:550:50" if full else "20:200:20"
    for strategy in ("deim", "gpode", "mpe", "sparsesign"):
        yield f"fom_{strategy}.csv", ["sweep", "--problem", "laplacian2d", "--solver", "dsfom",
                                      "--strategy", strategy, "--d", d, "--m", m_fom, "--k", "2"]
    yield "fom_distortion.csv", ["distortion", "--problem", "laplacian2d", "--strategy",
                                 "deim,qdeim,gpode,mpe", "--d", d, "--m", m_fom, "--k", "2"]
    for strategy in ("gpode", "mpe", "sparsesign"):
        yield f"gmres_{strategy}.csv", ["sweep", "--problem", "convdiff", "--solver", "dsgmres",
                                        "--strategy", strategy, "--d", d, "--m", m_gmres, "--k", "4"]
    yield "rr_gpode.csv", ["sweep", "--problem", "graph", "--solver", "dsrr", "--strategy", "gpode",
                           "--graph-nodes", "2000", "--m", "20:100:20", "--k", "8", "--s", "1.5x"]


def cli():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--full", action="store_true")
    args = parser.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, argv in runs(args.full):
        code = main(argv + ["--out", str(out / name)])
        print(f"{name}: exit {code}")


if __name__ == "__main__":
    cli()
