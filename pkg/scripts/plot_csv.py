"""Plot one column of sweep/distortion CSVs against m (needs matplotlib, not a package dependency).

    python3 scripts/plot_csv.py results/fom_*.csv --column abs_error_or_residual --out fom.png
"""
import argparse
import csv
from pathlib import Path


def series(path, column):
    xs, ys, labels = {}, {}, {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if not row.get(column):
                continue
            key = row.get("strategy") or Path(path).stem
            xs.setdefault(key, []).append(int(row["m"]))
            ys.setdefault(key, []).append(float(row[column]))
    return {k: (xs[k], ys[k]) for k in xs}


def cli():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv", nargs="+")
    parser.add_argument("--column", default="abs_error_or_residual")
    parser.add_argument("--out", default=None, help="image path; shows a window if omitted")
    parser.add_argument("--linear", action="store_true", help="linear instead of log y axis")
    args = parser.parse_args()

    import matplotlib
    if args.out:
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for path in args.csv:
        for label, (x, y) in series(path, args.column).items():
            ax.plot(x, y, marker="o", ms=3, label=label)
    if not args.linear:
        ax.set_yscale("log")
    ax.set_xlabel("m")
    ax.set_ylabel(args.column)
    ax.legend()
    fig.tight_layout()
    if args.out:
        fig.savefig(args.out, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    cli()
