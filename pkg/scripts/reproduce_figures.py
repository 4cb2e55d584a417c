"""Write the CSV series behind every figure into a directory.

    python scripts/reproduce_figures.py [outdir]
"""
import sys
from pathlib import Path

from oligosim.figures import FIGURES, figure, write_figure_csv


def main(outdir="figures"):
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name in FIGURES:
        data = figure(name)
        path = out / f"{name}.csv"
        write_figure_csv(data, path)
        print(f"{name}: {len(data.rows)} rows -> {path}")


if __name__ == "__main__":
    main(*sys.argv[1:2])
