"""Write the figure tables (mean and spread ratios) and print their large-energy ends."""

import argparse
from pathlib import Path

from qparam.cli import emit_figure_data, read_csv
from qparam.config import FigureSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/figures")
    ap.add_argument("--threads", type=int, default=0)
    args = ap.parse_args()

    spec = FigureSpec(m_max=5, gamma_min=0.1, gamma_max=1e3, n_gamma=41,
                      energy_min=2.0, energy_max=1e3, n_energy=41, fig2_levels=(10.0, 100.0))
    for kind in ("fig1a", "fig1b", "fig2"):
        path = emit_figure_data(kind, spec, Path(args.out), threads=args.threads)
        _, cols, data = read_csv(path)
        print(f"{kind}: {path}")
        if kind == "fig2":
            for row in data:
                print("  m=%d  " % row[0] + "  ".join(f"{c}={v:.5f}" for c, v in zip(cols[1:], row[1:])))
            continue
        x = cols[1] if kind == "fig1a" else "e_cl_over_omega"
        top = data[:, cols.index(x)] == data[:, cols.index(x)].max()
        for row in data[top]:
            print(f"  m={int(row[0])}  {x}={row[cols.index(x)]:.4g}  "
                  f"mean_over_ecl={row[cols.index('mean_over_ecl')]:.5f}  "
                  f"asymptote={row[cols.index('asymptote')]:.5f}")


if __name__ == "__main__":
    main()
