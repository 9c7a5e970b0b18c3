"""Run a scenario config and show Gamma(t) and the moment ratios approaching their limits."""

import argparse
from pathlib import Path

from qparam.cli import read_csv, run_scenario
from qparam.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", nargs="?", default=str(Path(__file__).parent.parent / "configs" / "squeezed_inband.toml"))
    ap.add_argument("--out", default=None)
    ap.add_argument("--threads", type=int, default=0)
    args = ap.parse_args()

    cfg = load_config(args.config)
    out = run_scenario(cfg, args.out, threads=args.threads)
    _, cols, data = read_csv(out / "moments.csv")
    c = {name: i for i, name in enumerate(cols)}
    print(f"regime: {cfg.regime}, output: {out}")
    print(f"{'m':>2} {'t':>7} {'Gamma':>12} {'<H>/E':>10} {'sigma/E':>10} {'dev mean':>10} {'dev sigma':>10}")
    for row in data:
        print(f"{int(row[c['m']]):2d} {row[c['t']]:7.1f} {row[c['gamma']]:12.5g} {row[c['mean_over_ecl']]:10.5f} "
              f"{row[c['stddev_over_ecl']]:10.5f} {row[c['rel_dev_mean']]:10.2e} {row[c['rel_dev_stddev']]:10.2e}")


if __name__ == "__main__":
    main()
