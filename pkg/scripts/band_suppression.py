"""Count resonance bands of a square-wave drive as the damping rate increases."""

import argparse

import numpy as np

from qparam.classical import scan_bands
from qparam.model import square_wave


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=float, default=0.3)
    ap.add_argument("--range", type=float, nargs=2, default=(0.5, 20.0))
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--gammas", type=float, nargs="+", default=[0.0, 0.005, 0.01, 0.02, 0.05, 0.1])
    args = ap.parse_args()

    ref = None
    print(f"{'gamma':>8} {'bands':>5} {'max Omega*tau':>14}  band centres (omega0*tau)")
    for g in args.gammas:
        scan = scan_bands(square_wave(1.0, 1.0, args.delta, gamma=g), tuple(args.range), args.points)
        if ref is None:
            ref = scan.growth
        assert np.all(scan.growth <= ref + 1e-12), "damping raised the growth exponent"
        centres = " ".join(f"{0.5 * (lo + hi):.2f}" for lo, hi in scan.bands)
        peak = float(np.max(scan.growth * scan.omega0_tau))
        print(f"{g:8.3f} {len(scan.bands):5d} {peak:14.5f}  {centres}")


if __name__ == "__main__":
    main()
