"""Log-log slopes of the optimized key rate against total transmittance.

Without decoys the optimal intensity tracks eta and the rate falls as eta**2;
with ideal or two-intensity decoys it falls as eta.

    python scripts/scaling.py --points 21
"""
import argparse

import numpy as np

from bb84sim.keyrate import RateModelParams, loglog_slope, optimize_mu, optimize_rate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=13)
    ap.add_argument("--eta-min", type=float, default=1e-3)
    ap.add_argument("--eta-max", type=float, default=1e-1)
    args = ap.parse_args()

    etas = np.logspace(np.log10(args.eta_min), np.log10(args.eta_max), args.points)
    base = RateModelParams(dark_count_prob=0.0, misalignment=0.0, f_ec=1.0, q=0.5)

    approx = [optimize_mu(float(e)) for e in etas]
    print(f"{'eta':>10} {'mu_opt/eta':>10} {'G_approx':>12}")
    for eta, (mu, g) in zip(etas, approx):
        print(f"{eta:10.4g} {mu / eta:10.4f} {g:12.4e}")
    print(f"\nslope p_rec - p_multi : {loglog_slope(etas, [g for _, g in approx]):.3f}")
    for mode in ("nondecoy", "decoy-ideal", "decoy-two"):
        rates = [optimize_rate(base.with_(eta=float(e)), mode)[1] for e in etas]
        print(f"slope {mode:16s}: {loglog_slope(etas, rates):.3f}")


if __name__ == "__main__":
    main()
