"""Final key length and net key growth of the benign session over many seeds.

Compares the observed final length with the analytic prediction and counts
seeds whose authentication cost exceeds the distilled key.

    python scripts/key_growth.py --seeds 100
"""
import argparse
import dataclasses

import numpy as np

from bb84sim.config import RunConfig
from bb84sim.protocol import predicted_final_length, run_session


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/benign_20km.json")
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--first-seed", type=int, default=0)
    args = ap.parse_args()

    base = RunConfig.load(args.config).session()
    predicted = predicted_final_length(base)
    lengths, growth, aborted = [], [], 0
    for seed in range(args.first_seed, args.first_seed + args.seeds):
        tr = run_session(dataclasses.replace(base, seed=seed))
        if not tr.completed:
            aborted += 1
            continue
        lengths.append(len(tr.final_key))
        growth.append(tr.net_key_growth)
    lengths, growth = np.array(lengths), np.array(growth)
    within = np.mean(np.abs(lengths - predicted) <= 0.2 * predicted)
    print(f"predicted final length : {predicted:.1f}")
    print(f"mean final length      : {lengths.mean():.1f} (sd {lengths.std(ddof=1):.1f})")
    print(f"within 20% per seed    : {within:.2f}")
    print(f"mean net growth        : {growth.mean():.1f}")
    print(f"non-positive growth    : {int(np.sum(growth <= 0))} of {len(growth)}")
    print(f"aborted                : {aborted}")


if __name__ == "__main__":
    main()
