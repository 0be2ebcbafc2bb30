"""Photon-number-splitting attack against a weak-coherent-pulse link.

For each distance the attack is simulated twice: once against a signal-only
source, where Bob's gain and error rate look benign, and once against a
signal/decoy/vacuum source, where the decoy bound on the single-photon yield
collapses and flags the attack. ``Y1_ratio`` is the decoy lower bound on
the single-photon yield under attack divided by the same bound on the benign
link.

    python scripts/pns_demo.py --pulses 1000000
"""
import argparse

import numpy as np

from bb84sim.adversary import AttackStrategy, apply_attack
from bb84sim.keyrate import DecoyObservations, IntensityObservation, approx_rate, decoy_bounds
from bb84sim.photonics import (
    ChannelConfig,
    DetectorConfig,
    SourceConfig,
    detect_train,
    emit,
    expected_gain,
    total_transmittance,
)


def run(attack, source, channel, detector, n, seed):
    rng = np.random.default_rng(seed)
    pulses = emit(source, n, rng)
    at_bob, record = apply_attack(attack, pulses, channel, detector, rng, source)
    det = detect_train(at_bob, rng.integers(0, 2, n, dtype=np.int8), channel, detector, rng)
    return pulses, record, det


def decoy_check(attack, channel, detector, n, seed):
    source = SourceConfig({"signal": 0.5, "decoy": 0.1, "vacuum": 0.0},
                          {"signal": 0.8, "decoy": 0.15, "vacuum": 0.05})
    pulses, _, det = run(attack, source, channel, detector, n, seed)
    obs = {}
    for i, label in enumerate(pulses.labels):
        mask = pulses.label_index == i
        obs[label] = IntensityObservation(source.intensities[label], float(det.detected[mask].mean()),
                                          None, int(mask.sum()))
    return decoy_bounds(DecoyObservations(obs))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pulses", type=int, default=10**6)
    ap.add_argument("--mu", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    detector = DetectorConfig(0.1, 1e-5)
    print(f"{'km':>5} {'eta':>9} {'Q_benign':>10} {'Q_pns':>10} {'block_1':>8} {'excess':>6} "
          f"{'G_approx':>10} {'Y1_ratio':>10} {'flag':>5}")
    for km in (10, 30, 50, 70, 90):
        channel = ChannelConfig(float(km), 0.2, 0.01)
        eta = total_transmittance(channel, detector)
        _, record, det = run(AttackStrategy.pns(), SourceConfig.single(args.mu), channel, detector,
                             args.pulses, args.seed + km)
        benign_bounds = decoy_check(AttackStrategy.passive(), channel, detector, args.pulses, args.seed)
        attacked = decoy_check(AttackStrategy.pns(), channel, detector, args.pulses, args.seed)
        ratio = attacked.y1_lower / benign_bounds.y1_lower if benign_bounds.y1_lower > 0 else float("nan")
        print(f"{km:5d} {eta:9.3e} {expected_gain(args.mu, eta, 1e-5):10.3e} {det.detected.mean():10.3e} "
              f"{record.plan.block_single:8.3f} {str(record.plan.excess_gain):>6} "
              f"{approx_rate(args.mu, eta):10.2e} {ratio:10.3f} {str(attacked.suppression_flag):>5}")


if __name__ == "__main__":
    main()
