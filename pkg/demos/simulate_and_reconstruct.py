"""Simulate two weeks of elevator traffic, then rebuild the flows blind.

The reconstruction never sees resident identities — only the anonymous
embedding snapshots taken before and after each stop — yet at the default
noise level it recovers nearly every per-floor daily flow exactly.
"""

import numpy as np

from liftflow import matching, simulate as sim


def main():
    spec = sim.BuildingSpec(
        estate_id="demo-estate",
        elevator_count=2,
        floor_count=8,
        residents_per_floor=4,
        embedding_dim=128,
        noise_sigma=0.05,
        day_count=15,
    )
    population = sim.generate_building(spec, seed=42)
    events, truth = sim.simulate(spec, population, plans=[], seed=42)
    print(f"simulated {len(events)} elevator stops for "
          f"{len(population)} residents over {spec.day_count} days")

    ledger = matching.reconstruct(events, t=0.5)
    print(f"reconstructed {len(ledger.aggregates)} (floor, day) aggregates")

    # compare against ground truth
    diffs = 0
    for key, agg in truth.aggregates.items():
        rec = ledger.aggregates.get(key)
        if rec is None or rec.in_count != agg.in_count or rec.out_count != agg.out_count:
            diffs += 1
    print(f"daily in/out counts wrong for {diffs} of {len(truth.aggregates)} aggregates")

    # a peek at one day of one floor
    sample_key = sorted(ledger.aggregates)[0]
    agg = ledger.aggregates[sample_key]
    busy_hours = [int(h) for h in np.flatnonzero(agg.hour_histogram)]
    print(f"\n{sample_key}: in={agg.in_count} out={agg.out_count}, "
          f"active hours {busy_hours}")


if __name__ == "__main__":
    main()
