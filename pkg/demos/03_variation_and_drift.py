"""Robustness checks: conductance variation and recording drift.

The first part perturbs every memristor conductance by a random factor
and reports the crossbar accuracy at each variation level. The second
part streams spikes from the trained neurons and then from a new one,
and shows the outlier monitor asking for a K-means refit.

    python3 demos/03_variation_and_drift.py
"""

from neurosort.config import build_config, seed_for
from neurosort.pipeline import crossbar_for, prepare, run_adapt, train_model
from neurosort.variation import PowerParams, VariationSweepConfig, average_power, run_variation_sweep

rc = build_config({}, seed=0)
ds = prepare(rc)
w, _, _ = train_model(rc, ds)
sweep = VariationSweepConfig(levels=(0.0, 0.1, 0.3, 0.5, 1.0, 2.0), trials_per_level=5, seed=seed_for(0, 5))
print("variation level   mean accuracy   std")
for level, mean, std, n in run_variation_sweep(crossbar_for(rc, w), w, sweep,
                                               ds.trains[ds.test_idx], ds.labels[ds.test_idx]):
    print(f"{level:15.0%}   {mean:13.2f}   {std:4.2f}")
print(f"estimated array power: {average_power(PowerParams.from_crossbar(crossbar_for(rc, w))) * 1e9:.1f} nW")

res = run_adapt(rc)
print(f"\ndrift scenario: {res.phase1_triggers} refits on familiar spikes, "
      f"{res.phase2_triggers} after the new neuron appears (first at stream index "
      f"{res.triggers[0] if res.triggers else '-'})")
print(f"mean distance from novel spikes to their cluster: {res.novel_distance_before:.1f} -> {res.novel_distance_after:.1f}")
print(f"phase-2 clustering accuracy: {res.accuracy_before:.1f}% -> {res.accuracy_after:.1f}%")
