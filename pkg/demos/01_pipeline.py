"""Walk one synthetic recording through the whole sorting chain.

A three-neuron trace is generated, spikes are detected and encoded,
K-means supplies labels, STDP trains the binary weights and the trained
network is evaluated both digitally and as a resistive crossbar.

    python3 demos/01_pipeline.py
"""

import numpy as np

from neurosort.classifier import DigitalClassifier, accuracy
from neurosort.config import build_config
from neurosort.crossbar import CrossbarConfig, CrossbarNetwork
from neurosort.pipeline import crossbar_for, prepare, train_model, truth_accuracy

rc = build_config({}, seed=0)
ds = prepare(rc)
print(f"detected {len(ds.spikes)} spikes; {ds.train_idx.size} for training, {ds.test_idx.size} held out")
print(f"K-means labels agree with the true neuron identity on {truth_accuracy(ds.labels, ds.truth):.1f}% of spikes")
popcounts = ds.trains.sum(axis=1)
print(f"spike trains use {ds.trains.shape[1]} input lines, {popcounts.min()}..{popcounts.max()} active per spike")

w, train_acc, restart_accs = train_model(rc, ds)
print("training accuracy of each STDP restart:", np.round(restart_accs, 1))
print(f"kept the best restart ({train_acc:.1f}%); ones per output column: {w.sum(axis=0)}")

x, y = ds.trains[ds.test_idx], ds.labels[ds.test_idx]
digital = DigitalClassifier(w).predict(x)
print(f"digital classifier, held-out accuracy: {accuracy(digital, y):.1f}%")
for name, cfg in (("10 kOhm termination", crossbar_for(rc, w)), ("near-ideal wires", CrossbarConfig.near_ideal())):
    analog = CrossbarNetwork(cfg, w).predict(x)
    print(f"crossbar with {name}: accuracy {accuracy(analog, y):.1f}%, "
          f"agreement with digital {accuracy(analog, digital):.1f}%")
