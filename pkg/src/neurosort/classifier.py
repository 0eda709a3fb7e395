"""Digital counter-based SNN classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericalError


@dataclass(frozen=True)
class DigitalClassifier:
    """One counter per output neuron; each counter adds spike_i AND w_ij
    over the N_I input bits, and the largest counter wins (lowest index on
    ties)."""

    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=bool)
        if w.ndim != 2:
            raise DimensionError("weight matrix must be 2-D")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def n_input(self) -> int:
        return self.w.shape[0]

    @property
    def n_output(self) -> int:
        return self.w.shape[1]

    @property
    def counter_bits(self) -> int:
        return max(1, math.ceil(math.log2(self.n_input + 1)))

    def scores(self, spikes) -> np.ndarray:
        s = np.asarray(spikes, dtype=bool)
        if s.shape[-1] != self.n_input:
            raise DimensionError(f"spike length {s.shape[-1]} != N_I {self.n_input}")
        out = s.astype(np.int64) @ self.w.astype(np.int64)
        if out.max(initial=0) >= 2 ** self.counter_bits:
            raise NumericalError(f"counter overflow: {self.counter_bits}-bit counters")
        return out

    def classify(self, spike):
        sc = self.scores(spike)
        if sc.ndim != 1:
            raise DimensionError("classify takes a single spike train; use predict")
        return int(np.argmax(sc)), sc

    def predict(self, spikes) -> np.ndarray:
        spikes = np.atleast_2d(np.asarray(spikes, dtype=bool))
        return np.argmax(self.scores(spikes), axis=1)


def classify(w, spike):
    """Return ``(class_id, scores)`` for one spike train."""
    return DigitalClassifier(w).classify(spike)


def accuracy(pred, truth) -> float:
    """Percentage of matching labels."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.size == 0:
        return 0.0
    return 100.0 * float(np.mean(pred == truth))
