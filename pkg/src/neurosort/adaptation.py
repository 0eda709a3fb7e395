"""Conditional K-means retraining driven by distance-to-mean exceedances.

A threshold is taken from the distribution of training distances. Each
incoming spike is classified by its nearest mean and flagged when its
distance exceeds the threshold; when enough of the last ``window`` spikes
are flagged the model should be retrained.
"""

from __future__ import annotations

import csv
import math
import os
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyInputError
from .kmeans import KMeansModel, distance_to_assigned


@dataclass(frozen=True)
class AdaptationConfig:
    percentile: float = 95.0
    window: int = 100
    trigger_fraction: float = 0.2

    def __post_init__(self):
        if not 0 < self.percentile <= 100:
            raise ConfigError("percentile must lie in (0, 100]")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if not 0 < self.trigger_fraction <= 1:
            raise ConfigError("trigger_fraction must lie in (0, 1]")


@dataclass
class AdaptationState:
    threshold: int
    window: int
    recent: deque = field(default_factory=deque)
    triggered_count: int = 0
    seen: int = 0
    last_distance: int = 0

    def __post_init__(self):
        self.recent = deque(self.recent, maxlen=self.window)

    def reset_window(self):
        self.recent.clear()


def nearest_rank(values, percentile: float):
    """Smallest value with at least ``percentile`` percent of the data at
    or below it."""
    v = np.sort(np.asarray(values).ravel())
    if v.size == 0:
        raise EmptyInputError("no values")
    rank = max(1, math.ceil(percentile / 100.0 * v.size))
    return v[rank - 1]


def trigger_count(fraction: float, window: int) -> int:
    """Exceedances needed to fire (rounded so 0.2 * 100 gives 20, not 21)."""
    return max(1, math.ceil(round(fraction * window, 9)))


def build_threshold(model: KMeansModel, train, cfg: AdaptationConfig = AdaptationConfig()) -> AdaptationState:
    d = distance_to_assigned(model, train)
    if d.size == 0:
        raise EmptyInputError("cannot build a threshold from an empty training set")
    return AdaptationState(threshold=int(nearest_rank(d, cfg.percentile)), window=cfg.window)


def observe(state: AdaptationState, model: KMeansModel, spike, cfg: AdaptationConfig = AdaptationConfig()):
    """Classify one spike and update the exceedance window.

    Returns ``(class_id, retrain_needed)``; the distance is kept in
    ``state.last_distance``. The window is not cleared here; the caller
    does that after it actually retrains.
    """
    x = np.asarray(getattr(spike, "digitized", spike), dtype=np.int64)
    dist = np.abs(model.means - x).sum(axis=1)
    cls = int(np.argmin(dist))
    d = int(dist[cls])
    state.recent.append(d > state.threshold)
    state.seen += 1
    state.last_distance = d
    full = len(state.recent) == state.window
    retrain = full and sum(state.recent) >= trigger_count(cfg.trigger_fraction, state.window)
    if retrain:
        state.triggered_count += 1
    return cls, bool(retrain)


def write_trigger_log(rows, path, header_lines=()):
    """Rows of ``(spike_index, distance, threshold, triggered)``."""
    with open(os.fspath(path), "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["spike_index", "distance", "threshold", "triggered"])
        for idx, d, thr, trig in rows:
            out.writerow([idx, d, thr, int(bool(trig))])
