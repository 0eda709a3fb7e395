"""Fixed-point K-means over digitized spikes.

Mirrors an integer datapath: absolute-difference distance summed by an
accumulator, a less-than comparator chain for the winner, per-cluster sum
and count registers, and an integer divider for the new means.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, InsufficientDataError, ParseError


@dataclass(frozen=True)
class KMeansConfig:
    k: int = 3
    iterations: int = 10
    m: int = 16
    n: int = 5
    init: str = "first_k"  # or "seeded_random"

    def __post_init__(self):
        if self.k < 2:
            raise ConfigError("k must be >= 2")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.init not in ("first_k", "seeded_random"):
            raise ConfigError(f"unknown init mode {self.init!r}")


@dataclass(frozen=True)
class KMeansModel:
    means: np.ndarray   # (k, m) unsigned ints
    counts: np.ndarray  # (k,) members per cluster in the last iteration

    def __post_init__(self):
        means = np.array(self.means, dtype=np.int64)
        counts = np.array(self.counts, dtype=np.int64)
        means.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "counts", counts)

    @property
    def k(self) -> int:
        return self.means.shape[0]


def sad_distance(a, b) -> int:
    """Sum of absolute sample differences."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch {a.shape} vs {b.shape}")
    return int(np.abs(a - b).sum())


def _distances(data: np.ndarray, means: np.ndarray) -> np.ndarray:
    return np.abs(data[:, None, :] - means[None, :, :]).sum(axis=2)


def _as_data(data) -> np.ndarray:
    rows = [getattr(d, "digitized", d) for d in data]
    if not rows:
        return np.zeros((0, 0), dtype=np.int64)
    return np.asarray(rows, dtype=np.int64)


def fit(data, cfg: KMeansConfig = KMeansConfig(), seed=None) -> KMeansModel:
    """Run exactly ``cfg.iterations`` assign/update rounds.

    Ties go to the lowest cluster index; empty clusters hold their mean.
    ``first_k`` seeds with the first k distinct points (falling back to
    repeats if there are fewer than k distinct ones).
    """
    x = _as_data(data)
    if x.shape[0] < cfg.k:
        raise InsufficientDataError(f"need at least k={cfg.k} points, got {x.shape[0]}")
    if cfg.init == "first_k":
        chosen = []
        for i, row in enumerate(x):
            if not any(np.array_equal(row, x[j]) for j in chosen):
                chosen.append(i)
                if len(chosen) == cfg.k:
                    break
        chosen += [0] * (cfg.k - len(chosen))
    else:
        chosen = np.random.default_rng(seed).choice(x.shape[0], size=cfg.k, replace=False)
    means = x[np.asarray(chosen)].copy()
    counts = np.zeros(cfg.k, dtype=np.int64)
    for _ in range(cfg.iterations):
        labels = np.argmin(_distances(x, means), axis=1)
        for c in range(cfg.k):
            members = x[labels == c]
            counts[c] = members.shape[0]
            if counts[c]:
                means[c] = members.sum(axis=0) // counts[c]
    return KMeansModel(means, counts)


def assign(model: KMeansModel, spike) -> int:
    d = np.abs(model.means - np.asarray(getattr(spike, "digitized", spike), dtype=np.int64)).sum(axis=1)
    return int(np.argmin(d))


def assign_all(model: KMeansModel, data) -> np.ndarray:
    x = _as_data(data)
    if x.size == 0:
        return np.zeros(0, dtype=np.int64)
    return np.argmin(_distances(x, model.means), axis=1)


def distance_to_assigned(model: KMeansModel, data) -> np.ndarray:
    x = _as_data(data)
    if x.size == 0:
        return np.zeros(0, dtype=np.int64)
    return _distances(x, model.means).min(axis=1)


def save_model(model: KMeansModel, path):
    """k rows of m comma-separated integers."""
    with open(os.fspath(path), "w") as fh:
        for row in model.means:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def load_model(path) -> KMeansModel:
    rows = []
    with open(os.fspath(path)) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rows.append([int(v) for v in line.split(",")])
            except ValueError:
                raise ParseError(f"bad mean row {line.strip()!r}", lineno) from None
    if len({len(r) for r in rows}) != 1:
        raise ParseError("mean rows have unequal lengths")
    return KMeansModel(np.array(rows), np.zeros(len(rows), dtype=np.int64))
