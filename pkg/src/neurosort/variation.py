"""Memristance variation sweep and the average-power estimate."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classifier import accuracy
from .crossbar import CrossbarConfig, CrossbarNetwork, nominal_conductances
from .errors import ConfigError

# Reference figures for the synthesized digital blocks. They come from a
# logic synthesis flow and are only echoed in report headers.
REFERENCE_CONSTANTS = {
    "kmeans_power_uW": 51.12,
    "kmeans_area_um2": 177588.0,
    "crossbar_power_nW_typical": 300.0,
    "digital_classifier_power_uW": 5.2,
}

LOWER_CLAMP = 0.99


@dataclass(frozen=True)
class VariationSweepConfig:
    levels: tuple = (0.0, 0.1, 0.2, 0.3, 0.5, 1.0, 1.5, 2.0)
    trials_per_level: int = 20
    seed: object = 0
    mode: str = "independent"   # or "correlated": one draw shared by every junction
    dist: str = "uniform"       # or "gaussian" with standard deviation level / 2

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(float(x) for x in self.levels))
        if any(x < 0 for x in self.levels):
            raise ConfigError("variation levels must be >= 0")
        if self.trials_per_level < 1:
            raise ConfigError("trials_per_level must be >= 1")
        if self.mode not in ("independent", "correlated"):
            raise ConfigError(f"unknown variation mode {self.mode!r}")
        if self.dist not in ("uniform", "gaussian"):
            raise ConfigError(f"unknown variation distribution {self.dist!r}")


def draw_factors(rng, shape, level: float, mode: str = "independent", dist: str = "uniform") -> np.ndarray:
    """Multiplicative factors ``1 + u`` for each junction.

    Uniform: u ~ U[-min(level, 0.99), level]. Gaussian: u ~ N(0, level/2)
    clipped to the same interval.
    """
    if level < 0:
        raise ConfigError("variation level must be >= 0")
    lo = -min(level, LOWER_CLAMP)
    size = 1 if mode == "correlated" else shape
    if dist == "uniform":
        u = rng.uniform(lo, level, size=size)
    else:
        u = np.clip(rng.normal(0.0, level / 2.0, size=size), lo, level)
    return np.broadcast_to(1.0 + u, shape).astype(np.float64)


def perturb_conductances(cfg: CrossbarConfig, w, level: float, seed=None,
                         mode: str = "independent", dist: str = "uniform") -> np.ndarray:
    """Perturbed real-column conductances g * (1 + u)."""
    g = nominal_conductances(cfg, w)
    if level == 0:
        return g.copy()
    rng = np.random.default_rng(seed)
    return g * draw_factors(rng, g.shape, level, mode, dist)


def run_variation_sweep(cfg: CrossbarConfig, w, sweep: VariationSweepConfig, spikes, labels) -> list:
    """Crossbar accuracy under random conductance variation.

    Returns ``(level, mean_accuracy, std_accuracy, trials)`` rows. Every
    trial gets its own child seed, so adding levels never shifts the draws
    of existing ones.
    """
    spikes = np.atleast_2d(np.asarray([getattr(s, "spike_train", s) for s in spikes], dtype=bool))
    labels = np.asarray(labels)
    root = sweep.seed if isinstance(sweep.seed, np.random.SeedSequence) \
        else np.random.SeedSequence(sweep.seed)
    level_seeds = root.spawn(len(sweep.levels))
    rows = []
    for level, lseed in zip(sweep.levels, level_seeds):
        if level == 0:
            acc = accuracy(CrossbarNetwork(cfg, w).predict(spikes), labels)
            rows.append((level, acc, 0.0, sweep.trials_per_level))
            continue
        accs = []
        for tseed in lseed.spawn(sweep.trials_per_level):
            g = perturb_conductances(cfg, w, level, tseed, sweep.mode, sweep.dist)
            accs.append(accuracy(CrossbarNetwork(cfg, w, g).predict(spikes), labels))
        rows.append((level, float(np.mean(accs)), float(np.std(accs)), sweep.trials_per_level))
    return rows


def write_sweep_csv(rows: Sequence, path, header_lines: Sequence[str] = ()):
    with open(os.fspath(path), "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["level", "mean_accuracy", "std_accuracy", "trials"])
        for level, mean, std, trials in rows:
            out.writerow([f"{level:.6g}", f"{mean:.6f}", f"{std:.6f}", trials])


@dataclass(frozen=True)
class PowerParams:
    i_synapse: float = 0.3e-6
    n_column: float = 3
    v_dd: float = 1.2
    beta: float = 0.01

    def __post_init__(self):
        if self.i_synapse < 0 or self.n_column < 0 or self.v_dd < 0:
            raise ConfigError("power parameters must be nonnegative")
        if not 0 <= self.beta <= 1:
            raise ConfigError("beta must lie in [0, 1]")

    @classmethod
    def from_crossbar(cls, cfg: CrossbarConfig, n_column=None) -> "PowerParams":
        return cls(cfg.i_in_on, cfg.classes if n_column is None else n_column, cfg.v_dd, cfg.beta)


def average_power(p: PowerParams) -> float:
    """Average crossbar power in watts: I_synapse * n_column * V_DD * beta."""
    return p.i_synapse * p.n_column * p.v_dd * p.beta
