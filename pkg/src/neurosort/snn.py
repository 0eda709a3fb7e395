"""Supervised probabilistic STDP trainer for a binary-weight SNN.

Weights are an ``(N_I, N_O)`` boolean array. Inputs are presented in
per-class batches; the position of an input inside its batch (the
presentation cycle) selects the flip probabilities.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .classifier import DigitalClassifier, accuracy
from .errors import ConfigError, DimensionError, InsufficientDataError, ParseError

P_UP = (0.08, 0.06, 0.04, 0.02, 0.00)
P_DN = (0.00, 0.00, 0.00, 0.00, 0.08)


@dataclass(frozen=True)
class SnnTrainConfig:
    n_input: int = 300
    n_output: int = 3
    leak: int = 1
    thr1: int = 15
    thr2: int = 45
    batch_per_class: int = 5
    p_up: tuple = P_UP
    p_dn: tuple = P_DN
    reduce_factor: float = 0.25
    restarts: int = 10
    train_count: Optional[int] = None  # None: one pass over the training data
    reset_every_input: bool = False

    def __post_init__(self):
        object.__setattr__(self, "p_up", tuple(float(p) for p in self.p_up))
        object.__setattr__(self, "p_dn", tuple(float(p) for p in self.p_dn))
        if self.n_input < 1 or self.n_output < 1:
            raise ConfigError("n_input and n_output must be >= 1")
        if self.leak < 0:
            raise ConfigError("leak must be nonnegative")
        if not 0 <= self.thr1 < self.thr2:
            raise ConfigError("need 0 <= thr1 < thr2")
        if len(self.p_up) != self.batch_per_class or len(self.p_dn) != self.batch_per_class:
            raise ConfigError("p_up/p_dn need one entry per presentation cycle")
        if not all(0 <= p <= 1 for p in self.p_up + self.p_dn):
            raise ConfigError("probabilities must lie in [0, 1]")
        if not 0 <= self.reduce_factor <= 1:
            raise ConfigError("reduce_factor must lie in [0, 1]")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if self.train_count is not None and self.train_count <= 0:
            raise ConfigError("train_count must be positive")


def integrate(v, w, spike, leak: int) -> np.ndarray:
    """One membrane update: v_j + sum_i(w_ij * a_i) - leak, unclamped."""
    v = np.asarray(v, dtype=np.int64)
    w = np.asarray(w, dtype=bool)
    spike = np.asarray(spike, dtype=bool)
    if w.shape != (spike.size, v.size):
        raise DimensionError(f"weights {w.shape} incompatible with {spike.size} inputs, {v.size} outputs")
    return v + spike.astype(np.int64) @ w.astype(np.int64) - int(leak)


def update_synapses(w, spike, winner: int, label: int, p_up: float, p_dn: float, rng) -> np.ndarray:
    """Stochastically flip the active synapses of column ``winner`` in place.

    Hebbian (winner == label): 0->1 with ``p_up``, 1->0 with ``p_dn``.
    Anti-Hebbian: 1->0 with ``p_up``, 0->1 with ``p_dn``. One uniform draw
    is consumed per input row, active or not, so the stream position does
    not depend on the data. Returns the mask of flipped rows.
    """
    r = rng.random(w.shape[0])
    col = w[:, winner]
    if winner == label:
        p = np.where(col, p_dn, p_up)
    else:
        p = np.where(col, p_up, p_dn)
    flip = spike & (r < p)
    w[flip, winner] = ~col[flip]
    return flip


def presentation_schedule(sizes: Sequence[int], batch: int, count: int):
    """Yield ``(class, index_within_class, cycle)`` triples: ``batch``
    inputs from class 0, then class 1, ..., repeating; each class walks its
    list in order and wraps around."""
    ptr = [0] * len(sizes)
    done = 0
    while True:
        for c, n in enumerate(sizes):
            for cycle in range(batch):
                if done == count:
                    return
                yield c, ptr[c] % n, cycle
                ptr[c] += 1
                done += 1


@dataclass(frozen=True)
class UpdateEvent:
    """One synapse update step, as passed to the ``on_update`` hook."""

    step: int
    winner: int
    label: int
    cycle: int
    p_up: float            # effective probabilities after any reduction
    p_dn: float
    spike: np.ndarray
    before: np.ndarray     # winner column before the update
    flipped: np.ndarray    # rows whose weight changed
    w: np.ndarray          # live weight matrix after the update

    @property
    def hebbian(self) -> bool:
        return self.winner == self.label


def init_weights(cfg: SnnTrainConfig, rng) -> np.ndarray:
    return rng.integers(0, 2, size=(cfg.n_input, cfg.n_output)).astype(bool)


def train(splits, cfg: SnnTrainConfig = SnnTrainConfig(), seed=None,
          on_update: Optional[Callable] = None) -> np.ndarray:
    """Train a binary weight matrix from ``splits[c]`` = spike trains of class c.

    ``on_update(event)`` receives an :class:`UpdateEvent` after every
    synapse update step, for instrumentation.
    """
    if len(splits) != cfg.n_output:
        raise DimensionError(f"{len(splits)} class lists for {cfg.n_output} outputs")
    data = []
    for c, items in enumerate(splits):
        arr = np.asarray([getattr(s, "spike_train", s) for s in items], dtype=bool)
        if arr.shape[0] == 0:
            raise InsufficientDataError(f"class {c} has no training inputs")
        if arr.shape[1] != cfg.n_input:
            raise DimensionError(f"class {c} spike trains have {arr.shape[1]} bits, expected {cfg.n_input}")
        data.append(arr)
    count = cfg.train_count if cfg.train_count is not None else sum(len(d) for d in data)
    if count <= 0:
        raise ConfigError("train_count must be positive")

    rng = np.random.default_rng(seed)
    w = init_weights(cfg, rng)
    w_int = w.astype(np.int64)
    v = np.zeros(cfg.n_output, dtype=np.int64)
    schedule = presentation_schedule([len(d) for d in data], cfg.batch_per_class, count)
    for step, (label, idx, cycle) in enumerate(schedule):
        x = data[label][idx]
        v = v + x @ w_int - cfg.leak
        winner = int(np.argmax(v))
        if v[winner] > cfg.thr1:
            p_up, p_dn = cfg.p_up[cycle], cfg.p_dn[cycle]
            if v[winner] > cfg.thr2:
                p_up *= cfg.reduce_factor
                p_dn *= cfg.reduce_factor
            before = w[:, winner].copy() if on_update is not None else None
            flipped = update_synapses(w, x, winner, label, p_up, p_dn, rng)
            if flipped.any():
                w_int[:, winner] = w[:, winner]
            if on_update is not None:
                on_update(UpdateEvent(step, winner, label, cycle, p_up, p_dn, x, before, flipped, w))
            v[:] = 0
        elif cfg.reset_every_input:
            v[:] = 0
    return w


def split_by_class(spike_trains, labels, n_classes: int) -> list:
    trains = np.asarray([getattr(s, "spike_train", s) for s in spike_trains], dtype=bool)
    labels = np.asarray(labels)
    return [trains[labels == c] for c in range(n_classes)]


def train_best_of(splits, cfg: SnnTrainConfig, seeds, eval_trains, eval_labels,
                  return_all: bool = False):
    """Train once per seed and keep the weights scoring best on the
    evaluation set (first one on ties).

    Returns ``(weights, accuracy)``, plus the list of per-run accuracies
    when ``return_all`` is set.
    """
    seeds = list(seeds)
    if not seeds:
        raise ConfigError("need at least one seed")
    eval_trains = np.asarray([getattr(s, "spike_train", s) for s in eval_trains], dtype=bool)
    best_w, best_acc, accs = None, -1.0, []
    for s in seeds:
        w = train(splits, cfg, s)
        acc = accuracy(DigitalClassifier(w).predict(eval_trains), eval_labels)
        accs.append(acc)
        if acc > best_acc:
            best_w, best_acc = w, acc
    if return_all:
        return best_w, best_acc, accs
    return best_w, best_acc


def restart_seeds(seed, n: int) -> list:
    """``n`` independent child seeds derived from one root seed."""
    return np.random.SeedSequence(seed).spawn(n)


# -- text format -----------------------------------------------------------

def save_weights(w, path):
    """Header ``N_I N_O`` then one line of N_O '0'/'1' characters per input."""
    w = np.asarray(w, dtype=bool)
    with open(os.fspath(path), "w") as fh:
        fh.write(format_weights(w))


def format_weights(w) -> str:
    w = np.asarray(w, dtype=bool)
    lines = [f"{w.shape[0]} {w.shape[1]}"]
    lines += ["".join("1" if b else "0" for b in row) for row in w]
    return "\n".join(lines) + "\n"


def load_weights(path) -> np.ndarray:
    with open(os.fspath(path)) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ParseError("empty weight file")
    try:
        n_in, n_out = (int(t) for t in lines[0].split())
    except ValueError:
        raise ParseError("header must be 'N_I N_O'", 1) from None
    if len(lines) - 1 != n_in:
        raise ParseError(f"expected {n_in} weight rows, found {len(lines) - 1}")
    w = np.zeros((n_in, n_out), dtype=bool)
    for i, row in enumerate(lines[1:]):
        if len(row) != n_out or set(row) - {"0", "1"}:
            raise ParseError(f"bad weight row {row!r}", i + 2)
        w[i] = [ch == "1" for ch in row]
    return w
