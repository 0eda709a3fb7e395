"""End-to-end pipeline and the experiment recipes behind the CLI.

detect -> encode -> K-means labels -> STDP best-of-R -> digital and
crossbar classification. Every recipe derives its random streams from the
run seed through :func:`neurosort.config.seed_for`, so results depend only
on (config, seed).
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kmeans as km
from .adaptation import build_threshold, observe
from .classifier import DigitalClassifier, accuracy
from .config import ADAPT, DATA, DUMP, FIG6, KMEANS, SNN, SPLIT, SWEEP, RunConfig, seed_for
from .crossbar import CrossbarConfig, CrossbarNetwork, build_system
from .detection import encode_trace
from .errors import ConfigError, InsufficientDataError
from .signal import NeuralTrace, load_trace, synth_trace
from .snn import load_weights, split_by_class, train, train_best_of
from .variation import PowerParams, VariationSweepConfig, average_power, run_variation_sweep


@contextlib.contextmanager
def stage(name: str):
    """Tag any exception escaping the block with the pipeline stage."""
    try:
        yield
    except Exception as exc:
        if not hasattr(exc, "stage"):
            exc.stage = name
        raise


# -- data preparation ------------------------------------------------------

@dataclass
class Dataset:
    trace: NeuralTrace
    spikes: list
    labels: np.ndarray          # K-means cluster per spike
    truth: Optional[np.ndarray]  # ground-truth class per spike, -1 unknown
    train_idx: np.ndarray
    test_idx: np.ndarray
    model: km.KMeansModel
    value_range: tuple

    @property
    def trains(self) -> np.ndarray:
        return np.array([s.spike_train for s in self.spikes], dtype=bool)

    @property
    def digitized(self) -> np.ndarray:
        return np.array([s.digitized for s in self.spikes], dtype=np.int64)


def acquire(rc: RunConfig, key=()) -> NeuralTrace:
    if rc.input.source == "synth":
        s = rc.synth
        return synth_trace(s.n_classes, s.spikes_per_class, s.noise_sigma,
                           seed=seed_for(rc.seed, DATA, *key), sample_rate=rc.input.sample_rate,
                           mean_gap=s.mean_gap, noise_corr=s.noise_corr)
    return load_trace(rc.input.source, rc.input.format, rc.input.sample_rate)


def prepare(rc: RunConfig, key=()) -> Dataset:
    with stage("acquire"):
        trace = acquire(rc, key)
    with stage("detect"):
        x = trace.samples
        value_range = (float(x.min()), float(x.max()))
        spikes = encode_trace(trace, rc.detector, rc.encoder, value_range=value_range)
        if len(spikes) < max(rc.kmeans.k, 2):
            raise InsufficientDataError(f"only {len(spikes)} spikes detected")
    with stage("kmeans"):
        model = km.fit([s.digitized for s in spikes], rc.kmeans, seed=seed_for(rc.seed, KMEANS, *key))
        labels = km.assign_all(model, [s.digitized for s in spikes])
    truth = None
    if trace.labels:
        truth = np.array([-1 if s.class_id is None else s.class_id for s in spikes])
    order = np.random.default_rng(seed_for(rc.seed, SPLIT, *key)).permutation(len(spikes))
    n_train = int(round(rc.split.train_fraction * len(spikes)))
    return Dataset(trace, spikes, labels, truth, order[:n_train], order[n_train:], model, value_range)


def best_mapping(pred, truth) -> dict:
    """Cluster id -> class id maximizing agreement (Hungarian assignment)."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    ok = truth >= 0
    p_ids = np.unique(pred)
    t_ids = np.unique(truth[ok]) if ok.any() else np.array([], int)
    if p_ids.size == 0 or t_ids.size == 0:
        return {}
    counts = np.array([[np.sum((pred[ok] == p) & (truth[ok] == t)) for t in t_ids] for p in p_ids])
    r, c = linear_sum_assignment(-counts)
    return {int(p_ids[i]): int(t_ids[j]) for i, j in zip(r, c)}


def truth_accuracy(pred, truth) -> float:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    ok = truth >= 0
    if not ok.any():
        return float("nan")
    mapping = best_mapping(pred, truth)
    mapped = np.array([mapping.get(int(p), -1) for p in pred[ok]])
    return accuracy(mapped, truth[ok])


def confusion(pred, truth, k: int) -> np.ndarray:
    m = np.zeros((k, k), dtype=np.int64)
    for p, t in zip(pred, truth):
        if 0 <= t < k and 0 <= p < k:
            m[t, p] += 1
    return m


def train_model(rc: RunConfig, ds: Dataset, idx=None, train_count=None, key=()):
    """Best-of-R STDP weights on ``ds.train_idx`` (or ``idx``) with K-means
    labels. Returns ``(w, best_train_accuracy, all_accuracies)``."""
    idx = ds.train_idx if idx is None else np.asarray(idx)
    x = ds.trains[idx]
    y = ds.labels[idx]
    cfg = rc.snn
    if cfg.n_output != rc.kmeans.k:
        raise ConfigError("snn.n_output must equal kmeans.k")
    if train_count is not None:
        cfg = replace(cfg, train_count=train_count)
    with stage("snn"):
        splits = split_by_class(x, y, cfg.n_output)
        seeds = seed_for(rc.seed, SNN, *key).spawn(cfg.restarts)
        return train_best_of(splits, cfg, seeds, x, y, return_all=True)


def crossbar_for(rc: RunConfig, w) -> CrossbarConfig:
    cfg = rc.crossbar
    if (cfg.rows, cfg.classes) != w.shape:
        cfg = replace(cfg, rows=w.shape[0], cols=w.shape[1] + 1)
    return cfg


# -- pipeline --------------------------------------------------------------

@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)       # one dict per evaluated spike
    summary: dict = field(default_factory=dict)
    weights: Optional[np.ndarray] = None
    runtime: float = 0.0


def run_pipeline(rc: RunConfig) -> ExperimentReport:
    ds = prepare(rc)
    w, _, _ = train_model(rc, ds)
    x = ds.trains
    with stage("classify"):
        digital = DigitalClassifier(w).predict(x)
    with stage("crossbar"):
        crossbar = CrossbarNetwork(crossbar_for(rc, w), w).predict(x)
    test = ds.test_idx
    rows = []
    for i in test:
        s = ds.spikes[i]
        rows.append({"index": int(i), "onset": s.onset,
                     "true_class": "" if ds.truth is None or ds.truth[i] < 0 else int(ds.truth[i]),
                     "kmeans_label": int(ds.labels[i]), "digital_class": int(digital[i]),
                     "crossbar_class": int(crossbar[i])})
    k = rc.kmeans.k
    summary = {
        "n_spikes": len(ds.spikes),
        "n_train": int(ds.train_idx.size),
        "n_test": int(test.size),
        "digital_train_accuracy": accuracy(digital[ds.train_idx], ds.labels[ds.train_idx]),
        "digital_test_accuracy": accuracy(digital[test], ds.labels[test]),
        "crossbar_test_accuracy": accuracy(crossbar[test], ds.labels[test]),
        "crossbar_digital_agreement": accuracy(crossbar[test], digital[test]),
    }
    if ds.truth is not None:
        summary["kmeans_truth_accuracy"] = truth_accuracy(ds.labels, ds.truth)
        summary["digital_test_truth_accuracy"] = truth_accuracy(digital[test], ds.truth[test])
        summary["crossbar_test_truth_accuracy"] = truth_accuracy(crossbar[test], ds.truth[test])
    for name, pred in (("digital", digital), ("crossbar", crossbar)):
        cm = confusion(pred[test], ds.labels[test], k)
        for a in range(k):
            for b in range(k):
                summary[f"confusion_{name}_{a}_{b}"] = int(cm[a, b])
    summary["average_power_W"] = average_power(PowerParams.from_crossbar(crossbar_for(rc, w)))
    return ExperimentReport(rows, summary, w)


# -- figure recipes --------------------------------------------------------

def run_fig5(rc: RunConfig) -> list:
    """``(fraction, n_used, train_accuracy, test_accuracy)`` per grid point.

    Each point trains on the leading fraction of the shuffled training set
    with one pass over it."""
    ds = prepare(rc)
    out = []
    xt, yt = ds.trains[ds.test_idx], ds.labels[ds.test_idx]
    for g_i, frac in enumerate(rc.fig5.grid):
        n = max(int(round(frac * ds.train_idx.size)), rc.kmeans.k)
        idx = ds.train_idx[:n]
        w, train_acc, _ = train_model(rc, ds, idx=idx, train_count=n, key=(g_i,))
        test_acc = accuracy(DigitalClassifier(w).predict(xt), yt)
        out.append((float(frac), n, train_acc, test_acc))
    return out


def run_fig6(rc: RunConfig):
    """Per-run accuracies for R = runs_small and R = runs_large restarts.

    Returns ``(runs, summary)``; runs rows are ``(repetition, group, run,
    train_accuracy, test_accuracy)`` and summary rows ``(repetition,
    max_small, max_large, median_large, difference)``. Each repetition
    uses a fresh synthetic trace (file inputs are reused) and independent
    restart streams for the two groups.
    """
    runs, summary = [], []
    cfg = rc.snn
    for rep in range(rc.fig6.repetitions):
        ds = prepare(rc, key=(FIG6, rep)) if rc.input.source == "synth" else prepare(rc)
        x, y = ds.trains[ds.train_idx], ds.labels[ds.train_idx]
        xt, yt = ds.trains[ds.test_idx], ds.labels[ds.test_idx]
        splits = split_by_class(x, y, cfg.n_output)
        group_max = {}
        group_acc = {}
        for g, n in ((0, rc.fig6.runs_small), (1, rc.fig6.runs_large)):
            seeds = seed_for(rc.seed, FIG6, rep, g).spawn(n)
            accs = []
            with stage("snn"):
                for r, s in enumerate(seeds):
                    w = train(splits, cfg, s)
                    clf = DigitalClassifier(w)
                    a_tr = accuracy(clf.predict(x), y)
                    a_te = accuracy(clf.predict(xt), yt)
                    accs.append(a_tr)
                    runs.append((rep, n, r, a_tr, a_te))
            group_max[g] = max(accs)
            group_acc[g] = accs
        summary.append((rep, group_max[0], group_max[1], float(np.median(group_acc[1])),
                        group_max[1] - group_max[0]))
    return runs, summary


def run_sweep(rc: RunConfig):
    """Variation sweep rows and the power estimate for the trained model."""
    ds = prepare(rc)
    w, _, _ = train_model(rc, ds)
    cb = crossbar_for(rc, w)
    sweep = VariationSweepConfig(levels=rc.sweep.levels, trials_per_level=rc.sweep.trials,
                                 seed=seed_for(rc.seed, SWEEP), mode=rc.sweep.mode, dist=rc.sweep.dist)
    with stage("sweep"):
        rows = run_variation_sweep(cb, w, sweep, ds.trains[ds.test_idx], ds.labels[ds.test_idx])
    return rows, average_power(PowerParams.from_crossbar(cb))


@dataclass
class AdaptResult:
    rows: list                 # (index, phase, true_class, cluster, distance, threshold, exceeded, triggered)
    triggers: list             # stream indices where retraining happened
    phase1_triggers: int
    phase2_triggers: int
    novel_distance_before: float
    novel_distance_after: float
    accuracy_before: float     # phase-2 clustering accuracy against ground truth
    accuracy_after: float


def run_adapt(rc: RunConfig) -> AdaptResult:
    """Two-phase drift scenario on synthetic data.

    The K-means model is fitted on the prepared training trace. Phase 1
    streams new spikes of the same classes; phase 2 adds the novel
    template. On each trigger the model is refitted on the last
    ``scenario.buffer`` spikes followed by the original training spikes,
    the threshold is rebuilt from that set and the window cleared.
    """
    sc = rc.scenario
    n_cls = rc.synth.n_classes
    if not n_cls <= sc.novel_class:
        raise ConfigError("scenario.novel_class must not be one of the trained classes")
    base = prepare(rc) if rc.input.source == "synth" else None
    if base is None:
        raise ConfigError("the adaptation scenario needs input.source = synth")
    original = base.digitized
    model = base.model
    vr = base.value_range
    stream_seed = seed_for(rc.seed, ADAPT)
    s1, s2 = stream_seed.spawn(2)
    classes2 = list(range(n_cls)) + [sc.novel_class]
    with stage("acquire"):
        t1 = synth_trace(n_cls, sc.phase1_per_class, rc.synth.noise_sigma, seed=s1,
                         sample_rate=rc.input.sample_rate, mean_gap=rc.synth.mean_gap,
                         noise_corr=rc.synth.noise_corr)
        t2 = synth_trace(len(classes2), sc.phase2_per_class, rc.synth.noise_sigma, seed=s2,
                         sample_rate=rc.input.sample_rate, mean_gap=rc.synth.mean_gap,
                         classes=classes2, noise_corr=rc.synth.noise_corr)
    with stage("detect"):
        p1 = encode_trace(t1, rc.detector, rc.encoder, value_range=vr)
        p2 = encode_trace(t2, rc.detector, rc.encoder, value_range=vr)
    stream = [(1, s) for s in p1] + [(2, s) for s in p2]
    novel = np.array([s.digitized for s in p2 if s.class_id == sc.novel_class], dtype=np.int64)
    truth2 = np.array([-1 if s.class_id is None else s.class_id for s in p2])
    x2 = np.array([s.digitized for s in p2], dtype=np.int64)
    before = float(km.distance_to_assigned(model, novel).mean()) if novel.size else float("nan")
    acc_before = truth_accuracy(km.assign_all(model, x2), truth2)

    state = build_threshold(model, original, rc.adapt)
    recent = []
    rows, triggers = [], []
    counts = {1: 0, 2: 0}
    with stage("adapt"):
        for i, (phase, s) in enumerate(stream):
            cls, fire = observe(state, model, s, rc.adapt)
            d = state.last_distance
            rows.append((i, phase, "" if s.class_id is None else s.class_id, cls, d,
                         state.threshold, int(d > state.threshold), int(fire)))
            recent.append(s.digitized)
            recent = recent[-sc.buffer:]
            if fire:
                counts[phase] += 1
                triggers.append(i)
                refit = np.concatenate([np.array(recent), original])
                model = km.fit(refit, rc.kmeans, seed=seed_for(rc.seed, KMEANS, ADAPT, len(triggers)))
                state = build_threshold(model, refit, rc.adapt)
    after = float(km.distance_to_assigned(model, novel).mean()) if novel.size else float("nan")
    acc_after = truth_accuracy(km.assign_all(model, x2), truth2)
    return AdaptResult(rows, triggers, counts[1], counts[2], before, after, acc_before, acc_after)


def power_report(rc: RunConfig) -> list:
    p = PowerParams.from_crossbar(rc.crossbar)
    return [("i_synapse_A", p.i_synapse), ("n_column", p.n_column), ("v_dd_V", p.v_dd),
            ("beta", p.beta), ("average_power_W", average_power(p))]


def dump_system(rc: RunConfig):
    """Conductance system for ``dump.weights`` (or seeded random weights)
    and a seeded random spike train."""
    cfg = rc.crossbar
    rng = np.random.default_rng(seed_for(rc.seed, DUMP))
    if rc.dump.weights:
        w = load_weights(rc.dump.weights)
        cfg = crossbar_for(rc, w)
    else:
        w = rng.random((cfg.rows, cfg.classes)) < 0.5
    spike = rng.random(cfg.rows) < rc.dump.spike_density
    return build_system(cfg, w, spike), w, spike
