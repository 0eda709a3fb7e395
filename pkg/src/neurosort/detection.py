"""Spike detection with the nonlinear energy operator and the two window
encodings: digitized (m samples of n bits) and binary spike train."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, InputTooShortError
from .signal import TEMPLATE_LEN, TEMPLATE_PEAK, NeuralTrace, NSpike


@dataclass(frozen=True)
class DetectorConfig:
    neo_window: int = 8
    threshold_scale: float = 8.0
    refractory: int = 48
    window_len: int = TEMPLATE_LEN
    align_offset: int = TEMPLATE_PEAK

    def __post_init__(self):
        for name in ("neo_window", "threshold_scale", "refractory", "window_len", "align_offset"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if self.align_offset >= self.window_len:
            raise ConfigError("align_offset must be < window_len")


@dataclass(frozen=True)
class EncoderConfig:
    m: int = 16
    n: int = 5
    n_input: int = 300
    groups: Optional[int] = None  # duty-cycle groups in the spike train; None means m

    def __post_init__(self):
        if self.m < 1 or self.n < 1 or self.n_input < 1:
            raise ConfigError("m, n and n_input must be >= 1")
        if self.groups is not None and not 1 <= self.groups <= self.n_input:
            raise ConfigError("groups must be in [1, n_input]")

    @property
    def n_groups(self) -> int:
        return min(self.groups or self.m, self.n_input)


def neo(x) -> np.ndarray:
    """psi[k] = x[k]**2 - x[k-1]*x[k+1]; the two boundary samples are 0."""
    if isinstance(x, NeuralTrace):
        x = x.samples
    x = np.asarray(x, dtype=np.float64)
    if x.size < 3:
        raise InputTooShortError("NEO needs at least 3 samples")
    psi = np.zeros_like(x)
    psi[1:-1] = x[1:-1] ** 2 - x[:-2] * x[2:]
    return psi


def smoothed_energy(x, width: int) -> np.ndarray:
    psi = neo(x)
    if width <= 1:
        return psi
    return np.convolve(psi, np.ones(width) / width, mode="same")


def detect(trace, cfg: DetectorConfig = DetectorConfig()) -> list:
    """Return window start indices of detected spikes.

    Each supra-threshold run of the smoothed energy yields at most one
    spike; the window is placed so its largest |amplitude| (searched from
    the threshold crossing over ``window_len - align_offset`` samples) sits
    at ``align_offset``. Peaks closer than ``refractory`` to the previous
    accepted peak are dropped.
    """
    x = trace.samples if isinstance(trace, NeuralTrace) else np.asarray(trace, dtype=np.float64)
    if x.size < cfg.window_len:
        raise InputTooShortError(f"trace of {x.size} samples is shorter than window_len")
    energy = smoothed_energy(x, cfg.neo_window)
    mean = energy.mean()
    if mean <= 0:
        return []
    above = energy > cfg.threshold_scale * mean
    rising = np.flatnonzero(above & ~np.concatenate([[False], above[:-1]]))

    onsets = []
    last_peak = None
    search = cfg.window_len - cfg.align_offset
    for c in rising:
        seg = np.abs(x[c:c + search])
        p = int(c + np.argmax(seg))
        if last_peak is not None and p - last_peak < cfg.refractory:
            continue
        start = p - cfg.align_offset
        if start < 0 or start + cfg.window_len > x.size:
            continue
        onsets.append(start)
        last_peak = p
    return onsets


def extract_windows(trace, onsets, window_len: int) -> np.ndarray:
    x = trace.samples if isinstance(trace, NeuralTrace) else np.asarray(trace, dtype=np.float64)
    if len(onsets) == 0:
        return np.zeros((0, window_len))
    return np.stack([x[s:s + window_len] for s in onsets])


def _bin_means(window: np.ndarray, m: int) -> np.ndarray:
    # m nearly-equal bins; remainder samples go to the leading bins
    return np.array([b.mean() for b in np.array_split(window, m)])


def encode_digitized(window, cfg: EncoderConfig = EncoderConfig(), value_range=None) -> np.ndarray:
    """Average the window into m bins and quantize onto [0, 2**n - 1].

    ``value_range`` is the ``(lo, hi)`` range mapped onto the code range;
    it should be the global min/max of the trace. Without it the window's
    own range is used. A flat range maps everything to 2**(n-1).
    """
    window = np.asarray(window, dtype=np.float64).ravel()
    if window.size < cfg.m:
        raise InputTooShortError(f"window of {window.size} samples shorter than m={cfg.m}")
    lo, hi = value_range if value_range is not None else (window.min(), window.max())
    top = 2 ** cfg.n - 1
    bins = _bin_means(window, cfg.m)
    if hi <= lo:
        return np.full(cfg.m, 2 ** (cfg.n - 1), dtype=np.int64)
    codes = np.rint((bins - lo) / (hi - lo) * top)
    return np.clip(codes, 0, top).astype(np.int64)


def group_sizes(n_input: int, n_groups: int) -> np.ndarray:
    """Slot count per duty-cycle group; the remainder is spread one slot
    each over the leading groups."""
    base, extra = divmod(n_input, n_groups)
    return np.array([base + (i < extra) for i in range(n_groups)], dtype=np.int64)


def encode_spike_train(window, cfg: EncoderConfig = EncoderConfig(), peak=None) -> np.ndarray:
    """Duty-cycle encoding of the rectified window into n_input bits.

    The window's |amplitude| is averaged into ``cfg.n_groups`` bins and
    normalized by ``peak`` (global max |amplitude|; the window's own max
    when omitted). Group b of g_b slots gets round(a_b * g_b) leading ones.
    """
    window = np.abs(np.asarray(window, dtype=np.float64).ravel())
    if window.size < 1:
        raise InputTooShortError("empty window")
    if peak is None:
        peak = window.max()
    sizes = group_sizes(cfg.n_input, cfg.n_groups)
    out = np.zeros(cfg.n_input, dtype=bool)
    if peak <= 0:
        return out
    if window.size < sizes.size:
        # fewer samples than groups: hold each sample over several groups
        window = np.repeat(window, int(np.ceil(sizes.size / window.size)))
    amp = np.clip(_bin_means(window, sizes.size) / peak, 0.0, 1.0)
    ones = np.rint(amp * sizes).astype(np.int64)
    pos = 0
    for g, k in zip(sizes, ones):
        out[pos:pos + k] = True
        pos += g
    return out


def encode_trace(trace: NeuralTrace, det: DetectorConfig = DetectorConfig(),
                 enc: EncoderConfig = EncoderConfig(), onsets=None, value_range=None,
                 labels=True, label_tolerance: int = 3) -> list:
    """Detect (unless ``onsets`` is given) and encode every spike of a trace.

    Normalization uses the global range of the trace. When the trace has
    ground-truth labels, each spike takes the class of a label within
    ``label_tolerance`` samples of its onset (None otherwise).
    """
    if onsets is None:
        onsets = detect(trace, det)
    x = trace.samples
    if value_range is None:
        value_range = (float(x.min()), float(x.max()))
    peak = max(abs(value_range[0]), abs(value_range[1]))
    truth_idx = trace.label_indices
    truth_cls = trace.label_classes
    spikes = []
    for s in onsets:
        w = x[s:s + det.window_len]
        cls = None
        if labels and truth_idx.size:
            j = int(np.argmin(np.abs(truth_idx - s)))
            if abs(int(truth_idx[j]) - s) <= label_tolerance:
                cls = int(truth_cls[j])
        spikes.append(NSpike(encode_digitized(w, enc, value_range),
                             encode_spike_train(w, enc, peak), cls, int(s)))
    return spikes
