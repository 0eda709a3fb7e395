"""Core data types, trace file I/O and the synthetic spike generator."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyInputError, ParseError, UnsupportedError

# Samples per template and position of the template's largest |amplitude|.
TEMPLATE_LEN = 64
TEMPLATE_PEAK = 20
DEFAULT_SAMPLE_RATE = 24000.0

# (amplitude, frequency Hz, time constant s, onset phase rad, envelope power)
# per class; the envelope is (t/tau)**power * exp(-t/tau). Class 3 is held
# back as the "novel" shape for drift experiments.
_TEMPLATE_PARAMS = (
    (0.8, 536.0, 0.63e-3, np.pi / 2, 1),
    (1.0, 386.0, 0.92e-3, 0.0, 0),
    (1.0, 754.0, 0.50e-3, np.pi / 2, 1),
    (-0.9, 1600.0, 0.40e-3, 0.0, 0),
)
N_TEMPLATES = len(_TEMPLATE_PARAMS)


@dataclass(frozen=True)
class NeuralTrace:
    """A sampled extracellular waveform.

    ``labels`` holds ``(index, class_id)`` pairs marking the start of each
    ground-truth spike window, when known.
    """

    samples: np.ndarray
    sample_rate: float = DEFAULT_SAMPLE_RATE
    labels: tuple = ()

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64).ravel()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        labels = tuple((int(i), int(c)) for i, c in self.labels)
        object.__setattr__(self, "labels", labels)
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        for idx, _ in labels:
            if not 0 <= idx < samples.size:
                raise ValueError(f"label index {idx} outside trace of length {samples.size}")

    def __len__(self):
        return self.samples.size

    def __eq__(self, other):
        if not isinstance(other, NeuralTrace):
            return NotImplemented
        return (self.sample_rate == other.sample_rate
                and self.labels == other.labels
                and np.array_equal(self.samples, other.samples))

    __hash__ = None

    @property
    def label_indices(self) -> np.ndarray:
        return np.array([i for i, _ in self.labels], dtype=np.int64)

    @property
    def label_classes(self) -> np.ndarray:
        return np.array([c for _, c in self.labels], dtype=np.int64)


@dataclass(frozen=True)
class NSpike:
    """One detected spike window in both encodings."""

    digitized: np.ndarray
    spike_train: np.ndarray
    class_id: Optional[int] = None
    onset: Optional[int] = None

    def __post_init__(self):
        d = np.asarray(self.digitized, dtype=np.int64).ravel()
        s = np.asarray(self.spike_train, dtype=bool).ravel()
        if d.size and d.min() < 0:
            raise ValueError("digitized values must be unsigned")
        d.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "digitized", d)
        object.__setattr__(self, "spike_train", s)


@dataclass(frozen=True)
class DatasetSplit:
    train: list = field(default_factory=list)
    test: list = field(default_factory=list)


def split_dataset(spikes: Sequence[NSpike], train_fraction: float, seed=None) -> DatasetSplit:
    """Shuffle ``spikes`` and cut them into disjoint train/test lists."""
    if not 0 < train_fraction <= 1:
        raise ValueError("train_fraction must be in (0, 1]")
    order = np.random.default_rng(seed).permutation(len(spikes))
    n_train = int(round(train_fraction * len(spikes)))
    train = [spikes[i] for i in order[:n_train]]
    test = [spikes[i] for i in order[n_train:]]
    return DatasetSplit(train=train, test=test)


# -- file formats ----------------------------------------------------------

def load_trace(path, format: str = "csv", sample_rate: float = DEFAULT_SAMPLE_RATE) -> NeuralTrace:
    """Read a trace written as CSV (one amplitude per line, optional label
    column) or as raw little-endian float64."""
    path = os.fspath(path)
    if format == "csv":
        samples, labels = [], []
        with open(path, "r") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = [p.strip() for p in line.split(",")]
                if len(parts) > 2:
                    raise ParseError(f"expected 1 or 2 columns, got {len(parts)}", lineno)
                try:
                    samples.append(float(parts[0]))
                    if len(parts) == 2 and parts[1] != "":
                        labels.append((len(samples) - 1, int(parts[1])))
                except ValueError:
                    raise ParseError(f"cannot parse {line!r}", lineno) from None
        if not samples:
            raise EmptyInputError(f"{path}: no samples")
        return NeuralTrace(np.array(samples), sample_rate, tuple(labels))
    if format == "raw-f64-le":
        raw = open(path, "rb").read()
        if not raw:
            raise EmptyInputError(f"{path}: no samples")
        if len(raw) % 8:
            raise ParseError(f"{path}: size {len(raw)} is not a multiple of 8 bytes")
        return NeuralTrace(np.frombuffer(raw, dtype="<f8").copy(), sample_rate)
    raise UnsupportedError(f"unknown trace format {format!r}")


def write_trace(trace: NeuralTrace, path, format: str = "csv"):
    path = os.fspath(path)
    if format == "csv":
        labels = dict(trace.labels)
        with open(path, "w") as fh:
            for i, x in enumerate(trace.samples):
                if i in labels:
                    fh.write(f"{float(x)!r},{labels[i]}\n")
                else:
                    fh.write(f"{float(x)!r}\n")
    elif format == "raw-f64-le":
        with open(path, "wb") as fh:
            fh.write(trace.samples.astype("<f8").tobytes())
    else:
        raise UnsupportedError(f"unknown trace format {format!r}")


# -- synthetic data --------------------------------------------------------

def template(class_id: int, sample_rate: float = DEFAULT_SAMPLE_RATE) -> np.ndarray:
    """Damped-sinusoid template of length TEMPLATE_LEN with its largest
    |amplitude| at TEMPLATE_PEAK."""
    if not 0 <= class_id < N_TEMPLATES:
        raise UnsupportedError(f"only {N_TEMPLATES} built-in templates")
    amp, freq, tau, phase, power = _TEMPLATE_PARAMS[class_id]
    t = np.arange(4 * TEMPLATE_LEN) / sample_rate
    wave = (t / tau) ** power * np.exp(-t / tau) * np.sin(2 * np.pi * freq * t + phase)
    wave -= wave[0]
    wave *= amp / np.abs(wave).max()
    start = int(np.argmax(np.abs(wave))) - TEMPLATE_PEAK
    out = np.zeros(TEMPLATE_LEN)
    src = wave[max(start, 0):start + TEMPLATE_LEN]
    out[max(-start, 0):max(-start, 0) + src.size] = src
    return out


def colored_noise(rng, n: int, sigma: float, corr: float) -> np.ndarray:
    """Gaussian noise low-passed by a Gaussian kernel of ``corr`` samples
    and rescaled to standard deviation ``sigma``. ``corr=0`` gives white noise."""
    white = rng.normal(0.0, 1.0, size=n)
    if corr <= 0:
        return sigma * white
    half = int(np.ceil(4 * corr))
    k = np.exp(-0.5 * (np.arange(-half, half + 1) / corr) ** 2)
    k /= np.sqrt(np.sum(k ** 2))
    return sigma * np.convolve(white, k, mode="same")


def synth_trace(n_classes: int, spikes_per_class: int, noise_sigma: float, seed=None,
                sample_rate: float = DEFAULT_SAMPLE_RATE, mean_gap: int = 1000,
                classes: Optional[Sequence[int]] = None, noise_corr: float = 2.0) -> NeuralTrace:
    """Build a trace with ``spikes_per_class`` copies of each class template
    plus band-limited Gaussian noise of standard deviation ``noise_sigma``.

    Spikes are emitted in rounds; each round contains every class once in a
    random order, so the first ``n_classes`` spikes cover all classes.
    ``classes`` selects which built-in templates to use (default
    ``range(n_classes)``); labels are the template ids.
    """
    if n_classes < 2:
        raise ValueError("n_classes must be >= 2")
    if n_classes > N_TEMPLATES:
        raise UnsupportedError(f"only {N_TEMPLATES} built-in templates")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    if classes is None:
        classes = range(n_classes)
    classes = [int(c) for c in classes]
    if len(classes) != n_classes:
        raise ValueError("len(classes) must equal n_classes")
    rng = np.random.default_rng(seed)
    templates = {c: template(c, sample_rate) for c in classes}

    order = [c for _ in range(spikes_per_class) for c in rng.permutation(classes)]
    gaps = TEMPLATE_LEN * 2 + rng.integers(0, 2 * max(mean_gap - 2 * TEMPLATE_LEN, 1),
                                           size=len(order))
    starts = TEMPLATE_LEN + np.concatenate([[0], np.cumsum(gaps[:-1])]) if order else np.array([], int)
    n = int(starts[-1] + 2 * TEMPLATE_LEN) if order else 2 * TEMPLATE_LEN
    x = colored_noise(rng, n, noise_sigma, noise_corr) if noise_sigma > 0 else np.zeros(n)
    for s, c in zip(starts, order):
        x[s:s + TEMPLATE_LEN] += templates[c]
    labels = tuple((int(s), int(c)) for s, c in zip(starts, order))
    return NeuralTrace(x, sample_rate, labels)
