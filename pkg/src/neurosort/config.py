"""Run configuration: flat ``section.key = value`` files plus overrides.

Every section maps onto one frozen dataclass. Values are coerced from
text using the type of the field's default, so a config file can only
set keys that exist.
"""

from __future__ import annotations

import dataclasses
import hashlib
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .adaptation import AdaptationConfig
from .crossbar import CrossbarConfig
from .detection import DetectorConfig, EncoderConfig
from .errors import ConfigError
from .kmeans import KMeansConfig
from .snn import SnnTrainConfig


@dataclass(frozen=True)
class InputConfig:
    source: str = "synth"          # "synth" or a trace file path
    format: str = "csv"            # "csv" or "raw-f64-le"
    sample_rate: float = 24000.0

    def __post_init__(self):
        if self.format not in ("csv", "raw-f64-le"):
            raise ConfigError(f"unknown input format {self.format!r}")
        if not self.sample_rate > 0:
            raise ConfigError("sample_rate must be positive")


@dataclass(frozen=True)
class SynthConfig:
    n_classes: int = 3
    spikes_per_class: int = 500
    noise_sigma: float = 0.03
    noise_corr: float = 2.0
    mean_gap: int = 1000

    def __post_init__(self):
        if self.spikes_per_class < 1:
            raise ConfigError("spikes_per_class must be >= 1")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.6

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class SweepSettings:
    levels: tuple = (0.0, 0.1, 0.2, 0.3, 0.5, 1.0, 1.5, 2.0)
    trials: int = 20
    mode: str = "independent"
    dist: str = "uniform"


@dataclass(frozen=True)
class Fig5Config:
    grid: tuple = (0.25, 0.5, 0.75, 1.0)

    def __post_init__(self):
        if not self.grid or any(not 0 < g <= 1 for g in self.grid):
            raise ConfigError("fig5.grid entries must lie in (0, 1]")


@dataclass(frozen=True)
class Fig6Config:
    runs_small: int = 10
    runs_large: int = 100
    repetitions: int = 1

    def __post_init__(self):
        if not 1 <= self.runs_small <= self.runs_large:
            raise ConfigError("need 1 <= fig6.runs_small <= fig6.runs_large")
        if self.repetitions < 1:
            raise ConfigError("fig6.repetitions must be >= 1")


@dataclass(frozen=True)
class ScenarioConfig:
    phase1_per_class: int = 200     # in-distribution stream, trained classes only
    phase2_per_class: int = 200     # trained classes plus the novel template
    novel_class: int = 3
    buffer: int = 200               # recent spikes added to the originals on retrain

    def __post_init__(self):
        if self.phase1_per_class < 1 or self.phase2_per_class < 1 or self.buffer < 1:
            raise ConfigError("scenario sizes must be >= 1")


@dataclass(frozen=True)
class DumpConfig:
    weights: str = ""               # weight file; empty draws random weights
    spike_density: float = 0.5

    def __post_init__(self):
        if not 0 <= self.spike_density <= 1:
            raise ConfigError("dump.spike_density must lie in [0, 1]")


SECTIONS = {
    "input": InputConfig,
    "synth": SynthConfig,
    "split": SplitConfig,
    "detector": DetectorConfig,
    "encoder": EncoderConfig,
    "kmeans": KMeansConfig,
    "snn": SnnTrainConfig,
    "crossbar": CrossbarConfig,
    "adapt": AdaptationConfig,
    "scenario": ScenarioConfig,
    "sweep": SweepSettings,
    "fig5": Fig5Config,
    "fig6": Fig6Config,
    "dump": DumpConfig,
}


@dataclass(frozen=True)
class RunConfig:
    input: InputConfig = field(default_factory=InputConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    kmeans: KMeansConfig = field(default_factory=KMeansConfig)
    snn: SnnTrainConfig = field(default_factory=SnnTrainConfig)
    crossbar: CrossbarConfig = field(default_factory=CrossbarConfig)
    adapt: AdaptationConfig = field(default_factory=AdaptationConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    fig5: Fig5Config = field(default_factory=Fig5Config)
    fig6: Fig6Config = field(default_factory=Fig6Config)
    dump: DumpConfig = field(default_factory=DumpConfig)
    seed: int = 0
    out: str = "out"

    def flat(self) -> dict:
        """``{"section.key": text}`` for every setting except seed/out."""
        items = {}
        for name in SECTIONS:
            section = getattr(self, name)
            for f in dataclasses.fields(section):
                items[f"{name}.{f.name}"] = format_value(getattr(section, f.name))
        return items

    def config_hash(self) -> str:
        text = "\n".join(f"{k}={v}" for k, v in sorted(self.flat().items()))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ",".join(format_value(x) for x in v)
    return str(v)


def _coerce(text: str, default, key: str):
    t = text.strip()
    try:
        if isinstance(default, bool):
            if t.lower() in ("1", "true", "yes", "on"):
                return True
            if t.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(t)
        if isinstance(default, int):
            return int(t)
        if isinstance(default, float):
            return float(t)
        if isinstance(default, tuple):
            return tuple(float(x) for x in t.split(",") if x.strip())
        if default is None:
            return None if t.lower() in ("none", "") else int(t)
        return t
    except ValueError:
        raise ConfigError(f"bad value {text!r} for {key}") from None


def parse_lines(lines, origin: str = "<config>") -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"{origin}:{lineno}: empty key")
        out[key] = value
    return out


def load_config_file(path) -> dict:
    path = os.fspath(path)
    try:
        with open(path) as fh:
            return parse_lines(fh, path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def parse_overrides(pairs) -> dict:
    out = {}
    for p in pairs or ():
        if "=" not in p:
            raise ConfigError(f"override {p!r} is not key=value")
        k, v = p.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_config(settings: Optional[dict] = None, seed: Optional[int] = None, out: Optional[str] = None) -> RunConfig:
    """RunConfig from a flat mapping of text values (later keys win)."""
    settings = dict(settings or {})
    kwargs = {}
    top = {}
    grouped = {name: {} for name in SECTIONS}
    for key, value in settings.items():
        if key in ("seed", "out"):
            top[key] = value
            continue
        section, _, name = key.partition(".")
        if section not in SECTIONS or not name:
            raise ConfigError(f"unknown config key {key!r}")
        fields = {f.name: f for f in dataclasses.fields(SECTIONS[section])}
        if name not in fields:
            raise ConfigError(f"unknown config key {key!r}")
        default = SECTIONS[section]()
        grouped[section][name] = _coerce(value, getattr(default, name), key)
    for section, cls in SECTIONS.items():
        try:
            kwargs[section] = cls(**grouped[section])
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{section}: {exc}") from None
    if seed is None:
        seed = top.get("seed", 0)
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {seed!r}") from None
    if seed < 0:
        raise ConfigError("seed must be >= 0")
    return RunConfig(seed=seed, out=out if out is not None else top.get("out", "out"), **kwargs)


def seed_for(seed: int, *path: int) -> np.random.SeedSequence:
    """Independent, reproducible stream for one purpose of a run."""
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))


# stream identifiers for seed_for
DATA, SPLIT, KMEANS, SNN, SWEEP, ADAPT, DUMP, FIG6 = range(1, 9)
