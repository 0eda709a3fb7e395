"""Spike sorting with fixed-point K-means labelling, a binary-weight SNN
trained by probabilistic STDP, and a memristive crossbar model of the
classifier."""

__version__ = "0.1.0"

from .errors import (ConfigError, DimensionError, EmptyInputError, InputTooShortError,  # noqa: F401
                     InsufficientDataError, NeurosortError, NumericalError, ParseError,
                     UnsupportedError)
from .signal import NeuralTrace, NSpike, load_trace, split_dataset, synth_trace, write_trace  # noqa: F401
