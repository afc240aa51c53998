"""kinetrace: 3-D hand trajectory decoding from pre-movement EEG."""

__version__ = "0.1.0"

from . import dataset, decoders, errors, evaluation, nn, signal

__all__ = ["dataset", "decoders", "errors", "evaluation", "nn", "signal", "__version__"]
