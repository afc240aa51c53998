"""One-shot converter from WAY-EEG-GAL MATLAB recordings to the
kinetrace interchange format."""

from .convert import (
    ConversionError,
    ConversionManifest,
    ConvertOptions,
    convert_subject,
    verify_output,
)

__all__ = [
    "ConversionError",
    "ConversionManifest",
    "ConvertOptions",
    "convert_subject",
    "verify_output",
]

__version__ = "0.1.0"
