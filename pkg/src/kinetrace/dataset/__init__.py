"""Data model, interchange format, feature assembly, splits and synthesis."""

from .recording import (
    DEFAULT_CHANNELS,
    SubjectRecording,
    TrialMarker,
    load_subject,
    save_subject,
    select_channels,
)
from .features import LagWindowSpec, build_lag_features
from .splits import LosoPlan, SplitPlan, split_loso, split_subject_dependent
from .synth import GroundTruth, SynthConfig, generate_synthetic_subject

__all__ = [
    "DEFAULT_CHANNELS",
    "SubjectRecording",
    "TrialMarker",
    "load_subject",
    "save_subject",
    "select_channels",
    "LagWindowSpec",
    "build_lag_features",
    "SplitPlan",
    "LosoPlan",
    "split_subject_dependent",
    "split_loso",
    "SynthConfig",
    "GroundTruth",
    "generate_synthetic_subject",
]
