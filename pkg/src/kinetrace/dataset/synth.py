"""Synthetic subjects with known EEG-to-kinematics ground truth.

EEG channels are band-limited Gaussian noise. Kinematics are a fixed
random linear map of the lagged EEG over a 150 ms window, optionally
squashed through per-direction tanh gains and offsets, plus Gaussian
noise, then min-max scaled to [0, 1]. All values are rounded to float32 so the
interchange round trip is bit-exact and the stored linear relation is
exact in the stored data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .. import signal
from ..errors import ArgumentError
from .features import LagWindowSpec
from .recording import DEFAULT_CHANNELS, SubjectRecording, TrialMarker

_GROUND_TRUTH_LAG_MS = 150.0


@dataclass(frozen=True)
class SynthConfig:
    n_channels: int = 21
    n_trials: int = 8
    n_samples: int = 2000
    rate_hz: float = 100.0
    mapping: Literal["linear", "nonlinear"] = "linear"
    noise_std: float = 0.0
    seed: int = 0
    subject_id: str = "SYN"


@dataclass(frozen=True)
class GroundTruth:
    """The exact generative mapping, sufficient to reconstruct kinematics."""

    weights: np.ndarray            # 3 x channels x lags, oldest lag first
    lag: LagWindowSpec
    mapping: str
    gains: tuple[float, float, float]
    offsets: tuple[float, float, float]
    clean_mean: tuple[float, float, float]
    clean_std: tuple[float, float, float]
    kin_min: tuple[float, float, float]
    kin_max: tuple[float, float, float]


def _f32(x: np.ndarray) -> np.ndarray:
    return x.astype("<f4").astype(np.float64)


def _channel_names(n: int) -> tuple[str, ...]:
    if n <= len(DEFAULT_CHANNELS):
        return DEFAULT_CHANNELS[:n]
    extra = tuple(f"X{i:02d}" for i in range(n - len(DEFAULT_CHANNELS)))
    return DEFAULT_CHANNELS + extra


def _place_trials(
    rng: np.random.Generator, n_samples: int, n_trials: int, history: int, rate_hz: float
) -> tuple[TrialMarker, ...]:
    # Leave room for any lag window up to 350 ms, not just the generative
    # one, so experiments may probe longer lags than the ground truth uses.
    start = max(history, round(0.35 * rate_hz)) + 5
    segment = (n_samples - start - 2) // n_trials
    if segment < 10:
        raise ArgumentError(
            f"{n_samples} samples cannot hold {n_trials} trials with "
            f"{history} samples of history"
        )
    jitter = min(10, segment // 4)
    trials = []
    for i in range(n_trials):
        base = start + i * segment
        onset = base + int(rng.integers(0, jitter + 1))
        end = base + segment - 1 - int(rng.integers(0, jitter + 1))
        trials.append(TrialMarker(onset, end))
    return tuple(trials)


def generate_synthetic_subject(config: SynthConfig) -> tuple[SubjectRecording, GroundTruth]:
    if config.n_channels < 1 or config.n_trials < 1 or config.n_samples < 100:
        raise ArgumentError(f"degenerate synthetic config {config}")
    if config.mapping not in ("linear", "nonlinear"):
        raise ArgumentError(f"unknown mapping {config.mapping!r}")
    if config.noise_std < 0:
        raise ArgumentError("noise_std must be non-negative")
    rng = np.random.default_rng(config.seed)

    # Band-limited noise: white Gaussian through a causal lowpass at 0.2*rate,
    # then standardized per channel.
    raw = rng.standard_normal((config.n_channels, config.n_samples))
    kernel = signal.design_fir(
        "lowpass", 0.0, 0.2 * config.rate_hz, config.rate_hz, 101
    )
    eeg = np.stack([np.convolve(row, kernel.taps)[: config.n_samples] for row in raw])
    eeg = (eeg - eeg.mean(axis=1, keepdims=True)) / eeg.std(axis=1, ddof=1, keepdims=True)
    eeg = _f32(eeg)

    lag = LagWindowSpec(_GROUND_TRUTH_LAG_MS, 0.0, config.rate_hz)
    lags = lag.lags()
    n_lags = lag.n_lags
    weights = rng.normal(
        0.0, (config.n_channels * n_lags) ** -0.5, (3, config.n_channels, n_lags)
    )

    clean = np.zeros((3, config.n_samples))
    for d in range(3):
        for n in range(config.n_channels):
            for li, l in enumerate(lags):
                clean[d, l:] += weights[d, n, li] * eeg[n, : config.n_samples - l]
    clean_mean = clean.mean(axis=1)
    clean_std = clean.std(axis=1, ddof=1)
    clean = (clean - clean_mean[:, None]) / clean_std[:, None]

    # Per-direction squash: increasingly saturated and off-center so the z
    # direction is clearly beyond any linear fit while x stays nearly linear.
    if config.mapping == "nonlinear":
        gains = (1.0, 2.0, 4.0)
        offsets = (0.0, 0.5, 1.0)
        kin = np.tanh(np.asarray(gains)[:, None] * (clean - np.asarray(offsets)[:, None]))
    else:
        gains = (1.0, 1.0, 1.0)
        offsets = (0.0, 0.0, 0.0)
        kin = clean
    if config.noise_std > 0:
        kin = kin + rng.normal(0.0, config.noise_std, kin.shape)

    kin_min = kin.min(axis=1)
    kin_max = kin.max(axis=1)
    kin = (kin - kin_min[:, None]) / (kin_max - kin_min)[:, None]
    kin = _f32(kin)

    trials = _place_trials(
        rng, config.n_samples, config.n_trials, lag.far_samples, config.rate_hz
    )
    recording = SubjectRecording(
        subject_id=config.subject_id,
        channel_names=_channel_names(config.n_channels),
        eeg=eeg,
        kinematics=kin,
        rate_hz=config.rate_hz,
        trials=trials,
    )
    truth = GroundTruth(
        weights=weights,
        lag=lag,
        mapping=config.mapping,
        gains=gains,
        offsets=offsets,
        clean_mean=tuple(clean_mean),
        clean_std=tuple(clean_std),
        kin_min=tuple(kin_min),
        kin_max=tuple(kin_max),
    )
    return recording, truth
