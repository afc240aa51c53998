"""Lag-window feature assembly.

Each kinematic sample at index ``t`` is predicted from the EEG samples
``t - far .. t - near`` of every channel, where ``far`` and ``near`` are
the lag window bounds in samples. Rows are kinematic samples, columns
are channel-major (all lags of channel 1, then channel 2, ...), with
lags ordered oldest first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError, HistoryError
from .recording import SubjectRecording, TrialMarker


@dataclass(frozen=True)
class LagWindowSpec:
    """Pre-movement lag window in milliseconds, sample-aligned.

    ``lag_near_ms = 0`` means "up to, but not including, the predicted
    sample": the nearest lag is clamped to one sample so features stay
    strictly in the past. A single-lag setting of e.g. 250 ms therefore
    spans lags 10..250 ms at 100 Hz, 25 samples per channel.
    """

    lag_far_ms: float
    lag_near_ms: float
    rate_hz: float

    def __post_init__(self):
        if not self.lag_far_ms > self.lag_near_ms >= 0:
            raise ArgumentError(
                f"need lag_far_ms > lag_near_ms >= 0, got "
                f"({self.lag_far_ms}, {self.lag_near_ms})"
            )
        if not self.rate_hz > 0:
            raise ArgumentError("rate_hz must be positive")
        for ms in (self.lag_far_ms, self.lag_near_ms):
            exact = ms * self.rate_hz / 1000.0
            if abs(exact - round(exact)) > 1e-9:
                raise ArgumentError(
                    f"lag {ms} ms is not sample-aligned at {self.rate_hz} Hz; "
                    "lags are not interpolated"
                )

    @property
    def window_ms(self) -> float:
        return self.lag_far_ms - self.lag_near_ms

    @property
    def far_samples(self) -> int:
        return round(self.lag_far_ms * self.rate_hz / 1000.0)

    @property
    def near_samples(self) -> int:
        return max(1, round(self.lag_near_ms * self.rate_hz / 1000.0))

    @property
    def n_lags(self) -> int:
        n = self.far_samples - self.near_samples + 1
        if n < 1:
            raise ArgumentError(f"lag window {self} spans no samples")
        return n

    def lags(self) -> np.ndarray:
        """Sample lags, farthest (oldest) first."""
        return np.arange(self.far_samples, self.near_samples - 1, -1)


def build_lag_features(
    recording: SubjectRecording, trial: TrialMarker, spec: LagWindowSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Assemble the (D x L*N) feature and (D x 3) target matrices for one trial."""
    far = spec.far_samples
    if trial.onset_sample < far:
        raise HistoryError(
            f"trial onset {trial.onset_sample} has less than {far} samples of history"
        )
    t = np.arange(trial.onset_sample, trial.end_sample + 1)
    idx = t[:, None] - spec.lags()[None, :]          # D x L
    n_channels = recording.n_channels
    L = spec.n_lags
    features = np.empty((t.size, n_channels * L), dtype=np.float64)
    for n in range(n_channels):
        features[:, n * L : (n + 1) * L] = recording.eeg[n][idx]
    targets = recording.kinematics[:, t].T.copy()
    return features, targets
