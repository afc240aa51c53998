"""Digital signal processing primitives for EEG and kinematics.

FIR design/application, average re-referencing, decimation and the two
normalizations used by the decoding pipeline. All filters are causal
single-pass convolutions: the pre-movement guarantee forbids looking at
future samples, so no forward-backward (zero-phase) filtering is offered.
The price is a group delay of ``(num_taps - 1) / 2`` samples, exposed on
the kernel so callers can account for it.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import (
    ArgumentError,
    DegenerateChannelError,
    DesignError,
    LengthError,
    ShapeError,
)

__all__ = [
    "ChannelSeries",
    "ZScoreParams",
    "MinMaxParams",
    "FirDesign",
    "FirKernel",
    "FrequencyBand",
    "BANDS",
    "design_fir",
    "default_num_taps",
    "apply_fir",
    "average_rereference",
    "downsample",
    "zscore",
    "minmax_normalize",
    "minmax_denormalize",
    "band_filter",
]

_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class ChannelSeries:
    """A single uniformly sampled channel (EEG in microvolts, kinematics in meters)."""

    samples: np.ndarray
    rate_hz: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ArgumentError("ChannelSeries.samples must be a non-empty 1-D array")
        if not self.rate_hz > 0:
            raise ArgumentError(f"rate_hz must be positive, got {self.rate_hz}")

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class ZScoreParams:
    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise DegenerateChannelError(f"std must be positive, got {self.std}")


@dataclass(frozen=True)
class MinMaxParams:
    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise DegenerateChannelError(
                f"max ({self.max}) must exceed min ({self.min})"
            )


@dataclass(frozen=True)
class FirDesign:
    kind: Literal["lowpass", "bandpass"]
    low_hz: float
    high_hz: float
    rate_hz: float
    num_taps: int


@dataclass(frozen=True)
class FirKernel:
    """Linear-phase (Type I) FIR kernel with its design record."""

    taps: np.ndarray
    design: FirDesign

    def __post_init__(self):
        object.__setattr__(self, "taps", np.asarray(self.taps, dtype=np.float64))

    @property
    def group_delay_samples(self) -> int:
        return (self.design.num_taps - 1) // 2

    def gain_at(self, f_hz: float) -> float:
        """Magnitude of the kernel's frequency response at ``f_hz``."""
        n = np.arange(self.taps.size)
        return float(
            abs(np.sum(self.taps * np.exp(-2j * np.pi * f_hz * n / self.design.rate_hz)))
        )


@dataclass(frozen=True)
class FrequencyBand:
    id: str
    low_hz: float
    high_hz: float


# The seven filter-bank settings: delta through low gamma and their unions.
BANDS: dict[str, FrequencyBand] = {
    "FB1": FrequencyBand("FB1", 0.5, 3.0),
    "FB2": FrequencyBand("FB2", 4.0, 8.0),
    "FB3": FrequencyBand("FB3", 9.0, 12.0),
    "FB4": FrequencyBand("FB4", 13.0, 30.0),
    "FB5": FrequencyBand("FB5", 30.0, 50.0),
    "FB6": FrequencyBand("FB6", 0.5, 8.0),
    "FB7": FrequencyBand("FB7", 0.5, 12.0),
}


def default_num_taps(rate_hz: float, transition_hz: float = 1.0, cap: int = 1001) -> int:
    """Tap count from the Hamming design rule ``N >= 3.3 * rate / transition``.

    Returns the next odd integer, capped (kernels beyond ~1001 taps buy
    little and slow every trial filter).
    """
    if transition_hz <= 0:
        raise ArgumentError("transition_hz must be positive")
    n = int(np.ceil(3.3 * rate_hz / transition_hz))
    if n % 2 == 0:
        n += 1
    return min(max(n, 11), cap)


def _windowed_sinc(cutoff_hz: float, rate_hz: float, num_taps: int) -> np.ndarray:
    # Ideal lowpass impulse response truncated under a Hamming window.
    m = (num_taps - 1) / 2.0
    k = np.arange(num_taps) - m
    fc = cutoff_hz / rate_hz
    h = 2.0 * fc * np.sinc(2.0 * fc * k)
    return h * np.hamming(num_taps)


def design_fir(
    kind: Literal["lowpass", "bandpass"],
    low_hz: float,
    high_hz: float,
    rate_hz: float,
    num_taps: int,
) -> FirKernel:
    """Design a Hamming-windowed FIR kernel.

    ``lowpass`` ignores ``low_hz`` and is scaled to unit DC gain.
    ``bandpass`` is the difference of two windowed sincs, scaled to unit
    gain at the arithmetic band center. ``num_taps`` must be odd so the
    kernel is symmetric (linear phase).
    """
    if num_taps % 2 == 0 or num_taps < 11:
        raise DesignError(f"num_taps must be odd and >= 11, got {num_taps}")
    nyquist = rate_hz / 2.0
    if kind == "lowpass":
        if not 0 < high_hz < nyquist:
            raise DesignError(
                f"lowpass cutoff must satisfy 0 < {high_hz} < {nyquist}"
            )
        taps = _windowed_sinc(high_hz, rate_hz, num_taps)
        taps = taps / taps.sum()
    elif kind == "bandpass":
        if not 0 < low_hz < high_hz < nyquist:
            raise DesignError(
                f"bandpass edges must satisfy 0 < {low_hz} < {high_hz} < {nyquist}"
            )
        taps = _windowed_sinc(high_hz, rate_hz, num_taps) - _windowed_sinc(
            low_hz, rate_hz, num_taps
        )
        center = (low_hz + high_hz) / 2.0
        m = (num_taps - 1) / 2.0
        k = np.arange(num_taps) - m
        amplitude = float(np.sum(taps * np.cos(2.0 * np.pi * center * k / rate_hz)))
        taps = taps / amplitude
    else:
        raise DesignError(f"unknown kind {kind!r}")
    return FirKernel(taps, FirDesign(kind, low_hz, high_hz, rate_hz, num_taps))


def apply_fir(x: ChannelSeries, kernel: FirKernel) -> ChannelSeries:
    """Causal convolution with a zero-padded left edge.

    ``y[t] = sum_k h[k] * x[t - k]``; output length equals input length,
    so the first ``group_delay_samples`` outputs are edge transient.
    """
    if len(x) < kernel.taps.size:
        raise LengthError(
            f"series of {len(x)} samples is shorter than the {kernel.taps.size}-tap kernel"
        )
    y = np.convolve(x.samples, kernel.taps)[: len(x)]
    return ChannelSeries(y, x.rate_hz)


def _apply_fir_matrix(eeg: np.ndarray, kernel: FirKernel) -> np.ndarray:
    if eeg.shape[1] < kernel.taps.size:
        raise LengthError(
            f"{eeg.shape[1]} samples is shorter than the {kernel.taps.size}-tap kernel"
        )
    out = np.empty_like(eeg, dtype=np.float64)
    for i in range(eeg.shape[0]):
        out[i] = np.convolve(eeg[i], kernel.taps)[: eeg.shape[1]]
    return out


def average_rereference(channels: Sequence[ChannelSeries]) -> list[ChannelSeries]:
    """Subtract the per-sample mean across channels from every channel."""
    if len(channels) < 2:
        raise ShapeError("average re-referencing needs at least 2 channels")
    lengths = {len(c) for c in channels}
    rates = {c.rate_hz for c in channels}
    if len(lengths) != 1 or len(rates) != 1:
        raise ShapeError("channels must share length and rate")
    stack = np.stack([c.samples for c in channels])
    stack = stack - stack.mean(axis=0, keepdims=True)
    rate = channels[0].rate_hz
    return [ChannelSeries(row, rate) for row in stack]


def downsample(x: ChannelSeries, factor: int) -> ChannelSeries:
    """Keep every ``factor``-th sample. The caller must have band-limited
    the series below the new Nyquist frequency first."""
    if factor < 1:
        raise ArgumentError(f"factor must be >= 1, got {factor}")
    return ChannelSeries(x.samples[::factor], x.rate_hz / factor)


def zscore(x: ChannelSeries) -> tuple[ChannelSeries, ZScoreParams]:
    """Standardize to zero mean and unit sample ((T-1)-denominator) std."""
    if len(x) < 2:
        raise LengthError("z-score needs at least 2 samples")
    mean = float(x.samples.mean())
    std = float(x.samples.std(ddof=1))
    if std <= _STD_FLOOR:
        raise DegenerateChannelError("constant channel cannot be standardized")
    params = ZScoreParams(mean, std)
    return ChannelSeries((x.samples - mean) / std, x.rate_hz), params


def minmax_normalize(
    x: ChannelSeries, params: MinMaxParams | None = None
) -> tuple[ChannelSeries, MinMaxParams]:
    """Map to ``(x - min) / (max - min)``.

    With ``params`` given (e.g. fitted on training trials) values may exit
    [0, 1]; no clipping is applied so the inverse transform stays exact.
    """
    if params is None:
        lo = float(x.samples.min())
        hi = float(x.samples.max())
        if hi - lo <= _STD_FLOOR:
            raise DegenerateChannelError("constant channel cannot be min-max scaled")
        params = MinMaxParams(lo, hi)
    out = (x.samples - params.min) / (params.max - params.min)
    return ChannelSeries(out, x.rate_hz), params


def minmax_denormalize(x: np.ndarray, params: MinMaxParams) -> np.ndarray:
    """Inverse of :func:`minmax_normalize` on a plain array."""
    return np.asarray(x, dtype=np.float64) * (params.max - params.min) + params.min


def band_filter(recording, band: FrequencyBand, num_taps: int | None = None):
    """Band-pass every EEG channel of a recording; records the band id.

    Accepts any dataclass with ``eeg`` (channels x samples), ``rate_hz``
    and ``band_id`` fields and returns a copy with filtered EEG.
    """
    if num_taps is None:
        num_taps = default_num_taps(recording.rate_hz)
    kernel = design_fir("bandpass", band.low_hz, band.high_hz, recording.rate_hz, num_taps)
    filtered = _apply_fir_matrix(np.asarray(recording.eeg, dtype=np.float64), kernel)
    return dataclasses.replace(recording, eeg=filtered, band_id=band.id)
