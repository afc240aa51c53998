"""End-to-end preparation: preprocessing, leakage-free normalization,
feature assembly and decoder construction for one experiment cell.

Order of operations per recording: average re-reference (optional),
channel selection, spectral band filter (optional, causal -- the group
delay is NOT compensated, see the kernel's ``group_delay_samples``),
kinematics low-pass (optional), then normalization. Z-score parameters
per channel and kinematic min-max parameters are fitted on training
trials only (pooled over training subjects for LOSO) and reused
everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import signal
from .dataset import (
    LagWindowSpec,
    LosoPlan,
    SplitPlan,
    SubjectRecording,
    TrialMarker,
    build_lag_features,
    select_channels,
    split_loso,
    split_subject_dependent,
)
from .decoders import (
    MlrModel,
    TrainConfig,
    build_cnn_lstm,
    build_mlp,
    fit_mlr,
    predict,
    predict_mlr,
    train,
)
from .errors import ArgumentError, ValidationError

DECODERS = ("mlr", "mlp", "cnnlstm")


@dataclass(frozen=True)
class PreprocessConfig:
    band: str | None = None
    num_taps: int | None = None
    rereference: bool = False
    channels: tuple[str, ...] | None = None
    kin_lowpass_hz: float | None = None


@dataclass
class NormalizationParams:
    """Fitted on training data; stored in model headers for inference."""

    eeg_mean: np.ndarray   # per channel
    eeg_std: np.ndarray
    kin_min: np.ndarray    # per direction
    kin_max: np.ndarray

    def to_json(self) -> dict:
        return {
            "eeg_mean": self.eeg_mean.tolist(),
            "eeg_std": self.eeg_std.tolist(),
            "kin_min": self.kin_min.tolist(),
            "kin_max": self.kin_max.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "NormalizationParams":
        return cls(*(np.asarray(data[k], dtype=np.float64)
                     for k in ("eeg_mean", "eeg_std", "kin_min", "kin_max")))

    def kin_minmax(self) -> list[signal.MinMaxParams]:
        return [signal.MinMaxParams(float(lo), float(hi))
                for lo, hi in zip(self.kin_min, self.kin_max)]


def preprocess_recording(rec: SubjectRecording, cfg: PreprocessConfig) -> SubjectRecording:
    """Filtering stages only; normalization needs a training partition."""
    if cfg.rereference:
        channels = [signal.ChannelSeries(row, rec.rate_hz) for row in rec.eeg]
        rows = np.stack([c.samples for c in signal.average_rereference(channels)])
        rec = SubjectRecording(
            subject_id=rec.subject_id, channel_names=rec.channel_names, eeg=rows,
            kinematics=rec.kinematics, rate_hz=rec.rate_hz, trials=rec.trials,
            band_id=rec.band_id,
        )
    if cfg.channels is not None:
        rec = select_channels(rec, cfg.channels)
    if cfg.band is not None:
        if cfg.band not in signal.BANDS:
            raise ArgumentError(f"unknown band {cfg.band!r}")
        rec = signal.band_filter(rec, signal.BANDS[cfg.band], cfg.num_taps)
    if cfg.kin_lowpass_hz is not None:
        kernel = signal.design_fir(
            "lowpass", 0.0, cfg.kin_lowpass_hz, rec.rate_hz,
            signal.default_num_taps(rec.rate_hz),
        )
        kin = np.stack([
            signal.apply_fir(signal.ChannelSeries(row, rec.rate_hz), kernel).samples
            for row in rec.kinematics
        ])
        rec = SubjectRecording(
            subject_id=rec.subject_id, channel_names=rec.channel_names, eeg=rec.eeg,
            kinematics=kin, rate_hz=rec.rate_hz, trials=rec.trials, band_id=rec.band_id,
        )
    return rec


def _trial_sample_index(trials: Sequence[TrialMarker]) -> np.ndarray:
    return np.concatenate([np.arange(t.onset_sample, t.end_sample + 1) for t in trials])


def fit_normalization(
    recordings: Sequence[SubjectRecording],
    train_trials: Sequence[Sequence[TrialMarker]],
    std_floor: float = 1e-12,
) -> NormalizationParams:
    """Channel z-score and kinematic min-max statistics from training trials."""
    eeg_chunks = []
    kin_chunks = []
    for rec, trials in zip(recordings, train_trials):
        idx = _trial_sample_index(trials)
        eeg_chunks.append(rec.eeg[:, idx])
        kin_chunks.append(rec.kinematics[:, idx])
    eeg = np.concatenate(eeg_chunks, axis=1)
    kin = np.concatenate(kin_chunks, axis=1)
    std = eeg.std(axis=1, ddof=1)
    if np.any(std <= std_floor):
        bad = int(np.argmax(std <= std_floor))
        raise ValidationError(f"channel {bad} is constant over the training trials")
    kin_min = kin.min(axis=1)
    kin_max = kin.max(axis=1)
    if np.any(kin_max - kin_min <= std_floor):
        raise ValidationError("a kinematic direction is constant over the training trials")
    return NormalizationParams(
        eeg_mean=eeg.mean(axis=1), eeg_std=std, kin_min=kin_min, kin_max=kin_max,
    )


def apply_normalization(rec: SubjectRecording, params: NormalizationParams) -> SubjectRecording:
    eeg = (rec.eeg - params.eeg_mean[:, None]) / params.eeg_std[:, None]
    kin = (rec.kinematics - params.kin_min[:, None]) / (
        params.kin_max - params.kin_min
    )[:, None]
    return SubjectRecording(
        subject_id=rec.subject_id, channel_names=rec.channel_names, eeg=eeg,
        kinematics=kin, rate_hz=rec.rate_hz, trials=rec.trials, band_id=rec.band_id,
    )


def stack_trials(rec: SubjectRecording, trials: Sequence[TrialMarker], spec: LagWindowSpec):
    xs, ys = [], []
    for t in trials:
        x, y = build_lag_features(rec, t, spec)
        xs.append(x)
        ys.append(y)
    return np.vstack(xs), np.vstack(ys)


@dataclass
class PreparedData:
    """Everything one training/evaluation cell needs."""

    train: tuple[np.ndarray, np.ndarray]
    val: tuple[np.ndarray, np.ndarray]
    test_recording: SubjectRecording          # preprocessed + normalized
    test_trials: tuple[TrialMarker, ...]
    spec: LagWindowSpec
    normalization: NormalizationParams
    n_channels: int
    plan: SplitPlan | LosoPlan | None = None


def prepare_subject_dependent(
    rec: SubjectRecording,
    lag_far_ms: float,
    lag_near_ms: float,
    pre: PreprocessConfig,
    split_seed: int,
) -> PreparedData:
    rec = preprocess_recording(rec, pre)
    plan = split_subject_dependent(len(rec.trials), split_seed)
    train_trials = [rec.trials[i] for i in plan.train]
    val_trials = [rec.trials[i] for i in plan.val]
    test_trials = [rec.trials[i] for i in plan.test]
    norm = fit_normalization([rec], [train_trials])
    rec = apply_normalization(rec, norm)
    spec = LagWindowSpec(lag_far_ms, lag_near_ms, rec.rate_hz)
    return PreparedData(
        train=stack_trials(rec, train_trials, spec),
        val=stack_trials(rec, val_trials, spec),
        test_recording=rec,
        test_trials=tuple(test_trials),
        spec=spec,
        normalization=norm,
        n_channels=rec.n_channels,
        plan=plan,
    )


def prepare_loso(
    recordings: Sequence[SubjectRecording],
    held_out_id: str,
    lag_far_ms: float,
    lag_near_ms: float,
    pre: PreprocessConfig,
    split_seed: int,
) -> PreparedData:
    recs = {r.subject_id: preprocess_recording(r, pre) for r in recordings}
    rates = {r.rate_hz for r in recs.values()}
    if len(rates) != 1:
        raise ValidationError(f"subjects disagree on sampling rate: {sorted(rates)}")
    plan = split_loso(
        [r.subject_id for r in recordings], held_out_id,
        trial_counts={s: len(r.trials) for s, r in recs.items()},
        seed=split_seed,
    )
    norm = fit_normalization(
        [recs[s] for s in plan.train_subjects],
        [[recs[s].trials[i] for i in plan.train_trials[s]] for s in plan.train_subjects],
    )
    normalized = {s: apply_normalization(r, norm) for s, r in recs.items()}
    rate = next(iter(rates))
    spec = LagWindowSpec(lag_far_ms, lag_near_ms, rate)
    train_parts = [
        stack_trials(normalized[s], [normalized[s].trials[i] for i in plan.train_trials[s]], spec)
        for s in plan.train_subjects
    ]
    val_parts = [
        stack_trials(normalized[s], [normalized[s].trials[i] for i in plan.val_trials[s]], spec)
        for s in plan.train_subjects
    ]
    test_rec = normalized[held_out_id]
    return PreparedData(
        train=(np.vstack([p[0] for p in train_parts]), np.vstack([p[1] for p in train_parts])),
        val=(np.vstack([p[0] for p in val_parts]), np.vstack([p[1] for p in val_parts])),
        test_recording=test_rec,
        test_trials=test_rec.trials,
        spec=spec,
        normalization=norm,
        n_channels=test_rec.n_channels,
        plan=plan,
    )


def fit_decoder(kind: str, data: PreparedData, train_config: TrainConfig):
    """Fit/train one decoder; returns (model, TrainReport | None)."""
    if kind == "mlr":
        return fit_mlr(*data.train), None
    if kind == "mlp":
        model = build_mlp(data.train[0].shape[1], seed=train_config.seed)
    elif kind == "cnnlstm":
        model = build_cnn_lstm(data.spec.n_lags, data.n_channels, seed=train_config.seed)
    else:
        raise ArgumentError(f"unknown decoder {kind!r}; expected one of {DECODERS}")
    model, report = train(model, data.train, data.val, train_config)
    return model, report


def predict_decoder(model, features: np.ndarray) -> np.ndarray:
    if isinstance(model, MlrModel):
        return predict_mlr(model, features)
    return predict(model, features)
