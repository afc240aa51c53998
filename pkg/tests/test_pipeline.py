import numpy as np
import pytest

from kinetrace import pipeline
from kinetrace.dataset import SynthConfig, generate_synthetic_subject
from kinetrace.decoders import TrainConfig
from kinetrace.errors import ArgumentError, ValidationError
from kinetrace.evaluation import evaluate


def subjects(n=3, **kwargs):
    out = []
    for i in range(n):
        cfg = SynthConfig(
            n_channels=4, n_trials=6, n_samples=1500, seed=100 + i,
            subject_id=f"S{i:02d}", **kwargs,
        )
        out.append(generate_synthetic_subject(cfg)[0])
    return out


def test_normalization_fits_on_training_trials_only():
    rec = subjects(1)[0]
    train_trials = rec.trials[:4]
    norm = pipeline.fit_normalization([rec], [train_trials])
    idx = np.concatenate([np.arange(t.onset_sample, t.end_sample + 1) for t in train_trials])
    assert np.allclose(norm.eeg_mean, rec.eeg[:, idx].mean(axis=1))
    assert np.allclose(norm.eeg_std, rec.eeg[:, idx].std(axis=1, ddof=1))
    assert np.allclose(norm.kin_min, rec.kinematics[:, idx].min(axis=1))
    normalized = pipeline.apply_normalization(rec, norm)
    assert np.allclose(normalized.eeg[:, idx].mean(axis=1), 0.0, atol=1e-12)
    assert np.allclose(normalized.eeg[:, idx].std(axis=1, ddof=1), 1.0, atol=1e-12)


def test_normalization_round_trips_json():
    rec = subjects(1)[0]
    norm = pipeline.fit_normalization([rec], [rec.trials[:3]])
    again = pipeline.NormalizationParams.from_json(norm.to_json())
    assert np.array_equal(again.eeg_mean, norm.eeg_mean)
    assert np.array_equal(again.kin_max, norm.kin_max)


def test_prepare_subject_dependent_shapes():
    rec = subjects(1)[0]
    data = pipeline.prepare_subject_dependent(
        rec, 150.0, 50.0, pipeline.PreprocessConfig(), split_seed=4
    )
    n_features = data.spec.n_lags * rec.n_channels
    assert data.train[0].shape[1] == n_features
    assert data.train[0].shape[0] == data.train[1].shape[0]
    assert data.val[0].shape[0] > 0 and len(data.test_trials) > 0
    total = data.train[0].shape[0] + data.val[0].shape[0] + sum(
        t.n_samples for t in data.test_trials
    )
    assert total == sum(t.n_samples for t in rec.trials)


def test_prepare_is_deterministic():
    rec = subjects(1)[0]
    a = pipeline.prepare_subject_dependent(rec, 150.0, 0.0, pipeline.PreprocessConfig(), 9)
    b = pipeline.prepare_subject_dependent(rec, 150.0, 0.0, pipeline.PreprocessConfig(), 9)
    assert np.array_equal(a.train[0], b.train[0])
    assert a.plan == b.plan


def test_prepare_loso_partitions():
    recs = subjects(3)
    data = pipeline.prepare_loso(
        recs, "S01", 150.0, 0.0, pipeline.PreprocessConfig(), split_seed=2
    )
    assert data.test_recording.subject_id == "S01"
    assert data.plan.test_subject == "S01"
    assert set(data.plan.train_subjects) == {"S00", "S02"}
    # test partition is every trial of the held-out subject
    assert data.test_trials == data.test_recording.trials
    # train/val rows come only from the other subjects
    per_subject_rows = {
        s: sum(recs[i].trials[j].n_samples
               for j in data.plan.train_trials[s])
        for i, s in enumerate(("S00", "S01", "S02")) if s != "S01"
    }
    assert data.train[0].shape[0] == sum(per_subject_rows.values())


def test_prepare_loso_rejects_mixed_rates():
    recs = subjects(2)
    other = generate_synthetic_subject(
        SynthConfig(n_channels=4, n_trials=6, n_samples=1500, rate_hz=200.0,
                    seed=7, subject_id="SX")
    )[0]
    with pytest.raises(ValidationError):
        pipeline.prepare_loso(recs + [other], "SX", 150.0, 0.0,
                              pipeline.PreprocessConfig(), 0)


def test_band_filter_in_pipeline_records_band():
    rec = subjects(1)[0]
    out = pipeline.preprocess_recording(
        rec, pipeline.PreprocessConfig(band="FB2", num_taps=101)
    )
    assert out.band_id == "FB2"
    assert not np.array_equal(out.eeg, rec.eeg)


def test_rereference_in_pipeline():
    rec = subjects(1)[0]
    out = pipeline.preprocess_recording(rec, pipeline.PreprocessConfig(rereference=True))
    assert np.max(np.abs(out.eeg.mean(axis=0))) < 1e-10


def test_fit_decoder_dispatch_and_evaluate():
    rec = subjects(1)[0]
    data = pipeline.prepare_subject_dependent(
        rec, 150.0, 0.0, pipeline.PreprocessConfig(), split_seed=4
    )
    model, report = pipeline.fit_decoder("mlr", data, TrainConfig(seed=0))
    assert report is None
    scored = evaluate(model, data.test_recording, data.test_trials, data.spec)
    # noiseless linear subject: held-out correlation is essentially 1
    assert min(scored.values) > 0.99
    with pytest.raises(ArgumentError):
        pipeline.fit_decoder("kalman", data, TrainConfig(seed=0))


def test_fit_decoder_neural_smoke():
    rec = subjects(1)[0]
    data = pipeline.prepare_subject_dependent(
        rec, 150.0, 50.0, pipeline.PreprocessConfig(), split_seed=4
    )
    config = TrainConfig(max_epochs=2, batch_size=32, seed=1)
    model, report = pipeline.fit_decoder("cnnlstm", data, config)
    assert report.stopped_epoch <= 2
    pred = pipeline.predict_decoder(model, data.val[0])
    assert pred.shape == (data.val[0].shape[0], 3)
    assert np.all(np.isfinite(pred))
