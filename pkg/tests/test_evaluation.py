import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinetrace import evaluation
from kinetrace.dataset import build_lag_features
from kinetrace.decoders import MlrModel, fit_mlr, predict_mlr
from kinetrace.errors import DegenerateSeriesError, EmptyReportError, ShapeError
from kinetrace.evaluation import (
    SweepCell,
    build_sweep_report,
    evaluate,
    export_trajectory,
    pcc,
    pcc_report,
    sweep_report_csv,
)
from kinetrace.signal import MinMaxParams


# ----------------------------------------------------------------------- pcc

def test_pcc_identity_negation_symmetry():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(200)
    y = rng.standard_normal(200)
    assert pcc(x, x) == pytest.approx(1.0, abs=1e-12)
    assert pcc(x, -x) == pytest.approx(-1.0, abs=1e-12)
    assert pcc(x, y) == pytest.approx(pcc(y, x), abs=1e-12)


def test_pcc_affine_invariance():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(150)
    y = rng.standard_normal(150)
    base = pcc(x, y)
    assert pcc(3.0 * x + 2.0, 0.5 * y - 7.0) == pytest.approx(base, abs=1e-10)
    assert pcc(-3.0 * x + 2.0, 0.5 * y - 7.0) == pytest.approx(-base, abs=1e-10)


def test_pcc_two_samples_is_extremal():
    assert abs(pcc(np.array([0.0, 1.0]), np.array([5.0, 2.0]))) == 1.0
    assert pcc(np.array([0.0, 1.0]), np.array([2.0, 5.0])) == 1.0


def test_pcc_matches_direct_formula_transcription():
    # Independent transcription: (1/(T-1)) * sum of products of z-scores
    # with (T-1)-denominator standard deviations.
    rng = np.random.default_rng(2)
    x = rng.standard_normal(97) * 3.1 + 0.4
    y = 0.6 * x + rng.standard_normal(97)
    t = len(x)
    mx, my = sum(x) / t, sum(y) / t
    sx = math.sqrt(sum((v - mx) ** 2 for v in x) / (t - 1))
    sy = math.sqrt(sum((v - my) ** 2 for v in y) / (t - 1))
    expected = sum(((a - mx) / sx) * ((b - my) / sy) for a, b in zip(x, y)) / (t - 1)
    assert pcc(x, y) == pytest.approx(expected, abs=1e-12)


def test_pcc_errors():
    with pytest.raises(DegenerateSeriesError):
        pcc(np.ones(10), np.arange(10.0))
    with pytest.raises(ShapeError):
        pcc(np.arange(5.0), np.arange(6.0))
    with pytest.raises(ShapeError):
        pcc(np.array([1.0]), np.array([2.0]))


@given(
    scale=st.floats(0.01, 100.0),
    shift=st.floats(-50.0, 50.0),
    seed=st.integers(0, 2**16),
)
@settings(max_examples=30, deadline=None)
def test_pcc_translation_and_scale_invariant(scale, shift, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(40)
    y = rng.standard_normal(40)
    assert pcc(scale * x + shift, y) == pytest.approx(pcc(x, y), abs=1e-10)


def test_pcc_clamped_against_rounding():
    x = np.arange(50.0)
    assert -1.0 <= pcc(x, 2.0 * x + 1.0) <= 1.0


# ------------------------------------------------------------------ evaluate

def test_evaluate_perfect_model_on_noiseless_subject(linear_subject):
    rec, truth = linear_subject
    xs, ys = [], []
    for t in rec.trials[:-1]:
        x, y = build_lag_features(rec, t, truth.lag)
        xs.append(x)
        ys.append(y)
    model = fit_mlr(np.vstack(xs), np.vstack(ys))
    report = evaluate(model, rec, rec.trials[-1:], truth.lag)
    for d, value in enumerate(report.values):
        assert value >= 1.0 - 1e-6
        assert not report.degenerate[d]


def test_evaluate_constant_model_is_flagged_undefined(linear_subject):
    rec, truth = linear_subject
    n_features = truth.lag.n_lags * rec.n_channels
    constant = MlrModel(alpha=np.ones(3), beta=np.zeros((3, n_features)))
    report = evaluate(constant, rec, rec.trials[-2:], truth.lag)
    assert report.degenerate == (True, True, True)
    assert all(math.isnan(v) for v in report.values)


def test_evaluate_matches_hand_rolled_concatenation(linear_subject):
    rec, truth = linear_subject
    x0, y0 = build_lag_features(rec, rec.trials[0], truth.lag)
    model = fit_mlr(x0, y0)
    trials = rec.trials[1:3]
    report = evaluate(model, rec, trials, truth.lag)
    measured, predicted = [], []
    for t in trials:
        x, y = build_lag_features(rec, t, truth.lag)
        measured.append(y)
        predicted.append(predict_mlr(model, x))
    measured = np.vstack(measured)
    predicted = np.vstack(predicted)
    for d in range(3):
        assert report.values[d] == pytest.approx(
            pcc(measured[:, d], predicted[:, d]), abs=1e-10
        )
    assert report.n_samples == measured.shape[0]


def test_evaluate_per_trial_scope(linear_subject):
    rec, truth = linear_subject
    x0, y0 = build_lag_features(rec, rec.trials[0], truth.lag)
    model = fit_mlr(x0, y0)
    report = evaluate(model, rec, rec.trials[1:4], truth.lag, per_trial=True)
    per_trial = [evaluate(model, rec, [t], truth.lag) for t in rec.trials[1:4]]
    for d in range(3):
        assert report.values[d] == pytest.approx(
            np.mean([r.values[d] for r in per_trial]), abs=1e-12
        )


def test_evaluate_no_trials():
    with pytest.raises(EmptyReportError):
        evaluate(None, None, [], None)


def test_pcc_report_shape_check():
    with pytest.raises(ShapeError):
        pcc_report(np.zeros((5, 2)), np.zeros((5, 2)))


# ------------------------------------------------------------------- reports

def cell(subject="S01", direction="x", value=0.5, band="FB1"):
    return SweepCell(
        band=band, window_ms=240.0, lag_far_ms=250.0, lag_near_ms=0.0,
        decoder="mlr", subject=subject, direction=direction, pcc=value,
        n_samples=100,
    )


def test_single_cell_mean_is_that_cell():
    report = build_sweep_report([cell(value=0.371)])
    assert len(report.means) == 1
    assert report.means[0].pcc == pytest.approx(0.371)
    assert report.means[0].subject == "MEAN"


def test_mean_over_subjects_matches_arithmetic_mean():
    values = [0.1 * i for i in range(12)]
    cells = [cell(subject=f"S{i:02d}", value=v) for i, v in enumerate(values)]
    report = build_sweep_report(cells)
    assert len(report.means) == 1
    assert report.means[0].pcc == pytest.approx(np.mean(values), abs=1e-12)


def test_means_are_permutation_invariant():
    cells = [cell(subject=f"S{i}", value=0.05 * i) for i in range(9)]
    a = build_sweep_report(cells)
    b = build_sweep_report(list(reversed(cells)))
    assert a == b


def test_empty_report_rejected():
    with pytest.raises(EmptyReportError):
        build_sweep_report([])


def test_degenerate_cells_poison_their_mean_visibly():
    cells = [cell(subject="A", value=0.5),
             SweepCell(band="FB1", window_ms=240.0, lag_far_ms=250.0,
                       lag_near_ms=0.0, decoder="mlr", subject="B",
                       direction="x", pcc=math.nan, n_samples=10, degenerate=True)]
    report = build_sweep_report(cells)
    assert report.means[0].degenerate
    assert math.isnan(report.means[0].pcc)
    csv = sweep_report_csv(report)
    assert "NA" in csv


def test_csv_layout():
    report = build_sweep_report([cell(value=0.123456789)])
    csv = sweep_report_csv(report)
    lines = csv.strip().split("\n")
    assert lines[0] == ("band,window_ms,lag_far_ms,lag_near_ms,decoder,subject,"
                        "direction,pcc,n_samples,degenerate,scope")
    assert len(lines) == 3   # one cell + one mean
    fields = lines[1].split(",")
    assert fields[0] == "FB1" and fields[5] == "S01"
    assert fields[7] == "0.123457"   # six significant digits


# ------------------------------------------------------------------- export

def test_export_trajectory_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    measured = rng.random((40, 3))
    predicted = rng.random((40, 3))
    params = [MinMaxParams(-0.2, 0.4), MinMaxParams(0.0, 1.0), MinMaxParams(2.0, 3.5)]
    out = tmp_path / "traj.csv"
    export_trajectory(measured, predicted, 100.0, params, out)
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "time_s,meas_x,meas_y,meas_z,pred_x,pred_y,pred_z"
    assert len(lines) == 41
    parsed = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    assert np.allclose(parsed[:, 0], np.arange(40) / 100.0, atol=1e-9)
    for d, p in enumerate(params):
        expected = measured[:, d] * (p.max - p.min) + p.min
        assert np.allclose(parsed[:, 1 + d], expected, atol=1e-5)   # 6 sig digits


def test_export_trajectory_inverse_normalization_by_hand(tmp_path):
    measured = np.array([[0.0, 0.5, 1.0]]).T @ np.ones((1, 3))
    params = [MinMaxParams(10.0, 20.0)] * 3
    out = tmp_path / "t.csv"
    export_trajectory(measured, measured, 100.0, params, out)
    rows = [line.split(",") for line in out.read_text().strip().split("\n")[1:]]
    assert [float(r[1]) for r in rows] == [10.0, 15.0, 20.0]


def test_export_trajectory_shape_check(tmp_path):
    with pytest.raises(ShapeError):
        export_trajectory(np.zeros((5, 3)), np.zeros((4, 3)), 100.0,
                          [MinMaxParams(0, 1)] * 3, tmp_path / "x.csv")
