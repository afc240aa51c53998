"""Pearson-correlation metric and result reporting.

The correlation uses (T-1)-denominator sample statistics:
``pcc = (1/(T-1)) * sum(z(x_i) * z(y_i))``, clamped to [-1, 1] against
rounding. Decoders are scored per direction over the concatenated test
trials (a per-trial-mean variant is available and labeled in the CSV);
a collapsed (constant) prediction is reported as a flagged undefined
value rather than masked as zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import LagWindowSpec, SubjectRecording, TrialMarker, build_lag_features
from .decoders import MlrModel, predict, predict_mlr
from .errors import DegenerateSeriesError, EmptyReportError, ShapeError
from .signal import MinMaxParams, minmax_denormalize

_STD_FLOOR = 1e-12
DIRECTIONS = ("x", "y", "z")


def pcc(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeError(f"series shapes differ: {x.shape} vs {y.shape}")
    n = x.size
    if n < 2:
        raise ShapeError("correlation needs at least 2 samples")
    sx = x.std(ddof=1)
    sy = y.std(ddof=1)
    if sx <= _STD_FLOOR or sy <= _STD_FLOOR:
        raise DegenerateSeriesError("correlation against a constant series is undefined")
    zx = (x - x.mean()) / sx
    zy = (y - y.mean()) / sy
    value = float(np.dot(zx, zy) / (n - 1))
    return max(-1.0, min(1.0, value))


@dataclass(frozen=True)
class PccReport:
    """Per-direction correlations; NaN plus a flag where undefined."""

    values: tuple[float, float, float]
    degenerate: tuple[bool, bool, bool]
    n_samples: int

    def __getitem__(self, direction: str) -> float:
        return self.values[DIRECTIONS.index(direction)]


def pcc_report(measured: np.ndarray, predicted: np.ndarray) -> PccReport:
    """Correlate (T, 3) measured against predicted, direction by direction."""
    if measured.shape != predicted.shape or measured.ndim != 2 or measured.shape[1] != 3:
        raise ShapeError(f"need matching (T, 3) arrays, got {measured.shape} and {predicted.shape}")
    values = []
    flags = []
    for d in range(3):
        try:
            values.append(pcc(measured[:, d], predicted[:, d]))
            flags.append(False)
        except DegenerateSeriesError:
            values.append(math.nan)
            flags.append(True)
    return PccReport(tuple(values), tuple(flags), measured.shape[0])


def _predict_any(model, features: np.ndarray) -> np.ndarray:
    if isinstance(model, MlrModel):
        return predict_mlr(model, features)
    return predict(model, features)


def evaluate(
    model,
    recording: SubjectRecording,
    trials: Sequence[TrialMarker],
    spec: LagWindowSpec,
    per_trial: bool = False,
) -> PccReport:
    """Score a decoder on test trials of an already-preprocessed recording.

    Default scope concatenates all test-trial samples per direction; with
    ``per_trial`` the PCC is computed per trial and averaged.
    """
    if not trials:
        raise EmptyReportError("no test trials")
    measured = []
    predicted = []
    for trial in trials:
        features, targets = build_lag_features(recording, trial, spec)
        measured.append(targets)
        predicted.append(_predict_any(model, features))
    if not per_trial:
        return pcc_report(np.vstack(measured), np.vstack(predicted))
    reports = [pcc_report(m, p) for m, p in zip(measured, predicted)]
    values = []
    flags = []
    for d in range(3):
        cells = [r.values[d] for r in reports]
        flag = any(r.degenerate[d] for r in reports)
        values.append(math.nan if flag else float(np.mean(cells)))
        flags.append(flag)
    return PccReport(tuple(values), tuple(flags), sum(r.n_samples for r in reports))


@dataclass(frozen=True)
class SweepCell:
    band: str
    window_ms: float
    lag_far_ms: float
    lag_near_ms: float
    decoder: str
    subject: str
    direction: str
    pcc: float
    n_samples: int
    degenerate: bool = False
    scope: str = "concat"   # or "per_trial_mean"

    def key(self):
        return (self.band, self.window_ms, self.lag_far_ms, self.lag_near_ms,
                self.decoder, self.subject, self.direction, self.scope)


@dataclass(frozen=True)
class SweepReport:
    cells: tuple[SweepCell, ...]
    means: tuple[SweepCell, ...] = field(default_factory=tuple)


_CSV_HEADER = ("band,window_ms,lag_far_ms,lag_near_ms,decoder,subject,"
               "direction,pcc,n_samples,degenerate,scope")


def _fmt(v: float) -> str:
    return "NA" if math.isnan(v) else f"{v:.6g}"


def build_sweep_report(results: Iterable[SweepCell]) -> SweepReport:
    """Aggregate cells and add per-configuration mean rows (subject MEAN)."""
    cells = tuple(sorted(results, key=SweepCell.key))
    if not cells:
        raise EmptyReportError("sweep produced no cells")
    groups: dict[tuple, list[SweepCell]] = {}
    for cell in cells:
        group_key = (cell.band, cell.window_ms, cell.lag_far_ms, cell.lag_near_ms,
                     cell.decoder, cell.direction, cell.scope)
        groups.setdefault(group_key, []).append(cell)
    means = []
    for (band, window, far, near, decoder, direction, scope), members in sorted(groups.items()):
        degenerate = any(m.degenerate for m in members)
        value = math.nan if degenerate else float(np.mean([m.pcc for m in members]))
        means.append(SweepCell(
            band=band, window_ms=window, lag_far_ms=far, lag_near_ms=near,
            decoder=decoder, subject="MEAN", direction=direction,
            pcc=value, n_samples=sum(m.n_samples for m in members),
            degenerate=degenerate, scope=scope,
        ))
    return SweepReport(cells=cells, means=tuple(means))


def sweep_report_csv(report: SweepReport) -> str:
    lines = [_CSV_HEADER]
    for cell in report.cells + report.means:
        lines.append(",".join([
            cell.band, _fmt(cell.window_ms), _fmt(cell.lag_far_ms),
            _fmt(cell.lag_near_ms), cell.decoder, cell.subject, cell.direction,
            _fmt(cell.pcc), str(cell.n_samples), str(int(cell.degenerate)), cell.scope,
        ]))
    return "\n".join(lines) + "\n"


def export_trajectory(
    measured: np.ndarray,
    predicted: np.ndarray,
    rate_hz: float,
    kin_params: Sequence[MinMaxParams],
    path: str | Path,
) -> None:
    """Write a plot-ready CSV of measured and predicted positions.

    Inputs are normalized (T, 3) arrays; columns are emitted in original
    units by inverting the per-direction min-max parameters.
    """
    measured = np.asarray(measured, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if measured.shape != predicted.shape or measured.ndim != 2 or measured.shape[1] != 3:
        raise ShapeError(f"need matching (T, 3) arrays, got {measured.shape} and {predicted.shape}")
    if len(kin_params) != 3:
        raise ShapeError("need one MinMaxParams per direction")
    meas = np.column_stack([
        minmax_denormalize(measured[:, d], kin_params[d]) for d in range(3)
    ])
    pred = np.column_stack([
        minmax_denormalize(predicted[:, d], kin_params[d]) for d in range(3)
    ])
    lines = ["time_s,meas_x,meas_y,meas_z,pred_x,pred_y,pred_z"]
    for i in range(meas.shape[0]):
        t = i / rate_hz
        row = [f"{t:.6g}"] + [f"{v:.6g}" for v in meas[i]] + [f"{v:.6g}" for v in pred[i]]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")
