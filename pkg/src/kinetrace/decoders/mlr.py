"""Closed-form multivariable linear regression decoder.

Hand position in each direction is an intercept plus a weighted sum of
all lagged, standardized EEG samples. The least-squares solution is
computed by an orthogonal decomposition (``lstsq``), not by forming the
normal equations, so it stays stable for the ~735-column feature
matrices the largest lag windows produce.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError

_RIDGE_LAMBDA = 1e-8


@dataclass(frozen=True)
class MlrModel:
    alpha: np.ndarray   # (3,) intercepts
    beta: np.ndarray    # (3, features)
    rank_deficient: bool = False

    @property
    def n_features(self) -> int:
        return self.beta.shape[1]


class RankDeficiencyWarning(UserWarning):
    pass


def fit_mlr(features: np.ndarray, targets: np.ndarray) -> MlrModel:
    """Least-squares fit of intercept + coefficients per output direction.

    A feature matrix without full column rank triggers a ridge fallback
    (lambda 1e-8) and sets the model's ``rank_deficient`` flag.
    """
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if features.ndim != 2 or targets.ndim != 2:
        raise ShapeError("features and targets must be 2-D")
    if features.shape[0] != targets.shape[0]:
        raise ShapeError(
            f"{features.shape[0]} feature rows vs {targets.shape[0]} target rows"
        )
    rows, cols = features.shape
    design = np.hstack([np.ones((rows, 1)), features])
    theta, _, rank, _ = np.linalg.lstsq(design, targets, rcond=None)
    rank_deficient = rank < cols + 1 or rows < cols + 1
    if rank_deficient:
        warnings.warn(
            f"feature matrix rank {rank} < {cols + 1}; refitting with ridge "
            f"lambda {_RIDGE_LAMBDA}",
            RankDeficiencyWarning,
        )
        gram = design.T @ design + _RIDGE_LAMBDA * np.eye(cols + 1)
        theta = np.linalg.solve(gram, design.T @ targets)
    return MlrModel(
        alpha=theta[0].copy(), beta=theta[1:].T.copy(), rank_deficient=rank_deficient
    )


def predict_mlr(model: MlrModel, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.n_features:
        raise ShapeError(
            f"expected (D, {model.n_features}) features, got {features.shape}"
        )
    return model.alpha + features @ model.beta.T
