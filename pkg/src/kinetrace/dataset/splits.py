"""Train/validation/test splitting: subject-dependent and leave-one-subject-out.

The reference protocol splits 294 trials into 234/30/30. Other trial
counts scale proportionally (round to nearest, at least one trial each
for validation and test), so desk-scale synthetic subjects split the
same way.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import ArgumentError

_REFERENCE_TRIALS = 294
_REFERENCE_HOLDOUT = 30


def _holdout_size(n_trials: int) -> int:
    return max(1, round(n_trials * _REFERENCE_HOLDOUT / _REFERENCE_TRIALS))


@dataclass(frozen=True)
class SplitPlan:
    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]
    seed: int

    def __post_init__(self):
        groups = (set(self.train), set(self.val), set(self.test))
        total = len(self.train) + len(self.val) + len(self.test)
        if len(groups[0] | groups[1] | groups[2]) != total:
            raise ArgumentError("split groups must be pairwise disjoint")


def split_subject_dependent(trial_count: int, seed: int) -> SplitPlan:
    """Seeded shuffle into train/val/test (234/30/30 at 294 trials)."""
    if trial_count < 3:
        raise ArgumentError(f"cannot split {trial_count} trials three ways")
    holdout = _holdout_size(trial_count)
    perm = np.random.default_rng(seed).permutation(trial_count)
    val = perm[:holdout]
    test = perm[holdout : 2 * holdout]
    train = perm[2 * holdout :]
    return SplitPlan(
        train=tuple(sorted(int(i) for i in train)),
        val=tuple(sorted(int(i) for i in val)),
        test=tuple(sorted(int(i) for i in test)),
        seed=seed,
    )


@dataclass(frozen=True)
class LosoPlan:
    """One leave-one-subject-out fold.

    The held-out subject contributes every trial to test; each training
    subject is split into train and validation trials (264/30 at 294).
    """

    test_subject: str
    train_subjects: tuple[str, ...]
    train_trials: Mapping[str, tuple[int, ...]]
    val_trials: Mapping[str, tuple[int, ...]]
    seed: int


def split_loso(
    subject_ids: Sequence[str],
    held_out_id: str,
    trial_counts: Mapping[str, int] | int = _REFERENCE_TRIALS,
    seed: int = 0,
) -> LosoPlan:
    if held_out_id not in subject_ids:
        raise ArgumentError(f"unknown held-out subject {held_out_id!r}")
    if len(set(subject_ids)) != len(subject_ids):
        raise ArgumentError("subject ids must be unique")
    if len(subject_ids) < 2:
        raise ArgumentError("LOSO needs at least 2 subjects")

    def count_for(subject: str) -> int:
        if isinstance(trial_counts, int):
            return trial_counts
        return trial_counts[subject]

    train_subjects = tuple(s for s in subject_ids if s != held_out_id)
    train_trials: dict[str, tuple[int, ...]] = {}
    val_trials: dict[str, tuple[int, ...]] = {}
    for subject in train_subjects:
        n = count_for(subject)
        if n < 2:
            raise ArgumentError(f"subject {subject} has too few trials ({n})")
        holdout = _holdout_size(n)
        # Per-subject stream keyed on (seed, subject) so fold plans do not
        # depend on subject order.
        rng = np.random.default_rng(
            [seed, int.from_bytes(subject.encode(), "little") % (2**32)]
        )
        perm = rng.permutation(n)
        val_trials[subject] = tuple(sorted(int(i) for i in perm[:holdout]))
        train_trials[subject] = tuple(sorted(int(i) for i in perm[holdout:]))
    return LosoPlan(
        test_subject=held_out_id,
        train_subjects=train_subjects,
        train_trials=train_trials,
        val_trials=val_trials,
        seed=seed,
    )
