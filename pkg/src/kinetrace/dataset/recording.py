"""Subject recordings and their on-disk interchange format.

One directory per subject:

* ``manifest.json`` -- subject id, rate, channel names, sample count,
  trial markers, blob dtype and SHA-256 checksums.
* ``eeg.f32`` -- row-major channels x samples, little-endian float32.
* ``kin.f32`` -- row-major 3 x samples, little-endian float32.

Loading always validates: checksums, blob sizes against the manifest,
and every recording invariant. Arrays are float64 in memory but carry
float32-representable values, so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ChannelError, FormatError, IoError, ValidationError

# The 21 motor-cortex and occipital channels used for decoding.
DEFAULT_CHANNELS: tuple[str, ...] = (
    "F3", "Fz", "F4", "FC5", "FC1", "FC2", "FC6", "C3", "Cz", "C4",
    "CP5", "CP1", "CP2", "CP6", "P7", "P3", "Pz", "P4", "O1", "Oz", "O2",
)

_MANIFEST_KEYS = {
    "subject_id", "rate_hz", "channel_names", "n_samples", "trials",
    "dtype", "checksums", "band_id",
}


@dataclass(frozen=True)
class TrialMarker:
    """One trial: movement onset through hand back at rest (inclusive indices)."""

    onset_sample: int
    end_sample: int

    def __post_init__(self):
        if not 0 <= self.onset_sample < self.end_sample:
            raise ValidationError(
                f"trial marker must satisfy 0 <= onset < end, got "
                f"({self.onset_sample}, {self.end_sample})"
            )

    @property
    def n_samples(self) -> int:
        return self.end_sample - self.onset_sample + 1


@dataclass(frozen=True)
class SubjectRecording:
    subject_id: str
    channel_names: tuple[str, ...]
    eeg: np.ndarray          # channels x samples
    kinematics: np.ndarray   # 3 x samples (x, y, z)
    rate_hz: float
    trials: tuple[TrialMarker, ...]
    band_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        object.__setattr__(self, "trials", tuple(self.trials))
        object.__setattr__(self, "eeg", np.asarray(self.eeg, dtype=np.float64))
        object.__setattr__(self, "kinematics", np.asarray(self.kinematics, dtype=np.float64))
        _validate_recording(self)

    @property
    def n_channels(self) -> int:
        return self.eeg.shape[0]

    @property
    def n_samples(self) -> int:
        return self.eeg.shape[1]


def _validate_recording(rec: SubjectRecording) -> None:
    if rec.eeg.ndim != 2:
        raise ValidationError("eeg must be a channels x samples matrix")
    if rec.kinematics.ndim != 2 or rec.kinematics.shape[0] != 3:
        raise ValidationError("kinematics must be a 3 x samples matrix")
    if rec.eeg.shape[1] != rec.kinematics.shape[1]:
        raise ValidationError(
            f"eeg has {rec.eeg.shape[1]} samples but kinematics has "
            f"{rec.kinematics.shape[1]}"
        )
    if len(rec.channel_names) != rec.eeg.shape[0]:
        raise ValidationError(
            f"{len(rec.channel_names)} channel names for {rec.eeg.shape[0]} EEG rows"
        )
    if len(set(rec.channel_names)) != len(rec.channel_names):
        raise ValidationError("channel names must be unique")
    if not rec.rate_hz > 0:
        raise ValidationError("rate_hz must be positive")
    prev_end = -1
    for i, t in enumerate(rec.trials):
        if t.onset_sample <= prev_end:
            raise ValidationError(f"trial {i} overlaps or is out of order")
        if t.end_sample >= rec.n_samples:
            raise ValidationError(
                f"trial {i} ends at {t.end_sample}, beyond {rec.n_samples} samples"
            )
        prev_end = t.end_sample


def _sha256(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()


def save_subject(recording: SubjectRecording, path: str | Path) -> None:
    """Write the interchange directory; deterministic byte-for-byte."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    eeg_blob = recording.eeg.astype("<f4").tobytes()
    kin_blob = recording.kinematics.astype("<f4").tobytes()
    (path / "eeg.f32").write_bytes(eeg_blob)
    (path / "kin.f32").write_bytes(kin_blob)
    manifest = {
        "subject_id": recording.subject_id,
        "rate_hz": recording.rate_hz,
        "channel_names": list(recording.channel_names),
        "n_samples": recording.n_samples,
        "trials": [
            {"onset_sample": t.onset_sample, "end_sample": t.end_sample}
            for t in recording.trials
        ],
        "dtype": "f32le",
        "checksums": {"eeg.f32": _sha256(eeg_blob), "kin.f32": _sha256(kin_blob)},
        "band_id": recording.band_id,
    }
    (path / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


def _read_blob(path: Path, name: str, expected_sha: str, expected_len: int) -> bytes:
    blob_path = path / name
    if not blob_path.is_file():
        raise IoError(f"missing blob {blob_path}")
    blob = blob_path.read_bytes()
    if len(blob) != expected_len:
        raise FormatError(
            f"{name}: expected {expected_len} bytes per manifest, found {len(blob)}"
        )
    if _sha256(blob) != expected_sha:
        raise FormatError(f"{name}: checksum mismatch")
    return blob


def load_subject(path: str | Path) -> SubjectRecording:
    """Load and fully validate one interchange directory."""
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.is_file():
        raise IoError(f"missing manifest {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(manifest, dict) or set(manifest) != _MANIFEST_KEYS:
        raise FormatError(
            f"manifest keys {sorted(manifest)} do not match {sorted(_MANIFEST_KEYS)}"
        )
    if manifest["dtype"] != "f32le":
        raise FormatError(f"unsupported dtype {manifest['dtype']!r}")

    n_samples = int(manifest["n_samples"])
    names = manifest["channel_names"]
    n_channels = len(names)
    checksums = manifest["checksums"]
    if set(checksums) != {"eeg.f32", "kin.f32"}:
        raise FormatError("checksums must cover exactly eeg.f32 and kin.f32")

    eeg_blob = _read_blob(path, "eeg.f32", checksums["eeg.f32"], 4 * n_channels * n_samples)
    kin_blob = _read_blob(path, "kin.f32", checksums["kin.f32"], 4 * 3 * n_samples)
    eeg = np.frombuffer(eeg_blob, dtype="<f4").reshape(n_channels, n_samples)
    kin = np.frombuffer(kin_blob, dtype="<f4").reshape(3, n_samples)

    trials = tuple(
        TrialMarker(int(t["onset_sample"]), int(t["end_sample"]))
        for t in manifest["trials"]
    )
    return SubjectRecording(
        subject_id=manifest["subject_id"],
        channel_names=tuple(names),
        eeg=eeg.astype(np.float64),
        kinematics=kin.astype(np.float64),
        rate_hz=float(manifest["rate_hz"]),
        trials=trials,
        band_id=manifest["band_id"],
    )


def select_channels(
    recording: SubjectRecording, names: Sequence[str] = DEFAULT_CHANNELS
) -> SubjectRecording:
    """Reorder (and subset) EEG rows to the requested channel order."""
    index = {name: i for i, name in enumerate(recording.channel_names)}
    missing = [n for n in names if n not in index]
    if missing:
        raise ChannelError(f"channels not in recording: {missing}")
    rows = [index[n] for n in names]
    return dataclasses.replace(
        recording, eeg=recording.eeg[rows], channel_names=tuple(names)
    )
