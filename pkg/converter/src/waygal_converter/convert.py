"""Convert MATLAB grasp-and-lift recordings to interchange directories.

The converter is a pure file translator: EEG values pass through
unmodified apart from channel selection and optional integer-factor
decimation (allowed only when the caller asserts the source is already
band-limited; spectral filtering, re-referencing and normalization are
the decoding toolkit's job so the numeric pipeline lives in one place).
Artifact denoising (ICA) is likewise not reimplemented: point ``--src``
at externally denoised exports to ingest them.

Variable names, the hand-position columns, and the event fields that
define movement onset / hand-at-rest are configuration, not guesses:
dataset releases differ, so the mapping travels with the conversion.
Dotted names (``ws.data.eeg``) descend into MATLAB structs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.io import loadmat

PAPER_CHANNELS: tuple[str, ...] = (
    "F3", "Fz", "F4", "FC5", "FC1", "FC2", "FC6", "C3", "Cz", "C4",
    "CP5", "CP1", "CP2", "CP6", "P7", "P3", "Pz", "P4", "O1", "Oz", "O2",
)


class ConversionError(Exception):
    pass


@dataclass(frozen=True)
class ConvertOptions:
    subject_id: str
    source_rate_hz: float
    target_rate_hz: float | None = 100.0
    channels: tuple[str, ...] = PAPER_CHANNELS
    eeg_var: str = "eeg"
    eeg_names_var: str = "eeg_names"
    kin_var: str = "kin"
    kin_names_var: str = "kin_names"
    kin_channels: tuple[str, str, str] = ("Px", "Py", "Pz")
    onset_var: str = "trial_onsets"
    end_var: str = "trial_ends"
    event_unit: str = "samples"          # or "seconds"
    prefiltered: bool = False
    expected_trials: int | None = None   # 294 for the full corpus

    def __post_init__(self):
        if self.event_unit not in ("samples", "seconds"):
            raise ConversionError(f"event_unit must be samples|seconds, got {self.event_unit!r}")
        if self.source_rate_hz <= 0:
            raise ConversionError("source_rate_hz must be positive")
        if len(self.kin_channels) != 3:
            raise ConversionError("kin_channels must name exactly the x, y, z position columns")


@dataclass(frozen=True)
class ConversionManifest:
    subject_id: str
    source_files: tuple[str, ...]
    channels: tuple[str, ...]
    source_rate_hz: float
    target_rate_hz: float
    n_samples: int
    trial_count: int
    checksums: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "source_files": list(self.source_files),
            "channels": list(self.channels),
            "source_rate_hz": self.source_rate_hz,
            "target_rate_hz": self.target_rate_hz,
            "n_samples": self.n_samples,
            "trial_count": self.trial_count,
            "checksums": dict(self.checksums),
        }


# ------------------------------------------------------------- MAT plumbing

def _resolve(mat: dict, dotted: str, path: Path):
    parts = dotted.split(".")
    if parts[0] not in mat:
        raise ConversionError(f"{path.name}: variable {parts[0]!r} not found")
    value = mat[parts[0]]
    for part in parts[1:]:
        try:
            value = value[0, 0][part]
        except (IndexError, KeyError, ValueError) as exc:
            raise ConversionError(f"{path.name}: no field {part!r} under {dotted!r}") from exc
    return value


def _string_list(raw) -> list[str]:
    """Channel-name extraction for char matrices and cell arrays."""
    arr = np.asarray(raw)
    if arr.dtype.kind in ("U", "S"):
        if arr.ndim <= 1:
            return [str(arr.item()).strip()] if arr.size == 1 else [str(s).strip() for s in arr]
        return [str(row).strip() for row in arr]
    out = []
    for item in arr.ravel():
        if isinstance(item, np.ndarray):
            out.append(str(item.item()).strip() if item.size == 1 else str(item).strip())
        else:
            out.append(str(item).strip())
    return out


def _as_matrix(raw, what: str, path: Path) -> np.ndarray:
    arr = np.asarray(raw, dtype=np.float64)
    arr = np.squeeze(arr)
    if arr.ndim != 2:
        raise ConversionError(f"{path.name}: {what} must be a 2-D matrix, got shape {arr.shape}")
    return arr


def _oriented(matrix: np.ndarray, names: list[str], what: str, path: Path) -> np.ndarray:
    """Return rows-are-channels orientation using the name count."""
    if matrix.shape[0] == len(names):
        return matrix
    if matrix.shape[1] == len(names):
        return matrix.T
    raise ConversionError(
        f"{path.name}: {what} shape {matrix.shape} does not match {len(names)} names"
    )


def _as_vector(raw, what: str, path: Path) -> np.ndarray:
    arr = np.squeeze(np.asarray(raw, dtype=np.float64))
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ConversionError(f"{path.name}: {what} must be a vector, got shape {arr.shape}")
    return arr


@dataclass
class _Block:
    eeg: np.ndarray
    kin: np.ndarray
    onsets: np.ndarray
    ends: np.ndarray
    eeg_names: list[str]


def _load_block(path: Path, options: ConvertOptions) -> _Block:
    if not path.is_file():
        raise ConversionError(f"source file {path} not readable")
    mat = loadmat(path)

    eeg_names = _string_list(_resolve(mat, options.eeg_names_var, path))
    eeg = _oriented(_as_matrix(_resolve(mat, options.eeg_var, path), "EEG", path),
                    eeg_names, "EEG", path)
    kin_names = _string_list(_resolve(mat, options.kin_names_var, path))
    kin = _oriented(_as_matrix(_resolve(mat, options.kin_var, path), "kinematics", path),
                    kin_names, "kinematics", path)

    missing = [c for c in options.kin_channels if c not in kin_names]
    if missing:
        raise ConversionError(f"{path.name}: kinematic channels missing: {missing}")
    kin = kin[[kin_names.index(c) for c in options.kin_channels]]

    onsets = _as_vector(_resolve(mat, options.onset_var, path), "trial onsets", path)
    ends = _as_vector(_resolve(mat, options.end_var, path), "trial ends", path)
    if onsets.size != ends.size:
        raise ConversionError(
            f"{path.name}: {onsets.size} onsets but {ends.size} ends"
        )
    if options.event_unit == "seconds":
        onsets = np.round(onsets * options.source_rate_hz)
        ends = np.round(ends * options.source_rate_hz)
    if eeg.shape[1] != kin.shape[1]:
        raise ConversionError(
            f"{path.name}: EEG has {eeg.shape[1]} samples, kinematics {kin.shape[1]}"
        )
    return _Block(eeg, kin, onsets.astype(np.int64), ends.astype(np.int64), eeg_names)


def _decimation_factor(options: ConvertOptions) -> int:
    if options.target_rate_hz is None:
        return 1
    factor = options.source_rate_hz / options.target_rate_hz
    if abs(factor - round(factor)) > 1e-9 or factor < 1:
        raise ConversionError(
            f"source rate {options.source_rate_hz} Hz is not an integer multiple "
            f"of target {options.target_rate_hz} Hz"
        )
    factor = int(round(factor))
    if factor > 1 and not options.prefiltered:
        raise ConversionError(
            "decimation requires a band-limited source (pass prefiltered=true); "
            "otherwise convert at the source rate and let the decoding toolkit "
            "filter, then decimate"
        )
    return factor


def _sha256(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()


# ------------------------------------------------------------------- convert

def convert_subject(
    src_paths: Sequence[str | Path],
    out_dir: str | Path,
    options: ConvertOptions,
) -> ConversionManifest:
    """Emit one interchange directory; returns the conversion manifest.

    Multiple source files are concatenated in the order given (one
    recording session per file); their trial events are offset by the
    accumulated sample count.
    """
    if not src_paths:
        raise ConversionError("no source files given")
    blocks = [_load_block(Path(p), options) for p in src_paths]
    names = blocks[0].eeg_names
    for block, path in zip(blocks[1:], src_paths[1:]):
        if block.eeg_names != names:
            raise ConversionError(f"{Path(path).name}: channel names differ from first file")

    missing = [c for c in options.channels if c not in names]
    if missing:
        raise ConversionError(f"EEG channels missing from source: {missing}")
    rows = [names.index(c) for c in options.channels]

    eeg_parts, kin_parts, onsets, ends = [], [], [], []
    offset = 0
    for block in blocks:
        eeg_parts.append(block.eeg[rows])
        kin_parts.append(block.kin)
        onsets.append(block.onsets + offset)
        ends.append(block.ends + offset)
        offset += block.eeg.shape[1]
    eeg = np.concatenate(eeg_parts, axis=1)
    kin = np.concatenate(kin_parts, axis=1)
    onset_arr = np.concatenate(onsets)
    end_arr = np.concatenate(ends)

    factor = _decimation_factor(options)
    target_rate = options.source_rate_hz / factor
    if factor > 1:
        eeg = eeg[:, ::factor]
        kin = kin[:, ::factor]
        # first kept sample at/after onset; last kept sample at/before end
        onset_arr = -(-onset_arr // factor)
        end_arr = end_arr // factor

    n_samples = eeg.shape[1]
    trials = []
    for i, (onset, end) in enumerate(zip(onset_arr, end_arr)):
        if not 0 <= onset < end < n_samples:
            raise ConversionError(
                f"trial {i} marker ({onset}, {end}) out of bounds for {n_samples} samples"
            )
        trials.append((int(onset), int(end)))
    if any(trials[i][1] >= trials[i + 1][0] for i in range(len(trials) - 1)):
        raise ConversionError("trial markers overlap or are out of order")
    if options.expected_trials is not None and len(trials) != options.expected_trials:
        raise ConversionError(
            f"expected {options.expected_trials} trials, found {len(trials)}"
        )

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    eeg_blob = eeg.astype("<f4").tobytes()
    kin_blob = kin.astype("<f4").tobytes()
    (out / "eeg.f32").write_bytes(eeg_blob)
    (out / "kin.f32").write_bytes(kin_blob)
    checksums = {"eeg.f32": _sha256(eeg_blob), "kin.f32": _sha256(kin_blob)}
    interchange = {
        "subject_id": options.subject_id,
        "rate_hz": target_rate,
        "channel_names": list(options.channels),
        "n_samples": n_samples,
        "trials": [{"onset_sample": a, "end_sample": b} for a, b in trials],
        "dtype": "f32le",
        "checksums": checksums,
        "band_id": None,
    }
    (out / "manifest.json").write_text(json.dumps(interchange, indent=2, sort_keys=True) + "\n")

    manifest = ConversionManifest(
        subject_id=options.subject_id,
        source_files=tuple(Path(p).name for p in src_paths),
        channels=tuple(options.channels),
        source_rate_hz=options.source_rate_hz,
        target_rate_hz=target_rate,
        n_samples=n_samples,
        trial_count=len(trials),
        checksums=checksums,
    )
    (out / "conversion.json").write_text(
        json.dumps(manifest.to_json(), indent=2, sort_keys=True) + "\n"
    )
    return manifest


# -------------------------------------------------------------------- verify

def verify_output(out_dir: str | Path) -> dict:
    """Re-check an emitted directory; mirrors the decoder's validate rules."""
    out = Path(out_dir)
    problems: list[str] = []
    report = {"ok": False, "problems": problems}
    manifest_path = out / "manifest.json"
    if not manifest_path.is_file():
        problems.append("manifest.json missing")
        return report
    manifest = json.loads(manifest_path.read_text())
    n_samples = int(manifest["n_samples"])
    n_channels = len(manifest["channel_names"])
    expected = {"eeg.f32": 4 * n_channels * n_samples, "kin.f32": 4 * 3 * n_samples}
    for name, size in expected.items():
        blob_path = out / name
        if not blob_path.is_file():
            problems.append(f"{name} missing")
            continue
        blob = blob_path.read_bytes()
        if len(blob) != size:
            problems.append(f"{name}: {len(blob)} bytes, expected {size}")
        if _sha256(blob) != manifest["checksums"][name]:
            problems.append(f"{name}: checksum mismatch")
    previous_end = -1
    for i, t in enumerate(manifest["trials"]):
        onset, end = int(t["onset_sample"]), int(t["end_sample"])
        if not 0 <= onset < end < n_samples:
            problems.append(f"trial {i}: marker ({onset}, {end}) out of bounds")
        if onset <= previous_end:
            problems.append(f"trial {i}: overlaps previous trial")
        previous_end = end
    if float(manifest["rate_hz"]) <= 0:
        problems.append("rate_hz must be positive")
    report["ok"] = not problems
    report["subject_id"] = manifest["subject_id"]
    report["n_samples"] = n_samples
    report["trial_count"] = len(manifest["trials"])
    return report
