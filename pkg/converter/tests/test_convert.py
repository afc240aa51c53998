import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.io import savemat

from waygal_converter import (
    ConversionError,
    ConvertOptions,
    convert_subject,
    verify_output,
)
from waygal_converter.cli import main
from waygal_converter.convert import PAPER_CHANNELS

RATE = 500.0


def fixture_arrays(n_samples=5000, seed=0, n_extra=1):
    rng = np.random.default_rng(seed)
    names = list(PAPER_CHANNELS) + [f"EXTRA{i}" for i in range(n_extra)]
    eeg = rng.standard_normal((len(names), n_samples))
    kin_names = ["Fx", "Px", "Py", "Pz", "LEDon"]
    kin = rng.standard_normal((len(kin_names), n_samples))
    onsets = np.array([500, 2000, 3500])
    ends = np.array([1400, 2900, 4400])
    return names, eeg, kin_names, kin, onsets, ends


def write_fixture(path, n_samples=5000, seed=0, transpose=False, nested=False):
    names, eeg, kin_names, kin, onsets, ends = fixture_arrays(n_samples, seed)
    payload = {
        "eeg": eeg.T if transpose else eeg,
        "eeg_names": np.array(names, dtype=object),
        "kin": kin,
        "kin_names": np.array(kin_names, dtype=object),
        "trial_onsets": onsets,
        "trial_ends": ends,
    }
    if nested:
        payload = {"ws": {"data": {k: v for k, v in payload.items()}}}
    savemat(path, payload)
    return names, eeg, kin_names, kin, onsets, ends


def options(**kwargs):
    defaults = dict(subject_id="P01", source_rate_hz=RATE, target_rate_hz=100.0,
                    prefiltered=True)
    defaults.update(kwargs)
    return ConvertOptions(**defaults)


@pytest.fixture()
def fixture_mat(tmp_path):
    path = tmp_path / "P01_session1.mat"
    arrays = write_fixture(path)
    return path, arrays


# ---------------------------------------------------------------- round trip

def test_round_trip_passes_primary_validate(fixture_mat, tmp_path):
    path, _ = fixture_mat
    out = tmp_path / "P01"
    manifest = convert_subject([path], out, options())
    assert manifest.trial_count == 3
    assert verify_output(out)["ok"]

    proc = subprocess.run(
        [sys.executable, "-m", "kinetrace.cli", "validate", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "OK" in proc.stdout


def test_rerun_is_byte_identical(fixture_mat, tmp_path):
    path, _ = fixture_mat
    a, b = tmp_path / "a", tmp_path / "b"
    convert_subject([path], a, options())
    convert_subject([path], b, options())
    for name in ("manifest.json", "eeg.f32", "kin.f32", "conversion.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_decimated_values_and_markers(fixture_mat, tmp_path):
    path, (names, eeg, kin_names, kin, onsets, ends) = fixture_mat
    out = tmp_path / "P01"
    convert_subject([path], out, options())
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["rate_hz"] == 100.0
    assert manifest["n_samples"] == 1000
    rows = [names.index(c) for c in PAPER_CHANNELS]
    expected = eeg[rows][:, ::5].astype("<f4")
    stored = np.frombuffer((out / "eeg.f32").read_bytes(), dtype="<f4").reshape(21, 1000)
    assert np.array_equal(stored, expected)
    pos = [kin_names.index(c) for c in ("Px", "Py", "Pz")]
    expected_kin = kin[pos][:, ::5].astype("<f4")
    stored_kin = np.frombuffer((out / "kin.f32").read_bytes(), dtype="<f4").reshape(3, 1000)
    assert np.array_equal(stored_kin, expected_kin)
    # onset rounds up to the next kept sample, end rounds down
    assert manifest["trials"][0] == {"onset_sample": 100, "end_sample": 280}


def test_channel_selection_row_count(fixture_mat, tmp_path):
    path, _ = fixture_mat
    out = tmp_path / "sel"
    manifest = convert_subject([path], out, options())
    assert len(manifest.channels) == 21
    blob = (out / "eeg.f32").read_bytes()
    assert len(blob) == 4 * 21 * manifest.n_samples


# -------------------------------------------------------------------- errors

def test_missing_channel_rejected(fixture_mat, tmp_path):
    path, _ = fixture_mat
    with pytest.raises(ConversionError, match="XX"):
        convert_subject([path], tmp_path / "x", options(channels=("Cz", "XX")))


def test_missing_kinematic_channel_rejected(fixture_mat, tmp_path):
    path, _ = fixture_mat
    with pytest.raises(ConversionError, match="Qz"):
        convert_subject([path], tmp_path / "x",
                        options(kin_channels=("Px", "Py", "Qz")))


def test_non_integer_factor_rejected(fixture_mat, tmp_path):
    path, _ = fixture_mat
    with pytest.raises(ConversionError, match="integer multiple"):
        convert_subject([path], tmp_path / "x", options(target_rate_hz=150.0))


def test_decimation_requires_prefiltered_assertion(fixture_mat, tmp_path):
    path, _ = fixture_mat
    with pytest.raises(ConversionError, match="band-limited"):
        convert_subject([path], tmp_path / "x", options(prefiltered=False))
    # keeping the source rate never needs the assertion
    manifest = convert_subject(
        [path], tmp_path / "keep", options(prefiltered=False, target_rate_hz=None)
    )
    assert manifest.target_rate_hz == RATE


def test_expected_trial_count_enforced(fixture_mat, tmp_path):
    path, _ = fixture_mat
    with pytest.raises(ConversionError, match="294"):
        convert_subject([path], tmp_path / "x", options(expected_trials=294))


def test_missing_variable_names_file(fixture_mat, tmp_path):
    path, _ = fixture_mat
    with pytest.raises(ConversionError, match="not found"):
        convert_subject([path], tmp_path / "x", options(eeg_var="nope"))
    with pytest.raises(ConversionError):
        convert_subject([tmp_path / "ghost.mat"], tmp_path / "x", options())


# ------------------------------------------------------------ format variants

def test_transposed_source_matrix(tmp_path):
    path = tmp_path / "t.mat"
    names, eeg, *_ = write_fixture(path, transpose=True)
    out = tmp_path / "out"
    convert_subject([path], out, options())
    rows = [names.index(c) for c in PAPER_CHANNELS]
    stored = np.frombuffer((out / "eeg.f32").read_bytes(), dtype="<f4").reshape(21, -1)
    assert np.array_equal(stored, eeg[rows][:, ::5].astype("<f4"))


def test_nested_struct_mapping(tmp_path):
    path = tmp_path / "n.mat"
    write_fixture(path, nested=True)
    out = tmp_path / "out"
    manifest = convert_subject([path], out, options(
        eeg_var="ws.data.eeg", eeg_names_var="ws.data.eeg_names",
        kin_var="ws.data.kin", kin_names_var="ws.data.kin_names",
        onset_var="ws.data.trial_onsets", end_var="ws.data.trial_ends",
    ))
    assert manifest.trial_count == 3
    assert verify_output(out)["ok"]


def test_events_in_seconds(tmp_path):
    path = tmp_path / "s.mat"
    names, eeg, kin_names, kin, onsets, ends = fixture_arrays()
    savemat(path, {
        "eeg": eeg, "eeg_names": np.array(names, dtype=object),
        "kin": kin, "kin_names": np.array(kin_names, dtype=object),
        "trial_onsets": onsets / RATE, "trial_ends": ends / RATE,
    })
    out = tmp_path / "out"
    convert_subject([path], out, options(event_unit="seconds"))
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["trials"][0] == {"onset_sample": 100, "end_sample": 280}


def test_multi_session_concatenation(tmp_path):
    p1, p2 = tmp_path / "s1.mat", tmp_path / "s2.mat"
    write_fixture(p1, seed=1)
    write_fixture(p2, seed=2)
    out = tmp_path / "out"
    manifest = convert_subject([p1, p2], out, options())
    assert manifest.n_samples == 2000       # 2 x 5000 / 5
    assert manifest.trial_count == 6
    trials = json.loads((out / "manifest.json").read_text())["trials"]
    # second session's first trial is offset by the first session's length
    assert trials[3]["onset_sample"] == 1000 + 100
    assert verify_output(out)["ok"]


# ----------------------------------------------------------------------- cli

def test_cli_end_to_end(fixture_mat, tmp_path):
    path, _ = fixture_mat
    out = tmp_path / "P01"
    code = main([
        "--src", str(path), "--out", str(out), "--subject-id", "P01",
        "--source-rate", "500", "--rate", "100", "--prefiltered",
    ])
    assert code == 0
    assert verify_output(out)["ok"]
    assert main(["--src", str(path), "--out", str(out), "--subject-id", "P01",
                 "--verify-only"]) == 0


def test_cli_error_paths(fixture_mat, tmp_path):
    path, _ = fixture_mat
    assert main(["--src", str(path), "--out", str(tmp_path / "x"),
                 "--subject-id", "P01", "--source-rate", "500",
                 "--rate", "100"]) == 2        # no --prefiltered
    mapping = tmp_path / "m.json"
    mapping.write_text(json.dumps({"no_such_option": 1}))
    assert main(["--src", str(path), "--out", str(tmp_path / "y"),
                 "--subject-id", "P01", "--source-rate", "500",
                 "--mapping", str(mapping)]) == 2


def test_verify_detects_corruption(fixture_mat, tmp_path):
    path, _ = fixture_mat
    out = tmp_path / "P01"
    convert_subject([path], out, options())
    blob = bytearray((out / "kin.f32").read_bytes())
    blob[7] ^= 0x10
    (out / "kin.f32").write_bytes(bytes(blob))
    report = verify_output(out)
    assert not report["ok"]
    assert any("checksum" in p for p in report["problems"])
