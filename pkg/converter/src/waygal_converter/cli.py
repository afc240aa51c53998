"""Command-line entry point: one subject per invocation."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .convert import ConversionError, ConvertOptions, convert_subject, verify_output


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waygal-convert",
        description="Convert MATLAB grasp-and-lift recordings to interchange directories.",
    )
    parser.add_argument("--src", nargs="+", required=True, help="source .mat files, in session order")
    parser.add_argument("--out", required=True, help="output interchange directory")
    parser.add_argument("--subject-id", required=True)
    parser.add_argument("--source-rate", type=float, help="source sampling rate in Hz")
    parser.add_argument("--rate", type=float, default=None,
                        help="target sampling rate in Hz (default: keep source rate)")
    parser.add_argument("--channels", help="comma-separated EEG channel names "
                        "(default: the 21 decoding channels)")
    parser.add_argument("--prefiltered", action="store_true",
                        help="assert the source is band-limited so decimation is safe")
    parser.add_argument("--expect-trials", type=int, default=None,
                        help="fail unless exactly this many trials are found (294 for the full corpus)")
    parser.add_argument("--mapping", help="JSON file overriding variable-name mapping "
                        "(eeg_var, kin_var, onset_var, end_var, ...)")
    parser.add_argument("--verify-only", action="store_true",
                        help="only re-verify an existing output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verify_only:
        report = verify_output(args.out)
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0 if report["ok"] else 2
    try:
        fields = {
            "subject_id": args.subject_id,
            "target_rate_hz": args.rate,
            "prefiltered": args.prefiltered,
            "expected_trials": args.expect_trials,
        }
        if args.source_rate is not None:
            fields["source_rate_hz"] = args.source_rate
        if args.channels:
            fields["channels"] = tuple(c.strip() for c in args.channels.split(","))
        if args.mapping:
            mapping_path = Path(args.mapping)
            if not mapping_path.is_file():
                print(f"error: mapping file {mapping_path} not found", file=sys.stderr)
                return 4
            overrides = json.loads(mapping_path.read_text())
            known = {f.name for f in dataclasses.fields(ConvertOptions)}
            unknown = set(overrides) - known
            if unknown:
                raise ConversionError(f"unknown mapping keys: {sorted(unknown)}")
            for key in ("channels", "kin_channels"):
                if key in overrides:
                    overrides[key] = tuple(overrides[key])
            fields = {**overrides, **fields}
        if "source_rate_hz" not in fields:
            raise ConversionError("--source-rate (or mapping source_rate_hz) is required")
        options = ConvertOptions(**fields)
        manifest = convert_subject(args.src, args.out, options)
    except ConversionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    report = verify_output(args.out)
    if not report["ok"]:
        print(f"error: emitted directory failed verification: {report['problems']}",
              file=sys.stderr)
        return 2
    print(f"converted {manifest.subject_id}: {manifest.trial_count} trials, "
          f"{manifest.n_samples} samples at {manifest.target_rate_hz} Hz -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
