"""Batch command-line interface.

Subcommands: validate, synth, train, sweep, loso (sweep across hold-outs),
export. Configuration precedence: built-in defaults < config file <
``KINETRACE_*`` environment variables < command-line flags; the effective
configuration is echoed into the output directory. Exit codes: 0 ok,
2 validation/configuration, 3 divergence, 4 I/O.
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

from . import evaluation, pipeline
from .dataset import (
    LagWindowSpec,
    SynthConfig,
    build_lag_features,
    generate_synthetic_subject,
    load_subject,
    save_subject,
)
from .decoders import TrainConfig, load_model, save_model
from .errors import (
    ArgumentError,
    ConfigError,
    DivergenceError,
    IoError,
    KinetraceError,
)
from .signal import BANDS

_DEFAULTS: dict[str, Any] = {
    "subjects": [],
    "out": "kinetrace-out",
    "band": None,
    "num_taps": None,
    "rereference": False,
    "channels": None,
    "kin_lowpass_hz": None,
    "lag": {"far_ms": 250.0, "near_ms": 0.0},
    "decoder": "mlr",
    "split": {"mode": "subject_dependent", "held_out": None},
    "train": {
        "max_epochs": 100, "batch_size": 64, "patience": 5,
        "learning_rate": 1e-3, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8,
    },
    "seed": 0,
    "jobs": max(1, os.cpu_count() or 1),
    "sweep": {"bands": None, "lags": None, "decoders": None, "loso": False},
}

_SYNTH_DEFAULTS: dict[str, Any] = {
    "n_channels": 21, "n_trials": 8, "n_samples": 2000, "rate_hz": 100.0,
    "mapping": "linear", "noise_std": 0.0, "seed": 0, "subject_id": "SYN",
}


def _merge(defaults: dict, override: dict, path: str = "") -> dict:
    # Deep copy: callers mutate the result, and the defaults table must
    # never leak state between runs in one process.
    merged = copy.deepcopy(defaults)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown configuration key {where!r}")
        if isinstance(defaults[key], dict) and defaults[key]:
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be an object")
            merged[key] = _merge(defaults[key], value, where)
        else:
            merged[key] = value
    return merged


def load_config(path: str | None) -> dict:
    if path is None:
        return copy.deepcopy(_DEFAULTS)
    p = Path(path)
    if not p.is_file():
        raise IoError(f"config file {p} not found")
    try:
        user = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError("config root must be an object")
    return _merge(_DEFAULTS, user)


def _apply_env(config: dict, env=os.environ) -> dict:
    def get(name):
        return env.get(f"KINETRACE_{name}")

    if get("SEED") is not None:
        config["seed"] = int(get("SEED"))
    if get("OUT") is not None:
        config["out"] = get("OUT")
    if get("JOBS") is not None:
        config["jobs"] = int(get("JOBS"))
    if get("BAND") is not None:
        config["band"] = get("BAND") or None
    if get("DECODER") is not None:
        config["decoder"] = get("DECODER")
    lag_ms = get("LAG_MS")
    window_ms = get("WINDOW_MS")
    if lag_ms is not None or window_ms is not None:
        config["lag"] = _lag_from_flags(config["lag"], lag_ms, window_ms)
    return config


def _lag_from_flags(current: dict, lag_ms, window_ms) -> dict:
    far = float(lag_ms) if lag_ms is not None else float(current["far_ms"])
    if window_ms is not None:
        near = far - float(window_ms)
    elif lag_ms is not None:
        near = 0.0
    else:
        near = float(current["near_ms"])
    return {"far_ms": far, "near_ms": near}


def _apply_flags(config: dict, args: argparse.Namespace) -> dict:
    if getattr(args, "seed", None) is not None:
        config["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        config["out"] = args.out
    if getattr(args, "jobs", None) is not None:
        config["jobs"] = args.jobs
    if getattr(args, "band", None) is not None:
        config["band"] = args.band or None
    if getattr(args, "decoder", None) is not None:
        config["decoder"] = args.decoder
    if getattr(args, "lag_ms", None) is not None or getattr(args, "window_ms", None) is not None:
        config["lag"] = _lag_from_flags(config["lag"], args.lag_ms, args.window_ms)
    if getattr(args, "subjects", None):
        config["subjects"] = list(args.subjects)
    return config


def _validate_config(config: dict) -> dict:
    if config["band"] is not None and config["band"] not in BANDS:
        raise ConfigError(f"band must be one of {sorted(BANDS)} or null")
    if config["decoder"] not in pipeline.DECODERS:
        raise ConfigError(f"decoder must be one of {pipeline.DECODERS}")
    if config["split"]["mode"] not in ("subject_dependent", "loso"):
        raise ConfigError("split.mode must be subject_dependent or loso")
    if config["jobs"] < 1:
        raise ConfigError("jobs must be >= 1")
    for key in ("bands", "decoders"):
        values = config["sweep"][key]
        if values is not None and not isinstance(values, list):
            raise ConfigError(f"sweep.{key} must be a list or null")
    if config["sweep"]["bands"]:
        for band in config["sweep"]["bands"]:
            if band is not None and band not in BANDS:
                raise ConfigError(f"sweep band {band!r} unknown")
    if config["sweep"]["decoders"]:
        for d in config["sweep"]["decoders"]:
            if d not in pipeline.DECODERS:
                raise ConfigError(f"sweep decoder {d!r} unknown")
    return config


def resolve_config(args: argparse.Namespace) -> dict:
    config = load_config(getattr(args, "config", None))
    config = _apply_env(config)
    config = _apply_flags(config, args)
    return _validate_config(config)


def _echo_config(config: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")


def _preprocess_config(config: dict) -> pipeline.PreprocessConfig:
    return pipeline.PreprocessConfig(
        band=config["band"],
        num_taps=config["num_taps"],
        rereference=config["rereference"],
        channels=tuple(config["channels"]) if config["channels"] else None,
        kin_lowpass_hz=config["kin_lowpass_hz"],
    )


def _train_config(config: dict) -> TrainConfig:
    t = config["train"]
    return TrainConfig(
        max_epochs=t["max_epochs"], batch_size=t["batch_size"], patience=t["patience"],
        learning_rate=t["learning_rate"], beta1=t["beta1"], beta2=t["beta2"],
        eps=t["eps"], seed=config["seed"],
    )


# ------------------------------------------------------------------ commands

def cmd_validate(args) -> int:
    ok = True
    for path in args.paths:
        try:
            rec = load_subject(path)
        except KinetraceError as exc:
            print(f"FAIL {path}: {exc}")
            ok = False
        else:
            print(
                f"OK {path}: subject={rec.subject_id} channels={rec.n_channels} "
                f"samples={rec.n_samples} trials={len(rec.trials)} rate={rec.rate_hz}"
            )
    return 0 if ok else 2


def cmd_synth(args) -> int:
    raw = {}
    if args.config:
        p = Path(args.config)
        if not p.is_file():
            raise IoError(f"config file {p} not found")
        raw = json.loads(p.read_text())
    merged = _merge(_SYNTH_DEFAULTS, raw)
    if args.seed is not None:
        merged["seed"] = args.seed
    config = SynthConfig(**merged)
    out = Path(args.out)
    recording, truth = generate_synthetic_subject(config)
    save_subject(recording, out)
    sidecar = {
        "mapping": truth.mapping,
        "gains": list(truth.gains),
        "offsets": list(truth.offsets),
        "lag": {"far_ms": truth.lag.lag_far_ms, "near_ms": truth.lag.lag_near_ms},
        "weights": truth.weights.tolist(),
        "clean_mean": list(truth.clean_mean),
        "clean_std": list(truth.clean_std),
        "kin_min": list(truth.kin_min),
        "kin_max": list(truth.kin_max),
        "config": dataclasses.asdict(config),
    }
    (out / "ground_truth.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    print(f"wrote synthetic subject {config.subject_id} to {out}")
    return 0


def _prepare(config: dict, held_out: str | None = None) -> pipeline.PreparedData:
    if not config["subjects"]:
        raise ConfigError("config.subjects must list at least one interchange directory")
    pre = _preprocess_config(config)
    lag = config["lag"]
    if config["split"]["mode"] == "loso":
        recordings = [load_subject(p) for p in config["subjects"]]
        held = held_out or config["split"]["held_out"]
        if held is None:
            raise ConfigError("split.held_out is required for LOSO mode")
        return pipeline.prepare_loso(
            recordings, held, lag["far_ms"], lag["near_ms"], pre, config["seed"]
        )
    recording = load_subject(config["subjects"][0])
    return pipeline.prepare_subject_dependent(
        recording, lag["far_ms"], lag["near_ms"], pre, config["seed"]
    )


def _model_meta(config: dict, data: pipeline.PreparedData) -> dict:
    return {
        "band": config["band"],
        "lag": {"far_ms": data.spec.lag_far_ms, "near_ms": data.spec.lag_near_ms},
        "rate_hz": data.spec.rate_hz,
        "channels": list(data.test_recording.channel_names),
        "preprocess": {
            "rereference": config["rereference"],
            "num_taps": config["num_taps"],
            "kin_lowpass_hz": config["kin_lowpass_hz"],
        },
        "normalization": data.normalization.to_json(),
        "seed": config["seed"],
    }


def cmd_train(args) -> int:
    config = resolve_config(args)
    out = Path(config["out"])
    _echo_config(config, out)
    data = _prepare(config)
    model, report = pipeline.fit_decoder(config["decoder"], data, _train_config(config))
    save_model(model, out / "model", _model_meta(config, data))
    if report is not None:
        lines = ["epoch,train_loss,val_loss"]
        for i, (tr, va) in enumerate(zip(report.train_losses, report.val_losses), 1):
            lines.append(f"{i},{tr:.6g},{va:.6g}")
        (out / "train_report.csv").write_text("\n".join(lines) + "\n")
        print(
            f"trained {config['decoder']}: stopped at epoch {report.stopped_epoch}, "
            f"best epoch {report.best_epoch} (val loss {report.best_val_loss:.6g})"
        )
    else:
        print(f"fitted {config['decoder']}")
    print(f"model written to {out / 'model'}")
    return 0


def _grid(config: dict) -> list[dict]:
    sweep = config["sweep"]
    bands = sweep["bands"] if sweep["bands"] is not None else [config["band"]]
    lags = sweep["lags"] if sweep["lags"] is not None else [config["lag"]]
    decoders = sweep["decoders"] if sweep["decoders"] is not None else [config["decoder"]]
    loso = bool(sweep["loso"]) or config["split"]["mode"] == "loso"
    if loso:
        folds = [load_subject(p).subject_id for p in config["subjects"]]
    else:
        folds = list(config["subjects"])
    cells = []
    for band in bands:
        for lag in lags:
            for decoder in decoders:
                for fold in folds:
                    cells.append({
                        "band": band,
                        "lag": {"far_ms": float(lag["far_ms"]), "near_ms": float(lag["near_ms"])},
                        "decoder": decoder,
                        "fold": fold,
                        "loso": loso,
                    })
    return cells


def _cell_id(cell: dict, config: dict) -> str:
    payload = json.dumps(
        {"cell": cell, "seed": config["seed"], "subjects": config["subjects"]},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _run_sweep_cell(payload: dict) -> dict:
    """One grid cell: prepare, fit, evaluate. Top level for process pools."""
    config = payload["config"]
    cell = payload["cell"]
    cell_config = dict(config)
    cell_config["band"] = cell["band"]
    cell_config["lag"] = cell["lag"]
    cell_config["decoder"] = cell["decoder"]
    if cell["loso"]:
        cell_config["split"] = {"mode": "loso", "held_out": cell["fold"]}
        data = _prepare(cell_config, held_out=cell["fold"])
        subject = cell["fold"]
    else:
        cell_config["split"] = {"mode": "subject_dependent", "held_out": None}
        cell_config["subjects"] = [cell["fold"]]
        data = _prepare(cell_config)
        subject = data.test_recording.subject_id
    model, _ = pipeline.fit_decoder(cell["decoder"], data, _train_config(cell_config))
    report = evaluation.evaluate(model, data.test_recording, data.test_trials, data.spec)
    rows = []
    for direction, value, degenerate in zip(
        evaluation.DIRECTIONS, report.values, report.degenerate
    ):
        rows.append({
            "band": cell["band"] or "broadband",
            "window_ms": data.spec.window_ms,
            "lag_far_ms": data.spec.lag_far_ms,
            "lag_near_ms": data.spec.lag_near_ms,
            "decoder": cell["decoder"],
            "subject": subject,
            "direction": direction,
            "pcc": None if degenerate else value,
            "n_samples": report.n_samples,
            "degenerate": degenerate,
        })
    return {"id": payload["id"], "rows": rows}


def _rows_to_cells(rows: list[dict]) -> list[evaluation.SweepCell]:
    return [
        evaluation.SweepCell(
            band=r["band"], window_ms=r["window_ms"], lag_far_ms=r["lag_far_ms"],
            lag_near_ms=r["lag_near_ms"], decoder=r["decoder"], subject=r["subject"],
            direction=r["direction"],
            pcc=float("nan") if r["pcc"] is None else r["pcc"],
            n_samples=r["n_samples"], degenerate=r["degenerate"],
        )
        for r in rows
    ]


def cmd_sweep(args, force_loso: bool = False) -> int:
    config = resolve_config(args)
    if force_loso:
        config["sweep"]["loso"] = True
    out = Path(config["out"])
    _echo_config(config, out)
    cells_dir = out / "cells"
    cells_dir.mkdir(parents=True, exist_ok=True)
    ledger_path = out / "ledger.txt"
    done = set(ledger_path.read_text().split()) if ledger_path.exists() else set()

    grid = _grid(config)
    pending = []
    for cell in grid:
        cid = _cell_id(cell, config)
        if cid in done and (cells_dir / f"{cid}.json").is_file():
            continue
        pending.append({"id": cid, "cell": cell, "config": config})

    if pending:
        if config["jobs"] > 1:
            with ProcessPoolExecutor(max_workers=config["jobs"]) as pool:
                results = list(pool.map(_run_sweep_cell, pending))
        else:
            results = [_run_sweep_cell(p) for p in pending]
        with ledger_path.open("a") as ledger:
            for result in results:
                (cells_dir / f"{result['id']}.json").write_text(
                    json.dumps(result, indent=2, sort_keys=True) + "\n"
                )
                ledger.write(result["id"] + "\n")

    all_rows = []
    for cell in grid:
        cid = _cell_id(cell, config)
        stored = json.loads((cells_dir / f"{cid}.json").read_text())
        all_rows.extend(stored["rows"])
    report = evaluation.build_sweep_report(_rows_to_cells(all_rows))
    (out / "report.csv").write_text(evaluation.sweep_report_csv(report))
    ids = sorted(_cell_id(c, config) for c in grid)
    ledger_path.write_text("\n".join(ids) + "\n")
    print(f"swept {len(grid)} cells ({len(pending)} computed, "
          f"{len(grid) - len(pending)} reused); report at {out / 'report.csv'}")
    return 0


def cmd_loso(args) -> int:
    return cmd_sweep(args, force_loso=True)


def cmd_export(args) -> int:
    model, meta = load_model(args.model)
    recording = load_subject(args.subject)
    pre = pipeline.PreprocessConfig(
        band=meta["band"],
        num_taps=meta["preprocess"]["num_taps"],
        rereference=meta["preprocess"]["rereference"],
        channels=tuple(meta["channels"]),
        kin_lowpass_hz=meta["preprocess"]["kin_lowpass_hz"],
    )
    recording = pipeline.preprocess_recording(recording, pre)
    norm = pipeline.NormalizationParams.from_json(meta["normalization"])
    recording = pipeline.apply_normalization(recording, norm)
    if not 0 <= args.trial < len(recording.trials):
        raise ArgumentError(
            f"trial {args.trial} out of range ({len(recording.trials)} trials)"
        )
    spec = LagWindowSpec(meta["lag"]["far_ms"], meta["lag"]["near_ms"], meta["rate_hz"])
    features, measured = build_lag_features(recording, recording.trials[args.trial], spec)
    predicted = pipeline.predict_decoder(model, features)
    evaluation.export_trajectory(
        measured, predicted, meta["rate_hz"], norm.kin_minmax(), args.out
    )
    print(f"trajectory written to {args.out}")
    return 0


# ---------------------------------------------------------------- entry point

def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out")
    parser.add_argument("--jobs", type=int)
    parser.add_argument("--band", choices=sorted(BANDS))
    parser.add_argument("--window-ms", dest="window_ms", type=float)
    parser.add_argument("--lag-ms", dest="lag_ms", type=float)
    parser.add_argument("--decoder", choices=pipeline.DECODERS)
    parser.add_argument("--subjects", nargs="*", help="interchange directories")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kinetrace",
        description="Decode 3-D hand trajectories from pre-movement EEG.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check interchange directories")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synth", help="generate a synthetic subject")
    p.add_argument("--config", help="JSON synthesis configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train one decoder")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run a band x lag x decoder grid")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("loso", help="sweep with leave-one-subject-out folds")
    _add_config_flags(p)
    p.set_defaults(func=cmd_loso)

    p = sub.add_parser("export", help="export a measured/predicted trajectory CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--subject", required=True)
    p.add_argument("--trial", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 3
    except IoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except KinetraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
