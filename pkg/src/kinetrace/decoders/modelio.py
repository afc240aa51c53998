"""Model files: parameter blob plus a header sufficient for standalone
inference (architecture, input layout, band, lag window, normalization)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .. import nn
from ..errors import FormatError, IoError
from .mlr import MlrModel
from .networks import NeuralDecoder, build_cnn_lstm, build_mlp

_HEADER = "model.json"


def save_model(model, path: str | Path, meta: dict[str, Any] | None = None) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    header: dict[str, Any] = {"meta": meta or {}}
    if isinstance(model, MlrModel):
        header.update({"kind": "mlr", "rank_deficient": model.rank_deficient})
        nn.save_params({"alpha": model.alpha, "beta": model.beta}, path)
    elif isinstance(model, NeuralDecoder):
        header.update({
            "kind": model.kind,
            "input_dim": model.input_dim,
            "layout": list(model.layout) if model.layout else None,
            "seed": model.seed,
        })
        nn.save_params(model.net.parameters(), path)
    else:
        raise FormatError(f"cannot serialize model of type {type(model).__name__}")
    (path / _HEADER).write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")


def load_model(path: str | Path):
    """Returns (model, meta)."""
    path = Path(path)
    header_path = path / _HEADER
    if not header_path.is_file():
        raise IoError(f"missing model header {header_path}")
    header = json.loads(header_path.read_text())
    params = nn.load_params(path)
    kind = header.get("kind")
    if kind == "mlr":
        model: Any = MlrModel(
            alpha=params["alpha"], beta=params["beta"],
            rank_deficient=bool(header["rank_deficient"]),
        )
    elif kind == "mlp":
        model = build_mlp(int(header["input_dim"]), int(header["seed"]))
        model.net.load_parameters(params)
    elif kind == "cnnlstm":
        n_channels, n_lags = header["layout"]
        model = build_cnn_lstm(int(n_lags), int(n_channels), int(header["seed"]))
        model.net.load_parameters(params)
    else:
        raise FormatError(f"unknown model kind {kind!r}")
    return model, header.get("meta", {})
