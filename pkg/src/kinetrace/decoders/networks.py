"""Architecture builders for the MLP and CNN-LSTM decoders."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .. import nn

OUTPUT_DIM = 3


@dataclass
class NeuralDecoder:
    kind: str                       # "mlp" | "cnnlstm"
    net: nn.Network
    input_dim: int
    layout: tuple[int, int] | None  # (channels N, lags L) for cnnlstm
    seed: int


def build_mlp(input_dim: int, seed: int) -> NeuralDecoder:
    """Batchnorm, three 128-unit dense layers, one 16-unit dense layer
    (all ReLU), linear 3-unit output."""
    rng = np.random.default_rng(seed)
    net = nn.Network([
        nn.BatchNorm(input_dim, "b1"),
        nn.Dense(input_dim, 128, rng, "d1"),
        nn.ReLU("r1"),
        nn.Dense(128, 128, rng, "d2"),
        nn.ReLU("r2"),
        nn.Dense(128, 128, rng, "d3"),
        nn.ReLU("r3"),
        nn.Dense(128, 16, rng, "d4"),
        nn.ReLU("r4"),
        nn.Dense(16, OUTPUT_DIM, rng, "out"),
    ])
    return NeuralDecoder("mlp", net, input_dim, None, seed)


def build_cnn_lstm(n_lags: int, n_channels: int, seed: int) -> NeuralDecoder:
    """Batchnorm, conv(256, k7) + pool(5), conv(128, k5) + pool(3),
    dropout 0.25, 128-cell ReLU LSTM, dense 128, linear 3-unit output.

    Consumes flat channel-major rows; convolutions run along the lag
    (time) axis with the EEG channels as input feature maps.
    """
    if n_lags < 7:
        warnings.warn(
            f"lag window of {n_lags} samples is shorter than the first "
            "convolution kernel; zero padding dominates",
            UserWarning,
        )
    rng = np.random.default_rng(seed)
    net = nn.Network([
        nn.BatchNorm(n_channels * n_lags, "b1"),
        nn.ChannelsTimeView(n_channels, n_lags, "view"),
        nn.Conv1dSame(n_channels, 256, 7, rng, "c1"),
        nn.ReLU("r1"),
        nn.MaxPool1d(5, "m1"),
        nn.Conv1dSame(256, 128, 5, rng, "c2"),
        nn.ReLU("r2"),
        nn.MaxPool1d(3, "m2"),
        nn.Dropout(0.25, "drop"),
        nn.TimeMajor("seq"),
        nn.LSTM(128, 128, rng, "l1", activation="relu"),
        nn.Dense(128, 128, rng, "d1"),
        nn.ReLU("r3"),
        nn.Dense(128, OUTPUT_DIM, rng, "d2"),
    ])
    return NeuralDecoder("cnnlstm", net, n_channels * n_lags, (n_channels, n_lags), seed)
