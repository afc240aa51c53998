"""Minimal reverse-mode kernel: exactly the layers the decoders need."""

from .layers import BatchNorm, ChannelsTimeView, Conv1dSame, Dense, Dropout, MaxPool1d, ReLU, TimeMajor
from .lstm import LSTM
from .losses import mse_loss
from .network import Network
from .optim import AdamState, adam_step
from .serialize import load_params, save_params

__all__ = [
    "Dense",
    "Conv1dSame",
    "MaxPool1d",
    "BatchNorm",
    "Dropout",
    "ReLU",
    "ChannelsTimeView",
    "TimeMajor",
    "LSTM",
    "mse_loss",
    "Network",
    "AdamState",
    "adam_step",
    "save_params",
    "load_params",
]
