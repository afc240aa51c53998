"""The three decoders (mLR, MLP, CNN-LSTM) and their training loop."""

from .mlr import MlrModel, fit_mlr, predict_mlr
from .networks import NeuralDecoder, build_cnn_lstm, build_mlp
from .training import EarlyStopping, TrainConfig, TrainReport, predict, train
from .modelio import load_model, save_model

__all__ = [
    "MlrModel",
    "fit_mlr",
    "predict_mlr",
    "NeuralDecoder",
    "build_mlp",
    "build_cnn_lstm",
    "TrainConfig",
    "TrainReport",
    "EarlyStopping",
    "train",
    "predict",
    "save_model",
    "load_model",
]
