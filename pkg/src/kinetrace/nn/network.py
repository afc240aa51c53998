"""Sequential layer container with namespaced parameters."""

from __future__ import annotations

import numpy as np

from ..errors import ArgumentError
from .layers import Dropout, Layer


class Network:
    def __init__(self, layers: list[Layer]):
        names = [layer.name for layer in layers]
        if len(set(names)) != len(names):
            raise ArgumentError(f"duplicate layer names in {names}")
        self.layers = layers

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def parameters(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for layer in self.layers:
            for key, value in layer.params().items():
                out[f"{layer.name}.{key}"] = value
        return out

    def gradients(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for layer in self.layers:
            for key, value in layer.grads().items():
                out[f"{layer.name}.{key}"] = value
        return out

    def set_rng(self, rng: np.random.Generator) -> None:
        """Point stochastic layers at a shared training stream."""
        for layer in self.layers:
            if isinstance(layer, Dropout):
                layer.rng = rng

    def load_parameters(self, values: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        if set(values) != set(params):
            raise ArgumentError(
                f"parameter names {sorted(values)} do not match {sorted(params)}"
            )
        for name, array in values.items():
            params[name][...] = array
