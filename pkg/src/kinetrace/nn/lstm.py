"""LSTM layer returning the last hidden state, with exact BPTT gradients."""

from __future__ import annotations

from typing import Literal

import numpy as np

from ..errors import ArgumentError, ShapeError
from .layers import Layer


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LSTM(Layer):
    """Standard LSTM recurrence, gate order (input, forget, cell, output).

    Gates are sigmoid; the cell-candidate and hidden-output nonlinearity
    is configurable (``relu`` or ``tanh``). Consumes (B, T, I) and returns
    the final hidden state (B, H).
    """

    def __init__(
        self,
        input_dim: int,
        hidden: int,
        rng: np.random.Generator,
        name: str,
        activation: Literal["relu", "tanh"] = "relu",
    ):
        if activation not in ("relu", "tanh"):
            raise ArgumentError(f"unknown activation {activation!r}")
        self.name = name
        self.hidden = hidden
        self.activation = activation
        limit = np.sqrt(1.0 / hidden)
        self.w_input = rng.uniform(-limit, limit, (4 * hidden, input_dim))
        self.w_recur = rng.uniform(-limit, limit, (4 * hidden, hidden))
        self.bias = rng.uniform(-limit, limit, 4 * hidden)
        self.bias[hidden : 2 * hidden] += 1.0   # forget gate starts open
        self.d_w_input = np.zeros_like(self.w_input)
        self.d_w_recur = np.zeros_like(self.w_recur)
        self.d_bias = np.zeros_like(self.bias)
        self._cache: dict | None = None

    def _act(self, z: np.ndarray) -> np.ndarray:
        return np.maximum(z, 0.0) if self.activation == "relu" else np.tanh(z)

    def _act_deriv(self, pre: np.ndarray, post: np.ndarray) -> np.ndarray:
        if self.activation == "relu":
            return (pre > 0).astype(np.float64)
        return 1.0 - post * post

    def forward(self, x, train):
        if x.ndim != 3 or x.shape[2] != self.w_input.shape[1]:
            raise ShapeError(
                f"{self.name}: expected (B, T, {self.w_input.shape[1]}), got {x.shape}"
            )
        batch, steps, _ = x.shape
        if steps == 0:
            raise ArgumentError(f"{self.name}: empty sequence")
        h_dim = self.hidden
        h = np.zeros((batch, h_dim))
        c = np.zeros((batch, h_dim))
        cache = {"x": x, "steps": []}
        for t in range(steps):
            z = x[:, t] @ self.w_input.T + h @ self.w_recur.T + self.bias
            gi = _sigmoid(z[:, :h_dim])
            gf = _sigmoid(z[:, h_dim : 2 * h_dim])
            g_pre = z[:, 2 * h_dim : 3 * h_dim]
            gg = self._act(g_pre)
            go = _sigmoid(z[:, 3 * h_dim :])
            c_prev = c
            h_prev = h
            c = gf * c_prev + gi * gg
            hc = self._act(c)
            h = go * hc
            cache["steps"].append(
                {"h_prev": h_prev, "c_prev": c_prev, "gi": gi, "gf": gf,
                 "g_pre": g_pre, "gg": gg, "go": go, "c": c, "hc": hc}
            )
        self._cache = cache
        return h

    def backward(self, dh_last):
        cache = self._cache
        x = cache["x"]
        batch, steps, _ = x.shape
        self.d_w_input[...] = 0.0
        self.d_w_recur[...] = 0.0
        self.d_bias[...] = 0.0
        dx = np.zeros_like(x)
        dh = dh_last
        dc = np.zeros_like(dh_last)
        for t in reversed(range(steps)):
            s = cache["steps"][t]
            do_pre = dh * s["hc"] * s["go"] * (1.0 - s["go"])
            dc = dc + dh * s["go"] * self._act_deriv(s["c"], s["hc"])
            di_pre = dc * s["gg"] * s["gi"] * (1.0 - s["gi"])
            df_pre = dc * s["c_prev"] * s["gf"] * (1.0 - s["gf"])
            dg_pre = dc * s["gi"] * self._act_deriv(s["g_pre"], s["gg"])
            dz = np.concatenate([di_pre, df_pre, dg_pre, do_pre], axis=1)
            self.d_w_input += dz.T @ x[:, t]
            self.d_w_recur += dz.T @ s["h_prev"]
            self.d_bias += dz.sum(axis=0)
            dx[:, t] = dz @ self.w_input
            dh = dz @ self.w_recur
            dc = dc * s["gf"]
        return dx

    def params(self):
        return {"w_input": self.w_input, "w_recur": self.w_recur, "bias": self.bias}

    def grads(self):
        return {"w_input": self.d_w_input, "w_recur": self.d_w_recur, "bias": self.d_bias}
