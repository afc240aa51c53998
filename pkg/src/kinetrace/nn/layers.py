"""Feed-forward layers with exact analytic gradients.

Every layer follows the same contract: ``forward(x, train)`` caches what
``backward(dy)`` needs, ``backward`` fills the layer's gradient buffers
and returns the gradient with respect to the input. All math is float64.
"""

from __future__ import annotations

import numpy as np

from ..errors import ArgumentError, DegenerateBatchError, ShapeError


class Layer:
    """Base layer; parameterless layers inherit the empty dicts."""

    name: str

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}


def he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, shape)


class Dense(Layer):
    """Affine map ``y = x W^T + b`` with weight of shape (out, in)."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, name: str):
        self.name = name
        self.weight = he_uniform(rng, (out_dim, in_dim), in_dim)
        self.bias = np.zeros(out_dim)
        self.d_weight = np.zeros_like(self.weight)
        self.d_bias = np.zeros_like(self.bias)
        self._x: np.ndarray | None = None

    def forward(self, x, train):
        if x.ndim != 2 or x.shape[1] != self.weight.shape[1]:
            raise ShapeError(
                f"{self.name}: expected (B, {self.weight.shape[1]}), got {x.shape}"
            )
        self._x = x
        return x @ self.weight.T + self.bias

    def backward(self, dy):
        self.d_weight[...] = dy.T @ self._x
        self.d_bias[...] = dy.sum(axis=0)
        return dy @ self.weight

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def grads(self):
        return {"weight": self.d_weight, "bias": self.d_bias}


class ReLU(Layer):
    def __init__(self, name: str):
        self.name = name
        self._mask: np.ndarray | None = None

    def forward(self, x, train):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy):
        return np.where(self._mask, dy, 0.0)


class Conv1dSame(Layer):
    """1-D cross-correlation along time with symmetric zero padding.

    Input (B, C, L) -> output (B, F, L). Odd kernels only, so "same"
    padding is exactly (K - 1) / 2 on each side.
    """

    def __init__(self, in_channels: int, filters: int, kernel: int,
                 rng: np.random.Generator, name: str):
        if kernel % 2 == 0 or kernel < 1:
            raise ArgumentError(f"kernel size must be odd, got {kernel}")
        self.name = name
        self.kernel = kernel
        self.weight = he_uniform(rng, (filters, in_channels, kernel), in_channels * kernel)
        self.bias = np.zeros(filters)
        self.d_weight = np.zeros_like(self.weight)
        self.d_bias = np.zeros_like(self.bias)
        self._windows: np.ndarray | None = None
        self._in_shape: tuple[int, ...] | None = None

    def forward(self, x, train):
        if x.ndim != 3 or x.shape[1] != self.weight.shape[1]:
            raise ShapeError(
                f"{self.name}: expected (B, {self.weight.shape[1]}, L), got {x.shape}"
            )
        pad = (self.kernel - 1) // 2
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
        # (B, C, L, K) view of every kernel-sized window
        self._windows = np.lib.stride_tricks.sliding_window_view(xp, self.kernel, axis=2)
        self._in_shape = x.shape
        return np.einsum("bclk,fck->bfl", self._windows, self.weight) + self.bias[:, None]

    def backward(self, dy):
        b, c, length = self._in_shape
        pad = (self.kernel - 1) // 2
        self.d_weight[...] = np.einsum("bfl,bclk->fck", dy, self._windows)
        self.d_bias[...] = dy.sum(axis=(0, 2))
        contrib = np.einsum("bfl,fck->bclk", dy, self.weight)
        dxp = np.zeros((b, c, length + 2 * pad))
        for k in range(self.kernel):
            dxp[:, :, k : k + length] += contrib[:, :, :, k]
        return dxp[:, :, pad : pad + length]

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def grads(self):
        return {"weight": self.d_weight, "bias": self.d_bias}


class MaxPool1d(Layer):
    """Non-overlapping max pooling with a final partial window (ceil length).

    Gradient routes to the first maximum of each window.
    """

    def __init__(self, window: int, name: str):
        if window < 1:
            raise ArgumentError(f"pool window must be >= 1, got {window}")
        self.name = name
        self.window = window
        self._argmax: np.ndarray | None = None
        self._in_shape: tuple[int, ...] | None = None

    @staticmethod
    def output_length(length: int, window: int) -> int:
        return -(-length // window)

    def forward(self, x, train):
        b, c, length = x.shape
        n_out = self.output_length(length, self.window)
        y = np.empty((b, c, n_out))
        argmax = np.empty((b, c, n_out), dtype=np.intp)
        for j in range(n_out):
            lo = j * self.window
            hi = min(lo + self.window, length)
            seg = x[:, :, lo:hi]
            idx = seg.argmax(axis=2)
            argmax[:, :, j] = idx + lo
            y[:, :, j] = np.take_along_axis(seg, idx[:, :, None], axis=2)[:, :, 0]
        self._argmax = argmax
        self._in_shape = x.shape
        return y

    def backward(self, dy):
        dx = np.zeros(self._in_shape)
        b, c, n_out = dy.shape
        bi = np.arange(b)[:, None, None]
        ci = np.arange(c)[None, :, None]
        np.add.at(dx, (bi, ci, self._argmax), dy)
        return dx


class BatchNorm(Layer):
    """Per-feature batch normalization on (B, D) input.

    Train mode uses batch statistics (population variance, eps 1e-5) and
    updates running statistics with momentum 0.1; eval mode uses the
    running statistics.
    """

    EPS = 1e-5
    MOMENTUM = 0.1

    def __init__(self, dim: int, name: str):
        self.name = name
        self.gamma = np.ones(dim)
        self.beta = np.zeros(dim)
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self.d_gamma = np.zeros_like(self.gamma)
        self.d_beta = np.zeros_like(self.beta)
        self._xhat: np.ndarray | None = None
        self._inv_std: np.ndarray | None = None
        self._train: bool = False

    def forward(self, x, train):
        if x.ndim != 2 or x.shape[1] != self.gamma.size:
            raise ShapeError(f"{self.name}: expected (B, {self.gamma.size}), got {x.shape}")
        self._train = train
        if train:
            if x.shape[0] < 2:
                raise DegenerateBatchError(
                    f"{self.name}: train-mode batch of {x.shape[0]} has no statistics"
                )
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            self.running_mean[...] = (1 - self.MOMENTUM) * self.running_mean + self.MOMENTUM * mean
            self.running_var[...] = (1 - self.MOMENTUM) * self.running_var + self.MOMENTUM * var
        else:
            mean = self.running_mean
            var = self.running_var
        self._inv_std = 1.0 / np.sqrt(var + self.EPS)
        self._xhat = (x - mean) * self._inv_std
        return self.gamma * self._xhat + self.beta

    def backward(self, dy):
        self.d_gamma[...] = (dy * self._xhat).sum(axis=0)
        self.d_beta[...] = dy.sum(axis=0)
        dxhat = dy * self.gamma
        if not self._train:
            return dxhat * self._inv_std
        b = dy.shape[0]
        return (self._inv_std / b) * (
            b * dxhat - dxhat.sum(axis=0) - self._xhat * (dxhat * self._xhat).sum(axis=0)
        )

    def params(self):
        return {
            "gamma": self.gamma,
            "beta": self.beta,
            "running_mean": self.running_mean,
            "running_var": self.running_var,
        }

    def grads(self):
        return {"gamma": self.d_gamma, "beta": self.d_beta}


class Dropout(Layer):
    """Inverted dropout: kept values scaled by 1/(1-rate); eval is identity."""

    def __init__(self, rate: float, name: str, rng: np.random.Generator | None = None):
        if not 0.0 <= rate < 1.0:
            raise ArgumentError(f"dropout rate must be in [0, 1), got {rate}")
        self.name = name
        self.rate = rate
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self._mask: np.ndarray | None = None

    def forward(self, x, train):
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.rate
        self._mask = (self.rng.random(x.shape) < keep) / keep
        return x * self._mask

    def backward(self, dy):
        if self._mask is None:
            return dy
        return dy * self._mask


class ChannelsTimeView(Layer):
    """Reshape flat channel-major rows (B, C*L) into conv input (B, C, L)."""

    def __init__(self, channels: int, length: int, name: str):
        self.name = name
        self.channels = channels
        self.length = length

    def forward(self, x, train):
        if x.ndim != 2 or x.shape[1] != self.channels * self.length:
            raise ShapeError(
                f"{self.name}: expected (B, {self.channels * self.length}), got {x.shape}"
            )
        return x.reshape(x.shape[0], self.channels, self.length)

    def backward(self, dy):
        return dy.reshape(dy.shape[0], -1)


class TimeMajor(Layer):
    """Swap (B, F, T) feature-map output into (B, T, F) sequence input."""

    def __init__(self, name: str):
        self.name = name

    def forward(self, x, train):
        return np.ascontiguousarray(x.transpose(0, 2, 1))

    def backward(self, dy):
        return np.ascontiguousarray(dy.transpose(0, 2, 1))
