"""Sequential-graph layers with explicit forward/backward passes.

Leading dimension is always the batch.  Parameters live in float32 by default;
`Model.to_dtype(np.float64)` clones a graph for finite-difference checks.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatchError

_KAIMING_GAIN = 6.0  # uniform bound = sqrt(gain / fan_in)


def kaiming_uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    bound = np.sqrt(_KAIMING_GAIN / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Layer:
    """Base layer: forward caches what backward needs; backward accumulates
    parameter gradients into self.grads and returns the input gradient."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def out_shape(self, in_shape: tuple) -> tuple:
        raise NotImplementedError

    def spec(self) -> dict:
        raise NotImplementedError

    def zero_grads(self):
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def astype(self, dtype):
        for k in self.params:
            self.params[k] = self.params[k].astype(dtype)
        return self


class Dense(Layer):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator | None = None,
                 dtype=np.float32):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        rng = rng or np.random.default_rng(0)
        self.params["W"] = kaiming_uniform(rng, (n_in, n_out), n_in, dtype)
        self.params["b"] = np.zeros(n_out, dtype=dtype)
        self.zero_grads()

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ShapeMismatchError(
                f"dense({self.n_in}->{self.n_out}) got input shape {x.shape}")
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, dy):
        self.grads["W"] += self._x.T @ dy
        self.grads["b"] += dy.sum(axis=0)
        return dy @ self.params["W"].T

    def out_shape(self, in_shape):
        if in_shape != (self.n_in,):
            raise ShapeMismatchError(
                f"dense({self.n_in}->{self.n_out}) got per-sample shape {in_shape}")
        return (self.n_out,)

    def spec(self):
        return {"kind": "dense", "in": self.n_in, "out": self.n_out}


class Conv2d(Layer):
    """2-D convolution (cross-correlation), NCHW, per-side padding (ph, pw)."""

    def __init__(self, in_ch: int, out_ch: int, kernel: tuple, stride=(1, 1),
                 padding=(0, 0), rng: np.random.Generator | None = None, dtype=np.float32):
        super().__init__()
        self.in_ch, self.out_ch = in_ch, out_ch
        self.kh, self.kw = kernel
        self.sh, self.sw = stride
        self.ph, self.pw = padding
        rng = rng or np.random.default_rng(0)
        fan_in = in_ch * self.kh * self.kw
        self.params["W"] = kaiming_uniform(rng, (out_ch, fan_in), fan_in, dtype)
        self.params["b"] = np.zeros(out_ch, dtype=dtype)
        self.zero_grads()

    def _check(self, shape):
        c, h, w = shape
        if c != self.in_ch:
            raise ShapeMismatchError(
                f"conv2d expected {self.in_ch} input channels, got shape {shape}")
        oh = (h + 2 * self.ph - self.kh) // self.sh + 1
        ow = (w + 2 * self.pw - self.kw) // self.sw + 1
        if oh <= 0 or ow <= 0 or (h + 2 * self.ph) < self.kh or (w + 2 * self.pw) < self.kw:
            raise ShapeMismatchError(f"conv2d kernel {self.kh}x{self.kw} too large for {shape}")
        return oh, ow

    def _im2col(self, x):
        b, c, h, w = x.shape
        if self.ph or self.pw:
            x = np.pad(x, ((0, 0), (0, 0), (self.ph, self.ph), (self.pw, self.pw)))
        oh, ow = self._oh, self._ow
        s0, s1, s2, s3 = x.strides
        cols = np.lib.stride_tricks.as_strided(
            x, (b, c, self.kh, self.kw, oh, ow),
            (s0, s1, s2, s3, s2 * self.sh, s3 * self.sw), writeable=False)
        # (B, oh, ow, C*kh*kw)
        return np.ascontiguousarray(cols.transpose(0, 4, 5, 1, 2, 3)).reshape(
            b, oh * ow, c * self.kh * self.kw)

    def forward(self, x):
        if x.ndim != 4:
            raise ShapeMismatchError(f"conv2d expects NCHW input, got shape {x.shape}")
        self._oh, self._ow = self._check(x.shape[1:])
        self._in_shape = x.shape
        self._cols = self._im2col(x)
        out = self._cols @ self.params["W"].T + self.params["b"]
        b = x.shape[0]
        return out.reshape(b, self._oh, self._ow, self.out_ch).transpose(0, 3, 1, 2)

    def backward(self, dy):
        b, _, oh, ow = dy.shape
        dy_flat = np.ascontiguousarray(dy.transpose(0, 2, 3, 1)).reshape(
            b * oh * ow, self.out_ch)
        cols_flat = self._cols.reshape(b * oh * ow, -1)
        self.grads["W"] += dy_flat.T @ cols_flat
        self.grads["b"] += dy_flat.sum(axis=0)
        dcols = (dy_flat @ self.params["W"]).reshape(b, oh * ow, -1)
        _, c, h, w = self._in_shape
        hp, wp = h + 2 * self.ph, w + 2 * self.pw
        dxp = np.zeros((b, c, hp, wp), dtype=dy.dtype)
        dcols = dcols.reshape(b, oh, ow, c, self.kh, self.kw)
        for ik in range(self.kh):
            for jk in range(self.kw):
                dxp[:, :, ik:ik + self.sh * oh:self.sh, jk:jk + self.sw * ow:self.sw] += \
                    dcols[:, :, :, :, ik, jk].transpose(0, 3, 1, 2)
        return dxp[:, :, self.ph:self.ph + h, self.pw:self.pw + w]

    def out_shape(self, in_shape):
        oh, ow = self._check(in_shape)
        return (self.out_ch, oh, ow)

    def spec(self):
        return {"kind": "conv2d", "in_ch": self.in_ch, "out_ch": self.out_ch,
                "kernel": [self.kh, self.kw], "stride": [self.sh, self.sw],
                "padding": [self.ph, self.pw]}


class Reshape(Layer):
    def __init__(self, shape: tuple):
        super().__init__()
        self.shape = tuple(shape)

    def forward(self, x):
        self._in_shape = x.shape
        return x.reshape((x.shape[0],) + self.shape)

    def backward(self, dy):
        return dy.reshape(self._in_shape)

    def out_shape(self, in_shape):
        if int(np.prod(in_shape)) != int(np.prod(self.shape)):
            raise ShapeMismatchError(f"cannot reshape {in_shape} to {self.shape}")
        return self.shape

    def spec(self):
        return {"kind": "reshape", "shape": list(self.shape)}


class Flatten(Layer):
    def forward(self, x):
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._in_shape)

    def out_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def spec(self):
        return {"kind": "flatten"}


class Relu(Layer):
    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0)

    def backward(self, dy):
        return np.where(self._mask, dy, 0)

    def out_shape(self, in_shape):
        return in_shape

    def spec(self):
        return {"kind": "relu"}


class LeakyRelu(Layer):
    def __init__(self, slope: float = 0.01):
        super().__init__()
        self.slope = slope

    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, self.slope * x)

    def backward(self, dy):
        return np.where(self._mask, dy, self.slope * dy)

    def out_shape(self, in_shape):
        return in_shape

    def spec(self):
        return {"kind": "leaky_relu", "slope": self.slope}


class Elu(Layer):
    def __init__(self, alpha: float = 1.0):
        super().__init__()
        self.alpha = alpha

    def forward(self, x):
        self._neg = x <= 0
        self._expm1 = self.alpha * np.expm1(np.minimum(x, 0))
        return np.where(self._neg, self._expm1, x)

    def backward(self, dy):
        # d/dx alpha*(e^x - 1) = alpha*e^x = y + alpha on the negative side
        return np.where(self._neg, dy * (self._expm1 + self.alpha), dy)

    def out_shape(self, in_shape):
        return in_shape

    def spec(self):
        return {"kind": "elu", "alpha": self.alpha}


class Sigmoid(Layer):
    def forward(self, x):
        self._y = sigmoid(x)
        return self._y

    def backward(self, dy):
        return dy * self._y * (1.0 - self._y)

    def out_shape(self, in_shape):
        return in_shape

    def spec(self):
        return {"kind": "sigmoid"}


class Softmax(Layer):
    def forward(self, x):
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        self._y = e / e.sum(axis=-1, keepdims=True)
        return self._y

    def backward(self, dy):
        dot = np.sum(dy * self._y, axis=-1, keepdims=True)
        return self._y * (dy - dot)

    def out_shape(self, in_shape):
        return in_shape

    def spec(self):
        return {"kind": "softmax"}


class PowerNorm(Layer):
    """Scale each row to total energy n_complex: unit average power per complex sample."""

    _EPS = 1e-12

    def __init__(self, n_complex: int):
        super().__init__()
        self.n_complex = n_complex

    def forward(self, x):
        self._x = x
        self._r = np.sqrt(np.maximum(np.sum(x * x, axis=-1, keepdims=True), self._EPS))
        self._scale = np.sqrt(self.n_complex) / self._r
        return x * self._scale

    def backward(self, dy):
        xdy = np.sum(self._x * dy, axis=-1, keepdims=True)
        return self._scale * (dy - self._x * (xdy / (self._r * self._r)))

    def out_shape(self, in_shape):
        if in_shape != (2 * self.n_complex,):
            raise ShapeMismatchError(
                f"power-norm over {2 * self.n_complex} reals got {in_shape}")
        return in_shape

    def spec(self):
        return {"kind": "power_norm", "n_complex": self.n_complex}


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def layer_from_spec(spec: dict, rng: np.random.Generator | None = None, dtype=np.float32) -> Layer:
    kind = spec["kind"]
    if kind == "dense":
        return Dense(spec["in"], spec["out"], rng=rng, dtype=dtype)
    if kind == "conv2d":
        return Conv2d(spec["in_ch"], spec["out_ch"], tuple(spec["kernel"]),
                      tuple(spec["stride"]), tuple(spec["padding"]), rng=rng, dtype=dtype)
    if kind == "reshape":
        return Reshape(tuple(spec["shape"]))
    if kind == "flatten":
        return Flatten()
    if kind == "relu":
        return Relu()
    if kind == "leaky_relu":
        return LeakyRelu(spec.get("slope", 0.01))
    if kind == "elu":
        return Elu(spec.get("alpha", 1.0))
    if kind == "sigmoid":
        return Sigmoid()
    if kind == "softmax":
        return Softmax()
    if kind == "power_norm":
        return PowerNorm(spec["n_complex"])
    raise ValueError(f"unknown layer kind {kind!r}")


class Model:
    """A sequential differentiable graph over the layers above.

    forward() runs the whole stack; forward_logits() stops before a trailing
    Softmax so losses can consume raw logits.  Layer compatibility is checked
    at construction by propagating per-sample shapes.
    """

    def __init__(self, layers: list[Layer], input_shape: tuple, check: bool = True):
        self.layers = layers
        self.input_shape = tuple(input_shape)
        if check:
            shape = self.input_shape
            for i, layer in enumerate(layers):
                try:
                    shape = layer.out_shape(shape)
                except ShapeMismatchError as e:
                    raise ShapeMismatchError(f"layer {i}: {e}") from None
            self.output_shape = shape

    def _run(self, x, layers):
        for i, layer in enumerate(layers):
            try:
                x = layer.forward(x)
            except ShapeMismatchError as e:
                raise ShapeMismatchError(f"layer {i}: {e}") from None
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self._run(x, self.layers)

    def forward_logits(self, x: np.ndarray) -> np.ndarray:
        layers = self.layers
        if layers and isinstance(layers[-1], Softmax):
            layers = layers[:-1]
        return self._run(x, layers)

    def backward(self, dy: np.ndarray, from_logits: bool = False) -> np.ndarray:
        layers = self.layers
        if from_logits and layers and isinstance(layers[-1], Softmax):
            layers = layers[:-1]
        for layer in reversed(layers):
            dy = layer.backward(dy)
        return dy

    def zero_grads(self):
        for layer in self.layers:
            layer.zero_grads()

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            for name, value in layer.params.items():
                out[f"L{i}.{name}"] = value
        return out

    def gradients(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            for name, value in layer.grads.items():
                out[f"L{i}.{name}"] = value
        return out

    def set_parameters(self, values: dict[str, np.ndarray]):
        for i, layer in enumerate(self.layers):
            for name in layer.params:
                key = f"L{i}.{name}"
                new = values[key]
                if new.shape != layer.params[name].shape:
                    raise ShapeMismatchError(
                        f"parameter {key}: expected {layer.params[name].shape}, got {new.shape}")
                layer.params[name] = new.astype(layer.params[name].dtype)

    def param_checksum(self) -> int:
        import zlib
        crc = 0
        for _, v in sorted(self.parameters().items()):
            crc = zlib.crc32(v.tobytes(), crc)
        return crc

    def specs(self) -> list[dict]:
        return [layer.spec() for layer in self.layers]

    def clone(self, dtype=None) -> "Model":
        m = Model([layer_from_spec(s) for s in self.specs()], self.input_shape, check=False)
        m.output_shape = getattr(self, "output_shape", None)
        for src, dst in zip(self.layers, m.layers):
            for name, value in src.params.items():
                dst.params[name] = value.astype(dtype or value.dtype)
            dst.zero_grads()
        return m

    def to_dtype(self, dtype) -> "Model":
        return self.clone(dtype=dtype)
