"""Minimal dense neural-network core.

Tensors, dense layers, light attention pooling, MSE loss, analytic
gradients and Adam: everything the four fusion variants need to train
deterministically on a desk-scale corpus.  All math is float64; heavy
per-sample loops dispatch to `thermofuse.kernels`.
"""

from dataclasses import dataclass, field

import numpy as np

from thermofuse import kernels
from thermofuse.errors import (
    DomainError,
    EmptyWindowError,
    ShapeError,
    StateError,
)

ACTIVATIONS = ("identity", "relu")


def as_f64(a, name: str = "array") -> np.ndarray:
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr


class Tensor2:
    """Dense row-major 2-D matrix of finite float64 values."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = as_f64(data, "Tensor2 data")
        if arr.ndim != 2:
            raise ShapeError(f"Tensor2 needs a 2-D array, got ndim={arr.ndim}")
        self.data = arr

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __repr__(self):
        return f"Tensor2({self.rows}x{self.cols})"


@dataclass
class DenseLayer:
    """Affine map plus an optional relu: y = act(W x + b)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str = "identity"

    def __post_init__(self):
        self.weights = as_f64(self.weights, "weights")
        self.bias = as_f64(self.bias, "bias")
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ShapeError("weights must be 2-D and bias 1-D")
        if self.bias.shape[0] != self.weights.shape[0]:
            raise ShapeError(
                f"bias length {self.bias.shape[0]} != weight rows {self.weights.shape[0]}"
            )
        if self.activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class LightAttention:
    """Per-position linear value/attention maps feeding softmax pooling.

    Both maps share the input dimension d_f and output dimension d_a and
    are plain linear layers (identity activation).
    """

    value_map: DenseLayer
    attn_map: DenseLayer

    def __post_init__(self):
        if (self.value_map.in_dim, self.value_map.out_dim) != (
            self.attn_map.in_dim,
            self.attn_map.out_dim,
        ):
            raise ShapeError("value_map and attn_map must share dimensions")
        if "identity" != self.value_map.activation or "identity" != self.attn_map.activation:
            raise DomainError("attention maps must use identity activation")

    @property
    def d_f(self) -> int:
        return self.value_map.in_dim

    @property
    def d_a(self) -> int:
        return self.value_map.out_dim


def init_dense(rng: np.random.Generator, out_dim: int, in_dim: int,
               activation: str = "identity") -> DenseLayer:
    """Glorot-uniform weights, zero bias."""
    a = np.sqrt(6.0 / (in_dim + out_dim))
    W = rng.uniform(-a, a, size=(out_dim, in_dim))
    return DenseLayer(W, np.zeros(out_dim), activation)


def init_light_attention(rng: np.random.Generator, d_f: int, d_a: int) -> LightAttention:
    return LightAttention(init_dense(rng, d_a, d_f), init_dense(rng, d_a, d_f))


# ---------------------------------------------------------------------------
# forward ops


def dense_forward(layer: DenseLayer, x) -> np.ndarray:
    """activation(W x + b)."""
    x = as_f64(x, "x")
    if x.shape != (layer.in_dim,):
        raise ShapeError(f"input length {x.shape} does not match layer in_dim {layer.in_dim}")
    y, _ = kernels.dense_fwd(layer.weights, layer.bias, x, layer.activation == "relu")
    return y


def light_attention_forward(la: LightAttention, E: Tensor2) -> np.ndarray:
    """Pool per-position features into concat(weighted sum, max) of values.

    E holds one fused feature vector per column (d_f x L).  Attention
    weights are a softmax across the L positions, independent per output
    channel.
    """
    out, _cache = light_attention_forward_cached(la, E)
    return out


def light_attention_forward_cached(la: LightAttention, E: Tensor2):
    if isinstance(E, Tensor2):
        E = E.data
    else:
        E = as_f64(E, "E")
    if E.ndim != 2 or E.shape[0] != la.d_f:
        raise ShapeError(f"E must be {la.d_f} x L, got {E.shape}")
    if E.shape[1] == 0:
        raise EmptyWindowError("light attention over an empty window")
    out, V, alpha, amax = kernels.la_fwd(
        la.value_map.weights, la.value_map.bias,
        la.attn_map.weights, la.attn_map.bias, E,
    )
    return out, (E, V, alpha, amax)


def light_attention_backward(la: LightAttention, cache, dout):
    """Gradients of the attention output w.r.t. maps and input columns.

    Returns ((dWv, dbv), (dWa, dba), dE) for a cache produced by
    light_attention_forward_cached.
    """
    if cache is None:
        raise StateError("light_attention_backward called before forward")
    E, V, alpha, amax = cache
    dout = as_f64(dout, "dout")
    if dout.shape != (2 * la.d_a,):
        raise ShapeError(f"dout must have length {2 * la.d_a}")
    dWv, dbv, dWa, dba, dE = kernels.la_bwd(
        la.value_map.weights, la.attn_map.weights, E, V, alpha, amax, dout
    )
    return (dWv, dbv), (dWa, dba), dE


def mlp_forward(layers: list[DenseLayer], x) -> float:
    """Chain dense layers down to the scalar stability-change prediction."""
    y, _ = mlp_forward_cached(layers, x)
    return y


def mlp_forward_cached(layers: list[DenseLayer], x, dropout_rate: float = 0.0,
                       rng: np.random.Generator | None = None):
    """Forward pass keeping per-layer inputs/pre-activations for backward.

    Dropout (training mode) is applied to the outputs of all but the last
    layer when dropout_rate > 0; masks are recorded in the cache.
    """
    x = as_f64(x, "x")
    if not layers:
        raise ShapeError("empty layer list")
    if layers[-1].out_dim != 1:
        raise ShapeError("final MLP layer must have output dimension 1")
    if dropout_rate and rng is None:
        raise DomainError("dropout in training mode needs an rng")
    steps = []
    for i, layer in enumerate(layers):
        if x.shape != (layer.in_dim,):
            raise ShapeError(
                f"layer {i} expects input of length {layer.in_dim}, got {x.shape[0]}"
            )
        y, pre = kernels.dense_fwd(layer.weights, layer.bias, x, layer.activation == "relu")
        mask = None
        if dropout_rate and i < len(layers) - 1:
            mask = dropout_mask(rng, y.shape[0], dropout_rate)
            y = y * mask
        steps.append((x, pre, mask))
        x = y
    return float(x[0]), steps


def mlp_backward(layers: list[DenseLayer], cache, dscalar: float):
    """Backpropagate d(output)/d(parameters) through the cached MLP pass.

    Returns (grads, dx) where grads[i] = (dW_i, db_i).
    """
    if cache is None:
        raise StateError("mlp_backward called before forward")
    dy = np.array([float(dscalar)])
    grads: list = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        x, pre, mask = cache[i]
        if mask is not None:
            dy = dy * mask
        dW, db, dy = kernels.dense_bwd(
            layers[i].weights, x, pre, dy, layers[i].activation == "relu"
        )
        grads[i] = (dW, db)
    return grads, dy


def mse_loss(pred, target) -> float:
    """Mean of squared differences."""
    pred = as_f64(pred, "pred")
    target = as_f64(target, "target")
    if pred.shape != target.shape:
        raise ShapeError(f"length mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise DomainError("mse_loss of empty vectors")
    d = pred - target
    return float(np.mean(d * d))


def dropout_mask(rng: np.random.Generator, n: int, rate: float) -> np.ndarray:
    """Inverted-dropout mask: 0 with probability rate, else 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise DomainError(f"dropout rate must lie in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(n)
    keep = rng.random(n) >= rate
    return keep / (1.0 - rate)


def dropout(x, rate: float, rng: np.random.Generator | int | None = None,
            training: bool = False) -> np.ndarray:
    """Zero entries with probability `rate` and rescale survivors.

    Identity in inference mode.  `rng` may be a Generator or a seed.
    """
    x = as_f64(x, "x")
    if not 0.0 <= rate < 1.0:
        raise DomainError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x.copy()
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return x * dropout_mask(rng, x.shape[0], rate)


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    """Adam moments for a named parameter set, with decoupled weight decay."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], **hyper) -> "AdamState":
        state = cls(**hyper)
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
        return state


def adam_step(state: AdamState, params: dict[str, np.ndarray],
              grads: dict[str, np.ndarray]) -> None:
    """Standard bias-corrected Adam update, in place on `params`."""
    if set(params) != set(state.m):
        raise ShapeError("parameter names do not match optimizer state")
    if set(grads) != set(params):
        raise ShapeError("gradient names do not match parameters")
    state.step += 1
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape mismatch for {name!r}")
        kernels.adam_update(
            p.reshape(-1), np.ascontiguousarray(g, dtype=np.float64).reshape(-1),
            state.m[name].reshape(-1), state.v[name].reshape(-1),
            state.step, state.lr, state.beta1, state.beta2, state.eps,
            state.weight_decay,
        )
