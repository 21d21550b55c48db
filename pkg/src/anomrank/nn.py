"""Deterministic dense numeric core.

Small feedforward layers with hand-written forward and backward passes, the
Adam optimizer, seeded random sources, and a central-finite-difference
gradient checker. Everything runs in float64 so the gradient checks stay
tight.

Forward passes take a mode string:

  "train"      batch statistics, fresh dropout masks drawn from the rng
  "eval"       running statistics, dropout disabled
  "gradcheck"  batch statistics without running-stat updates, dropout masks
               replayed from the previous draw, so a loss stays deterministic
               while finite differences probe it

Gradient buffers accumulate across backward calls until explicitly zeroed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ShapeError(ValueError):
    """Tensor dimensions do not match what an operation requires."""


class DegenerateBatchError(ValueError):
    """Batch statistics were requested for a batch of fewer than 2 rows."""


class NumericError(ArithmeticError):
    """A loss or activation produced a non-finite value."""


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator: identical seed and call sequence give an identical
    stream."""
    return np.random.default_rng(seed)


def rng_state(rng: np.random.Generator) -> dict:
    return rng.bit_generator.state


def restore_rng(state: dict) -> np.random.Generator:
    rng = np.random.default_rng(0)
    rng.bit_generator.state = state
    return rng


def check_finite(values: np.ndarray, context: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NumericError(f"non-finite values in {context}")
    return values


class Param:
    """A learnable array paired with its gradient accumulator."""

    __slots__ = ("value", "grad", "name")

    def __init__(self, value: np.ndarray, name: str = ""):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.name = name

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int,
                   shape: tuple[int, ...]) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Linear:
    """Affine map y = x W^T + b. x is (n, in), W is (out, in), b is (out,)."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator,
                 name: str = "linear"):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Param(glorot_uniform(rng, in_dim, out_dim, (out_dim, in_dim)),
                            f"{name}.weight")
        self.bias = Param(np.zeros(out_dim), f"{name}.bias")
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray, mode: str = "train",
                rng: np.random.Generator | None = None) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(
                f"{self.weight.name}: expected (n, {self.in_dim}) input, got {x.shape}")
        self._x = x
        return x @ self.weight.value.T + self.bias.value

    def backward(self, grad_out: np.ndarray, param_grads: bool = True) -> np.ndarray:
        if grad_out.shape != (self._x.shape[0], self.out_dim):
            raise ShapeError(
                f"{self.weight.name}: upstream gradient shape {grad_out.shape} "
                f"does not match output ({self._x.shape[0]}, {self.out_dim})")
        if param_grads:
            self.weight.grad += grad_out.T @ self._x
            self.bias.grad += grad_out.sum(axis=0)
        return grad_out @ self.weight.value

    def params(self) -> list[Param]:
        return [self.weight, self.bias]


class LeakyReLU:
    """y = x for x >= 0 else slope*x; x == 0 sits on the positive branch."""

    def __init__(self, slope: float = 0.2):
        if not 0.0 < slope < 1.0:
            raise ValueError(f"slope must lie in (0, 1), got {slope}")
        self.slope = slope
        self._gate: np.ndarray | None = None

    def forward(self, x, mode="train", rng=None):
        self._gate = np.where(x >= 0.0, 1.0, self.slope)
        return x * self._gate

    def backward(self, grad_out, param_grads=True):
        return grad_out * self._gate

    def params(self):
        return []


def sigmoid_values(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic; saturates instead of overflowing."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Sigmoid:
    def __init__(self):
        self._y: np.ndarray | None = None

    def forward(self, x, mode="train", rng=None):
        self._y = sigmoid_values(x)
        return self._y

    def backward(self, grad_out, param_grads=True):
        return grad_out * self._y * (1.0 - self._y)

    def params(self):
        return []


def softmax(vector: np.ndarray) -> np.ndarray:
    """Softmax of a vector, computed with max subtraction for stability.

    Output entries are strictly positive and sum to 1 within 1e-9 for any
    finite input, including large magnitudes: shifted logits are floored at
    -700 so no exponent underflows to zero.
    """
    v = np.asarray(vector, dtype=np.float64)
    if v.size == 0:
        raise ValueError("softmax of an empty vector")
    e = np.exp(np.maximum(v - v.max(), -700.0))
    return e / e.sum()


class BatchNorm:
    """Per-feature batch normalization with learned scale and shift.

    Train mode normalizes by batch mean/variance (biased) and updates running
    statistics with momentum 0.9; eval mode normalizes by the running
    statistics; gradcheck mode uses batch statistics but leaves the running
    buffers untouched. The backward pass is the full batch-coupled gradient.
    """

    def __init__(self, dim: int, momentum: float = 0.9, eps: float = 1e-5,
                 name: str = "batchnorm"):
        self.dim = dim
        self.name = name
        self.momentum = momentum
        self.eps = eps
        self.scale = Param(np.ones(dim), f"{name}.scale")
        self.shift = Param(np.zeros(dim), f"{name}.shift")
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self._cache = None

    def forward(self, x, mode="train", rng=None):
        if x.shape[1] != self.dim:
            raise ShapeError(f"batchnorm over {self.dim} features got {x.shape}")
        if mode == "eval":
            inv = 1.0 / np.sqrt(self.running_var + self.eps)
            xhat = (x - self.running_mean) * inv
            self._cache = ("eval", inv)
        else:
            if x.shape[0] < 2:
                raise DegenerateBatchError(
                    "batch normalization in train mode needs at least 2 rows")
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            inv = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean) * inv
            if mode == "train":
                m = self.momentum
                self.running_mean = m * self.running_mean + (1.0 - m) * mean
                self.running_var = m * self.running_var + (1.0 - m) * var
            self._cache = ("batch", xhat, inv, x.shape[0])
        self._xhat = xhat
        return self.scale.value * xhat + self.shift.value

    def backward(self, grad_out, param_grads=True):
        if param_grads:
            self.scale.grad += (grad_out * self._xhat).sum(axis=0)
            self.shift.grad += grad_out.sum(axis=0)
        if self._cache[0] == "eval":
            return grad_out * self.scale.value * self._cache[1]
        _, xhat, inv, n = self._cache
        dxhat = grad_out * self.scale.value
        # batch-coupled terms: both mean and variance depend on every row
        return (inv / n) * (n * dxhat
                            - dxhat.sum(axis=0)
                            - xhat * (dxhat * xhat).sum(axis=0))

    def params(self):
        return [self.scale, self.shift]


class Dropout:
    """Inverted dropout: kept units are scaled by 1/(1-p) in train mode.

    The mask drawn in the forward pass is replayed by the backward pass, and
    by gradcheck-mode forwards so finite differences see a fixed loss.
    """

    def __init__(self, p: float = 0.2):
        if not 0.0 <= p < 1.0:
            raise ValueError(f"dropout probability must lie in [0, 1), got {p}")
        self.p = p
        self._mask: np.ndarray | None = None

    def forward(self, x, mode="train", rng=None):
        if self.p == 0.0 or mode == "eval":
            self._mask = None
            return x
        if mode == "train":
            if rng is None:
                raise ValueError("train-mode dropout needs an rng")
            self._mask = (rng.random(x.shape) >= self.p) / (1.0 - self.p)
        else:  # gradcheck: replay
            if self._mask is None or self._mask.shape != x.shape:
                raise ValueError("gradcheck-mode dropout needs a previously drawn mask")
        return x * self._mask

    def backward(self, grad_out, param_grads=True):
        if self._mask is None:
            return grad_out
        return grad_out * self._mask

    def params(self):
        return []


class Sequential:
    """Ordered layer stack with a shared forward/backward protocol."""

    def __init__(self, layers: list):
        self.layers = layers

    def forward(self, x, mode="train", rng=None):
        for layer in self.layers:
            x = layer.forward(x, mode, rng)
        return x

    def backward(self, grad_out, param_grads=True):
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out, param_grads)
        return grad_out

    def params(self) -> list[Param]:
        return [p for layer in self.layers for p in layer.params()]


@dataclass
class AdamState:
    """First/second moment accumulators for one parameter list."""

    learning_rate: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState) -> None:
    """One bias-corrected Adam update, in place."""
    if len(params) != len(grads):
        raise ShapeError("parameter and gradient lists differ in length")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"shape mismatch in Adam step: {p.shape} vs {g.shape}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)


class Adam:
    """Binds an AdamState to a list of Params."""

    def __init__(self, params: list[Param], learning_rate: float = 1e-4,
                 beta1: float = 0.5, beta2: float = 0.999, epsilon: float = 1e-8):
        self.params = params
        self.state = AdamState(learning_rate, beta1, beta2, epsilon)

    def step(self) -> None:
        adam_step([p.value for p in self.params],
                  [p.grad for p in self.params], self.state)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


def finite_difference_check(loss_fn, params: list[Param],
                            epsilon: float = 1e-4) -> float:
    """Max relative error between analytic gradients and central differences.

    loss_fn() must return a scalar and accumulate gradients into every Param
    in `params`; it must be deterministic across calls (fixed rng state,
    replayed dropout masks). The relative error for each coordinate uses the
    denominator max(|analytic|, |numeric|, 1e-8).
    """

    def evaluate() -> float:
        for p in params:
            p.zero_grad()
        loss = float(loss_fn())
        if not math.isfinite(loss):
            raise NumericError(f"loss is not finite: {loss}")
        return loss

    evaluate()
    analytic = [p.grad.copy() for p in params]
    worst = 0.0
    for p, grads in zip(params, analytic):
        flat = p.value.reshape(-1)
        gflat = grads.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + epsilon
            hi = evaluate()
            flat[i] = keep - epsilon
            lo = evaluate()
            flat[i] = keep
            numeric = (hi - lo) / (2.0 * epsilon)
            err = abs(gflat[i] - numeric) / max(abs(gflat[i]), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
