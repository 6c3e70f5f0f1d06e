"""Minimal reverse-mode autodiff over numpy arrays.

Just enough machinery for a transformer encoder: broadcast-aware add/mul,
batched matmul, embedding gathers, layer norm, GELU, tanh, a masked-stable
softmax, dropout, and fused cross-entropy. Everything runs on plain numpy,
is deterministic for a fixed thread configuration, and works in float32 or
float64 (gradient checks need the latter).

The softmax denominator is computed with a strictly sequential running sum
rather than numpy's pairwise reduction: appending exactly-zero probability
mass (masked-out [PAD] columns) then cannot regroup the partial sums, which
keeps logits on real positions bit-identical when a batch is padded.
"""

from __future__ import annotations

import math

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcasted gradient back down to the original shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _sequential_sum_last(x: np.ndarray) -> np.ndarray:
    # cumsum accumulates strictly left-to-right, unlike np.sum's pairwise tree.
    return np.cumsum(x, axis=-1)[..., -1:]


class Tensor:
    """An ndarray plus the closure needed to backpropagate into its parents."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False, parents=(), backward_fn=None):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents = tuple(parents)
        self._backward_fn = backward_fn

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.data.dtype, copy=True)
        else:
            self.grad += grad

    def backward(self) -> None:
        """Backpropagate from this tensor; seeds with ones."""
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(order):
            if node._backward_fn is not None and node.grad is not None:
                node._backward_fn(node.grad)

    def item(self) -> float:
        return float(self.data)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "Tensor") -> "Tensor":
        out = Tensor(
            self.data + other.data,
            requires_grad=self.requires_grad or other.requires_grad,
            parents=[p for p in (self, other) if p.requires_grad],
        )

        def backward_fn(grad):
            if self.requires_grad:
                self._accumulate(_unbroadcast(grad, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(grad, other.shape))

        out._backward_fn = backward_fn
        return out

    def __mul__(self, other: "Tensor") -> "Tensor":
        out = Tensor(
            self.data * other.data,
            requires_grad=self.requires_grad or other.requires_grad,
            parents=[p for p in (self, other) if p.requires_grad],
        )

        def backward_fn(grad):
            if self.requires_grad:
                self._accumulate(_unbroadcast(grad * other.data, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(grad * self.data, other.shape))

        out._backward_fn = backward_fn
        return out

    def scale(self, factor: float) -> "Tensor":
        out = Tensor(self.data * factor, self.requires_grad, [self] if self.requires_grad else [])

        def backward_fn(grad):
            self._accumulate(grad * factor)

        out._backward_fn = backward_fn if self.requires_grad else None
        return out

    def add_const(self, const: np.ndarray) -> "Tensor":
        out = Tensor(self.data + const, self.requires_grad, [self] if self.requires_grad else [])

        def backward_fn(grad):
            self._accumulate(_unbroadcast(grad, self.shape))

        out._backward_fn = backward_fn if self.requires_grad else None
        return out

    def mul_const(self, const: np.ndarray) -> "Tensor":
        out = Tensor(self.data * const, self.requires_grad, [self] if self.requires_grad else [])

        def backward_fn(grad):
            self._accumulate(_unbroadcast(grad * const, self.shape))

        out._backward_fn = backward_fn if self.requires_grad else None
        return out

    def matmul(self, other: "Tensor") -> "Tensor":
        out = Tensor(
            self.data @ other.data,
            requires_grad=self.requires_grad or other.requires_grad,
            parents=[p for p in (self, other) if p.requires_grad],
        )

        def backward_fn(grad):
            if self.requires_grad:
                ga = grad @ np.swapaxes(other.data, -1, -2)
                self._accumulate(_unbroadcast(ga, self.shape))
            if other.requires_grad:
                gb = np.swapaxes(self.data, -1, -2) @ grad
                other._accumulate(_unbroadcast(gb, other.shape))

        out._backward_fn = backward_fn
        return out

    __matmul__ = matmul

    def reshape(self, *shape: int) -> "Tensor":
        old = self.shape
        out = Tensor(self.data.reshape(shape), self.requires_grad, [self] if self.requires_grad else [])

        def backward_fn(grad):
            self._accumulate(grad.reshape(old))

        out._backward_fn = backward_fn if self.requires_grad else None
        return out

    def transpose(self, *axes: int) -> "Tensor":
        inverse = np.argsort(axes)
        out = Tensor(self.data.transpose(axes), self.requires_grad, [self] if self.requires_grad else [])

        def backward_fn(grad):
            self._accumulate(grad.transpose(inverse))

        out._backward_fn = backward_fn if self.requires_grad else None
        return out


def gather_rows(table: Tensor, ids: np.ndarray) -> Tensor:
    """Embedding lookup: out[..., :] = table[ids[...], :]."""
    out = Tensor(table.data[ids], table.requires_grad, [table] if table.requires_grad else [])

    def backward_fn(grad):
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, ids.reshape(-1), grad.reshape(-1, table.data.shape[-1]))

    out._backward_fn = backward_fn if table.requires_grad else None
    return out


def take_positions(x: Tensor, positions: np.ndarray) -> Tensor:
    """Gather per-example sequence positions: [B,T,H], [B,P] -> [B,P,H]."""
    batch_index = np.arange(x.shape[0])[:, None]
    out = Tensor(x.data[batch_index, positions], x.requires_grad, [x] if x.requires_grad else [])

    def backward_fn(grad):
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        np.add.at(x.grad, (batch_index, positions), grad)

    out._backward_fn = backward_fn if x.requires_grad else None
    return out


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-12) -> Tensor:
    mean = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mean
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    normed = centered * inv_std
    out_data = normed * gain.data + bias.data
    parents = [p for p in (x, gain, bias) if p.requires_grad]
    out = Tensor(out_data, bool(parents), parents)

    def backward_fn(grad):
        if gain.requires_grad:
            gain._accumulate((grad * normed).reshape(-1, x.shape[-1]).sum(axis=0))
        if bias.requires_grad:
            bias._accumulate(grad.reshape(-1, x.shape[-1]).sum(axis=0))
        if x.requires_grad:
            n = x.shape[-1]
            g = grad * gain.data
            gx = (
                g - g.mean(axis=-1, keepdims=True)
                - normed * (g * normed).mean(axis=-1, keepdims=True)
            ) * inv_std
            x._accumulate(gx)

    out._backward_fn = backward_fn if parents else None
    return out


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(x: Tensor) -> Tensor:
    """Gaussian error linear unit, tanh approximation."""
    sq = x.data * x.data
    inner = _GELU_C * (x.data + 0.044715 * (sq * x.data))
    t = np.tanh(inner)
    out = Tensor(0.5 * x.data * (1.0 + t), x.requires_grad, [x] if x.requires_grad else [])

    def backward_fn(grad):
        d_inner = _GELU_C * (1.0 + 3 * 0.044715 * sq)
        local = 0.5 * (1.0 + t) + 0.5 * x.data * (1.0 - t * t) * d_inner
        x._accumulate(grad * local)

    out._backward_fn = backward_fn if x.requires_grad else None
    return out


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.data)
    out = Tensor(t, x.requires_grad, [x] if x.requires_grad else [])

    def backward_fn(grad):
        x._accumulate(grad * (1.0 - t * t))

    out._backward_fn = backward_fn if x.requires_grad else None
    return out


def softmax_last(x: Tensor) -> Tensor:
    """Softmax over the last axis with a shape-stable denominator."""
    shifted = x.data - np.max(x.data, axis=-1, keepdims=True)
    e = np.exp(shifted)
    p = e / _sequential_sum_last(e)
    out = Tensor(p, x.requires_grad, [x] if x.requires_grad else [])

    def backward_fn(grad):
        inner = (grad * p).sum(axis=-1, keepdims=True)
        x._accumulate(p * (grad - inner))

    out._backward_fn = backward_fn if x.requires_grad else None
    return out


def dropout(x: Tensor, prob: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; identity when prob is 0."""
    if prob <= 0.0:
        return x
    keep = (rng.random(x.shape) >= prob).astype(x.dtype) / (1.0 - prob)
    return x.mul_const(keep)


def cross_entropy(
    logits: Tensor, labels: np.ndarray, weights: np.ndarray | None = None
) -> Tensor:
    """Weighted mean cross-entropy from logits.

    logits: [N, C]; labels: [N] ints; weights: [N] floats or None (all-ones).
    A zero weight sum yields an exact-zero loss with zero gradient.
    """
    n, _c = logits.shape
    if weights is None:
        weights = np.ones(n, dtype=logits.dtype)
    weights = weights.astype(logits.dtype)
    total = float(weights.sum())
    if total == 0.0:
        return Tensor(np.zeros((), dtype=logits.dtype))

    shifted = logits.data - np.max(logits.data, axis=-1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    picked = log_probs[np.arange(n), labels]
    loss = -(picked * weights).sum() / total
    out = Tensor(
        np.asarray(loss, dtype=logits.dtype),
        logits.requires_grad,
        [logits] if logits.requires_grad else [],
    )

    def backward_fn(grad):
        probs = np.exp(log_probs)
        probs[np.arange(n), labels] -= 1.0
        probs *= (weights / total)[:, None]
        logits._accumulate(probs * grad)

    out._backward_fn = backward_fn if logits.requires_grad else None
    return out
