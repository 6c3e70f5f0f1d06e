"""Configurable BERT-style transformer encoder with MLM and NSP heads.

Post-layernorm blocks, GELU feed-forward, learned absolute position
embeddings, and an MLM output projection tied to the token embeddings.
Logits for the MLM head are computed only at the masked positions handed
in with the batch. Everything is pure: (params, batch) -> logits, with
dropout driven by an explicit generator in train mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor import (
    Tensor,
    cross_entropy,
    dropout,
    gather_rows,
    gelu,
    layer_norm,
    softmax_last,
    take_positions,
    tanh,
)
from .wordpiece import NUM_SPECIAL_TOKENS

ATTENTION_MASK_BIAS = -1e9


class NonFiniteActivationError(ArithmeticError):
    """A forward pass produced a non-finite value; names the layer."""


@dataclass(frozen=True)
class ModelConfig:
    num_layers: int
    hidden_size: int
    num_heads: int
    vocab_size: int
    max_positions: int
    intermediate_size: int = 0  # 0 means the conventional 4x hidden_size
    type_vocab_size: int = 2
    dropout_prob: float = 0.1

    def __post_init__(self) -> None:
        if self.intermediate_size == 0:
            object.__setattr__(self, "intermediate_size", 4 * self.hidden_size)
        if self.num_layers < 0:
            raise ValueError("num_layers must be non-negative")
        if min(self.hidden_size, self.num_heads, self.max_positions, self.intermediate_size) < 1:
            raise ValueError("all sizes must be positive")
        if self.hidden_size % self.num_heads != 0:
            raise ValueError("hidden_size must be divisible by num_heads")
        if self.vocab_size < NUM_SPECIAL_TOKENS:
            raise ValueError(f"vocab_size must be at least {NUM_SPECIAL_TOKENS}")
        if self.type_vocab_size != 2:
            raise ValueError("type_vocab_size is fixed at 2 (segments A and B)")
        if not 0.0 <= self.dropout_prob < 1.0:
            raise ValueError("dropout_prob must lie in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "num_layers": self.num_layers,
            "hidden_size": self.hidden_size,
            "num_heads": self.num_heads,
            "vocab_size": self.vocab_size,
            "max_positions": self.max_positions,
            "intermediate_size": self.intermediate_size,
            "type_vocab_size": self.type_vocab_size,
            "dropout_prob": self.dropout_prob,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**{k: d[k] for k in (
            "num_layers", "hidden_size", "num_heads", "vocab_size",
            "max_positions", "intermediate_size", "type_vocab_size", "dropout_prob",
        )})


def parameter_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """The full named-tensor inventory, in a fixed deterministic order."""
    h, i, v, p = cfg.hidden_size, cfg.intermediate_size, cfg.vocab_size, cfg.max_positions
    shapes: dict[str, tuple[int, ...]] = {
        "embeddings.token": (v, h),
        "embeddings.position": (p, h),
        "embeddings.segment": (cfg.type_vocab_size, h),
        "embeddings.norm.gain": (h,),
        "embeddings.norm.bias": (h,),
    }
    for layer in range(cfg.num_layers):
        prefix = f"layer{layer}"
        for proj in ("q", "k", "v", "out"):
            shapes[f"{prefix}.attn.{proj}.weight"] = (h, h)
            shapes[f"{prefix}.attn.{proj}.bias"] = (h,)
        shapes[f"{prefix}.attn.norm.gain"] = (h,)
        shapes[f"{prefix}.attn.norm.bias"] = (h,)
        shapes[f"{prefix}.ffn.in.weight"] = (h, i)
        shapes[f"{prefix}.ffn.in.bias"] = (i,)
        shapes[f"{prefix}.ffn.out.weight"] = (i, h)
        shapes[f"{prefix}.ffn.out.bias"] = (h,)
        shapes[f"{prefix}.ffn.norm.gain"] = (h,)
        shapes[f"{prefix}.ffn.norm.bias"] = (h,)
    shapes.update({
        "mlm.transform.weight": (h, h),
        "mlm.transform.bias": (h,),
        "mlm.norm.gain": (h,),
        "mlm.norm.bias": (h,),
        "mlm.output.bias": (v,),
        "pooler.weight": (h, h),
        "pooler.bias": (h,),
        "nsp.weight": (h, 2),
        "nsp.bias": (2,),
    })
    return shapes


def param_count(cfg: ModelConfig) -> int:
    """Total learnable scalars; the tied MLM projection is counted once."""
    return sum(int(np.prod(shape)) for shape in parameter_shapes(cfg).values())


# Standard deviation of a unit normal truncated at two standard deviations.
# Initial weights are drawn so the post-truncation std equals the requested
# one; the raw draw uses std / this factor and redraws outside two raw stds.
_TRUNC_FACTOR = math.sqrt(
    1.0 - 4.0 * (math.exp(-2.0) / math.sqrt(2.0 * math.pi)) / math.erf(2.0 / math.sqrt(2.0))
)


def truncated_normal(
    rng: np.random.Generator, shape: tuple[int, ...], std: float, dtype=np.float32
) -> np.ndarray:
    raw_std = std / _TRUNC_FACTOR
    bound = 2.0 * raw_std
    out = rng.normal(0.0, raw_std, size=shape)
    bad = np.abs(out) > bound
    while bad.any():
        out[bad] = rng.normal(0.0, raw_std, size=int(bad.sum()))
        bad = np.abs(out) > bound
    return out.astype(dtype)


def init_parameters(
    cfg: ModelConfig, seed: int, std: float = 0.02, dtype=np.float32
) -> dict[str, np.ndarray]:
    """Fresh parameters: truncated-normal weights, zero biases, unit gains."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in parameter_shapes(cfg).items():
        if name.endswith(".gain"):
            params[name] = np.ones(shape, dtype=dtype)
        elif name.endswith(".bias") or name.endswith("bias"):
            params[name] = np.zeros(shape, dtype=dtype)
        else:
            params[name] = truncated_normal(rng, shape, std, dtype)
    return params


@dataclass
class Batch:
    """Stacked pretraining instances ready for the encoder."""

    token_ids: np.ndarray        # [B, T] int
    segment_ids: np.ndarray      # [B, T] int
    attention_mask: np.ndarray   # [B, T] 0/1
    masked_positions: np.ndarray  # [B, P] int, zero-padded
    masked_labels: np.ndarray     # [B, P] int, zero-padded
    masked_weights: np.ndarray    # [B, P] float, 1 on real prediction slots
    nsp_labels: np.ndarray        # [B] int, 1 = random next

    @classmethod
    def from_instances(cls, instances, dtype=np.float32) -> "Batch":
        n_pred = max(1, max(len(inst.masked_positions) for inst in instances))
        b = len(instances)
        t = len(instances[0].token_ids)
        positions = np.zeros((b, n_pred), dtype=np.int64)
        labels = np.zeros((b, n_pred), dtype=np.int64)
        weights = np.zeros((b, n_pred), dtype=dtype)
        for row, inst in enumerate(instances):
            k = len(inst.masked_positions)
            positions[row, :k] = inst.masked_positions
            labels[row, :k] = inst.masked_labels
            weights[row, :k] = 1.0
        return cls(
            token_ids=np.array([i.token_ids for i in instances], dtype=np.int64),
            segment_ids=np.array([i.segment_ids for i in instances], dtype=np.int64),
            attention_mask=np.array([i.attention_mask for i in instances], dtype=np.int64),
            masked_positions=positions,
            masked_labels=labels,
            masked_weights=weights,
            nsp_labels=np.array([int(i.is_random_next) for i in instances], dtype=np.int64),
        )


def _check_finite(t: Tensor, where: str) -> None:
    if not np.all(np.isfinite(t.data)):
        raise NonFiniteActivationError(f"non-finite activation in {where}")


def _linear(x: Tensor, params: dict[str, Tensor], name: str) -> Tensor:
    # One 2-D GEMM instead of a batched loop; noticeably faster in numpy.
    weight = params[f"{name}.weight"]
    lead = x.shape[:-1]
    flat = x.reshape(-1, x.shape[-1]) if len(lead) > 1 else x
    out = flat @ weight + params[f"{name}.bias"]
    return out.reshape(*lead, weight.shape[-1]) if len(lead) > 1 else out


def _attention(
    x: Tensor,
    params: dict[str, Tensor],
    prefix: str,
    cfg: ModelConfig,
    mask_bias: np.ndarray,
    train_mode: bool,
    rng: np.random.Generator | None,
) -> Tensor:
    b, t, h = x.shape
    heads = cfg.num_heads
    dim = h // heads

    def split_heads(m: Tensor) -> Tensor:
        return m.reshape(b, t, heads, dim).transpose(0, 2, 1, 3)

    q = split_heads(_linear(x, params, f"{prefix}.q"))
    k = split_heads(_linear(x, params, f"{prefix}.k"))
    v = split_heads(_linear(x, params, f"{prefix}.v"))

    scores = (q @ k.transpose(0, 1, 3, 2)).scale(1.0 / math.sqrt(dim))
    probs = softmax_last(scores.add_const(mask_bias))
    if train_mode and cfg.dropout_prob > 0.0:
        probs = dropout(probs, cfg.dropout_prob, rng)
    context = (probs @ v).transpose(0, 2, 1, 3).reshape(b, t, h)
    return _linear(context, params, f"{prefix}.out")


def forward(
    params: dict[str, Tensor],
    cfg: ModelConfig,
    batch: Batch,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, Tensor]:
    """Run the encoder; returns (mlm_logits [B,P,V], nsp_logits [B,2]).

    Deterministic whenever train_mode is off or dropout_prob is 0.
    """
    b, t = batch.token_ids.shape
    if batch.token_ids.min() < 0 or batch.token_ids.max() >= cfg.vocab_size:
        raise ValueError("token id out of range for the configured vocabulary")
    if t > cfg.max_positions:
        raise ValueError(
            f"sequence length {t} exceeds max_positions {cfg.max_positions}"
        )
    if train_mode and cfg.dropout_prob > 0.0 and rng is None:
        raise ValueError("train_mode with dropout needs a random generator")

    x = (
        gather_rows(params["embeddings.token"], batch.token_ids)
        + gather_rows(params["embeddings.position"], np.broadcast_to(np.arange(t), (b, t)))
        + gather_rows(params["embeddings.segment"], batch.segment_ids)
    )
    x = layer_norm(x, params["embeddings.norm.gain"], params["embeddings.norm.bias"])
    if train_mode and cfg.dropout_prob > 0.0:
        x = dropout(x, cfg.dropout_prob, rng)
    _check_finite(x, "embeddings")

    dtype = params["embeddings.token"].dtype
    mask_bias = (
        (1.0 - batch.attention_mask[:, None, None, :].astype(dtype)) * ATTENTION_MASK_BIAS
    )

    for layer in range(cfg.num_layers):
        prefix = f"layer{layer}"
        attn = _attention(x, params, f"{prefix}.attn", cfg, mask_bias, train_mode, rng)
        if train_mode and cfg.dropout_prob > 0.0:
            attn = dropout(attn, cfg.dropout_prob, rng)
        x = layer_norm(
            x + attn,
            params[f"{prefix}.attn.norm.gain"],
            params[f"{prefix}.attn.norm.bias"],
        )
        ff = _linear(gelu(_linear(x, params, f"{prefix}.ffn.in")), params, f"{prefix}.ffn.out")
        if train_mode and cfg.dropout_prob > 0.0:
            ff = dropout(ff, cfg.dropout_prob, rng)
        x = layer_norm(
            x + ff,
            params[f"{prefix}.ffn.norm.gain"],
            params[f"{prefix}.ffn.norm.bias"],
        )
        _check_finite(x, prefix)

    # MLM head at the masked positions only: transform, norm, tied projection.
    picked = take_positions(x, batch.masked_positions)
    transformed = gelu(_linear(picked, params, "mlm.transform"))
    transformed = layer_norm(transformed, params["mlm.norm.gain"], params["mlm.norm.bias"])
    n_pred = batch.masked_positions.shape[1]
    flat = transformed.reshape(b * n_pred, cfg.hidden_size)
    mlm_logits = (
        flat @ params["embeddings.token"].transpose(1, 0) + params["mlm.output.bias"]
    ).reshape(b, n_pred, cfg.vocab_size)
    _check_finite(mlm_logits, "mlm head")

    # NSP head: tanh pooler over position 0, then a two-way classifier.
    first = take_positions(x, np.zeros((b, 1), dtype=np.int64)).reshape(b, -1)
    pooled = tanh(_linear(first, params, "pooler"))
    nsp_logits = _linear(pooled, params, "nsp")
    _check_finite(nsp_logits, "nsp head")
    return mlm_logits, nsp_logits


def loss(
    mlm_logits: Tensor, nsp_logits: Tensor, batch: Batch
) -> tuple[Tensor, Tensor, Tensor]:
    """(total, mlm, nsp) losses; mlm averages over real masked positions."""
    b, p, v = mlm_logits.shape
    mlm = cross_entropy(
        mlm_logits.reshape(b * p, v),
        batch.masked_labels.reshape(-1),
        batch.masked_weights.reshape(-1),
    )
    nsp = cross_entropy(nsp_logits, batch.nsp_labels)
    return mlm + nsp, mlm, nsp


def wrap_parameters(
    arrays: dict[str, np.ndarray], dtype=np.float32, requires_grad: bool = True
) -> dict[str, Tensor]:
    """Copy raw arrays into autodiff tensors of the requested precision."""
    return {
        name: Tensor(arr.astype(dtype, copy=True), requires_grad=requires_grad)
        for name, arr in arrays.items()
    }
