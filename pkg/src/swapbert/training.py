"""Parameter initialization, the Adam loop, and the learning-rate schedule.

Adam uses bias correction and decoupled weight decay (decay is skipped for
biases and layer-norm parameters), with global gradient-norm clipping.
The schedule is linear warmup to the peak rate followed by linear decay to
zero at the final step. A training run is deterministic for a fixed
(start checkpoint, data, config, thread configuration).
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .checkpoint import Checkpoint, OptimizerState, clone_params
from .model import (
    Batch,
    ModelConfig,
    NonFiniteActivationError,
    forward,
    init_parameters,
    loss,
    wrap_parameters,
)
from .wordpiece import Vocabulary


class NonFiniteLossError(ArithmeticError):
    """Training hit a non-finite loss/gradient; carries the last good state."""

    def __init__(self, message: str, checkpoint: Checkpoint, step: int):
        super().__init__(message)
        self.checkpoint = checkpoint
        self.step = step


@dataclass(frozen=True)
class TrainingConfig:
    steps: int = 10_000
    batch_size: int = 32
    learning_rate: float = 2e-5
    warmup_steps: int = 1_000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.01
    grad_clip_norm: float = 1.0
    seed: int = 0
    eval_every: int = 0  # 0 disables mid-training evaluation

    def __post_init__(self) -> None:
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.warmup_steps > self.steps:
            raise ValueError("warmup_steps cannot exceed steps")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


@dataclass
class StepRecord:
    step: int
    total_loss: float
    mlm_loss: float
    nsp_loss: float
    metrics: object | None = None  # evaluation Metrics when eval_every fires


def learning_rate_at(step: int, cfg: TrainingConfig) -> float:
    """Learning rate applied at 0-indexed step; lr(steps) would be 0."""
    if cfg.steps == 0:
        return cfg.learning_rate
    if step < cfg.warmup_steps:
        return cfg.learning_rate * (step + 1) / cfg.warmup_steps
    if cfg.steps == cfg.warmup_steps:
        return cfg.learning_rate
    return cfg.learning_rate * (cfg.steps - step) / (cfg.steps - cfg.warmup_steps)


def _decayed(name: str) -> bool:
    return not (name.endswith(".bias") or ".norm." in name or name.endswith(".gain"))


def init_scratch(cfg: ModelConfig, vocab: Vocabulary, seed: int) -> Checkpoint:
    """A fresh randomly-initialized checkpoint with zeroed optimizer state."""
    if len(vocab) != cfg.vocab_size:
        raise ValueError(
            f"vocabulary has {len(vocab)} tokens but the config expects "
            f"{cfg.vocab_size}"
        )
    params = init_parameters(cfg, seed, dtype=np.float32)
    return Checkpoint(
        config=cfg,
        vocab=vocab,
        params=params,
        opt_state=OptimizerState.zeros(params),
        metadata={"regime": "scratch-init", "seed": seed, "parent_hash": None},
    )


def _batch_index_stream(n: int, seed: int):
    """Endless stream of instance indices: seeded shuffles, wraparound epochs."""
    rng = random.Random(f"{seed}|order")
    while True:
        order = list(range(n))
        rng.shuffle(order)
        yield from order


def global_grad_norm(grads: dict[str, np.ndarray]) -> float:
    total = 0.0
    for g in grads.values():
        total += float(np.vdot(g, g).real)
    return float(np.sqrt(total))


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    cfg: TrainingConfig,
    lr: float,
) -> None:
    """One in-place Adam update with decoupled weight decay."""
    state.step += 1
    t = state.step
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    bias1 = 1.0 - b1**t
    bias2 = 1.0 - b2**t
    for name, p in params.items():
        g = grads[name]
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        update = (m / bias1) / (np.sqrt(v / bias2) + cfg.adam_eps)
        if cfg.weight_decay > 0.0 and _decayed(name):
            update = update + cfg.weight_decay * p
        p -= np.float32(lr) * update.astype(np.float32)


def train(
    start: Checkpoint,
    data: list,
    tcfg: TrainingConfig,
    eval_data: list | None = None,
    metadata: dict | None = None,
) -> tuple[Checkpoint, list[StepRecord]]:
    """Run the optimizer for tcfg.steps over the instances in data.

    Returns the trained checkpoint and a per-step loss history (with eval
    metrics attached every tcfg.eval_every steps when eval_data is given).
    steps=0 returns a bit-identical copy of the start parameters.
    """
    if not data:
        raise ValueError("training data is empty")
    start.validate()
    cfg = start.config
    arrays = clone_params(start.params)
    state = OptimizerState(
        first_moment={k: v.copy() for k, v in start.opt_state.first_moment.items()},
        second_moment={k: v.copy() for k, v in start.opt_state.second_moment.items()},
        step=start.opt_state.step,
    )
    meta = dict(start.metadata)
    meta.update(metadata or {})
    meta.update({"train_seed": tcfg.seed, "train_steps": tcfg.steps})

    history: list[StepRecord] = []
    indices = _batch_index_stream(len(data), tcfg.seed)
    for step in range(tcfg.steps):
        batch_instances = [data[next(indices)] for _ in range(tcfg.batch_size)]
        batch = Batch.from_instances(batch_instances)
        params = wrap_parameters(arrays, dtype=np.float32, requires_grad=True)
        rng = np.random.default_rng(np.random.SeedSequence([tcfg.seed, step, 0xD0]))

        def _abort(reason: str) -> NonFiniteLossError:
            last_good = Checkpoint(cfg, start.vocab, arrays, state, meta)
            return NonFiniteLossError(
                f"{reason} at step {step}; returning last good state", last_good, step
            )

        try:
            mlm_logits, nsp_logits = forward(params, cfg, batch, train_mode=True, rng=rng)
            total, mlm, nsp = loss(mlm_logits, nsp_logits, batch)
        except NonFiniteActivationError as exc:
            raise _abort(str(exc)) from exc
        if not np.isfinite(total.data):
            raise _abort("non-finite loss")
        total.backward()
        grads = {name: params[name].grad for name in arrays}
        for name, g in grads.items():
            if g is None or not np.all(np.isfinite(g)):
                raise _abort(f"non-finite gradient for {name}")

        norm = global_grad_norm(grads)
        if tcfg.grad_clip_norm > 0.0 and norm > tcfg.grad_clip_norm:
            scale = tcfg.grad_clip_norm / norm
            grads = {name: g * scale for name, g in grads.items()}
        adam_step(arrays, grads, state, tcfg, learning_rate_at(step, tcfg))

        record = StepRecord(
            step=step,
            total_loss=float(total.data),
            mlm_loss=float(mlm.data),
            nsp_loss=float(nsp.data),
        )
        if eval_data and tcfg.eval_every and (step + 1) % tcfg.eval_every == 0:
            from .evaluation import evaluate_params

            record.metrics = evaluate_params(arrays, cfg, eval_data)
        history.append(record)

    final = Checkpoint(cfg, start.vocab, arrays, state, meta)
    return final, history
