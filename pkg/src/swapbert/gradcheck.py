"""Finite-difference verification of the analytic gradients.

Central differences in double precision against the autodiff backward pass,
on a deterministic subsample of entries per parameter tensor. Relative
error uses max(|analytic|, |numeric|, floor) in the denominator so entries
whose true gradient is smaller than the measurable noise floor cannot
produce spurious failures.
"""

from __future__ import annotations

import random

import numpy as np

from .model import Batch, ModelConfig, forward, init_parameters, loss, wrap_parameters
from .wordpiece import CLS_ID, NUM_SPECIAL_TOKENS, SEP_ID


def make_probe_batch(cfg: ModelConfig, seed: int, batch_size: int = 2) -> Batch:
    """A small structurally-valid batch: [CLS] a [SEP] b [SEP], some masks."""
    rng = random.Random(f"{seed}|gradcheck-batch")
    t = min(cfg.max_positions, 16)
    rows = []
    for row in range(batch_size):
        len_a = rng.randint(2, (t - 3) // 2)
        len_b = rng.randint(2, t - 3 - len_a)
        content = lambda n: [
            rng.randrange(NUM_SPECIAL_TOKENS, cfg.vocab_size) for _ in range(n)
        ]
        ids = [CLS_ID] + content(len_a) + [SEP_ID] + content(len_b) + [SEP_ID]
        segs = [0] * (len_a + 2) + [1] * (len_b + 1)
        pad = t - len(ids)
        mask = [1] * len(ids) + [0] * pad
        ids += [0] * pad
        segs += [0] * pad
        candidates = [i for i, tok in enumerate(ids) if tok >= NUM_SPECIAL_TOKENS]
        chosen = sorted(rng.sample(candidates, min(3, len(candidates))))
        rows.append((ids, segs, mask, chosen, [ids[i] for i in chosen], row % 2))

    n_pred = max(len(r[3]) for r in rows)
    positions = np.zeros((batch_size, n_pred), dtype=np.int64)
    labels = np.zeros((batch_size, n_pred), dtype=np.int64)
    weights = np.zeros((batch_size, n_pred), dtype=np.float64)
    for i, (_ids, _segs, _mask, pos, lab, _nsp) in enumerate(rows):
        positions[i, : len(pos)] = pos
        labels[i, : len(lab)] = lab
        weights[i, : len(pos)] = 1.0
    return Batch(
        token_ids=np.array([r[0] for r in rows], dtype=np.int64),
        segment_ids=np.array([r[1] for r in rows], dtype=np.int64),
        attention_mask=np.array([r[2] for r in rows], dtype=np.int64),
        masked_positions=positions,
        masked_labels=labels,
        masked_weights=weights,
        nsp_labels=np.array([r[5] for r in rows], dtype=np.int64),
    )


def _total_loss(params, cfg, batch) -> float:
    mlm_logits, nsp_logits = forward(params, cfg, batch, train_mode=False)
    total, _mlm, _nsp = loss(mlm_logits, nsp_logits, batch)
    return total.item()


def gradient_check(
    cfg: ModelConfig,
    seed: int = 0,
    epsilon: float = 1e-5,
    entries_per_tensor: int = 10,
    error_floor: float = 1e-4,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    cfg must have dropout_prob 0 so the loss is deterministic. Entries are a
    seeded subsample of at least entries_per_tensor per parameter tensor.
    """
    if cfg.dropout_prob != 0.0:
        raise ValueError("gradient_check requires dropout_prob 0")
    arrays = init_parameters(cfg, seed, dtype=np.float64)
    params = wrap_parameters(arrays, dtype=np.float64, requires_grad=True)
    batch = make_probe_batch(cfg, seed)

    mlm_logits, nsp_logits = forward(params, cfg, batch, train_mode=False)
    total, _mlm, _nsp = loss(mlm_logits, nsp_logits, batch)
    total.backward()
    for name, tensor in params.items():
        if tensor.grad is None or not np.all(np.isfinite(tensor.grad)):
            raise ArithmeticError(f"non-finite or missing gradient for {name}")

    rng = random.Random(f"{seed}|gradcheck-entries")
    worst = 0.0
    for name, tensor in params.items():
        size = tensor.data.size
        count = min(entries_per_tensor, size)
        flat_indices = rng.sample(range(size), count)
        for flat in flat_indices:
            original = tensor.data.flat[flat]
            tensor.data.flat[flat] = original + epsilon
            plus = _total_loss(params, cfg, batch)
            tensor.data.flat[flat] = original - epsilon
            minus = _total_loss(params, cfg, batch)
            tensor.data.flat[flat] = original
            numeric = (plus - minus) / (2.0 * epsilon)
            analytic = tensor.grad.flat[flat]
            denom = max(abs(analytic), abs(numeric), error_floor)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst
