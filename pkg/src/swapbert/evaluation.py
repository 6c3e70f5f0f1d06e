"""MLM/NSP accuracy and loss on held-out pretraining instances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .checkpoint import Checkpoint
from .model import Batch, ModelConfig, forward, loss, wrap_parameters


@dataclass(frozen=True)
class Metrics:
    mlm_accuracy: float
    nsp_accuracy: float
    mlm_loss: float
    nsp_loss: float
    instance_count: int
    masked_position_count: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.mlm_accuracy <= 1.0 or not 0.0 <= self.nsp_accuracy <= 1.0:
            raise ValueError("accuracies must lie in [0, 1]")

    def as_dict(self) -> dict:
        return {
            "mlm_accuracy": self.mlm_accuracy,
            "nsp_accuracy": self.nsp_accuracy,
            "mlm_loss": self.mlm_loss,
            "nsp_loss": self.nsp_loss,
            "instance_count": self.instance_count,
            "masked_position_count": self.masked_position_count,
        }


def evaluate_params(
    arrays: dict[str, np.ndarray],
    cfg: ModelConfig,
    instances: list,
    batch_size: int = 64,
) -> Metrics:
    """Deterministic evaluation (dropout off) over all instances.

    The reduction over batches is a plain sum of counts, so any sharding of
    the instance list yields identical metrics.
    """
    if not instances:
        raise ValueError("evaluation set is empty")
    params = wrap_parameters(arrays, dtype=np.float32, requires_grad=False)

    mlm_correct = 0
    mlm_total = 0
    nsp_correct = 0
    mlm_loss_sum = 0.0
    nsp_loss_sum = 0.0
    for lo in range(0, len(instances), batch_size):
        chunk = instances[lo : lo + batch_size]
        batch = Batch.from_instances(chunk)
        mlm_logits, nsp_logits = forward(params, cfg, batch, train_mode=False)
        _total, mlm, nsp = loss(mlm_logits, nsp_logits, batch)

        predictions = np.argmax(mlm_logits.data, axis=-1)
        real = batch.masked_weights > 0
        mlm_correct += int(((predictions == batch.masked_labels) & real).sum())
        positions_here = int(real.sum())
        mlm_total += positions_here
        mlm_loss_sum += float(mlm.data) * positions_here

        nsp_pred = np.argmax(nsp_logits.data, axis=-1)
        nsp_correct += int((nsp_pred == batch.nsp_labels).sum())
        nsp_loss_sum += float(nsp.data) * len(chunk)

    return Metrics(
        mlm_accuracy=mlm_correct / mlm_total if mlm_total else 0.0,
        nsp_accuracy=nsp_correct / len(instances),
        mlm_loss=mlm_loss_sum / mlm_total if mlm_total else 0.0,
        nsp_loss=nsp_loss_sum / len(instances),
        instance_count=len(instances),
        masked_position_count=mlm_total,
    )


def evaluate(ck: Checkpoint, instances: list, batch_size: int = 64) -> Metrics:
    """Evaluate a checkpoint on held-out instances."""
    max_id = max((max(inst.token_ids) for inst in instances), default=0)
    if max_id >= ck.config.vocab_size:
        raise ValueError(
            f"instance token id {max_id} is out of range for vocab size "
            f"{ck.config.vocab_size}"
        )
    return evaluate_params(ck.params, ck.config, instances, batch_size=batch_size)
