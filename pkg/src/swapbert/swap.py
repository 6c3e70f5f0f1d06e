"""Vocabulary replacement on a pretrained checkpoint.

The token inventory of a checkpoint is replaced by a same-size vocabulary
for a new language; every non-embedding tensor is preserved bit-exactly.

positional: the embedding matrix itself is untouched; row i simply means
    the new language's token i from now on. This is the faithful reading of
    keeping the vocabulary size fixed while changing the words.
aligned: an extension for vocabularies that share tokens. Shared tokens
    carry their learned row (and MLM output bias entry) to their new index;
    rows for unseen tokens are re-initialized from the usual truncated
    normal and their bias entries set to zero.

Optimizer state is reset: stale Adam moments describe a different
effective model after the swap.
"""

from __future__ import annotations

import numpy as np

from .checkpoint import Checkpoint, OptimizerState, clone_params
from .model import truncated_normal
from .wordpiece import NUM_SPECIAL_TOKENS, Vocabulary

POLICY_POSITIONAL = "positional"
POLICY_ALIGNED = "aligned"
SWAP_POLICIES = (POLICY_POSITIONAL, POLICY_ALIGNED)


def swap_vocabulary(
    ck: Checkpoint,
    new_vocab: Vocabulary,
    policy: str = POLICY_POSITIONAL,
    seed: int = 0,
    init_std: float = 0.02,
) -> Checkpoint:
    if policy not in SWAP_POLICIES:
        raise ValueError(f"unknown swap policy {policy!r}; expected one of {SWAP_POLICIES}")
    if len(new_vocab) != len(ck.vocab):
        raise ValueError(
            "vocabulary swap requires equal sizes because the embedding "
            f"matrix is never resized: checkpoint has {len(ck.vocab)} tokens, "
            f"replacement has {len(new_vocab)}"
        )
    if new_vocab.tokens[:NUM_SPECIAL_TOKENS] != ck.vocab.tokens[:NUM_SPECIAL_TOKENS]:
        raise ValueError("special tokens of the two vocabularies do not match")

    params = clone_params(ck.params)
    if policy == POLICY_ALIGNED:
        old_emb = ck.params["embeddings.token"]
        old_bias = ck.params["mlm.output.bias"]
        new_emb = np.empty_like(old_emb)
        new_bias = np.zeros_like(old_bias)
        rng = np.random.default_rng(seed)
        for new_id, token in enumerate(new_vocab.tokens):
            old_id = ck.vocab.id_of(token)
            if old_id is not None:
                new_emb[new_id] = old_emb[old_id]
                new_bias[new_id] = old_bias[old_id]
            else:
                new_emb[new_id] = truncated_normal(
                    rng, old_emb.shape[1:], init_std, dtype=old_emb.dtype
                )
        params["embeddings.token"] = new_emb
        params["mlm.output.bias"] = new_bias

    metadata = dict(ck.metadata)
    metadata.update(
        {
            "swap_policy": policy,
            "swap_seed": seed,
            "parent_hash": ck.params_hash(),
        }
    )
    return Checkpoint(
        config=ck.config,
        vocab=new_vocab,
        params=params,
        opt_state=OptimizerState.zeros(params),
        metadata=metadata,
    )
