"""MLM+NSP pretraining-instance generation with a held-out split.

Documents come from cleaned text files: a file containing blank lines is
split into blank-separated blocks (one document each); a file without any
blank line is treated as one document per line, the convention for
single-sentence social-media corpora.

Randomness is organized as named streams derived from (seed, purpose,
indices), so packing decisions are identical across dupe rounds (only the
masking varies, which keeps instance counts an exact multiple of
dupe_factor) and so documents could be processed by parallel workers
without changing the output.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass

from .wordpiece import (
    CLS_ID,
    MASK_ID,
    NUM_SPECIAL_TOKENS,
    PAD_ID,
    SEP_ID,
    TokenizerConfig,
    Vocabulary,
    tokenize,
)

SHARD_NAME_FORMAT = "shard-{:05d}.jsonl"

Document = list[list[int]]  # ordered token-id sequences, one per sentence


@dataclass(frozen=True)
class DataGenParams:
    max_seq_length: int = 128
    masked_lm_prob: float = 0.15
    max_predictions_per_seq: int = 20
    dupe_factor: int = 5
    random_next_prob: float = 0.5
    holdout_fraction: float = 0.02
    seed: int = 0
    shard_size: int = 1000

    def __post_init__(self) -> None:
        if not 0.0 <= self.masked_lm_prob <= 1.0:
            raise ValueError("masked_lm_prob must lie in [0, 1]")
        if self.max_predictions_per_seq > self.max_seq_length:
            raise ValueError("max_predictions_per_seq cannot exceed max_seq_length")
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise ValueError("holdout_fraction must lie in [0, 1)")
        if self.max_seq_length < 5:
            raise ValueError("max_seq_length must leave room for [CLS] a [SEP] b [SEP]")
        if self.dupe_factor < 1:
            raise ValueError("dupe_factor must be positive")
        if not 0.0 <= self.random_next_prob <= 1.0:
            raise ValueError("random_next_prob must lie in [0, 1]")
        if self.shard_size < 1:
            raise ValueError("shard_size must be positive")


@dataclass
class PretrainingInstance:
    token_ids: list[int]
    segment_ids: list[int]
    attention_mask: list[int]
    masked_positions: list[int]
    masked_labels: list[int]
    is_random_next: bool

    def to_json(self) -> str:
        record = {
            "token_ids": self.token_ids,
            "segment_ids": self.segment_ids,
            "attention_mask": self.attention_mask,
            "masked_positions": self.masked_positions,
            "masked_labels": self.masked_labels,
            "is_random_next": self.is_random_next,
        }
        return json.dumps(record, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "PretrainingInstance":
        record = json.loads(line)
        return cls(
            token_ids=record["token_ids"],
            segment_ids=record["segment_ids"],
            attention_mask=record["attention_mask"],
            masked_positions=record["masked_positions"],
            masked_labels=record["masked_labels"],
            is_random_next=bool(record["is_random_next"]),
        )


def _stream(seed: int, *tags) -> random.Random:
    """Independent RNG stream named by (seed, tags...); str seeding is
    platform-stable in CPython."""
    return random.Random("|".join(str(t) for t in [seed, *tags]))


def _documents_from_lines(lines: list[str]) -> list[list[str]]:
    has_blank = any(not line.strip() for line in lines)
    if not has_blank:
        return [[line] for line in lines if line.strip()]
    docs: list[list[str]] = []
    current: list[str] = []
    for line in lines:
        if line.strip():
            current.append(line)
        elif current:
            docs.append(current)
            current = []
    if current:
        docs.append(current)
    return docs


def build_documents(
    paths: list[str], vocab: Vocabulary, cfg: TokenizerConfig
) -> list[Document]:
    """Tokenize cleaned files into documents, in file order then line order."""
    documents: list[Document] = []
    for path in paths:
        with open(path, "r", encoding="utf-8", errors="replace") as f:
            lines = f.read().splitlines()
        for block in _documents_from_lines(lines):
            doc: Document = []
            for sentence in block:
                ids = tokenize(sentence, vocab, cfg)
                if ids:
                    doc.append(ids)
            if doc:
                documents.append(doc)
    if not documents:
        raise ValueError("no non-empty documents found in the input files")
    return documents


def documents_from_corpus(corpus, vocab: Vocabulary, cfg: TokenizerConfig) -> list[Document]:
    """Tokenize an in-memory corpus; provenance runs delimit documents."""
    documents: list[Document] = []
    current: Document = []
    previous = None
    for sentence, origin in zip(corpus.sentences, corpus.provenance):
        if previous is not None and origin != previous and current:
            documents.append(current)
            current = []
        ids = tokenize(sentence, vocab, cfg)
        if ids:
            current.append(ids)
        previous = origin
    if current:
        documents.append(current)
    return documents


def apply_masking(
    tokens: list[int],
    vocab: Vocabulary,
    params: DataGenParams,
    rng: random.Random,
) -> tuple[list[int], list[int], list[int]]:
    """Select and corrupt MLM positions; returns (tokens, positions, labels).

    Candidates are all non-special positions. Each selected position becomes
    [MASK] with p=0.8, a uniformly random non-special id with p=0.1, and is
    left unchanged with p=0.1. Positions come back sorted ascending.
    """
    candidates = [i for i, t in enumerate(tokens) if t >= NUM_SPECIAL_TOKENS]
    if params.masked_lm_prob <= 0.0 or not candidates:
        return list(tokens), [], []
    k = int(round(params.masked_lm_prob * len(candidates)))
    k = max(1, min(k, params.max_predictions_per_seq, len(candidates)))
    positions = sorted(rng.sample(candidates, k))
    out = list(tokens)
    labels = []
    for pos in positions:
        labels.append(tokens[pos])
        roll = rng.random()
        if roll < 0.8:
            out[pos] = MASK_ID
        elif roll < 0.9:
            out[pos] = rng.randrange(NUM_SPECIAL_TOKENS, len(vocab))
    return out, positions, labels


def _pack_document(
    doc_index: int,
    documents: list[Document],
    params: DataGenParams,
    rng: random.Random,
) -> list[tuple[list[int], list[int], bool]]:
    """Pack one document's sentences into (segment_a, segment_b, is_random_next).

    Sentences accumulate until the content budget fills, then split at a
    random sentence boundary into A and B. A random-next draw replaces B
    with sentences from another document and puts the unused tail back. A
    true-next draw on a single-sentence chunk splits at token level so the
    next-sentence label stays an unbiased coin.
    """
    doc = documents[doc_index]
    max_content = params.max_seq_length - 3
    pairs: list[tuple[list[int], list[int], bool]] = []
    current: list[list[int]] = []
    current_len = 0
    i = 0
    while i < len(doc):
        current.append(doc[i])
        current_len += len(doc[i])
        i += 1
        if i < len(doc) and current_len < max_content:
            continue

        a_end = rng.randint(1, len(current) - 1) if len(current) > 1 else 1
        is_random = rng.random() < params.random_next_prob
        tokens_a = [t for sentence in current[:a_end] for t in sentence]
        if is_random:
            target_b_len = max(1, max_content - len(tokens_a))
            other = doc_index
            for _attempt in range(10):
                other = rng.randrange(len(documents))
                if other != doc_index:
                    break
            if other == doc_index:
                other = (doc_index + 1) % len(documents)
            start = rng.randrange(len(documents[other]))
            tokens_b: list[int] = []
            for sentence in documents[other][start:]:
                tokens_b.extend(sentence)
                if len(tokens_b) >= target_b_len:
                    break
            i -= len(current) - a_end  # unused tail goes back on the stream
        elif a_end < len(current):
            tokens_b = [t for sentence in current[a_end:] for t in sentence]
        elif len(tokens_a) >= 2:
            split = rng.randint(1, len(tokens_a) - 1)
            tokens_a, tokens_b = tokens_a[:split], tokens_a[split:]
        else:
            # Single-token chunk: a true continuation does not exist.
            is_random = True
            other = (doc_index + 1) % len(documents)
            start = rng.randrange(len(documents[other]))
            tokens_b = list(documents[other][start])
        while len(tokens_a) + len(tokens_b) > max_content:
            longer = tokens_a if len(tokens_a) >= len(tokens_b) else tokens_b
            longer.pop()
        if tokens_a and tokens_b:
            pairs.append((tokens_a, tokens_b, is_random))
        current = []
        current_len = 0
    return pairs


def _finalize(
    tokens_a: list[int],
    tokens_b: list[int],
    is_random: bool,
    vocab: Vocabulary,
    params: DataGenParams,
    rng: random.Random,
) -> PretrainingInstance:
    tokens = [CLS_ID] + tokens_a + [SEP_ID] + tokens_b + [SEP_ID]
    segment_ids = [0] * (len(tokens_a) + 2) + [1] * (len(tokens_b) + 1)
    tokens, positions, labels = apply_masking(tokens, vocab, params, rng)
    pad = params.max_seq_length - len(tokens)
    attention_mask = [1] * len(tokens) + [0] * pad
    tokens = tokens + [PAD_ID] * pad
    segment_ids = segment_ids + [0] * pad
    return PretrainingInstance(
        token_ids=tokens,
        segment_ids=segment_ids,
        attention_mask=attention_mask,
        masked_positions=positions,
        masked_labels=labels,
        is_random_next=is_random,
    )


def create_instances(
    documents: list[Document], vocab: Vocabulary, params: DataGenParams
) -> list[PretrainingInstance]:
    """All pretraining instances for the corpus, deterministically shuffled.

    The corpus is processed dupe_factor times; packing is fixed per document
    and only the masking randomness differs between rounds.
    """
    if len(documents) < 2:
        raise ValueError(
            "NSP negatives impossible: need at least two documents, got "
            f"{len(documents)}"
        )
    packed = [
        _pack_document(di, documents, params, _stream(params.seed, "pack", di))
        for di in range(len(documents))
    ]
    instances: list[PretrainingInstance] = []
    for dupe in range(params.dupe_factor):
        for di, pairs in enumerate(packed):
            rng_mask = _stream(params.seed, "mask", dupe, di)
            for tokens_a, tokens_b, is_random in pairs:
                instances.append(
                    _finalize(
                        list(tokens_a), list(tokens_b), is_random, vocab, params, rng_mask
                    )
                )
    _stream(params.seed, "shuffle").shuffle(instances)
    return instances


def split_holdout(
    instances: list[PretrainingInstance], holdout_fraction: float, seed: int
) -> tuple[list[PretrainingInstance], list[PretrainingInstance]]:
    """Deterministic instance-level split into (train, eval)."""
    if not 0.0 <= holdout_fraction < 1.0:
        raise ValueError("holdout_fraction must lie in [0, 1)")
    rng = _stream(seed, "holdout")
    train: list[PretrainingInstance] = []
    held: list[PretrainingInstance] = []
    for instance in instances:
        (held if rng.random() < holdout_fraction else train).append(instance)
    return train, held


def write_shards(
    instances: list[PretrainingInstance], out_dir: str, shard_size: int
) -> list[str]:
    """Write fixed-size newline-delimited shards; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for shard_index in range((len(instances) + shard_size - 1) // shard_size):
        chunk = instances[shard_index * shard_size : (shard_index + 1) * shard_size]
        path = os.path.join(out_dir, SHARD_NAME_FORMAT.format(shard_index))
        with open(path, "w", encoding="utf-8") as f:
            for instance in chunk:
                f.write(instance.to_json() + "\n")
        paths.append(path)
    return paths


def shard_paths(data_dir: str) -> list[str]:
    names = sorted(n for n in os.listdir(data_dir) if n.endswith(".jsonl"))
    return [os.path.join(data_dir, n) for n in names]


def read_shards(data_dir: str) -> list[PretrainingInstance]:
    paths = shard_paths(data_dir)
    if not paths:
        raise FileNotFoundError(f"no shard files under {data_dir!r}")
    instances: list[PretrainingInstance] = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    instances.append(PretrainingInstance.from_json(line))
    return instances
