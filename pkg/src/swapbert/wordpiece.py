"""Fixed-size WordPiece vocabulary training and greedy subword encoding.

The vocabulary layout is: the five special tokens at ids 0-4, then the
observed character alphabet (word-initial forms and "##" continuations,
sorted lexicographically), then merged subwords in creation order, then any
whole-word padding needed to hit the target size exactly. Training is a
pure function of the corpus word multiset and the config: merge score is
pair frequency with ties broken by the lexicographically smaller pair.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

SPECIAL_TOKENS: tuple[str, ...] = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
PAD_ID, UNK_ID, CLS_ID, SEP_ID, MASK_ID = range(5)
NUM_SPECIAL_TOKENS = len(SPECIAL_TOKENS)
CONTINUATION_PREFIX = "##"


class VocabFormatError(ValueError):
    """A vocab file violates the one-token-per-line format."""


@dataclass(frozen=True)
class TokenizerConfig:
    target_size: int = 30522
    lowercase: bool = True
    min_frequency: int = 2
    max_word_chars: int = 100

    def __post_init__(self) -> None:
        if self.target_size <= NUM_SPECIAL_TOKENS:
            raise ValueError("target_size must exceed the special-token count")
        if self.min_frequency < 1:
            raise ValueError("min_frequency must be positive")
        if self.max_word_chars < 1:
            raise ValueError("max_word_chars must be positive")


class Vocabulary:
    """Ordered unique token inventory; a token's id is its index."""

    def __init__(self, tokens: list[str]):
        if len(set(tokens)) != len(tokens):
            raise ValueError("vocabulary tokens must be unique")
        if tuple(tokens[:NUM_SPECIAL_TOKENS]) != SPECIAL_TOKENS:
            raise ValueError(
                f"tokens 0-{NUM_SPECIAL_TOKENS - 1} must be {SPECIAL_TOKENS}"
            )
        for tok in tokens:
            if not tok or tok.split() != [tok]:
                raise ValueError(f"token {tok!r} is empty or contains whitespace")
        self.tokens: list[str] = list(tokens)
        self._index: dict[str, int] = {tok: i for i, tok in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def id_of(self, token: str) -> int | None:
        return self._index.get(token)

    def token(self, token_id: int) -> str:
        return self.tokens[token_id]


def _word_counts(sentences: Iterable[str], cfg: TokenizerConfig) -> Counter[str]:
    counts: Counter[str] = Counter()
    for sentence in sentences:
        for word in sentence.split():
            if cfg.lowercase:
                word = word.lower()
            if len(word) <= cfg.max_word_chars:
                counts[word] += 1
    return counts


def _word_symbols(word: str) -> tuple[str, ...]:
    return (word[0],) + tuple(CONTINUATION_PREFIX + ch for ch in word[1:])


def _alphabet(counts: Counter[str], min_frequency: int) -> list[str]:
    """Character tokens: plain form per observed character, "##" form per
    character observed word-internally, both subject to min_frequency."""
    total: Counter[str] = Counter()
    continuation: Counter[str] = Counter()
    for word, freq in counts.items():
        for i, ch in enumerate(word):
            total[ch] += freq
            if i > 0:
                continuation[ch] += freq
    tokens = [ch for ch, n in total.items() if n >= min_frequency]
    tokens += [
        CONTINUATION_PREFIX + ch for ch, n in continuation.items() if n >= min_frequency
    ]
    return sorted(tokens)


def _merge_symbols(
    symbols: tuple[str, ...], pair: tuple[str, str], merged: str
) -> tuple[str, ...]:
    out: list[str] = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == pair:
            out.append(merged)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


def train_vocab_with_trace(
    corpus, cfg: TokenizerConfig
) -> tuple["Vocabulary", list[str], list[str]]:
    """As train_vocab, but also returns (merge tokens, padding words)."""
    sentences = corpus.sentences if hasattr(corpus, "sentences") else corpus
    counts = _word_counts(sentences, cfg)
    if not counts:
        raise ValueError("cannot train a vocabulary on an empty corpus")

    alphabet = _alphabet(counts, cfg.min_frequency)
    if cfg.target_size <= NUM_SPECIAL_TOKENS + len(alphabet):
        raise ValueError(
            f"target_size {cfg.target_size} is not larger than the "
            f"{NUM_SPECIAL_TOKENS} special tokens plus the alphabet of "
            f"{len(alphabet)} character tokens"
        )

    vocab: list[str] = list(SPECIAL_TOKENS) + alphabet
    known = set(vocab)

    # Words whose characters fell below min_frequency cannot be represented
    # and would encode to [UNK]; they take no part in merging.
    words: list[tuple[str, ...]] = []
    freqs: list[int] = []
    for word, freq in sorted(counts.items()):
        symbols = _word_symbols(word)
        if all(sym in known for sym in symbols):
            words.append(symbols)
            freqs.append(freq)

    merges: list[str] = []
    # pair -> total frequency, and pair -> word ids containing it, updated
    # incrementally so only affected words are rescanned after a merge.
    pair_freq: Counter[tuple[str, str]] = Counter()
    pair_words: dict[tuple[str, str], set[int]] = {}
    for wi, symbols in enumerate(words):
        for pair in zip(symbols, symbols[1:]):
            pair_freq[pair] += freqs[wi]
            pair_words.setdefault(pair, set()).add(wi)

    while len(vocab) < cfg.target_size and pair_freq:
        best_pair = min(pair_freq, key=lambda p: (-pair_freq[p], p))
        if pair_freq[best_pair] < cfg.min_frequency:
            break
        left, right = best_pair
        merged = left + right[len(CONTINUATION_PREFIX):]
        for wi in sorted(pair_words[best_pair]):
            symbols = words[wi]
            for pair in zip(symbols, symbols[1:]):
                pair_freq[pair] -= freqs[wi]
                if pair_freq[pair] <= 0:
                    del pair_freq[pair]
                pair_words[pair].discard(wi)
            symbols = _merge_symbols(symbols, best_pair, merged)
            words[wi] = symbols
            for pair in zip(symbols, symbols[1:]):
                pair_freq[pair] += freqs[wi]
                pair_words.setdefault(pair, set()).add(wi)
        if merged not in known:
            vocab.append(merged)
            known.add(merged)
            merges.append(merged)

    padding: list[str] = []
    if len(vocab) < cfg.target_size:
        by_frequency = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        for word, _freq in by_frequency:
            if len(vocab) == cfg.target_size:
                break
            if word not in known:
                vocab.append(word)
                known.add(word)
                padding.append(word)

    if len(vocab) < cfg.target_size:
        raise ValueError(
            f"corpus supports a vocabulary of only {len(vocab)} tokens; "
            f"target_size {cfg.target_size} is unreachable"
        )
    return Vocabulary(vocab), merges, padding


def train_vocab(corpus, cfg: TokenizerConfig) -> Vocabulary:
    """Train a deterministic vocabulary of exactly cfg.target_size tokens.

    corpus is a CleanCorpus or any iterable of cleaned sentences.
    """
    vocab, _merges, _padding = train_vocab_with_trace(corpus, cfg)
    return vocab


def encode_word(word: str, vocab: Vocabulary, cfg: TokenizerConfig) -> list[int]:
    """Greedy longest-prefix-match WordPiece encoding of one word.

    The word is assumed already lowercased when cfg.lowercase is set. Any
    unmatchable span (or an over-long word) collapses the whole word to
    a single [UNK].
    """
    if len(word) > cfg.max_word_chars:
        return [UNK_ID]
    ids: list[int] = []
    start = 0
    while start < len(word):
        end = len(word)
        token_id = None
        while end > start:
            piece = word[start:end]
            if start > 0:
                piece = CONTINUATION_PREFIX + piece
            token_id = vocab.id_of(piece)
            if token_id is not None:
                break
            end -= 1
        if token_id is None:
            return [UNK_ID]
        ids.append(token_id)
        start = end
    return ids


def tokenize(text: str, vocab: Vocabulary, cfg: TokenizerConfig) -> list[int]:
    """Encode a cleaned sentence as token ids, word by word."""
    ids: list[int] = []
    for word in text.split():
        if cfg.lowercase:
            word = word.lower()
        ids.extend(encode_word(word, vocab, cfg))
    return ids


def detokenize_word_pieces(pieces: list[str]) -> str:
    """Strip continuation markers and rejoin pieces into a word."""
    return "".join(
        p[len(CONTINUATION_PREFIX):] if p.startswith(CONTINUATION_PREFIX) else p
        for p in pieces
    )


def save_vocab(vocab: Vocabulary, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for token in vocab.tokens:
            f.write(token + "\n")


def load_vocab(path: str) -> Vocabulary:
    tokens: list[str] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            token = line.rstrip("\n")
            if not token or not token.strip():
                raise VocabFormatError(f"{path}:{line_no}: empty token line")
            if token in seen:
                raise VocabFormatError(f"{path}:{line_no}: duplicate token {token!r}")
            seen.add(token)
            tokens.append(token)
    try:
        return Vocabulary(tokens)
    except ValueError as exc:
        raise VocabFormatError(f"{path}: {exc}") from exc
