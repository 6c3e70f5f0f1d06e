"""Synthetic language generation for desk-scale transfer experiments.

A language is a Zipf-weighted stock of random words plus a first-order
transition table: every word prefers a small set of successor words, and a
document is one continuous walk through the table, split into sentences.
That gives masked-word prediction a strong contextual signal (the masked
word is pinned between its neighbours), and gives next-sentence prediction
a crisp cue (a true continuation follows the chain across the segment
boundary, a random one does not).

A fraction of the word types can be shared with a parent language. Shared
types receive fresh frequency ranks, and their transition preferences are
inherited from the parent corpus where both endpoints are shared: a
borrowed word keeps the company it kept in the source language, the way
code-switched vocabulary behaves alike across real language pairs. That
inherited structure is exactly what a transferred checkpoint can reuse;
transitions involving new words are language-specific and must be learned.
"""

from __future__ import annotations

import bisect
import itertools
import random
from dataclasses import dataclass

from .corpus import CleanCorpus

ALPHABET = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class SyntheticLanguageSpec:
    name: str
    word_types: int = 100
    overlap_fraction: float = 0.0
    sentence_count: int = 2000
    min_word_len: int = 2
    max_word_len: int = 5
    min_sentence_words: int = 4
    max_sentence_words: int = 10
    min_doc_sentences: int = 4
    max_doc_sentences: int = 8
    zipf_exponent: float = 0.8
    successor_count: int = 2
    successor_weight: float = 0.9

    def __post_init__(self) -> None:
        if not 0.0 <= self.overlap_fraction <= 1.0:
            raise ValueError("overlap_fraction must lie in [0, 1]")
        if self.word_types < 2 or self.sentence_count < 1:
            raise ValueError("word_types and sentence_count must be positive")
        if self.min_word_len < 1 or self.max_word_len < self.min_word_len:
            raise ValueError("bad word length bounds")
        if self.successor_count < 1 or not 0.0 <= self.successor_weight < 1.0:
            raise ValueError("bad transition parameters")


def corpus_word_types(corpus: CleanCorpus) -> list[str]:
    """Unique words ordered by (frequency desc, word) for determinism."""
    counts: dict[str, int] = {}
    for sentence in corpus.sentences:
        for word in sentence.split():
            counts[word] = counts.get(word, 0) + 1
    return [w for w, _n in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))]


def _random_word(rng: random.Random, spec: SyntheticLanguageSpec) -> str:
    length = rng.randint(spec.min_word_len, spec.max_word_len)
    return "".join(rng.choice(ALPHABET) for _ in range(length))


def _build_word_stock(
    spec: SyntheticLanguageSpec, rng: random.Random, parent: CleanCorpus | None
) -> list[str]:
    shared_count = int(round(spec.overlap_fraction * spec.word_types))
    if shared_count > 0 and parent is None:
        raise ValueError("overlap_fraction > 0 requires a parent corpus")
    stock: list[str] = []
    taken: set[str] = set()
    parent_types: set[str] = set()
    if parent is not None:
        types = corpus_word_types(parent)
        parent_types = set(types)
        if shared_count > len(types):
            raise ValueError(
                f"parent corpus has only {len(types)} word types; cannot share "
                f"{shared_count}"
            )
        for word in rng.sample(types, shared_count):
            stock.append(word)
            taken.add(word)
    while len(stock) < spec.word_types:
        word = _random_word(rng, spec)
        if word not in taken and word not in parent_types:
            stock.append(word)
            taken.add(word)
    rng.shuffle(stock)  # shuffled order is the frequency-rank assignment
    return stock


def empirical_successors(corpus: CleanCorpus, top_k: int = 2) -> dict[str, list[str]]:
    """Each word's top-k following words in the corpus (ties lexicographic)."""
    follows: dict[str, dict[str, int]] = {}
    for sentence in corpus.sentences:
        words = sentence.split()
        for a, b in zip(words, words[1:]):
            follows.setdefault(a, {})[b] = follows.setdefault(a, {}).get(b, 0) + 1
    return {
        word: [
            b for b, _n in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
        ]
        for word, counts in follows.items()
    }


class _ChainSampler:
    """Seeded sampler for the language's word chain.

    Successor lists for words shared with the parent reuse the parent's
    observed successors when those successors are shared too; remaining
    slots (and all non-shared words) draw fresh from the global Zipf.
    """

    def __init__(
        self,
        spec: SyntheticLanguageSpec,
        rng: random.Random,
        stock: list[str],
        inherited: dict[str, list[str]] | None = None,
    ):
        n = len(stock)
        weights = [1.0 / (rank + 1) ** spec.zipf_exponent for rank in range(n)]
        self._cum = list(itertools.accumulate(weights))
        self._total = self._cum[-1]
        index = {word: i for i, word in enumerate(stock)}
        self._successors = []
        for word in stock:
            chosen: list[int] = []
            for parent_successor in (inherited or {}).get(word, []):
                if parent_successor in index and len(chosen) < spec.successor_count:
                    chosen.append(index[parent_successor])
            while len(chosen) < spec.successor_count:
                # frequent words stay frequent as targets; duplicates just
                # weight a successor twice
                chosen.append(self._draw_global(rng))
            self._successors.append(chosen)
        self._weight = spec.successor_weight
        self._rng = rng

    def _draw_global(self, rng: random.Random) -> int:
        return bisect.bisect_left(self._cum, rng.random() * self._total)

    def start(self) -> int:
        return self._draw_global(self._rng)

    def step(self, previous: int) -> int:
        if self._rng.random() < self._weight:
            return self._rng.choice(self._successors[previous])
        return self._draw_global(self._rng)


def gen_synthetic_corpus(
    spec: SyntheticLanguageSpec, seed: int, parent: CleanCorpus | None = None
) -> CleanCorpus:
    """Deterministic synthetic corpus; provenance tags document membership."""
    rng = random.Random(f"{seed}|synthetic|{spec.name}")
    stock = _build_word_stock(spec, rng, parent)
    inherited = (
        empirical_successors(parent, spec.successor_count) if parent is not None else None
    )
    chain = _ChainSampler(spec, rng, stock, inherited)

    sentences: list[str] = []
    provenance: list[str] = []
    doc_index = 0
    while len(sentences) < spec.sentence_count:
        doc_len = rng.randint(spec.min_doc_sentences, spec.max_doc_sentences)
        doc_len = min(doc_len, spec.sentence_count - len(sentences))
        tag = f"{spec.name}/doc{doc_index:05d}"
        current = chain.start()
        for _ in range(doc_len):
            n_words = rng.randint(spec.min_sentence_words, spec.max_sentence_words)
            words = []
            for _ in range(n_words):
                words.append(stock[current])
                current = chain.step(current)
            sentences.append(" ".join(words))
            provenance.append(tag)
        doc_index += 1
    return CleanCorpus(sentences, provenance)


def measured_type_overlap(child: CleanCorpus, parent: CleanCorpus) -> float:
    """|child types shared with parent| / |child types|."""
    child_types = set(corpus_word_types(child))
    parent_types = set(corpus_word_types(parent))
    if not child_types:
        return 0.0
    return len(child_types & parent_types) / len(child_types)
