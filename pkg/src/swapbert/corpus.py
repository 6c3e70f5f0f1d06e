"""Corpus cleaning: sentence segmentation, character filtering, statistics.

Input corpora are plain-text files with one or more sentences per line.
Cleaning keeps letters and digits of the active script profile, replaces
every other character with a space, and collapses whitespace runs. Blank
lines act as document separators and are preserved (collapsed to a single
blank line) in cleaned files so that pretraining-data generation can
recover document boundaries. Case is preserved; lowercasing is the
tokenizer's job.
"""

from __future__ import annotations

import functools
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

# Code-point ranges (inclusive) for Arabic-script letters as used by Urdu.
# Kept as explicit data so the allowed set is testable. Combining marks
# (harakat, U+064B-U+065F, U+0670) and Arabic punctuation are deliberately
# outside these ranges: they count as removable characters, not letters.
ARABIC_LETTER_RANGES: tuple[tuple[int, int], ...] = (
    (0x0620, 0x064A),
    (0x066E, 0x066F),
    (0x0671, 0x06D3),
    (0x06D5, 0x06D5),
    (0x06EE, 0x06EF),
    (0x06FA, 0x06FC),
    (0x06FF, 0x06FF),
    (0x0750, 0x077F),
)

# Arabic-Indic digits plus the extended forms Urdu actually uses.
ARABIC_DIGIT_RANGES: tuple[tuple[int, int], ...] = (
    (0x0660, 0x0669),
    (0x06F0, 0x06F9),
)

LATIN_LETTER_RANGES: tuple[tuple[int, int], ...] = (
    (ord("A"), ord("Z")),
    (ord("a"), ord("z")),
)

ASCII_DIGIT_RANGE: tuple[tuple[int, int], ...] = ((ord("0"), ord("9")),)


@dataclass(frozen=True)
class ScriptProfile:
    """The set of characters that survive cleaning, as code-point ranges."""

    name: str
    letter_ranges: tuple[tuple[int, int], ...]
    digit_ranges: tuple[tuple[int, int], ...]

    def allows(self, ch: str) -> bool:
        cp = ord(ch)
        return any(lo <= cp <= hi for lo, hi in self.letter_ranges) or any(
            lo <= cp <= hi for lo, hi in self.digit_ranges
        )


LATIN_PROFILE = ScriptProfile(
    name="latin_digits",
    letter_ranges=LATIN_LETTER_RANGES,
    digit_ranges=ASCII_DIGIT_RANGE,
)


def urdu_profile(include_urdu_digits: bool = True) -> ScriptProfile:
    """Latin profile extended with Arabic-script letters.

    Whether Urdu digits count as "numbers" is a policy choice; the flag
    makes it explicit instead of hard-coding one reading.
    """
    digits = ASCII_DIGIT_RANGE
    if include_urdu_digits:
        digits = digits + ARABIC_DIGIT_RANGES
    return ScriptProfile(
        name="latin_digits_plus_urdu",
        letter_ranges=LATIN_LETTER_RANGES + ARABIC_LETTER_RANGES,
        digit_ranges=digits,
    )


LATIN_URDU_PROFILE = urdu_profile()

_PROFILE_ALIASES = {
    "latin": LATIN_PROFILE,
    "latin_digits": LATIN_PROFILE,
    "latin+urdu": LATIN_URDU_PROFILE,
    "latin_digits_plus_urdu": LATIN_URDU_PROFILE,
}


def get_profile(name: str) -> ScriptProfile:
    try:
        return _PROFILE_ALIASES[name]
    except KeyError:
        raise ValueError(
            f"unknown script profile {name!r}; expected one of "
            f"{sorted(_PROFILE_ALIASES)}"
        ) from None


@functools.lru_cache(maxsize=None)
def _disallowed_pattern(profile: ScriptProfile) -> re.Pattern[str]:
    parts = []
    for lo, hi in profile.letter_ranges + profile.digit_ranges:
        if lo == hi:
            parts.append(re.escape(chr(lo)))
        else:
            parts.append(f"{re.escape(chr(lo))}-{re.escape(chr(hi))}")
    return re.compile(f"[^{''.join(parts)}]")


@dataclass(frozen=True)
class RawCorpus:
    """Raw input files, each tagged with the script profile to clean under."""

    sources: tuple[tuple[str, str], ...]  # (path, profile name)


@dataclass
class CleanCorpus:
    """Ordered cleaned sentences with one provenance string per sentence.

    Provenance is the source path for file-derived corpora; synthetic
    corpora use it to tag document membership.
    """

    sentences: list[str]
    provenance: list[str]

    def __post_init__(self) -> None:
        if len(self.sentences) != len(self.provenance):
            raise ValueError("sentences and provenance must have equal length")

    @classmethod
    def from_sentences(cls, sentences: list[str], source: str = "memory") -> "CleanCorpus":
        return cls(list(sentences), [source] * len(sentences))

    def __len__(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True)
class CorpusStats:
    sentence_count: int = 0
    word_count: int = 0

    def __add__(self, other: "CorpusStats") -> "CorpusStats":
        return CorpusStats(
            self.sentence_count + other.sentence_count,
            self.word_count + other.word_count,
        )


def segment_sentences(text: str) -> list[str]:
    """Split text on end-of-line characters, dropping blank lines."""
    return [line for line in text.splitlines() if line.strip()]


def clean_sentence(sentence: str, profile: ScriptProfile) -> str:
    """Replace disallowed characters with spaces and collapse whitespace.

    Returns the empty string when nothing survives; callers drop those.
    """
    replaced = _disallowed_pattern(profile).sub(" ", sentence)
    return " ".join(replaced.split())


def clean_text(text: str, profile: ScriptProfile) -> list[str]:
    """Segment and clean raw text, keeping only non-empty sentences."""
    out = []
    for line in segment_sentences(text):
        cleaned = clean_sentence(line, profile)
        if cleaned:
            out.append(cleaned)
    return out


def corpus_stats(corpus: CleanCorpus) -> CorpusStats:
    words = sum(len(s.split()) for s in corpus.sentences)
    return CorpusStats(sentence_count=len(corpus.sentences), word_count=words)


def _read_text(path: str) -> str:
    # Social-media scrapes contain broken byte sequences; substitute, never crash.
    with open(path, "r", encoding="utf-8", errors="replace") as f:
        return f.read()


def clean_file(in_path: str, out_path: str, profile: ScriptProfile) -> CorpusStats:
    """Clean one file, preserving blank-line document separators.

    Runs of blank lines collapse to a single separator; leading/trailing
    blanks and sentences that clean to nothing are dropped. Output is one
    sentence per line and is byte-stable for a given (file, profile).
    """
    sentence_count = 0
    word_count = 0
    wrote_any = False
    pending_separator = False
    text = _read_text(in_path)
    with open(out_path, "w", encoding="utf-8") as out:
        for line in text.splitlines():
            if not line.strip():
                pending_separator = wrote_any
                continue
            cleaned = clean_sentence(line, profile)
            if not cleaned:
                continue
            if pending_separator:
                out.write("\n")
                pending_separator = False
            out.write(cleaned + "\n")
            wrote_any = True
            sentence_count += 1
            word_count += len(cleaned.split())
    return CorpusStats(sentence_count, word_count)


def list_text_files(root: str) -> list[str]:
    """All regular files under root, sorted for deterministic ordering."""
    found = []
    for dirpath, _dirnames, filenames in os.walk(root):
        for name in filenames:
            found.append(os.path.join(dirpath, name))
    return sorted(found)


def clean_directory(
    in_dir: str, out_dir: str, profile: ScriptProfile, threads: int = 1
) -> CorpusStats:
    """Clean every file under in_dir into out_dir (same relative names).

    Files are independent, so they may be cleaned concurrently; per-file
    output is identical regardless of parallelism and stats aggregation is
    an order-free sum.
    """
    paths = list_text_files(in_dir)
    if not paths:
        raise FileNotFoundError(f"no input files under {in_dir!r}")
    jobs = []
    for path in paths:
        rel = os.path.relpath(path, in_dir)
        dest = os.path.join(out_dir, rel)
        os.makedirs(os.path.dirname(dest), exist_ok=True)
        jobs.append((path, dest))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda j: clean_file(j[0], j[1], profile), jobs))
    else:
        results = [clean_file(src, dest, profile) for src, dest in jobs]
    total = CorpusStats()
    for stats in results:
        total = total + stats
    return total


def clean_raw_corpus(raw: RawCorpus, out_dir: str) -> CorpusStats:
    """Clean a mixed-profile corpus, one output file per source."""
    os.makedirs(out_dir, exist_ok=True)
    total = CorpusStats()
    for path, profile_name in raw.sources:
        dest = os.path.join(out_dir, os.path.basename(path))
        total = total + clean_file(path, dest, get_profile(profile_name))
    return total


def load_clean_corpus(paths_or_dir: str | list[str]) -> CleanCorpus:
    """Load cleaned files into memory; blank separator lines are skipped."""
    if isinstance(paths_or_dir, str):
        paths = list_text_files(paths_or_dir)
    else:
        paths = list(paths_or_dir)
    sentences: list[str] = []
    provenance: list[str] = []
    for path in paths:
        for line in _read_text(path).splitlines():
            if line.strip():
                sentences.append(line)
                provenance.append(path)
    return CleanCorpus(sentences, provenance)


def write_corpus_file(corpus: CleanCorpus, path: str) -> None:
    """Write a corpus as one sentence per line.

    A blank separator line is inserted whenever provenance changes, so
    document structure encoded in provenance round-trips through the
    file-based pipeline. Uniform provenance yields no separators, i.e. the
    one-document-per-line convention.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as out:
        previous = None
        for sentence, origin in zip(corpus.sentences, corpus.provenance):
            if previous is not None and origin != previous:
                out.write("\n")
            out.write(sentence + "\n")
            previous = origin


def stats_by_file(in_dir: str) -> dict[str, CorpusStats]:
    """Per-file statistics of a cleaned directory, keyed by relative path."""
    out: dict[str, CorpusStats] = {}
    for path in list_text_files(in_dir):
        sentences = 0
        words = 0
        for line in _read_text(path).splitlines():
            if line.strip():
                sentences += 1
                words += len(line.split())
        out[os.path.relpath(path, in_dir)] = CorpusStats(sentences, words)
    if not out:
        raise FileNotFoundError(f"no input files under {in_dir!r}")
    return out
