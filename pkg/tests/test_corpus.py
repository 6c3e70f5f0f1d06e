import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swapbert.corpus import (
    ARABIC_DIGIT_RANGES,
    ARABIC_LETTER_RANGES,
    LATIN_PROFILE,
    LATIN_URDU_PROFILE,
    CleanCorpus,
    CorpusStats,
    clean_directory,
    clean_file,
    clean_sentence,
    clean_text,
    corpus_stats,
    get_profile,
    load_clean_corpus,
    segment_sentences,
    stats_by_file,
    urdu_profile,
    write_corpus_file,
)


class TestSegmentSentences:
    def test_splits_on_newlines(self):
        text = "Abbas school main parhata hai\nwoh acha hai"
        assert segment_sentences(text) == [
            "Abbas school main parhata hai",
            "woh acha hai",
        ]

    def test_empty_input(self):
        assert segment_sentences("") == []

    def test_blank_lines_dropped(self):
        assert segment_sentences("a\n\n  \nb") == ["a", "b"]

    def test_crlf_and_trailing_newline(self):
        assert segment_sentences("a\r\nb\n") == ["a", "b"]


class TestCleanSentence:
    def test_strips_punctuation(self):
        got = clean_sentence("Abbas school main parhata hai!", LATIN_PROFILE)
        assert got == "Abbas school main parhata hai"

    def test_urls_and_mentions(self):
        got = clean_sentence("@user http://t.co/x 123...", LATIN_PROFILE)
        assert got == "user http t co x 123"

    def test_all_removed_is_empty(self):
        assert clean_sentence("!!! ... ???", LATIN_PROFILE) == ""

    def test_case_preserved(self):
        assert clean_sentence("MiXeD Case", LATIN_PROFILE) == "MiXeD Case"

    def test_punctuation_between_words_separates(self):
        # deletion-in-place would fuse "school,main" into one token
        assert clean_sentence("school,main", LATIN_PROFILE) == "school main"

    def test_urdu_letters_survive_urdu_profile(self):
        assert clean_sentence("ہے", LATIN_URDU_PROFILE) == "ہے"
        assert clean_sentence("ہے", LATIN_PROFILE) == ""

    def test_arabic_punctuation_removed(self):
        # U+061F is the Arabic question mark, not a letter
        assert clean_sentence("کیا؟", LATIN_URDU_PROFILE) == "کیا"

    def test_urdu_digits_toggle(self):
        digits = "۱۲۳"
        assert clean_sentence(digits, urdu_profile(True)) == digits
        assert clean_sentence(digits, urdu_profile(False)) == ""

    def test_harakat_removed(self):
        # combining marks are outside the letter ranges
        assert clean_sentence("بَ", LATIN_URDU_PROFILE) == "ب"

    @given(st.text(max_size=200))
    def test_idempotent(self, s):
        once = clean_sentence(s, LATIN_PROFILE)
        assert clean_sentence(once, LATIN_PROFILE) == once

    @given(st.text(max_size=200))
    def test_closure(self, s):
        cleaned = clean_sentence(s, LATIN_URDU_PROFILE)
        for ch in cleaned:
            assert ch == " " or LATIN_URDU_PROFILE.allows(ch)
        assert "  " not in cleaned
        assert cleaned == cleaned.strip()


def test_profile_ranges_are_letters_and_digits():
    import unicodedata

    for lo, hi in ARABIC_LETTER_RANGES:
        for cp in range(lo, hi + 1):
            category = unicodedata.category(chr(cp))
            # unassigned code points are fine; assigned ones must be letters
            if category != "Cn":
                assert category.startswith("L"), f"U+{cp:04X} is {category}"
    for lo, hi in ARABIC_DIGIT_RANGES:
        for cp in range(lo, hi + 1):
            assert unicodedata.category(chr(cp)) == "Nd"


def test_get_profile_aliases():
    assert get_profile("latin") is LATIN_PROFILE
    assert get_profile("latin_digits") is LATIN_PROFILE
    assert get_profile("latin+urdu").name == "latin_digits_plus_urdu"
    with pytest.raises(ValueError):
        get_profile("klingon")


class TestCorpusStats:
    def test_simple(self):
        corpus = CleanCorpus.from_sentences(["a b", "c"])
        assert corpus_stats(corpus) == CorpusStats(2, 3)

    def test_empty(self):
        assert corpus_stats(CleanCorpus.from_sentences([])) == CorpusStats(0, 0)

    @given(st.lists(st.lists(st.text(alphabet="ab", min_size=1, max_size=4), min_size=1, max_size=6)))
    def test_word_count_at_least_sentence_count(self, word_lists):
        corpus = CleanCorpus.from_sentences([" ".join(ws) for ws in word_lists])
        stats = corpus_stats(corpus)
        assert stats.word_count >= stats.sentence_count


class TestFilePipeline:
    def test_clean_file_preserves_document_separators(self, tmp_path):
        raw = tmp_path / "raw.txt"
        raw.write_text("one! two.\n\n\nthree?\n...\nfour\n\n", encoding="utf-8")
        out = tmp_path / "clean.txt"
        stats = clean_file(str(raw), str(out), LATIN_PROFILE)
        # "..." cleans to nothing and must not create a separator
        assert out.read_text(encoding="utf-8") == "one two\n\nthree\nfour\n"
        assert stats == CorpusStats(3, 4)

    def test_clean_file_idempotent(self, tmp_path):
        raw = tmp_path / "raw.txt"
        raw.write_text("a! b?\n\nc#d\n", encoding="utf-8")
        once = tmp_path / "once.txt"
        twice = tmp_path / "twice.txt"
        clean_file(str(raw), str(once), LATIN_PROFILE)
        clean_file(str(once), str(twice), LATIN_PROFILE)
        assert once.read_bytes() == twice.read_bytes()

    def test_invalid_bytes_substituted(self, tmp_path):
        raw = tmp_path / "raw.txt"
        raw.write_bytes(b"ok \xff\xfe text\n")
        out = tmp_path / "clean.txt"
        clean_file(str(raw), str(out), LATIN_PROFILE)
        assert out.read_text(encoding="utf-8") == "ok text\n"

    def test_clean_directory_threads_identical(self, tmp_path):
        in_dir = tmp_path / "in"
        in_dir.mkdir()
        for i in range(6):
            (in_dir / f"f{i}.txt").write_text(f"file {i}!\nmore, text {i}\n", encoding="utf-8")
        out1 = tmp_path / "out1"
        out4 = tmp_path / "out4"
        stats1 = clean_directory(str(in_dir), str(out1), LATIN_PROFILE, threads=1)
        stats4 = clean_directory(str(in_dir), str(out4), LATIN_PROFILE, threads=4)
        assert stats1 == stats4
        for i in range(6):
            assert (out1 / f"f{i}.txt").read_bytes() == (out4 / f"f{i}.txt").read_bytes()

    def test_segment_stability_across_chunks(self):
        text = "a\nbb\nccc\ndddd\n"
        whole = segment_sentences(text)
        chunked = segment_sentences("a\nbb\n") + segment_sentences("ccc\ndddd\n")
        assert whole == chunked

    def test_stats_by_file(self, tmp_path):
        (tmp_path / "x.txt").write_text("a b\n\nc\n", encoding="utf-8")
        stats = stats_by_file(str(tmp_path))
        assert stats == {"x.txt": CorpusStats(2, 3)}

    def test_write_and_load_roundtrip_document_structure(self, tmp_path):
        corpus = CleanCorpus(
            ["a a", "b", "c c c"],
            ["lang/doc0", "lang/doc0", "lang/doc1"],
        )
        path = tmp_path / "corpus.txt"
        write_corpus_file(corpus, str(path))
        assert path.read_text(encoding="utf-8") == "a a\nb\n\nc c c\n"
        loaded = load_clean_corpus([str(path)])
        assert loaded.sentences == corpus.sentences


def test_clean_text_drops_empty_results():
    assert clean_text("good line\n!!!\nanother", LATIN_PROFILE) == ["good line", "another"]


def test_clean_raw_corpus_mixed_profiles(tmp_path):
    from swapbert.corpus import RawCorpus, clean_raw_corpus

    latin = tmp_path / "latin.txt"
    latin.write_text("hello! ہے\n", encoding="utf-8")
    urdu = tmp_path / "urdu.txt"
    urdu.write_text("hello! ہے\n", encoding="utf-8")
    out = tmp_path / "out"
    raw = RawCorpus(((str(latin), "latin"), (str(urdu), "latin+urdu")))
    stats = clean_raw_corpus(raw, str(out))
    assert (out / "latin.txt").read_text(encoding="utf-8") == "hello\n"
    assert (out / "urdu.txt").read_text(encoding="utf-8") == "hello ہے\n"
    assert stats == CorpusStats(2, 3)
