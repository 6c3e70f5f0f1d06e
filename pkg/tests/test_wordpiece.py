import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swapbert.wordpiece import (
    CONTINUATION_PREFIX,
    NUM_SPECIAL_TOKENS,
    SPECIAL_TOKENS,
    UNK_ID,
    TokenizerConfig,
    VocabFormatError,
    Vocabulary,
    detokenize_word_pieces,
    encode_word,
    load_vocab,
    save_vocab,
    tokenize,
    train_vocab,
    train_vocab_with_trace,
)


def greedy_oracle(word: str, tokens: set[str]) -> list[str] | None:
    """Independent longest-match reference: plain substring scans over a set."""
    pieces = []
    start = 0
    while start < len(word):
        match = None
        for end in range(len(word), start, -1):
            candidate = word[start:end]
            if start > 0:
                candidate = CONTINUATION_PREFIX + candidate
            if candidate in tokens:
                match = candidate
                break
        if match is None:
            return None
        pieces.append(match)
        start += len(match) - (len(CONTINUATION_PREFIX) if start > 0 else 0)
    return pieces


class TestTrainVocab:
    def test_four_word_example_matches_hand_run_merges(self):
        cfg = TokenizerConfig(target_size=12, min_frequency=1)
        vocab, merges, padding = train_vocab_with_trace(["ab ab ab abc"], cfg)
        # alphabet: every observed char in plain form, continuations for
        # word-internal chars; "a" never occurs word-internally.
        assert vocab.tokens == list(SPECIAL_TOKENS) + ["##b", "##c", "a", "b", "c", "ab", "abc"]
        # first merge is the most frequent pair (a,##b) -> "ab" (freq 4),
        # then (ab,##c) -> "abc" completes the target size.
        assert merges == ["ab", "abc"]
        assert padding == []

    def test_exact_target_size(self, small_corpus):
        cfg = TokenizerConfig(target_size=80, min_frequency=1)
        vocab = train_vocab(small_corpus, cfg)
        assert len(vocab) == 80

    def test_too_small_target_errors(self):
        cfg = TokenizerConfig(target_size=7, min_frequency=1)
        with pytest.raises(ValueError, match="alphabet"):
            train_vocab(["ab ab abc"], cfg)

    def test_empty_corpus_errors(self):
        with pytest.raises(ValueError, match="empty"):
            train_vocab([], TokenizerConfig(target_size=100))

    def test_unreachable_target_names_achieved_size(self):
        with pytest.raises(ValueError, match="unreachable|only"):
            train_vocab(["ab ab"], TokenizerConfig(target_size=1000, min_frequency=1))

    def test_padding_with_whole_words(self):
        # min_frequency 5 blocks every merge, so whole words fill the gap
        cfg = TokenizerConfig(target_size=12, min_frequency=5)
        corpus = ["aa bb aa bb aa bb aa bb aa bb cc cc cc cc cc"]
        vocab, merges, padding = train_vocab_with_trace(corpus, cfg)
        assert merges != [] or padding != []
        assert len(vocab) == 12

    def test_deterministic(self, small_corpus, small_tokenizer_cfg):
        v1 = train_vocab(small_corpus, small_tokenizer_cfg)
        v2 = train_vocab(small_corpus, small_tokenizer_cfg)
        assert v1.tokens == v2.tokens

    def test_lowercase_folds_case(self):
        cfg = TokenizerConfig(target_size=9, min_frequency=1, lowercase=True)
        vocab = train_vocab(["AB ab aB"], cfg)
        assert all(tok == tok.lower() for tok in vocab.tokens[NUM_SPECIAL_TOKENS:])
        assert "ab" in vocab

    def test_merge_parts_always_in_vocab(self, small_corpus):
        # every merged token decomposes into two in-vocabulary parts
        cfg = TokenizerConfig(target_size=90, min_frequency=1)
        vocab, merges, _padding = train_vocab_with_trace(small_corpus, cfg)
        for token in merges:
            plain = token.removeprefix(CONTINUATION_PREFIX)
            prefix = CONTINUATION_PREFIX if token.startswith(CONTINUATION_PREFIX) else ""
            ok = False
            for cut in range(1, len(plain)):
                left = prefix + plain[:cut]
                right = CONTINUATION_PREFIX + plain[cut:]
                if left in vocab and right in vocab:
                    ok = True
                    break
            assert ok, token


class TestVocabulary:
    def test_specials_enforced(self):
        with pytest.raises(ValueError):
            Vocabulary(["[PAD]", "[UNK]", "[SEP]", "[CLS]", "[MASK]", "a"])

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            Vocabulary(list(SPECIAL_TOKENS) + ["a", "a"])

    def test_whitespace_rejected(self):
        with pytest.raises(ValueError):
            Vocabulary(list(SPECIAL_TOKENS) + ["a b"])


class TestTokenize:
    def test_whole_word_hit(self, small_corpus):
        cfg = TokenizerConfig(target_size=19, min_frequency=1)
        vocab = train_vocab(["school school"], cfg)
        assert tokenize("school", vocab, cfg) == [vocab.id_of("school")]

    def test_greedy_split(self):
        tokens = list(SPECIAL_TOKENS) + ["par", "##ha", "##ta", "p", "a", "r", "h", "t"]
        vocab = Vocabulary(tokens)
        cfg = TokenizerConfig(target_size=len(tokens), min_frequency=1)
        got = tokenize("parhata", vocab, cfg)
        assert got == [vocab.id_of("par"), vocab.id_of("##ha"), vocab.id_of("##ta")]

    def test_unknown_char_maps_to_unk(self, small_vocab, small_tokenizer_cfg):
        assert tokenize("éé", small_vocab, small_tokenizer_cfg) == [UNK_ID]

    def test_overlong_word_is_unk(self, small_vocab):
        cfg = TokenizerConfig(target_size=len(small_vocab), max_word_chars=5, min_frequency=1)
        assert encode_word("a" * 6, small_vocab, cfg) == [UNK_ID]

    def test_agrees_with_oracle_on_random_words(self, small_vocab, small_tokenizer_cfg):
        token_set = set(small_vocab.tokens)
        rng = random.Random(99)
        alphabet = [t for t in small_vocab.tokens if len(t) == 1]
        for _ in range(1200):
            word = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 12)))
            got = tokenize(word, small_vocab, small_tokenizer_cfg)
            expected = greedy_oracle(word, token_set)
            if expected is None:
                assert got == [UNK_ID]
            else:
                assert got == [small_vocab.id_of(p) for p in expected]

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_coverage_roundtrip(self, data):
        corpus_words = data.draw(
            st.lists(st.text(alphabet="abcd", min_size=1, max_size=6), min_size=1, max_size=20)
        )
        cfg = TokenizerConfig(target_size=40, min_frequency=1)
        try:
            vocab = train_vocab([" ".join(corpus_words)], cfg)
        except ValueError:
            return  # target unreachable for this draw
        word = data.draw(st.text(alphabet="abcd", min_size=1, max_size=10)).lower()
        ids = tokenize(word, vocab, cfg)
        if UNK_ID not in ids:
            pieces = [vocab.token(i) for i in ids]
            assert detokenize_word_pieces(pieces) == word


class TestVocabIO:
    def test_roundtrip(self, small_vocab, tmp_path):
        path = tmp_path / "vocab.txt"
        save_vocab(small_vocab, str(path))
        assert load_vocab(str(path)) == small_vocab

    def test_save_load_save_bytes_identical(self, small_vocab, tmp_path):
        p1 = tmp_path / "v1.txt"
        p2 = tmp_path / "v2.txt"
        save_vocab(small_vocab, str(p1))
        save_vocab(load_vocab(str(p1)), str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_duplicate_token_errors(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("\n".join(SPECIAL_TOKENS) + "\na\na\n", encoding="utf-8")
        with pytest.raises(VocabFormatError, match="duplicate"):
            load_vocab(str(path))

    def test_empty_line_errors(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("\n".join(SPECIAL_TOKENS) + "\n\na\n", encoding="utf-8")
        with pytest.raises(VocabFormatError, match="empty"):
            load_vocab(str(path))

    def test_wrong_special_layout_errors(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("a\nb\nc\nd\ne\nf\n", encoding="utf-8")
        with pytest.raises(VocabFormatError):
            load_vocab(str(path))
