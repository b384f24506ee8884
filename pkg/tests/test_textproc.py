import random
import string

import pytest

from totbench.textproc import (
    DEFAULT_ABBREVIATIONS,
    KrovetzLightStemmer,
    PipelineConfig,
    analyze,
    load_stem_exceptions,
    load_stopwords,
    normalize_whitespace,
    remove_stopwords,
    segment_sentences,
    to_tokens,
    tokenize,
)

from stemdata import STEM_PAIRS


# --- tokenizer ---------------------------------------------------------------


def test_tokenize_splits_on_non_alphanumerics():
    assert tokenize("Grand Canyon-esque!") == ["grand", "canyon", "esque"]


def test_tokenize_keeps_digit_tokens():
    assert tokenize("late 70s early 80s") == ["late", "70s", "early", "80s"]
    assert tokenize("released in 1986") == ["released", "in", "1986"]


def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_underscore_and_apostrophe_split():
    assert tokenize("it's_fine") == ["it", "s", "fine"]


# --- stopwords ---------------------------------------------------------------


def test_remove_stopwords_order_preserving():
    sw = load_stopwords()
    assert remove_stopwords(["the", "man", "is", "blond"], sw) == ["man", "blond"]


def test_remove_stopwords_all_stopwords():
    sw = load_stopwords()
    assert remove_stopwords(["the", "of", "and"], sw) == []


def test_remove_stopwords_passthrough():
    sw = load_stopwords()
    assert remove_stopwords(["laika"], sw) == ["laika"]


def test_default_stopword_list_nonempty_and_lowercase():
    sw = load_stopwords()
    assert len(sw) > 300
    assert all(w == w.lower() for w in sw)


def test_stopword_file_comments(tmp_path):
    p = tmp_path / "sw.txt"
    p.write_text("# comment\nfoo\n\nbar\n", encoding="utf-8")
    assert load_stopwords(p) == {"foo", "bar"}


# --- stemmer -----------------------------------------------------------------


@pytest.fixture(scope="module")
def stemmer():
    return KrovetzLightStemmer()


@pytest.mark.parametrize("word,expected", STEM_PAIRS)
def test_stem_rule_table(stemmer, word, expected):
    assert stemmer.stem(word) == expected


def test_stem_spec_cases(stemmer):
    assert stemmer.stem("movies") == "movie"
    assert stemmer.stem("running") == "run"
    assert stemmer.stem("was") == "was"


def test_stem_idempotent_on_pairs(stemmer):
    for _, stem in STEM_PAIRS:
        assert stemmer.stem(stem) == stem


def test_lexicon_values_are_fixpoints(stemmer):
    for surface, target in load_stem_exceptions().items():
        assert stemmer.stem(surface) == target
        assert stemmer.stem(target) == target


def test_stem_idempotence_fuzz(stemmer):
    rng = random.Random(20240301)
    for _ in range(10_000):
        w = "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(1, 14)))
        s = stemmer.stem(w)
        assert stemmer.stem(s) == s
        if len(w) >= 2:
            assert len(s) >= 2


def test_bad_exception_file(tmp_path):
    p = tmp_path / "exc.tsv"
    p.write_text("onefieldonly\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_stem_exceptions(p)


# --- pipeline config / analyze -------------------------------------------------


def test_pipeline_config_rejects_unknown_stemmer():
    with pytest.raises(ValueError):
        PipelineConfig(stopword_set=frozenset({"the"}), stemmer="porter")


def test_pipeline_config_rejects_bad_abbreviation():
    with pytest.raises(ValueError):
        PipelineConfig(stopword_set=frozenset({"the"}), abbreviation_set=frozenset({"dr"}))


def test_analyze_pipeline_trace():
    cfg = PipelineConfig.default()
    assert analyze("The main character looks like Brad Pitt.", cfg) == [
        "main", "character", "look", "brad", "pitt",
    ]


def test_analyze_empty():
    assert analyze("", PipelineConfig.default()) == []


def test_analyze_same_path_for_documents_and_queries():
    cfg = PipelineConfig.default()
    text = "Two dogs were chasing the postman"
    assert analyze(text, cfg) == analyze(text, cfg)


def test_analyze_deterministic_repeat():
    cfg = PipelineConfig.default()
    outs = {tuple(analyze("Strange CGI-animated wolves howled.", cfg)) for _ in range(5)}
    assert len(outs) == 1


def test_analyze_output_never_contains_stopwords():
    cfg = PipelineConfig.default()
    # "likes" stems to "like", which is itself a stopword and must be dropped.
    assert "like" not in analyze("He likes dogs.", cfg)
    rng = random.Random(5)
    words = ["likes", "used", "wanted", "goes", "seeing", "dogs", "cats", "years"]
    for _ in range(50):
        text = " ".join(rng.choice(words) for _ in range(10))
        assert not set(analyze(text, cfg)) & cfg.stopword_set


def test_to_tokens_keeps_surface_and_stem():
    cfg = PipelineConfig.default()
    tokens = to_tokens("Wolves howled loudly", cfg)
    assert [t.surface for t in tokens] == ["wolves", "howled", "loudly"]
    assert [t.stem for t in tokens] == ["wolf", "howl", "loudly"]


def test_identity_stemmer():
    cfg = PipelineConfig.bare()
    assert analyze("Running dogs ran", cfg) == ["running", "dogs", "ran"]


# --- sentence segmentation -----------------------------------------------------


def test_segment_basic_split():
    assert segment_sentences("I saw it in 1999. It had a dog.") == [
        "I saw it in 1999.",
        "It had a dog.",
    ]


def test_segment_abbreviation_guard():
    assert segment_sentences("It was on Dr. Smith's list.") == ["It was on Dr. Smith's list."]


def test_segment_empty():
    assert segment_sentences("") == []
    assert segment_sentences("   ") == []


def test_segment_single_letter_initials():
    assert segment_sentences("J. K. Rowling wrote it. Everyone read it.") == [
        "J. K. Rowling wrote it.",
        "Everyone read it.",
    ]


def test_segment_decimal_numbers():
    assert segment_sentences("It scored 8.5 on the site. Great film.") == [
        "It scored 8.5 on the site.",
        "Great film.",
    ]


def test_segment_requires_uppercase_follow():
    assert segment_sentences("He left. then he returned.") == ["He left. then he returned."]


def test_segment_question_and_exclamation():
    assert segment_sentences("What was it called? Nobody knew! It stayed lost.") == [
        "What was it called?",
        "Nobody knew!",
        "It stayed lost.",
    ]


def test_segment_ellipsis_run():
    assert segment_sentences("It faded... Then it returned.") == [
        "It faded...",
        "Then it returned.",
    ]


def test_segment_no_trailing_punctuation():
    assert segment_sentences("First part. second part still going") == [
        "First part. second part still going",
    ]


def test_segment_lossless_join():
    samples = [
        "I saw it in 1999. It had a dog.",
        "It was on Dr. Smith's list. Mr. Jones agreed.",
        "One.  Two!   Three?",
        "Numbers like 3.5 stay. Letters split.",
        "No boundary here",
    ]
    for text in samples:
        joined = " ".join(segment_sentences(text))
        assert normalize_whitespace(joined) == normalize_whitespace(text)


def test_default_abbreviations_end_with_period():
    assert all(a.endswith(".") for a in DEFAULT_ABBREVIATIONS)
