import pytest
from hypothesis import given, settings, strategies as st

from stylo.datafiles import load_tsv
from stylo.errors import ConfigError, ValidationError
from stylo.textproc import (
    SENTINEL,
    TokenizedComment,
    get_tagger,
    normalize,
    pos_tag,
    prepare,
    split_sentences,
    tokenize,
)
from conftest import make_comment


@pytest.mark.parametrize(
    "text, expected",
    [
        ("I don't know.", ["I", "don't", "know", "."]),
        ("", []),
        ("hello,world", ["hello", ",", "world"]),
        ("  spaced\tout \n", ["spaced", "out"]),
        ("rock'n'roll 42!", ["rock'n'roll", "42", "!"]),
        ("'quoted'", ["'", "quoted", "'"]),
    ],
)
def test_tokenize(text, expected):
    assert tokenize(text) == expected


@pytest.mark.parametrize("text, n", [("A. B? C", 3), ("no terminator", 1), ("", 0), ("Wait... what?! Yes.", 3)])
def test_split_sentences(text, n):
    assert len(split_sentences(text)) == n


def test_builtin_tagger_example():
    lexicon = dict(load_tsv("lexicon.tsv"))
    assert [lexicon["the"], lexicon["cat"], lexicon["sleeps"]] == ["DT", "NN", "VBZ"]
    assert pos_tag(["The", "cat", "sleeps"]) == ["DT", "NN", "VBZ"]


def test_tagger_rules():
    tags = pos_tag(["Einstein", "was", "running", "quickly", "with", "3", "cats", ",", "Berlin"])
    assert tags == ["NNP", "VBD", "VBG", "RB", "IN", "CD", "NNS", ",", "NNP"]


def test_pretagged_pass_through():
    assert pos_tag(["a", "b"], "lexicon", given=["XX", "YY"]) == ["XX", "YY"]
    assert pos_tag(["a", "b"], "passthrough", given=["XX", "YY"]) == ["XX", "YY"]


def test_unknown_tagger():
    with pytest.raises(ConfigError):
        get_tagger("stanford")


def test_empty_tokens_rejected():
    with pytest.raises(ValidationError):
        pos_tag([])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.text(alphabet="abcXYZ'é.,!? ", min_size=1, max_size=8), max_size=12))
def test_tag_length_contract(words):
    tokens = tokenize(" ".join(words))
    if tokens:
        assert len(pos_tag(tokens)) == len(tokens)


def test_proper_noun_replaced_in_both_streams():
    out = normalize(["Einstein", "said", "so"], ["NNP", "VBD", "RB"], "Einstein said so")
    assert out.tokens == ("NNP", "said", "so")
    assert out.normalized_text == "NNP said so"


def test_non_ascii_sentinel():
    out = normalize(["naïve"], ["JJ"], "naïve")
    assert out.tokens == ("na\x1ave",) and out.normalized_text == "na\x1ave"
    assert normalize(["日本"], ["NN"], "日本").normalized_text == SENTINEL * 2


def test_ascii_without_proper_nouns_unchanged():
    text = "we like this page , really."
    out = normalize(tokenize(text), ["PRP", "VBP", "DT", "NN", ",", "RB", "."], text)
    assert out.normalized_text == text and list(out.tokens) == tokenize(text)
    assert out.sentence_count == 1


def test_length_mismatch():
    with pytest.raises(ValidationError):
        normalize(["a"], [], "a")


def test_prepare_uses_stored_tags():
    c = make_comment("c", "de", "Paris is big", tags=["NNP", "VBZ", "JJ"])
    assert prepare(c).tokens == ("NNP", "is", "big")


_text = st.text(alphabet=st.characters(codec="utf-8", exclude_categories=("Cs",)), max_size=60)


@settings(max_examples=300, deadline=None)
@given(_text)
def test_normalized_text_ascii_and_idempotent(text):
    tokens = tokenize(text)
    tags = pos_tag(tokens) if tokens else []
    once = normalize(tokens, tags, text)
    assert all(ord(ch) <= 0x7F for ch in once.normalized_text)
    assert all(ord(ch) <= 0x7F for tok in once.tokens for ch in tok)
    twice = normalize(once.tokens, once.pos_tags, once.normalized_text)
    assert twice == once


@settings(max_examples=300, deadline=None)
@given(_text)
def test_tokenize_round_trip(text):
    tokens = tokenize(text)
    assert tokenize(" ".join(tokens)) == tokens
