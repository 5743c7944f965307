import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_comment, write_lines
from stylo.corpus import (
    Comment,
    UserProfile,
    balance_classes,
    filter_comments,
    filter_users,
    load_corpus,
    split_dataset,
    write_corpus,
)
from stylo.errors import CorpusError, ValidationError


def rec(i, label="de", fluency=3):
    return {"id": f"c{i}", "user": f"u{i}", "label": label, "fluency": fluency, "text": "some text here"}


def test_load_well_formed(tmp_path):
    corpus = load_corpus(write_lines(tmp_path / "c.jsonl", [rec(i) for i in range(3)]))
    assert len(corpus.comments) == 3 and corpus.rejects == []


def test_load_malformed_line_is_rejected_with_line_number(tmp_path):
    lines = [rec(0), rec(1), "{not json", rec(3)]
    corpus = load_corpus(write_lines(tmp_path / "c.jsonl", lines))
    assert len(corpus.comments) == 3
    assert [line for line, _ in corpus.rejects] == [4]  # header is line 1


def test_missing_field_rejected(tmp_path):
    bad = rec(1)
    del bad["text"]
    corpus = load_corpus(write_lines(tmp_path / "c.jsonl", [rec(0), bad, rec(2)]))
    assert len(corpus.comments) == 2 and "text" in corpus.rejects[0][1]


def test_empty_file_is_empty_corpus(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    corpus = load_corpus(path)
    assert corpus.comments == [] and corpus.profiles == [] and corpus.rejects == []


def test_missing_header_is_fatal(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(write_lines(tmp_path / "c.jsonl", [rec(0)], header=False))


def test_majority_rejects_is_fatal(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(write_lines(tmp_path / "c.jsonl", [rec(0), "x", "y"]))


def test_duplicate_ids_rejected(tmp_path):
    corpus = load_corpus(write_lines(tmp_path / "c.jsonl", [rec(0), rec(1), rec(0)]))
    assert len(corpus.comments) == 2 and corpus.rejects[0][0] == 4


def test_round_trip(tmp_path):
    profiles = [UserProfile("u1", frozenset(["de"]), 3), UserProfile("u2", frozenset(["en-US"]), "native")]
    comments = [make_comment("c1", "de", "hello world", user="u1", fluency=3, tags=["UH", "NN"])]
    write_corpus(tmp_path / "c.jsonl", profiles, comments)
    back = load_corpus(tmp_path / "c.jsonl")
    assert back.profiles == profiles and back.comments == comments


def test_token_tag_length_mismatch():
    with pytest.raises(ValidationError):
        Comment("c", "u", "de", "a b", "native", ("a", "b"), ("DT",))


def test_bad_fluency():
    with pytest.raises(ValidationError):
        UserProfile("u", frozenset(["de"]), 7)


def profile(uid, *langs, fluency=3):
    return UserProfile(uid, frozenset(langs), fluency)


def test_filter_users_rules():
    ps = [profile("a", "de", "nl"), profile("b", "en-GB", fluency="native"), profile("c", "de"),
          profile("d", "en-US", fluency="native")]
    kept = {p.user_id for p in filter_users(ps)}
    assert kept == {"c", "d"}


def test_filter_users_top_20_with_lexicographic_ties():
    ps = []
    rng = np.random.default_rng(0)
    langs = [f"l{i:02d}" for i in range(25)]
    sizes = {lang: int(rng.integers(1, 6)) for lang in langs}
    for lang in langs:
        ps += [profile(f"{lang}-{j}", lang) for j in range(sizes[lang])]
    # brute force: rank by user count, ties by code
    expected = set(sorted(langs, key=lambda l: (-sizes[l], l))[:20])
    kept = {next(iter(p.native_languages)) for p in filter_users(ps)}
    assert kept == expected


def test_filter_users_needs_two_languages():
    with pytest.raises(ValidationError):
        filter_users([profile("a", "de"), profile("b", "de")])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["de", "fr", "en-US", "en-GB", "ja"]),
                          st.sampled_from(["de", "nl", None])), min_size=1, max_size=40))
def test_filter_users_idempotent(pairs):
    ps = [profile(f"u{i}", *[x for x in pair if x]) for i, pair in enumerate(pairs)]
    try:
        once = filter_users(ps, top_n=3)
    except ValidationError:
        return
    assert filter_users(once, top_n=3) == once


def test_filter_comments_boundary():
    c19 = make_comment("a", "x", tokens=["w"] * 19)
    c20 = make_comment("b", "x", tokens=["w"] * 20)
    assert filter_comments([c19, c20]) == [c20]
    assert filter_comments([c19]) == []


def comments_by_counts(counts):
    return [make_comment(f"{cat}{i}", cat, "a b") for cat, n in counts.items() for i in range(n)]


def test_balance_downsamples_to_minimum():
    out = balance_classes(comments_by_counts({"A": 10, "B": 7, "C": 7}), seed=1)
    labels = [c.label for c in out]
    assert {cat: labels.count(cat) for cat in "ABC"} == {"A": 7, "B": 7, "C": 7}


def test_balance_identity_on_balanced_input():
    cs = comments_by_counts({"A": 5, "B": 5})
    assert balance_classes(cs, seed=3) == cs


def test_balance_deterministic():
    cs = comments_by_counts({"A": 30, "B": 9})
    ids = lambda out: [c.comment_id for c in out]
    assert ids(balance_classes(cs, 5)) == ids(balance_classes(cs, 5))


def test_balance_empty_category_named():
    with pytest.raises(ValidationError, match="'B'"):
        balance_classes(comments_by_counts({"A": 3}), 0, categories=["A", "B"])


def test_split_sizes_examples():
    s = split_dataset(comments_by_counts({"A": 100}), seed=0)
    assert (len(s.train), len(s.dev), len(s.test)) == (70, 10, 20)
    s = split_dataset(comments_by_counts({"A": 10, "B": 10}), seed=0)
    assert s.category_counts == {"train": {"A": 7, "B": 7}, "dev": {"A": 1, "B": 1}, "test": {"A": 2, "B": 2}}


def test_split_too_small_category():
    with pytest.raises(ValidationError):
        split_dataset(comments_by_counts({"A": 10, "B": 2}), seed=0)


def test_split_partition_over_1000_seeds():
    rng = np.random.default_rng(42)
    cats = rng.choice(["A", "B", "C", "D"], size=500)
    cs = [make_comment(f"c{i}", str(cat), "a b") for i, cat in enumerate(cats)]
    all_ids = {c.comment_id for c in cs}
    per_cat = {cat: int((cats == cat).sum()) for cat in "ABCD"}
    for seed in range(1000):
        s = split_dataset(cs, seed=seed)
        tr, dv, te = ({c.comment_id for c in part} for part in (s.train, s.dev, s.test))
        assert len(tr) + len(dv) + len(te) == 500
        assert tr | dv | te == all_ids
        for cat, n in per_cat.items():
            assert abs(s.category_counts["train"][cat] - 0.7 * n) <= 1
            assert abs(s.category_counts["dev"][cat] - 0.1 * n) <= 1
            assert abs(s.category_counts["test"][cat] - 0.2 * n) <= 1


def test_split_deterministic():
    cs = comments_by_counts({"A": 20, "B": 20})
    assert split_dataset(cs, seed=9).ids() == split_dataset(cs, seed=9).ids()
    assert split_dataset(cs, seed=9).ids() != split_dataset(cs, seed=10).ids()
