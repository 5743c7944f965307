import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_similarity, random_similarity_case
from stylo.errors import ValidationError
from stylo.ngram import SEP, ModelBank, NGramModel, build_bank, build_model, extract_grams, similarity
from stylo.textproc import TokenizedComment


def tc(seq, stream="words"):
    """TokenizedComment carrying ``seq`` on the requested stream."""
    if stream == "chars":
        return TokenizedComment((), (), 1, seq)
    if stream == "pos":
        return TokenizedComment(tuple(seq), tuple(seq), 1, "")
    return TokenizedComment(tuple(seq), tuple("NN" for _ in seq), 1, " ".join(seq))


def test_extract_grams_examples():
    assert extract_grams(["a", "b", "a", "b"], 2) == Counter({f"a{SEP}b": 2, f"b{SEP}a": 1})
    assert extract_grams(["x", "y", "x"], 1) == Counter({"x": 2, "y": 1})
    assert extract_grams(["a", "b", "c"], 4) == Counter()
    assert extract_grams("abab", 3) == Counter({"aba": 1, "bab": 1})


def test_extract_grams_bad_order():
    with pytest.raises(ValidationError):
        extract_grams(["a"], 5)


def test_separator_avoids_collisions():
    assert set(extract_grams(["ab", "c"], 2)) != set(extract_grams(["a", "bc"], 2))


def test_build_model_examples():
    m = build_model([tc("a b a".split())], "X", "words", 1)
    assert dict(m.counts) == {"a": 2, "b": 1} and m.total_grams == 3
    twice = build_model([tc("a b a".split())] * 2, "X", "words", 1)
    assert dict(twice.counts) == {"a": 4, "b": 2}
    assert dict(build_model([tc("ab", "chars")], "X", "chars", 2).counts) == {"ab": 1}


def test_build_model_empty():
    with pytest.raises(ValidationError):
        build_model([], "X", "words", 1)


def test_model_invariants_enforced():
    with pytest.raises(ValidationError):
        NGramModel("X", "words", 1, {"a": 0}, 0)
    with pytest.raises(ValidationError):
        NGramModel("X", "words", 1, {"a": 2}, 3)


def test_similarity_examples():
    m = build_model([tc("a b a b c".split())], "X", "words", 2)
    assert dict(m.counts) == {f"a{SEP}b": 2, f"b{SEP}a": 1, f"b{SEP}c": 1}
    assert similarity(("a", "b", "c"), m) == 1.0
    assert similarity(("a",), m) == 0.0
    assert similarity(("q", "r", "s"), m) == 0.0


def test_model_is_frozen():
    m = build_model([tc("a b".split())], "X", "words", 1)
    with pytest.raises(TypeError):
        m.counts["a"] = 5
    before = dict(m.counts)
    similarity(("zz", "a"), m)
    assert dict(m.counts) == before


def test_similarity_matches_oracle():
    rng = random.Random(1234)
    for _ in range(1000):
        model_seqs, comment, stream, order = random_similarity_case(rng)
        m = build_model([tc(s, stream) for s in model_seqs], "X", stream, order)
        expected = brute_similarity(comment, model_seqs, order)
        assert abs(similarity(comment, m) - expected) <= 1e-9


_seq = st.lists(st.sampled_from(["a", "b", "c"]), max_size=15)


@settings(max_examples=150, deadline=None)
@given(_seq, _seq, st.integers(1, 4))
def test_build_model_additive(a, b, n):
    if not a or not b:
        return
    ma = build_model([tc(a)], "X", "words", n)
    mb = build_model([tc(b)], "X", "words", n)
    mab = build_model([tc(a), tc(b)], "X", "words", n)
    assert Counter(mab.counts) == Counter(ma.counts) + Counter(mb.counts)
    assert mab.total_grams == ma.total_grams + mb.total_grams


@settings(max_examples=150, deadline=None)
@given(st.lists(_seq, min_size=1, max_size=4), _seq)
def test_similarity_monotone_in_frequent_grams(model_seqs, comment):
    m = build_model([tc(s) for s in model_seqs], "X", "words", 1)
    frequent = sorted(g for g, c in m.counts.items() if c >= 2)
    if not frequent:
        return
    base = similarity(tuple(comment), m)
    assert similarity(tuple(comment) + (frequent[0],), m) > base
    assert base >= 0.0


def make_bank(categories=("A", "B", "C")):
    comments = [tc(f"w{i % 3} x y{i % 2} z".split()) for i in range(9)]
    labels = [categories[i % len(categories)] for i in range(9)]
    return build_bank(comments, labels, categories)


def test_bank_size():
    assert len(make_bank().models) == 3 * 12
    assert len(make_bank(("A", "B")).models) == 2 * 12


def test_bank_round_trip(tmp_path):
    bank = make_bank()
    bank.save(tmp_path / "bank.json")
    back = ModelBank.load(tmp_path / "bank.json")
    assert back.category_order == bank.category_order
    for key, m in bank.models.items():
        assert dict(back[key].counts) == dict(m.counts) and back[key].total_grams == m.total_grams
    assert back.to_json() == bank.to_json()


def test_bank_checksum_detects_tampering():
    import json

    doc = json.loads(make_bank().to_json())
    ModelBank.from_json(json.dumps(doc, indent=1))  # layout alone is harmless
    doc["bank"]["models"][0]["counts"]["x"] += 1
    doc["bank"]["models"][0]["total_grams"] += 1
    with pytest.raises(ValidationError, match="checksum"):
        ModelBank.from_json(json.dumps(doc))


def test_incomplete_bank_names_missing_triple():
    bank = make_bank()
    models = dict(bank.models)
    del models[("B", "pos", 3)]
    with pytest.raises(ValidationError, match=r"\(B, pos, 3\)"):
        ModelBank(bank.category_order, models).check_complete()


def test_log2_count():
    m = build_model([tc("a a a a b".split())], "X", "words", 1)
    assert m.log2_count("a") == 2.0 and m.log2_count("q") == 0.0 and math.isclose(m.log2_count("b"), 0.0)
