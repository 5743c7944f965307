import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from stylo.datafiles import load_stopwords
from stylo.errors import ValidationError
from stylo.features import (
    FeatureLayout,
    Standardizer,
    apply,
    assemble,
    assemble_matrix,
    fit_standardizer,
    read_feature_csv,
    write_feature_csv,
)
from stylo.ngram import ModelBank, build_bank
from stylo.textproc import normalize, pos_tag, tokenize

CATS6 = ("US-EN", "German", "Spanish", "French", "Russian", "Dutch")


def prep(text):
    toks = tokenize(text)
    return normalize(toks, pos_tag(toks), text)


@pytest.fixture(scope="module")
def bank6():
    texts = [prep(f"The editor {w} the article about Einstein. It was good.") for w in
             ("checked", "fixed", "moved", "liked", "read", "cited")]
    return build_bank(texts, CATS6, CATS6)


def test_stopword_list_is_pinned():
    words = load_stopwords()
    assert len(words) == 125 and len(set(words)) == 125
    assert all(w == w.lower() for w in words) and "the" in words


def test_geometry_six_categories(bank6):
    vec = assemble(prep("We think the page is good."), bank6)
    assert vec.layout.n_similarity == 72
    assert len(vec.values) == len(vec.layout) == 200
    assert vec.layout.names[0] == "sim.US-EN.words.1"
    assert vec.layout.names[4] == "sim.US-EN.chars.1"
    assert vec.layout.names[72] == "stop." + load_stopwords()[0]
    assert vec.layout.names[-3:] == ["stat.avg_word_len", "stat.comment_size", "stat.avg_sentences"]


def test_similarity_segment_order(bank6):
    from stylo.ngram import similarity, stream_of

    c = prep("The editor checked the page. Good.")
    vec = assemble(c, bank6)
    for i, name in enumerate(vec.layout.names[:72]):
        _, cat, stream, n = name.split(".")
        assert vec.values[i] == similarity(stream_of(c, stream), bank6[(cat, stream, int(n))])


def test_stopword_frequencies(bank6):
    tokens = ["the"] * 8 + ["zebra"] * 32
    c = normalize(tokens, ["DT"] * 8 + ["NN"] * 32, " ".join(tokens))
    vec = assemble(c, bank6)
    seg = vec.values[vec.layout.segment("stopword_freqs")]
    assert seg[load_stopwords().index("the")] == pytest.approx(0.2)
    assert seg.sum() == pytest.approx(0.2)
    stats = vec.values[vec.layout.segment("stats")]
    assert list(stats) == [pytest.approx((8 * 3 + 32 * 5) / 40), 40.0, 1.0]


def test_no_stopwords_gives_zeros(bank6):
    vec = assemble(prep("Zebras gallop swiftly"), bank6)
    assert not vec.values[vec.layout.segment("stopword_freqs")].any()


def test_only_stopwords_sum_to_one(bank6):
    vec = assemble(prep("The and of it was"), bank6)
    seg = vec.values[vec.layout.segment("stopword_freqs")]
    assert seg.sum() == pytest.approx(1.0) and seg.min() >= 0 and seg.max() <= 1


def test_empty_text(bank6):
    vec = assemble(normalize([], [], ""), bank6)
    assert np.all(vec.values == 0)


def test_incomplete_bank(bank6):
    models = dict(bank6.models)
    del models[("Dutch", "chars", 4)]
    with pytest.raises(ValidationError, match="Dutch, chars, 4"):
        assemble(prep("a b"), ModelBank(CATS6, models))


def test_wrong_stopword_count(bank6):
    with pytest.raises(ValidationError):
        assemble(prep("a"), bank6, stopwords=["the"])


def test_assemble_pure_and_deterministic(bank6):
    c = prep("The article about Einstein was checked. It was good!")
    a = assemble(c, bank6).values
    b = assemble(c, bank6).values
    assert np.array_equal(a, b)
    X, layout = assemble_matrix([c, c], bank6)
    assert np.array_equal(X[0], a) and X.shape == (2, len(layout))


def test_standardizer_examples():
    s = fit_standardizer(np.array([[0.0, 5.0], [2.0, 5.0]]))
    out = s.apply(np.array([[0.0, 5.0], [2.0, 5.0]]))
    assert out.tolist() == [[-1.0, 5.0], [1.0, 5.0]]


def test_standardizer_needs_two_rows():
    with pytest.raises(ValidationError):
        fit_standardizer(np.ones((1, 3)))


def test_standardizer_length_mismatch():
    s = fit_standardizer(np.eye(3))
    with pytest.raises(ValidationError):
        apply(s, np.ones(4))


@settings(max_examples=100, deadline=None)
@given(arrays(float, st.tuples(st.integers(2, 30), st.integers(1, 6)),
              elements=st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=False, width=64)))
def test_standardized_columns_centered(X):
    s = fit_standardizer(X)
    Z = s.apply(X)
    assert np.all(np.isfinite(Z))
    varying = np.ptp(X, axis=0) > 0
    constant = ~varying
    scale = max(1.0, float(np.abs(Z).max()))
    assert np.all(np.abs(Z[:, varying].mean(axis=0)) < 1e-9 * scale)
    assert np.array_equal(Z[:, constant], X[:, constant])


def test_standardizer_unit_variance():
    rng = np.random.default_rng(0)
    X = rng.normal(3, 7, size=(50, 4))
    Z = fit_standardizer(X).apply(X)
    assert np.allclose(Z.mean(axis=0), 0, atol=1e-12) and np.allclose(Z.std(axis=0), 1)


def test_standardizer_json_round_trip():
    s = fit_standardizer(np.random.default_rng(1).normal(size=(5, 3)))
    back = Standardizer.from_json(s.to_json())
    assert np.array_equal(back.means, s.means) and np.array_equal(back.std_devs, s.std_devs)


def test_feature_csv_round_trip(tmp_path, bank6):
    X, layout = assemble_matrix([prep("The page, really."), prep("Einstein wrote it. Twice?")], bank6)
    X[0, 0] = 1 / 3
    write_feature_csv(tmp_path / "f.csv", X, layout, ids=["a", "b"], labels=["US-EN", "Dutch"])
    names, back, meta = read_feature_csv(tmp_path / "f.csv")
    assert names == layout.names and np.array_equal(back, X) and meta == [["a", "US-EN"], ["b", "Dutch"]]


def test_layout_checksum_depends_on_order():
    sw = load_stopwords()
    assert FeatureLayout(("a", "b"), sw).checksum() != FeatureLayout(("b", "a"), sw).checksum()
