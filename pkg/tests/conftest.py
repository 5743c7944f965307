import json

import pytest

from stylo.corpus import Comment, Corpus, write_corpus
from stylo.synthetic import generate_synthetic


def make_comment(cid, label, text=None, tokens=None, user=None, fluency="native", tags=None):
    if tokens is None and text is not None:
        tokens = tuple(text.split())
    if text is None:
        text = " ".join(tokens)
    return Comment(cid, user or f"u-{cid}", label, text, fluency, tuple(tokens), tuple(tags) if tags else None)


@pytest.fixture(scope="session")
def small_synthetic():
    profiles, comments = generate_synthetic(2, 150, 1.0, seed=11)
    return Corpus(profiles, comments)


@pytest.fixture(scope="session")
def synthetic_file(tmp_path_factory, small_synthetic):
    path = tmp_path_factory.mktemp("corpus") / "synthetic.jsonl"
    write_corpus(path, small_synthetic.profiles, small_synthetic.comments)
    return path


def write_lines(path, records, header=True):
    with open(path, "w") as fh:
        if header:
            fh.write(json.dumps({"format": "stylo-corpus", "version": 1}) + "\n")
        for r in records:
            fh.write((r if isinstance(r, str) else json.dumps(r)) + "\n")
    return path
