"""Per-comment feature vectors and training-split standardization.

Vector layout, in order:

* ``sim.<category>.<stream>.<n>`` for categories in bank order, streams
  words/chars/pos, n = 1..4 (K * 12 columns)
* ``stop.<word>`` relative frequency of each of the 125 stop words
* ``stat.avg_word_len``, ``stat.comment_size``, ``stat.avg_sentences``
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._util import sha256_text
from .datafiles import STOPWORD_COUNT, load_stopwords
from .errors import ValidationError
from .ngram import ORDERS, STREAMS, ModelBank, iter_grams, stream_of

STAT_NAMES = ("avg_word_len", "comment_size", "avg_sentences")


@dataclass(frozen=True)
class FeatureLayout:
    categories: tuple[str, ...]
    stopwords: tuple[str, ...]

    @property
    def names(self) -> list[str]:
        names = [
            f"sim.{cat}.{stream}.{n}" for cat in self.categories for stream in STREAMS for n in ORDERS
        ]
        names += [f"stop.{w}" for w in self.stopwords]
        names += [f"stat.{s}" for s in STAT_NAMES]
        return names

    def __len__(self):
        return len(self.categories) * len(STREAMS) * len(ORDERS) + len(self.stopwords) + len(STAT_NAMES)

    @property
    def n_similarity(self) -> int:
        return len(self.categories) * len(STREAMS) * len(ORDERS)

    def segment(self, name: str) -> slice:
        k = self.n_similarity
        if name == "similarities":
            return slice(0, k)
        if name == "stopword_freqs":
            return slice(k, k + len(self.stopwords))
        if name == "stats":
            return slice(k + len(self.stopwords), len(self))
        raise KeyError(name)

    def groups(self) -> dict[str, list[int]]:
        """Column indices per feature group: one per (stream, n), plus stopwords and stats."""
        out: dict[str, list[int]] = {f"{s}.{n}": [] for s in STREAMS for n in ORDERS}
        for i, name in enumerate(self.names[: self.n_similarity]):
            _, _, stream, n = name.rsplit(".", 3)
            out[f"{stream}.{n}"].append(i)
        out["stopwords"] = list(range(self.segment("stopword_freqs").start, self.segment("stopword_freqs").stop))
        out["stats"] = list(range(self.segment("stats").start, self.segment("stats").stop))
        return out

    def checksum(self) -> str:
        return sha256_text("\n".join(self.names))


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    layout: FeatureLayout


def _check_stopwords(stopwords):
    if len(stopwords) != STOPWORD_COUNT:
        raise ValidationError(f"expected {STOPWORD_COUNT} stop words, got {len(stopwords)}")


def _values(comment, bank: ModelBank, stopwords: Sequence[str]) -> list[float]:
    values: list[float] = []
    sims = {}
    for stream in STREAMS:
        seq = stream_of(comment, stream)
        for n in ORDERS:
            grams = list(iter_grams(seq, n))
            for cat in bank.category_order:
                lookup = bank[(cat, stream, n)]._log2.get
                score = 0.0
                for g in grams:
                    score += lookup(g, 0.0)
                sims[(cat, stream, n)] = score
    values.extend(sims[(cat, s, n)] for cat in bank.category_order for s in STREAMS for n in ORDERS)

    tokens = comment.tokens
    n_tok = len(tokens)
    lowered = Counter(t.lower() for t in tokens)
    values.extend((lowered[w] / n_tok if n_tok else 0.0) for w in stopwords)
    values.append(sum(len(t) for t in tokens) / n_tok if n_tok else 0.0)
    values.append(float(n_tok))
    values.append(float(comment.sentence_count))
    return values


def assemble(comment, bank: ModelBank, stopwords: Sequence[str] | None = None) -> FeatureVector:
    """Feature vector of one normalized comment against every model in ``bank``."""
    stopwords = tuple(load_stopwords() if stopwords is None else stopwords)
    _check_stopwords(stopwords)
    bank.check_complete()
    return FeatureVector(np.array(_values(comment, bank, stopwords)), FeatureLayout(bank.category_order, stopwords))


def assemble_matrix(comments, bank: ModelBank, stopwords: Sequence[str] | None = None):
    """Stack feature vectors row-wise; returns (matrix, layout)."""
    stopwords = tuple(load_stopwords() if stopwords is None else stopwords)
    _check_stopwords(stopwords)
    bank.check_complete()
    layout = FeatureLayout(bank.category_order, stopwords)
    X = np.array([_values(c, bank, stopwords) for c in comments], dtype=float)
    return X.reshape(len(comments), len(layout)), layout


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    std_devs: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.means.shape[0]:
            raise ValidationError(f"vector length {X.shape[-1]} != standardizer length {self.means.shape[0]}")
        return (X - self.means) / self.std_devs

    def to_json(self) -> str:
        return json.dumps({"means": self.means.tolist(), "std_devs": self.std_devs.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "Standardizer":
        doc = json.loads(text)
        return cls(np.array(doc["means"], dtype=float), np.array(doc["std_devs"], dtype=float))


def fit_standardizer(X) -> Standardizer:
    """Population mean/std per column.

    Constant columns get mean 0 and std 1, so they pass through unchanged.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValidationError("need at least 2 training vectors to fit a standardizer")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    constant = (np.ptp(X, axis=0) == 0) | ~(stds > 0)
    means[constant] = 0.0
    stds[constant] = 1.0
    return Standardizer(means, stds)


def apply(standardizer: Standardizer, X) -> np.ndarray:
    return standardizer.apply(X)


def write_feature_csv(path, X, layout: FeatureLayout, ids: Sequence[str] | None = None, labels=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = (["id"] if ids is not None else []) + (["label"] if labels is not None else []) + layout.names
        w.writerow(head)
        for i, row in enumerate(np.asarray(X)):
            prefix = ([ids[i]] if ids is not None else []) + ([labels[i]] if labels is not None else [])
            w.writerow(prefix + [repr(float(v)) for v in row])


def read_feature_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    skip = sum(1 for h in head[:2] if h in ("id", "label"))
    X = np.array([[float(v) for v in r[skip:]] for r in body], dtype=float).reshape(len(body), len(head) - skip)
    return head[skip:], X, [r[:skip] for r in body]
