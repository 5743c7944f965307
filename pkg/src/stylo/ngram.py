"""Per-category n-gram count models and the log-count similarity score."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from ._util import canonical_json, sha256_text
from .errors import ValidationError

STREAMS = ("words", "chars", "pos")
ORDERS = (1, 2, 3, 4)
SEP = "\x1f"
BANK_FORMAT = "stylo-ngram-bank"
BANK_VERSION = 1


def stream_of(comment, stream: str) -> Sequence[str] | str:
    """The sequence a TokenizedComment contributes to ``stream``."""
    if stream == "words":
        return comment.tokens
    if stream == "chars":
        return comment.normalized_text
    if stream == "pos":
        return comment.pos_tags
    raise ValidationError(f"unknown stream {stream!r}")


def _check_order(order):
    if order not in ORDERS:
        raise ValidationError(f"order must be in 1..4, got {order!r}")


def iter_grams(sequence, order: int):
    """Yield gram keys of ``sequence``: raw substrings for strings, SEP-joined otherwise."""
    _check_order(order)
    if isinstance(sequence, str):
        for i in range(len(sequence) - order + 1):
            yield sequence[i : i + order]
    elif order == 1:
        yield from sequence
    else:
        for i in range(len(sequence) - order + 1):
            yield SEP.join(sequence[i : i + order])


def extract_grams(sequence, order: int) -> Counter:
    return Counter(iter_grams(sequence, order))


def gram_to_text(gram: str) -> str:
    return gram.replace(SEP, " ")


@dataclass(frozen=True)
class NGramModel:
    category: str
    stream: str
    order: int
    counts: Mapping[str, int]
    total_grams: int
    _log2: Mapping[str, float] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        counts = dict(self.counts)
        if any(c < 1 for c in counts.values()):
            raise ValidationError("n-gram counts must be positive")
        if sum(counts.values()) != self.total_grams:
            raise ValidationError(f"total_grams {self.total_grams} != sum of counts")
        object.__setattr__(self, "counts", MappingProxyType(counts))
        object.__setattr__(self, "_log2", {g: math.log2(c) for g, c in counts.items()})

    def log2_count(self, gram: str) -> float:
        """log2 of the gram's count, 0.0 for unseen grams (count backs off to 1)."""
        return self._log2.get(gram, 0.0)

    def to_record(self) -> dict:
        return {
            "category": self.category,
            "stream": self.stream,
            "order": self.order,
            "total_grams": self.total_grams,
            "counts": dict(sorted(self.counts.items())),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "NGramModel":
        counts = {k: int(v) for k, v in rec["counts"].items()}
        return cls(rec["category"], rec["stream"], int(rec["order"]), counts, int(rec["total_grams"]))


def build_model(comments: Sequence, category: str, stream: str, order: int) -> NGramModel:
    """Count ``order``-grams of ``stream`` over normalized comments of one category."""
    if stream not in STREAMS:
        raise ValidationError(f"unknown stream {stream!r}")
    _check_order(order)
    if not comments:
        raise ValidationError(f"no comments to build {category}/{stream}/{order} model from")
    counts: Counter = Counter()
    for c in comments:
        counts.update(iter_grams(stream_of(c, stream), order))
    return NGramModel(category, stream, order, counts, sum(counts.values()))


def similarity(comment_stream, model: NGramModel) -> float:
    """Sum of log2 model counts over the comment's grams, with multiplicity."""
    score = 0.0
    lookup = model._log2.get
    for gram in iter_grams(comment_stream, model.order):
        score += lookup(gram, 0.0)
    return score


@dataclass(frozen=True)
class ModelBank:
    category_order: tuple[str, ...]
    models: Mapping[tuple[str, str, int], NGramModel]

    def __getitem__(self, key: tuple[str, str, int]) -> NGramModel:
        return self.models[key]

    def missing(self) -> list[tuple[str, str, int]]:
        return [
            (cat, stream, n)
            for cat in self.category_order
            for stream in STREAMS
            for n in ORDERS
            if (cat, stream, n) not in self.models
        ]

    def check_complete(self):
        missing = self.missing()
        if missing:
            cat, stream, n = missing[0]
            raise ValidationError(
                f"model bank incomplete: missing ({cat}, {stream}, {n}) and {len(missing) - 1} more"
            )

    def complement_counts(self, category: str, stream: str, order: int) -> tuple[Counter, int]:
        pooled: Counter = Counter()
        for cat in self.category_order:
            if cat != category:
                pooled.update(self.models[(cat, stream, order)].counts)
        return pooled, sum(pooled.values())

    def to_json(self) -> str:
        payload = {
            "category_order": list(self.category_order),
            "models": [
                self.models[(cat, s, n)].to_record()
                for cat in self.category_order
                for s in STREAMS
                for n in ORDERS
                if (cat, s, n) in self.models
            ],
        }
        body = canonical_json(payload)
        return canonical_json(
            {"format": BANK_FORMAT, "version": BANK_VERSION, "sha256": sha256_text(body), "bank": payload}
        )

    @classmethod
    def from_json(cls, text: str) -> "ModelBank":
        doc = json.loads(text)
        if doc.get("format") != BANK_FORMAT or doc.get("version") != BANK_VERSION:
            raise ValidationError("not a stylo n-gram bank file (or unsupported version)")
        payload = doc["bank"]
        if sha256_text(canonical_json(payload)) != doc.get("sha256"):
            raise ValidationError("n-gram bank checksum mismatch")
        models = {}
        for rec in payload["models"]:
            m = NGramModel.from_record(rec)
            models[(m.category, m.stream, m.order)] = m
        return cls(tuple(payload["category_order"]), models)

    def save(self, path):
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "ModelBank":
        with open(path, encoding="ascii") as fh:
            return cls.from_json(fh.read())


def build_bank(comments: Iterable, labels: Iterable[str], category_order: Sequence[str]) -> ModelBank:
    """Build all |categories| x 3 x 4 models from labelled, normalized training comments."""
    by_cat: dict[str, list] = {cat: [] for cat in category_order}
    for c, label in zip(comments, labels):
        if label not in by_cat:
            raise ValidationError(f"label {label!r} not among categories {list(category_order)}")
        by_cat[label].append(c)
    models = {}
    for cat in category_order:
        for stream in STREAMS:
            for n in ORDERS:
                models[(cat, stream, n)] = build_model(by_cat[cat], cat, stream, n)
    return ModelBank(tuple(category_order), models)
