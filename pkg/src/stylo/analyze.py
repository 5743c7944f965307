"""Gram-level correlation with categories, feature-group importance, POS patterns."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .features import FeatureLayout
from .ngram import SEP, ModelBank, gram_to_text

MIN_SUPPORT = 5


@dataclass(frozen=True)
class GramScore:
    gram: str
    stream: str
    order: int
    category: str
    z: float
    freq_in: float
    freq_out: float
    count_in: int
    count_out: int


def two_proportion_z(count_in: int, total_in: int, count_out: int, total_out: int) -> float:
    """Pooled two-proportion z statistic; 0.0 when the pooled variance vanishes."""
    if total_in <= 0 or total_out <= 0:
        raise ValidationError("both sides need a positive gram total")
    p1 = count_in / total_in
    p2 = count_out / total_out
    pooled = (count_in + count_out) / (total_in + total_out)
    var = pooled * (1.0 - pooled) * (1.0 / total_in + 1.0 / total_out)
    if var <= 0:
        return 0.0
    return (p1 - p2) / math.sqrt(var)


def gram_zscores(
    bank: ModelBank, category: str, stream: str, order: int, top_k: int = 20, min_support: int = MIN_SUPPORT
) -> list[GramScore]:
    """Grams of one (stream, order) ranked by |z| of category vs pooled complement.

    Grams with pooled count below ``min_support`` are skipped.  Ties in |z|
    are ordered by gram key.
    """
    if top_k < 1:
        raise ValidationError("top_k must be at least 1")
    bank.check_complete()
    if category not in bank.category_order:
        raise ValidationError(f"unknown category {category!r}")
    model = bank[(category, stream, order)]
    rest, rest_total = bank.complement_counts(category, stream, order)
    n_in = model.total_grams
    scores = []
    for gram in set(model.counts) | set(rest):
        c_in = model.counts.get(gram, 0)
        c_out = rest.get(gram, 0)
        if c_in + c_out < min_support or c_in + c_out == 0:
            continue
        z = two_proportion_z(c_in, n_in, c_out, rest_total)
        scores.append(GramScore(gram, stream, order, category, z, c_in / n_in, c_out / rest_total, c_in, c_out))
    scores.sort(key=lambda s: (-abs(s.z), s.gram))
    return scores[:top_k]


def feature_group_importance(model, layout: FeatureLayout) -> list[tuple[str, float]]:
    """Mean absolute weight per feature group, highest first (ties by name)."""
    W = np.asarray(model.weights)
    if W.shape[1] != len(layout):
        raise ValidationError(f"model has {W.shape[1]} features, layout has {len(layout)}")
    if model.layout_checksum is not None and model.layout_checksum != layout.checksum():
        raise ValidationError("model was trained on a different feature layout")
    ranked = [(name, float(np.abs(W[:, cols]).mean())) for name, cols in layout.groups().items()]
    ranked.sort(key=lambda item: (-item[1], item[0]))
    return ranked


def pos_pattern_frequency(bank: ModelBank, category: str, pattern) -> float:
    """Percentage of the category's POS 4-grams equal to ``pattern``."""
    tags = pattern.split() if isinstance(pattern, str) else list(pattern)
    if len(tags) != 4:
        raise ValidationError(f"POS pattern needs exactly 4 tags, got {len(tags)}")
    model = bank[(category, "pos", 4)]
    if model.total_grams == 0:
        return 0.0
    return 100.0 * model.counts.get(SEP.join(tags), 0) / model.total_grams


def write_gram_tsv(path, scores: list[GramScore]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["rank", "stream", "order", "gram", "z", "freq_in", "freq_out", "category"])
        for rank, s in enumerate(scores, start=1):
            gram = gram_to_text(s.gram).encode("unicode_escape").decode("ascii")
            w.writerow([rank, s.stream, s.order, gram, repr(s.z), repr(s.freq_in), repr(s.freq_out), s.category])
