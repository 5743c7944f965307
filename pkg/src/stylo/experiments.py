"""Experiment presets and the end-to-end pipeline.

A run is a fixed sequence of stages, each a plain function so the CLI can
run them one at a time and persist the intermediate artifacts:

    ingest   tokenize, tag and normalize every comment
    select   admit users, map labels to categories, fluency band, min tokens
    split    balance categories, then stratified 70/10/20 split
    fit      n-gram bank from train, features, standardizer, classifier
    evaluate test-split accuracy and confusion matrix

Every random choice draws from ``derive_seed(spec.seed, <stage>)``.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import learn
from ._util import canonical_json, derive_seed
from .corpus import (
    NATIVE,
    US_ENGLISH,
    Comment,
    Corpus,
    DatasetSplit,
    balance_classes,
    filter_comments,
    filter_users,
    split_dataset,
)
from .errors import StageError, StyloError, ValidationError
from .features import FeatureLayout, Standardizer, assemble_matrix, fit_standardizer
from .learn import Hyperparams, LinearModel
from .ngram import ModelBank, build_bank
from .textproc import TokenizedComment, prepare

BANDS = {"0-2": (0, 1, 2), "3-5": (3, 4, 5), "all": (0, 1, 2, 3, 4, 5)}
CLASSIFIERS = {"logreg": "logreg", "svm": "linear_svm", "linear_svm": "linear_svm"}

FREQUENT_6 = {"en-US": "US-EN", "de": "German", "es": "Spanish", "fr": "French", "ru": "Russian", "nl": "Dutch"}
FAMILIES = {
    "Germanic": ("de", "nl", "no", "sv", "da"),
    "Romance": ("es", "fr", "pt", "it"),
    "Uralic": ("fi", "hu"),
    "Asian": ("zh", "yue", "ja", "ko"),
    "Slavic": ("ru", "pl"),
}
FREQUENT_20 = {
    "en-US": "US-EN", "de": "German", "es": "Spanish", "fr": "French", "ru": "Russian",
    "nl": "Dutch", "pt": "Portuguese", "it": "Italian", "sv": "Swedish", "pl": "Polish",
    "ja": "Japanese", "zh": "Mandarin", "ko": "Korean", "fi": "Finnish", "no": "Norwegian",
    "da": "Danish", "hu": "Hungarian", "yue": "Cantonese", "ar": "Arabic", "tr": "Turkish",
}
WILDCARD = "*"


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run.  ``mapping`` sends corpus labels to categories; the key
    ``"*"`` catches every label not listed, and unmapped labels are dropped."""

    name: str
    categories: tuple[str, ...]
    mapping: Mapping[str, str]
    classifier: str = "logreg"
    hyperparams: Hyperparams = Hyperparams()
    seed: int = 0
    band: str | None = None
    min_tokens: int = 20
    tagger: str = "lexicon"
    top_languages: int = 20
    l2_grid: tuple[float, ...] = ()

    def __post_init__(self):
        if self.classifier not in CLASSIFIERS:
            raise ValidationError(f"unknown classifier {self.classifier!r}; choose logreg or svm")
        if self.band is not None and self.band not in BANDS:
            raise ValidationError(f"unknown fluency band {self.band!r}; choose from {', '.join(BANDS)}")
        unknown = set(self.mapping.values()) - set(self.categories)
        if unknown:
            raise ValidationError(f"mapping targets undeclared categories {sorted(unknown)}")
        if len(self.categories) < 2:
            raise ValidationError("an experiment needs at least 2 categories")

    def category_of(self, label: str) -> str | None:
        return self.mapping.get(label, self.mapping.get(WILDCARD))

    def with_(self, **kw) -> "ExperimentSpec":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["categories"] = list(self.categories)
        d["mapping"] = dict(sorted(self.mapping.items()))
        d["l2_grid"] = list(self.l2_grid)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentSpec":
        d = dict(d)
        d["categories"] = tuple(d["categories"])
        d["hyperparams"] = Hyperparams(**d.get("hyperparams", {}))
        d["l2_grid"] = tuple(d.get("l2_grid", ()))
        return cls(**d)


def _preset_native_vs_nonnative():
    return ExperimentSpec("native-vs-nonnative", ("US-EN", "non-native"), {US_ENGLISH: "US-EN", WILDCARD: "non-native"})


def _preset_frequent_6():
    return ExperimentSpec("frequent-6", tuple(FREQUENT_6.values()), dict(FREQUENT_6))


def _preset_families_5():
    mapping = {code: family for family, codes in FAMILIES.items() for code in codes}
    return ExperimentSpec("families-5", tuple(FAMILIES), mapping)


def _preset_frequent_20():
    return ExperimentSpec("frequent-20", tuple(FREQUENT_20.values()), dict(FREQUENT_20))


PRESETS = {
    "native-vs-nonnative": _preset_native_vs_nonnative,
    "frequent-6": _preset_frequent_6,
    "families-5": _preset_families_5,
    "frequent-20": _preset_frequent_20,
}


def preset(name: str, **overrides) -> ExperimentSpec:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return PRESETS[name]().with_(**overrides)


def custom_spec(mapping: Mapping[str, str], name: str = "custom", categories=None, **overrides) -> ExperimentSpec:
    cats = tuple(categories) if categories else tuple(dict.fromkeys(mapping.values()))
    return ExperimentSpec(name, cats, dict(mapping)).with_(**overrides)


# -- stages -----------------------------------------------------------------


def _stage(name):
    def wrap(fn):
        def run(*args, **kw):
            try:
                return fn(*args, **kw)
            except StageError:
                raise
            except StyloError as exc:
                raise StageError(name, exc) from exc
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        run.__wrapped__ = fn
        return run
    return wrap


@_stage("ingest")
def ingest(comments: Sequence[Comment], tagger: str = "lexicon") -> dict[str, TokenizedComment]:
    return {c.comment_id: prepare(c, tagger) for c in comments}


@_stage("select")
def select(spec: ExperimentSpec, corpus: Corpus, prepared: Mapping[str, TokenizedComment]) -> list[Comment]:
    """Admitted comments relabelled with their experiment category."""
    comments = corpus.comments
    if corpus.profiles:
        admitted = {p.user_id for p in filter_users(corpus.profiles, top_n=spec.top_languages)}
        comments = [c for c in comments if c.user_id in admitted]
    band = BANDS[spec.band] if spec.band else None
    out = []
    for c in comments:
        cat = spec.category_of(c.label)
        if cat is None:
            continue
        if band is not None and c.fluency != NATIVE and c.fluency not in band:
            continue
        norm = prepared[c.comment_id]
        out.append(replace(c, label=cat, tokens=norm.tokens, pos_tags=norm.pos_tags))
    out = filter_comments(out, spec.min_tokens)
    if band is not None and not any(c.fluency != NATIVE for c in out):
        raise ValidationError(f"fluency band {spec.band!r} is empty")
    return out


@_stage("split")
def make_split(spec: ExperimentSpec, selected: Sequence[Comment]) -> DatasetSplit:
    balanced = balance_classes(selected, derive_seed(spec.seed, "balance"), categories=spec.categories)
    return split_dataset(balanced, seed=derive_seed(spec.seed, "split"), categories=spec.categories)


@dataclass(frozen=True)
class Fitted:
    bank: ModelBank
    layout: FeatureLayout
    standardizer: Standardizer
    model: LinearModel
    dev_accuracy: float | None
    selection: tuple[tuple[float, float], ...] = ()
    train_accuracy: float | None = None


def _labels(spec, comments):
    index = {cat: i for i, cat in enumerate(spec.categories)}
    return np.array([index[c.label] for c in comments], dtype=int)


def _norms(comments, prepared):
    return [prepared[c.comment_id] for c in comments]


def accuracy(y_true, y_pred) -> float:
    return float(np.mean(np.asarray(y_true) == np.asarray(y_pred))) if len(y_true) else float("nan")


@_stage("fit")
def fit(spec: ExperimentSpec, split: DatasetSplit, prepared: Mapping[str, TokenizedComment], train=None) -> Fitted:
    """Build the n-gram bank from training comments only, then learn the classifier."""
    train = split.train if train is None else train
    norms = _norms(train, prepared)
    y = _labels(spec, train)
    bank = build_bank(norms, [c.label for c in train], spec.categories)
    X_raw, layout = assemble_matrix(norms, bank)
    standardizer = fit_standardizer(X_raw)
    X = standardizer.apply(X_raw)
    kind = CLASSIFIERS[spec.classifier]
    hp = spec.hyperparams.replace(seed=derive_seed(spec.seed, "train"))

    dev_X = dev_y = None
    if split.dev:
        dev_X = standardizer.apply(assemble_matrix(_norms(split.dev, prepared), bank)[0])
        dev_y = _labels(spec, split.dev)

    selection = []
    if spec.l2_grid:
        if dev_X is None:
            raise ValidationError("l2 selection needs a non-empty dev split")
        best = None
        for l2 in spec.l2_grid:
            m = learn.train(kind, X, y, hp.replace(l2=l2), category_order=spec.categories)
            acc = accuracy(dev_y, learn.predict(m, dev_X))
            selection.append((l2, acc))
            if best is None or acc > best[1]:
                best = (l2, acc)
        hp = hp.replace(l2=best[0])

    model = learn.train(kind, X, y, hp, category_order=spec.categories, layout_checksum=layout.checksum())
    dev_acc = accuracy(dev_y, learn.predict(model, dev_X)) if dev_X is not None else None
    train_acc = accuracy(y, learn.predict(model, X))
    return Fitted(bank, layout, standardizer, model, dev_acc, tuple(selection), train_acc)


@dataclass(frozen=True)
class ConfusionMatrix:
    categories: tuple[str, ...]
    counts: np.ndarray  # rows gold, columns predicted

    @classmethod
    def from_predictions(cls, categories, y_true, y_pred):
        K = len(categories)
        counts = np.zeros((K, K), dtype=int)
        np.add.at(counts, (np.asarray(y_true, dtype=int), np.asarray(y_pred, dtype=int)), 1)
        return cls(tuple(categories), counts)

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.counts.sum())

    def to_dict(self):
        return {"categories": list(self.categories), "counts": self.counts.tolist()}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["gold\\predicted", *self.categories])
            for cat, row in zip(self.categories, self.counts):
                w.writerow([cat, *map(int, row)])


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    accuracy: float
    confusion: ConfusionMatrix
    fitted: Fitted
    split: DatasetSplit
    selected_count: int
    timings: dict = field(default_factory=dict)

    @property
    def model(self) -> LinearModel:
        return self.fitted.model

    @property
    def baseline(self) -> float:
        return 1.0 / len(self.spec.categories)

    def report(self) -> dict:
        """Deterministic report body (no wall-clock timings)."""
        return {
            "spec": self.spec.to_dict(),
            "accuracy": self.accuracy,
            "accuracy_split": "test",
            "baseline": self.baseline,
            "dev_accuracy": self.fitted.dev_accuracy,
            "train_accuracy": self.fitted.train_accuracy,
            "l2_selection": [list(x) for x in self.fitted.selection],
            "confusion": self.confusion.to_dict(),
            "counts": {
                "selected": self.selected_count,
                "balanced_per_category": sum(
                    self.split.category_counts[part][self.spec.categories[0]] for part in ("train", "dev", "test")
                ),
                "split": self.split.category_counts,
            },
            "feature_count": len(self.fitted.layout),
            "layout_checksum": self.fitted.layout.checksum(),
        }

    def report_json(self) -> str:
        return json.dumps(self.report(), indent=2, sort_keys=True) + "\n"


@_stage("evaluate")
def evaluate(spec: ExperimentSpec, fitted: Fitted, split: DatasetSplit, prepared) -> tuple[float, ConfusionMatrix]:
    if not split.test:
        raise ValidationError("empty test split")
    X = fitted.standardizer.apply(assemble_matrix(_norms(split.test, prepared), fitted.bank)[0])
    y = _labels(spec, split.test)
    cm = ConfusionMatrix.from_predictions(spec.categories, y, learn.predict(fitted.model, X))
    return cm.accuracy, cm


def run_experiment(spec: ExperimentSpec, corpus: Corpus, prepared=None) -> ExperimentResult:
    timings = {}
    clock = time.perf_counter()

    def tick(stage):
        nonlocal clock
        now = time.perf_counter()
        timings[stage] = now - clock
        clock = now

    if prepared is None:
        prepared = ingest(corpus.comments, spec.tagger)
        tick("ingest")
    selected = select(spec, corpus, prepared)
    tick("select")
    split = make_split(spec, selected)
    tick("split")
    fitted = fit(spec, split, prepared)
    tick("fit")
    acc, cm = evaluate(spec, fitted, split, prepared)
    tick("evaluate")
    return ExperimentResult(spec, acc, cm, fitted, split, len(selected), timings)


def fluency_bands(spec: ExperimentSpec, corpus: Corpus, prepared=None) -> dict[str, float]:
    """Error rate (1 - test accuracy) with the non-native side restricted to each band."""
    if prepared is None:
        prepared = ingest(corpus.comments, spec.tagger)
    errors = {}
    for band in ("0-2", "3-5", "all"):
        result = run_experiment(spec.with_(band=band), corpus, prepared)
        errors[band] = 1.0 - result.accuracy
    return errors


@dataclass(frozen=True)
class CurvePoint:
    size: float
    train_count: int
    train_accuracy: float
    test_accuracy: float
    train_ids: tuple[str, ...] = field(repr=False, default=())


def nested_subsets(spec: ExperimentSpec, train: Sequence[Comment], sizes: Sequence[float]) -> list[list[Comment]]:
    """Per-category prefixes of one seeded permutation, so smaller sets nest in larger ones."""
    sizes = list(sizes)
    if not sizes or any(not 0 < s <= 1 for s in sizes) or sizes != sorted(sizes):
        raise ValidationError(f"sizes must be ascending fractions in (0, 1], got {sizes}")
    rng = np.random.default_rng(derive_seed(spec.seed, "curve"))
    by_cat = {cat: [i for i, c in enumerate(train) if c.label == cat] for cat in spec.categories}
    perms = {cat: [idx[j] for j in rng.permutation(len(idx))] for cat, idx in by_cat.items()}
    subsets = []
    for s in sizes:
        chosen = []
        for cat, perm in perms.items():
            k = int(np.floor(s * len(perm) + 1e-9))
            if k < 1:
                raise ValidationError(f"size {s} leaves no training comment for category {cat!r}")
            chosen.extend(perm[:k])
        subsets.append([train[i] for i in sorted(chosen)])
    return subsets


def learning_curve(spec: ExperimentSpec, corpus: Corpus, sizes: Sequence[float], prepared=None) -> list[CurvePoint]:
    if prepared is None:
        prepared = ingest(corpus.comments, spec.tagger)
    split = make_split(spec, select(spec, corpus, prepared))
    points = []
    for s, subset in zip(sizes, nested_subsets(spec, split.train, sizes)):
        fitted = fit(spec, split, prepared, train=subset)
        acc, _ = evaluate(spec, fitted, split, prepared)
        points.append(CurvePoint(s, len(subset), fitted.train_accuracy, acc, tuple(c.comment_id for c in subset)))
    return points


def write_curve_csv(path, points: Sequence[CurvePoint]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["size", "train_acc", "test_acc"])
        for p in points:
            w.writerow([repr(p.size), repr(p.train_accuracy), repr(p.test_accuracy)])


def report_body_digest(report: Mapping) -> str:
    return canonical_json(report)
