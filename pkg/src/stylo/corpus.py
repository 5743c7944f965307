"""Corpus file loading, user/comment filtering, class balancing and splitting.

Corpus files are UTF-8 JSON-lines.  The first line is the header
``{"format": "stylo-corpus", "version": 1}``; every following line is either
a comment record::

    {"id": str, "user": str, "label": str, "fluency": int|"native",
     "text": str, "tokens": [str]?, "pos": [str]?}

or a user profile record::

    {"user": str, "native": [str], "english": int|"native"}
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CorpusError, ValidationError

FORMAT_ID = "stylo-corpus"
FORMAT_VERSION = 1
NATIVE = "native"
US_ENGLISH = "en-US"
DEFAULT_RATIOS = (0.70, 0.10, 0.20)
MAX_REJECT_RATE = 0.5


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    native_languages: frozenset[str]
    english_fluency: int | str

    def __post_init__(self):
        _check_fluency(self.english_fluency)

    def to_record(self) -> dict:
        return {
            "user": self.user_id,
            "native": sorted(self.native_languages),
            "english": self.english_fluency,
        }


@dataclass(frozen=True)
class Comment:
    comment_id: str
    user_id: str
    label: str
    text: str
    fluency: int | str = NATIVE
    tokens: tuple[str, ...] | None = None
    pos_tags: tuple[str, ...] | None = None

    def __post_init__(self):
        _check_fluency(self.fluency)
        if (
            self.tokens is not None
            and self.pos_tags is not None
            and len(self.tokens) != len(self.pos_tags)
        ):
            raise ValidationError(
                f"comment {self.comment_id}: {len(self.tokens)} tokens but {len(self.pos_tags)} tags"
            )

    def to_record(self) -> dict:
        rec = {
            "id": self.comment_id,
            "user": self.user_id,
            "label": self.label,
            "fluency": self.fluency,
            "text": self.text,
        }
        if self.tokens is not None:
            rec["tokens"] = list(self.tokens)
        if self.pos_tags is not None:
            rec["pos"] = list(self.pos_tags)
        return rec


@dataclass
class Corpus:
    profiles: list[UserProfile] = field(default_factory=list)
    comments: list[Comment] = field(default_factory=list)
    rejects: list[tuple[int, str]] = field(default_factory=list)

    @property
    def accepted(self) -> int:
        return len(self.profiles) + len(self.comments)

    def __iter__(self):
        # allows ``profiles, comments = load_corpus(path)``
        yield self.profiles
        yield self.comments


@dataclass(frozen=True)
class DatasetSplit:
    train: list[Comment]
    dev: list[Comment]
    test: list[Comment]
    seed: int
    category_counts: dict[str, dict[str, int]]

    def ids(self) -> dict[str, list[str]]:
        return {
            name: [c.comment_id for c in part]
            for name, part in (("train", self.train), ("dev", self.dev), ("test", self.test))
        }


def _check_fluency(value):
    if value == NATIVE:
        return
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= 5:
        raise ValidationError(f"fluency must be an integer 0-5 or {NATIVE!r}, got {value!r}")


def _str_list(rec, key):
    value = rec.get(key)
    if value is None:
        return None
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ValidationError(f"field {key!r} must be a list of strings")
    return tuple(value)


def parse_record(rec: dict) -> UserProfile | Comment:
    if not isinstance(rec, dict):
        raise ValidationError("record is not a JSON object")
    if "native" in rec:
        for key in ("user", "native", "english"):
            if key not in rec:
                raise ValidationError(f"profile record missing field {key!r}")
        if not isinstance(rec["user"], str):
            raise ValidationError("field 'user' must be a string")
        return UserProfile(rec["user"], frozenset(_str_list(rec, "native")), rec["english"])
    for key in ("id", "user", "label", "fluency", "text"):
        if key not in rec:
            raise ValidationError(f"comment record missing field {key!r}")
    for key in ("id", "user", "label", "text"):
        if not isinstance(rec[key], str):
            raise ValidationError(f"field {key!r} must be a string")
    return Comment(
        comment_id=rec["id"],
        user_id=rec["user"],
        label=rec["label"],
        text=rec["text"],
        fluency=rec["fluency"],
        tokens=_str_list(rec, "tokens"),
        pos_tags=_str_list(rec, "pos"),
    )


def load_corpus(path: str | Path, format: str = FORMAT_ID) -> Corpus:
    """Read a corpus file, collecting per-line rejects instead of failing.

    Line numbers in ``Corpus.rejects`` are 1-based physical line numbers
    (the header is line 1).  Loading aborts only if the header is missing,
    or if more than half of the record lines are rejected.
    """
    if format != FORMAT_ID:
        raise CorpusError(f"unknown corpus format {format!r}")
    corpus = Corpus()
    records = 0
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    lines_iter = ((n, line) for n, line in enumerate(lines, start=1) if line.strip())
    first = next(lines_iter, None)
    if first is None:
        return corpus
    try:
        header = json.loads(first[1])
    except json.JSONDecodeError:
        header = None
    if not isinstance(header, dict) or header.get("format") != FORMAT_ID:
        raise CorpusError(f"{path}: line {first[0]}: missing {FORMAT_ID!r} header")
    if header.get("version") != FORMAT_VERSION:
        raise CorpusError(f"{path}: unsupported corpus version {header.get('version')!r}")

    for lineno, line in lines_iter:
        records += 1
        try:
            item = parse_record(json.loads(line))
        except json.JSONDecodeError as exc:
            corpus.rejects.append((lineno, f"malformed JSON: {exc.msg}"))
            continue
        except ValidationError as exc:
            corpus.rejects.append((lineno, str(exc)))
            continue
        if isinstance(item, UserProfile):
            corpus.profiles.append(item)
        elif item.comment_id in seen_ids:
            corpus.rejects.append((lineno, f"duplicate comment id {item.comment_id!r}"))
        else:
            seen_ids.add(item.comment_id)
            corpus.comments.append(item)

    if records and len(corpus.rejects) / records > MAX_REJECT_RATE:
        raise CorpusError(
            f"{path}: {len(corpus.rejects)} of {records} records rejected; "
            f"first: line {corpus.rejects[0][0]}: {corpus.rejects[0][1]}"
        )
    return corpus


def write_corpus(path: str | Path, profiles: Iterable[UserProfile], comments: Iterable[Comment]):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": FORMAT_ID, "version": FORMAT_VERSION}) + "\n")
        for p in profiles:
            fh.write(json.dumps(p.to_record(), ensure_ascii=False) + "\n")
        for c in comments:
            fh.write(json.dumps(c.to_record(), ensure_ascii=False) + "\n")


def is_english(code: str) -> bool:
    return code == "en" or code.startswith("en-")


def filter_users(
    profiles: Sequence[UserProfile], top_n: int = 20, english_code: str = US_ENGLISH
) -> list[UserProfile]:
    """Apply the user admission rules.

    Profiles declaring zero or several native languages are dropped, English
    natives are restricted to ``english_code``, and only users of the
    ``top_n`` languages with the most remaining users are kept (ties at the
    cutoff go to the lexicographically smaller code).
    """
    if not profiles:
        raise ValidationError("filter_users needs at least one profile")
    single = [p for p in profiles if len(p.native_languages) == 1]
    kept = [
        p
        for p in single
        if not is_english(next(iter(p.native_languages)))
        or next(iter(p.native_languages)) == english_code
    ]
    users_per_lang = Counter(next(iter(p.native_languages)) for p in kept)
    if len(users_per_lang) < 2:
        raise ValidationError(
            f"need at least 2 distinct native languages after filtering, got {sorted(users_per_lang)}"
        )
    ranked = sorted(users_per_lang, key=lambda lang: (-users_per_lang[lang], lang))
    top = set(ranked[:top_n])
    return [p for p in kept if next(iter(p.native_languages)) in top]


def filter_comments(comments: Iterable[Comment], min_tokens: int = 20, tokenizer=None) -> list[Comment]:
    """Keep comments with at least ``min_tokens`` tokens.

    Comments without a token field are tokenized on the fly.
    """
    if tokenizer is None:
        from .textproc import tokenize as tokenizer
    out = []
    for c in comments:
        n = len(c.tokens) if c.tokens is not None else len(tokenizer(c.text))
        if n >= min_tokens:
            out.append(c)
    return out


def _group_indices(comments: Sequence[Comment], categories: Sequence[str] | None):
    groups: dict[str, list[int]] = {}
    if categories is not None:
        groups = {cat: [] for cat in categories}
    for i, c in enumerate(comments):
        if categories is not None and c.label not in groups:
            raise ValidationError(f"comment {c.comment_id} has undeclared label {c.label!r}")
        groups.setdefault(c.label, []).append(i)
    return groups


def balance_classes(
    comments: Sequence[Comment], seed: int, categories: Sequence[str] | None = None
) -> list[Comment]:
    """Downsample every category to the size of the smallest one.

    Selection is uniform without replacement; the output keeps input order.
    """
    groups = _group_indices(comments, categories)
    if len(groups) < 2:
        raise ValidationError(f"balancing needs at least 2 categories, got {sorted(groups)}")
    empty = [cat for cat, idx in groups.items() if not idx]
    if empty:
        raise ValidationError(f"category {empty[0]!r} has no comments")
    target = min(len(idx) for idx in groups.values())
    rng = np.random.default_rng(seed)
    keep: list[int] = []
    for cat in sorted(groups):
        idx = groups[cat]
        chosen = rng.choice(len(idx), size=target, replace=False)
        keep.extend(idx[j] for j in chosen)
    keep.sort()
    return [comments[i] for i in keep]


def split_sizes(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    """Train and dev rounded to nearest, test takes the remainder, so every
    part is within one comment of its exact share.  Dev and test are never
    left empty when ``n >= 3``."""
    n_train = math.floor(ratios[0] * n + 0.5)
    n_dev = math.floor(ratios[1] * n + 0.5)
    if n >= 3:
        if n_dev == 0 and ratios[1] > 0:
            n_dev, n_train = 1, n_train - 1
        if n - n_train - n_dev == 0 and ratios[2] > 0:
            n_train -= 1
    return n_train, n_dev, n - n_train - n_dev


def split_dataset(
    comments: Sequence[Comment],
    ratios: Sequence[float] = DEFAULT_RATIOS,
    seed: int = 0,
    categories: Sequence[str] | None = None,
) -> DatasetSplit:
    """Stratified train/dev/test split; per-category sizes from ``split_sizes``."""
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
        raise ValidationError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    groups = _group_indices(comments, categories)
    rng = np.random.default_rng(seed)
    parts: dict[str, list[int]] = {"train": [], "dev": [], "test": []}
    counts: dict[str, dict[str, int]] = {"train": {}, "dev": {}, "test": {}}
    for cat in sorted(groups):
        idx = groups[cat]
        if len(idx) < 3:
            raise ValidationError(f"category {cat!r} has {len(idx)} comments; at least 3 needed to split")
        order = [idx[j] for j in rng.permutation(len(idx))]
        n_train, n_dev, n_test = split_sizes(len(idx), ratios)
        parts["train"].extend(order[:n_train])
        parts["dev"].extend(order[n_train : n_train + n_dev])
        parts["test"].extend(order[n_train + n_dev :])
        counts["train"][cat] = n_train
        counts["dev"][cat] = n_dev
        counts["test"][cat] = n_test
    return DatasetSplit(
        train=[comments[i] for i in sorted(parts["train"])],
        dev=[comments[i] for i in sorted(parts["dev"])],
        test=[comments[i] for i in sorted(parts["test"])],
        seed=seed,
        category_counts=counts,
    )
