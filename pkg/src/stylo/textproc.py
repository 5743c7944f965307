"""Tokenization, sentence splitting, POS tagging and text normalization."""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass
from typing import Sequence

from .datafiles import data_dir, load_tsv
from .errors import ConfigError, ValidationError

SENTINEL = "\x1a"
PROPER_NOUN_TAGS = ("NNP", "NNPS")

# a word is a run of letters/digits, optionally joined by single internal
# apostrophes; anything else that is not whitespace is a one-char token
_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*|\S")
_SENTENCE_END_RE = re.compile(r"(?<=[.!?])\s+")
_NUMBER_RE = re.compile(r"^\d+(?:[.,]\d+)*$")
_NON_ASCII_RE = re.compile(r"[^\x00-\x7f]")

_PUNCT_TAGS = {
    ".": ".", "!": ".", "?": ".",
    ",": ",", ";": ":", ":": ":", "-": ":",
    "(": "-LRB-", ")": "-RRB-", "[": "-LRB-", "]": "-RRB-", "{": "-LRB-", "}": "-RRB-",
    '"': "''", "'": "''", "`": "``",
    "$": "$", "#": "#", "%": "NN", "&": "CC",
}


@dataclass(frozen=True)
class TokenizedComment:
    tokens: tuple[str, ...]
    pos_tags: tuple[str, ...]
    sentence_count: int
    normalized_text: str

    def __post_init__(self):
        if len(self.tokens) != len(self.pos_tags):
            raise ValidationError("tokens and pos_tags differ in length")


def _token_spans(text: str):
    return [(m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def split_sentences(text: str) -> list[str]:
    """Split after '.', '!' or '?' when followed by whitespace or the end."""
    return [s for s in _SENTENCE_END_RE.split(text.strip()) if s]


class LexiconTagger:
    """Deterministic lexicon lookup with suffix-rule fallback.

    Unknown capitalized words become NNP; the already-normalized
    placeholders "NNP"/"NNPS" tag as themselves, so tagging normalized
    tokens agrees with tagging the originals.
    """

    name = "lexicon"

    def __init__(self, lexicon: dict[str, str], suffixes: Sequence[tuple[str, str]]):
        self.lexicon = dict(lexicon)
        self.suffixes = tuple(sorted(suffixes, key=lambda st: (-len(st[0]), st[0])))

    @classmethod
    def from_data_files(cls):
        return cls(dict(load_tsv("lexicon.tsv")), load_tsv("suffixes.tsv"))

    def tag_token(self, token: str, sentence_initial: bool = False) -> str:
        if token in PROPER_NOUN_TAGS:
            return token
        if token in _PUNCT_TAGS:
            return _PUNCT_TAGS[token]
        if _NUMBER_RE.match(token):
            return "CD"
        if token in self.lexicon:
            return self.lexicon[token]
        lower = token.lower()
        if lower in self.lexicon and (sentence_initial or not token[:1].isupper() or token.isupper()):
            return self.lexicon[lower]
        if token[:1].isupper():
            return "NNP"
        if len(token) == 1 and not token.isalnum():
            return "SYM"
        for suffix, tag in self.suffixes:
            if len(lower) > len(suffix) + 1 and lower.endswith(suffix):
                return tag
        return "NN"

    def tag(self, tokens: Sequence[str]) -> list[str]:
        tags = []
        initial = True
        for tok in tokens:
            tags.append(self.tag_token(tok, initial))
            initial = tok in (".", "!", "?")
        return tags


class PassthroughTagger:
    """Uses the tags stored with the corpus record, verbatim."""

    name = "passthrough"

    def tag(self, tokens: Sequence[str], given: Sequence[str] | None = None) -> list[str]:
        if given is None:
            raise ValidationError("passthrough tagger needs pre-tagged input")
        if len(given) != len(tokens):
            raise ValidationError(f"{len(tokens)} tokens but {len(given)} given tags")
        return list(given)


@functools.lru_cache(maxsize=None)
def _lexicon_tagger(directory: str) -> LexiconTagger:
    return LexiconTagger.from_data_files()


TAGGERS = ("lexicon", "passthrough")


def get_tagger(name: str):
    if name == "lexicon":
        return _lexicon_tagger(str(data_dir()))
    if name == "passthrough":
        return PassthroughTagger()
    raise ConfigError(f"unknown tagger {name!r}; choose from {', '.join(TAGGERS)}")


def pos_tag(tokens: Sequence[str], tagger="lexicon", given: Sequence[str] | None = None) -> list[str]:
    """Tag ``tokens`` with one Penn Treebank tag each.

    ``tagger`` is a tagger object or a registered name.  Pre-existing tags in
    ``given`` are passed through unchanged whatever the tagger.
    """
    if isinstance(tagger, str):
        tagger = get_tagger(tagger)
    if given is not None:
        return PassthroughTagger().tag(tokens, given)
    if not tokens:
        raise ValidationError("cannot tag an empty token sequence")
    return list(tagger.tag(tokens))


def replace_non_ascii(s: str) -> str:
    return _NON_ASCII_RE.sub(SENTINEL, s)


def _locate(text: str, tokens: Sequence[str]):
    """Character spans of ``tokens`` inside ``text``, or None if they don't align."""
    spans = _token_spans(text)
    if len(spans) == len(tokens) and all(text[a:b] == t for (a, b), t in zip(spans, tokens)):
        return spans
    spans, pos = [], 0
    for tok in tokens:
        at = text.find(tok, pos)
        if at < 0:
            return None
        spans.append((at, at + len(tok)))
        pos = at + len(tok)
    return spans


def normalize(tokens: Sequence[str], pos_tags: Sequence[str], text: str) -> TokenizedComment:
    """Replace proper nouns by their tag and non-ASCII codepoints by 0x1A.

    Both replacements apply to the token stream and to the character stream
    (``normalized_text``).  If the tokens cannot be aligned with ``text`` the
    character stream is rebuilt by joining tokens with single spaces.
    """
    if len(tokens) != len(pos_tags):
        raise ValidationError(f"{len(tokens)} tokens but {len(pos_tags)} tags")
    new_tokens = [tag if tag in PROPER_NOUN_TAGS else tok for tok, tag in zip(tokens, pos_tags)]
    spans = _locate(text, tokens)
    if spans is None:
        char_text = " ".join(new_tokens)
    else:
        pieces, pos = [], 0
        for (a, b), tok, new in zip(spans, tokens, new_tokens):
            pieces.append(text[pos:a])
            pieces.append(new)
            pos = b
        pieces.append(text[pos:])
        char_text = "".join(pieces)
    char_text = replace_non_ascii(char_text)
    return TokenizedComment(
        tokens=tuple(replace_non_ascii(t) for t in new_tokens),
        pos_tags=tuple(pos_tags),
        sentence_count=len(split_sentences(char_text)),
        normalized_text=char_text,
    )


def prepare(comment, tagger="lexicon") -> TokenizedComment:
    """Tokenize, tag (unless pre-tagged) and normalize one corpus comment."""
    tokens = list(comment.tokens) if comment.tokens is not None else tokenize(comment.text)
    if comment.pos_tags is not None:
        tags = pos_tag(tokens, tagger, given=comment.pos_tags)
    elif tokens:
        tags = pos_tag(tokens, tagger)
    else:
        tags = []
    return normalize(tokens, tags, comment.text)
