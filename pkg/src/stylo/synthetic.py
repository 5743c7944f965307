"""Seeded synthetic corpora with controllable per-category style markers.

All categories share one template grammar and vocabulary.  Each category
additionally owns a marker adverb (word stream), a spelling or spacing quirk
(character stream) and a syntactic construction (POS stream).  Each sentence
independently receives each of the three markers with probability equal to
the comment's marker rate, so a rate of 0 makes categories
indistinguishable.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .corpus import NATIVE, US_ENGLISH, Comment, UserProfile
from .errors import ValidationError

LANGUAGES = (
    "en-US", "de", "es", "fr", "ru", "nl", "pt", "it", "sv", "pl",
    "ja", "zh", "ko", "fi", "no", "da", "hu", "yue", "ar", "tr",
)

_VOCAB = {
    "DT": ["the", "a", "this", "that", "every", "some"],
    "JJ": ["good", "new", "important", "recent", "reliable", "different", "clear", "main",
           "relevant", "neutral", "small", "useful", "original", "notable", "full", "well"],
    "NN": ["article", "source", "section", "page", "reference", "editor", "paragraph", "image",
           "topic", "sentence", "version", "policy", "link", "title", "question", "spelling",
           "table", "skill", "bill", "wall", "city", "war"],
    "NNS": ["sources", "articles", "sections", "pages", "references", "editors", "images",
            "links", "titles", "questions", "tables", "skills", "bills", "walls"],
    "VBZ": ["needs", "seems", "shows", "makes", "refers", "belongs", "looks", "tells", "calls", "fills"],
    "VBD": ["added", "removed", "changed", "wrote", "checked", "called", "filled", "spelled", "rolled"],
    "VB": ["add", "remove", "change", "check", "cite", "discuss", "fix", "tell", "call", "fill"],
    "PRP": ["I", "we", "you", "they"],
    "VBP": ["think", "believe", "agree", "feel", "see", "know"],
    "MD": ["should", "could", "will", "would", "can", "might"],
    "RB": ["really", "probably", "also", "still", "just", "already", "quite"],
    "IN": ["in", "on", "of", "about", "for", "with", "from", "into"],
    "NNP": ["Einstein", "London", "Europe", "Google", "Smith", "Paris", "Wikipedia", "America"],
    "CC": ["and", "but", "or"],
    "PRP$": ["my", "your", "our", "their"],
}

_TEMPLATES = (
    ("DT", "JJ", "NN", "VBZ", "JJ", "."),
    ("PRP", "VBD", "DT", "NN", "IN", "DT", "NN", "."),
    ("PRP", "MD", "VB", "DT", "NN", "IN", "NNP", "."),
    ("DT", "NN", "IN", "DT", "NN", "VBZ", "RB", "JJ", "."),
    ("PRP", "VBP", "DT", "NN", "VBZ", "JJ", ",", "CC", "DT", "NNS", "VBZ", "JJ", "."),
    ("IN", "PRP$", "NN", ",", "DT", "NN", "VBZ", "DT", "JJ", "NN", "."),
    ("NNP", "VBZ", "DT", "JJ", "NN", "IN", "DT", "NNS", "."),
    ("PRP", "RB", "VBD", "DT", "NNS", ",", "CC", "DT", "NN", "VBZ", "JJ", "."),
)

_MARKER_WORDS = (
    "indeed", "surely", "basically", "kindly", "anyway", "frankly", "namely", "hereby",
    "likewise", "rather", "truly", "merely", "simply", "perhaps", "somewhat", "notably",
    "thereby", "moreover", "nonetheless", "accordingly",
)

# character-stream quirks; the two comma rules change spacing only, not tokens
_CHAR_QUIRKS = (
    "space_before_comma", "single_l", "lowercase_i", "no_space_after_comma",
    "double_final_s", "ie_swap", "drop_final_e",
)

# POS-stream constructions
_POS_QUIRKS = ("drop_determiner", "the_before_proper", "tag_question", "so_opener",
               "very_adjective", "fronted_preposition")


def _quirk_token(quirk: str, tok: str, tag: str) -> str:
    if quirk == "single_l":
        return tok.replace("ll", "l")
    if quirk == "lowercase_i" and tok == "I":
        return "i"
    if quirk == "double_final_s" and tag == "NNS":
        return tok + "s"
    if quirk == "ie_swap":
        return tok.replace("ie", "ei")
    if quirk == "drop_final_e" and len(tok) > 3 and tok.endswith("e") and tag.startswith(("N", "J", "V")):
        return tok[:-1]
    return tok


def _apply_pos_quirk(quirk: str, sent: list[tuple[str, str]], rng) -> list[tuple[str, str]]:
    if quirk == "drop_determiner":
        for i, (tok, tag) in enumerate(sent):
            if tag == "DT" and i + 1 < len(sent) and sent[i + 1][1].startswith("N"):
                return sent[:i] + sent[i + 1 :]
        return sent
    if quirk == "the_before_proper":
        for i, (tok, tag) in enumerate(sent):
            if tag == "NNP" and (i == 0 or sent[i - 1][1] != "DT"):
                article = "The" if i == 0 else "the"
                return sent[:i] + [(article, "DT")] + sent[i:]
        return sent[:-1] + [("in", "IN"), ("the", "DT"), (str(rng.choice(_VOCAB["NNP"])), "NNP")] + sent[-1:]
    if quirk == "tag_question":
        return sent[:-1] + [(",", ","), ("is", "VBZ"), ("it", "PRP"), ("?", ".")]
    if quirk == "so_opener":
        first = sent[0]
        if first[1] != "NNP" and first[0] != "I":
            first = (first[0].lower(), first[1])
        return [("So", "RB"), (",", ",")] + [first] + sent[1:]
    if quirk == "very_adjective":
        out = []
        for tok, tag in sent:
            if tag == "JJ":
                out.append(("very", "RB"))
            out.append((tok, tag))
        return out
    if quirk == "fronted_preposition":
        return [("About", "IN"), ("it", "PRP"), (",", ",")] + [
            (sent[0][0] if sent[0][1] == "NNP" or sent[0][0] == "I" else sent[0][0].lower(), sent[0][1])
        ] + sent[1:]
    raise ValueError(quirk)


def _render(sentences: list[tuple[list[tuple[str, str]], str]]) -> str:
    """Join tokens with spaces, attaching punctuation per the sentence's spacing rule."""
    parts = []
    for sent, spacing in sentences:
        out = ""
        for tok, _tag in sent:
            if not out:
                out = tok
            elif tok in ",.!?":
                out += (" " + tok) if (spacing == "space_before_comma" and tok == ",") else tok
            elif out.endswith(",") and spacing == "no_space_after_comma":
                out += tok
            else:
                out += " " + tok
        parts.append(out)
    return " ".join(parts)


def _sentence(rng) -> list[tuple[str, str]]:
    template = _TEMPLATES[rng.integers(len(_TEMPLATES))]
    sent = []
    for slot in template:
        if slot in (".", ","):
            sent.append((slot, slot))
        else:
            words = _VOCAB[slot]
            sent.append((str(words[rng.integers(len(words))]), slot))
    first, tag = sent[0]
    if tag not in ("NNP",) and first != "I":
        sent[0] = (first[0].upper() + first[1:], tag)
    return sent


def _band(fluency) -> str:
    return "0-2" if fluency <= 2 else "3-5"


def generate_synthetic(
    categories: int,
    comments_per_category: int,
    marker_strength: float,
    fluency_profile: Mapping[str, float] | None = None,
    seed: int = 0,
    users_per_category: int | None = None,
    sentences: tuple[int, int] = (3, 6),
) -> tuple[list[UserProfile], list[Comment]]:
    """Build profiles and pre-tagged comments for ``categories`` languages.

    Category labels are the first ``categories`` codes of ``LANGUAGES``
    (US English first).  ``fluency_profile`` maps fluency bands "0-2"/"3-5"
    to marker rates for non-native comments, overriding ``marker_strength``.
    """
    if not 2 <= categories <= len(LANGUAGES):
        raise ValidationError(f"categories must be in 2..{len(LANGUAGES)}")
    if not 0.0 <= marker_strength <= 1.0:
        raise ValidationError("marker_strength must lie in [0, 1]")
    profile_rates = dict(fluency_profile or {})
    for band, rate in profile_rates.items():
        if band not in ("0-2", "3-5") or not 0.0 <= rate <= 1.0:
            raise ValidationError(f"bad fluency profile entry {band!r}: {rate!r}")
    rng = np.random.default_rng(seed)
    users_per_category = users_per_category or max(1, comments_per_category // 10)
    profiles: list[UserProfile] = []
    comments: list[Comment] = []
    lo, hi = sentences
    for k in range(categories):
        lang = LANGUAGES[k]
        marker_word = _MARKER_WORDS[k % len(_MARKER_WORDS)]
        char_quirk = _CHAR_QUIRKS[k % len(_CHAR_QUIRKS)]
        pos_quirk = _POS_QUIRKS[k % len(_POS_QUIRKS)]
        fluencies = []
        for u in range(users_per_category):
            fluency = NATIVE if lang == US_ENGLISH else int(rng.integers(0, 6))
            fluencies.append(fluency)
            profiles.append(UserProfile(f"u-{lang}-{u}", frozenset([lang]), fluency))
        for i in range(comments_per_category):
            u = i % users_per_category
            fluency = fluencies[u]
            rate = marker_strength
            if fluency != NATIVE and profile_rates:
                rate = profile_rates.get(_band(fluency), marker_strength)
            rendered = []
            for _ in range(int(rng.integers(lo, hi + 1))):
                sent = _sentence(rng)
                mark_word, mark_char, mark_pos = rng.random(3) < rate
                if mark_pos:
                    sent = _apply_pos_quirk(pos_quirk, sent, rng)
                if mark_word:
                    at = int(rng.integers(1, len(sent)))
                    sent = sent[:at] + [(marker_word, "RB")] + sent[at:]
                spacing = None
                if mark_char:
                    if char_quirk in ("space_before_comma", "no_space_after_comma"):
                        spacing = char_quirk
                        if not any(tok == "," for tok, _ in sent):
                            sent = sent[:1] + [(",", ",")] + sent[1:]
                    else:
                        sent = [(_quirk_token(char_quirk, tok, tag), tag) for tok, tag in sent]
                rendered.append((sent, spacing))
            tokens = tuple(tok for sent, _ in rendered for tok, _tag in sent)
            tags = tuple(tag for sent, _ in rendered for _tok, tag in sent)
            comments.append(
                Comment(
                    comment_id=f"c-{lang}-{i}",
                    user_id=f"u-{lang}-{u}",
                    label=lang,
                    text=_render(rendered),
                    fluency=fluency,
                    tokens=tokens,
                    pos_tags=tags,
                )
            )
    return profiles, comments
