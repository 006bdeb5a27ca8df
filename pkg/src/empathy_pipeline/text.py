"""Lexical tf-idf n-gram features and lexicon-based psycholinguistic features.

Transcripts are consumed as input (speech recognition is out of scope). The
n-gram vocabulary is built from the training split only and capped at the
most frequent entries. The category lexicon follows the LIWC dictionary text
format; the genuine Italian dictionary is proprietary, so the package ships
a small open fixture in the same format (``data/italian_categories.dic``)
and any user-supplied dictionary path is accepted.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .features import SparseVector

_TOKEN_RE = re.compile(r"\w+(?:'\w+)*'?|[^\w\s]", re.UNICODE)
_WORD_RE = re.compile(r"\w", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercased Unicode word tokens; punctuation as separate tokens.

    Apostrophes stay word-internal ("po'" is one token); other punctuation
    marks are emitted individually so the punctuation categories can count
    them.
    """
    return _TOKEN_RE.findall(text.lower())


def word_tokens(tokens: Iterable[str]) -> list[str]:
    return [t for t in tokens if _WORD_RE.search(t)]


def ngrams(tokens: Sequence[str], n_max: int = 3) -> list[str]:
    """All 1..n_max-grams as space-joined strings; never crosses the token list."""
    out = []
    for n in range(1, n_max + 1):
        out.extend(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return out


@dataclass(frozen=True)
class Vocabulary:
    """Ordered n-gram vocabulary with per-segment document frequencies."""

    terms: tuple[str, ...]
    doc_freq: tuple[int, ...]
    n_max: int
    index: dict[str, int]

    def __len__(self) -> int:
        return len(self.terms)

    @classmethod
    def build(
        cls,
        segments_tokens: Sequence[Sequence[str]],
        n_max: int = 3,
        size_cap: int = 10_000,
    ) -> "Vocabulary":
        """Vocabulary from training segments only, ordered by document
        frequency descending then lexicographically, truncated to size_cap."""
        df: Counter[str] = Counter()
        for tokens in segments_tokens:
            words = word_tokens(tokens)
            df.update(set(ngrams(words, n_max)))
        ordered = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[:size_cap]
        terms = tuple(t for t, _ in ordered)
        freqs = tuple(c for _, c in ordered)
        return cls(terms, freqs, n_max, {t: i for i, t in enumerate(terms)})


def tfidf_vector(
    segment_tokens: Sequence[str], vocab: Vocabulary, n_segments_total: int
) -> SparseVector:
    """log(1 + tf) * log(N / df) weights (natural log) over the vocabulary.

    Out-of-vocabulary n-grams are ignored; terms present in every training
    segment get idf 0.
    """
    counts: Counter[str] = Counter(ngrams(word_tokens(segment_tokens), vocab.n_max))
    idx, vals = [], []
    for term, f in counts.items():
        i = vocab.index.get(term)
        if i is None:
            continue
        df = vocab.doc_freq[i]
        if not 1 <= df <= n_segments_total:
            raise ValueError(f"document frequency {df} outside [1, {n_segments_total}]")
        w = math.log(1.0 + f) * math.log(n_segments_total / df)
        if w != 0.0:
            idx.append(i)
            vals.append(w)
    order = np.argsort(idx) if idx else np.zeros(0, dtype=np.intp)
    return SparseVector(
        np.asarray(idx, dtype=np.intp)[order], np.asarray(vals)[order], len(vocab)
    )


class LexiconFormatError(ValueError):
    """Raised for malformed dictionary files; message carries the line number."""


@dataclass(frozen=True)
class LexiconDict:
    """Word-category dictionary: category id -> name, word/stem -> category ids.

    Stems are stored without the trailing ``*`` and match any token they
    prefix. An exact word entry takes precedence over stem matches.
    """

    categories: dict[int, str]
    words: dict[str, frozenset[int]]
    stems: dict[str, frozenset[int]]

    @property
    def category_ids(self) -> list[int]:
        return sorted(self.categories)

    def lookup(self, token: str) -> frozenset[int]:
        exact = self.words.get(token)
        if exact is not None:
            return exact
        hits: set[int] = set()
        for stem, cats in self.stems.items():
            if token.startswith(stem):
                hits.update(cats)
        return frozenset(hits)


def load_lexicon(path: str | Path) -> LexiconDict:
    """Parse a LIWC-format dictionary.

    Format: a header block delimited by lines containing only ``%`` with
    ``id<TAB>name`` rows, followed by body rows ``word<TAB>id[ id...]``.
    A trailing ``*`` marks a prefix wildcard.
    """
    categories: dict[int, str] = {}
    words: dict[str, frozenset[int]] = {}
    stems: dict[str, frozenset[int]] = {}
    in_header = False
    header_done = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line == "%":
                if not header_done:
                    if in_header:
                        header_done = True
                    in_header = not in_header
                continue
            parts = line.split()
            if in_header:
                if len(parts) < 2 or not parts[0].isdigit():
                    raise LexiconFormatError(f"line {lineno}: bad category row {line!r}")
                categories[int(parts[0])] = parts[1]
                continue
            if len(parts) < 2:
                raise LexiconFormatError(f"line {lineno}: entry without categories {line!r}")
            term = parts[0].lower()
            try:
                ids = frozenset(int(p) for p in parts[1:])
            except ValueError as exc:
                raise LexiconFormatError(f"line {lineno}: non-numeric category id") from exc
            unknown = ids - categories.keys()
            if unknown:
                raise LexiconFormatError(
                    f"line {lineno}: undeclared category id(s) {sorted(unknown)}"
                )
            if term.endswith("*"):
                stems[term[:-1]] = ids
            else:
                words[term] = ids
    if not categories:
        raise LexiconFormatError("no category header block found")
    return LexiconDict(categories, words, stems)


def serialize_lexicon(lex: LexiconDict) -> str:
    """Round-trippable text form (normalized whitespace)."""
    lines = ["%"]
    for cid in lex.category_ids:
        lines.append(f"{cid}\t{lex.categories[cid]}")
    lines.append("%")
    entries = [(w, ids) for w, ids in lex.words.items()]
    entries += [(s + "*", ids) for s, ids in lex.stems.items()]
    for term, ids in sorted(entries):
        lines.append(term + "\t" + " ".join(str(i) for i in sorted(ids)))
    return "\n".join(lines) + "\n"


def fixture_lexicon_path() -> Path:
    """Path of the bundled fixture dictionary."""
    return Path(str(resources.files("empathy_pipeline").joinpath("data/italian_categories.dic")))


GENERAL_NAMES = ("word_count", "words_per_sentence", "pct_dictionary", "pct_sixltr", "pct_numerals")

PUNCT_NAMES = (
    "period", "comma", "colon", "semicolon", "qmark", "exclam",
    "dash", "quote", "apostro", "parenth", "otherp", "allpct",
)

_SENTENCE_END = {".", "!", "?"}
_PUNCT_CLASS = {
    ".": "period", ",": "comma", ":": "colon", ";": "semicolon",
    "?": "qmark", "!": "exclam", "-": "dash", "–": "dash", "—": "dash",
    '"': "quote", "“": "quote", "”": "quote", "«": "quote", "»": "quote",
    "(": "parenth", ")": "parenth", "[": "parenth", "]": "parenth",
    "{": "parenth", "}": "parenth",
}


def psycho_feature_names(lex: LexiconDict) -> tuple[str, ...]:
    cats = tuple(f"cat_{lex.categories[cid]}" for cid in lex.category_ids)
    return GENERAL_NAMES + cats + tuple(f"punct_{p}" for p in PUNCT_NAMES)


def psycho_features(tokens: Sequence[str], lex: LexiconDict) -> np.ndarray:
    """General descriptors, category relative frequencies and punctuation rates.

    Five general descriptors (word count, words per sentence, % of words in
    the dictionary, % of words longer than six letters, % numerals), one
    slot per lexicon category (100 * matching words / word count; one word
    may hit several categories) and twelve punctuation rates relative to the
    word count. An 85-category dictionary yields 102 features. All relative
    features are 0 when there are no word tokens.
    """
    words = word_tokens(tokens)
    puncts = [t for t in tokens if not _WORD_RE.search(t)]
    wc = len(words)
    cat_ids = lex.category_ids
    values = np.zeros(len(GENERAL_NAMES) + len(cat_ids) + len(PUNCT_NAMES))
    if wc == 0:
        return values

    n_sentences = max(1, sum(1 for t in puncts if t in _SENTENCE_END))
    in_dict = sum(1 for w in words if lex.lookup(w))
    sixltr = sum(1 for w in words if len(w) > 6)
    numerals = sum(1 for w in words if w.isdigit())
    values[0] = wc
    values[1] = wc / n_sentences
    values[2] = 100.0 * in_dict / wc
    values[3] = 100.0 * sixltr / wc
    values[4] = 100.0 * numerals / wc

    cat_pos = {cid: i for i, cid in enumerate(cat_ids)}
    base = len(GENERAL_NAMES)
    for w in words:
        for cid in lex.lookup(w):
            values[base + cat_pos[cid]] += 1
    values[base : base + len(cat_ids)] *= 100.0 / wc

    pbase = base + len(cat_ids)
    punct_pos = {name: pbase + i for i, name in enumerate(PUNCT_NAMES)}
    apostrophes = sum(t.count("'") for t in tokens)
    counted = 0
    for t in puncts:
        cls = _PUNCT_CLASS.get(t)
        if t == "'":
            continue  # apostrophes are counted character-wise below
        if cls is None:
            cls = "otherp"
        values[punct_pos[cls]] += 1
        counted += 1
    values[punct_pos["apostro"]] = apostrophes
    values[pbase : pbase + len(PUNCT_NAMES) - 1] *= 100.0 / wc
    values[punct_pos["allpct"]] = float(
        np.sum(values[pbase : pbase + len(PUNCT_NAMES) - 1])
    )
    return values
