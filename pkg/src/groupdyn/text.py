"""Tokenization, vocabulary, TF-IDF keywords and keyword-set comparison."""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

_WORD = re.compile(r"[^\W\d_]+")


def load_stop_words(source=None) -> frozenset[str]:
    """Stop words from a file path, an iterable of words, or the bundled English list."""
    if source is None:
        text = resources.files("groupdyn").joinpath("data/stopwords_en.txt").read_text("utf-8")
    elif isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        return frozenset(str(w).strip().lower() for w in source if str(w).strip())
    return frozenset(line.strip().lower() for line in text.splitlines()
                     if line.strip() and not line.startswith("#"))


def light_stem(word: str) -> str:
    """Strip a few common English inflection suffixes."""
    if len(word) <= 3:
        return word
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    for suffix in ("ing", "ed"):
        stem = word[: -len(suffix)]
        if word.endswith(suffix) and len(stem) >= 3 and re.search("[aeiouy]", stem):
            return stem
    if word.endswith("s") and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    return word


@dataclass(frozen=True)
class TokenizedDoc:
    message_id: str
    tokens: tuple[int, ...]


class Vocabulary:
    """Dense word <-> index map with document frequencies."""

    def __init__(self, words: Sequence[str] = (), df: Sequence[int] = (), n_docs: int = 0):
        self.words = list(words)
        self.index = {w: i for i, w in enumerate(self.words)}
        self.df = np.asarray(df, dtype=np.int64) if len(df) else np.zeros(len(self.words), np.int64)
        self.n_docs = int(n_docs)

    @classmethod
    def from_documents(cls, docs: Iterable[Sequence[str]], min_df: int = 1) -> "Vocabulary":
        df: Counter = Counter()
        n = 0
        for doc in docs:
            n += 1
            df.update(set(doc))
        words = sorted(w for w, c in df.items() if c >= min_df)
        return cls(words, [df[w] for w in words], n)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def encode(self, tokens: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.index[t] for t in tokens if t in self.index)

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.words[i] for i in ids]

    def to_dict(self) -> dict:
        return {"words": self.words, "df": self.df.tolist(), "n_docs": self.n_docs}

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabulary":
        return cls(data["words"], data["df"], data["n_docs"])


class TextAnalyzer(BaseEstimator, TransformerMixin):
    """Lowercase, keep letter runs, drop stop words, optionally stem.

    ``fit`` learns a Vocabulary from raw texts; ``transform`` maps texts to
    lists of vocabulary indices (out-of-vocabulary words dropped).
    """

    def __init__(self, stop_words=None, stem: bool = True, min_length: int = 2, min_df: int = 1):
        self.stop_words = stop_words
        self.stem = stem
        self.min_length = min_length
        self.min_df = min_df

    def _stops(self) -> frozenset[str]:
        if getattr(self, "_stop_src", None) is not self.stop_words or not hasattr(self, "_stop_cache"):
            self._stop_cache = load_stop_words(self.stop_words)
            self._stop_src = self.stop_words
        return self._stop_cache

    def _stemmer(self) -> Callable[[str], str] | None:
        if callable(self.stem):
            return self.stem
        return light_stem if self.stem else None

    def tokenize(self, text: str) -> list[str]:
        stops, stem = self._stops(), self._stemmer()
        out = []
        for word in _WORD.findall((text or "").lower()):
            if word in stops or len(word) < self.min_length:
                continue
            if stem is not None:
                word = stem(word)
                if word in stops:
                    continue
            out.append(word)
        return out

    def fit(self, X, y=None):
        self.vocabulary_ = Vocabulary.from_documents((self.tokenize(t) for t in X), self.min_df)
        return self

    def transform(self, X) -> list[tuple[int, ...]]:
        vocab = self.vocabulary_
        return [vocab.encode(self.tokenize(t)) for t in X]


def tokenize(message, analyzer: TextAnalyzer, vocabulary: Vocabulary | None = None) -> TokenizedDoc:
    vocabulary = vocabulary if vocabulary is not None else analyzer.vocabulary_
    return TokenizedDoc(message.id, vocabulary.encode(analyzer.tokenize(message.text)))


@dataclass(frozen=True)
class KeywordSet:
    scope: str
    words: frozenset[str]
    source: str
    weights: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.words)


def tfidf_weights(tokens: Sequence[str], vocabulary: Vocabulary) -> dict[str, float]:
    """tf(w, d) * ln(N / df(w)) for each in-vocabulary word of the document."""
    if vocabulary.n_docs < 1:
        raise ValueError("document frequencies need at least one document")
    tf = Counter(t for t in tokens if t in vocabulary)
    n = vocabulary.n_docs
    return {w: c * math.log(n / vocabulary.df[vocabulary.index[w]]) for w, c in tf.items()}


def tfidf_keywords(tokens: Sequence[str], vocabulary: Vocabulary, top_n: int = 10,
                   scope: str = "") -> KeywordSet:
    """Top words by TF-IDF weight, ties broken lexicographically.

    Zero-weight words only appear when the document has no positive-weight
    word, so a non-empty document always yields keywords.
    """
    weights = tfidf_weights(tokens, vocabulary)
    ranked = sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))
    positive = [kv for kv in ranked if kv[1] > 0]
    chosen = (positive or ranked)[: max(top_n, 0)]
    return KeywordSet(scope, frozenset(w for w, _ in chosen), "tfidf", dict(chosen))


class TfidfKeywords(BaseEstimator, TransformerMixin):
    """Per-document TF-IDF keyword sets; df is learned from the fitted documents.

    ``X`` is a sequence of token lists (strings).
    """

    def __init__(self, top_n: int = 10):
        self.top_n = top_n

    def fit(self, X, y=None):
        self.vocabulary_ = Vocabulary.from_documents(X)
        return self

    def transform(self, X) -> list[KeywordSet]:
        return [tfidf_keywords(doc, self.vocabulary_, self.top_n, scope=str(i))
                for i, doc in enumerate(X)]


def keyword_similarity(s1, s2) -> float | None:
    """Overlap coefficient |S1 & S2| / min(|S1|, |S2|); None when either set is empty."""
    a = s1.words if isinstance(s1, KeywordSet) else set(s1)
    b = s2.words if isinstance(s2, KeywordSet) else set(s2)
    if not a or not b:
        return None
    return len(a & b) / min(len(a), len(b))


@dataclass(frozen=True)
class Histogram:
    centers: np.ndarray
    counts: np.ndarray
    missing: int = 0

    def rows(self) -> list[tuple[float, int]]:
        return [(float(c), int(n)) for c, n in zip(self.centers, self.counts)]


def convergence_histogram(pairs: Iterable[tuple], bucket_width: float = 0.05) -> Histogram:
    """Similarity counts rounded to the nearest multiple of *bucket_width*.

    Buckets are centred on 0, w, 2w, ..., 1, so exact matches (1.0) and
    disjoint pairs (0.0) each get their own bucket.  Pairs with an empty
    side are tallied as missing.
    """
    if not 0 < bucket_width <= 1:
        raise ValueError("bucket_width must lie in (0, 1]")
    n_buckets = int(round(1 / bucket_width)) + 1
    counts = np.zeros(n_buckets, dtype=np.int64)
    missing = 0
    for s1, s2 in pairs:
        sim = keyword_similarity(s1, s2)
        if sim is None:
            missing += 1
            continue
        counts[min(int(math.floor(sim / bucket_width + 0.5 + 1e-9)), n_buckets - 1)] += 1
    centers = np.round(np.arange(n_buckets) * bucket_width, 10)
    return Histogram(centers, counts, missing)
