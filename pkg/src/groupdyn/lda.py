"""Latent Dirichlet Allocation by collapsed Gibbs sampling."""
from __future__ import annotations

import json
import logging
import zlib
from pathlib import Path
from typing import Sequence

import numba
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .text import KeywordSet, Vocabulary

LOG = logging.getLogger(__name__)


@numba.njit(cache=True)
def _gibbs_sweep(words, docs, z, ndk, nkw, nk, alpha, beta, vbeta, uniforms):
    n_topics = nk.shape[0]
    p = np.empty(n_topics)
    for i in range(words.shape[0]):
        w, d, k = words[i], docs[i], z[i]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        total = 0.0
        for t in range(n_topics):
            total += (ndk[d, t] + alpha) * (nkw[t, w] + beta) / (nk[t] + vbeta)
            p[t] = total
        u = uniforms[i] * total
        k = 0
        while k < n_topics - 1 and p[k] <= u:
            k += 1
        z[i] = k
        ndk[d, k] += 1
        nkw[k, w] += 1
        nk[k] += 1


@numba.njit(cache=True)
def _fold_in(words, phi, alpha, z, uniforms, n_sweeps, burn_in):
    n_topics = phi.shape[0]
    counts = np.zeros(n_topics)
    for i in range(words.shape[0]):
        counts[z[i]] += 1
    acc = np.zeros(n_topics)
    p = np.empty(n_topics)
    pos = 0
    for sweep in range(n_sweeps):
        for i in range(words.shape[0]):
            counts[z[i]] -= 1
            total = 0.0
            for t in range(n_topics):
                total += (counts[t] + alpha) * phi[t, words[i]]
                p[t] = total
            u = uniforms[pos] * total
            pos += 1
            k = 0
            while k < n_topics - 1 and p[k] <= u:
                k += 1
            z[i] = k
            counts[k] += 1
        if sweep >= burn_in:
            acc += counts
    return acc / (n_sweeps - burn_in)


def _flatten(docs: Sequence[Sequence[int]]):
    lengths = np.array([len(d) for d in docs], dtype=np.int64)
    words = np.fromiter((w for d in docs for w in d), dtype=np.int64, count=int(lengths.sum()))
    doc_of = np.repeat(np.arange(len(docs), dtype=np.int64), lengths)
    return words, doc_of, lengths


class GibbsLDA(BaseEstimator, TransformerMixin):
    """LDA topic model trained by collapsed Gibbs sampling.

    ``X`` is a sequence of documents, each a sequence of vocabulary indices.

    Parameters
    ----------
    n_topics : int, default=350
    alpha : float or "auto", default="auto"
        Symmetric document-topic prior; "auto" means 50 / n_topics.
    beta : float, default=0.01
        Symmetric topic-word prior.
    n_iter : int, default=1000
        Gibbs sweeps over the corpus.
    n_avg : int, default=100
        Estimates are averaged over this many final sweeps.
    infer_iter : int, default=50
        Folding-in sweeps per document in ``transform``; the second half is averaged.
    random_state : int, default=42

    Attributes
    ----------
    components_ : ndarray of shape (n_topics, n_words)
        Topic-word distributions, rows sum to one.
    doc_topic_ : ndarray of shape (n_docs, n_topics)
        Training-document topic distributions.
    empty_docs_ : ndarray of bool
        Training documents without tokens (their doc_topic_ row is uniform).
    """

    def __init__(self, n_topics: int = 350, alpha="auto", beta: float = 0.01, n_iter: int = 1000,
                 n_avg: int = 100, infer_iter: int = 50, random_state: int = 42):
        self.n_topics = n_topics
        self.alpha = alpha
        self.beta = beta
        self.n_iter = n_iter
        self.n_avg = n_avg
        self.infer_iter = infer_iter
        self.random_state = random_state

    @property
    def alpha_(self) -> float:
        if self.alpha in (None, "auto"):
            return 50.0 / self.n_topics
        return float(self.alpha)

    def fit(self, X, y=None, n_words: int | None = None):
        docs = [np.asarray(d, dtype=np.int64) for d in X]
        if not docs:
            raise ValueError("no documents to train on")
        if int(self.n_topics) < 2:
            raise ValueError("n_topics must be >= 2")
        words, doc_of, lengths = _flatten(docs)
        if words.size == 0:
            raise ValueError("corpus has zero tokens")
        if n_words is None:
            n_words = int(words.max()) + 1
        if words.min() < 0 or words.max() >= n_words:
            raise ValueError("token index outside the vocabulary")
        T, V = int(self.n_topics), int(n_words)
        if T > V:
            raise ValueError(f"n_topics ({T}) exceeds vocabulary size ({V})")
        alpha, beta = self.alpha_, float(self.beta)
        n_avg = max(1, min(int(self.n_avg), int(self.n_iter)))

        rng = np.random.Generator(np.random.PCG64(self.random_state))
        z = rng.integers(0, T, size=words.size).astype(np.int64)
        ndk = np.zeros((len(docs), T), dtype=np.int64)
        nkw = np.zeros((T, V), dtype=np.int64)
        np.add.at(ndk, (doc_of, z), 1)
        np.add.at(nkw, (z, words), 1)
        nk = nkw.sum(axis=1)

        phi_acc = np.zeros((T, V))
        theta_acc = np.zeros((len(docs), T))
        for it in range(int(self.n_iter)):
            _gibbs_sweep(words, doc_of, z, ndk, nkw, nk, alpha, beta, V * beta, rng.random(words.size))
            if it >= self.n_iter - n_avg:
                phi_acc += (nkw + beta) / (nk[:, None] + V * beta)
                theta_acc += (ndk + alpha) / (lengths[:, None] + T * alpha)
        self.components_ = _normalize_rows(phi_acc)
        self.doc_topic_ = _normalize_rows(theta_acc)
        self.empty_docs_ = lengths == 0
        self.n_words_ = V
        self.n_topics_ = T
        return self

    def _doc_seed(self, doc: np.ndarray) -> np.random.SeedSequence:
        return np.random.SeedSequence([int(self.random_state), zlib.crc32(doc.tobytes()), doc.size])

    def infer(self, doc) -> tuple[np.ndarray, bool]:
        """Topic weights for one document and whether it had no usable tokens."""
        T = self.components_.shape[0]
        doc = np.asarray(doc, dtype=np.int64)
        doc = doc[(doc >= 0) & (doc < self.components_.shape[1])]
        if doc.size == 0:
            return np.full(T, 1.0 / T), True
        n_sweeps = max(2, int(self.infer_iter))
        rng = np.random.Generator(np.random.PCG64(self._doc_seed(doc)))
        z = rng.integers(0, T, size=doc.size).astype(np.int64)
        uniforms = rng.random(doc.size * n_sweeps)
        counts = _fold_in(doc, self.components_, self.alpha_, z, uniforms, n_sweeps, n_sweeps // 2)
        theta = (counts + self.alpha_) / (doc.size + T * self.alpha_)
        return theta / theta.sum(), False

    def transform(self, X) -> np.ndarray:
        return np.vstack([self.infer(d)[0] for d in X]) if len(X) else np.empty((0, self.components_.shape[0]))

    def topic_keywords(self, topic: int, top_n: int, vocabulary: Vocabulary | None = None) -> KeywordSet:
        return lda_topic_keywords(self, topic, top_n, vocabulary)

    def save(self, path, vocabulary: Vocabulary | None = None, doc_ids: Sequence[str] | None = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "params": self.get_params(),
            "alpha_value": self.alpha_,
            "topic_word": self.components_.tolist(),
            "doc_topic": self.doc_topic_.tolist(),
            "empty_docs": self.empty_docs_.tolist(),
            "doc_ids": list(doc_ids) if doc_ids is not None else None,
            "vocabulary": vocabulary.to_dict() if vocabulary is not None else None,
        }
        path.write_text(json.dumps(payload) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> tuple["GibbsLDA", Vocabulary | None, list[str] | None]:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        model = cls(**data["params"])
        model.components_ = np.asarray(data["topic_word"], dtype=float)
        model.doc_topic_ = np.asarray(data["doc_topic"], dtype=float)
        model.empty_docs_ = np.asarray(data["empty_docs"], dtype=bool)
        model.n_topics_, model.n_words_ = model.components_.shape
        vocab = Vocabulary.from_dict(data["vocabulary"]) if data.get("vocabulary") else None
        return model, vocab, data.get("doc_ids")


def _normalize_rows(mat: np.ndarray) -> np.ndarray:
    return mat / mat.sum(axis=1, keepdims=True)


def lda_train(docs, n_topics: int = 350, alpha="auto", beta: float = 0.01, iterations: int = 1000,
              seed: int = 42, n_words: int | None = None, n_avg: int = 100) -> GibbsLDA:
    model = GibbsLDA(n_topics=n_topics, alpha=alpha, beta=beta, n_iter=iterations,
                     n_avg=n_avg, random_state=seed)
    return model.fit([getattr(d, "tokens", d) for d in docs], n_words=n_words)


def lda_infer(model: GibbsLDA, doc) -> tuple[np.ndarray, bool]:
    return model.infer(getattr(doc, "tokens", doc))


def lda_topic_keywords(model: GibbsLDA, topic: int, top_n: int,
                       vocabulary: Vocabulary | None = None) -> KeywordSet:
    """The *top_n* most probable words of *topic*, ties broken lexicographically."""
    row = model.components_[topic]
    names = vocabulary.words if vocabulary is not None else [str(i) for i in range(row.size)]
    order = sorted(range(row.size), key=lambda i: (-row[i], names[i]))[: max(top_n, 0)]
    return KeywordSet(f"topic:{topic}", frozenset(names[i] for i in order), "lda",
                      {names[i]: float(row[i]) for i in order})


def dominant_topics(doc_topic: np.ndarray) -> np.ndarray:
    """argmax per row; ties resolve to the lowest topic index."""
    return np.argmax(doc_topic, axis=1)
