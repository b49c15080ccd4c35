"""Narrative tokenization, vocabulary building and LDA by collapsed Gibbs
sampling."""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import _core
from .errors import BadTopic, EmptyCorpus

_ALPHA_RUNS = re.compile(r"[a-z]+")
_MASK = re.compile(r"^x{2,}$")


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset:
    text = resources.files("complaint_insight.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


@dataclass(frozen=True)
class TokenRules:
    stopwords: frozenset = field(default_factory=default_stopwords)
    min_length: int = 3
    drop_masks: bool = True

    @classmethod
    def from_file(cls, path, **kw) -> "TokenRules":
        with open(path, encoding="utf-8") as fh:
            words = frozenset(w.strip().lower() for w in fh if w.strip())
        return cls(stopwords=words, **kw)


def tokenize(narrative: str, rules: Optional[TokenRules] = None) -> list:
    rules = rules or TokenRules()
    out = []
    for tok in _ALPHA_RUNS.findall(narrative.lower()):
        if len(tok) < rules.min_length or tok in rules.stopwords:
            continue
        if rules.drop_masks and _MASK.match(tok):
            continue
        out.append(tok)
    return out


@dataclass(frozen=True)
class Vocabulary:
    words: tuple
    doc_freq: tuple

    def __post_init__(self):
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.words)})

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word) -> bool:
        return word in self._index

    def id(self, word: str) -> int:
        return self._index[word]

    def get(self, word: str, default=None):
        return self._index.get(word, default)


@dataclass
class Corpus:
    documents: list
    vocabulary: Vocabulary
    doc_index: np.ndarray  # position of each kept document in the input list

    @property
    def n_tokens(self) -> int:
        return sum(len(d) for d in self.documents)

    def flat(self):
        words = np.concatenate([np.asarray(d, dtype=np.int64) for d in self.documents]) if self.documents else np.empty(0, np.int64)
        docs = np.repeat(np.arange(len(self.documents), dtype=np.int64), [len(d) for d in self.documents])
        return np.ascontiguousarray(words), np.ascontiguousarray(docs)


def build_corpus(token_lists: Sequence[Sequence[str]], min_df: int = 5, max_df_fraction: float = 0.5,
                 max_vocab: int = 50_000) -> Corpus:
    """Vocabulary of words whose document frequency lies in
    ``[min_df, max_df_fraction * D]``, cut to ``max_vocab`` by corpus
    frequency (ties lexicographic). Documents left empty are dropped."""
    if min_df < 1 or not 0.0 < max_df_fraction <= 1.0:
        raise ValueError("need min_df >= 1 and 0 < max_df_fraction <= 1")
    n_docs = len(token_lists)
    df, tf = Counter(), Counter()
    for toks in token_lists:
        tf.update(toks)
        df.update(set(toks))
    ceiling = max_df_fraction * n_docs
    kept = [w for w in df if min_df <= df[w] <= ceiling]
    kept.sort(key=lambda w: (-tf[w], w))
    kept = kept[:max_vocab]
    vocab = Vocabulary(tuple(kept), tuple(df[w] for w in kept))

    docs, index = [], []
    for i, toks in enumerate(token_lists):
        ids = [vocab.get(t) for t in toks]
        ids = [j for j in ids if j is not None]
        if ids:
            docs.append(ids)
            index.append(i)
    if not docs:
        raise EmptyCorpus("no document has an in-vocabulary token")
    return Corpus(docs, vocab, np.array(index, dtype=np.int64))


@dataclass
class LdaConfig:
    K: int = 10
    alpha: Optional[float] = None  # default 50 / K
    beta: float = 0.01
    sweeps: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.alpha is None:
            self.alpha = 50.0 / self.K if self.K >= 1 else 1.0
        if self.K < 1 or self.alpha <= 0 or self.beta <= 0 or self.sweeps < 0:
            raise ValueError("need K >= 1, alpha > 0, beta > 0, sweeps >= 0")


@dataclass
class TopicModel:
    phi: np.ndarray
    theta: np.ndarray
    n_dk: np.ndarray
    n_kw: np.ndarray
    n_k: np.ndarray
    z: np.ndarray
    vocabulary: Vocabulary
    config: LdaConfig
    log_likelihood: float = float("nan")
    trace: list = field(default_factory=list)

    @property
    def K(self) -> int:
        return self.phi.shape[0]

    def token_share(self) -> np.ndarray:
        total = self.n_k.sum()
        return self.n_k / total if total else np.zeros(self.K)


@dataclass
class GibbsState:
    words: np.ndarray
    docs: np.ndarray
    z: np.ndarray
    n_dk: np.ndarray
    n_kw: np.ndarray
    n_k: np.ndarray
    alpha: float
    beta: float

    def phi(self) -> np.ndarray:
        V = self.n_kw.shape[1]
        return (self.n_kw + self.beta) / (self.n_k[:, None] + V * self.beta)

    def theta(self) -> np.ndarray:
        K = self.n_k.shape[0]
        lengths = self.n_dk.sum(axis=1)
        return (self.n_dk + self.alpha) / (lengths[:, None] + K * self.alpha)

    def mean_log_likelihood(self) -> float:
        """Average per-token log p(w | d) under the current point estimates."""
        return _mean_token_loglik(self.theta(), self.phi(), self.words, self.docs)


def _mean_token_loglik(theta, phi, words, docs) -> float:
    if words.size == 0:
        raise EmptyCorpus("no tokens")
    total = 0.0
    chunk = 200_000
    for s in range(0, words.size, chunk):
        w, d = words[s:s + chunk], docs[s:s + chunk]
        p = np.einsum("ik,ki->i", theta[d], phi[:, w])
        total += float(np.log(p).sum())
    return total / words.size


def tally(words, docs, z, n_docs: int, K: int, V: int):
    """Count matrices recomputed from assignments (used to verify the
    sampler's bookkeeping)."""
    n_dk = np.zeros((n_docs, K), dtype=np.int64)
    n_kw = np.zeros((K, V), dtype=np.int64)
    np.add.at(n_dk, (docs, z), 1)
    np.add.at(n_kw, (z, words), 1)
    return n_dk, n_kw, n_kw.sum(axis=1)


def fit_lda(corpus: Corpus, cfg: LdaConfig = None, callback: Optional[Callable] = None,
            trace_every: int = 0) -> TopicModel:
    """Collapsed Gibbs LDA.

    Assignments start uniformly at random; each sweep resamples every token
    from ``(n_dk + alpha) (n_kw + beta) / (n_k + V beta)`` with its own count
    removed. ``callback(sweep, state)`` runs after each sweep; with
    ``trace_every > 0`` the mean token log-likelihood is recorded every that
    many sweeps (and after the last).
    """
    cfg = cfg or LdaConfig()
    if not corpus.documents or corpus.n_tokens == 0:
        raise EmptyCorpus("corpus has no tokens")
    V = len(corpus.vocabulary)
    if V < 1:
        raise EmptyCorpus("empty vocabulary")
    K = cfg.K
    words, docs = corpus.flat()
    rng = np.random.default_rng(cfg.seed)
    z = rng.integers(0, K, size=words.size).astype(np.int64)
    n_dk, n_kw, n_k = tally(words, docs, z, len(corpus.documents), K, V)
    state = GibbsState(words, docs, z, n_dk, n_kw, n_k, float(cfg.alpha), float(cfg.beta))
    trace = []
    for sweep in range(1, cfg.sweeps + 1):
        u = rng.random(words.size)
        _core.gibbs_sweep(words, docs, z, n_dk, n_kw, n_k, state.alpha, state.beta, u)
        if trace_every and (sweep % trace_every == 0 or sweep == cfg.sweeps):
            trace.append((sweep, state.mean_log_likelihood()))
        if callback is not None:
            callback(sweep, state)
    return TopicModel(
        phi=state.phi(),
        theta=state.theta(),
        n_dk=n_dk,
        n_kw=n_kw,
        n_k=n_k,
        z=z,
        vocabulary=corpus.vocabulary,
        config=cfg,
        log_likelihood=state.mean_log_likelihood(),
        trace=trace,
    )


def fit_lda_chains(corpus: Corpus, cfg: LdaConfig, n_chains: int = 1) -> TopicModel:
    """Independent chains seeded ``seed, seed+1, ...``; keeps the one with
    the best final training log-likelihood (first wins ties)."""
    best = None
    for c in range(n_chains):
        chain_cfg = LdaConfig(cfg.K, cfg.alpha, cfg.beta, cfg.sweeps, cfg.seed + c)
        model = fit_lda(corpus, chain_cfg)
        if best is None or model.log_likelihood > best.log_likelihood:
            best = model
    return best


def top_words(model: TopicModel, topic: int, n: int = 10) -> list:
    if not 0 <= topic < model.K:
        raise BadTopic(f"topic {topic} outside [0, {model.K})")
    row = model.phi[topic]
    words = model.vocabulary.words
    order = sorted(range(len(words)), key=lambda w: (-row[w], words[w]))
    return [(words[w], float(row[w])) for w in order[:max(0, n)]]


def perplexity(model: TopicModel, corpus: Corpus) -> float:
    """``exp(-mean log sum_k theta[d,k] phi[k,w])`` over the corpus tokens;
    document rows of ``theta`` align with the corpus documents."""
    words, docs = corpus.flat()
    if words.size == 0:
        raise EmptyCorpus("no tokens")
    return math.exp(-_mean_token_loglik(model.theta, model.phi, words, docs))


def infer_document(model: TopicModel, tokens: Iterable, sweeps: int = 50, seed: int = 0) -> np.ndarray:
    """Topic proportions for an unseen document with ``phi`` held fixed.
    ``tokens`` are words (out-of-vocabulary ones are dropped) or word ids."""
    K = model.K
    alpha = float(model.config.alpha)
    ids = []
    for t in tokens:
        j = model.vocabulary.get(t) if isinstance(t, str) else int(t)
        if j is not None:
            ids.append(j)
    if not ids:
        return np.full(K, 1.0 / K)
    rng = np.random.default_rng(seed)
    z = rng.integers(0, K, size=len(ids))
    n_k = np.bincount(z, minlength=K).astype(np.float64)
    phi_cols = model.phi[:, ids]
    for _ in range(sweeps):
        u = rng.random(len(ids))
        for i in range(len(ids)):
            n_k[z[i]] -= 1
            cum = np.cumsum((n_k + alpha) * phi_cols[:, i])
            k = min(int(np.searchsorted(cum, u[i] * cum[-1], side="right")), K - 1)
            z[i] = k
            n_k[k] += 1
    return (n_k + alpha) / (len(ids) + K * alpha)
