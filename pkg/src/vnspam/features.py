"""Sparse message featurization: vocabulary, counts, tf-idf, length."""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass

__all__ = [
    "SMS_CAPACITY",
    "Vocabulary",
    "FeatureVector",
    "build_vocabulary",
    "vectorize_bow",
    "vectorize_tfidf",
    "append_length",
]

# Characters in a single-part SMS; used to normalize the message-length feature.
SMS_CAPACITY = 160


class Vocabulary:
    """Term list with document frequencies, fixed at fit time.

    Terms keep their first-occurrence order over the fitting corpus. The
    fingerprint identifies the exact term/df/num_docs triple so vectors can be
    checked against the model they are fed to.
    """

    def __init__(self, terms, doc_freq: dict[str, int], num_docs: int):
        self.terms = tuple(terms)
        self.doc_freq = dict(doc_freq)
        self.num_docs = num_docs
        if num_docs < 1:
            raise ValueError("vocabulary needs at least one fitting document")
        for t in self.terms:
            df = self.doc_freq.get(t)
            if df is None or not 1 <= df <= num_docs:
                raise ValueError(f"term {t!r} has document frequency {df!r}")
        if len(self.doc_freq) != len(self.terms):
            raise ValueError("doc_freq keys must match terms exactly")
        self.index = {t: i for i, t in enumerate(self.terms)}
        if len(self.index) != len(self.terms):
            raise ValueError("duplicate terms in vocabulary")
        payload = "\x1e".join(
            [str(num_docs)] + [f"{len(t)}:{t}:{self.doc_freq[t]}" for t in self.terms]
        )
        self.fingerprint = hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index


@dataclass(frozen=True)
class FeatureVector:
    """Sparse vector over vocabulary slots, plus an optional dense length slot.

    weights holds only nonzero entries, keyed by vocabulary index. The length
    feature, when present, logically occupies one extra slot at index dim.
    """

    weights: dict[int, float]
    dim: int
    length_feature: float | None = None
    vocab_fingerprint: str | None = None

    def __post_init__(self):
        for idx, w in self.weights.items():
            if not 0 <= idx < self.dim:
                raise ValueError(f"feature index {idx} out of range for dim {self.dim}")
            if w == 0:
                raise ValueError(f"zero weight stored at index {idx}")

    @property
    def n_slots(self) -> int:
        return self.dim + (1 if self.length_feature is not None else 0)

    def slot_items(self) -> list[tuple[int, float]]:
        """(index, value) pairs in index order, length slot last."""
        items = sorted(self.weights.items())
        if self.length_feature is not None and self.length_feature != 0:
            items.append((self.dim, self.length_feature))
        return items


def build_vocabulary(docs, min_df: int = 1) -> Vocabulary:
    """Collect terms with document frequency >= min_df, in first-seen order."""
    docs = list(docs)
    if not docs:
        raise ValueError("cannot build a vocabulary from an empty document list")
    if min_df < 1:
        raise ValueError(f"min_df must be >= 1, got {min_df}")
    doc_freq: dict[str, int] = {}
    for doc in docs:
        for tok in dict.fromkeys(doc):
            doc_freq[tok] = doc_freq.get(tok, 0) + 1
    terms = [t for t in doc_freq if doc_freq[t] >= min_df]
    return Vocabulary(
        terms, {t: doc_freq[t] for t in terms}, num_docs=len(docs)
    )


def vectorize_bow(doc, vocab: Vocabulary) -> FeatureVector:
    """Raw term counts. Out-of-vocabulary tokens are dropped."""
    counts = Counter(tok for tok in doc if tok in vocab.index)
    weights = {vocab.index[t]: c for t, c in counts.items()}
    return FeatureVector(
        weights=weights, dim=len(vocab), vocab_fingerprint=vocab.fingerprint
    )


def vectorize_tfidf(doc, vocab: Vocabulary) -> FeatureVector:
    """Term count scaled by ln(num_docs / doc_freq), natural log, no smoothing.

    Terms present in every fitting document get weight zero and are omitted.
    """
    counts = Counter(tok for tok in doc if tok in vocab.index)
    weights = {}
    for t, c in counts.items():
        if vocab.doc_freq[t] == vocab.num_docs:
            continue
        weights[vocab.index[t]] = c * math.log(vocab.num_docs / vocab.doc_freq[t])
    return FeatureVector(
        weights=weights, dim=len(vocab), vocab_fingerprint=vocab.fingerprint
    )


def append_length(vector: FeatureVector, raw_text: str) -> FeatureVector:
    """Return a copy with the message length, in SMS capacities, as one extra slot."""
    return FeatureVector(
        weights=dict(vector.weights),
        dim=vector.dim,
        length_feature=len(raw_text) / SMS_CAPACITY,
        vocab_fingerprint=vector.vocab_fingerprint,
    )
