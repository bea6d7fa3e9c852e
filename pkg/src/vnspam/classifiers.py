"""Spam/ham learners over sparse feature vectors, plus a bracket-tag rule.

All learners share one contract: train(kind, vectors, labels, hp) returns a
TrainedModel whose parameters are plain JSON-ready data, and predict(model,
vector) returns a Prediction. Scores are posterior-like in [0, 1] for nb, lr,
dt and knn (threshold 0.5) and a signed margin for svm (threshold 0). Ties on
the threshold always resolve to Legitimate, which keeps the false-positive
side conservative.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from heapq import nsmallest

from .corpus import Label
from .features import FeatureVector

__all__ = [
    "KINDS",
    "Hyperparams",
    "Prediction",
    "TrainedModel",
    "rule_baseline",
    "train",
    "predict",
    "decision_score",
]

KINDS = ("baseline", "nb", "svm", "lr", "dt", "knn")

# Advertising messages in Vietnam open with a bracketed tag: [QC]/(QC) for
# "quang cao" and [TB]/(TB) for "thong bao". The rule fires on a closed
# bracket pair whose content starts with either tag, case-insensitively.
_AD_TAG_RE = re.compile(r"\[(?:qc|tb)[^\]]*\]|\((?:qc|tb)[^)]*\)", re.IGNORECASE)


@dataclass(frozen=True)
class Prediction:
    label: Label
    score: float


@dataclass(frozen=True)
class Hyperparams:
    """Per-kind knobs; irrelevant fields are ignored by each kind."""

    seed: int = 42
    alpha: float = 1.0  # nb additive smoothing
    reg_lambda: float = 1e-4  # svm/lr L2 strength
    epochs: int = 50  # svm/lr passes over the data
    max_depth: int = 20  # dt depth cutoff
    k: int = 5  # knn neighbor count

    def validate(self, kind: str) -> None:
        if kind == "nb" and self.alpha <= 0:
            raise ValueError(f"nb smoothing alpha must be > 0, got {self.alpha}")
        if kind in ("svm", "lr"):
            if self.reg_lambda <= 0:
                raise ValueError(f"lambda must be > 0, got {self.reg_lambda}")
            if self.epochs < 1:
                raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if kind == "dt" and self.max_depth < 1:
            raise ValueError(f"max depth must be >= 1, got {self.max_depth}")
        if kind == "knn" and self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class TrainedModel:
    """A fitted classifier: kind tag plus JSON-ready parameters.

    n_slots counts vocabulary slots plus the length slot when present; the
    vocabulary fingerprint gates prediction so a model is never applied to
    vectors built from a different vocabulary.
    """

    kind: str
    params: dict
    n_slots: int
    has_length: bool
    vocab_fingerprint: str | None


def rule_baseline(raw_text: str) -> Prediction:
    """Untrained rule on raw, original-case text: spam iff an ad tag appears."""
    hit = _AD_TAG_RE.search(raw_text) is not None
    if hit:
        return Prediction(label=Label.SPAM, score=1.0)
    return Prediction(label=Label.LEGITIMATE, score=0.0)


def train(kind, vectors, labels, hp: Hyperparams | None = None) -> TrainedModel:
    """Fit one classifier of the given kind.

    Vectors must all come from the same vocabulary (same fingerprint, same
    dimension, length feature either on everywhere or off everywhere) and both
    classes must be present. The baseline kind has no trainable state and
    accepts empty inputs.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown classifier kind {kind!r} (expected one of {KINDS})")
    hp = hp or Hyperparams()
    hp.validate(kind)
    if kind == "baseline":
        return TrainedModel(
            kind=kind, params={}, n_slots=0, has_length=False, vocab_fingerprint=None
        )

    vectors = list(vectors)
    labels = list(labels)
    if len(vectors) != len(labels):
        raise ValueError(f"{len(vectors)} vectors but {len(labels)} labels")
    if len(vectors) < 2:
        raise ValueError("need at least two training examples")
    fingerprint = vectors[0].vocab_fingerprint
    dim = vectors[0].dim
    has_length = vectors[0].length_feature is not None
    for i, v in enumerate(vectors):
        if v.vocab_fingerprint != fingerprint:
            raise ValueError(f"vector {i} was built from a different vocabulary")
        if v.dim != dim:
            raise ValueError(f"vector {i} has dim {v.dim}, expected {dim}")
        if (v.length_feature is not None) != has_length:
            raise ValueError(f"vector {i} disagrees about the length feature")
    spam_flags = [1 if lab is Label.SPAM else 0 for lab in labels]
    if sum(spam_flags) == 0 or sum(spam_flags) == len(labels):
        raise ValueError("training data must contain both classes")

    n_slots = dim + (1 if has_length else 0)
    if kind == "nb":
        params = _train_nb(vectors, spam_flags, hp.alpha, n_slots)
    elif kind == "svm":
        params = _train_linear(vectors, spam_flags, n_slots, hp, loss="hinge")
    elif kind == "lr":
        params = _train_linear(vectors, spam_flags, n_slots, hp, loss="logistic")
    elif kind == "dt":
        params = _train_dt(vectors, spam_flags, hp.max_depth)
    else:
        params = _train_knn(vectors, spam_flags, hp.k)
    return TrainedModel(
        kind=kind,
        params=params,
        n_slots=n_slots,
        has_length=has_length,
        vocab_fingerprint=fingerprint,
    )


def predict(model: TrainedModel, vector: FeatureVector) -> Prediction:
    """Score a vector and threshold it into a label (ties go Legitimate)."""
    score = decision_score(model, vector)
    threshold = 0.0 if model.kind == "svm" else 0.5
    label = Label.SPAM if score > threshold else Label.LEGITIMATE
    return Prediction(label=label, score=score)


def decision_score(model: TrainedModel, vector: FeatureVector) -> float:
    """Raw score before thresholding (margin for svm, else in [0, 1])."""
    if model.kind == "baseline":
        raise ValueError("the rule baseline scores raw text, use rule_baseline()")
    if model.kind not in KINDS:
        raise ValueError(f"unknown classifier kind {model.kind!r}")
    if vector.vocab_fingerprint != model.vocab_fingerprint:
        raise ValueError(
            "vector was built from a different vocabulary than the model "
            f"(fingerprint {vector.vocab_fingerprint!r} != {model.vocab_fingerprint!r})"
        )
    if (vector.length_feature is not None) != model.has_length:
        raise ValueError("vector disagrees with the model about the length feature")
    if vector.n_slots != model.n_slots:
        raise ValueError(f"vector has {vector.n_slots} slots, model expects {model.n_slots}")
    if model.kind == "nb":
        return _score_nb(model.params, vector)
    if model.kind == "svm":
        return _margin(model.params, vector)
    if model.kind == "lr":
        return _sigmoid(_margin(model.params, vector))
    if model.kind == "dt":
        return _score_dt(model.params, vector)
    return _score_knn(model.params, vector)


def _sigmoid(a: float) -> float:
    if a >= 0:
        return 1.0 / (1.0 + math.exp(-a))
    ea = math.exp(a)
    return ea / (1.0 + ea)


# -- multinomial naive Bayes -------------------------------------------------


def _train_nb(vectors, spam_flags, alpha: float, n_slots: int) -> dict:
    counts = {1: [0.0] * n_slots, 0: [0.0] * n_slots}
    docs = {1: 0, 0: 0}
    for vec, flag in zip(vectors, spam_flags):
        docs[flag] += 1
        row = counts[flag]
        for idx, val in vec.slot_items():
            row[idx] += val
    total_docs = docs[1] + docs[0]
    log_prior = {}
    log_likelihood = {}
    for flag, key in ((1, "spam"), (0, "ham")):
        log_prior[key] = math.log(docs[flag] / total_docs)
        total = sum(counts[flag])
        denom = total + alpha * n_slots
        log_likelihood[key] = [math.log((c + alpha) / denom) for c in counts[flag]]
    return {
        "alpha": alpha,
        "log_prior": log_prior,
        "log_likelihood": log_likelihood,
    }


def _score_nb(params: dict, vector: FeatureVector) -> float:
    ls = params["log_prior"]["spam"]
    ll = params["log_prior"]["ham"]
    like_s = params["log_likelihood"]["spam"]
    like_h = params["log_likelihood"]["ham"]
    for idx, val in vector.slot_items():
        ls += val * like_s[idx]
        ll += val * like_h[idx]
    return _sigmoid(ls - ll)  # posterior spam probability


# -- linear models (svm hinge / logistic regression) --------------------------


def _train_linear(vectors, spam_flags, n_slots: int, hp: Hyperparams, loss: str) -> dict:
    """Deterministic subgradient descent on the L2-regularized loss with the
    1/(lambda*(t0+t)) step schedule.

    t0 is the usual offset heuristic (first step sized for a weight vector of
    typical norm), without which the opening steps of the bare 1/(lambda*t)
    schedule are enormous and the unregularized bias never recovers from
    them. The weight vector is kept as scale * v so the per-step L2 shrink
    touches one float instead of every slot.
    """
    lam = hp.reg_lambda
    rows = [vec.slot_items() for vec in vectors]
    ys = [1.0 if f else -1.0 for f in spam_flags]
    typical_w = math.sqrt(1.0 / math.sqrt(lam))
    dloss0 = 1.0 if loss == "hinge" else _sigmoid(typical_w)
    t0 = 1.0 / (lam * (typical_w / max(1.0, dloss0)))
    v = [0.0] * n_slots
    scale = 1.0
    bias = 0.0
    t = 0
    rng = random.Random(hp.seed)
    order = list(range(len(rows)))
    for _ in range(hp.epochs):
        rng.shuffle(order)
        for r in order:
            t += 1
            eta = 1.0 / (lam * (t0 + t))
            items = rows[r]
            y = ys[r]
            z = y * (scale * sum(v[i] * x for i, x in items) + bias)
            scale *= 1.0 - eta * lam
            if loss == "hinge":
                g = 1.0 if z < 1.0 else 0.0
            else:
                g = _sigmoid(-z)
            if g != 0.0:
                coef = eta * y * g / scale
                for i, x in items:
                    v[i] += coef * x
                bias += eta * y * g
    return {"weights": [scale * w for w in v], "bias": bias}


def _margin(params: dict, vector: FeatureVector) -> float:
    w = params["weights"]
    return sum(w[i] * x for i, x in vector.slot_items()) + params["bias"]


# -- CART decision tree --------------------------------------------------------


def _train_dt(vectors, spam_flags, max_depth: int) -> dict:
    """Gini-impurity CART on sparse rows, thresholds at midpoints of the
    sorted unique values seen for a feature (absent means zero).

    Gain ties resolve to the lowest feature index, then the lowest threshold.
    A node stops at purity, max_depth, fewer than two samples, or when no
    split improves the impurity. Gain comparisons are done in exact integer
    arithmetic (maximizing the gain is maximizing ((sl^2+hl^2)*nr +
    (sr^2+hr^2)*nl) / (nl*nr), with (s^2+h^2)/n as the no-split baseline),
    so the strict-improvement rule never hinges on float rounding.
    """
    rows = [dict(vec.slot_items()) for vec in vectors]
    nodes: list[dict] = []

    def leaf(idxs) -> int:
        n = len(idxs)
        s = sum(spam_flags[i] for i in idxs)
        nodes.append({"spam_fraction": s / n, "samples": n})
        return len(nodes) - 1

    def build(idxs, depth: int) -> int:
        n = len(idxs)
        s = sum(spam_flags[i] for i in idxs)
        if s == 0 or s == n or depth >= max_depth or n < 2:
            return leaf(idxs)

        by_feature: dict[int, list[tuple[float, int]]] = {}
        for i in idxs:
            for f, val in rows[i].items():
                by_feature.setdefault(f, []).append((val, spam_flags[i]))
        best_num = s * s + (n - s) * (n - s)
        best_den = n
        best: tuple[int, float] | None = None
        for f in sorted(by_feature):
            entries = by_feature[f]
            zero_n = n - len(entries)
            zero_s = s - sum(sp for _, sp in entries)
            buckets: dict[float, list[int]] = {}
            for val, sp in entries:
                agg = buckets.setdefault(val, [0, 0])
                agg[0] += 1
                agg[1] += sp
            if zero_n:
                buckets[0.0] = [zero_n, zero_s]
            if len(buckets) < 2:
                continue
            values = sorted(buckets)
            left_n = 0
            left_s = 0
            for j in range(len(values) - 1):
                cnt, sp = buckets[values[j]]
                left_n += cnt
                left_s += sp
                right_n = n - left_n
                right_s = s - left_s
                lh = left_n - left_s
                rh = right_n - right_s
                num = (left_s * left_s + lh * lh) * right_n + (
                    right_s * right_s + rh * rh
                ) * left_n
                den = left_n * right_n
                if num * best_den > best_num * den:
                    best_num, best_den = num, den
                    best = (f, (values[j] + values[j + 1]) / 2.0)
        if best is None:
            return leaf(idxs)
        f, thr = best
        left_idx = [i for i in idxs if rows[i].get(f, 0.0) <= thr]
        right_idx = [i for i in idxs if rows[i].get(f, 0.0) > thr]
        left = build(left_idx, depth + 1)
        right = build(right_idx, depth + 1)
        nodes.append({"feature": f, "threshold": thr, "left": left, "right": right})
        return len(nodes) - 1

    root = build(list(range(len(rows))), 0)
    return {"nodes": nodes, "root": root}


def _score_dt(params: dict, vector: FeatureVector) -> float:
    nodes = params["nodes"]
    values = dict(vector.slot_items())
    node = nodes[params["root"]]
    while "feature" in node:
        if values.get(node["feature"], 0.0) <= node["threshold"]:
            node = nodes[node["left"]]
        else:
            node = nodes[node["right"]]
    return node["spam_fraction"]


# -- k nearest neighbors -------------------------------------------------------


def _train_knn(vectors, spam_flags, k: int) -> dict:
    rows = [[[i, v] for i, v in vec.slot_items()] for vec in vectors]
    norms = [math.sqrt(sum(v * v for _, v in row)) for row in rows]
    return {
        "k": k,
        "rows": rows,
        "norms": norms,
        "labels": ["spam" if f else "ham" for f in spam_flags],
    }


def _knn_neighbors(params: dict, vector: FeatureVector) -> list[int]:
    """Indices of the k nearest training rows by cosine distance.

    Distance ties resolve to the lower training index. A zero-norm side makes
    the similarity zero, i.e. maximal distance.
    """
    q = dict(vector.slot_items())
    qn = math.sqrt(sum(v * v for v in q.values()))
    k = min(params["k"], len(params["rows"]))
    scored = []
    for idx, (row, rn) in enumerate(zip(params["rows"], params["norms"])):
        if qn == 0.0 or rn == 0.0:
            sim = 0.0
        else:
            sim = sum(v * q.get(i, 0.0) for i, v in row) / (qn * rn)
        scored.append((1.0 - sim, idx))
    return [idx for _, idx in nsmallest(k, scored)]


def _score_knn(params: dict, vector: FeatureVector) -> float:
    neighbors = _knn_neighbors(params, vector)
    labels = params["labels"]
    spam_votes = sum(1 for i in neighbors if labels[i] == "spam")
    return spam_votes / len(neighbors)
