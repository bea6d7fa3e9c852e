"""End-to-end composition (normalize, featurize, classify) and the model file.

A FittedPipeline bundles everything prediction needs: the entity rules, the
collocation models (one per segmentation pass), the vocabulary and the trained
classifier. Model files are versioned JSON with sorted keys and a fixed float
format, so the same fit always produces byte-identical bytes and files can be
diffed.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import unicodedata
from dataclasses import dataclass, fields
from pathlib import Path

from .classifiers import (
    KINDS,
    Hyperparams,
    Prediction,
    TrainedModel,
    predict,
    rule_baseline,
    train,
)
from .features import (
    FeatureVector,
    Vocabulary,
    append_length,
    build_vocabulary,
    vectorize_bow,
    vectorize_tfidf,
)
from .preprocess import (
    CollocationModel,
    EntityRule,
    EntityRuleSet,
    fit_collocations,
    segment,
    tag_entities,
)

__all__ = [
    "MODEL_FORMAT_VERSION",
    "REPRESENTATIONS",
    "ModelFileError",
    "PipelineConfig",
    "FitStats",
    "FittedPipeline",
]

MODEL_FORMAT_VERSION = 1
REPRESENTATIONS = ("bow", "tfidf")


class ModelFileError(ValueError):
    """Unreadable, unparseable, or wrongly versioned model file."""


@dataclass(frozen=True)
class PipelineConfig:
    """Everything that determines a fit, so runs are reproducible.

    The defaults are the shipped configuration: preprocessing on, bag of
    words, linear svm, document-frequency cutoff 3, length feature on.
    """

    classifier: str = "svm"
    representation: str = "bow"
    preprocess: bool = True
    min_df: int = 3
    length_feature: bool = True
    seed: int = 42
    discount: float = 5.0
    colloc_threshold: float = 1e-4
    min_count: int = 10
    passes: int = 1
    nfc: bool = False
    alpha: float = 1.0
    reg_lambda: float = 1e-4
    epochs: int = 50
    max_depth: int = 20
    k: int = 5

    def validate(self) -> None:
        if self.classifier not in KINDS:
            raise ValueError(
                f"unknown classifier {self.classifier!r} (expected one of {KINDS})"
            )
        if self.representation not in REPRESENTATIONS:
            raise ValueError(
                f"unknown representation {self.representation!r} "
                f"(expected one of {REPRESENTATIONS})"
            )
        if self.min_df < 1:
            raise ValueError(f"min-df must be >= 1, got {self.min_df}")
        if self.passes < 1:
            raise ValueError(f"passes must be >= 1, got {self.passes}")
        if self.discount < 0:
            raise ValueError(f"discount must be >= 0, got {self.discount}")
        if self.colloc_threshold <= 0:
            raise ValueError(f"collocation threshold must be > 0, got {self.colloc_threshold}")
        if self.min_count < 1:
            raise ValueError(f"min-count must be >= 1, got {self.min_count}")
        self.hyperparams().validate(self.classifier)

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(
            seed=self.seed,
            alpha=self.alpha,
            reg_lambda=self.reg_lambda,
            epochs=self.epochs,
            max_depth=self.max_depth,
            k=self.k,
        )

    @property
    def name(self) -> str:
        """Short deterministic tag for tables and CSV rows."""
        if self.classifier == "baseline":
            return "baseline"
        parts = [self.classifier, self.representation]
        if not self.preprocess:
            parts.append("raw")
        if self.min_df != 1:
            parts.append(f"df{self.min_df}")
        if self.length_feature:
            parts.append("len")
        return "-".join(parts)


@dataclass(frozen=True)
class FitStats:
    """Vocabulary sizes along the pipeline, for training summaries."""

    messages: int
    raw_terms: int
    preprocessed_terms: int
    selected_terms: int


class FittedPipeline:
    """A trained spam filter ready to score raw message text."""

    def __init__(
        self,
        config: PipelineConfig,
        rules: EntityRuleSet,
        collocations: list[CollocationModel],
        vocab: Vocabulary | None,
        model: TrainedModel,
        stats: FitStats,
    ):
        self.config = config
        self.rules = rules
        self.collocations = list(collocations)
        self.vocab = vocab
        self.model = model
        self.stats = stats

    # -- fitting ---------------------------------------------------------

    @classmethod
    def fit(
        cls,
        messages,
        config: PipelineConfig | None = None,
        rules: EntityRuleSet | None = None,
    ) -> "FittedPipeline":
        config = config or PipelineConfig()
        config.validate()
        rules = rules or EntityRuleSet.default()
        messages = list(messages)
        if not messages:
            raise ValueError("cannot fit a pipeline on an empty corpus")
        texts = [m.text for m in messages]
        if config.nfc:
            texts = [unicodedata.normalize("NFC", t) for t in texts]

        if config.classifier == "baseline":
            model = train("baseline", [], [], config.hyperparams())
            stats = FitStats(len(texts), 0, 0, 0)
            return cls(config, rules, [], None, model, stats)

        labels = [m.label for m in messages]
        if any(lab is None for lab in labels):
            raise ValueError("cannot train on unlabeled messages")

        raw_terms = len({tok for t in texts for tok in t.split()})
        collocations: list[CollocationModel] = []
        if config.preprocess:
            streams = [tag_entities(t, rules).split() for t in texts]
            for _ in range(config.passes):
                cm = fit_collocations(
                    streams,
                    discount=config.discount,
                    min_count=config.min_count,
                    threshold=config.colloc_threshold,
                )
                collocations.append(cm)
                streams = [segment(s, cm) for s in streams]
        else:
            streams = [t.split() for t in texts]
        preprocessed_terms = len({tok for s in streams for tok in s})

        vocab = build_vocabulary(streams, min_df=config.min_df)
        vectorize = vectorize_bow if config.representation == "bow" else vectorize_tfidf
        vectors = [vectorize(s, vocab) for s in streams]
        if config.length_feature:
            vectors = [append_length(v, t) for v, t in zip(vectors, texts)]
        model = train(config.classifier, vectors, labels, config.hyperparams())
        stats = FitStats(len(texts), raw_terms, preprocessed_terms, len(vocab))
        return cls(config, rules, collocations, vocab, model, stats)

    # -- prediction ------------------------------------------------------

    def tokens(self, text: str) -> list[str]:
        """Token stream for one message under this pipeline's settings."""
        if self.config.nfc:
            text = unicodedata.normalize("NFC", text)
        if not self.config.preprocess:
            return text.split()
        stream = tag_entities(text, self.rules).split()
        for cm in self.collocations:
            stream = segment(stream, cm)
        return stream

    def vector(self, text: str) -> FeatureVector:
        if self.vocab is None:
            raise ValueError("the rule baseline has no feature space")
        if self.config.nfc:
            text = unicodedata.normalize("NFC", text)
        stream = self.tokens(text)
        vectorize = vectorize_bow if self.config.representation == "bow" else vectorize_tfidf
        vec = vectorize(stream, self.vocab)
        if self.config.length_feature:
            vec = append_length(vec, text)
        return vec

    def predict_text(self, text: str) -> Prediction:
        if self.config.nfc:
            text = unicodedata.normalize("NFC", text)
        if self.config.classifier == "baseline":
            return rule_baseline(text)
        return predict(self.model, self.vector(text))

    # -- persistence -----------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Write the versioned model file atomically (temp file + rename)."""
        doc = self._to_doc()
        payload = _dumps(doc) + "\n"
        p = Path(path)
        fd, tmp = tempfile.mkstemp(dir=str(p.parent) or ".", prefix=p.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(payload)
            os.replace(tmp, p)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, path: str | Path) -> "FittedPipeline":
        p = Path(path)
        try:
            raw = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ModelFileError(f"cannot read model file {p}: {exc}") from exc
        except UnicodeDecodeError as exc:
            raise ModelFileError(f"model file {p} is not valid UTF-8: {exc}") from exc
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ModelFileError(f"model file {p} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ModelFileError(f"model file {p} must hold a JSON object")
        version = doc.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ModelFileError(
                f"model file {p} has format version {version!r}; "
                f"this build reads version {MODEL_FORMAT_VERSION}"
            )
        try:
            return cls._from_doc(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFileError(f"model file {p} is malformed: {exc}") from exc

    def _to_doc(self) -> dict:
        cfg = {f.name: getattr(self.config, f.name) for f in fields(self.config)}
        rules_rows = [[r.group, r.pattern] for r in self.rules]
        colloc_docs = []
        for cm in self.collocations:
            pairs = sorted(cm.bigram_counts)
            used = sorted({tok for pair in pairs for tok in pair})
            colloc_docs.append(
                {
                    "discount": cm.discount,
                    "min_count": cm.min_count,
                    "threshold": cm.threshold,
                    "unigram_counts": {tok: cm.unigram_counts[tok] for tok in used},
                    "bigram_counts": [[a, b, cm.bigram_counts[(a, b)]] for a, b in pairs],
                }
            )
        vocab_doc = None
        if self.vocab is not None:
            vocab_doc = {
                "terms": list(self.vocab.terms),
                "doc_freq": dict(self.vocab.doc_freq),
                "num_docs": self.vocab.num_docs,
            }
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "config": cfg,
            "entity_rules": rules_rows,
            "collocations": colloc_docs,
            "vocabulary": vocab_doc,
            "model": {
                "kind": self.model.kind,
                "n_slots": self.model.n_slots,
                "has_length": self.model.has_length,
                "vocab_fingerprint": self.model.vocab_fingerprint,
                "params": self.model.params,
            },
            "stats": {
                "messages": self.stats.messages,
                "raw_terms": self.stats.raw_terms,
                "preprocessed_terms": self.stats.preprocessed_terms,
                "selected_terms": self.stats.selected_terms,
            },
        }

    @classmethod
    def _from_doc(cls, doc: dict) -> "FittedPipeline":
        config = PipelineConfig(**doc["config"])
        config.validate()
        rules = EntityRuleSet(
            EntityRule(group=g, pattern=p) for g, p in doc["entity_rules"]
        )
        collocations = []
        for cd in doc["collocations"]:
            collocations.append(
                CollocationModel(
                    discount=cd["discount"],
                    min_count=cd["min_count"],
                    threshold=cd["threshold"],
                    unigram_counts=dict(cd["unigram_counts"]),
                    bigram_counts={(a, b): c for a, b, c in cd["bigram_counts"]},
                )
            )
        vocab = None
        if doc["vocabulary"] is not None:
            vd = doc["vocabulary"]
            vocab = Vocabulary(vd["terms"], vd["doc_freq"], vd["num_docs"])
        md = doc["model"]
        model = TrainedModel(
            kind=md["kind"],
            params=md["params"],
            n_slots=md["n_slots"],
            has_length=md["has_length"],
            vocab_fingerprint=md["vocab_fingerprint"],
        )
        sd = doc["stats"]
        stats = FitStats(
            sd["messages"], sd["raw_terms"], sd["preprocessed_terms"], sd["selected_terms"]
        )
        if model.kind != "baseline":
            if vocab is None:
                raise ValueError("trained model without a vocabulary")
            if model.vocab_fingerprint != vocab.fingerprint:
                raise ValueError("vocabulary does not match the model fingerprint")
        return cls(config, rules, collocations, vocab, model, stats)


# -- canonical JSON -----------------------------------------------------------


def _dumps(value) -> str:
    """Serialize with sorted keys and 17-significant-digit floats.

    Parsing the output and serializing again reproduces the exact bytes,
    which is what makes model files byte-stable across save/load cycles.
    """
    out: list[str] = []
    _emit(value, out, 0)
    return "".join(out)


def _emit(value, out: list[str], depth: int) -> None:
    pad = " " * depth
    if value is None:
        out.append("null")
    elif value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(_format_float(value))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(value)
        for i, key in enumerate(keys):
            if not isinstance(key, str):
                raise ModelFileError(f"non-string key {key!r} in model document")
            out.append(pad + " " + json.dumps(key, ensure_ascii=False) + ": ")
            _emit(value[key], out, depth + 1)
            out.append(",\n" if i < len(keys) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(value, (list, tuple)):
        if not value:
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(value):
            out.append(pad + " ")
            _emit(item, out, depth + 1)
            out.append(",\n" if i < len(value) - 1 else "\n")
        out.append(pad + "]")
    else:
        raise ModelFileError(f"cannot serialize {type(value).__name__} in model document")


def _format_float(f: float) -> str:
    if math.isnan(f) or math.isinf(f):
        raise ModelFileError("non-finite float in model document")
    if f == 0.0:
        return "0"
    return format(f, ".17g")
