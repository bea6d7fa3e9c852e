"""Confusion rates and the stratified k-fold evaluation harness."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import Corpus, FoldAssignment, Label
from .pipeline import FittedPipeline, PipelineConfig
from .preprocess import EntityRuleSet

__all__ = [
    "ConfusionCounts",
    "Rates",
    "FoldOutcome",
    "EvalReport",
    "rates",
    "confusion",
    "cross_validate",
    "evaluate_baseline",
    "run_grid",
    "reference_grid",
    "format_table",
    "write_csv",
]


@dataclass(frozen=True)
class ConfusionCounts:
    """Gold class sizes plus the two error counts of a binary run."""

    spam_total: int
    legit_total: int
    spam_as_legit: int  # missed spam
    legit_as_spam: int  # false alarms

    def __post_init__(self):
        if self.spam_total < 0 or self.legit_total < 0:
            raise ValueError("class totals must be non-negative")
        if not 0 <= self.spam_as_legit <= self.spam_total:
            raise ValueError(
                f"spam_as_legit={self.spam_as_legit} out of range for "
                f"spam_total={self.spam_total}"
            )
        if not 0 <= self.legit_as_spam <= self.legit_total:
            raise ValueError(
                f"legit_as_spam={self.legit_as_spam} out of range for "
                f"legit_total={self.legit_total}"
            )

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.spam_total + other.spam_total,
            self.legit_total + other.legit_total,
            self.spam_as_legit + other.spam_as_legit,
            self.legit_as_spam + other.legit_as_spam,
        )


@dataclass(frozen=True)
class Rates:
    tpr: float
    tnr: float
    fpr: float
    fnr: float


def rates(counts: ConfusionCounts) -> Rates:
    """Error rates: fpr over legitimate messages, fnr over spam.

    Both classes must be non-empty; an empty class is an error, never a NaN.
    """
    if counts.spam_total < 1:
        raise ValueError("rates are undefined without spam messages")
    if counts.legit_total < 1:
        raise ValueError("rates are undefined without legitimate messages")
    fpr = counts.legit_as_spam / counts.legit_total
    fnr = counts.spam_as_legit / counts.spam_total
    return Rates(tpr=1.0 - fnr, tnr=1.0 - fpr, fpr=fpr, fnr=fnr)


def confusion(gold_labels, predicted_labels) -> ConfusionCounts:
    gold = list(gold_labels)
    predicted = list(predicted_labels)
    if len(gold) != len(predicted):
        raise ValueError(f"{len(gold)} gold labels but {len(predicted)} predictions")
    spam_total = legit_total = spam_as_legit = legit_as_spam = 0
    for g, p in zip(gold, predicted):
        if g is Label.SPAM:
            spam_total += 1
            if p is Label.LEGITIMATE:
                spam_as_legit += 1
        else:
            legit_total += 1
            if p is Label.SPAM:
                legit_as_spam += 1
    return ConfusionCounts(spam_total, legit_total, spam_as_legit, legit_as_spam)


@dataclass(frozen=True)
class FoldOutcome:
    fold: str  # "0".."k-1", or "all" for a whole-corpus run
    counts: ConfusionCounts
    rates: Rates


@dataclass(frozen=True)
class EvalReport:
    """Per-fold outcomes plus their macro average and the pooled counts."""

    config_name: str
    per_fold: tuple[FoldOutcome, ...]
    averaged: Rates
    pooled_counts: ConfusionCounts
    pooled: Rates


def _average(outcomes) -> Rates:
    n = len(outcomes)
    return Rates(
        tpr=sum(o.rates.tpr for o in outcomes) / n,
        tnr=sum(o.rates.tnr for o in outcomes) / n,
        fpr=sum(o.rates.fpr for o in outcomes) / n,
        fnr=sum(o.rates.fnr for o in outcomes) / n,
    )


def _report(config_name: str, outcomes: list[FoldOutcome]) -> EvalReport:
    pooled_counts = outcomes[0].counts
    for o in outcomes[1:]:
        pooled_counts = pooled_counts + o.counts
    return EvalReport(
        config_name=config_name,
        per_fold=tuple(outcomes),
        averaged=_average(outcomes),
        pooled_counts=pooled_counts,
        pooled=rates(pooled_counts),
    )


def cross_validate(
    corpus: Corpus,
    folds: FoldAssignment,
    config: PipelineConfig | None = None,
    rules: EntityRuleSet | None = None,
) -> EvalReport:
    """Fit on k-1 folds and score the held-out fold, for every fold.

    All fitted state (collocations, vocabulary, classifier) comes from the
    training folds only. Every held-out fold must contain both classes so its
    rates are defined.
    """
    config = config or PipelineConfig()
    config.validate()
    ids = {m.id for m in corpus.messages}
    if set(folds.fold_of) != ids:
        raise ValueError("fold assignment does not cover exactly this corpus")
    if folds.k < 2:
        raise ValueError("need at least two folds")

    outcomes = []
    for f in range(folds.k):
        test = [m for m in corpus.messages if folds.fold_of[m.id] == f]
        training = [m for m in corpus.messages if folds.fold_of[m.id] != f]
        gold = [m.label for m in test]
        if Label.SPAM not in gold or Label.LEGITIMATE not in gold:
            raise ValueError(f"fold {f} does not contain both classes")
        fitted = FittedPipeline.fit(training, config, rules)
        predicted = [fitted.predict_text(m.text).label for m in test]
        counts = confusion(gold, predicted)
        outcomes.append(FoldOutcome(fold=str(f), counts=counts, rates=rates(counts)))
    return _report(config.name, outcomes)


def evaluate_baseline(corpus: Corpus, config: PipelineConfig | None = None) -> EvalReport:
    """Score the untrained rule on the whole corpus (it has nothing to fit)."""
    config = config or PipelineConfig(classifier="baseline")
    if config.classifier != "baseline":
        raise ValueError("evaluate_baseline only handles the baseline classifier")
    fitted = FittedPipeline.fit(corpus.messages, config)
    gold = [m.label for m in corpus.messages]
    if Label.SPAM not in gold or Label.LEGITIMATE not in gold:
        raise ValueError("corpus does not contain both classes")
    predicted = [fitted.predict_text(m.text).label for m in corpus.messages]
    counts = confusion(gold, predicted)
    outcome = FoldOutcome(fold="all", counts=counts, rates=rates(counts))
    return _report(config.name, [outcome])


def _evaluate_one(args) -> EvalReport:
    corpus, folds, config, rules = args
    if config.classifier == "baseline":
        return evaluate_baseline(corpus, config)
    return cross_validate(corpus, folds, config, rules)


def run_grid(
    corpus: Corpus,
    folds: FoldAssignment,
    configs,
    rules: EntityRuleSet | None = None,
    jobs: int = 1,
) -> list[EvalReport]:
    """Evaluate each configuration; baseline entries run whole-corpus.

    With jobs > 1 the configurations run in a process pool; results keep the
    grid order either way.
    """
    configs = list(configs)
    tasks = [(corpus, folds, cfg, rules) for cfg in configs]
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    if jobs == 1 or len(tasks) <= 1:
        return [_evaluate_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_evaluate_one, tasks))


def reference_grid(base: PipelineConfig | None = None) -> list[PipelineConfig]:
    """The built-in comparison grid.

    One entry per question: the rule baseline, preprocessing off vs on, bag
    of words vs tf-idf, each of the five classifiers, and the final tuned
    configuration (document-frequency cutoff plus length feature).
    """
    base = base or PipelineConfig()
    plain = replace(
        base, representation="bow", preprocess=True, min_df=1, length_feature=False
    )
    return [
        replace(plain, classifier="baseline"),
        replace(plain, classifier="svm", preprocess=False),
        replace(plain, classifier="svm"),
        replace(plain, classifier="svm", representation="tfidf"),
        replace(plain, classifier="nb"),
        replace(plain, classifier="lr"),
        replace(plain, classifier="dt"),
        replace(plain, classifier="knn"),
        replace(plain, classifier="svm", min_df=3, length_feature=True),
    ]


def format_table(reports) -> str:
    """Aligned text table of fold-averaged rates, in percent."""
    reports = list(reports)
    if not reports:
        return "(no configurations)\n"
    header = ("config", "tpr", "tnr", "fpr", "fnr", "folds")
    rows = [header]
    for r in reports:
        rows.append(
            (
                r.config_name,
                f"{100 * r.averaged.tpr:.2f}%",
                f"{100 * r.averaged.tnr:.2f}%",
                f"{100 * r.averaged.fpr:.2f}%",
                f"{100 * r.averaged.fnr:.2f}%",
                str(len(r.per_fold)),
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for row in rows:
        cells = [row[0].ljust(widths[0])]
        cells += [row[i].rjust(widths[i]) for i in range(1, len(header))]
        lines.append("  ".join(cells).rstrip())
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_csv(reports, path: str | Path) -> None:
    """Machine-readable rates: one row per fold plus one averaged row each."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["config", "fold", "tpr", "tnr", "fpr", "fnr"])
        for r in reports:
            for o in r.per_fold:
                writer.writerow(
                    [r.config_name, o.fold]
                    + [repr(x) for x in (o.rates.tpr, o.rates.tnr, o.rates.fpr, o.rates.fnr)]
                )
            writer.writerow(
                [r.config_name, "avg"]
                + [
                    repr(x)
                    for x in (
                        r.averaged.tpr,
                        r.averaged.tnr,
                        r.averaged.fpr,
                        r.averaged.fnr,
                    )
                ]
            )
