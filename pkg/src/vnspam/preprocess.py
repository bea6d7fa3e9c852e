"""SMS text normalization: entity tagging and collocation word segmentation.

Raw SMS text is noisy. Dates, phone numbers, links, currency amounts,
emoticons and bare numbers are near-unique strings that fragment the
vocabulary, so each family is folded into one reserved token such as
``<phone>``. Vietnamese also writes every syllable separately; multi-syllable
words are recovered by scoring adjacent syllable pairs over the whole corpus
and greedily joining strong pairs with ``_``.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

__all__ = [
    "ENTITY_GROUPS",
    "EntityRule",
    "EntityRuleSet",
    "CollocationModel",
    "tag_entities",
    "collocation_score",
    "fit_collocations",
    "segment",
    "preprocess",
]

ENTITY_GROUPS = ("link", "emoticon", "date", "phone", "currency", "number")

# Internal placeholder wrapping: \x00group\x00. NUL cannot appear in rule
# patterns, so later rules can never tear a placeholder apart.
_MARK = "\x00"
_MARK_RE = re.compile("\x00(%s)\x00" % "|".join(ENTITY_GROUPS))

# Literal reserved tokens already present in the input (for instance in the
# output of a previous tag_entities call) pass through unchanged. This is what
# makes tagging idempotent; any other angle bracket is plain punctuation.
_RESERVED_RE = re.compile("<(%s)>" % "|".join(ENTITY_GROUPS), re.IGNORECASE)

_APOSTROPHES = "'’"


@dataclass(frozen=True)
class EntityRule:
    group: str
    pattern: str

    def __post_init__(self):
        if self.group not in ENTITY_GROUPS:
            raise ValueError(
                f"unknown entity group {self.group!r} (expected one of {ENTITY_GROUPS})"
            )
        try:
            regex = re.compile(self.pattern, re.IGNORECASE)
        except re.error as exc:
            raise ValueError(f"bad pattern for group {self.group!r}: {exc}") from exc
        object.__setattr__(self, "_regex", regex)

    @property
    def regex(self) -> re.Pattern:
        return self._regex

    @property
    def token(self) -> str:
        return f"<{self.group}>"


class EntityRuleSet:
    """Ordered entity rules; order is the tagging priority."""

    def __init__(self, rules):
        self.rules = tuple(rules)

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    @classmethod
    def from_lines(cls, lines, source: str = "<rules>") -> "EntityRuleSet":
        """Parse ``group<TAB>pattern`` lines. Blank and ``#`` lines are skipped."""
        rules = []
        for lineno, line in enumerate(lines, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            group, sep, pattern = line.partition("\t")
            if not sep or not pattern:
                raise ValueError(f"{source}:{lineno}: expected 'group<TAB>pattern'")
            try:
                rules.append(EntityRule(group=group.strip(), pattern=pattern))
            except ValueError as exc:
                raise ValueError(f"{source}:{lineno}: {exc}") from exc
        return cls(rules)

    @classmethod
    def from_file(cls, path: str | Path) -> "EntityRuleSet":
        p = Path(path)
        return cls.from_lines(p.read_text(encoding="utf-8").splitlines(), source=str(p))

    @classmethod
    def default(cls) -> "EntityRuleSet":
        global _DEFAULT_RULES
        if _DEFAULT_RULES is None:
            text = (
                resources.files("vnspam")
                .joinpath("data/entity_rules.tsv")
                .read_text(encoding="utf-8")
            )
            _DEFAULT_RULES = cls.from_lines(text.splitlines(), source="entity_rules.tsv")
        return _DEFAULT_RULES


_DEFAULT_RULES: EntityRuleSet | None = None


def tag_entities(text: str, rules: EntityRuleSet | None = None) -> str:
    """Normalize one message into lowercase space-separated tokens.

    Rules are applied in order; within a rule, matches resolve leftmost and
    greedy. Matched spans become reserved tokens. Everything else is
    lowercased, punctuation (except apostrophes inside a word) becomes a
    space, and whitespace runs collapse. Applying the function to its own
    output is a no-op.
    """
    if rules is None:
        rules = EntityRuleSet.default()
    s = text.replace(_MARK, " ")
    s = _RESERVED_RE.sub(lambda m: f"{_MARK}{m.group(1).lower()}{_MARK}", s)
    for rule in rules:
        s = rule.regex.sub(f"{_MARK}{rule.group}{_MARK}", s)
    s = s.lower()

    out = []
    n = len(s)
    for i, ch in enumerate(s):
        if ch == _MARK or ch.isalnum() or ch.isspace():
            out.append(ch)
        elif (
            ch in _APOSTROPHES
            and 0 < i < n - 1
            and s[i - 1].isalnum()
            and s[i + 1].isalnum()
        ):
            out.append(ch)
        else:
            out.append(" ")
    s = _MARK_RE.sub(r" <\1> ", "".join(out))
    return " ".join(s.split())


def collocation_score(
    pair_count: float, left_count: float, right_count: float, discount: float
) -> float:
    """Discounted pair affinity: (pair_count - discount) / (left * right)."""
    return (pair_count - discount) / (left_count * right_count)


class CollocationModel:
    """Adjacent-pair counts plus the derived set of pairs worth merging.

    Stored bigrams all have count >= min_count; the merge set additionally
    requires collocation_score(...) > threshold. Instances are immutable and
    safe to share across threads.
    """

    def __init__(
        self,
        discount: float,
        min_count: int,
        threshold: float,
        unigram_counts: dict[str, int],
        bigram_counts: dict[tuple[str, str], int],
    ):
        if discount < 0:
            raise ValueError(f"discount must be >= 0, got {discount}")
        if min_count < 1:
            raise ValueError(f"min_count must be >= 1, got {min_count}")
        if threshold <= 0:
            raise ValueError(f"threshold must be > 0, got {threshold}")
        for (a, b), c in bigram_counts.items():
            if c < min_count:
                raise ValueError(f"bigram {(a, b)!r} stored with count {c} < min_count")
            if a not in unigram_counts or b not in unigram_counts:
                raise ValueError(f"bigram {(a, b)!r} references missing unigram count")
        self.discount = discount
        self.min_count = min_count
        self.threshold = threshold
        self.unigram_counts = dict(unigram_counts)
        self.bigram_counts = dict(bigram_counts)
        merges: dict[tuple[str, str], float] = {}
        for (a, b), c in self.bigram_counts.items():
            score = collocation_score(c, unigram_counts[a], unigram_counts[b], discount)
            if score > threshold:
                merges[(a, b)] = score
        self.merges = merges

    def score(self, left: str, right: str) -> float:
        pair = (left, right)
        if pair not in self.bigram_counts:
            raise KeyError(f"pair {pair!r} not stored (count below min_count?)")
        return collocation_score(
            self.bigram_counts[pair],
            self.unigram_counts[left],
            self.unigram_counts[right],
            self.discount,
        )

    def should_merge(self, left: str, right: str) -> bool:
        return (left, right) in self.merges

    def merges_by_score(self) -> list[tuple[tuple[str, str], float]]:
        """Merge pairs sorted by descending score, then alphabetically."""
        return sorted(self.merges.items(), key=lambda kv: (-kv[1], kv[0]))


def fit_collocations(
    docs,
    discount: float = 5.0,
    min_count: int = 10,
    threshold: float = 1e-4,
) -> CollocationModel:
    """Count unigrams and adjacent pairs over token streams and keep the
    pairs strong enough to merge.

    Pairs never span document boundaries. Bigrams seen fewer than min_count
    times are dropped entirely; of the rest, only those whose discounted score
    exceeds threshold end up in the merge set.
    """
    docs = list(docs)
    if not docs:
        raise ValueError("cannot fit collocations on an empty document list")
    unigrams: Counter[str] = Counter()
    bigrams: Counter[tuple[str, str]] = Counter()
    for doc in docs:
        unigrams.update(doc)
        bigrams.update(zip(doc, doc[1:]))
    kept = {pair: c for pair, c in bigrams.items() if c >= min_count}
    return CollocationModel(
        discount=discount,
        min_count=min_count,
        threshold=threshold,
        unigram_counts=dict(unigrams),
        bigram_counts=kept,
    )


def segment(tokens, model: CollocationModel) -> list[str]:
    """Greedy left-to-right merge of adjacent tokens in the merge set.

    A merged pair is consumed whole, so each token joins at most one
    neighbor per pass. Splitting the output on ``_`` restores the input.
    """
    out: list[str] = []
    i = 0
    n = len(tokens)
    while i < n:
        if i + 1 < n and model.should_merge(tokens[i], tokens[i + 1]):
            out.append(tokens[i] + "_" + tokens[i + 1])
            i += 2
        else:
            out.append(tokens[i])
            i += 1
    return out


def preprocess(
    text: str, rules: EntityRuleSet | None = None, model: CollocationModel | None = None
) -> list[str]:
    """Full normalization of one message: tag, split, then segment."""
    tokens = tag_entities(text, rules).split()
    if model is None:
        return tokens
    return segment(tokens, model)
