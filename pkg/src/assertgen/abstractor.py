"""Vocabulary construction and per-TAP abstraction into typed identifiers."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .jlex import ABSTRACTABLE, Category, classify
from .miner import PLACEHOLDER, TapRecord

# Prefix used in abstract terms, per abstractable category.
TERM_PREFIX = {
    Category.METHOD: "METHOD",
    Category.IDENT: "IDENT",
    Category.TYPE_NAME: "TYPE",
    Category.ANNOTATION: "ANNOTATION",
    Category.INT_LIT: "INT",
    Category.LONG_LIT: "LONG",
    Category.FLOAT_LIT: "FLOAT",
    Category.DOUBLE_LIT: "DOUBLE",
    Category.CHAR_LIT: "CHAR",
    Category.STRING_LIT: "STRING",
    Category.BOOL_LIT: "BOOL",
    Category.NULL_LIT: "NULL",
}
assert set(TERM_PREFIX) == set(ABSTRACTABLE)

TERM_RE = re.compile(r"(?:%s)_(\d+)" % "|".join(TERM_PREFIX.values()))


class EmptyCorpus(ValueError):
    pass


class TypedIdOverflow(ValueError):
    """A TAP needs more typed IDs of one category than the model allows."""


@dataclass
class Vocabulary:
    tokens: list[tuple[str, int]]
    capacity: int
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {lex: r for r, (lex, _) in enumerate(self.tokens)}

    def __contains__(self, lexeme: str) -> bool:
        return lexeme in self.index

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return (lex for lex, _ in self.tokens)

    def zipf_report(self) -> list[tuple[int, int]]:
        """(rank, frequency) pairs with 1-based ranks."""
        return [(r + 1, f) for r, (_, f) in enumerate(self.tokens)]

    def dumps(self) -> str:
        return "".join(f"{lex}\t{freq}\n" for lex, freq in self.tokens)

    @classmethod
    def loads(cls, text: str, capacity: int | None = None) -> "Vocabulary":
        tokens = []
        for line in text.splitlines():
            if not line:
                continue
            lex, _, freq = line.rpartition("\t")
            tokens.append((lex, int(freq)))
        return cls(tokens, capacity if capacity is not None else max(len(tokens), 1))


def count_tokens(seqs: Iterable[Sequence[str]]) -> Counter:
    counts: Counter = Counter()
    for s in seqs:
        counts.update(s)
    return counts


def vocabulary_from_counts(counts: Counter, capacity: int) -> Vocabulary:
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    if not counts:
        raise EmptyCorpus("no tokens to build a vocabulary from")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(ranked[:capacity], capacity)


def build_vocabulary(taps: Sequence[TapRecord], capacity: int = 1000) -> Vocabulary:
    """Most frequent lexemes over all context and target tokens."""
    return vocabulary_from_counts(
        count_tokens(s for t in taps for s in (t.context_tokens, t.target_tokens)), capacity
    )


def coverage(taps: Sequence[TapRecord], vocab: Vocabulary) -> float:
    """Fraction of TAPs whose every token is in the vocabulary."""
    if not taps:
        return 0.0
    full = sum(all(x in vocab for x in (*t.context_tokens, *t.target_tokens)) for t in taps)
    return full / len(taps)


@dataclass
class AbstractionMap:
    forward: dict[str, str] = field(default_factory=dict)
    backward: dict[str, str] = field(default_factory=dict)
    next_index: dict[str, int] = field(default_factory=dict)

    def term_for(self, lexeme: str, category: Category, cap: int | None) -> str:
        term = self.forward.get(lexeme)
        if term is not None:
            return term
        prefix = TERM_PREFIX[category]
        k = self.next_index.get(prefix, 0)
        if cap is not None and k >= cap:
            raise TypedIdOverflow(f"{prefix}_{k} exceeds per-category cap {cap}")
        term = f"{prefix}_{k}"
        self.next_index[prefix] = k + 1
        self.forward[lexeme] = term
        self.backward[term] = lexeme
        return term


@dataclass
class AbstractTap:
    context_tokens: list[str]
    target_tokens: list[str]
    map: AbstractionMap
    raw_id: str


def _abstract_seq(lexemes: Sequence[str], idioms, amap: AbstractionMap, cap: int | None) -> list[str]:
    out = []
    for tok in classify(lexemes):
        lex = tok.lexeme
        # Raw lexemes that look like terms are always abstracted so that the
        # backward map stays unambiguous.
        looks_like_term = TERM_RE.fullmatch(lex) is not None
        if lex == PLACEHOLDER or (not looks_like_term and (lex in idioms or tok.category not in ABSTRACTABLE)):
            out.append(lex)
        else:
            cat = tok.category if tok.category in ABSTRACTABLE else Category.IDENT
            out.append(amap.term_for(lex, cat, cap))
    return out


def abstract_tap(tap: TapRecord, idioms, per_category_cap: int | None = 30) -> AbstractTap:
    """Abstract one TAP in isolation: context first, then target.

    Idioms (and keywords, operators, separators) stay raw; every other token
    becomes ``PREFIX_k`` with ``k`` counting first occurrences per category.
    A lexeme keeps the term it was first given wherever it reappears.
    """
    amap = AbstractionMap()
    ctx = _abstract_seq(tap.context_tokens, idioms, amap, per_category_cap)
    tgt = _abstract_seq(tap.target_tokens, idioms, amap, per_category_cap)
    return AbstractTap(ctx, tgt, amap, tap.id)


@dataclass
class Unabstracted:
    tokens: list[str]
    unresolved: list[str]


def unabstract(tokens: Sequence[str], amap: AbstractionMap) -> Unabstracted:
    out, unresolved = [], []
    for t in tokens:
        raw = amap.backward.get(t)
        if raw is not None:
            out.append(raw)
        else:
            if TERM_RE.fullmatch(t):
                unresolved.append(t)
            out.append(t)
    return Unabstracted(out, unresolved)


def model_vocabulary(abstract_taps: Sequence[AbstractTap]) -> list[str]:
    """Closed token set of an abstract dataset, sorted for determinism."""
    return sorted({t for a in abstract_taps for s in (a.context_tokens, a.target_tokens) for t in s})
