"""Metrics and baselines for generated assert statements."""
from __future__ import annotations

import logging
import math
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .miner import ASSERT_NAMES

log = logging.getLogger(__name__)

BLEU_BUCKETS = ((0, 24), (25, 49), (50, 74), (75, 99))
DEFAULT_BEAMS = (1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50)


class UnknownAssertType(ValueError):
    pass


def normalize(tokens: Sequence[str] | str) -> tuple[str, ...]:
    if isinstance(tokens, str):
        return tuple(tokens.split())
    return tuple(t for tok in tokens for t in tok.split())


def perfect_prediction(candidates: Iterable[Sequence[str]], gold: Sequence[str]) -> bool:
    g = normalize(gold)
    return any(normalize(c) == g for c in candidates)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """Sentence BLEU-4 on a 0-100 scale.

    Orders with no candidate n-grams are left out of the geometric mean;
    orders with zero matches get add-one smoothing.
    """
    cand, ref = normalize(candidate), normalize(reference)
    if not cand:
        return 0.0
    logs = []
    for n in range(1, 5):
        total = len(cand) - n + 1
        if total <= 0:
            continue
        ref_counts = _ngrams(ref, n)
        matched = sum(min(c, ref_counts[g]) for g, c in _ngrams(cand, n).items())
        if matched == 0:
            logs.append(math.log(1.0 / (total + 1)))
        else:
            logs.append(math.log(matched / total))
    bp = 1.0 if len(cand) >= len(ref) else math.exp(1.0 - len(ref) / len(cand))
    return 100.0 * bp * math.exp(sum(logs) / len(logs))


def edit_distance(candidate: Sequence[str], gold: Sequence[str]) -> int:
    """Token-level Levenshtein distance."""
    a, b = normalize(candidate), normalize(gold)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def classify_assert(gold: Sequence[str]) -> str:
    toks = normalize(gold)
    # skip an Assert. / org.junit.Assert. qualifier
    i = 0
    while i + 1 < len(toks) and toks[i + 1] == ".":
        i += 2
    if i < len(toks) and toks[i] in ASSERT_NAMES:
        return toks[i]
    raise UnknownAssertType(" ".join(toks[:8]))


@dataclass
class OverlapReport:
    pp_R: set
    pp_A: set
    intersection_frac: float
    raw_only_frac: float
    abstract_only_frac: float
    empty_union: bool = False
    exact: tuple[Fraction, Fraction, Fraction] = (Fraction(0), Fraction(0), Fraction(0))

    def to_json(self) -> dict:
        return {
            "pp_R": sorted(self.pp_R),
            "pp_A": sorted(self.pp_A),
            "intersection": len(self.pp_R & self.pp_A),
            "raw_only": len(self.pp_R - self.pp_A),
            "abstract_only": len(self.pp_A - self.pp_R),
            "intersection_frac": self.intersection_frac,
            "raw_only_frac": self.raw_only_frac,
            "abstract_only_frac": self.abstract_only_frac,
            "empty_union": self.empty_union,
        }


def overlap_metrics(pp_R: Iterable, pp_A: Iterable) -> OverlapReport:
    R, A = set(pp_R), set(pp_A)
    union = len(R | A)
    if union == 0:
        return OverlapReport(R, A, 0.0, 0.0, 0.0, empty_union=True)
    fr = (Fraction(len(R & A), union), Fraction(len(R - A), union), Fraction(len(A - R), union))
    return OverlapReport(R, A, float(fr[0]), float(fr[1]), float(fr[2]), exact=fr)


def top_frequent(train_targets: Iterable[Sequence[str]], k: int) -> list[tuple[str, ...]]:
    counts = Counter(normalize(t) for t in train_targets)
    return [seq for seq, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]]


def frequency_baseline(train_targets: Iterable[Sequence[str]], test_targets: Iterable[Sequence[str]], k: int) -> int:
    """Number of test targets equal to one of the k most frequent training
    targets (frequency ties broken lexicographically)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    top = set(top_frequent(train_targets, k))
    return sum(normalize(t) in top for t in test_targets)


def copy_attribution(perfect_ids: Iterable[str], gold_by_id: dict[str, Sequence[str]], vocab) -> int:
    """Perfect predictions whose gold contains a token outside ``vocab``."""
    return sum(any(t not in vocab for t in normalize(gold_by_id[i])) for i in perfect_ids)


def bleu_bucket_sample(imperfect: Sequence[tuple[Sequence[str], Sequence[str]]], n_per_bucket: int = 25,
                       seed: int = 0) -> list[list[tuple[Sequence[str], Sequence[str], float]]]:
    """Split imperfect (prediction, gold) pairs into BLEU ranges 0-24, 25-49,
    50-74, 75-99 and draw up to ``n_per_bucket`` from each."""
    buckets: list[list] = [[] for _ in BLEU_BUCKETS]
    for pred, gold in imperfect:
        if normalize(pred) == normalize(gold):
            continue
        score = bleu4(pred, gold)
        b = min(int(score // 25), 3)
        buckets[b].append((pred, gold, score))
    rng = random.Random(seed)
    out = []
    for (lo, hi), members in zip(BLEU_BUCKETS, buckets):
        if len(members) <= n_per_bucket:
            if members and len(members) < n_per_bucket:
                log.warning("BLEU bucket %d-%d has only %d members", lo, hi, len(members))
            out.append(list(members))
        else:
            out.append(rng.sample(members, n_per_bucket))
    return out


@dataclass
class EvalReport:
    n_inputs: int = 0
    per_beam: dict[int, dict] = field(default_factory=dict)
    edit_distance_histogram: dict[int, int] = field(default_factory=dict)
    taxonomy: dict[str, list[int]] = field(default_factory=dict)
    unknown_assert_types: int = 0
    copy_attributed: int | None = None
    timing: dict[int, float] = field(default_factory=dict)
    perfect_ids: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "n_inputs": self.n_inputs,
            "per_beam": {str(k): v for k, v in sorted(self.per_beam.items())},
            "edit_distance_histogram": {str(k): v for k, v in sorted(self.edit_distance_histogram.items())},
            "taxonomy": {k: {"perfect": v[0], "dataset": v[1]} for k, v in self.taxonomy.items()},
            "unknown_assert_types": self.unknown_assert_types,
            "copy_attributed": self.copy_attributed,
            "timing": {str(k): v for k, v in sorted(self.timing.items())},
            "perfect_ids": sorted(self.perfect_ids),
        }

    def histogram_csv(self) -> str:
        rows = ["distance,count"] + [f"{d},{c}" for d, c in sorted(self.edit_distance_histogram.items())]
        return "\n".join(rows) + "\n"


def evaluate(predictions: dict[str, Sequence[Sequence[str]]], gold: dict[str, Sequence[str]],
             beam_sizes: Sequence[int] = DEFAULT_BEAMS, vocab=None) -> EvalReport:
    """Score ranked candidate lists against gold asserts.

    For beam size k the first k candidates are considered.  Edit distance,
    taxonomy and copy attribution use the top candidate only.
    """
    ids = sorted(i for i in predictions if i in gold)
    report = EvalReport(n_inputs=len(ids))
    for k in beam_sizes:
        hits = [i for i in ids if perfect_prediction(predictions[i][:k], gold[i])]
        bleus = [bleu4(predictions[i][0], gold[i]) if predictions[i] else 0.0 for i in ids]
        report.per_beam[k] = {
            "perfect_count": len(hits),
            "perfect_rate": len(hits) / len(ids) if ids else 0.0,
            "mean_bleu4": sum(bleus) / len(bleus) if bleus else 0.0,
        }
    top1 = [i for i in ids if perfect_prediction(predictions[i][:1], gold[i])]
    report.perfect_ids = top1
    top1_set = set(top1)
    hist: Counter = Counter()
    for i in ids:
        if i not in top1_set:
            cand = predictions[i][0] if predictions[i] else []
            hist[edit_distance(cand, gold[i])] += 1
    report.edit_distance_histogram = dict(sorted(hist.items()))
    tax = {name: [0, 0] for name in ASSERT_NAMES}
    for i in ids:
        try:
            name = classify_assert(gold[i])
        except UnknownAssertType:
            report.unknown_assert_types += 1
            continue
        tax[name][1] += 1
        tax[name][0] += i in top1_set
    report.taxonomy = tax
    if vocab is not None:
        report.copy_attributed = copy_attribution(top1, gold, vocab)
    return report


def timing_harness(predict_fn: Callable[[object, int], object], inputs: Sequence, beam_sizes: Sequence[int] = DEFAULT_BEAMS,
                   repeats: int = 1) -> dict:
    """Mean wall-clock seconds per input for each beam size.

    ``predict_fn(input, k)`` must do inference only; any abstraction or
    mapping back to source belongs outside it.
    """
    if not inputs:
        raise ValueError("no inputs to time")
    seconds: dict[int, float] = {}
    for k in beam_sizes:
        best = math.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            for x in inputs:
                predict_fn(x, k)
            best = min(best, (time.perf_counter() - t0) / len(inputs))
        seconds[k] = best
    ordered = [seconds[k] for k in sorted(seconds)]
    monotone = all(a <= b for a, b in zip(ordered, ordered[1:]))
    if not monotone:
        log.warning("timing is not monotone in beam size: %s", seconds)
    return {"seconds_per_input": seconds, "monotone": monotone}
