import itertools
import logging
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from assertgen.evalkit import (
    UnknownAssertType, bleu4, bleu_bucket_sample, classify_assert, copy_attribution, edit_distance, evaluate,
    frequency_baseline, overlap_metrics, perfect_prediction, timing_harness, top_frequent,
)
from oracles import brute_edit_distance, scan_frequency_baseline, textbook_bleu4

GOLD = "assertEquals ( 5 , r )".split()


# -- perfect prediction -------------------------------------------------------

def test_gold_among_candidates():
    cands = [GOLD[:-1], ["x"], list(GOLD), ["y"], ["z"]]
    assert perfect_prediction(cands, GOLD)
    assert not perfect_prediction(cands[:2], GOLD)


def test_one_token_off_is_not_perfect():
    assert not perfect_prediction([GOLD[:-1] + ["]"]], GOLD)


def test_whitespace_normalisation():
    assert perfect_prediction(["assertEquals ( 5 ,  r )"], GOLD)
    assert perfect_prediction([["assertEquals (", "5", ", r )"]], GOLD)


# -- BLEU -----------------------------------------------------------------------

def test_identical_is_100():
    assert bleu4(GOLD, GOLD) == pytest.approx(100.0, abs=1e-12)


def test_disjoint_is_near_zero():
    # only the add-one smoothing floor remains: 7, 6, 5 and 4 candidate
    # n-grams give (1/8 * 1/7 * 1/6 * 1/5) ** 0.25
    score = bleu4(list("abcdefg"), list("hijklmn"))
    assert score == pytest.approx(100 * (1 / 8 / 7 / 6 / 5) ** 0.25, rel=1e-12)
    assert score < bleu4(list("abcdefg"), list("abcxxxx"))


def test_first_half_of_twelve():
    ref = [f"t{i}" for i in range(12)]
    # every n-gram matches; only the brevity penalty exp(1 - 12/6) applies
    assert bleu4(ref[:6], ref) == pytest.approx(100 * math.exp(-1), abs=1e-9)
    assert bleu4(ref[:6], ref) == pytest.approx(textbook_bleu4(ref[:6], ref), abs=1e-9)


def test_empty_candidate_scores_zero():
    assert bleu4([], GOLD) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from("abcd"), min_size=1, max_size=12), st.lists(st.sampled_from("abcd"), min_size=1, max_size=12))
def test_bleu_matches_textbook(cand, ref):
    assert bleu4(cand, ref) == pytest.approx(textbook_bleu4(cand, ref), abs=1e-9)
    assert 0.0 <= bleu4(cand, ref) <= 100.0 + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from("abcdef"), min_size=1, max_size=10))
def test_self_bleu_is_100(x):
    assert bleu4(x, x) == pytest.approx(100.0, abs=1e-9)


# -- edit distance ---------------------------------------------------------------

def test_edit_distance_examples():
    assert edit_distance(GOLD, GOLD) == 0
    assert edit_distance(GOLD, ["assertEquals", "(", "6", ",", "r", ")"]) == 1
    assert edit_distance([], GOLD) == len(GOLD)


def test_edit_distance_against_recursion_short():
    for n in range(0, 5):
        for a in itertools.product("abc", repeat=n):
            for b in (("a", "b"), ("c", "a", "a"), ()):
                assert edit_distance(list(a), list(b)) == brute_edit_distance(a, b)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from("abc"), max_size=6), st.lists(st.sampled_from("abc"), max_size=6),
       st.lists(st.sampled_from("abc"), max_size=6))
def test_edit_distance_is_a_metric(a, b, c):
    d = edit_distance
    assert (d(a, b) == 0) == (a == b)
    assert d(a, b) == d(b, a)
    assert d(a, c) <= d(a, b) + d(b, c)


# -- taxonomy --------------------------------------------------------------------

@pytest.mark.parametrize(
    "gold, name",
    [
        ("org . junit . Assert . assertEquals ( a , b )", "assertEquals"),
        ("assertThat ( x , is ( y ) )", "assertThat"),
        ("Assert . assertNull ( z )", "assertNull"),
    ],
)
def test_classify_assert(gold, name):
    assert classify_assert(gold.split()) == name


def test_unknown_assert_type():
    with pytest.raises(UnknownAssertType):
        classify_assert("fail ( )".split())


# -- overlap ----------------------------------------------------------------------

def test_overlap_disjoint():
    r = overlap_metrics({"a", "b"}, {"c"})
    assert r.intersection_frac == 0.0
    assert r.raw_only_frac + r.abstract_only_frac == 1.0
    assert r.exact == (Fraction(0), Fraction(2, 3), Fraction(1, 3))


def test_overlap_identical_and_empty():
    assert overlap_metrics({"a"}, {"a"}).intersection_frac == 1.0
    empty = overlap_metrics(set(), set())
    assert empty.empty_union and (empty.intersection_frac, empty.raw_only_frac, empty.abstract_only_frac) == (0, 0, 0)


@settings(max_examples=100, deadline=None)
@given(st.sets(st.integers(0, 20)), st.sets(st.integers(0, 20)))
def test_overlap_fractions_sum_to_one(R, A):
    r = overlap_metrics(R, A)
    if R | A:
        assert sum(r.exact) == 1
    else:
        assert r.empty_union


# -- frequency baseline --------------------------------------------------------

def test_frequency_baseline_examples():
    A, B, C = ["a"], ["b"], ["c"]
    assert frequency_baseline([A, A, B], [A, C], 1) == 1
    assert frequency_baseline([A, A, B], [A, B, C, B], 10) == 3
    assert top_frequent([B, A, C, B, A], 2) == [("a",), ("b",)]
    with pytest.raises(ValueError):
        frequency_baseline([A], [A], 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.sampled_from("xyz"), min_size=1, max_size=2), max_size=15),
       st.lists(st.lists(st.sampled_from("xyz"), min_size=1, max_size=2), max_size=10),
       st.integers(1, 8))
def test_frequency_baseline_matches_scan(train, test, k):
    assert frequency_baseline(train, test, k) == scan_frequency_baseline(train, test, k)
    assert frequency_baseline(train, test, k) <= frequency_baseline(train, test, k + 1)


# -- copy attribution ------------------------------------------------------------

def test_copy_attribution():
    gold = {"t1": ["assertTrue", "(", "x", ")"], "t2": ["assertTrue", "(", "isPrintVersionMode", ")"]}
    vocab = {"assertTrue", "(", ")", "x"}
    assert copy_attribution(["t1"], gold, vocab) == 0
    assert copy_attribution(["t1", "t2"], gold, vocab) == 1


# -- BLEU buckets -----------------------------------------------------------------

def test_perfect_items_are_excluded_from_buckets():
    assert bleu_bucket_sample([(GOLD, GOLD)] * 3) == [[], [], [], []]


def test_single_imperfect_item_warns(caplog):
    with caplog.at_level(logging.WARNING):
        buckets = bleu_bucket_sample([(GOLD[:4], GOLD)], n_per_bucket=25)
    assert sum(len(b) for b in buckets) == 1
    assert "only 1 members" in caplog.text


def test_bucket_sampling_is_seeded():
    rng = random.Random(0)
    pairs = [([rng.choice("abcd") for _ in range(6)], list("abcdab")) for _ in range(300)]
    a = bleu_bucket_sample(pairs, n_per_bucket=5, seed=3)
    b = bleu_bucket_sample(pairs, n_per_bucket=5, seed=3)
    assert a == b
    for (lo, hi), bucket in zip(((0, 24), (25, 49), (50, 74), (75, 99)), a):
        assert all(lo <= s < hi + 1 for _, _, s in bucket)


# -- evaluate ---------------------------------------------------------------------

def test_evaluate_report():
    gold = {"1": GOLD, "2": "assertTrue ( x )".split(), "3": "assertNull ( y )".split()}
    preds = {
        "1": [GOLD],
        "2": ["assertFalse ( x )".split(), "assertTrue ( x )".split()],
        "3": ["assertNull ( z )".split()],
    }
    rep = evaluate(preds, gold, beam_sizes=(1, 5), vocab={"assertEquals", "(", ")", ",", "5"})
    assert rep.per_beam[1]["perfect_count"] == 1
    assert rep.per_beam[5]["perfect_count"] == 2
    assert rep.edit_distance_histogram == {1: 2}
    assert rep.taxonomy["assertEquals"] == [1, 1]
    assert rep.taxonomy["assertTrue"] == [0, 1]
    assert rep.copy_attributed == 1  # "r" is not in the vocabulary
    for name, (perfect, total) in rep.taxonomy.items():
        assert perfect <= total
    assert rep.histogram_csv() == "distance,count\n1,2\n"


def test_evaluate_all_perfect():
    gold = {str(i): [f"t{i}"] for i in range(5)}
    rep = evaluate({k: [v] for k, v in gold.items()}, gold, beam_sizes=(1,))
    assert rep.per_beam[1]["perfect_rate"] == 1.0
    assert rep.per_beam[1]["mean_bleu4"] == pytest.approx(100.0)


# -- timing -----------------------------------------------------------------------

def test_timing_harness_reports_each_beam(caplog):
    calls = []
    rep = timing_harness(lambda x, k: calls.append((x, k)), [1, 2], beam_sizes=(1, 5, 10), repeats=2)
    assert set(rep["seconds_per_input"]) == {1, 5, 10}
    assert len(calls) == 12
    assert isinstance(rep["monotone"], bool)
    with pytest.raises(ValueError):
        timing_harness(lambda x, k: None, [], beam_sizes=(1,))
