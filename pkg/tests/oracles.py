"""Independent reference implementations used to check the package.

Each oracle here is written in the most direct way possible (plain Python
floats, exhaustive enumeration, explicit loops) and shares no code with the
implementation it checks.
"""
from __future__ import annotations

import functools
import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np


# -- LSTM -------------------------------------------------------------------

def _sig(z: float) -> float:
    return 1.0 / (1.0 + math.exp(-z))


def scalar_lstm_step(x, h, c, W, b):
    """One LSTM step, one unit at a time.  ``W`` rows index [x; h], columns
    are four blocks of gates in the order input, forget, candidate, output."""
    n = len(h)
    inp = list(x) + list(h)
    h_new, c_new = [], []
    for u in range(n):
        z = []
        for gate in range(4):
            col = gate * n + u
            acc = float(b[col])
            for r, v in enumerate(inp):
                acc += float(v) * float(W[r][col])
            z.append(acc)
        i, f, g, o = _sig(z[0]), _sig(z[1]), math.tanh(z[2]), _sig(z[3])
        cu = f * c[u] + i * g
        c_new.append(cu)
        h_new.append(o * math.tanh(cu))
    return h_new, c_new


def scalar_bilstm(embed, ids, Wf, bf, Wb, bb, hidden):
    """Bidirectional encoder states, one list of 2*hidden floats per position."""
    xs = [list(embed[i]) for i in ids]
    fwd, bwd = [None] * len(xs), [None] * len(xs)
    h, c = [0.0] * hidden, [0.0] * hidden
    for t in range(len(xs)):
        h, c = scalar_lstm_step(xs[t], h, c, Wf, bf)
        fwd[t] = h
    h, c = [0.0] * hidden, [0.0] * hidden
    for t in reversed(range(len(xs))):
        h, c = scalar_lstm_step(xs[t], h, c, Wb, bb)
        bwd[t] = h
    return [f + b for f, b in zip(fwd, bwd)]


# -- metrics ------------------------------------------------------------------

def textbook_bleu4(candidate, reference) -> float:
    """Sentence BLEU-4 following Papineni et al.: clipped n-gram precisions,
    uniform weights, brevity penalty.  Smoothing: an order whose clipped
    match count is zero uses (0 + 1) / (count + 1); an order for which the
    candidate has no n-grams at all is dropped and the weights of the
    remaining orders are renormalised."""
    cand, ref = list(candidate), list(reference)
    if not cand:
        return 0.0
    precisions = []
    for n in (1, 2, 3, 4):
        cgrams = [tuple(cand[i:i + n]) for i in range(len(cand) - n + 1)]
        if not cgrams:
            continue
        rcounts = Counter(tuple(ref[i:i + n]) for i in range(len(ref) - n + 1))
        used = Counter()
        clipped = 0
        for g in cgrams:
            if used[g] < rcounts[g]:
                used[g] += 1
                clipped += 1
        if clipped == 0:
            precisions.append(Fraction(1, len(cgrams) + 1))
        else:
            precisions.append(Fraction(clipped, len(cgrams)))
    log_mean = sum(math.log(p) for p in precisions) / len(precisions)
    c, r = len(cand), len(ref)
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return 100.0 * bp * math.exp(log_mean)


def brute_edit_distance(a, b) -> int:
    """Plain exponential recursion (no memo)."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(
        brute_edit_distance(a[1:], b) + 1,
        brute_edit_distance(a, b[1:]) + 1,
        brute_edit_distance(a[1:], b[1:]) + (a[0] != b[0]),
    )


@functools.lru_cache(maxsize=None)
def memo_edit_distance(a: tuple, b: tuple) -> int:
    """The same recursion, memoised over suffix pairs so that exhaustive
    sweeps stay affordable."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(
        memo_edit_distance(a[1:], b) + 1,
        memo_edit_distance(a, b[1:]) + 1,
        memo_edit_distance(a[1:], b[1:]) + (a[0] != b[0]),
    )


def scan_frequency_baseline(train, test, k) -> int:
    """Direct scan: count each distinct training target, rank, compare."""
    distinct = []
    for t in train:
        t = tuple(t)
        if t not in distinct:
            distinct.append(t)
    freq = {t: sum(1 for u in train if tuple(u) == t) for t in distinct}
    ranked = sorted(distinct, key=lambda t: (-freq[t], t))[:k]
    hits = 0
    for t in test:
        for r in ranked:
            if tuple(t) == r:
                hits += 1
                break
    return hits


# -- decoding -----------------------------------------------------------------

def enumerate_sequences(log_prob_fn, n_tokens: int, stop: int, max_len: int):
    """Every sequence of length <= max_len (finished by ``stop`` or cut at
    max_len) with its summed log-probability, best first."""
    out = []
    for length in range(1, max_len + 1):
        for seq in itertools.product(range(n_tokens), repeat=length):
            if stop in seq[:-1]:
                continue
            if seq[-1] != stop and length != max_len:
                continue
            total, prev = 0.0, None
            for tok in seq:
                total += log_prob_fn(prev, tok)
                prev = tok
            out.append((list(seq), total))
    out.sort(key=lambda p: -p[1])
    return out


# -- gradients ----------------------------------------------------------------

def finite_difference_check(params, loss_fn, eps: float = 1e-5, floor: float = 1e-6):
    """Compare analytic gradients with central differences on every element
    of every parameter tensor.

    Returns ``{name: max relative error}`` where the relative error of one
    element is |a - n| / max(|a|, |n|, floor).
    """
    params.zero_grad()
    L = loss_fn()
    L.backward()
    analytic = {k: (np.zeros_like(t.data) if t.grad is None else t.grad.copy()) for k, t in params.tensors.items()}
    worst = {}
    for name, t in params.tensors.items():
        flat = t.data.reshape(-1)
        a_flat = analytic[name].reshape(-1)
        err = 0.0
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            up = float(loss_fn().data)
            flat[i] = old - eps
            down = float(loss_fn().data)
            flat[i] = old
            num = (up - down) / (2 * eps)
            denom = max(abs(a_flat[i]), abs(num), floor)
            err = max(err, abs(a_flat[i] - num) / denom)
        worst[name] = err
    return worst
