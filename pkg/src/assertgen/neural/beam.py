"""Beam-search decoding."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .autodiff import no_grad
from .model import (
    PAD, START, STOP, UNK, Seq2SeqParams, Vocab, decode_step, encode, init_decoder_state,
    make_batch, step_log_probs,
)


@dataclass
class BeamHypothesis:
    tokens: list[int]
    log_prob: float
    finished: bool


# step(prev_token_ids, state, beam_indices) -> (log_probs (B, V'), new_state)
StepFn = Callable[[np.ndarray, object, np.ndarray], tuple[np.ndarray, object]]


def beam_search_fn(step: StepFn, init_state, k: int, max_len: int, stop_id: int = STOP,
                   start_id: int = START) -> list[BeamHypothesis]:
    """Generic length-bounded beam search.

    At each step the best ``k - len(finished)`` expansions of the live beams
    are kept; expansions ending in ``stop_id`` are frozen as finished.
    Ranking ties go to the earlier-generated candidate (beam order, then
    token id).  Returns up to ``k`` hypotheses sorted by log-probability.
    """
    if k < 1 or max_len < 1:
        raise ValueError("k and max_len must be >= 1")
    live_tokens: list[list[int]] = [[]]
    live_scores = np.zeros(1)
    state = init_state
    finished: list[BeamHypothesis] = []
    prev = np.array([start_id])
    for t in range(max_len):
        logp, state = step(prev, state, np.arange(len(live_tokens)))
        cand = live_scores[:, None] + logp                   # (B, V')
        flat = cand.ravel()
        width = k - len(finished)
        # stable sort on -score keeps (beam, token) order for ties
        top = np.argsort(-flat, kind="stable")[:width]
        n_tok = cand.shape[1]
        keep_beams, keep_tokens, keep_scores = [], [], []
        for idx in top:
            b, w = divmod(int(idx), n_tok)
            score = float(flat[idx])
            if score == -np.inf:
                continue
            toks = live_tokens[b] + [w]
            if w == stop_id:
                finished.append(BeamHypothesis(toks, score, True))
            else:
                keep_beams.append(b)
                keep_tokens.append(toks)
                keep_scores.append(score)
        if not keep_beams:
            live_tokens = []
            break
        sel = np.array(keep_beams)
        state = _select(state, sel)
        live_tokens = keep_tokens
        live_scores = np.array(keep_scores)
        prev = np.array([toks[-1] for toks in live_tokens])
        if len(finished) >= k:
            break
    hyps = finished + [BeamHypothesis(toks, float(s), False) for toks, s in zip(live_tokens, live_scores)]
    order = sorted(range(len(hyps)), key=lambda i: -hyps[i].log_prob)
    return [hyps[i] for i in order[:k]]


def _select(state, sel: np.ndarray):
    if state is None:
        return None
    if hasattr(state, "select"):
        return state.select(sel)
    return state[sel]


def greedy_fn(step: StepFn, init_state, max_len: int, stop_id: int = STOP, start_id: int = START) -> BeamHypothesis:
    prev = np.array([start_id])
    state = init_state
    tokens: list[int] = []
    total = 0.0
    for _ in range(max_len):
        logp, state = step(prev, state, np.zeros(1, dtype=int))
        w = int(np.argmax(logp[0]))
        total += float(logp[0, w])
        tokens.append(w)
        if w == stop_id:
            return BeamHypothesis(tokens, total, True)
        prev = np.array([w])
    return BeamHypothesis(tokens, total, False)


class _ModelStep:
    """Adapts the decoder to the generic step interface for one input.

    START and PAD are never valid outputs.  UNK is also banned when the
    vocabulary is closed (no copy mechanism), since every abstract target
    token is in the vocabulary.
    """

    def __init__(self, params: Seq2SeqParams, enc, src_ext: np.ndarray, n_ext: int):
        self.params = params
        self.enc = enc
        self.src_ext = src_ext
        self.n_ext = n_ext
        self.banned = [START, PAD] + ([] if params.config.copy_enabled else [UNK])

    def init_state(self):
        return init_decoder_state(self.params, self.enc)

    def __call__(self, prev, state, beams):
        enc = self.enc
        n = len(prev)
        tiled = type(enc)(enc.states[np.zeros(n, dtype=int)], enc.mask[np.zeros(n, dtype=int)],
                          enc.final, None if enc.attn_keys is None else enc.attn_keys[np.zeros(n, dtype=int)])
        src_ext = np.repeat(self.src_ext, n, axis=0)
        out = decode_step(self.params, prev, state, tiled, src_ext, self.n_ext)
        logp = step_log_probs(out).data.copy()
        logp[:, self.banned] = -np.inf
        return logp, out.state


def _prepare(params: Seq2SeqParams, vocab: Vocab, src_tokens: Sequence[str]):
    batch = make_batch(vocab, [(src_tokens, None)], copy=params.config.copy_enabled)
    enc = encode(params, batch.src, batch.src_mask)
    n_ext = batch.n_ext if params.config.copy_enabled else 0
    return _ModelStep(params, enc, batch.src_ext, n_ext), batch.oovs[0]


def beam_search(params: Seq2SeqParams, vocab: Vocab, src_tokens: Sequence[str], k: int,
                max_len: int = 64) -> tuple[list[BeamHypothesis], list[str]]:
    """Beam search for one input; also returns the input's OOV list so that
    extended ids can be mapped back to copied lexemes."""
    with no_grad():
        step, oovs = _prepare(params, vocab, src_tokens)
        return beam_search_fn(step, step.init_state(), k, max_len), oovs


def greedy(params: Seq2SeqParams, vocab: Vocab, src_tokens: Sequence[str], max_len: int = 64) -> tuple[BeamHypothesis, list[str]]:
    with no_grad():
        step, oovs = _prepare(params, vocab, src_tokens)
        return greedy_fn(step, step.init_state(), max_len), oovs


def ids_to_tokens(ids: Sequence[int], vocab: Vocab, oovs: Sequence[str]) -> list[str]:
    out = []
    V = len(vocab)
    for i in ids:
        if i == STOP:
            break
        out.append(oovs[i - V] if i >= V else vocab.itos[i])
    return out


@dataclass
class Prediction:
    candidates: list[list[str]]
    log_probs: list[float]


def predict(params: Seq2SeqParams, vocab: Vocab, src_tokens: Sequence[str], k: int, max_len: int = 64) -> Prediction:
    hyps, oovs = beam_search(params, vocab, src_tokens, k, max_len)
    return Prediction([ids_to_tokens(h.tokens, vocab, oovs) for h in hyps], [h.log_prob for h in hyps])
