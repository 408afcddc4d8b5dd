"""Bidirectional-LSTM encoder, attention, two-layer LSTM decoder and an
optional pointer-generator copy gate.

All functions are batched: token ids arrive as padded ``(B, T)`` integer
arrays together with a ``(B, T)`` 0/1 mask.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

STOP, START, PAD, UNK = 0, 1, 2, 3
SPECIALS = ("</s>", "<s>", "<pad>", "<unk>")

_NEG = -1e30


class EmptyInput(ValueError):
    pass


@dataclass
class ModelConfig:
    vocab_size: int
    d: int = 128
    h: int = 256
    copy_enabled: bool = False
    dropout_rate: float = 0.2
    attention: str = "additive"  # or "dot"
    init_scale: float = 0.1

    @property
    def dec_hidden(self) -> int:
        return 2 * self.h


class Seq2SeqParams:
    """Ordered collection of named trainable tensors plus the hyperparameters."""

    def __init__(self, config: ModelConfig, tensors: dict[str, Tensor]):
        self.config = config
        self.tensors = tensors

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def names(self) -> list[str]:
        return list(self.tensors)

    def zero_grad(self) -> None:
        for t in self.tensors.values():
            t.grad = None

    def copy(self) -> "Seq2SeqParams":
        return Seq2SeqParams(
            ModelConfig(**asdict(self.config)),
            {k: ad.parameter(v.data.copy()) for k, v in self.tensors.items()},
        )

    @property
    def dropout_rate(self) -> float:
        return self.config.dropout_rate

    def num_parameters(self) -> int:
        return sum(t.data.size for t in self.tensors.values())


def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    V, d, h, H = cfg.vocab_size, cfg.d, cfg.h, cfg.dec_hidden
    shapes = {
        "embed": (V, d),
        "enc_fwd_W": (d + h, 4 * h),
        "enc_fwd_b": (4 * h,),
        "enc_bwd_W": (d + h, 4 * h),
        "enc_bwd_b": (4 * h,),
        "bridge_W": (2 * h, 2 * H),
        "bridge_b": (2 * H,),
        "dec0_W": (d + 2 * h + H, 4 * H),
        "dec0_b": (4 * H,),
        "dec1_W": (H + H, 4 * H),
        "dec1_b": (4 * H,),
    }
    if cfg.attention == "additive":
        shapes.update({"attn_enc_W": (2 * h, H), "attn_dec_W": (H, H), "attn_v": (H,)})
    elif cfg.attention == "dot":
        shapes.update({"attn_W": (H, 2 * h)})
    else:
        raise ValueError(f"unknown attention {cfg.attention!r}")
    shapes.update({"out_W": (H + 2 * h, V), "out_b": (V,)})
    if cfg.copy_enabled:
        shapes.update({"gen_W": (H + 2 * h + d, 1), "gen_b": (1,)})
    return shapes


def init_params(cfg: ModelConfig, seed: int = 0) -> Seq2SeqParams:
    if cfg.vocab_size <= UNK:
        raise ValueError("vocabulary must include the four reserved symbols")
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith("_b"):
            data = np.zeros(shape)
        else:
            data = rng.uniform(-cfg.init_scale, cfg.init_scale, size=shape)
        tensors[name] = ad.parameter(data)
    return Seq2SeqParams(cfg, tensors)


# -- batching ---------------------------------------------------------------

@dataclass
class Batch:
    """Id-encoded, padded examples.

    ``src`` holds vocabulary ids (OOV -> UNK); ``src_ext`` holds extended ids
    where the j-th distinct OOV token of an example gets ``V + j``.  Targets
    (when present) are extended ids in copy mode and plain ids otherwise,
    each terminated by STOP.
    """

    src: np.ndarray
    src_ext: np.ndarray
    src_mask: np.ndarray
    oovs: list[list[str]]
    tgt: np.ndarray | None = None
    tgt_mask: np.ndarray | None = None

    @property
    def n_ext(self) -> int:
        return max((len(o) for o in self.oovs), default=0)


@dataclass
class Vocab:
    """Model vocabulary: four reserved symbols followed by tokens."""

    itos: list[str]
    stoi: dict[str, int] = field(init=False)

    def __post_init__(self):
        if tuple(self.itos[:4]) != SPECIALS:
            raise ValueError("vocabulary must start with the reserved symbols")
        self.stoi = {s: i for i, s in enumerate(self.itos)}

    @classmethod
    def from_tokens(cls, tokens) -> "Vocab":
        seen = dict.fromkeys(t for t in tokens if t not in SPECIALS)
        return cls(list(SPECIALS) + list(seen))

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, tok: str) -> bool:
        return tok in self.stoi

    def id(self, tok: str) -> int:
        return self.stoi.get(tok, UNK)


def encode_example(vocab: Vocab, src_tokens, tgt_tokens=None, copy: bool = False):
    src = [vocab.id(t) for t in src_tokens]
    oovs: list[str] = []
    src_ext = []
    for t, i in zip(src_tokens, src):
        if i == UNK and copy:
            if t not in oovs:
                oovs.append(t)
            src_ext.append(len(vocab) + oovs.index(t))
        else:
            src_ext.append(i)
    tgt = None
    if tgt_tokens is not None:
        tgt = []
        for t in tgt_tokens:
            i = vocab.id(t)
            if i == UNK and copy and t in oovs:
                i = len(vocab) + oovs.index(t)
            tgt.append(i)
        tgt.append(STOP)
    return src, src_ext, oovs, tgt


def make_batch(vocab: Vocab, examples, copy: bool = False) -> Batch:
    """``examples``: sequence of (src_tokens, tgt_tokens or None)."""
    enc = [encode_example(vocab, s, t, copy) for s, t in examples]
    if any(len(e[0]) == 0 for e in enc):
        raise EmptyInput("empty input sequence")
    B = len(enc)
    T = max(len(e[0]) for e in enc)
    src = np.full((B, T), PAD, dtype=np.int64)
    src_ext = np.full((B, T), PAD, dtype=np.int64)
    mask = np.zeros((B, T))
    for b, (s, se, _, _) in enumerate(enc):
        src[b, : len(s)] = s
        src_ext[b, : len(s)] = se
        mask[b, : len(s)] = 1.0
    batch = Batch(src, src_ext, mask, [e[2] for e in enc])
    if all(e[3] is not None for e in enc):
        M = max(len(e[3]) for e in enc)
        tgt = np.full((B, M), PAD, dtype=np.int64)
        tmask = np.zeros((B, M))
        for b, e in enumerate(enc):
            tgt[b, : len(e[3])] = e[3]
            tmask[b, : len(e[3])] = 1.0
        batch.tgt, batch.tgt_mask = tgt, tmask
    return batch


# -- forward pieces ---------------------------------------------------------

def _dropout(x: Tensor, rate: float, rng: np.random.Generator | None) -> Tensor:
    if rng is None or rate <= 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * keep


@dataclass
class EncoderOutput:
    states: Tensor        # (B, T, 2h)
    mask: np.ndarray      # (B, T)
    final: Tensor         # (B, 2h): last forward state ++ first backward state
    attn_keys: Tensor | None = None


@dataclass
class DecoderState:
    h: list[Tensor]
    c: list[Tensor]

    def select(self, idx: np.ndarray) -> "DecoderState":
        return DecoderState([x[idx] for x in self.h], [x[idx] for x in self.c])


def encode(params: Seq2SeqParams, src: np.ndarray, mask: np.ndarray | None = None,
           rng: np.random.Generator | None = None) -> EncoderOutput:
    """Run the bidirectional encoder.  ``rng`` given means training mode."""
    src = np.atleast_2d(np.asarray(src))
    if src.shape[1] == 0:
        raise EmptyInput("empty input sequence")
    if mask is None:
        mask = np.ones(src.shape)
    cfg = params.config
    B, T = src.shape
    x = ad.embedding(params["embed"], src)                   # (B, T, d)
    m = mask[:, :, None]
    outs = {}
    finals = {}
    for direction, steps in (("fwd", range(T)), ("bwd", range(T - 1, -1, -1))):
        W, b = params[f"enc_{direction}_W"], params[f"enc_{direction}_b"]
        h = Tensor(np.zeros((B, cfg.h)))
        c = Tensor(np.zeros((B, cfg.h)))
        seq = [None] * T
        for t in steps:
            h_new, c_new = ad.lstm_cell(x[:, t, :], h, c, W, b)
            mt = m[:, t, :]
            h = h_new * mt + h * (1.0 - mt)
            c = c_new * mt + c * (1.0 - mt)
            seq[t] = h_new * mt
        outs[direction] = ad.stack(seq, axis=1)
        finals[direction] = h
    states = ad.concat([outs["fwd"], outs["bwd"]], axis=-1)
    states = _dropout(states, cfg.dropout_rate, rng)
    final = ad.concat([finals["fwd"], finals["bwd"]], axis=-1)
    keys = states @ params["attn_enc_W"] if cfg.attention == "additive" else None
    return EncoderOutput(states, mask, final, keys)


def init_decoder_state(params: Seq2SeqParams, enc: EncoderOutput) -> DecoderState:
    H = params.config.dec_hidden
    init = ad.tanh(enc.final @ params["bridge_W"] + params["bridge_b"])
    B = enc.final.shape[0]
    zeros = Tensor(np.zeros((B, H)))
    return DecoderState([init[:, :H], init[:, H:]], [zeros, zeros])


def attention_scores(params: Seq2SeqParams, enc: EncoderOutput, query: Tensor) -> Tensor:
    if params.config.attention == "additive":
        q = query @ params["attn_dec_W"]                       # (B, H)
        keys = enc.attn_keys if enc.attn_keys is not None else enc.states @ params["attn_enc_W"]
        e = ad.tanh(keys + q.reshape(q.shape[0], 1, q.shape[1]))
        return e @ params["attn_v"]                            # (B, T)
    q = query @ params["attn_W"]                               # (B, 2h)
    return (enc.states @ q.reshape(q.shape[0], q.shape[1], 1)).reshape(q.shape[0], -1)


def attend(params: Seq2SeqParams, enc: EncoderOutput, query: Tensor) -> tuple[Tensor, Tensor]:
    """Attention weights over encoder states and their weighted average."""
    scores = attention_scores(params, enc, query) + Tensor((1.0 - enc.mask) * _NEG)
    alpha = ad.softmax(scores, axis=-1)
    B, T = alpha.shape
    context = (alpha.reshape(B, 1, T) @ enc.states).reshape(B, -1)
    return context, alpha


@dataclass
class StepOutput:
    dist: Tensor              # (B, V) or (B, V + n_ext) probabilities
    log_dist: Tensor | None   # log of dist, computed stably when copy is off
    state: DecoderState
    alpha: Tensor
    p_gen: Tensor | None
    p_vocab: Tensor | None = None  # generator distribution before mixing


def decode_step(params: Seq2SeqParams, prev_ids: np.ndarray, state: DecoderState, enc: EncoderOutput,
                src_ext: np.ndarray | None = None, n_ext: int = 0,
                rng: np.random.Generator | None = None, force_p_gen: float | None = None) -> StepOutput:
    """One decoder step: attend with the previous top-layer state, feed the
    previous token and the attention context through both LSTM layers, then
    produce the output distribution (mixed with the copy distribution when
    copying is enabled)."""
    cfg = params.config
    V = cfg.vocab_size
    prev_ids = np.where(np.asarray(prev_ids) >= V, UNK, prev_ids)
    y = ad.embedding(params["embed"], prev_ids)                          # (B, d)
    context, alpha = attend(params, enc, state.h[-1])
    h0, c0 = ad.lstm_cell(ad.concat([y, context]), state.h[0], state.c[0], params["dec0_W"], params["dec0_b"])
    h0d = _dropout(h0, cfg.dropout_rate, rng)
    h1, c1 = ad.lstm_cell(h0d, state.h[1], state.c[1], params["dec1_W"], params["dec1_b"])
    feat = _dropout(ad.concat([h1, context]), cfg.dropout_rate, rng)
    logits = feat @ params["out_W"] + params["out_b"]
    new_state = DecoderState([h0, h1], [c0, c1])
    if not cfg.copy_enabled:
        log_p = ad.log_softmax(logits)
        dist = ad.exp(log_p)
        return StepOutput(dist, log_p, new_state, alpha, None, dist)

    p_vocab = ad.softmax(logits)
    if force_p_gen is not None:
        p_gen = Tensor(np.full((logits.shape[0], 1), float(force_p_gen)))
    else:
        p_gen = ad.sigmoid(ad.concat([h1, context, y]) @ params["gen_W"] + params["gen_b"])
    B, T = alpha.shape
    onehot = np.zeros((B, T, V + n_ext))
    onehot[np.arange(B)[:, None], np.arange(T)[None, :], src_ext] = 1.0
    # padding positions carry zero attention, so their one-hot is harmless
    copy_dist = (alpha.reshape(B, 1, T) @ Tensor(onehot)).reshape(B, V + n_ext)
    gen = p_vocab * p_gen
    if n_ext:
        gen = ad.concat([gen, Tensor(np.zeros((B, n_ext)))])
    dist = gen + copy_dist * (1.0 - p_gen)
    return StepOutput(dist, None, new_state, alpha, p_gen, p_vocab)


def step_log_probs(out: StepOutput) -> Tensor:
    return out.log_dist if out.log_dist is not None else ad.log(out.dist)


def loss(params: Seq2SeqParams, batch: Batch, rng: np.random.Generator | None = None) -> Tensor:
    """Mean over examples of the per-token negative log-likelihood of the
    target under teacher forcing."""
    if batch.tgt is None:
        raise ValueError("batch has no targets")
    cfg = params.config
    enc = encode(params, batch.src, batch.src_mask, rng)
    state = init_decoder_state(params, enc)
    B, M = batch.tgt.shape
    n_ext = batch.n_ext if cfg.copy_enabled else 0
    prev = np.full(B, START, dtype=np.int64)
    rows = np.arange(B)
    total = None
    for t in range(M):
        out = decode_step(params, prev, state, enc, batch.src_ext, n_ext, rng)
        gold = batch.tgt[:, t]
        if out.log_dist is not None:
            lp = out.log_dist[rows, gold]
        else:
            # only gather real steps so padded targets never hit log(0)
            live = batch.tgt_mask[:, t] > 0
            safe = np.where(live, gold, STOP)
            lp = ad.log(out.dist[rows, safe])
        nll = lp * Tensor(-batch.tgt_mask[:, t])
        total = nll if total is None else total + nll
        state = out.state
        prev = gold
    lengths = batch.tgt_mask.sum(axis=1)
    return (total * Tensor(1.0 / lengths)).sum() * (1.0 / B)
