"""Adam/SGD training with early stopping on validation loss."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import Seq2SeqParams, Vocab, loss, make_batch

log = logging.getLogger(__name__)

Pair = tuple[Sequence[str], Sequence[str]]


class NumericalError(RuntimeError):
    def __init__(self, message: str, diagnostics: dict):
        super().__init__(f"{message}: {diagnostics}")
        self.diagnostics = diagnostics


@dataclass
class TrainConfig:
    batch_size: int = 32
    max_epochs: int = 20
    patience: int | None = 5
    learning_rate: float = 1e-4
    optimizer: str = "adam"  # or "sgd"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = 5.0
    seed: int = 0


@dataclass
class OptimizerState:
    learning_rate: float = 1e-4
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def clip_gradients(params: Seq2SeqParams, max_norm: float | None) -> float:
    grads = [t.grad for t in params.tensors.values() if t.grad is not None]
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads)))
    if max_norm is not None and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for g in grads:
            g *= scale
    return norm


def apply_update(params: Seq2SeqParams, state: OptimizerState, cfg: TrainConfig) -> None:
    state.step += 1
    lr = state.learning_rate
    if cfg.optimizer == "sgd":
        for t in params.tensors.values():
            if t.grad is not None:
                t.data -= lr * t.grad
        return
    if cfg.optimizer != "adam":
        raise ValueError(f"unknown optimizer {cfg.optimizer!r}")
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, t in params.tensors.items():
        if t.grad is None:
            continue
        m = state.m.setdefault(name, np.zeros_like(t.data))
        v = state.v.setdefault(name, np.zeros_like(t.data))
        m *= b1
        m += (1.0 - b1) * t.grad
        v *= b2
        v += (1.0 - b2) * t.grad * t.grad
        t.data -= lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps)


def evaluate_loss(params: Seq2SeqParams, vocab: Vocab, pairs: Sequence[Pair], batch_size: int = 32) -> float:
    """Mean per-example loss in inference mode (no dropout)."""
    from .autodiff import no_grad

    total = 0.0
    with no_grad():
        for i in range(0, len(pairs), batch_size):
            chunk = pairs[i:i + batch_size]
            batch = make_batch(vocab, chunk, copy=params.config.copy_enabled)
            total += float(loss(params, batch).data) * len(chunk)
    return total / max(len(pairs), 1)


@dataclass
class TrainResult:
    params: Seq2SeqParams
    best_params: Seq2SeqParams
    history: list[dict]
    optimizer: OptimizerState
    best_epoch: int


def train(params: Seq2SeqParams, vocab: Vocab, train_pairs: Sequence[Pair], val_pairs: Sequence[Pair] | None,
          config: TrainConfig, opt_state: OptimizerState | None = None, start_epoch: int = 0) -> TrainResult:
    """Train in place.  Validation loss (training loss when no validation set
    is given) is evaluated after every epoch; training stops once it has
    failed to improve for ``patience`` consecutive evaluations."""
    if not train_pairs:
        raise ValueError("no training data")
    rng = np.random.default_rng(config.seed + start_epoch)
    state = opt_state or OptimizerState(learning_rate=config.learning_rate)
    monitor = val_pairs if val_pairs else train_pairs
    history: list[dict] = []
    best_loss = float("inf")
    best = params.copy()
    best_epoch = start_epoch
    since_best = 0
    order = np.arange(len(train_pairs))
    for epoch in range(start_epoch + 1, start_epoch + config.max_epochs + 1):
        t0 = time.perf_counter()
        rng.shuffle(order)
        running, seen = 0.0, 0
        for i in range(0, len(order), config.batch_size):
            chunk = [train_pairs[j] for j in order[i:i + config.batch_size]]
            batch = make_batch(vocab, chunk, copy=params.config.copy_enabled)
            params.zero_grad()
            L = loss(params, batch, rng)
            value = float(L.data)
            if not np.isfinite(value):
                raise NumericalError("non-finite loss", {"epoch": epoch, "step": state.step, "loss": value})
            L.backward()
            gnorm = clip_gradients(params, config.clip_norm)
            if not np.isfinite(gnorm):
                raise NumericalError("non-finite gradient", {"epoch": epoch, "step": state.step, "grad_norm": gnorm})
            apply_update(params, state, config)
            running += value * len(chunk)
            seen += len(chunk)
        val = evaluate_loss(params, vocab, monitor, config.batch_size)
        if not np.isfinite(val):
            raise NumericalError("non-finite validation loss", {"epoch": epoch, "loss": val})
        history.append({
            "epoch": epoch,
            "train_loss": running / seen,
            "val_loss": val,
            "seconds": time.perf_counter() - t0,
        })
        log.info("epoch %d train %.4f val %.4f", epoch, running / seen, val)
        if val < best_loss:
            best_loss, best, best_epoch, since_best = val, params.copy(), epoch, 0
        else:
            since_best += 1
        if config.patience is not None and since_best >= config.patience:
            break
    return TrainResult(params, best, history, state, best_epoch)


def history_csv(history: Sequence[dict], include_seconds: bool = True) -> str:
    cols = ["epoch", "train_loss", "val_loss"] + (["seconds"] if include_seconds else [])
    lines = [",".join(cols)]
    for row in history:
        lines.append(",".join(str(row["epoch"]) if c == "epoch" else repr(float(row[c])) for c in cols))
    return "\n".join(lines) + "\n"
