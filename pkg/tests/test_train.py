import numpy as np
import pytest

from assertgen.neural import checkpoint
from assertgen.neural.checkpoint import CheckpointError, IntegrityError
from assertgen.neural.model import ModelConfig, Vocab, init_params
from assertgen.neural.train import (
    NumericalError, OptimizerState, TrainConfig, apply_update, clip_gradients, evaluate_loss, history_csv, train,
)
from assertgen.synth import toy_corpus
from helpers import tiny_model


def _toy(n=6, seed=0, copy=False, d=16, h=16):
    taps = toy_corpus(n, seed=seed)
    pairs = [(t.context_tokens, t.target_tokens) for t in taps]
    vocab = Vocab.from_tokens(sorted({x for c, t in pairs for x in (*c, *t)}))
    params = init_params(ModelConfig(len(vocab), d=d, h=h, copy_enabled=copy), seed=seed)
    return params, vocab, pairs


def test_single_tap_memorised():
    params, vocab, pairs = _toy(n=1, d=16, h=16)
    params.config.dropout_rate = 0.0
    # the default 1e-4 rate is tuned for full-size corpora; a single TAP
    # needs a larger step to converge within 200 updates
    cfg = TrainConfig(batch_size=1, max_epochs=200, patience=None, learning_rate=0.05)
    result = train(params, vocab, pairs, None, cfg)
    assert len(result.history) == 200
    assert result.history[-1]["train_loss"] < 0.01
    assert result.optimizer.step == 200


def test_patience_zero_means_one_evaluation():
    params, vocab, pairs = _toy()
    result = train(params, vocab, pairs[:4], pairs[4:], TrainConfig(batch_size=2, max_epochs=10, patience=0))
    assert len(result.history) == 1


def test_best_checkpoint_tracks_minimum_validation_loss():
    params, vocab, pairs = _toy(n=8)
    cfg = TrainConfig(batch_size=4, max_epochs=6, patience=None, learning_rate=0.02)
    result = train(params, vocab, pairs[:6], pairs[6:], cfg)
    vals = [r["val_loss"] for r in result.history]
    assert result.best_epoch == 1 + int(np.argmin(vals))
    again = evaluate_loss(result.best_params, vocab, pairs[6:])
    assert again == pytest.approx(min(vals), abs=1e-12)
    # losses at successive new bests never increase, by construction
    bests = [v for i, v in enumerate(vals) if v == min(vals[: i + 1])]
    assert bests == sorted(bests, reverse=True)


def test_early_stopping_counts_evaluations_without_improvement():
    params, vocab, pairs = _toy()
    # a zero learning rate never improves after the first evaluation
    cfg = TrainConfig(batch_size=3, max_epochs=20, patience=3, learning_rate=0.0)
    result = train(params, vocab, pairs[:4], pairs[4:], cfg)
    assert len(result.history) == 4


def test_resume_continues_step_count():
    params, vocab, pairs = _toy()
    cfg = TrainConfig(batch_size=2, max_epochs=2, patience=None, learning_rate=0.01)
    first = train(params, vocab, pairs, None, cfg)
    assert first.optimizer.step == 6
    blob = checkpoint.dumps(first.params, vocab, first.optimizer, {"epoch": 2})
    p2, v2, opt2, extra = checkpoint.loads(blob)
    second = train(p2, v2, pairs, None, cfg, opt_state=opt2, start_epoch=extra["epoch"])
    assert second.optimizer.step == 12
    assert [r["epoch"] for r in second.history] == [3, 4]


def test_nan_loss_raises_with_diagnostics():
    params, vocab, pairs = _toy()
    params["out_b"].data[0] = np.nan
    with pytest.raises(NumericalError) as info:
        train(params, vocab, pairs, None, TrainConfig(batch_size=2, max_epochs=1))
    assert info.value.diagnostics["epoch"] == 1


def test_clip_and_sgd_update():
    params, v = tiny_model(copy=False)
    for t in params.tensors.values():
        t.grad = np.full_like(t.data, 3.0)
    n = params.num_parameters()
    norm = clip_gradients(params, 1.0)
    assert norm == pytest.approx(3.0 * np.sqrt(n))
    total = np.sqrt(sum(float((t.grad ** 2).sum()) for t in params.tensors.values()))
    assert total == pytest.approx(1.0)
    before = params["out_b"].data.copy()
    apply_update(params, OptimizerState(learning_rate=0.5), TrainConfig(optimizer="sgd"))
    np.testing.assert_allclose(params["out_b"].data, before - 0.5 * params["out_b"].grad)


def test_adam_first_step_moves_by_lr():
    params, _ = tiny_model(copy=False)
    for t in params.tensors.values():
        t.grad = np.full_like(t.data, 0.2)
    before = params["embed"].data.copy()
    apply_update(params, OptimizerState(learning_rate=1e-3), TrainConfig())
    np.testing.assert_allclose(before - params["embed"].data, 1e-3, rtol=1e-6)


def test_history_csv():
    rows = [{"epoch": 1, "train_loss": 0.5, "val_loss": 0.25, "seconds": 1.5}]
    assert history_csv(rows) == "epoch,train_loss,val_loss,seconds\n1,0.5,0.25,1.5\n"
    assert history_csv(rows, include_seconds=False) == "epoch,train_loss,val_loss\n1,0.5,0.25\n"


# -- checkpoints --------------------------------------------------------------

def test_checkpoint_round_trip(tmp_path):
    params, vocab = tiny_model(copy=True, attention="dot", seed=3)
    opt = OptimizerState(learning_rate=0.003, step=17, m={"embed": np.ones((12, 4))}, v={"embed": np.full((12, 4), 2.0)})
    path = tmp_path / "model.bin"
    checkpoint.save(path, params, vocab, opt, {"mode": "raw_copy"})
    p2, v2, o2, extra = checkpoint.load(path)
    assert p2.config == params.config
    assert v2.itos == vocab.itos
    assert p2.names() == params.names()
    for name in params.names():
        assert np.array_equal(p2[name].data, params[name].data)
    assert (o2.step, o2.learning_rate) == (17, 0.003)
    assert np.array_equal(o2.m["embed"], opt.m["embed"]) and np.array_equal(o2.v["embed"], opt.v["embed"])
    assert extra == {"mode": "raw_copy"}
    assert checkpoint.dumps(p2, v2, o2, extra) == path.read_bytes()


def test_checkpoint_tamper_detected():
    params, vocab = tiny_model(copy=False)
    blob = bytearray(checkpoint.dumps(params, vocab))
    blob[-3] ^= 0xFF
    with pytest.raises(IntegrityError):
        checkpoint.loads(bytes(blob))
    with pytest.raises(CheckpointError):
        checkpoint.loads(b"not a checkpoint")
    with pytest.raises(IntegrityError):
        checkpoint.loads(bytes(blob[:12]))
