"""Sequence-to-sequence model with attention and an optional copy gate."""
from .autodiff import Tensor, no_grad
from .beam import BeamHypothesis, Prediction, beam_search, beam_search_fn, greedy, predict
from .model import (
    PAD, SPECIALS, START, STOP, UNK, Batch, EmptyInput, ModelConfig, Seq2SeqParams, Vocab,
    attend, decode_step, encode, init_decoder_state, init_params, loss, make_batch,
)
from .train import NumericalError, OptimizerState, TrainConfig, TrainResult, evaluate_loss, train

__all__ = [
    "Tensor", "no_grad", "BeamHypothesis", "Prediction", "beam_search", "beam_search_fn", "greedy", "predict",
    "PAD", "SPECIALS", "START", "STOP", "UNK", "Batch", "EmptyInput", "ModelConfig", "Seq2SeqParams", "Vocab",
    "attend", "decode_step", "encode", "init_decoder_state", "init_params", "loss", "make_batch",
    "NumericalError", "OptimizerState", "TrainConfig", "TrainResult", "evaluate_loss", "train",
]
