"""Checkpoint container.

Layout::

    b"AGCKPT"  magic
    uint16     format version (little-endian)
    uint64     header length in bytes
    header     UTF-8 JSON: hyperparameters, vocabulary, tensor names/shapes
               in storage order, optimizer scalars, SHA-256 of the payload
    payload    float64 little-endian tensor data, concatenated in order
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .model import ModelConfig, Seq2SeqParams, Vocab
from .train import OptimizerState

MAGIC = b"AGCKPT"
VERSION = 1


class CheckpointError(ValueError):
    pass


class IntegrityError(CheckpointError):
    pass


def _entries(params: Seq2SeqParams, opt: OptimizerState | None):
    for name in params.names():
        yield name, params[name].data
    if opt is not None:
        for name in params.names():
            if name in opt.m:
                yield f"adam_m/{name}", opt.m[name]
                yield f"adam_v/{name}", opt.v[name]


def dumps(params: Seq2SeqParams, vocab: Vocab, opt: OptimizerState | None = None, extra: dict | None = None) -> bytes:
    entries = list(_entries(params, opt))
    payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for _, a in entries)
    header = {
        "format_version": VERSION,
        "hyperparams": asdict(params.config),
        "vocab": vocab.itos,
        "tensors": [{"name": n, "shape": list(a.shape)} for n, a in entries],
        "optimizer": None if opt is None else {"step": opt.step, "learning_rate": opt.learning_rate},
        "extra": extra or {},
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    hb = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return MAGIC + struct.pack("<HQ", VERSION, len(hb)) + hb + payload


def loads(blob: bytes):
    """Returns ``(params, vocab, optimizer_state_or_None, extra)``."""
    if not blob.startswith(MAGIC):
        raise CheckpointError("not a checkpoint file")
    off = len(MAGIC)
    try:
        version, hlen = struct.unpack_from("<HQ", blob, off)
    except struct.error as exc:
        raise IntegrityError("truncated checkpoint header") from exc
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    off += struct.calcsize("<HQ")
    try:
        header = json.loads(blob[off:off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IntegrityError("corrupt checkpoint header") from exc
    payload = blob[off + hlen:]
    if hashlib.sha256(payload).hexdigest() != header["sha256"]:
        raise IntegrityError("checkpoint payload hash mismatch")
    cfg = ModelConfig(**header["hyperparams"])
    arrays = {}
    pos = 0
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape)) * 8
        arrays[entry["name"]] = np.frombuffer(payload[pos:pos + n], dtype="<f8").reshape(shape).astype(np.float64)
        pos += n
    if pos != len(payload):
        raise IntegrityError("payload size does not match declared tensors")
    tensors = {k: ad.parameter(v) for k, v in arrays.items() if "/" not in k}
    params = Seq2SeqParams(cfg, tensors)
    opt = None
    if header["optimizer"] is not None:
        opt = OptimizerState(
            learning_rate=header["optimizer"]["learning_rate"],
            step=header["optimizer"]["step"],
            m={k.split("/", 1)[1]: v.copy() for k, v in arrays.items() if k.startswith("adam_m/")},
            v={k.split("/", 1)[1]: v.copy() for k, v in arrays.items() if k.startswith("adam_v/")},
        )
    return params, Vocab(header["vocab"]), opt, header["extra"]


def save(path: str | Path, params: Seq2SeqParams, vocab: Vocab, opt: OptimizerState | None = None, extra: dict | None = None) -> None:
    Path(path).write_bytes(dumps(params, vocab, opt, extra))


def load(path: str | Path):
    return loads(Path(path).read_bytes())
