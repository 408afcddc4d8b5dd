"""Command-line pipeline: mine -> abstract -> train -> infer -> eval.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 integrity failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import tarfile
import tempfile
import zipfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

_threads = os.environ.get("ASSERTGEN_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

from . import formats  # noqa: E402
from .abstractor import (  # noqa: E402
    TERM_PREFIX, TypedIdOverflow, Vocabulary, abstract_tap, build_vocabulary, unabstract,
)
from .config import PipelineConfig  # noqa: E402
from .jlex import KEYWORDS, OPERATORS, SEPARATORS  # noqa: E402
from .miner import (  # noqa: E402
    PLACEHOLDER, EmptyDataset, MiningStats, filter_taps, mine_project, project_dirs, split_dataset,
)

log = logging.getLogger("assertgen")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_INTEGRITY = 0, 2, 3, 4
SPLITS = ("train", "val", "test")


class CommandError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _threads_cap() -> int:
    try:
        return max(1, int(os.environ.get("ASSERTGEN_THREADS", "1")))
    except ValueError:
        return 1


# -- mine -------------------------------------------------------------------

def _unpack(corpus: Path, tmp: Path) -> Path:
    if corpus.is_dir():
        return corpus
    if zipfile.is_zipfile(corpus):
        with zipfile.ZipFile(corpus) as zf:
            zf.extractall(tmp)
        return tmp
    if tarfile.is_tarfile(corpus):
        with tarfile.open(corpus) as tf:
            if hasattr(tarfile, "data_filter"):
                tf.extractall(tmp, filter="data")
            else:
                tf.extractall(tmp)
        return tmp
    raise CommandError(f"corpus is neither a directory nor an archive: {corpus}")


def _mine_one(args):
    project, require = args
    stats = MiningStats()
    taps = mine_project(Path(project), require, stats)
    return taps, stats


def _merge_stats(total: MiningStats, part: MiningStats) -> None:
    for k, v in vars(part).items():
        setattr(total, k, getattr(total, k) + v)


def cmd_mine(cfg: PipelineConfig) -> int:
    if not cfg.corpus_dir or not Path(cfg.corpus_dir).exists():
        raise CommandError(f"corpus not found: {cfg.corpus_dir}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        root = _unpack(Path(cfg.corpus_dir), Path(tmp))
        projects = project_dirs(root)
        if not projects:
            raise CommandError(f"empty corpus: {cfg.corpus_dir}")
        jobs = [(str(p), cfg.require_junit4) for p in projects]
        workers = min(_threads_cap(), len(jobs))
        if workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                results = list(pool.map(_mine_one, jobs))
        else:
            results = [_mine_one(j) for j in jobs]
    taps, stats = [], MiningStats()
    for t, s in results:  # results keep sorted project order
        taps.extend(t)
        _merge_stats(stats, s)
    if not taps:
        raise CommandError("no test-assert pairs found in corpus")
    vocab = build_vocabulary(taps, cfg.vocab_capacity)
    kept, report = filter_taps(taps, vocab, cfg.max_context_tokens)
    if not kept:
        raise CommandError("every TAP was filtered out")
    parts = split_dataset(kept, cfg.split_ratios, cfg.seed)
    formats.write_taps(out / "taps.jsonl", kept)
    for name, part in zip(SPLITS, parts):
        formats.write_taps(out / f"{name}.jsonl", part)
    (out / "vocab.tsv").write_text(vocab.dumps(), encoding="utf-8")
    full = build_vocabulary(taps, capacity=10**9)
    (out / "zipf.csv").write_text(
        "rank,frequency\n" + "".join(f"{r},{f}\n" for r, f in full.zipf_report()), encoding="utf-8"
    )
    formats.write_json(out / "filter_report.json", {**vars(report), "mining": vars(stats),
                                                    "splits": {n: len(p) for n, p in zip(SPLITS, parts)}})
    log.info("mined %d TAPs, kept %d", report.input_count, report.kept)
    return EXIT_OK


# -- abstract ---------------------------------------------------------------

def _read_vocab(path: Path, capacity: int | None = None) -> Vocabulary:
    if not path.exists():
        raise CommandError(f"vocabulary file not found: {path}")
    v = Vocabulary.loads(path.read_text(encoding="utf-8"))
    if capacity is not None and capacity < len(v):
        v = Vocabulary(v.tokens[:capacity], capacity)
    return v


def cmd_abstract(cfg: PipelineConfig, data_dir: str | Path | None = None, vocab_path: str | Path | None = None) -> int:
    data = Path(data_dir or cfg.output_dir)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    idioms = _read_vocab(Path(vocab_path) if vocab_path else data / "vocab.tsv", cfg.vocab_capacity)
    report = {}
    found = False
    for name in SPLITS:
        src = data / f"{name}.jsonl"
        if not src.exists():
            continue
        found = True
        taps = formats.read_taps(src)
        kept, seen = [], set()
        overflow = duplicate = 0
        for tap in taps:
            try:
                a = abstract_tap(tap, idioms, cfg.per_category_cap)
            except TypedIdOverflow:
                overflow += 1
                continue
            back_ctx = unabstract(a.context_tokens, a.map)
            back_tgt = unabstract(a.target_tokens, a.map)
            if back_ctx.tokens != tap.context_tokens or back_tgt.tokens != tap.target_tokens \
                    or back_ctx.unresolved or back_tgt.unresolved:
                raise CommandError(f"abstraction round trip failed for {tap.id}", EXIT_INTEGRITY)
            key = (tuple(a.context_tokens), tuple(a.target_tokens))
            if key in seen:
                duplicate += 1
                continue
            seen.add(key)
            kept.append(a)
        formats.write_abstract(out / f"abstract_{name}.jsonl", kept)
        report[name] = {"input": len(taps), "kept": len(kept), "removed_overflow": overflow,
                        "removed_duplicate": duplicate}
    if not found:
        raise CommandError(f"no split files in {data}")
    (out / "idioms.tsv").write_text(idioms.dumps(), encoding="utf-8")
    formats.write_json(out / "abstract_report.json", report)
    return EXIT_OK


# -- model vocabularies -----------------------------------------------------

def abstract_model_tokens(idioms: Vocabulary, per_category_cap: int) -> list[str]:
    """Closed output vocabulary for abstract mode: idioms, every typed ID
    up to the cap, and all structural Java tokens."""
    toks = list(idioms)
    extra = {PLACEHOLDER, *KEYWORDS, *OPERATORS, *SEPARATORS, "true", "false", "null"}
    extra |= {f"{p}_{k}" for p in TERM_PREFIX.values() for k in range(per_category_cap)}
    have = set(toks)
    return toks + sorted(extra - have)


def _pairs_raw(path: Path):
    return [(t.context_tokens, t.target_tokens) for t in formats.read_taps(path)] if path.exists() else []


def _pairs_abstract(path: Path):
    return [(a.context_tokens, a.target_tokens) for a in formats.read_abstract(path)] if path.exists() else []


# -- train ------------------------------------------------------------------

def cmd_train(cfg: PipelineConfig, data_dir: str | Path | None = None, resume: str | Path | None = None) -> int:
    from .neural import ModelConfig, NumericalError, TrainConfig, Vocab, init_params, train
    from .neural import checkpoint as ckpt
    from .neural.train import history_csv

    data = Path(data_dir or cfg.output_dir)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.mode == "raw_copy":
        train_pairs, val_pairs = _pairs_raw(data / "train.jsonl"), _pairs_raw(data / "val.jsonl")
    else:
        train_pairs, val_pairs = _pairs_abstract(data / "abstract_train.jsonl"), _pairs_abstract(data / "abstract_val.jsonl")
    if not train_pairs:
        raise CommandError(f"no training data for mode {cfg.mode} in {data}")

    opt, start_epoch = None, 0
    if resume:
        params, vocab, opt, extra = _load_checkpoint(resume)
        start_epoch = int(extra.get("epoch", 0))
        if extra.get("mode") != cfg.mode:
            raise CommandError(f"checkpoint mode {extra.get('mode')} does not match {cfg.mode}")
    else:
        if cfg.mode == "raw_copy":
            vocab = Vocab.from_tokens(_read_vocab(data / "vocab.tsv", cfg.vocab_capacity))
        else:
            idioms_path = data / "idioms.tsv"
            idioms = _read_vocab(idioms_path if idioms_path.exists() else data / "vocab.tsv", cfg.vocab_capacity)
            vocab = Vocab.from_tokens(abstract_model_tokens(idioms, cfg.per_category_cap))
        mcfg = ModelConfig(vocab_size=len(vocab), d=cfg.model.d, h=cfg.model.h, copy_enabled=cfg.copy_enabled,
                           dropout_rate=cfg.model.dropout_rate, attention=cfg.model.attention)
        params = init_params(mcfg, seed=cfg.seed)
    tcfg = TrainConfig(batch_size=cfg.train.batch_size, max_epochs=cfg.train.max_epochs, patience=cfg.train.patience,
                       learning_rate=cfg.train.learning_rate, optimizer=cfg.train.optimizer,
                       clip_norm=cfg.train.clip_norm, seed=cfg.seed)
    try:
        result = train(params, vocab, train_pairs, val_pairs or None, tcfg, opt, start_epoch)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    last_epoch = result.history[-1]["epoch"] if result.history else start_epoch
    extra = {"mode": cfg.mode, "epoch": last_epoch, "best_epoch": result.best_epoch}
    ckpt.save(out / "checkpoint.bin", result.best_params, vocab, result.optimizer, extra)
    ckpt.save(out / "last.bin", result.params, vocab, result.optimizer, extra)
    # Losses are reproducible; wall-clock seconds are not, so they get a
    # file of their own.
    _write_history(out / "history.csv", history_csv(result.history, include_seconds=False), bool(resume))
    seconds = "epoch,seconds\n" + "".join(f"{r['epoch']},{r['seconds']!r}\n" for r in result.history)
    _write_history(out / "train_seconds.csv", seconds, bool(resume))
    return EXIT_OK


def _write_history(path: Path, text: str, append: bool) -> None:
    if append and path.exists():
        text = path.read_text(encoding="utf-8") + text.split("\n", 1)[1]
    path.write_text(text, encoding="utf-8")


def _load_checkpoint(path):
    from .neural import checkpoint as ckpt

    path = Path(path)
    if not path.exists():
        raise CommandError(f"checkpoint not found: {path}")
    try:
        return ckpt.load(path)
    except ckpt.CheckpointError as exc:
        raise CommandError(f"checkpoint {path}: {exc}", EXIT_INTEGRITY) from exc


# -- infer ------------------------------------------------------------------

def cmd_infer(cfg: PipelineConfig, checkpoint: str | Path, taps_file: str | Path, k: int, out_file: str | Path) -> int:
    from .neural import predict

    params, vocab, _, extra = _load_checkpoint(checkpoint)
    mode = extra.get("mode", cfg.mode)
    taps_file = Path(taps_file)
    if not taps_file.exists():
        raise CommandError(f"TAP file not found: {taps_file}")
    rows = []
    if mode == "abstract":
        for a in formats.read_abstract(taps_file):
            pred = predict(params, vocab, a.context_tokens, k, cfg.max_target_len)
            raw, unresolved = [], []
            for cand in pred.candidates:
                u = unabstract(cand, a.map)
                raw.append(formats.join(u.tokens))
                unresolved.append(u.unresolved)
            rows.append({"id": a.raw_id, "candidates": raw, "log_probs": pred.log_probs,
                         "abstract_candidates": [formats.join(c) for c in pred.candidates],
                         "unresolved": unresolved})
    else:
        for t in formats.read_taps(taps_file):
            pred = predict(params, vocab, t.context_tokens, k, cfg.max_target_len)
            rows.append({"id": t.id, "candidates": [formats.join(c) for c in pred.candidates],
                         "log_probs": pred.log_probs})
    formats.write_jsonl(out_file, rows)
    return EXIT_OK


# -- eval -------------------------------------------------------------------

def _read_predictions(path) -> dict[str, list[list[str]]]:
    path = Path(path)
    if not path.exists():
        raise CommandError(f"predictions not found: {path}")
    return {r["id"]: [formats.split(c) for c in r["candidates"]] for r in formats.read_jsonl(path)}


def cmd_eval(cfg: PipelineConfig, gold_file, out_dir, raw_predictions=None, abstract_predictions=None,
             train_file=None, vocab_file=None) -> int:
    from . import evalkit

    gold_file = Path(gold_file)
    if not gold_file.exists():
        raise CommandError(f"gold TAP file not found: {gold_file}")
    gold = {t.id: t.target_tokens for t in formats.read_taps(gold_file)}
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = {m: _read_predictions(p) for m, p in (("raw", raw_predictions), ("abstract", abstract_predictions)) if p}
    if not runs:
        raise CommandError("no predictions given")
    vocab = _read_vocab(Path(vocab_file), cfg.vocab_capacity) if vocab_file else None
    summary = {}
    for mode, preds in runs.items():
        width = max((len(c) for c in preds.values()), default=1)
        beams = [b for b in cfg.beam_sizes if b <= width] or [1]
        report = evalkit.evaluate(preds, gold, beams, vocab if mode == "raw" else None)
        formats.write_json(out / f"eval_{mode}.json", report.to_json())
        (out / f"edit_distance_{mode}.csv").write_text(report.histogram_csv(), encoding="utf-8")
        imperfect = [(preds[i][0] if preds[i] else [], gold[i]) for i in sorted(preds)
                     if i in gold and i not in set(report.perfect_ids)]
        samples = evalkit.bleu_bucket_sample(imperfect, 25, cfg.seed)
        formats.write_json(out / f"bleu_samples_{mode}.json", [
            {"range": f"{lo}-{hi}", "items": [{"prediction": formats.join(p), "gold": formats.join(g), "bleu4": s}
                                              for p, g, s in bucket]}
            for (lo, hi), bucket in zip(evalkit.BLEU_BUCKETS, samples)
        ])
        summary[mode] = report
        if train_file:
            train_targets = [t.target_tokens for t in formats.read_taps(train_file)]
            test_ids = [i for i in sorted(preds) if i in gold]
            table = []
            for k in (1, 5, 10):
                model = report.per_beam.get(k, {}).get("perfect_count")
                freq = evalkit.frequency_baseline(train_targets, [gold[i] for i in test_ids], k)
                table.append({"k": k, "frequency_model": freq, "learned_model": model})
            formats.write_json(out / f"baseline_{mode}.json", table)
    if len(runs) == 2:
        shared = set(runs["raw"]) & set(runs["abstract"])
        pp_r = {i for i in summary["raw"].perfect_ids if i in shared}
        pp_a = {i for i in summary["abstract"].perfect_ids if i in shared}
        ov = evalkit.overlap_metrics(pp_r, pp_a)
        data = ov.to_json()
        data["excluded_ids"] = len(set(runs["raw"]) ^ set(runs["abstract"]))
        formats.write_json(out / "overlap.json", data)
    return EXIT_OK


# -- timing -----------------------------------------------------------------

def cmd_timing(cfg: PipelineConfig, checkpoint, taps_file, out_file, limit: int | None = None) -> int:
    from . import evalkit
    from .neural import beam_search

    params, vocab, _, extra = _load_checkpoint(checkpoint)
    mode = extra.get("mode", cfg.mode)
    if mode == "abstract":
        inputs = [a.context_tokens for a in formats.read_abstract(taps_file)]
    else:
        inputs = [t.context_tokens for t in formats.read_taps(taps_file)]
    inputs = inputs[:limit] if limit else inputs
    if not inputs:
        raise CommandError("no inputs to time")
    result = evalkit.timing_harness(lambda x, k: beam_search(params, vocab, x, k, cfg.max_target_len), inputs, cfg.beam_sizes)
    formats.write_json(out_file, {"seconds_per_input": {str(k): v for k, v in result["seconds_per_input"].items()},
                                  "monotone": result["monotone"], "n_inputs": len(inputs)})
    return EXIT_OK


# -- argument parsing -------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--mode", choices=("raw_copy", "abstract"))
    common.add_argument("--seed", type=int)
    common.add_argument("--vocab-capacity", type=int)
    common.add_argument("--max-tokens", type=int, help="maximum context length in tokens")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="assertgen", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mine", parents=[common], help="mine TAPs from a corpus of Java projects")
    m.add_argument("corpus", help="directory (one project per subdirectory) or archive")
    m.add_argument("--require-junit4", action="store_true", default=None)

    a = sub.add_parser("abstract", parents=[common], help="abstract mined TAPs")
    a.add_argument("--data", help="directory holding train/val/test.jsonl (default: --out)")
    a.add_argument("--vocab", help="vocabulary file (default: DATA/vocab.tsv)")

    t = sub.add_parser("train", parents=[common], help="train a model")
    t.add_argument("--data")
    t.add_argument("--resume", help="checkpoint to continue from")
    t.add_argument("--epochs", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--patience", type=int)

    i = sub.add_parser("infer", parents=[common], help="generate asserts with beam search")
    i.add_argument("checkpoint")
    i.add_argument("taps", help="TAP file (abstract TAP file in abstract mode)")
    i.add_argument("--beam", type=int, default=None)
    i.add_argument("--output", required=True, help="predictions JSONL to write")

    e = sub.add_parser("eval", parents=[common], help="score predictions")
    e.add_argument("gold", help="raw TAP file with gold asserts")
    e.add_argument("--raw-predictions")
    e.add_argument("--abstract-predictions")
    e.add_argument("--train", help="training TAP file for the frequency baseline")
    e.add_argument("--vocab", help="vocabulary file for copy attribution")
    e.add_argument("--beam", type=int, nargs="*", help="beam sizes to report")

    tm = sub.add_parser("timing", parents=[common], help="time inference per beam size")
    tm.add_argument("checkpoint")
    tm.add_argument("taps")
    tm.add_argument("--output", required=True)
    tm.add_argument("--limit", type=int)
    tm.add_argument("--beam", type=int, nargs="*")
    return p


def config_from_args(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if args.mode:
        cfg.mode = args.mode
    if args.seed is not None:
        cfg.seed = args.seed
    if args.vocab_capacity is not None:
        cfg.vocab_capacity = args.vocab_capacity
    if args.max_tokens is not None:
        cfg.max_context_tokens = args.max_tokens
    if args.out:
        cfg.output_dir = args.out
    if getattr(args, "corpus", None):
        cfg.corpus_dir = args.corpus
    if getattr(args, "require_junit4", None):
        cfg.require_junit4 = True
    for flag, attr in (("epochs", "max_epochs"), ("lr", "learning_rate"), ("batch_size", "batch_size"),
                       ("patience", "patience")):
        v = getattr(args, flag, None)
        if v is not None:
            setattr(cfg.train, attr, v)
    beam = getattr(args, "beam", None)
    if isinstance(beam, list) and beam:
        cfg.beam_sizes = beam
    PipelineConfig.__post_init__(cfg)
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "mine":
            return cmd_mine(cfg)
        if args.command == "abstract":
            return cmd_abstract(cfg, args.data, args.vocab)
        if args.command == "train":
            return cmd_train(cfg, args.data, args.resume)
        if args.command == "infer":
            return cmd_infer(cfg, args.checkpoint, args.taps, args.beam or 5, args.output)
        if args.command == "eval":
            return cmd_eval(cfg, args.gold, cfg.output_dir, args.raw_predictions, args.abstract_predictions,
                            args.train, args.vocab)
        if args.command == "timing":
            return cmd_timing(cfg, args.checkpoint, args.taps, args.output, args.limit)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, EmptyDataset, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
