"""Run mine -> abstract -> train -> infer -> eval on a generated toy corpus.

    python3 scripts/run_toy_pipeline.py --out /tmp/toy --projects 4 --tests 15
"""
import argparse
import json
import sys
from pathlib import Path

from assertgen.cli import main
from assertgen.synth import write_toy_project


def run(argv):
    code = main(argv)
    if code:
        sys.exit(f"step failed with exit code {code}: {' '.join(argv)}")


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="toy_run")
    p.add_argument("--projects", type=int, default=4)
    p.add_argument("--tests", type=int, default=15, help="tests per project")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    return p.parse_args()


if __name__ == "__main__":
    args = parse_args()
    out = Path(args.out)
    corpus, data = out / "corpus", out / "data"
    for i in range(args.projects):
        write_toy_project(corpus, f"proj{i}", args.tests, seed=args.seed + i)
    config = out / "config.json"
    config.write_text(json.dumps({
        "model": {"d": 32, "h": 32, "dropout_rate": 0.0},
        "train": {"max_epochs": args.epochs, "learning_rate": 0.01, "batch_size": 8, "patience": None},
    }))
    common = ["--config", str(config), "--seed", str(args.seed)]
    run(["mine", str(corpus), "--out", str(data), *common])
    run(["abstract", "--out", str(data), *common])
    preds = {}
    for mode, taps in (("raw_copy", "test.jsonl"), ("abstract", "abstract_test.jsonl")):
        run(["train", "--data", str(data), "--out", str(out / mode), "--mode", mode, *common])
        preds[mode] = out / mode / "predictions.jsonl"
        run(["infer", str(out / mode / "checkpoint.bin"), str(data / taps), "--beam", "5",
             "--output", str(preds[mode]), "--mode", mode, *common])
    run(["eval", str(data / "test.jsonl"), "--raw-predictions", str(preds["raw_copy"]),
         "--abstract-predictions", str(preds["abstract"]), "--train", str(data / "train.jsonl"),
         "--vocab", str(data / "vocab.tsv"), "--out", str(out / "eval"), *common])
    for mode in ("raw", "abstract"):
        report = json.loads((out / "eval" / f"eval_{mode}.json").read_text())
        for k, row in sorted(report["per_beam"].items(), key=lambda kv: int(kv[0])):
            print(f"{mode:>8} k={k:>2} perfect={row['perfect_count']} rate={row['perfect_rate']:.2f}")
