"""Time beam search per input for each beam width and print a table.

    python3 scripts/timing_report.py CHECKPOINT TAPS --limit 20
"""
import argparse
import json
import sys
import tempfile
from pathlib import Path

from assertgen.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("checkpoint")
    p.add_argument("taps")
    p.add_argument("--limit", type=int, default=20)
    p.add_argument("--beam", type=int, nargs="*", default=None)
    args = p.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "timing.json"
        argv = ["timing", args.checkpoint, args.taps, "--output", str(out), "--limit", str(args.limit)]
        if args.beam:
            argv += ["--beam", *map(str, args.beam)]
        code = main(argv)
        if code:
            sys.exit(code)
        data = json.loads(out.read_text())
    print(f"{'k':>4} {'ms/input':>10}")
    for k, sec in sorted(data["seconds_per_input"].items(), key=lambda kv: int(kv[0])):
        print(f"{k:>4} {1000 * sec:>10.2f}")
    print("monotone in k:", data["monotone"], f"({data['n_inputs']} inputs)")
