"""Summarise the rank/frequency table written by ``assertgen mine``.

Prints the head of the table, the share of token occurrences covered by the
top-N vocabulary, and the slope of a least-squares fit in log-log space.
"""
import argparse
import csv

import numpy as np


def load(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(int(r["rank"]), int(r["frequency"])) for r in csv.DictReader(fh)]
    return np.array(rows, dtype=float).reshape(-1, 2)


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("zipf_csv")
    p.add_argument("--capacity", type=int, default=1000)
    p.add_argument("--head", type=int, default=10)
    args = p.parse_args()
    table = load(args.zipf_csv)
    if not len(table):
        raise SystemExit("empty table")
    ranks, freqs = table[:, 0], table[:, 1]
    for r, f in table[: args.head]:
        print(f"{int(r):>6} {int(f):>8}")
    covered = freqs[: args.capacity].sum() / freqs.sum()
    print(f"distinct tokens: {len(table)}")
    print(f"top-{args.capacity} coverage of occurrences: {covered:.1%}")
    if len(table) > 1:
        slope = np.polyfit(np.log(ranks), np.log(freqs), 1)[0]
        print(f"log-log slope: {slope:.2f}")
