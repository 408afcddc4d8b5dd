"""On-disk formats: JSON Lines TAP files, abstract TAP files, predictions."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from .abstractor import AbstractionMap, AbstractTap
from .jlex import scan
from .miner import TapRecord


def join(tokens: Sequence[str]) -> str:
    return " ".join(tokens)


def split(text: str) -> list[str]:
    """Inverse of ``join``.  Literals may contain spaces, so the text is
    re-scanned rather than split on whitespace."""
    return [lex for lex, _, _ in scan(text)]


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=False)


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(_dump(row) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def tap_to_json(t: TapRecord) -> dict:
    return {
        "id": t.id,
        "context": join(t.context_tokens),
        "target": join(t.target_tokens),
        "focal_signature": t.focal_signature,
        "test_length": t.test_length,
    }


def tap_from_json(row: dict) -> TapRecord:
    ctx = split(row["context"])
    return TapRecord(
        context_tokens=ctx,
        target_tokens=split(row["target"]),
        focal_signature=row.get("focal_signature"),
        id=row["id"],
        test_length=row.get("test_length") or len(ctx),
    )


def write_taps(path, taps: Iterable[TapRecord]) -> None:
    write_jsonl(path, (tap_to_json(t) for t in taps))


def read_taps(path) -> list[TapRecord]:
    return [tap_from_json(r) for r in read_jsonl(path)]


def abstract_to_json(a: AbstractTap) -> dict:
    return {
        "raw_id": a.raw_id,
        "context": join(a.context_tokens),
        "target": join(a.target_tokens),
        "map": dict(a.map.forward),
    }


def abstract_from_json(row: dict) -> AbstractTap:
    forward = dict(row["map"])
    backward = {v: k for k, v in forward.items()}
    next_index: dict[str, int] = {}
    for term in backward:
        prefix, _, k = term.rpartition("_")
        next_index[prefix] = max(next_index.get(prefix, 0), int(k) + 1)
    amap = AbstractionMap(forward, backward, next_index)
    return AbstractTap(split(row["context"]), split(row["target"]), amap, row["raw_id"])


def write_abstract(path, taps: Iterable[AbstractTap]) -> None:
    write_jsonl(path, (abstract_to_json(a) for a in taps))


def read_abstract(path) -> list[AbstractTap]:
    return [abstract_from_json(r) for r in read_jsonl(path)]


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
