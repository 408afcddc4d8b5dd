"""Pipeline configuration."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

MODES = ("raw_copy", "abstract")
DEFAULT_BEAMS = [1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50]


@dataclass
class ModelSettings:
    d: int = 128
    h: int = 256
    dropout_rate: float = 0.2
    attention: str = "additive"


@dataclass
class TrainSettings:
    batch_size: int = 32
    max_epochs: int = 20
    patience: int | None = 5
    learning_rate: float = 1e-4
    optimizer: str = "adam"
    clip_norm: float | None = 5.0


@dataclass
class PipelineConfig:
    corpus_dir: str | None = None
    output_dir: str = "out"
    vocab_capacity: int = 1000
    max_context_tokens: int = 1000
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0
    mode: str = "abstract"
    beam_sizes: list[int] = field(default_factory=lambda: list(DEFAULT_BEAMS))
    require_junit4: bool = False
    per_category_cap: int = 30
    max_target_len: int = 64
    model: ModelSettings = field(default_factory=ModelSettings)
    train: TrainSettings = field(default_factory=TrainSettings)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        self.split_ratios = tuple(self.split_ratios)

    @property
    def copy_enabled(self) -> bool:
        return self.mode == "raw_copy"

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        raw = dict(raw)
        if "model" in raw:
            raw["model"] = ModelSettings(**raw["model"])
        if "train" in raw:
            raw["train"] = TrainSettings(**raw["train"])
        return cls(**raw)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["split_ratios"] = list(self.split_ratios)
        return d
