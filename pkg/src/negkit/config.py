"""Pipeline configuration: one flat JSON file, explicit named seeds.

Every stochastic stage reads its own seed from here, so a config file pins
the whole pipeline; nothing falls back to wall-clock or global RNG state.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .corpus_build import DEFAULT_INSTRUCTION
from .errors import ConfigError


@dataclass
class PipelineConfig:
    # inputs
    atomic_path: str | None = None
    anion_path: str | None = None
    split: str = "train"
    output_dir: str = "out"

    # chat backend
    backend: str = "mock"  # "mock" uses the deterministic oracle/generator
    base_url: str | None = None
    model_name: str = "mock-model"
    credential_env: str = "NEGKIT_API_KEY"
    temperature: float = 0.0
    max_output_tokens: int = 128
    retry_limit: int = 3
    concurrency: int = 4
    cache_path: str | None = None

    # seeds, one per stochastic stage
    seed_judge_sets: int = 13
    seed_benchmark: int = 17
    seed_baseline: int = 23
    seed_subset: int = 29
    seed_random_labels: int = 31

    # recipe sizes
    per_relation_per_label: int = 200
    benchmark_per_relation: int = 200
    quarantine_limit: int | None = None

    # export and annotation
    instruction: str = DEFAULT_INSTRUCTION
    data_dir: str = "annotation_data"
    listen_host: str = "127.0.0.1"
    listen_port: int = 8765
    ui_dir: str | None = None
    adjudicator: str | None = None

    def __post_init__(self) -> None:
        if self.backend not in ("mock", "http"):
            raise ConfigError(f"backend must be mock or http, not {self.backend!r}")
        if self.backend == "http" and not self.base_url:
            raise ConfigError("http backend requires base_url")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.per_relation_per_label <= 0 or self.benchmark_per_relation <= 0:
            raise ConfigError("recipe sizes must be positive")

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path} must hold a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {unknown}")
        config = cls(**raw)
        for attr in ("atomic_path", "anion_path"):
            value = getattr(config, attr)
            if value is not None and not Path(value).exists():
                raise ConfigError(f"{attr} does not exist: {value}")
        return config

    def with_overrides(self, **overrides) -> "PipelineConfig":
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigError(f"unknown config overrides {unknown}")
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def content_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def seeds(self) -> dict[str, int]:
        return {
            f.name: getattr(self, f.name)
            for f in fields(self)
            if f.name.startswith("seed_")
        }
