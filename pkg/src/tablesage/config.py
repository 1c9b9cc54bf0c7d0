"""Configuration: one YAML file drives every pipeline stage.

CLI flags override file values; file values override the defaults below.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

DEFAULT_ADDR = "127.0.0.1:8765"


@dataclass(frozen=True)
class CorpusSection:
    companies: tuple[str, ...] | None = None
    replicates: int = 4
    include_probability: float = 0.8


@dataclass(frozen=True)
class EmbeddingSection:
    dim: int = 100
    window: int = 5
    negative_samples: int = 5
    epochs: int = 15
    learning_rate: float = 0.025
    min_count: int = 1
    pretrained_path: str | None = None


@dataclass(frozen=True)
class ClassifierSection:
    seq_len: int = 40
    hidden_size: int = 48
    num_layers: int = 4
    batch_size: int = 8
    learning_rate: float = 0.01
    epochs: int = 200
    patience: int = 40
    train_fraction: float = 0.8
    include_company: bool = True


@dataclass(frozen=True)
class QuerySection:
    table_k: int = 5
    row_n: int = 5


@dataclass(frozen=True)
class ProjectionSection:
    perplexity: float = 20.0
    iterations: int = 1000


@dataclass(frozen=True)
class AppConfig:
    workspace: Path = Path("workspace")
    seed: int = 42
    addr: str = DEFAULT_ADDR
    corpus: CorpusSection = field(default_factory=CorpusSection)
    embedding: EmbeddingSection = field(default_factory=EmbeddingSection)
    classifier: ClassifierSection = field(default_factory=ClassifierSection)
    query: QuerySection = field(default_factory=QuerySection)
    projection: ProjectionSection = field(default_factory=ProjectionSection)


class ConfigError(Exception):
    """Unreadable or invalid configuration file."""


def _build_section(cls, data: dict, source: str):
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{source}: unknown keys {unknown}; expected {sorted(known)}")
    kwargs = {}
    for name, value in data.items():
        if name == "companies" and value is not None:
            value = tuple(value)
        if name == "workspace":
            value = Path(value)
        kwargs[name] = value
    return cls(**kwargs)


def load_config(path: str | Path | None) -> AppConfig:
    """Load YAML config; a missing path argument yields pure defaults."""
    if path is None:
        return AppConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    sections = {
        "corpus": CorpusSection,
        "embedding": EmbeddingSection,
        "classifier": ClassifierSection,
        "query": QuerySection,
        "projection": ProjectionSection,
    }
    top_known = {"workspace", "seed", "addr", *sections}
    unknown = sorted(set(data) - top_known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}; expected {sorted(top_known)}")

    kwargs: dict = {}
    for key in ("workspace", "seed", "addr"):
        if key in data:
            kwargs[key] = Path(data[key]) if key == "workspace" else data[key]
    for key, cls in sections.items():
        section = data.get(key)
        if section is None:
            continue
        if not isinstance(section, dict):
            raise ConfigError(f"{path}: section {key!r} must be a mapping")
        kwargs[key] = _build_section(cls, section, f"{path}:{key}")
    return AppConfig(**kwargs)


def apply_overrides(
    config: AppConfig, seed: int | None = None, workspace: str | Path | None = None
) -> AppConfig:
    """CLI-level overrides applied on top of a loaded config."""
    if seed is not None:
        config = replace(config, seed=seed)
    if workspace is not None:
        config = replace(config, workspace=Path(workspace))
    return config
