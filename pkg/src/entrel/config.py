"""Model/training configuration with dotted keys (``rel.threshold`` etc.)."""

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from .corpus import DOCRED_ENTITY_TYPES, DOCRED_RELATION_TYPES

DEFAULT_REL_THRESHOLDS = {"grc": 0.55, "mrc": 0.6}


class ConfigError(ValueError):
    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass
class EncoderConfig:
    # "stub" builds a randomly initialised BERT with a hashing subword tokenizer;
    # anything else is loaded with transformers.AutoModel/AutoTokenizer.
    name: str = "bert-base-cased"
    max_subwords: int = 1024
    subword_pool: str = "max"
    hidden_size: int = 768
    layers: int = 2
    heads: int = 12
    vocab_size: int = 8192
    native_positions: int = 512


@dataclass
class MentionConfig:
    max_span_len: int = 10
    threshold: float = 0.85


@dataclass
class CorefConfig:
    threshold: float = 0.85
    max_edit_distance: int = 50


@dataclass
class EntityConfig:
    types: List[str] = field(default_factory=lambda: list(DOCRED_ENTITY_TYPES))


@dataclass
class RelationConfig:
    head: str = "mrc"
    threshold: Optional[float] = None
    types: List[str] = field(default_factory=lambda: list(DOCRED_RELATION_TYPES))
    ablate_entity_repr: bool = False
    ablate_local_context: bool = False
    intra_sentence_only: bool = False
    max_sentence_distance: int = 30
    max_token_distance: int = 500
    pair_chunk_size: int = 4096

    @property
    def effective_threshold(self) -> float:
        return DEFAULT_REL_THRESHOLDS[self.head] if self.threshold is None else self.threshold


@dataclass
class ModelConfig:
    meta_dim: int = 25
    ffnn_hidden: Optional[int] = None  # defaults to the encoder width


@dataclass
class TrainConfig:
    mode: str = "joint"
    epochs: int = 20
    lr: float = 5e-5
    warmup: float = 0.1
    dropout: float = 0.1
    weight_decay: float = 0.01
    adam_eps: float = 1e-6
    max_grad_norm: float = 1.0
    grad_accum: int = 1
    seed: int = 42
    neg_mentions: int = 200
    neg_coref: int = 200
    neg_relations: int = 200
    loss_mention: float = 1.0
    loss_coref: float = 1.0
    loss_entity: float = 0.25
    loss_relation: float = 1.0


@dataclass
class Config:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    mention: MentionConfig = field(default_factory=MentionConfig)
    coref: CorefConfig = field(default_factory=CorefConfig)
    entity: EntityConfig = field(default_factory=EntityConfig)
    rel: RelationConfig = field(default_factory=RelationConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    @classmethod
    def keys(cls) -> List[str]:
        return [f"{s.name}.{f.name}" for s in dataclasses.fields(cls)
                for f in dataclasses.fields(s.default_factory())]

    def to_flat(self) -> Dict[str, Any]:
        out = {}
        for key in self.keys():
            section, name = key.split(".")
            value = getattr(getattr(self, section), name)
            out[key] = list(value) if isinstance(value, list) else value
        return out

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def copy(self) -> "Config":
        return Config.from_flat(self.to_flat(), validate=False)

    def update(self, values: Dict[str, Any], validate: bool = True) -> "Config":
        problems = []
        known = set(self.keys())
        for key, value in values.items():
            if key not in known:
                problems.append(f"unknown key {key!r}")
                continue
            section, name = key.split(".")
            target = getattr(self, section)
            expected = type(getattr(type(target)(), name))
            try:
                setattr(target, name, _coerce(value, expected, name, target))
            except (TypeError, ValueError) as e:
                problems.append(f"{key}: {e}")
        if problems:
            raise ConfigError(problems)
        if validate:
            self.validate()
        return self

    @classmethod
    def from_flat(cls, values: Dict[str, Any], validate: bool = True) -> "Config":
        return cls().update(values, validate=validate)

    @classmethod
    def from_file(cls, path) -> "Config":
        text = Path(path).read_text(encoding="utf-8")
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ConfigError([f"{path}: expected a key/value mapping"])
        return cls.from_flat(flatten(data))

    def save(self, path):
        Path(path).write_text(yaml.safe_dump(self.to_flat(), sort_keys=True), encoding="utf-8")

    def problems(self) -> List[str]:
        p = []

        def prob(key, value):
            if not 0.0 <= value <= 1.0:
                p.append(f"{key}={value} must lie in [0, 1]")

        prob("mention.threshold", self.mention.threshold)
        prob("coref.threshold", self.coref.threshold)
        if self.rel.threshold is not None:
            prob("rel.threshold", self.rel.threshold)
        prob("train.warmup", self.train.warmup)
        prob("train.dropout", self.train.dropout)
        if self.encoder.subword_pool not in ("max", "first"):
            p.append(f"encoder.subword_pool={self.encoder.subword_pool!r} must be 'max' or 'first'")
        if self.rel.head not in ("grc", "mrc"):
            p.append(f"rel.head={self.rel.head!r} must be 'grc' or 'mrc'")
        if self.train.mode not in ("joint", "pipeline"):
            p.append(f"train.mode={self.train.mode!r} must be 'joint' or 'pipeline'")
        for key in ("mention.max_span_len", "model.meta_dim", "encoder.max_subwords", "encoder.hidden_size",
                    "encoder.layers", "encoder.heads", "encoder.vocab_size", "encoder.native_positions",
                    "train.grad_accum", "rel.pair_chunk_size"):
            section, name = key.split(".")
            if getattr(getattr(self, section), name) < 1:
                p.append(f"{key} must be >= 1")
        for key in ("coref.max_edit_distance", "rel.max_sentence_distance", "rel.max_token_distance",
                    "train.epochs", "train.neg_mentions", "train.neg_coref", "train.neg_relations",
                    "train.loss_mention", "train.loss_coref", "train.loss_entity", "train.loss_relation",
                    "train.lr", "train.weight_decay"):
            section, name = key.split(".")
            if getattr(getattr(self, section), name) < 0:
                p.append(f"{key} must be >= 0")
        if self.model.ffnn_hidden is not None and self.model.ffnn_hidden < 1:
            p.append("model.ffnn_hidden must be >= 1")
        if self.encoder.hidden_size % self.encoder.heads:
            p.append("encoder.hidden_size must be divisible by encoder.heads")
        for key, values in (("entity.types", self.entity.types), ("rel.types", self.rel.types)):
            if not values:
                p.append(f"{key} must not be empty")
            elif len(set(values)) != len(values):
                p.append(f"{key} contains duplicates")
        return p

    def validate(self) -> "Config":
        p = self.problems()
        if p:
            raise ConfigError(p)
        return self


def flatten(data: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    out = {}
    for k, v in data.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _coerce(value, expected, name, target):
    if value is None:
        if name in ("threshold", "ffnn_hidden") and isinstance(target, (RelationConfig, ModelConfig)):
            return None
        raise ValueError("must not be null")
    if expected is type(None):
        # Optional fields default to None; infer from the field name.
        expected = float if name == "threshold" else int
    if expected is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0", "yes", "no"):
            return value.lower() in ("true", "1", "yes")
        raise ValueError(f"expected a boolean, got {value!r}")
    if expected is list:
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        if not isinstance(value, (list, tuple)):
            raise ValueError(f"expected a list, got {value!r}")
        return [str(v) for v in value]
    if expected is int:
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise ValueError(f"expected an integer, got {value!r}")
        return int(value)
    if expected is float:
        if isinstance(value, bool):
            raise ValueError(f"expected a number, got {value!r}")
        return float(value)
    return expected(value)
