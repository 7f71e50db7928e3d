"""Run configuration: JSON in, validated against the packaged schema, dataclass out."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from crimelab.errors import ConfigError
from crimelab.featsel import FeatureSelectorSpec
from crimelab.ingest import CleaningPolicy
from crimelab.models import MODEL_KINDS, build_model
from crimelab.preprocess import DEFAULT_TEST_FRACTION
from crimelab.resample import SamplerSpec

PROTOCOLS = ("cv10", "holdout", "both")


@lru_cache(maxsize=1)
def config_schema() -> dict:
    return json.loads(resources.files("crimelab").joinpath("config_schema.json").read_text(encoding="utf-8"))


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    dataset: str
    model: ModelConfig
    seed: int = 0
    cleaning: CleaningPolicy = CleaningPolicy()
    exclude_leaky_features: bool = False
    sampler: SamplerSpec = SamplerSpec()
    feature_selector: FeatureSelectorSpec = FeatureSelectorSpec()
    protocol: str = "cv10"
    folds: int = 10
    test_fraction: float = DEFAULT_TEST_FRACTION
    legacy_presample: bool = False
    subsample: int | None = None
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, raw: dict, base_dir=None) -> "RunConfig":
        try:
            jsonschema.validate(raw, config_schema())
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config invalid at {where}: {exc.message}") from None
        d = dict(raw)
        if d["model"]["kind"] not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {d['model']['kind']!r}; expected one of {list(MODEL_KINDS)}")
        dataset = Path(d.pop("dataset"))
        if base_dir is not None and not dataset.is_absolute():
            dataset = Path(base_dir) / dataset
        try:
            cfg = cls(
                dataset=str(dataset),
                model=ModelConfig(d.pop("model")["kind"], dict(raw["model"].get("params", {}))),
                cleaning=CleaningPolicy(**d.pop("cleaning", {})),
                sampler=SamplerSpec(**d.pop("sampler", {"kind": "none"})),
                feature_selector=FeatureSelectorSpec(**d.pop("feature_selector", {"kind": "none"})),
                **d,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        # catches bad model params before any data is read
        build_model(cfg.model.kind, cfg.model.params, cfg.seed)
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(raw, base_dir=path.parent)

    def to_dict(self) -> dict:
        """Fully resolved config; every default is spelled out."""
        d = asdict(self)
        d["sampler"].pop("seed", None)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def with_overrides(self, **changes) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})
