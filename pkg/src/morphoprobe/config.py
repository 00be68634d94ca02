"""Experiment configuration: a JSON file with a model registry, sampler and
trainer settings, and path layout. Command-line flags override file values.

Schema (all keys optional):
{
  "corpus_dir": "corpus",        ingested corpus root
  "task_dir": "tasks",           sampled task root
  "out_dir": "out",              results root
  "master_seed": 0,
  "probe": "mlp50",
  "pooling": "auto",
  "layer_mode": "weighted_sum",
  "n_seeds": 10,
  "perturbations": ["original", "targ", "l2", "r2", "b2", "permute"],
  "sampler": {"n_train": 2000, ...},        SamplerConfig fields
  "train": {"lr": 0.001, ...},             TrainConfig fields (seed ignored)
  "families": {"fx": "fictive"},           language -> family, for heatmaps
  "models": {
    "rand32": {"kind": "random", "mode": "fully_random", "dim": 32,
               "n_layers": 13, "seed": 1, "static_archive": null},
    "mbert":  {"kind": "archive", "path": "embeddings/mbert.mpeb"},
    "svc":    {"kind": "http", "url": "http://localhost:8000"},
    "chlstm": {"kind": "chlstm"}
  }
}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .embed.archive import ArchiveReader
from .embed.http_backend import CachingProvider, HttpBackend
from .embed.random_backend import RandomControlBackend
from .errors import ConfigError
from .nn.train import TrainConfig
from .sampler import SamplerConfig

DEFAULT_PERTURBATIONS = ("original", "targ", "l2", "r2", "b2", "permute")
BACKEND_KINDS = ("random", "archive", "http", "chlstm")


@dataclass(frozen=True)
class BackendSpec:
    kind: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ConfigError(f"unknown backend kind {self.kind!r}; "
                              f"known: {BACKEND_KINDS}")


@dataclass
class ExperimentConfig:
    corpus_dir: str = "corpus"
    task_dir: str = "tasks"
    out_dir: str = "out"
    master_seed: int = 0
    probe: str = "mlp50"
    pooling: str = "auto"
    layer_mode: str = "weighted_sum"
    n_seeds: int = 10
    perturbations: tuple[str, ...] = DEFAULT_PERTURBATIONS
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    models: dict[str, BackendSpec] = field(default_factory=dict)
    families: dict[str, str] = field(default_factory=dict)

    def model(self, model_id: str) -> BackendSpec:
        if model_id not in self.models:
            raise ConfigError(f"model {model_id!r} not in registry; "
                              f"known: {sorted(self.models)}")
        return self.models[model_id]


def _build_dataclass(cls, payload: dict, label: str):
    try:
        return cls(**payload)
    except TypeError as exc:
        raise ConfigError(f"bad {label} section: {exc}")


def load_config(path: str | Path | None = None,
                overrides: dict | None = None) -> ExperimentConfig:
    """Read a config file and apply flag overrides (None values skipped)."""
    payload: dict = {}
    if path is not None:
        file_path = Path(path)
        if not file_path.exists():
            raise ConfigError(f"config file not found: {file_path}")
        with open(file_path, encoding="utf-8") as handle:
            try:
                payload = json.load(handle)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {file_path} is not JSON: {exc}")
    for key, value in (overrides or {}).items():
        if value is not None:
            payload[key] = value

    known = {"corpus_dir", "task_dir", "out_dir", "master_seed", "probe",
             "pooling", "layer_mode", "n_seeds", "perturbations", "sampler",
             "train", "models", "families"}
    unknown = set(payload) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    sampler = _build_dataclass(SamplerConfig, payload.get("sampler", {}),
                               "sampler")
    train = _build_dataclass(TrainConfig, payload.get("train", {}), "train")
    models = {}
    for model_id, desc in payload.get("models", {}).items():
        if not isinstance(desc, dict) or "kind" not in desc:
            raise ConfigError(f"model {model_id!r} needs a 'kind' field")
        options = {k: v for k, v in desc.items() if k != "kind"}
        models[model_id] = BackendSpec(kind=desc["kind"], options=options)
    return ExperimentConfig(
        corpus_dir=payload.get("corpus_dir", "corpus"),
        task_dir=payload.get("task_dir", "tasks"),
        out_dir=payload.get("out_dir", "out"),
        master_seed=payload.get("master_seed", 0),
        probe=payload.get("probe", "mlp50"),
        pooling=payload.get("pooling", "auto"),
        layer_mode=payload.get("layer_mode", "weighted_sum"),
        n_seeds=payload.get("n_seeds", 10),
        perturbations=tuple(payload.get("perturbations",
                                        DEFAULT_PERTURBATIONS)),
        sampler=sampler, train=train, models=models,
        families=dict(payload.get("families", {})))


def build_provider(config: ExperimentConfig, model_id: str):
    """Instantiate the embedding backend for a registry entry.

    chlstm entries return None: the char model consumes text directly.
    """
    spec = config.model(model_id)
    opts = dict(spec.options)
    if spec.kind == "chlstm":
        return None
    if spec.kind == "random":
        static = opts.pop("static_archive", None)
        reader = None
        if static is not None:
            static_path = Path(static)
            if not static_path.exists():
                raise ConfigError(f"static archive not found: {static_path}")
            reader = ArchiveReader(static_path)
        try:
            return RandomControlBackend(model_id=model_id, static_archive=reader,
                                        **opts)
        except TypeError as exc:
            raise ConfigError(f"bad random backend options: {exc}")
    if spec.kind == "archive":
        if "path" not in opts:
            raise ConfigError(f"archive model {model_id!r} needs a path")
        archive_path = Path(opts["path"])
        if not archive_path.exists():
            raise ConfigError(f"archive not found: {archive_path}")
        reader = ArchiveReader(archive_path)
        if reader.model_id != model_id:
            raise ConfigError(
                f"archive at {archive_path} holds model "
                f"{reader.model_id!r}, registry says {model_id!r}")
        return reader
    if "url" not in opts:
        raise ConfigError(f"http model {model_id!r} needs a url")
    backend = HttpBackend(opts["url"], model_id=model_id,
                          **{k: v for k, v in opts.items() if k != "url"})
    return CachingProvider(backend)


def probe_for(config: ExperimentConfig, model_id: str) -> str:
    """chlstm registry entries force the chlstm probe; everything else uses
    the configured MLP variant."""
    if config.model(model_id).kind == "chlstm":
        return "chlstm"
    return config.probe
