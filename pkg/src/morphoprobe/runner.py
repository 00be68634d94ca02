"""Experiment orchestration: train probes over tasks, seeds, perturbations,
layer ablations, and training-size ablations.

An ExperimentSpec is a plain serializable record; its key (a content hash)
names the experiment in the journal and on disk, so reruns of a suite skip
completed work. All randomness flows from base_seed through derive_seed, so
an experiment reproduces its per-seed accuracies exactly.
"""

from __future__ import annotations

import json
import os
import threading
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from hashlib import sha256
from pathlib import Path

import numpy as np

from .embed.layered import pool_subwords
from .embed.request import request_from_perturbed, request_hash
from .embed.random_backend import RandomControlBackend
from .errors import (ConfigError, DataError, NotFoundError, TrainingDiverged)
from .nn.lstm import CharLSTM, CharVocab, encode_batch
from .nn.mlp import MLPProbe
from .nn.train import TrainConfig, evaluate, fit
from .perturb import (PerturbationSpec, PerturbedInstance, attested_players,
                      char_mask, coalition_from_mask_bits,
                      coalition_to_mask_bits, mask_dataset, parse_perturbation)
from .rng import Xoshiro256, derive_seed
from .sampler import TaskDataset
from .shapley import N_COALITIONS, CoalitionTable

PROBES = tuple(sorted(MLPProbe.VARIANTS)) + ("chlstm",)
POOLINGS = ("first", "last", "auto")


def parse_layer_mode(mode: str) -> tuple[str, int | None]:
    if mode in ("weighted_sum", "concat"):
        return mode, None
    if mode.startswith("single:"):
        try:
            k = int(mode.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad layer mode {mode!r}")
        if k < 0:
            raise ConfigError(f"layer index must be >= 0, got {k}")
        return "single", k
    raise ConfigError(f"unknown layer mode {mode!r}; "
                      "expected weighted_sum, concat, or single:<k>")


def parse_masking(name: str) -> PerturbationSpec | frozenset:
    """A perturbation name ("original", "targ", "l2", ...) or a Shapley
    coalition written as "coalition:<bits>" with bits in [0, 512)."""
    if name.startswith("coalition:"):
        try:
            bits = int(name.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad coalition spec {name!r}")
        return coalition_from_mask_bits(bits)
    return parse_perturbation(name)


@dataclass(frozen=True)
class ExperimentSpec:
    task_id: str
    model_id: str
    probe: str = "mlp50"
    layer_mode: str = "weighted_sum"
    pooling: str = "auto"
    perturbation: str = "original"
    train_fraction: float = 1.0
    n_seeds: int = 10
    base_seed: int = 0
    # train_config.seed is ignored; the runner derives one seed per run.
    train_config: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.probe not in PROBES:
            raise ConfigError(f"unknown probe {self.probe!r}; known: {PROBES}")
        parse_layer_mode(self.layer_mode)
        if self.pooling not in POOLINGS:
            raise ConfigError(f"pooling must be one of {POOLINGS}")
        parse_masking(self.perturbation)
        if not (0.0 < self.train_fraction <= 1.0):
            raise ConfigError("train_fraction must be in (0, 1]")
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")

    def to_dict(self) -> dict:
        cfg = self.train_config
        return {
            "task_id": self.task_id,
            "model_id": self.model_id,
            "probe": self.probe,
            "layer_mode": self.layer_mode,
            "pooling": self.pooling,
            "perturbation": self.perturbation,
            "train_fraction": self.train_fraction,
            "n_seeds": self.n_seeds,
            "base_seed": self.base_seed,
            "train_config": {
                "lr": cfg.lr, "beta1": cfg.beta1, "beta2": cfg.beta2,
                "epsilon": cfg.epsilon, "batch_size": cfg.batch_size,
                "max_epochs": cfg.max_epochs, "patience": cfg.patience,
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentSpec":
        data = dict(payload)
        cfg = data.pop("train_config", {})
        return cls(train_config=TrainConfig(**cfg), **data)

    @property
    def key(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True,
                          separators=(",", ":"), ensure_ascii=False)
        return sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class SeedRecord:
    seed_index: int
    pooling: str                  # effective choice, never "auto"
    dev_acc: float
    test_acc: float
    epochs_run: int
    best_epoch: int
    diverged: bool


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    seed_records: tuple[SeedRecord, ...]
    mean_dev_acc: float
    mean_test_acc: float
    std_test_acc: float
    layer_weights: tuple[float, ...] | None
    n_excluded: int
    wall_time: float              # journal-only; not persisted in result JSON

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "seed_records": [vars(r) for r in self.seed_records],
            "mean_dev_acc": self.mean_dev_acc,
            "mean_test_acc": self.mean_test_acc,
            "std_test_acc": self.std_test_acc,
            "layer_weights": (None if self.layer_weights is None
                              else list(self.layer_weights)),
            "n_excluded": self.n_excluded,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentResult":
        spec = ExperimentSpec.from_dict(payload["spec"])
        records = tuple(SeedRecord(**r) for r in payload["seed_records"])
        weights = payload["layer_weights"]
        return cls(spec=spec, seed_records=records,
                   mean_dev_acc=payload["mean_dev_acc"],
                   mean_test_acc=payload["mean_test_acc"],
                   std_test_acc=payload["std_test_acc"],
                   layer_weights=None if weights is None else tuple(weights),
                   n_excluded=payload["n_excluded"], wall_time=0.0)


# -- data preparation --------------------------------------------------------

def subsample_train(instances: list, fraction: float, task_id: str,
                    base_seed: int) -> list:
    """Stratified subsample by label via largest-remainder apportionment;
    the overall size is round(fraction * n), so 0.05 of 2000 gives exactly
    100. A class whose quota reaches zero is an error."""
    if fraction >= 1.0:
        return list(instances)
    by_label: dict[str, list[int]] = {}
    for i, inst in enumerate(instances):
        by_label.setdefault(inst.label, []).append(i)
    total = max(1, round(fraction * len(instances)))
    labels = sorted(by_label)
    floors = {l: int(fraction * len(by_label[l])) for l in labels}
    remainders = {l: fraction * len(by_label[l]) - floors[l] for l in labels}
    quota = dict(floors)
    short = total - sum(floors.values())
    for l in sorted(labels, key=lambda l: (-remainders[l], l))[:short]:
        quota[l] += 1
    for l in labels:
        if quota[l] == 0:
            raise DataError(
                f"train fraction {fraction} leaves class {l!r} empty")
    rng = Xoshiro256(derive_seed(base_seed, "trainfrac", task_id))
    keep: list[int] = []
    for l in labels:
        keep.extend(rng.sample(by_label[l], quota[l]))
    return [instances[i] for i in sorted(keep)]


def _label_indices(instances: list[PerturbedInstance],
                   labels: tuple[str, ...]) -> np.ndarray:
    index = {label: i for i, label in enumerate(labels)}
    return np.array([index[inst.label] for inst in instances], dtype=np.int64)


def _embed_unique(perturbed: dict[str, list[PerturbedInstance]], provider):
    """Embed every distinct request once; returns hash -> LayeredEmbedding.

    Missing archive entries are collected across the whole task and raised
    as one NotFoundError listing the missing request ids.
    """
    requests = {}
    for instances in perturbed.values():
        for inst in instances:
            req = request_from_perturbed(inst, provider.model_id)
            requests.setdefault(request_hash(req), req)
    embedded = {}
    missing = []
    for key, req in requests.items():
        try:
            embedded[key] = provider.embed(req)
        except NotFoundError:
            missing.append(key.hex())
    if missing:
        shown = ", ".join(missing[:8])
        more = "" if len(missing) <= 8 else f" (+{len(missing) - 8} more)"
        exc = NotFoundError(
            f"missing embeddings for {len(missing)} requests: {shown}{more}")
        exc.missing_ids = missing
        raise exc
    return embedded


def _pool_features(perturbed: dict[str, list[PerturbedInstance]], provider,
                   layer_mode: str, poolings: tuple[str, ...]):
    """Featurize all splits; returns (features[split][pooling] -> ndarray,
    n_layers, dim). Feature shape is [B, L, D] for weighted_sum and a flat
    [B, D']/[B, L*D] for single/concat."""
    mode, k = parse_layer_mode(layer_mode)
    embedded = _embed_unique(perturbed, provider)
    first = next(iter(embedded.values()))
    n_layers, dim = first.n_layers, first.dim
    if mode == "single" and not (0 <= k <= n_layers - 1):
        raise ConfigError(
            f"single:{k} out of range for {n_layers} layers")
    features: dict[str, dict[str, np.ndarray]] = {}
    for split, instances in perturbed.items():
        per_pool = {p: [] for p in poolings}
        for inst in instances:
            req = request_from_perturbed(inst, provider.model_id)
            emb = embedded[request_hash(req)]
            if (emb.n_layers, emb.dim) != (n_layers, dim):
                raise DataError("inconsistent embedding dims within task")
            for pooling in poolings:
                vec = pool_subwords(emb, inst.target_index, pooling)
                if mode == "single":
                    vec = vec[k]
                elif mode == "concat":
                    vec = vec.reshape(-1)
                per_pool[pooling].append(vec)
        features[split] = {p: np.stack(v).astype(np.float32, copy=False)
                           for p, v in per_pool.items()}
    return features, n_layers, dim


def _char_inputs(perturbed: dict[str, list[PerturbedInstance]],
                 poolings: tuple[str, ...]):
    """Render splits to characters, build the vocabulary from train text
    only, and encode once per pooling (ids are shared, pools differ)."""
    renderings = {split: [char_mask(inst) for inst in instances]
                  for split, instances in perturbed.items()}
    vocab = CharVocab.build(r.text for r in renderings["train"])
    inputs: dict[str, dict[str, tuple]] = {}
    for split, rows in renderings.items():
        texts = [r.text for r in rows]
        per_pool = {}
        for pooling in poolings:
            if pooling == "first":
                pool = [r.target_start for r in rows]
            else:
                pool = [r.target_end - 1 for r in rows]
            per_pool[pooling] = encode_batch(vocab, texts, pool)
        inputs[split] = per_pool
    return inputs, vocab


# -- single experiment -------------------------------------------------------

def _build_model(spec: ExperimentSpec, n_classes: int, n_layers: int,
                 input_dim: int, vocab: CharVocab | None, seed_index: int):
    init_rng = np.random.default_rng(np.random.PCG64(
        derive_seed(spec.base_seed, "init", spec.task_id, str(seed_index))))
    if spec.probe == "chlstm":
        return CharLSTM(vocab, n_classes, init_rng=init_rng)
    mode, _ = parse_layer_mode(spec.layer_mode)
    layered = mode == "weighted_sum"
    return MLPProbe.from_variant(
        spec.probe, input_dim=input_dim, output_dim=n_classes,
        layered=layered, n_layers=n_layers if layered else None,
        init_rng=init_rng)


def run_experiment(dataset: TaskDataset, spec: ExperimentSpec,
                   provider=None) -> ExperimentResult:
    """Train spec.n_seeds probes and aggregate their test accuracies.

    Perturbations apply to train, dev, and test alike. Under pooling=auto
    both subword poolings are trained per seed and the dev-accuracy winner
    (ties to "last") supplies the test score. Divergent seeds are excluded
    from the aggregate with a warning.
    """
    started = time.perf_counter()
    if dataset.spec.task_id != spec.task_id:
        raise ConfigError(f"dataset is {dataset.spec.task_id}, "
                          f"spec wants {spec.task_id}")
    if spec.probe != "chlstm" and provider is None:
        raise ConfigError("embedding probes need a provider")
    masking = parse_masking(spec.perturbation)
    perturbed = mask_dataset(dataset, masking, master_seed=spec.base_seed)
    perturbed["train"] = subsample_train(
        perturbed["train"], spec.train_fraction, spec.task_id, spec.base_seed)

    poolings = (("first", "last") if spec.pooling == "auto"
                else (spec.pooling,))
    labels = {split: _label_indices(instances, dataset.labels)
              for split, instances in perturbed.items()}
    vocab = None
    n_layers = input_dim = 0
    if spec.probe == "chlstm":
        inputs, vocab = _char_inputs(perturbed, poolings)
    else:
        inputs, n_layers, dim = _pool_features(
            perturbed, provider, spec.layer_mode, poolings)
        mode, _ = parse_layer_mode(spec.layer_mode)
        input_dim = {"weighted_sum": dim, "single": dim,
                     "concat": n_layers * dim}[mode]

    records: list[SeedRecord] = []
    chosen_weights: list[np.ndarray] = []
    for i in range(spec.n_seeds):
        train_seed = derive_seed(spec.base_seed, "shuffle", spec.task_id,
                                 str(i))
        cfg = replace(spec.train_config, seed=train_seed)
        candidates = []
        for pooling in poolings:
            model = _build_model(spec, len(dataset.labels), n_layers,
                                 input_dim, vocab, i)
            outcome = fit(model, inputs["train"][pooling], labels["train"],
                          inputs["dev"][pooling], labels["dev"], cfg)
            candidates.append((pooling, model, outcome))
        viable = [c for c in candidates if not c[2].diverged]
        if not viable:
            records.append(SeedRecord(
                seed_index=i, pooling=poolings[-1], dev_acc=float("nan"),
                test_acc=float("nan"), epochs_run=candidates[-1][2].epochs_run,
                best_epoch=0, diverged=True))
            continue
        # dev-accuracy winner; candidate order makes ties resolve to "last"
        pooling, model, outcome = max(
            enumerate(viable), key=lambda c: (c[1][2].best_dev_acc, c[0]))[1]
        _, test_acc = evaluate(model, inputs["test"][pooling], labels["test"])
        records.append(SeedRecord(
            seed_index=i, pooling=pooling, dev_acc=outcome.best_dev_acc,
            test_acc=test_acc, epochs_run=outcome.epochs_run,
            best_epoch=outcome.best_epoch, diverged=False))
        if spec.probe != "chlstm" and getattr(model, "layered", False):
            chosen_weights.append(model.layer_weights())

    included = [r for r in records if not r.diverged]
    if not included:
        raise TrainingDiverged(
            f"all {spec.n_seeds} seeds diverged for {spec.task_id}")
    if len(included) < len(records):
        warnings.warn(
            f"{len(records) - len(included)} divergent seed(s) excluded "
            f"from {spec.task_id}/{spec.model_id}", RuntimeWarning)
    test_accs = np.array([r.test_acc for r in included])
    weights = (tuple(float(w) for w in np.mean(chosen_weights, axis=0))
               if chosen_weights else None)
    return ExperimentResult(
        spec=spec, seed_records=tuple(records),
        mean_dev_acc=float(np.mean([r.dev_acc for r in included])),
        mean_test_acc=float(np.mean(test_accs)),
        std_test_acc=(float(np.std(test_accs, ddof=1))
                      if len(included) > 1 else 0.0),
        layer_weights=weights, n_excluded=len(records) - len(included),
        wall_time=time.perf_counter() - started)


def random_control(dataset: TaskDataset, spec: ExperimentSpec, mode: str,
                   dim: int, n_layers: int = 13, seed: int = 0,
                   static_archive=None) -> ExperimentResult:
    backend = RandomControlBackend(
        model_id=spec.model_id, dim=dim, n_layers=n_layers, mode=mode,
        seed=seed, static_archive=static_archive)
    return run_experiment(dataset, spec, provider=backend)


def train_size_ablation(dataset: TaskDataset, spec: ExperimentSpec,
                        provider=None, fractions=(0.05, 0.1, 0.25, 0.5, 1.0),
                        ) -> list[tuple[float, ExperimentResult]]:
    curve = []
    for fraction in fractions:
        result = run_experiment(
            dataset, replace(spec, train_fraction=fraction), provider)
        curve.append((fraction, result))
    return curve


def layer_ablation(dataset: TaskDataset, spec: ExperimentSpec, provider,
                   n_layers: int) -> dict[str, ExperimentResult]:
    """weighted_sum, concat, and each single layer, keyed by layer mode."""
    modes = ["weighted_sum", "concat"] + [f"single:{k}"
                                          for k in range(n_layers)]
    return {mode: run_experiment(dataset, replace(spec, layer_mode=mode),
                                 provider)
            for mode in modes}


# -- Shapley coalition sweep -------------------------------------------------

def run_shapley(dataset: TaskDataset, spec: ExperimentSpec, provider=None,
                mode: str = "retrain", workers: int | None = None,
                ) -> CoalitionTable:
    """Accuracy for all 512 coalitions of the 9 positional players.

    Coalitions that differ only on unattested players collapse onto one
    experiment; the table still carries all 512 keys. A single seed is used
    throughout. mode="retrain" trains a fresh probe per coalition;
    mode="fixed_probe" trains once on the full coalition and evaluates the
    frozen probe under each test-time masking.
    """
    if mode not in ("retrain", "fixed_probe"):
        raise ConfigError(f"unknown shapley mode {mode!r}")
    spec = replace(spec, n_seeds=1)
    attested = frozenset()
    for instances in dataset.splits.values():
        for inst in instances:
            attested |= attested_players(inst)
    attested_mask = coalition_to_mask_bits(attested)
    effective = sorted({m & attested_mask for m in range(N_COALITIONS)})

    acc_by_effective: dict[int, float] = {}
    if mode == "retrain":
        def job(bits: int) -> tuple[int, float]:
            sub = replace(spec, perturbation=f"coalition:{bits}")
            return bits, run_experiment(dataset, sub, provider).mean_test_acc

        n_workers = workers or _worker_count()
        if n_workers > 1:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                for bits, acc in pool.map(job, effective):
                    acc_by_effective[bits] = acc
        else:
            for bits in effective:
                acc_by_effective[bits] = job(bits)[1]
    else:
        acc_by_effective = _fixed_probe_sweep(dataset, spec, provider,
                                              effective, attested_mask)

    accs = np.array([acc_by_effective[m & attested_mask]
                     for m in range(N_COALITIONS)])
    return CoalitionTable(accs=accs, model_id=spec.model_id,
                          task=spec.task_id, attested_mask=attested_mask)


def _fixed_probe_sweep(dataset: TaskDataset, spec: ExperimentSpec, provider,
                       effective: list[int], attested_mask: int,
                       ) -> dict[int, float]:
    """Train once on the full coalition, then score each coalition's masked
    test split with the frozen probe."""
    full = replace(spec, perturbation=f"coalition:{attested_mask}")
    pooling = spec.pooling
    masking_full = parse_masking(full.perturbation)
    perturbed = mask_dataset(dataset, masking_full, master_seed=spec.base_seed)
    labels = {split: _label_indices(instances, dataset.labels)
              for split, instances in perturbed.items()}
    poolings = ("first", "last") if pooling == "auto" else (pooling,)
    vocab = None
    n_layers = input_dim = 0
    if spec.probe == "chlstm":
        inputs, vocab = _char_inputs(perturbed, poolings)
    else:
        inputs, n_layers, dim = _pool_features(perturbed, provider,
                                               spec.layer_mode, poolings)
        mode_name, _ = parse_layer_mode(spec.layer_mode)
        input_dim = {"weighted_sum": dim, "single": dim,
                     "concat": n_layers * dim}[mode_name]

    cfg = replace(spec.train_config,
                  seed=derive_seed(spec.base_seed, "shuffle", spec.task_id,
                                   "0"))
    candidates = []
    for p in poolings:
        model = _build_model(spec, len(dataset.labels), n_layers, input_dim,
                             vocab, 0)
        outcome = fit(model, inputs["train"][p], labels["train"],
                      inputs["dev"][p], labels["dev"], cfg)
        if not outcome.diverged:
            candidates.append((p, model, outcome))
    if not candidates:
        raise TrainingDiverged(f"full-coalition training diverged for "
                               f"{spec.task_id}")
    chosen_pooling, model, _ = max(
        enumerate(candidates), key=lambda c: (c[1][2].best_dev_acc, c[0]))[1]

    out: dict[int, float] = {}
    for bits in effective:
        masked = mask_dataset(dataset, coalition_from_mask_bits(bits),
                              master_seed=spec.base_seed)
        test = {"test": masked["test"]}
        if spec.probe == "chlstm":
            rows = [char_mask(inst) for inst in masked["test"]]
            texts = [r.text for r in rows]
            pool = ([r.target_start for r in rows]
                    if chosen_pooling == "first"
                    else [r.target_end - 1 for r in rows])
            batch = encode_batch(vocab, texts, pool)
        else:
            feats, _, _ = _pool_features(test, provider, spec.layer_mode,
                                         (chosen_pooling,))
            batch = feats["test"][chosen_pooling]
        _, acc = evaluate(model, batch, labels["test"])
        out[bits] = acc
    return out


# -- suites ------------------------------------------------------------------

def _worker_count() -> int:
    env = os.environ.get("MORPHOPROBE_WORKERS", "")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"bad MORPHOPROBE_WORKERS value {env!r}")
    return 1


@dataclass
class SuiteOutcome:
    results: dict[str, ExperimentResult]     # spec key -> result
    failed: dict[str, str]                   # spec key -> error message
    skipped: int                             # jobs satisfied by the journal


def run_suite(datasets: dict[str, TaskDataset], specs: list[ExperimentSpec],
              providers: dict[str, object], out_dir: str | Path,
              workers: int | None = None) -> SuiteOutcome:
    """Run a batch of experiments with an append-only journal.

    Completed work is skipped on rerun (results reload from disk); failed
    entries are retried. Partial failures are recorded, not fatal.
    """
    out = Path(out_dir)
    results_dir = out / "results"
    results_dir.mkdir(parents=True, exist_ok=True)
    journal_path = out / "journal.jsonl"
    done: dict[str, str] = {}
    if journal_path.exists():
        with open(journal_path, encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                entry = json.loads(line)
                if entry["status"] == "done":
                    done[entry["key"]] = entry["result"]

    journal_lock = threading.Lock()

    def journal(entry: dict) -> None:
        with journal_lock:
            with open(journal_path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(entry, sort_keys=True) + "\n")

    results: dict[str, ExperimentResult] = {}
    failed: dict[str, str] = {}
    skipped = 0
    pending: list[ExperimentSpec] = []
    for spec in specs:
        if spec.key in done:
            path = out / done[spec.key]
            with open(path, encoding="utf-8") as handle:
                results[spec.key] = ExperimentResult.from_dict(
                    json.load(handle))
            skipped += 1
        else:
            pending.append(spec)

    def execute(spec: ExperimentSpec) -> None:
        started = time.time()
        try:
            if spec.task_id not in datasets:
                raise ConfigError(f"no dataset for task {spec.task_id!r}")
            result = run_experiment(datasets[spec.task_id], spec,
                                    providers.get(spec.model_id))
        except Exception as exc:
            failed[spec.key] = str(exc)
            journal({"key": spec.key, "task": spec.task_id,
                     "model": spec.model_id, "status": "failed",
                     "error": str(exc), "started": started,
                     "finished": time.time()})
            return
        rel = f"results/{spec.key}.json"
        tmp = out / (rel + ".tmp")
        with open(tmp, "w", encoding="utf-8") as handle:
            json.dump(result.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")
        os.replace(tmp, out / rel)
        results[spec.key] = result
        journal({"key": spec.key, "task": spec.task_id,
                 "model": spec.model_id, "status": "done", "result": rel,
                 "started": started, "finished": time.time(),
                 "wall_time": result.wall_time})

    n_workers = workers or _worker_count()
    if n_workers > 1 and len(pending) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(execute, pending))
    else:
        for spec in pending:
            execute(spec)
    return SuiteOutcome(results=results, failed=failed, skipped=skipped)
