"""Task sampling.

Enumerates candidate <language, POS, feature> probing tasks over a corpus
and samples balanced train/dev/test sets under the published constraints:
sentence lengths within bounds, classes attested at least min_class_count
times, per-split class imbalance capped, target surface forms disjoint
across splits, and UD split provenance preserved (a task's train split only
draws from UD train files, and so on).

All randomness flows from one xoshiro256** stream derived from the config
seed and the task triple, so a rerun is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .conllu import Corpus, SentenceRecord
from .errors import DataError
from .rng import Xoshiro256, derive_seed

DEFAULT_POS = ("ADJ", "NOUN", "PROPN", "VERB")
DEFAULT_FEATURES = ("Case", "Gender", "Number", "Tense")

# Task splits are filled smallest-first so the small splits get first claim
# on surface forms.
FILL_ORDER = ("test", "dev", "train")


@dataclass(frozen=True)
class TaskSpec:
    language: str
    upos: str
    feature: str

    @property
    def task_id(self) -> str:
        return f"{self.language}_{self.upos}_{self.feature}"


@dataclass(frozen=True)
class ProbingInstance:
    words: tuple[str, ...]
    target_index: int
    label: str

    def __post_init__(self):
        if not (0 <= self.target_index < len(self.words)):
            raise DataError(
                f"target_index {self.target_index} outside sentence of "
                f"{len(self.words)} words")

    @property
    def target_form(self) -> str:
        return self.words[self.target_index]


@dataclass(frozen=True)
class SamplerConfig:
    n_train: int = 2000
    n_dev: int = 200
    n_test: int = 200
    max_imbalance: float = 3.0
    min_class_count: int = 200
    min_sentences: int = 500
    min_len: int = 3
    max_len: int = 40
    seed: int = 0

    def __post_init__(self):
        if min(self.n_train, self.n_dev, self.n_test,
               self.min_class_count, self.min_sentences) <= 0:
            raise DataError("sampler counts must be positive")
        if self.max_imbalance < 1.0:
            raise DataError("max_imbalance must be >= 1")
        if not (0 < self.min_len <= self.max_len):
            raise DataError("need 0 < min_len <= max_len")

    def scaled(self, scale: float) -> "SamplerConfig":
        """Multiply all count thresholds (for desk-scale fixtures)."""
        if scale <= 0:
            raise DataError("scale must be positive")
        def s(x: int) -> int:
            return max(1, round(x * scale))
        return SamplerConfig(
            n_train=s(self.n_train), n_dev=s(self.n_dev), n_test=s(self.n_test),
            max_imbalance=self.max_imbalance,
            min_class_count=s(self.min_class_count),
            min_sentences=s(self.min_sentences),
            min_len=self.min_len, max_len=self.max_len, seed=self.seed)


@dataclass
class TaskDataset:
    spec: TaskSpec
    train: list[ProbingInstance]
    dev: list[ProbingInstance]
    test: list[ProbingInstance]
    labels: tuple[str, ...]

    def split(self, name: str) -> list[ProbingInstance]:
        return {"train": self.train, "dev": self.dev, "test": self.test}[name]

    @property
    def splits(self) -> dict[str, list[ProbingInstance]]:
        return {"train": self.train, "dev": self.dev, "test": self.test}


@dataclass(frozen=True)
class Rejection:
    reason: str  # insufficient_sentences | too_few_classes | counts_unattainable
    detail: str


@dataclass(frozen=True)
class Occurrence:
    """One candidate target: a sentence plus the token positions (0-based)
    any of which may serve as the target, and the feature value."""
    sentence: SentenceRecord
    positions: tuple[int, ...]
    label: str


def iter_occurrences(sentence: SentenceRecord, upos: str,
                     feature: str) -> list[Occurrence]:
    """Candidate occurrences of <upos, feature> in one sentence.

    For PROPN, maximal runs of consecutive PROPN tokens form one candidate
    (any token of the run may be picked as target); runs whose annotated
    tokens disagree on the value are skipped as unusable.
    """
    out: list[Occurrence] = []
    if upos == "PROPN":
        run: list[int] = []
        def close(run):
            if not run:
                return
            values = {sentence.tokens[i].feats[feature]
                      for i in run if feature in sentence.tokens[i].feats}
            if len(values) == 1:
                out.append(Occurrence(sentence, tuple(run), values.pop()))
        for i, tok in enumerate(sentence.tokens):
            if tok.upos == "PROPN":
                run.append(i)
            else:
                close(run)
                run = []
        close(run)
    else:
        for i, tok in enumerate(sentence.tokens):
            if tok.upos == upos and feature in tok.feats:
                out.append(Occurrence(sentence, (i,), tok.feats[feature]))
    return out


@dataclass(frozen=True)
class CandidateSummary:
    spec: TaskSpec
    value_counts: dict[str, int]


def enumerate_candidates(corpus: Corpus,
                         pos_set: tuple[str, ...] = DEFAULT_POS,
                         feature_set: tuple[str, ...] = DEFAULT_FEATURES,
                         ) -> list[CandidateSummary]:
    """One candidate per attested <POS, feature> pair with value counts."""
    out = []
    for upos in pos_set:
        for feature in feature_set:
            counts: dict[str, int] = {}
            for sent in corpus.sentences:
                for occ in iter_occurrences(sent, upos, feature):
                    counts[occ.label] = counts.get(occ.label, 0) + 1
            if counts:
                out.append(CandidateSummary(
                    spec=TaskSpec(corpus.language, upos, feature),
                    value_counts=dict(sorted(counts.items()))))
    return out


def sample_task(corpus: Corpus, spec: TaskSpec,
                config: SamplerConfig) -> TaskDataset | Rejection:
    if len(corpus.sentences) < config.min_sentences:
        return Rejection(
            "insufficient_sentences",
            f"{len(corpus.sentences)} sentences < {config.min_sentences}")

    rng = Xoshiro256(derive_seed(
        config.seed, "sample", spec.language, spec.upos, spec.feature))

    # Candidate occurrences per UD split, length-filtered.  PROPN run
    # targets are resolved up front, in corpus order, so every occurrence
    # has a definite surface form before any selection happens.
    occs: dict[str, list[tuple[Occurrence, int]]] = {s: [] for s in FILL_ORDER}
    totals: dict[str, int] = {}
    for sent in corpus.sentences:
        if not (config.min_len <= len(sent) <= config.max_len):
            continue
        for occ in iter_occurrences(sent, spec.upos, spec.feature):
            target = (occ.positions[0] if len(occ.positions) == 1
                      else occ.positions[rng.randrange(len(occ.positions))])
            occs[sent.split].append((occ, target))
            totals[occ.label] = totals.get(occ.label, 0) + 1

    labels = sorted(l for l, c in totals.items() if c >= config.min_class_count)
    if len(labels) < 2:
        small = {l: c for l, c in sorted(totals.items())}
        return Rejection(
            "too_few_classes",
            f"{len(labels)} classes with >= {config.min_class_count} "
            f"occurrences (counts: {small})")

    quotas = {"test": config.n_test, "dev": config.n_dev,
              "train": config.n_train}
    claimed: dict[str, str] = {}  # surface form -> task split that owns it
    result: dict[str, list[ProbingInstance]] = {}

    for split in FILL_ORDER:
        pools: dict[str, list[tuple[Occurrence, int]]] = {l: [] for l in labels}
        for occ, target in occs[split]:
            if occ.label not in pools:
                continue
            form = occ.sentence.tokens[target].form
            if claimed.get(form, split) != split:
                continue
            pools[occ.label].append((occ, target))

        # Water-filling allocation: repeatedly grow the currently smallest
        # class that still has availability.  This is the most balanced
        # allocation that meets the quota, so if it breaks the imbalance
        # cap, no allocation satisfies it.
        alloc = {l: 0 for l in labels}
        for _ in range(quotas[split]):
            open_labels = [l for l in labels if alloc[l] < len(pools[l])]
            if not open_labels:
                return Rejection(
                    "counts_unattainable",
                    f"{split}: only {sum(alloc.values())} eligible targets "
                    f"for quota {quotas[split]}")
            grow = min(open_labels, key=lambda l: (alloc[l], l))
            alloc[grow] += 1
        low, high = min(alloc.values()), max(alloc.values())
        if low == 0 or high / low > config.max_imbalance:
            return Rejection(
                "counts_unattainable",
                f"{split}: best achievable allocation {alloc} violates "
                f"imbalance cap {config.max_imbalance}")

        chosen: list[tuple[Occurrence, int]] = []
        for label in labels:
            chosen.extend(rng.sample(pools[label], alloc[label]))
        instances = [
            ProbingInstance(words=tuple(occ.sentence.words), target_index=t,
                            label=occ.label)
            for occ, t in chosen
        ]
        rng.shuffle(instances)
        result[split] = instances
        for inst in instances:
            claimed[inst.target_form] = split

    return TaskDataset(spec=spec, train=result["train"], dev=result["dev"],
                       test=result["test"], labels=tuple(labels))


def validate_dataset(dataset: TaskDataset,
                     config: SamplerConfig) -> list[str]:
    """Check every TaskDataset invariant; empty list means all hold."""
    violations: list[str] = []
    expected = {"train": config.n_train, "dev": config.n_dev,
                "test": config.n_test}
    if len(dataset.labels) < 2:
        violations.append(f"only {len(dataset.labels)} labels")
    forms: dict[str, set[str]] = {}
    for split, instances in dataset.splits.items():
        if len(instances) != expected[split]:
            violations.append(
                f"{split}: {len(instances)} instances, expected "
                f"{expected[split]}")
        counts: dict[str, int] = {}
        for i, inst in enumerate(instances):
            counts[inst.label] = counts.get(inst.label, 0) + 1
            if not (config.min_len <= len(inst.words) <= config.max_len):
                violations.append(
                    f"{split}[{i}]: length {len(inst.words)} outside "
                    f"[{config.min_len}, {config.max_len}]")
            if inst.label not in dataset.labels:
                violations.append(
                    f"{split}[{i}]: label {inst.label!r} not in label set")
        if instances:
            missing = [l for l in dataset.labels if l not in counts]
            if missing:
                violations.append(f"{split}: labels never sampled: {missing}")
            else:
                low, high = min(counts.values()), max(counts.values())
                if high / low > config.max_imbalance:
                    violations.append(
                        f"{split}: imbalance {high}:{low} exceeds "
                        f"{config.max_imbalance}")
        forms[split] = {inst.target_form for inst in instances}
    for a, b in (("train", "dev"), ("train", "test"), ("dev", "test")):
        shared = forms[a] & forms[b]
        if shared:
            violations.append(
                f"target forms shared between {a} and {b}: "
                f"{sorted(shared)[:5]}")
    return violations


# ---------------------------------------------------------------------------
# On-disk layout: <dir>/manifest.json plus <dir>/<split>/instances.jsonl with
# one {"words": [...], "target": int, "label": "..."} object per line.

def save_task(dataset: TaskDataset, directory: str | Path,
              config: SamplerConfig) -> None:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for split, instances in dataset.splits.items():
        split_dir = root / split
        split_dir.mkdir(exist_ok=True)
        with open(split_dir / "instances.jsonl", "w", encoding="utf-8") as fh:
            for inst in instances:
                fh.write(json.dumps(
                    {"words": list(inst.words), "target": inst.target_index,
                     "label": inst.label},
                    ensure_ascii=False) + "\n")
    manifest = {
        "language": dataset.spec.language,
        "upos": dataset.spec.upos,
        "feature": dataset.spec.feature,
        "labels": list(dataset.labels),
        "seed": config.seed,
        "config": asdict(config),
        "counts": {s: len(v) for s, v in dataset.splits.items()},
    }
    with open(root / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def load_task(directory: str | Path) -> tuple[TaskDataset, SamplerConfig]:
    root = Path(directory)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"no task manifest at {manifest_path}")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    splits: dict[str, list[ProbingInstance]] = {}
    for split in ("train", "dev", "test"):
        path = root / split / "instances.jsonl"
        if not path.exists():
            raise DataError(f"missing split file {path}")
        instances = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                instances.append(ProbingInstance(
                    words=tuple(obj["words"]), target_index=obj["target"],
                    label=obj["label"]))
        splits[split] = instances
    spec = TaskSpec(manifest["language"], manifest["upos"],
                    manifest["feature"])
    dataset = TaskDataset(spec=spec, train=splits["train"],
                          dev=splits["dev"], test=splits["test"],
                          labels=tuple(manifest["labels"]))
    config = SamplerConfig(**manifest["config"])
    return dataset, config
