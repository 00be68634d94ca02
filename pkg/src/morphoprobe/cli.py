"""Command-line entry point.

Subcommands: ingest, sample, plan, train, perturb, shapley, shapley-report,
ablate, analyze, report. Exit codes: 0 success, 1 usage error, 2 data or
configuration error. Output lands under <out_dir>/<suite>/<model>/<task>/
with stable file names; suites journal their progress and resume for free.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import (ExperimentConfig, build_provider, load_config,
                     probe_for)
from .conllu import (SPLITS, TARGET_FEATURES, corpus_stats, corpus_to_conllu,
                     merge_treebanks, parse_conllu)
from .embed.request import plan_manifest, save_manifest
from .errors import ConfigError, DataError, MorphoprobeError
from .perturb import attested_players, coalition_from_mask_bits, \
    coalition_to_mask_bits
from .report import (cooccurrence_csv, cooccurrence_heatmap_svg,
                     correlation_csv, effects_csv, effects_from_results,
                     emit_report, write_csv, write_json, _load_results)
from .runner import (ExperimentSpec, layer_ablation, parse_masking,
                     random_control, run_experiment, run_shapley, run_suite,
                     subsample_train, train_size_ablation)
from .sampler import (TaskSpec, Rejection, enumerate_candidates, load_task,
                      sample_task, save_task)
from .shapley import (N_COALITIONS, generalization_variance, load_profile,
                      save_profile, save_table, shapley_from_table)
from .stats import (consensus_cluster, layer_weight_diagnostics,
                    majority_baseline, partial_credit_score, pearson_matrix)


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE",
                        help="experiment config JSON; flags override it")
    parser.add_argument("--out", metavar="DIR", dest="out_dir",
                        help="output root (default from config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphoprobe",
        description="Morphosyntactic probing of contextual embeddings.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse CoNLL-U treebanks into a corpus")
    p.add_argument("--lang", required=True, help="language code")
    p.add_argument("--treebank", action="append", required=True,
                   metavar="DIR", help="treebank directory (repeatable)")
    p.add_argument("--out", required=True, help="corpus output directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("sample", help="sample a probing task from a corpus")
    _add_config_arg(p)
    p.add_argument("--corpus", required=True, help="ingested corpus directory")
    p.add_argument("--lang", help="language code (defaults to corpus meta)")
    p.add_argument("--pos", help="target part of speech, e.g. NOUN")
    p.add_argument("--feature", help="target feature, e.g. Number")
    p.add_argument("--scale", type=float, default=1.0,
                   help="multiply all count thresholds (desk-scale fixtures)")
    p.add_argument("--seed", type=int, help="sampler seed override")
    p.add_argument("--task-dir", help="task output root")
    p.add_argument("--list-candidates", action="store_true",
                   help="print candidate tasks with label counts and exit")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("plan", help="write an extraction manifest for a task")
    _add_config_arg(p)
    p.add_argument("--task", required=True, help="task directory")
    p.add_argument("--suite", choices=("perturb", "shapley"),
                   default="perturb")
    p.add_argument("--model", required=True, help="model id for the requests")
    p.add_argument("--manifest", required=True, help="manifest output path")
    p.set_defaults(func=cmd_plan)

    for name, help_text in (("train", "train probes on one task"),
                            ("perturb", "run the perturbation suite")):
        p = sub.add_parser(name, help=help_text)
        _add_config_arg(p)
        p.add_argument("--task", required=True, help="task directory")
        p.add_argument("--model", required=True, help="model id")
        p.add_argument("--probe", help="probe variant override")
        p.add_argument("--pooling", choices=("first", "last", "auto"))
        p.add_argument("--layer-mode", dest="layer_mode",
                       help="weighted_sum | concat | single:<k>")
        p.add_argument("--n-seeds", dest="n_seeds", type=int)
        p.add_argument("--workers", type=int)
        if name == "perturb":
            p.add_argument("--perturbations",
                           help="comma list (default from config)")
        p.set_defaults(func=cmd_train if name == "train" else cmd_perturb)

    p = sub.add_parser("shapley", help="run the 512-coalition sweep")
    _add_config_arg(p)
    p.add_argument("--task", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--probe", help="probe variant override")
    p.add_argument("--mode", choices=("retrain", "fixed-probe"),
                   default="retrain")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_shapley)

    p = sub.add_parser("shapley-report",
                       help="aggregate Shapley profiles along an axis")
    _add_config_arg(p)
    p.add_argument("--aggregate", choices=("language", "pos", "tag"),
                   required=True)
    p.add_argument("--model", help="restrict to one model id")
    p.set_defaults(func=cmd_shapley_report)

    p = sub.add_parser("ablate", help="layer, train-size, or random ablations")
    _add_config_arg(p)
    p.add_argument("--task", required=True)
    p.add_argument("--model", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--layers", action="store_true")
    group.add_argument("--size", action="store_true")
    group.add_argument("--random", action="store_true")
    p.add_argument("--fractions", default="0.05,0.1,0.25,0.5,1.0",
                   help="comma list for --size")
    p.add_argument("--random-mode", dest="random_mode",
                   choices=("fully_random", "random_layers"),
                   default="fully_random")
    p.add_argument("--dim", type=int, default=64,
                   help="embedding width for --random")
    p.add_argument("--probe", help="probe variant override")
    p.add_argument("--n-seeds", dest="n_seeds", type=int)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("analyze", help="effects, clustering, layer weights, "
                                       "or external scoring")
    _add_config_arg(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--effects", action="store_true")
    group.add_argument("--cluster", action="store_true")
    group.add_argument("--layerweights", action="store_true")
    group.add_argument("--score-external", dest="score_external",
                       metavar="PRED.conllu")
    p.add_argument("--gold", metavar="GOLD.conllu",
                   help="reference file for --score-external")
    p.add_argument("--lang", default="xx", help="language code for scoring")
    p.add_argument("--runs", type=int, default=100,
                   help="clustering runs for --cluster")
    p.add_argument("--average-models", dest="average_models",
                   action="store_true",
                   help="average effects over models before clustering")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="render CSV/SVG views of all results")
    _add_config_arg(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except MorphoprobeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _config(args) -> ExperimentConfig:
    overrides = {}
    for key in ("out_dir", "probe", "pooling", "layer_mode", "n_seeds"):
        if hasattr(args, key) and getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    return load_config(getattr(args, "config", None), overrides)


# -- corpus ------------------------------------------------------------------

def _parse_treebank_dir(directory: Path, language: str):
    if not directory.is_dir():
        raise ConfigError(f"treebank directory not found: {directory}")
    sentences = []
    for path in sorted(directory.iterdir()):
        name = path.name
        if not name.endswith(".conllu") or "-ud-" not in name:
            continue
        treebank_id, _, rest = name.rpartition("-ud-")
        split = rest[:-len(".conllu")]
        if split not in SPLITS:
            continue
        sentences.extend(parse_conllu(path.read_bytes(), language,
                                      treebank_id, split))
    if not sentences:
        raise ConfigError(f"no *-ud-{{train,dev,test}}.conllu files "
                          f"under {directory}")
    return sentences


def cmd_ingest(args) -> int:
    treebanks = [_parse_treebank_dir(Path(d), args.lang)
                 for d in args.treebank]
    corpus = merge_treebanks(treebanks)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for split in SPLITS:
        sentences = corpus.by_split(split)
        (out / f"{split}.conllu").write_text(
            corpus_to_conllu(sentences), encoding="utf-8")
    stats = corpus_stats(corpus)
    meta = {"language": corpus.language,
            "treebanks": sorted({s.treebank_id for s in corpus.sentences}),
            "split_counts": corpus.split_counts,
            "n_tokens": stats.n_tokens,
            "mean_sentence_length": stats.mean_sentence_length,
            "ambiguity_rate": stats.ambiguity_rate}
    write_json(out / "meta.json", meta)
    counts = " ".join(f"{s}={corpus.split_counts[s]}" for s in SPLITS)
    print(f"ingested {args.lang}: {counts}, {stats.n_tokens} tokens, "
          f"mean length {stats.mean_sentence_length:.2f}, "
          f"ambiguity {stats.ambiguity_rate:.4f}")
    return 0


def _load_corpus(corpus_dir: str | Path):
    root = Path(corpus_dir)
    meta_path = root / "meta.json"
    if not meta_path.exists():
        raise ConfigError(f"no ingested corpus at {root} "
                          f"(missing {meta_path})")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    language = meta["language"]
    treebanks = []
    for split in SPLITS:
        path = root / f"{split}.conllu"
        if path.exists():
            treebanks.append(parse_conllu(path.read_bytes(), language,
                                          "+".join(meta["treebanks"]), split))
    return merge_treebanks(treebanks), meta


def cmd_sample(args) -> int:
    cfg = _config(args)
    corpus, meta = _load_corpus(args.corpus)
    language = args.lang or meta["language"]
    if language != meta["language"]:
        raise ConfigError(f"corpus is {meta['language']!r}, "
                          f"--lang says {language!r}")
    if args.list_candidates:
        for cand in enumerate_candidates(corpus):
            counts = " ".join(f"{v}={n}" for v, n in
                              sorted(cand.value_counts.items()))
            print(f"{language}_{cand.spec.upos}_{cand.spec.feature}: {counts}")
        return 0
    if not args.pos or not args.feature:
        raise ConfigError("sample needs --pos and --feature "
                          "(or --list-candidates)")
    sampler_cfg = cfg.sampler.scaled(args.scale)
    if args.seed is not None:
        sampler_cfg = replace(sampler_cfg, seed=args.seed)
    spec = TaskSpec(language, args.pos, args.feature)
    outcome = sample_task(corpus, spec, sampler_cfg)
    if isinstance(outcome, Rejection):
        print(f"rejected {spec.task_id}: {outcome.reason} ({outcome.detail})",
              file=sys.stderr)
        return 2
    task_root = Path(args.task_dir or cfg.task_dir) / spec.task_id
    save_task(outcome, task_root, sampler_cfg)
    sizes = {split: len(insts) for split, insts in outcome.splits.items()}
    print(f"sampled {spec.task_id}: labels {list(outcome.labels)}, "
          f"train={sizes['train']} dev={sizes['dev']} test={sizes['test']} "
          f"-> {task_root}")
    return 0


# -- planning and experiments ------------------------------------------------

def cmd_plan(args) -> int:
    cfg = _config(args)
    dataset, _ = load_task(args.task)
    if args.suite == "perturb":
        maskings = [parse_masking(name) for name in cfg.perturbations]
    else:
        attested = frozenset()
        for instances in dataset.splits.values():
            for inst in instances:
                attested |= attested_players(inst)
        attested_bits = coalition_to_mask_bits(attested)
        effective = sorted({m & attested_bits for m in range(N_COALITIONS)})
        maskings = [coalition_from_mask_bits(bits) for bits in effective]
    manifest = plan_manifest(dataset, maskings, args.model,
                             master_seed=cfg.master_seed)
    save_manifest(manifest, args.manifest)
    print(f"planned {len(manifest.requests)} unique requests "
          f"({args.suite} suite, {len(maskings)} maskings) "
          f"-> {args.manifest}")
    return 0


def _experiment_spec(cfg: ExperimentConfig, task_id: str, model_id: str,
                     perturbation: str = "original",
                     n_seeds: int | None = None) -> ExperimentSpec:
    return ExperimentSpec(
        task_id=task_id, model_id=model_id,
        probe=probe_for(cfg, model_id), layer_mode=cfg.layer_mode,
        pooling=cfg.pooling, perturbation=perturbation,
        n_seeds=n_seeds if n_seeds is not None else cfg.n_seeds,
        base_seed=cfg.master_seed, train_config=cfg.train)


def _run_jobs(cfg, dataset, specs, model_id, suite: str, workers=None):
    provider = build_provider(cfg, model_id)
    suite_dir = Path(cfg.out_dir) / suite
    outcome = run_suite({dataset.spec.task_id: dataset}, specs,
                        {model_id: provider}, suite_dir, workers=workers)
    for key, message in outcome.failed.items():
        print(f"failed {key}: {message}", file=sys.stderr)
    return outcome


def cmd_train(args) -> int:
    cfg = _config(args)
    dataset, _ = load_task(args.task)
    spec = _experiment_spec(cfg, dataset.spec.task_id, args.model)
    outcome = _run_jobs(cfg, dataset, [spec], args.model, "train",
                        args.workers)
    if spec.key not in outcome.results:
        return 2
    result = outcome.results[spec.key]
    stable = (Path(cfg.out_dir) / "train" / args.model / spec.task_id
              / "result.json")
    write_json(stable, result.to_dict())
    print(f"{spec.task_id} {args.model}: test "
          f"{result.mean_test_acc:.4f} +- {result.std_test_acc:.4f} "
          f"(dev {result.mean_dev_acc:.4f}, {result.n_excluded} excluded)")
    return 0


def cmd_perturb(args) -> int:
    cfg = _config(args)
    dataset, _ = load_task(args.task)
    perturbations = (tuple(args.perturbations.split(","))
                     if args.perturbations else cfg.perturbations)
    if "original" not in perturbations:
        perturbations = ("original",) + perturbations
    specs = [_experiment_spec(cfg, dataset.spec.task_id, args.model, pert)
             for pert in perturbations]
    outcome = _run_jobs(cfg, dataset, specs, args.model, "perturb",
                        args.workers)
    task_dir = Path(cfg.out_dir) / "perturb" / args.model / dataset.spec.task_id
    results = []
    for spec in specs:
        if spec.key in outcome.results:
            result = outcome.results[spec.key]
            results.append(result)
            write_json(task_dir / f"{spec.perturbation}.json",
                       result.to_dict())
    records = effects_from_results(results)
    if records:
        effects_csv(records, task_dir / "effects.csv")
    by_pert = {r.spec.perturbation: r for r in results}
    for pert in perturbations:
        if pert not in by_pert:
            continue
        acc = by_pert[pert].mean_test_acc
        eff = next((r.effect for r in records if r.perturbation == pert),
                   0.0)
        print(f"{pert:>10}: acc {acc:.4f}  effect {eff:+.4f}")
    return 0 if not outcome.failed else 2


def cmd_shapley(args) -> int:
    cfg = _config(args)
    dataset, _ = load_task(args.task)
    provider = build_provider(cfg, args.model)
    spec = _experiment_spec(cfg, dataset.spec.task_id, args.model, n_seeds=1)
    table = run_shapley(dataset, spec, provider,
                        mode=args.mode.replace("-", "_"),
                        workers=args.workers)
    profile = shapley_from_table(table)
    out_dir = Path(cfg.out_dir) / "shapley" / args.model / spec.task_id
    save_table(table, out_dir / "table.json")
    save_profile(profile, out_dir / "profile.json")
    s = profile.summaries()
    print(f"{spec.task_id} {args.model}: target {s['target']:.1f} "
          f"left {s['left']:.1f} right {s['right']:.1f} "
          f"ratio {s['left_right_ratio']:.2f} "
          f"(acc full {table.acc_full:.4f}, masked "
          f"{table.acc_all_masked:.4f})")
    return 0


def cmd_shapley_report(args) -> int:
    cfg = _config(args)
    root = Path(cfg.out_dir) / "shapley"
    if not root.is_dir():
        raise DataError(f"no shapley results under {root}")
    profiles = {}
    for path in sorted(root.rglob("profile.json")):
        model_id = path.parent.parent.name
        if args.model and model_id != args.model:
            continue
        task_id = path.parent.name
        parts = task_id.split("_")
        if len(parts) != 3:
            continue
        profiles[tuple(parts)] = load_profile(path).vector
    if not profiles:
        raise DataError(f"no profiles found under {root}")
    gv = generalization_variance(profiles, args.aggregate)
    rows = [[value, gv.per_value[value]] for value in sorted(gv.per_value)]
    rows.append(["overall", gv.overall])
    out_path = root / f"variance_{args.aggregate}.csv"
    write_csv(out_path, [args.aggregate, "mean_dfm"], rows)
    for value in sorted(gv.per_value):
        print(f"{value}: mean dfm {gv.per_value[value]:.4f}")
    print(f"overall: {gv.overall:.4f} -> {out_path}")
    return 0


def cmd_ablate(args) -> int:
    cfg = _config(args)
    dataset, _ = load_task(args.task)
    task_id = dataset.spec.task_id
    out_base = Path(cfg.out_dir) / "ablate" / args.model / task_id
    spec = _experiment_spec(cfg, task_id, args.model,
                            n_seeds=args.n_seeds)
    if args.layers:
        provider = build_provider(cfg, args.model)
        if provider is None:
            raise ConfigError("layer ablation needs an embedding model")
        n_layers = getattr(provider, "n_layers", None)
        if not n_layers:
            raise ConfigError(f"backend for {args.model!r} does not expose "
                              "its layer count")
        results = layer_ablation(dataset, spec, provider, n_layers)
        rows = []
        for mode in results:
            result = results[mode]
            write_json(out_base / "layers" / f"{mode.replace(':', '_')}.json",
                       result.to_dict())
            rows.append([mode, result.mean_test_acc, result.std_test_acc])
            print(f"{mode:>14}: {result.mean_test_acc:.4f} "
                  f"+- {result.std_test_acc:.4f}")
        write_csv(out_base / "layers.csv",
                  ["layer_mode", "mean_test_acc", "std_test_acc"], rows)
        return 0
    if args.size:
        provider = build_provider(cfg, args.model)
        fractions = tuple(float(f) for f in args.fractions.split(","))
        curve = train_size_ablation(dataset, spec, provider, fractions)
        rows = []
        for fraction, result in curve:
            n_train = len(subsample_train(dataset.train, fraction, task_id,
                                          spec.base_seed))
            rows.append([fraction, n_train, result.mean_test_acc,
                         result.std_test_acc])
            print(f"fraction {fraction:>5}: n={n_train:>5} "
                  f"acc {result.mean_test_acc:.4f} "
                  f"+- {result.std_test_acc:.4f}")
        write_csv(out_base / "size.csv",
                  ["fraction", "n_train", "mean_test_acc", "std_test_acc"],
                  rows)
        return 0
    # --random
    registry_kind = (cfg.models[args.model].kind
                     if args.model in cfg.models else None)
    if registry_kind == "random":
        provider = build_provider(cfg, args.model)
        result = run_experiment(dataset, spec, provider)
    else:
        result = random_control(dataset, spec, args.random_mode,
                                dim=args.dim, seed=cfg.master_seed)
    baseline = majority_baseline(dataset)
    write_json(out_base / f"random_{args.random_mode}.json", result.to_dict())
    print(f"{task_id} {args.model} ({args.random_mode}): "
          f"acc {result.mean_test_acc:.4f} vs majority {baseline:.4f}")
    return 0


# -- analysis ----------------------------------------------------------------

def _perturb_results(cfg: ExperimentConfig):
    root = Path(cfg.out_dir) / "perturb"
    results = _load_results(root) if root.exists() else []
    if not results:
        raise DataError(f"no perturbation results under {root}; "
                        "run `morphoprobe perturb` first")
    return results


def cmd_analyze(args) -> int:
    cfg = _config(args)
    analysis_dir = Path(cfg.out_dir) / "analysis"
    if args.effects:
        records = effects_from_results(_perturb_results(cfg))
        if not records:
            print("warning: no perturbed/original result pairs",
                  file=sys.stderr)
            return 0
        effects_csv(records, analysis_dir / "effects.csv")
        matrix = pearson_matrix(records)
        correlation_csv(matrix, analysis_dir / "effect_correlations.csv")
        for la, lb, why in matrix.flagged:
            print(f"flagged {la} ~ {lb}: {why}", file=sys.stderr)
        print(f"{len(records)} effects, {len(matrix.labels)} correlation "
              f"columns -> {analysis_dir}")
        return 0
    if args.cluster:
        records = effects_from_results(_perturb_results(cfg))
        languages = sorted({r.task.split("_")[0] for r in records})
        def column_of(r):
            pos_feature = "_".join(r.task.split("_")[1:])
            if args.average_models:
                return (pos_feature, r.perturbation)
            return (r.model_id, pos_feature, r.perturbation)
        columns = sorted({column_of(r) for r in records})
        cells: dict[tuple, list[float]] = {}
        for r in records:
            key = (r.task.split("_")[0], column_of(r))
            cells.setdefault(key, []).append(r.effect)
        features = np.full((len(languages), len(columns)), np.nan)
        for i, lang in enumerate(languages):
            for j, col in enumerate(columns):
                values = cells.get((lang, col))
                if values:
                    features[i, j] = float(np.mean(values))
        matrix = consensus_cluster(features, languages, n_runs=args.runs,
                                   seed=cfg.master_seed)
        cooccurrence_csv(matrix, analysis_dir / "cooccurrence.csv")
        svg = cooccurrence_heatmap_svg(matrix, cfg.families)
        (analysis_dir / "cooccurrence.svg").write_text(svg, encoding="utf-8")
        print(f"clustered {len(languages)} languages x {len(columns)} "
              f"feature columns over {args.runs} runs -> {analysis_dir}")
        return 0
    if args.layerweights:
        root = Path(cfg.out_dir) / "train"
        results = _load_results(root) if root.exists() else []
        rows = []
        for result in results:
            if result.layer_weights is None:
                continue
            diag = layer_weight_diagnostics(result.layer_weights)
            rows.append([result.spec.task_id, result.spec.model_id,
                         diag["entropy"], diag["max_min_ratio"]])
        if not rows:
            raise DataError(f"no layer-weighted results under {root}")
        rows.sort(key=lambda r: (r[0], r[1]))
        write_csv(analysis_dir / "layer_weights.csv",
                  ["task", "model_id", "entropy_bits", "max_min_ratio"],
                  rows)
        for row in rows:
            print(f"{row[0]} {row[1]}: entropy {row[2]:.3f} bits, "
                  f"ratio {row[3]:.3f}")
        return 0
    # --score-external
    if not args.gold:
        raise ConfigError("--score-external needs --gold")
    scores = score_external(Path(args.score_external), Path(args.gold),
                            args.lang)
    write_json(analysis_dir / "external_scores.json", scores)
    for feature in sorted(scores):
        entry = scores[feature]
        print(f"{feature}: {entry['mean']:.4f} over {entry['n']} tokens")
    return 0


def score_external(pred_path: Path, gold_path: Path,
                   language: str) -> dict[str, dict]:
    """Partial-credit scoring of predicted morphological features.

    Files align sentence-by-sentence and token-by-token. For each gold
    feature value, credit is 1/d when the value appears among the d
    distinct predicted values. Multivalued gold entries are scored per
    value and averaged.
    """
    for path in (pred_path, gold_path):
        if not path.exists():
            raise DataError(f"file not found: {path}")
    pred = parse_conllu(pred_path.read_bytes(), language, "pred", "test")
    gold = parse_conllu(gold_path.read_bytes(), language, "gold", "test")
    if len(pred) != len(gold):
        raise DataError(f"sentence count mismatch: {len(pred)} predicted "
                        f"vs {len(gold)} gold")
    totals: dict[str, list[float]] = {}
    for sent_index, (ps, gs) in enumerate(zip(pred, gold)):
        if len(ps.tokens) != len(gs.tokens):
            raise DataError(f"token count mismatch in sentence "
                            f"{sent_index + 1}")
        for pt, gt in zip(ps.tokens, gs.tokens):
            for feature in TARGET_FEATURES:
                if feature not in gt.feats:
                    continue
                predicted = pt.feats.get(feature, "")
                predicted_values = ([v for v in predicted.split(",") if v]
                                    if predicted else [])
                gold_values = gt.feats[feature].split(",")
                credit = float(np.mean([
                    partial_credit_score(predicted_values, gv)
                    for gv in gold_values]))
                totals.setdefault(feature, []).append(credit)
    return {feature: {"mean": float(np.mean(values)), "n": len(values)}
            for feature, values in totals.items()}


def cmd_report(args) -> int:
    cfg = _config(args)
    written = emit_report(cfg.out_dir, cfg.families)
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
