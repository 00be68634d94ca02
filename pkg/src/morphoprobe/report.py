"""Deterministic table and figure emission.

Everything here is a pure function of its input tables: no timestamps, no
environment lookups, stable ordering throughout, so reruns are
byte-identical. CSV floats carry 17 significant digits; SVG labels are
rounded for reading but the underlying tables keep full precision.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import numpy as np

from .perturb import PLAYERS, PLAYER_NAMES
from .runner import ExperimentResult
from .shapley import ShapleyProfile
from .stats import CorrelationMatrix, CooccurrenceMatrix, EffectRecord, effect


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines.extend(",".join(fmt(cell) for cell in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path: str | Path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True,
                               ensure_ascii=False) + "\n", encoding="utf-8")


SEED_ROW_HEADER = ["task", "model_id", "probe", "layer_mode", "pooling",
                   "perturbation", "train_fraction", "seed_index",
                   "chosen_pooling", "dev_acc", "test_acc", "epochs_run",
                   "best_epoch", "diverged"]


def seed_rows(results: list[ExperimentResult]) -> list[list]:
    """One row per experiment-seed, sorted for stable output."""
    rows = []
    for result in results:
        s = result.spec
        for record in result.seed_records:
            rows.append([s.task_id, s.model_id, s.probe, s.layer_mode,
                         s.pooling, s.perturbation, s.train_fraction,
                         record.seed_index, record.pooling, record.dev_acc,
                         record.test_acc, record.epochs_run,
                         record.best_epoch, record.diverged])
    rows.sort(key=lambda r: [str(c) for c in r[:8]])
    return rows


def effects_from_results(results: list[ExperimentResult],
                         ) -> list[EffectRecord]:
    """Pair each perturbed result with its unperturbed sibling (same task,
    model, probe settings) and compute the relative accuracy drop."""
    def sibling_key(spec):
        return (spec.task_id, spec.model_id, spec.probe, spec.layer_mode,
                spec.pooling, spec.train_fraction)

    baselines = {sibling_key(r.spec): r.mean_test_acc for r in results
                 if r.spec.perturbation == "original"}
    records = []
    for result in results:
        if result.spec.perturbation == "original":
            continue
        base = baselines.get(sibling_key(result.spec))
        if base is None:
            continue
        records.append(EffectRecord(
            model_id=result.spec.model_id, task=result.spec.task_id,
            perturbation=result.spec.perturbation,
            effect=effect(base, result.mean_test_acc)))
    records.sort(key=lambda r: (r.model_id, r.task, r.perturbation))
    return records


def effects_csv(records: list[EffectRecord], path: str | Path) -> None:
    write_csv(path, ["model_id", "task", "perturbation", "effect"],
              [[r.model_id, r.task, r.perturbation, r.effect]
               for r in records])


def correlation_csv(matrix: CorrelationMatrix, path: str | Path) -> None:
    rows = []
    for i, label in enumerate(matrix.labels):
        rows.append([label] + [matrix.values[i, j]
                               for j in range(len(matrix.labels))])
    write_csv(path, ["column"] + matrix.labels, rows)


def cooccurrence_csv(matrix: CooccurrenceMatrix, path: str | Path) -> None:
    rows = []
    for i, label in enumerate(matrix.labels):
        rows.append([label] + [int(c) for c in matrix.counts[i]])
    write_csv(path, ["language"] + matrix.labels, rows)


def profile_rows(profiles: dict[str, ShapleyProfile]) -> list[list]:
    rows = []
    for name in sorted(profiles):
        p = profiles[name]
        s = p.summaries()
        rows.append([name] + [p.phi[player] for player in PLAYERS]
                    + [s["left"], s["right"], s["target"], s["context"],
                       s["left_right_ratio"]])
    return rows


PROFILE_HEADER = (["task"] + [PLAYER_NAMES[p] for p in PLAYERS]
                  + ["left", "right", "target", "context",
                     "left_right_ratio"])


# -- SVG ---------------------------------------------------------------------

def _svg_header(width: int, height: int) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}" '
            f'font-family="sans-serif">')


def shapley_bar_svg(profile: ShapleyProfile, title: str = "") -> str:
    """Nine bars, one per positional player, values straight from phi."""
    width, height = 560, 320
    left, right, top, bottom = 50, 15, 40, 45
    plot_w = width - left - right
    plot_h = height - top - bottom
    values = [profile.phi[p] for p in PLAYERS]
    lo = min(0.0, min(values))
    hi = max(0.0, max(values))
    if hi == lo:
        hi = lo + 1.0
    span = hi - lo

    def y_of(v: float) -> float:
        return top + (hi - v) / span * plot_h

    bar_w = plot_w / len(values) * 0.7
    gap = plot_w / len(values)
    parts = [_svg_header(width, height)]
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="20" font-size="14" '
                     f'text-anchor="middle">{title}</text>')
    zero_y = y_of(0.0)
    parts.append(f'<line x1="{left}" y1="{zero_y:.2f}" x2="{width - right}" '
                 f'y2="{zero_y:.2f}" stroke="#888" stroke-width="1"/>')
    for tick in (lo, hi):
        ty = y_of(tick)
        parts.append(f'<text x="{left - 6}" y="{ty + 4:.2f}" font-size="10" '
                     f'text-anchor="end">{tick:.1f}</text>')
    for i, (player, value) in enumerate(zip(PLAYERS, values)):
        x = left + i * gap + (gap - bar_w) / 2
        y0, y1 = sorted((y_of(value), zero_y))
        color = "#4878a8" if value >= 0 else "#b05050"
        parts.append(f'<rect x="{x:.2f}" y="{y0:.2f}" width="{bar_w:.2f}" '
                     f'height="{max(y1 - y0, 0.5):.2f}" fill="{color}"/>')
        label_y = y0 - 4 if value >= 0 else y1 + 12
        parts.append(f'<text x="{x + bar_w / 2:.2f}" y="{label_y:.2f}" '
                     f'font-size="10" text-anchor="middle">'
                     f'{value:.1f}</text>')
        parts.append(f'<text x="{x + bar_w / 2:.2f}" y="{height - 28}" '
                     f'font-size="11" text-anchor="middle">'
                     f'{PLAYER_NAMES[player]}</text>')
    parts.append(f'<text x="{width / 2:.1f}" y="{height - 8}" font-size="11" '
                 f'text-anchor="middle">player (position relative to '
                 f'target)</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def _heat_color(intensity: float) -> str:
    i = min(max(intensity, 0.0), 1.0)
    r = round(255 - 207 * i)
    g = round(255 - 135 * i)
    b = round(255 - 47 * i)
    return f"#{r:02x}{g:02x}{b:02x}"


def cooccurrence_heatmap_svg(matrix: CooccurrenceMatrix,
                             families: dict[str, str] | None = None) -> str:
    """Co-occurrence heatmap with languages sorted by family; group
    boundaries get separator lines."""
    families = families or {}
    order = sorted(range(len(matrix.labels)),
                   key=lambda i: (families.get(matrix.labels[i], ""),
                                  matrix.labels[i]))
    labels = [matrix.labels[i] for i in order]
    counts = matrix.counts[np.ix_(order, order)]
    n = len(labels)
    cell = 26
    left, top = 90, 90
    width = left + n * cell + 15
    height = top + n * cell + 15
    parts = [_svg_header(width, height)]
    for i in range(n):
        for j in range(n):
            color = _heat_color(counts[i, j] / matrix.n_runs)
            parts.append(f'<rect x="{left + j * cell}" y="{top + i * cell}" '
                         f'width="{cell}" height="{cell}" fill="{color}" '
                         f'stroke="#ddd" stroke-width="0.5"/>')
    for i, label in enumerate(labels):
        parts.append(f'<text x="{left - 6}" y="{top + i * cell + cell / 2 + 4:.1f}" '
                     f'font-size="11" text-anchor="end">{label}</text>')
        parts.append(f'<text x="{left + i * cell + cell / 2:.1f}" '
                     f'y="{top - 8}" font-size="11" text-anchor="middle" '
                     f'transform="rotate(-60 {left + i * cell + cell / 2:.1f} '
                     f'{top - 8})">{label}</text>')
    # separators between family groups
    boundaries = []
    for i in range(1, n):
        fam_prev = families.get(labels[i - 1], "")
        fam_here = families.get(labels[i], "")
        if fam_prev != fam_here:
            boundaries.append(i)
    for b in boundaries:
        parts.append(f'<line x1="{left + b * cell}" y1="{top}" '
                     f'x2="{left + b * cell}" y2="{top + n * cell}" '
                     f'stroke="#222" stroke-width="2"/>')
        parts.append(f'<line x1="{left}" y1="{top + b * cell}" '
                     f'x2="{left + n * cell}" y2="{top + b * cell}" '
                     f'stroke="#222" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts)


# -- report aggregation ------------------------------------------------------

def _load_results(root: Path) -> list[ExperimentResult]:
    results = []
    for path in sorted(root.rglob("*.json")):
        if path.name == "manifest.json" or "results" in path.parts:
            continue
        with open(path, encoding="utf-8") as handle:
            payload = json.load(handle)
        if isinstance(payload, dict) and "seed_records" in payload:
            results.append(ExperimentResult.from_dict(payload))
    return results


def emit_report(out_dir: str | Path,
                families: dict[str, str] | None = None) -> list[Path]:
    """Render CSV/SVG views of everything present under out_dir into
    out_dir/report. Empty inputs produce a warning and no files."""
    from .shapley import load_profile
    out = Path(out_dir)
    report_dir = out / "report"
    written: list[Path] = []

    train_results = _load_results(out / "train") if (out / "train").exists() \
        else []
    perturb_results = _load_results(out / "perturb") \
        if (out / "perturb").exists() else []
    profiles: dict[str, ShapleyProfile] = {}
    shapley_root = out / "shapley"
    if shapley_root.exists():
        for path in sorted(shapley_root.rglob("profile.json")):
            name = "/".join(path.parent.parts[-2:])
            profiles[name] = load_profile(path)

    if not train_results and not perturb_results and not profiles:
        warnings.warn(f"nothing to report under {out}", RuntimeWarning)
        return written

    if train_results:
        path = report_dir / "train_seeds.csv"
        write_csv(path, SEED_ROW_HEADER, seed_rows(train_results))
        written.append(path)
        summary = [[r.spec.task_id, r.spec.model_id, r.spec.probe,
                    r.mean_test_acc, r.std_test_acc, r.mean_dev_acc,
                    r.n_excluded]
                   for r in sorted(train_results,
                                   key=lambda r: (r.spec.task_id,
                                                  r.spec.model_id))]
        path = report_dir / "train_summary.csv"
        write_csv(path, ["task", "model_id", "probe", "mean_test_acc",
                         "std_test_acc", "mean_dev_acc", "n_excluded"],
                  summary)
        written.append(path)

    if perturb_results:
        path = report_dir / "perturb_seeds.csv"
        write_csv(path, SEED_ROW_HEADER, seed_rows(perturb_results))
        written.append(path)
        records = effects_from_results(perturb_results)
        if records:
            path = report_dir / "effects.csv"
            effects_csv(records, path)
            written.append(path)

    if profiles:
        path = report_dir / "shapley_profiles.csv"
        write_csv(path, PROFILE_HEADER, profile_rows(profiles))
        written.append(path)
        for name, profile in sorted(profiles.items()):
            safe = name.replace("/", "_")
            path = report_dir / f"shapley_{safe}.svg"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(shapley_bar_svg(profile, title=name),
                            encoding="utf-8")
            written.append(path)
    return written
