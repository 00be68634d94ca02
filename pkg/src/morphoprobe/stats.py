"""Effect metrics, significance tests, correlations, consensus clustering,
layer-weight diagnostics, and the external partial-credit scorer.

The paired t-test evaluates the t CDF through the regularized incomplete
beta function (scipy.special.betainc); the sign test is an exact two-sided
binomial computed in rational arithmetic; k-means (k-means++ seeding plus
Lloyd iterations) is hand-rolled so per-run seeds come from the portable
PRNG and consensus runs are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import betainc

from .errors import DataError, DegenerateTaskError
from .rng import Xoshiro256, derive_seed
from .sampler import TaskDataset


@dataclass(frozen=True)
class EffectRecord:
    model_id: str
    task: str
    perturbation: str
    effect: float


def effect(acc_unperturbed: float, acc_perturbed: float) -> float:
    """Relative accuracy drop; negative when perturbation helps."""
    if acc_unperturbed <= 0.0:
        raise DegenerateTaskError(
            "effect undefined for zero unperturbed accuracy")
    return 1.0 - acc_perturbed / acc_unperturbed


def paired_t_test(pairs_a, pairs_b) -> float:
    """Two-sided paired t-test p-value over matched accuracy pairs."""
    a = np.asarray(pairs_a, dtype=np.float64)
    b = np.asarray(pairs_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError("paired t-test needs two equal-length vectors")
    n = a.size
    if n < 2:
        raise DataError("paired t-test needs at least 2 pairs")
    diffs = a - b
    mean = float(np.mean(diffs))
    sd = float(np.std(diffs, ddof=1))
    if sd == 0.0:
        return 1.0 if mean == 0.0 else 0.0
    t = mean / (sd / math.sqrt(n))
    df = n - 1
    # two-sided p = I_{df/(df+t^2)}(df/2, 1/2)
    x = df / (df + t * t)
    return float(betainc(df / 2.0, 0.5, x))


def bonferroni(p: float, m: int) -> float:
    if m < 1:
        raise DataError("family size must be >= 1")
    return min(1.0, m * p)


def sign_test(n_successes: int, n_trials: int) -> float:
    """Exact two-sided binomial test against p=0.5.

    Computed in exact rational arithmetic by doubling the smaller tail
    (the null is symmetric), capped at 1.
    """
    k, n = n_successes, n_trials
    if not (0 <= k <= n):
        raise DataError(f"need 0 <= k <= n, got k={k}, n={n}")
    if n == 0:
        return 1.0
    k = min(k, n - k)
    tail = Fraction(sum(math.comb(n, j) for j in range(k + 1)), 2 ** n)
    return float(min(Fraction(1), 2 * tail))


@dataclass
class CorrelationMatrix:
    labels: list[str]
    values: np.ndarray            # nan where undefined
    n_common: np.ndarray          # common-task counts per cell
    flagged: list[tuple[str, str, str]] = field(default_factory=list)


def pearson_matrix(records: list[EffectRecord],
                   min_common: int = 3) -> CorrelationMatrix:
    """Pairwise Pearson correlations between (model, perturbation) effect
    columns over their common tasks.

    Cells with fewer than min_common shared tasks or a zero-variance column
    are left undefined (nan) and flagged.
    """
    columns: dict[str, dict[str, float]] = {}
    for rec in records:
        key = f"{rec.model_id}:{rec.perturbation}"
        columns.setdefault(key, {})[rec.task] = rec.effect
    labels = sorted(columns)
    k = len(labels)
    values = np.full((k, k), np.nan)
    n_common = np.zeros((k, k), dtype=np.int64)
    flagged: list[tuple[str, str, str]] = []
    for i, la in enumerate(labels):
        for j, lb in enumerate(labels):
            if j < i:
                continue
            common = sorted(set(columns[la]) & set(columns[lb]))
            n_common[i, j] = n_common[j, i] = len(common)
            if len(common) < min_common:
                flagged.append((la, lb, "insufficient_common_tasks"))
                continue
            x = np.array([columns[la][t] for t in common])
            y = np.array([columns[lb][t] for t in common])
            if i == j:
                values[i, j] = 1.0
                continue
            sx, sy = np.std(x), np.std(y)
            if sx == 0.0 or sy == 0.0:
                flagged.append((la, lb, "zero_variance"))
                continue
            r = float(np.mean((x - np.mean(x)) * (y - np.mean(y))) / (sx * sy))
            values[i, j] = values[j, i] = r
    return CorrelationMatrix(labels=labels, values=values, n_common=n_common,
                             flagged=flagged)


# -- consensus clustering ----------------------------------------------------

def impute_column_means(matrix: np.ndarray) -> np.ndarray:
    """Replace NaN cells with their column means (fully observed columns
    are untouched)."""
    out = np.array(matrix, dtype=np.float64, copy=True)
    for col in range(out.shape[1]):
        column = out[:, col]
        missing = np.isnan(column)
        if missing.all():
            raise DataError(f"column {col} has no observed entries")
        if missing.any():
            column[missing] = column[~missing].mean()
    return out


def _kmeans_once(data: np.ndarray, k: int, rng: Xoshiro256,
                 tol: float = 1e-6, max_iter: int = 100) -> np.ndarray:
    """k-means++ seeding followed by Lloyd iterations; returns labels."""
    n = data.shape[0]
    centers = np.empty((k, data.shape[1]))
    first = rng.randrange(n)
    centers[0] = data[first]
    closest = np.sum((data - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = float(np.sum(closest))
        if total <= 0.0:
            centers[c] = data[rng.randrange(n)]
        else:
            # sample proportionally to squared distance
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(closest), r))
            idx = min(idx, n - 1)
            centers[c] = data[idx]
        closest = np.minimum(closest,
                             np.sum((data - centers[c]) ** 2, axis=1))
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        distances = np.sum(
            (data[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = np.argmin(distances, axis=1)
        new_centers = centers.copy()
        for c in range(k):
            members = data[labels == c]
            if len(members):
                new_centers[c] = members.mean(axis=0)
        shift = float(np.max(np.abs(new_centers - centers)))
        centers = new_centers
        if shift < tol:
            break
    return labels


@dataclass
class CooccurrenceMatrix:
    labels: list[str]
    counts: np.ndarray
    n_runs: int

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.labels)
        if self.counts.shape != (n, n):
            raise DataError("co-occurrence matrix shape mismatch")


def consensus_cluster(features: np.ndarray, labels: list[str],
                      n_runs: int = 100, k_range: tuple[int, int] = (3, 8),
                      seed: int = 0, standardize: bool = False,
                      tol: float = 1e-6, max_iter: int = 100,
                      ) -> CooccurrenceMatrix:
    """Count how often each pair of rows lands in the same k-means cluster
    over n_runs runs with K drawn uniformly from k_range (resampled while
    K exceeds the number of rows)."""
    data = impute_column_means(np.asarray(features, dtype=np.float64))
    if data.shape[0] != len(labels):
        raise DataError("feature rows and labels differ in length")
    n = data.shape[0]
    if n < 2:
        raise DataError("clustering needs at least 2 rows")
    if standardize:
        sd = data.std(axis=0)
        sd[sd == 0.0] = 1.0
        data = (data - data.mean(axis=0)) / sd
    lo, hi = k_range
    if not (1 <= lo <= hi):
        raise DataError(f"bad k_range {k_range}")
    if lo > n:
        raise DataError(
            f"k_range {k_range} infeasible for {n} rows")
    counts = np.zeros((n, n), dtype=np.int64)
    for run in range(n_runs):
        rng = Xoshiro256(derive_seed(seed, "cluster", run))
        k = lo + rng.randrange(hi - lo + 1)
        while k > n:
            k = lo + rng.randrange(hi - lo + 1)
        assignment = _kmeans_once(data, k, rng, tol=tol, max_iter=max_iter)
        same = assignment[:, None] == assignment[None, :]
        counts += same.astype(np.int64)
    return CooccurrenceMatrix(labels=list(labels), counts=counts,
                              n_runs=n_runs)


def layer_weight_diagnostics(weights) -> dict[str, float]:
    """Entropy (bits) and max/min ratio of softmaxed layer weights.

    Entropy is measured in bits: the uniform distribution over 13 layers
    scores log2(13) = 3.70. A zero weight makes the ratio infinite; it is
    reported as such.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise DataError("need a 1-D weight vector")
    if abs(float(np.sum(w)) - 1.0) > 1e-6 or np.any(w < 0):
        raise DataError("weights must be a probability distribution")
    nonzero = w[w > 0]
    entropy = float(-np.sum(nonzero * np.log2(nonzero))) + 0.0
    w_min = float(np.min(w))
    w_max = float(np.max(w))
    ratio = math.inf if w_min == 0.0 else w_max / w_min
    return {"entropy": entropy, "max_min_ratio": ratio}


def partial_credit_score(predicted_values, gold: str) -> float:
    """1 for a single correct distinct value, 1/d when the gold value is
    one of d distinct predictions, 0 when it is absent."""
    distinct = set(predicted_values)
    if gold not in distinct:
        return 0.0
    return 1.0 / len(distinct)


def majority_baseline(dataset: TaskDataset) -> float:
    """Accuracy of always predicting the most frequent train label (ties
    broken toward the lexicographically smallest label) on the test split."""
    counts: dict[str, int] = {}
    for inst in dataset.train:
        counts[inst.label] = counts.get(inst.label, 0) + 1
    if not counts or not dataset.test:
        raise DataError("majority baseline needs nonempty train and test")
    majority = min(counts, key=lambda l: (-counts[l], l))
    hits = sum(1 for inst in dataset.test if inst.label == majority)
    return hits / len(dataset.test)
