"""Exact Shapley values over the 9 positional players.

A CoalitionTable holds one accuracy per coalition of the canonical players
{-4-, -3, -2, -1, 0, 1, 2, 3, 4+} (bitmask order as in perturb.PLAYERS).
Values are normalized so the empty coalition is worth 0 and the full
coalition 100:

    v(S) = 100 * (Acc_S - Acc_all_masked) / (Acc_full - Acc_all_masked)

and the attribution is the exact Shapley value

    phi(i) = (1/n) * sum over S without i of
             [v(S + i) - v(S)] / C(n-1, |S|).

A permutation-enumeration oracle (feasible for <= 6 players) provides an
independent check of the same quantity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import permutations
from pathlib import Path

import numpy as np

from .errors import DataError, DegenerateTaskError
from .perturb import N_PLAYERS, PLAYERS

N_COALITIONS = 1 << N_PLAYERS
FULL_MASK = N_COALITIONS - 1

_POPCOUNT = np.array([bin(m).count("1") for m in range(N_COALITIONS)],
                     dtype=np.int64)


@dataclass
class CoalitionTable:
    """Complete map coalition-bitmask -> accuracy, plus provenance."""
    accs: np.ndarray                 # shape [512], float64
    model_id: str = ""
    task: str = ""
    # Bitmask of players actually attested in the task's sentences; masks
    # outside it collapse onto their intersection with it.
    attested_mask: int = FULL_MASK

    def __post_init__(self):
        self.accs = np.asarray(self.accs, dtype=np.float64)
        if self.accs.shape != (N_COALITIONS,):
            raise DataError(
                f"coalition table needs {N_COALITIONS} accuracies, got "
                f"shape {self.accs.shape}")

    @property
    def acc_full(self) -> float:
        return float(self.accs[FULL_MASK])

    @property
    def acc_all_masked(self) -> float:
        return float(self.accs[0])

    def values(self) -> np.ndarray:
        """Normalized v(S) for every coalition: v(empty)=0, v(full)=100."""
        denom = self.acc_full - self.acc_all_masked
        if denom == 0.0:
            raise DegenerateTaskError(
                "unmasked and all-masked accuracies coincide "
                f"({self.acc_full}); attribution undefined")
        return 100.0 * (self.accs - self.acc_all_masked) / denom


def coalition_value(table: CoalitionTable, mask: int) -> float:
    if not (0 <= mask < N_COALITIONS):
        raise DataError(f"coalition bitmask out of range: {mask}")
    return float(table.values()[mask])


def shapley_raw(values: np.ndarray, n_players: int) -> np.ndarray:
    """Exact Shapley values of an arbitrary value function given as an
    array of length 2**n_players (bit i = player i present)."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (1 << n_players,):
        raise DataError(
            f"need {1 << n_players} values for {n_players} players")
    popcount = (_POPCOUNT[:1 << n_players] if n_players <= N_PLAYERS
                else np.array([bin(m).count("1")
                               for m in range(1 << n_players)]))
    combs = np.array([math.comb(n_players - 1, s) for s in range(n_players)],
                     dtype=np.float64)
    phi = np.zeros(n_players)
    masks = np.arange(1 << n_players)
    for i in range(n_players):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        marginals = values[without | bit] - values[without]
        # Sum marginals per coalition size before dividing: numerically
        # cleaner than per-term weights (integer-valued games stay exact).
        by_size = np.bincount(popcount[without], weights=marginals,
                              minlength=n_players)
        phi[i] = np.sum(by_size / combs) / n_players
    return phi


@dataclass
class ShapleyProfile:
    phi: dict[int, float]            # keyed by player (-4..4)
    task: str = ""
    model_id: str = ""

    def __post_init__(self):
        if set(self.phi) != set(PLAYERS):
            raise DataError(f"profile must cover players {PLAYERS}")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.phi[p] for p in PLAYERS])

    @property
    def left(self) -> float:
        return float(sum(self.phi[p] for p in PLAYERS if p < 0))

    @property
    def right(self) -> float:
        return float(sum(self.phi[p] for p in PLAYERS if p > 0))

    @property
    def target(self) -> float:
        return float(self.phi[0])

    @property
    def context(self) -> float:
        return self.left + self.right

    @property
    def left_right_ratio(self) -> float:
        """left/right; when the right share is nonpositive while the left
        is positive, left dominance is total and the ratio is +inf."""
        if self.right > 0.0:
            return self.left / self.right
        if self.left > 0.0:
            return math.inf
        return math.nan

    def summaries(self) -> dict[str, float]:
        return {"left": self.left, "right": self.right,
                "target": self.target, "context": self.context,
                "left_right_ratio": self.left_right_ratio}


def shapley_from_table(table: CoalitionTable) -> ShapleyProfile:
    phi = shapley_raw(table.values(), N_PLAYERS)
    return ShapleyProfile(
        phi={p: float(phi[i]) for i, p in enumerate(PLAYERS)},
        task=table.task, model_id=table.model_id)


def shapley_permutation_oracle(value_fn, players: list) -> dict:
    """Average marginal contribution over all |players|! orderings.

    value_fn maps a frozenset of players to a value. Refuses more than 6
    players (enumeration grows factorially).
    """
    if len(players) > 6:
        raise DataError(
            f"permutation oracle limited to 6 players, got {len(players)}")
    totals = {p: 0.0 for p in players}
    count = 0
    for order in permutations(players):
        so_far: set = set()
        prev = value_fn(frozenset())
        for p in order:
            so_far.add(p)
            val = value_fn(frozenset(so_far))
            totals[p] += val - prev
            prev = val
        count += 1
    return {p: totals[p] / count for p in players}


def dfm(profile: ShapleyProfile | np.ndarray,
        mean_profile: ShapleyProfile | np.ndarray) -> float:
    """L1 distance between two profiles on the /100 scale."""
    a = profile.vector if isinstance(profile, ShapleyProfile) else np.asarray(profile)
    b = (mean_profile.vector if isinstance(mean_profile, ShapleyProfile)
         else np.asarray(mean_profile))
    return float(np.sum(np.abs(a / 100.0 - b / 100.0)))


@dataclass
class GeneralizationVariance:
    axis: str
    per_value: dict[str, float] = field(default_factory=dict)
    overall: float = float("nan")


def generalization_variance(profiles: dict[tuple[str, str, str], np.ndarray],
                            axis: str) -> GeneralizationVariance:
    """Mean dfm of profiles from their axis-mean profile.

    profiles is keyed by (language, pos, tag). The full cartesian grid of
    attested axis values is completed first: missing cells take the global
    per-player column means. Axis values with fewer than two observed
    profiles are excluded.
    """
    axes = {"language": 0, "pos": 1, "tag": 2}
    if axis not in axes:
        raise DataError(f"axis must be one of {sorted(axes)}, got {axis!r}")
    if not profiles:
        raise DataError("no profiles given")
    dim = axes[axis]
    observed = {key: np.asarray(vec, dtype=np.float64)
                for key, vec in profiles.items()}
    column_mean = np.mean(np.stack(list(observed.values())), axis=0)
    langs = sorted({k[0] for k in observed})
    poses = sorted({k[1] for k in observed})
    tags = sorted({k[2] for k in observed})
    grid: dict[tuple[str, str, str], np.ndarray] = {}
    for lang in langs:
        for pos in poses:
            for tag in tags:
                key = (lang, pos, tag)
                grid[key] = observed.get(key, column_mean)

    observed_counts: dict[str, int] = {}
    for key in observed:
        observed_counts[key[dim]] = observed_counts.get(key[dim], 0) + 1

    per_value: dict[str, float] = {}
    pooled: list[float] = []
    for value in sorted(observed_counts):
        if observed_counts[value] < 2:
            continue
        members = [vec for key, vec in grid.items() if key[dim] == value]
        mean_vec = np.mean(np.stack(members), axis=0)
        distances = [dfm(vec, mean_vec) for vec in members]
        per_value[value] = float(np.mean(distances))
        pooled.extend(distances)
    if not per_value:
        raise DataError(
            f"every {axis} value has fewer than 2 observed profiles")
    return GeneralizationVariance(axis=axis, per_value=per_value,
                                  overall=float(np.mean(pooled)))


# -- persistence ------------------------------------------------------------

def save_table(table: CoalitionTable, path: str | Path) -> None:
    obj = {"accs": [float(a) for a in table.accs],
           "acc_full": table.acc_full,
           "acc_all_masked": table.acc_all_masked,
           "attested_mask": table.attested_mask,
           "model_id": table.model_id, "task": table.task}
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def load_table(path: str | Path) -> CoalitionTable:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return CoalitionTable(accs=np.asarray(obj["accs"]),
                          model_id=obj.get("model_id", ""),
                          task=obj.get("task", ""),
                          attested_mask=obj.get("attested_mask", FULL_MASK))


def save_profile(profile: ShapleyProfile, path: str | Path) -> None:
    from .perturb import PLAYER_NAMES
    summaries = {k: (v if math.isfinite(v) else None)
                 for k, v in profile.summaries().items()}
    obj = {"phi": {PLAYER_NAMES[p]: profile.phi[p] for p in PLAYERS},
           "summaries": summaries,
           "model_id": profile.model_id, "task": profile.task}
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def load_profile(path: str | Path) -> ShapleyProfile:
    from .perturb import PLAYER_NAMES
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    by_name = {name: p for p, name in PLAYER_NAMES.items()}
    phi = {by_name[name]: float(v) for name, v in obj["phi"].items()}
    return ShapleyProfile(phi=phi, task=obj.get("task", ""),
                          model_id=obj.get("model_id", ""))
