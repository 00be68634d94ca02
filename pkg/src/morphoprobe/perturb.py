"""Input perturbations and coalition masking.

Two families of transforms over ProbingInstances:

* named perturbations — ORIGINAL, TARG (mask the target), L(n)/R(n)/B(n)
  (mask up to n words immediately before/after/around the target, fewer at
  sentence edges), PERMUTE (seeded uniform shuffle of all words; the target
  relocates and target_index follows it);
* coalition masks — the 9 positional players {-4-, -3, -2, -1, 0, 1, 2, 3,
  4+} where -4- covers every word at offset <= -4 and 4+ every word at
  offset >= +4; words of players NOT in the coalition are masked.

Masked words are replaced by the sentinel MASK_SENTINEL; the original word
is retained on the PerturbedInstance so character-level models can render
one reserved mask character per original character.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DataError
from .rng import Xoshiro256, derive_seed
from .sampler import ProbingInstance, TaskDataset

MASK_SENTINEL = "⟨MASK⟩"   # ⟨MASK⟩
MASK_CHAR = "█"                 # █, reserved for char-level rendering

# Canonical player order; index in this tuple is the bit position used by
# coalition bitmasks throughout.
PLAYERS = (-4, -3, -2, -1, 0, 1, 2, 3, 4)
N_PLAYERS = len(PLAYERS)
FULL_COALITION = frozenset(PLAYERS)

PLAYER_NAMES = {-4: "-4-", -3: "-3", -2: "-2", -1: "-1", 0: "0",
                1: "1", 2: "2", 3: "3", 4: "4+"}


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str              # ORIGINAL | TARG | L | R | B | PERMUTE
    n: int | None = None   # window size for L/R/B

    def __post_init__(self):
        if self.kind not in ("ORIGINAL", "TARG", "L", "R", "B", "PERMUTE"):
            raise DataError(f"unknown perturbation kind {self.kind!r}")
        if self.kind in ("L", "R", "B"):
            if self.n is None or self.n < 1:
                raise DataError(f"{self.kind} needs n >= 1, got {self.n}")
        elif self.n is not None:
            raise DataError(f"{self.kind} takes no window size")

    @property
    def name(self) -> str:
        return self.kind.lower() + (str(self.n) if self.n is not None else "")


def parse_perturbation(name: str) -> PerturbationSpec:
    """Parse config-style names: original, targ, l2, r2, b2, permute."""
    text = name.strip().lower()
    if text in ("original", "targ", "permute"):
        return PerturbationSpec(text.upper())
    if text and text[0] in "lrb" and text[1:].isdigit():
        return PerturbationSpec(text[0].upper(), int(text[1:]))
    raise DataError(f"cannot parse perturbation name {name!r}")


@dataclass(frozen=True)
class PerturbedInstance:
    words: tuple[str, ...]           # with MASK_SENTINEL at masked slots
    target_index: int
    label: str
    original_words: tuple[str, ...]  # aligned with `words`
    provenance: str

    def __post_init__(self):
        if len(self.words) != len(self.original_words):
            raise DataError("perturbed and original word lists differ in length")
        if not (0 <= self.target_index < len(self.words)):
            raise DataError("target index outside sentence")

    @property
    def masked_positions(self) -> tuple[int, ...]:
        return tuple(i for i, w in enumerate(self.words)
                     if w == MASK_SENTINEL)


def _mask(words: list[str], positions: set[int], target_index: int,
          label: str, provenance: str) -> PerturbedInstance:
    masked = tuple(MASK_SENTINEL if i in positions else w
                   for i, w in enumerate(words))
    return PerturbedInstance(words=masked, target_index=target_index,
                             label=label, original_words=tuple(words),
                             provenance=provenance)


def apply(instance: ProbingInstance, spec: PerturbationSpec,
          seed: int = 0) -> PerturbedInstance:
    words = list(instance.words)
    t = instance.target_index
    n = len(words)
    prov = f"perturbation:{spec.name}"
    if spec.kind == "ORIGINAL":
        return _mask(words, set(), t, instance.label, prov)
    if spec.kind == "TARG":
        return _mask(words, {t}, t, instance.label, prov)
    if spec.kind in ("L", "R", "B"):
        positions: set[int] = set()
        if spec.kind in ("L", "B"):
            positions.update(range(max(0, t - spec.n), t))
        if spec.kind in ("R", "B"):
            positions.update(range(t + 1, min(n, t + spec.n + 1)))
        return _mask(words, positions, t, instance.label, prov)
    # PERMUTE: seeded uniform permutation of all words; the target word
    # moves with the shuffle and target_index is updated to follow it.
    order = list(range(n))
    Xoshiro256(seed).shuffle(order)
    permuted = [words[j] for j in order]
    new_target = order.index(t)
    return PerturbedInstance(words=tuple(permuted), target_index=new_target,
                             label=instance.label,
                             original_words=tuple(permuted),
                             provenance=f"{prov}:seed={seed}")


def player_for_offset(offset: int) -> int:
    """Map a word's offset from the target to its positional player."""
    return max(-4, min(4, offset))


def attested_players(instance: ProbingInstance) -> frozenset[int]:
    """Players that have at least one referent word in this sentence."""
    t = instance.target_index
    return frozenset(player_for_offset(i - t)
                     for i in range(len(instance.words)))


def coalition_mask(instance: ProbingInstance,
                   coalition: frozenset[int]) -> PerturbedInstance:
    """Mask every word whose player is absent from the coalition."""
    bad = coalition - FULL_COALITION
    if bad:
        raise DataError(f"unknown players in coalition: {sorted(bad)}")
    t = instance.target_index
    positions = {i for i in range(len(instance.words))
                 if player_for_offset(i - t) not in coalition}
    name = ",".join(PLAYER_NAMES[p] for p in sorted(coalition)) or "empty"
    return _mask(list(instance.words), positions, t, instance.label,
                 f"coalition:{{{name}}}")


def coalition_to_mask_bits(coalition: frozenset[int]) -> int:
    """Encode a coalition as a 9-bit mask in canonical player order."""
    bits = 0
    for i, p in enumerate(PLAYERS):
        if p in coalition:
            bits |= 1 << i
    return bits


def coalition_from_mask_bits(bits: int) -> frozenset[int]:
    if not (0 <= bits < (1 << N_PLAYERS)):
        raise DataError(f"coalition bitmask out of range: {bits}")
    return frozenset(p for i, p in enumerate(PLAYERS) if bits & (1 << i))


def mask_dataset(dataset: TaskDataset,
                 masking: PerturbationSpec | frozenset,
                 master_seed: int = 0,
                 ) -> dict[str, list[PerturbedInstance]]:
    """Apply one masking to all three splits of a task.

    Perturbations are applied at training time as well as test time, so the
    train and dev splits are transformed alongside test. PERMUTE seeds are
    derived per (task, split, instance), making the planner and the runner
    agree on every shuffle.
    """
    out: dict[str, list[PerturbedInstance]] = {}
    for split, instances in dataset.splits.items():
        transformed = []
        for i, inst in enumerate(instances):
            if isinstance(masking, PerturbationSpec):
                seed = derive_seed(master_seed, "permute",
                                   dataset.spec.task_id, split, i)
                transformed.append(apply(inst, masking, seed))
            else:
                transformed.append(coalition_mask(inst, frozenset(masking)))
        out[split] = transformed
    return out


@dataclass(frozen=True)
class CharRendering:
    """A perturbed sentence rendered for the character LSTM."""
    text: str
    target_start: int   # first character of the target word
    target_end: int     # index one past its last character


def char_mask(instance: PerturbedInstance) -> CharRendering:
    """Render to characters: each masked word becomes one mask character
    per character of the original word; words are joined by single spaces."""
    parts = []
    target_start = target_end = -1
    cursor = 0
    for i, (word, original) in enumerate(
            zip(instance.words, instance.original_words)):
        if word == MASK_SENTINEL:
            rendered = MASK_CHAR * len(original)
        else:
            if MASK_CHAR in word:
                raise DataError(
                    f"reserved mask character {MASK_CHAR!r} occurs in "
                    f"natural text: {word!r}")
            rendered = word
        if i == instance.target_index:
            target_start = cursor
            target_end = cursor + len(rendered)
        parts.append(rendered)
        cursor += len(rendered) + 1  # the joining space
    return CharRendering(text=" ".join(parts), target_start=target_start,
                         target_end=target_end)
