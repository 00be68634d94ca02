"""Layered embedding tensors, subword pooling, and fertility statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, IntegrityError
from .request import EmbeddingRequest


@dataclass
class LayeredEmbedding:
    """(layers+1) x subwords x dim vectors with subword->word alignment.

    subword_token_map[j] is the 0-based word index feeding subword j, or -1
    for special symbols (CLS/SEP-like). values is float32, layer-major.
    """
    n_layers: int
    n_subwords: int
    dim: int
    values: np.ndarray
    subword_token_map: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float32)
        self.subword_token_map = np.ascontiguousarray(
            self.subword_token_map, dtype=np.int32)
        if self.values.shape != (self.n_layers, self.n_subwords, self.dim):
            raise DataError(
                f"values shape {self.values.shape} != "
                f"({self.n_layers}, {self.n_subwords}, {self.dim})")
        if self.subword_token_map.shape != (self.n_subwords,):
            raise DataError("subword_token_map length != n_subwords")

    def validate(self, request: EmbeddingRequest | None = None) -> list[str]:
        """Contract check; returns a list of violations (empty = ok)."""
        problems = []
        tmap = self.subword_token_map
        word_like = tmap[tmap >= 0]
        if word_like.size and np.any(np.diff(word_like) < 0):
            problems.append("subword_token_map not monotone over words")
        if request is not None:
            n_words = len(request.words)
            attested = set(int(x) for x in word_like)
            missing = sorted(set(range(n_words)) - attested)
            if missing:
                problems.append(f"words with no subword: {missing}")
            out_of_range = sorted(x for x in attested if x >= n_words)
            if out_of_range:
                problems.append(f"alignment to nonexistent words: {out_of_range}")
            for pos in request.masked_positions:
                count = int(np.sum(tmap == pos))
                if count != 1:
                    problems.append(
                        f"masked word {pos} maps to {count} subwords, "
                        f"expected exactly 1")
        return problems


def pool_subwords(embedding: LayeredEmbedding, word_index: int,
                  strategy: str) -> np.ndarray:
    """Select the first or last subword row of a word across all layers."""
    if strategy not in ("first", "last"):
        raise DataError(f"pooling strategy must be first|last, got {strategy!r}")
    rows = np.flatnonzero(embedding.subword_token_map == word_index)
    if rows.size == 0:
        raise IntegrityError(
            f"word index {word_index} not attested in subword_token_map")
    row = rows[0] if strategy == "first" else rows[-1]
    return embedding.values[:, row, :]


def fertility(records) -> dict[str, float]:
    """Subword fertility over alignment maps.

    records: iterable of (subword_token_map, n_words, target_index).
    overall = total subwords (specials excluded) / total words;
    target  = mean subword count of the target word.
    """
    total_subwords = 0
    total_words = 0
    target_counts = []
    for tmap, n_words, target_index in records:
        tmap = np.asarray(tmap)
        total_subwords += int(np.sum(tmap >= 0))
        total_words += int(n_words)
        target_counts.append(int(np.sum(tmap == target_index)))
    if total_words == 0 or not target_counts:
        raise DataError("fertility needs at least one nonempty record")
    return {"overall": total_subwords / total_words,
            "target": float(np.mean(target_counts))}
