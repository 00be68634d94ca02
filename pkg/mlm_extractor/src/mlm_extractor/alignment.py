"""Word-by-word tokenization with explicit subword alignment.

Each word is tokenized on its own and the pieces are concatenated, so
masking one word can never change a neighbor's segmentation and coalition
maskings stay comparable across requests. A masked word contributes
exactly one mask token regardless of its length.
"""

from __future__ import annotations

import numpy as np

from .errors import ExtractorError


def tokenize_words(tokenizer, words, masked_positions
                   ) -> tuple[list[int], np.ndarray, list[int]]:
    """Token ids with CLS/SEP, the subword->word map, and the positions
    that fell back to the unknown token because the tokenizer produced
    nothing for them."""
    masked = set(masked_positions)
    ids: list[int] = [tokenizer.cls_token_id]
    alignment: list[int] = [-1]
    fallbacks: list[int] = []
    for index, word in enumerate(words):
        if index in masked:
            pieces = [tokenizer.mask_token_id]
        else:
            pieces = tokenizer.encode(word, add_special_tokens=False)
            if not pieces:
                pieces = [tokenizer.unk_token_id]
                fallbacks.append(index)
        ids.extend(pieces)
        alignment.extend([index] * len(pieces))
    ids.append(tokenizer.sep_token_id)
    alignment.append(-1)
    return ids, np.asarray(alignment, dtype=np.int32), fallbacks


def fertility(records) -> dict[str, float]:
    """Subword fertility over alignment maps.

    records: iterable of (alignment, n_words, target_index) tuples.
    overall = subwords excluding specials / words; target = mean subword
    count of the target word. Matches the consumer-side definition so the
    two can be compared exactly.
    """
    total_subwords = 0
    total_words = 0
    target_counts = []
    for alignment, n_words, target_index in records:
        alignment = np.asarray(alignment)
        total_subwords += int(np.sum(alignment >= 0))
        total_words += int(n_words)
        target_counts.append(int(np.sum(alignment == target_index)))
    if total_words == 0 or not target_counts:
        raise ExtractorError("fertility needs at least one nonempty record")
    return {"overall": total_subwords / total_words,
            "target": float(np.mean(target_counts))}
