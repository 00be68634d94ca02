"""Model loading, randomized control modes, and deterministic inference."""

from __future__ import annotations

import numpy as np

from .alignment import tokenize_words
from .config import ExtractorConfig
from .errors import ExtractorError, ModelUnavailable
from .manifest import Request


def _load_torch():
    import torch
    torch.set_num_threads(1)
    return torch


class Extractor:
    """A loaded MLM plus its tokenizer, exposing per-request embedding.

    Inference always runs one sequence per forward pass: identical float
    reduction order is what makes extract output and serve responses
    bit-identical for the same request.
    """

    def __init__(self, config: ExtractorConfig):
        torch = _load_torch()
        from transformers import AutoModel, AutoTokenizer

        self.config = config
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(config.model_path)
            self.model = AutoModel.from_pretrained(config.model_path)
        except (OSError, ValueError) as exc:
            raise ModelUnavailable(
                f"cannot load model from {config.model_path!r}: {exc}"
            ) from exc
        for name in ("cls_token_id", "sep_token_id", "mask_token_id",
                     "unk_token_id"):
            if getattr(self.tokenizer, name, None) is None:
                raise ModelUnavailable(f"tokenizer lacks {name}")

        if config.mode != "pretrained":
            self._reinitialize(torch)
        self.model.eval()
        self.model.to(config.device)

        self.n_layers = int(self.model.config.num_hidden_layers) + 1
        self.dim = int(self.model.config.hidden_size)
        self.max_positions = int(
            getattr(self.model.config, "max_position_embeddings", 1 << 30))

    @staticmethod
    def _strip_init_guards(module) -> None:
        # from_pretrained flags loaded weights as initialized and the
        # library init functions skip flagged tensors, so without this
        # apply(_init_weights) silently keeps every loaded value
        for sub in module.modules():
            if hasattr(sub, "_is_hf_initialized"):
                sub._is_hf_initialized = False
            for tensor in (list(sub.parameters(recurse=False))
                           + list(sub.buffers(recurse=False))):
                if hasattr(tensor, "_is_hf_initialized"):
                    tensor._is_hf_initialized = False

    def _reinitialize(self, torch) -> None:
        """fully_random redraws every weight; random_layers keeps the
        embedding layer and redraws the Transformer stack. The seed is
        recorded in archive metadata by the extract step."""
        torch.manual_seed(self.config.reinit_seed)
        if self.config.mode == "fully_random":
            self._strip_init_guards(self.model)
            self.model.apply(self.model._init_weights)
            return
        encoder = getattr(self.model, "encoder", None)
        if encoder is None:
            raise ExtractorError(
                "random_layers needs a model with an encoder stack, "
                f"{type(self.model).__name__} has none")
        for part in (encoder, getattr(self.model, "pooler", None)):
            if part is not None:
                self._strip_init_guards(part)
                part.apply(self.model._init_weights)

    def embed_request(self, request: Request
                      ) -> tuple[np.ndarray, np.ndarray, list[int]]:
        """-> (values [n_layers, n_subwords, dim] float32, alignment,
        unk-fallback word positions)."""
        torch = _load_torch()
        ids, alignment, fallbacks = tokenize_words(
            self.tokenizer, request.words, request.masked_positions)
        if len(ids) > self.max_positions:
            raise ExtractorError(
                f"sequence of {len(ids)} tokens exceeds the model's "
                f"{self.max_positions} positions")
        batch = torch.tensor([ids], dtype=torch.long,
                             device=self.config.device)
        with torch.inference_mode():
            out = self.model(input_ids=batch, output_hidden_states=True)
        stacked = torch.stack(out.hidden_states, dim=0)[:, 0, :, :]
        values = stacked.to("cpu").numpy().astype(np.float32, copy=False)
        return values, alignment, fallbacks
