"""Random-control backends.

Two modes mirror the randomized-MLM controls:

* fully_random — every word form gets a fixed noise vector (seeded by the
  form), replicated across all layers: no context, word identity only.
* random_layers — layer 0 comes from a static word-vector archive (the
  "pre-trained embedding layer"), the upper layers mix that vector with the
  form-seeded noise in equal parts ("random Transformer layers").

In both modes the mask sentinel is a form like any other, so every masked
position shares one mask vector, and identical requests produce bit-exact
tensors. Tokenization is word-identity: one subword per word, no specials.
"""

from __future__ import annotations

import math
import threading

import numpy as np

from ..errors import ConfigError, IntegrityError
from ..rng import Xoshiro256, derive_seed
from .archive import ArchiveReader, lookup_static_vector
from ..errors import NotFoundError
from .layered import LayeredEmbedding
from .request import EmbeddingRequest

MODES = ("fully_random", "random_layers")


def _normal_vector(seed: int, dim: int) -> np.ndarray:
    """dim standard normals via Box-Muller on the portable PRNG, so the
    vectors are identical across platforms and numpy versions."""
    rng = Xoshiro256(seed)
    out = np.empty(dim, dtype=np.float64)
    i = 0
    while i < dim:
        u1 = rng.random()
        while u1 <= 0.0:
            u1 = rng.random()
        u2 = rng.random()
        r = math.sqrt(-2.0 * math.log(u1))
        out[i] = r * math.cos(2.0 * math.pi * u2)
        if i + 1 < dim:
            out[i + 1] = r * math.sin(2.0 * math.pi * u2)
        i += 2
    return out.astype(np.float32)


class RandomControlBackend:
    def __init__(self, model_id: str, dim: int, n_layers: int = 13,
                 mode: str = "fully_random", seed: int = 0,
                 static_archive: ArchiveReader | None = None):
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
        if mode == "random_layers" and static_archive is None:
            raise ConfigError("random_layers mode needs a static archive")
        if static_archive is not None and static_archive.dim != dim:
            raise ConfigError(
                f"static archive dim {static_archive.dim} != backend dim {dim}")
        self.model_id = model_id
        self.dim = dim
        self.n_layers = n_layers
        self.mode = mode
        self.seed = seed
        self.static = static_archive
        self._noise_cache: dict[str, np.ndarray] = {}
        self._layer0_cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def _noise(self, form: str) -> np.ndarray:
        with self._lock:
            vec = self._noise_cache.get(form)
        if vec is None:
            vec = _normal_vector(
                derive_seed(self.seed, "noise", self.model_id, form), self.dim)
            with self._lock:
                self._noise_cache[form] = vec
        return vec

    def _layer0(self, form: str) -> np.ndarray:
        with self._lock:
            vec = self._layer0_cache.get(form)
        if vec is None:
            try:
                vec = lookup_static_vector(self.static, form)
            except NotFoundError:
                # Out-of-vocabulary forms fall back to the seeded noise.
                vec = self._noise(form)
            with self._lock:
                self._layer0_cache[form] = vec
        return vec

    def embed(self, request: EmbeddingRequest) -> LayeredEmbedding:
        if request.model_id != self.model_id:
            raise IntegrityError(
                f"request model_id {request.model_id!r} != backend "
                f"{self.model_id!r}")
        n = len(request.words)
        values = np.empty((self.n_layers, n, self.dim), dtype=np.float32)
        for pos, form in enumerate(request.words):
            noise = self._noise(form)
            if self.mode == "fully_random":
                values[:, pos, :] = noise
            else:
                layer0 = self._layer0(form)
                values[0, pos, :] = layer0
                values[1:, pos, :] = 0.5 * layer0 + 0.5 * noise
        return LayeredEmbedding(
            n_layers=self.n_layers, n_subwords=n, dim=self.dim,
            values=values,
            subword_token_map=np.arange(n, dtype=np.int32))
