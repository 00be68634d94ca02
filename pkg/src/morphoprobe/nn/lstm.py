"""Character-level bidirectional LSTM classifier.

30-dimensional character embeddings feed one bidirectional LSTM layer (50
units per direction, 100-wide output). The output at the target word's
first or last character position goes through a 50-unit MLP head. Padded
positions are masked out of the recurrence exactly, so the backward pass
matches finite differences to machine precision regardless of batch
padding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from ..perturb import MASK_CHAR
from .functional import (dropout_mask, log_softmax, nll_loss, relu,
                         uniform_init, xavier_uniform)

PAD_ID = 0
UNK_ID = 1


@dataclass(frozen=True)
class CharVocab:
    """Character inventory. Index 0 is padding, 1 the UNK symbol; the
    reserved mask character is always present."""
    chars: tuple[str, ...]

    @classmethod
    def build(cls, texts) -> "CharVocab":
        inventory = set()
        for text in texts:
            inventory.update(text)
        inventory.add(MASK_CHAR)
        return cls(chars=tuple(sorted(inventory)))

    @property
    def size(self) -> int:
        return len(self.chars) + 2  # PAD + UNK

    def encode(self, text: str) -> np.ndarray:
        table = self._table()
        return np.array([table.get(ch, UNK_ID) for ch in text],
                        dtype=np.int32)

    def _table(self) -> dict[str, int]:
        if not hasattr(self, "_cached_table"):
            object.__setattr__(self, "_cached_table",
                               {ch: i + 2 for i, ch in enumerate(self.chars)})
        return self._cached_table


def encode_batch(vocab: CharVocab, texts: list[str],
                 pool_positions: list[int]) -> tuple[np.ndarray, np.ndarray,
                                                     np.ndarray]:
    """Pad a batch of texts to a common length.

    Returns (ids [B, T], lengths [B], pool [B]); pool positions index into
    each unpadded text.
    """
    if len(texts) != len(pool_positions):
        raise DataError("texts and pool positions differ in length")
    lengths = np.array([len(t) for t in texts], dtype=np.int32)
    if np.any(lengths == 0):
        raise DataError("cannot encode an empty text")
    pool = np.asarray(pool_positions, dtype=np.int32)
    if np.any(pool < 0) or np.any(pool >= lengths):
        raise DataError("pool position outside its text")
    max_len = int(lengths.max())
    ids = np.full((len(texts), max_len), PAD_ID, dtype=np.int32)
    for i, text in enumerate(texts):
        ids[i, :len(text)] = vocab.encode(text)
    return ids, lengths, pool


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class _Direction:
    """One LSTM direction: parameter names and the time iteration order."""

    def __init__(self, name: str, reverse: bool):
        self.name = name
        self.reverse = reverse

    def steps(self, T: int):
        order = range(T - 1, -1, -1) if self.reverse else range(T)
        return list(order)


class CharLSTM:
    def __init__(self, vocab: CharVocab, n_classes: int, char_dim: int = 30,
                 hidden_per_dir: int = 50, head_hidden: int = 50,
                 dropout: float = 0.2, dtype=np.float32,
                 init_rng: np.random.Generator | None = None):
        self.vocab = vocab
        self.n_classes = n_classes
        self.char_dim = char_dim
        self.hidden = hidden_per_dir
        self.head_hidden = head_hidden
        self.dropout = dropout
        self.dtype = dtype
        rng = init_rng or np.random.default_rng(0)

        H, E = hidden_per_dir, char_dim
        scale = 1.0 / np.sqrt(H)
        self.params: dict[str, np.ndarray] = {
            "emb": uniform_init((vocab.size, E), 0.1, rng, dtype),
        }
        self._dirs = (_Direction("f", False), _Direction("b", True))
        for d in self._dirs:
            self.params[f"Wx_{d.name}"] = uniform_init((E, 4 * H), scale, rng,
                                                       dtype)
            self.params[f"Wh_{d.name}"] = uniform_init((H, 4 * H), scale, rng,
                                                       dtype)
            self.params[f"bias_{d.name}"] = np.zeros(4 * H, dtype=dtype)
        self.params["W_head1"] = xavier_uniform((2 * H, head_hidden), rng,
                                                dtype)
        self.params["b_head1"] = np.zeros(head_hidden, dtype=dtype)
        self.params["W_head2"] = xavier_uniform((head_hidden, n_classes), rng,
                                                dtype)
        self.params["b_head2"] = np.zeros(n_classes, dtype=dtype)

    def n_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    # -- forward -----------------------------------------------------------

    def _run_direction(self, d: _Direction, X: np.ndarray,
                       valid: np.ndarray) -> tuple[np.ndarray, list]:
        """Run one direction over the padded batch.

        X: [B, T, E]; valid: [B, T] float 0/1. Returns the per-position
        hidden outputs [B, T, H] and the per-step caches for backward.
        """
        B, T, _ = X.shape
        H = self.hidden
        Wx = self.params[f"Wx_{d.name}"]
        Wh = self.params[f"Wh_{d.name}"]
        bias = self.params[f"bias_{d.name}"]
        h = np.zeros((B, H), dtype=X.dtype)
        c = np.zeros((B, H), dtype=X.dtype)
        outputs = np.zeros((B, T, H), dtype=X.dtype)
        caches = []
        for t in d.steps(T):
            m = valid[:, t:t + 1]
            z = X[:, t, :] @ Wx + h @ Wh + bias
            i = _sigmoid(z[:, :H])
            f = _sigmoid(z[:, H:2 * H])
            g = np.tanh(z[:, 2 * H:3 * H])
            o = _sigmoid(z[:, 3 * H:])
            c_raw = f * c + i * g
            tanh_c = np.tanh(c_raw)
            h_raw = o * tanh_c
            h_new = m * h_raw + (1.0 - m) * h
            c_new = m * c_raw + (1.0 - m) * c
            caches.append({"t": t, "m": m, "i": i, "f": f, "g": g, "o": o,
                           "c_prev": c, "h_prev": h, "tanh_c": tanh_c})
            h, c = h_new, c_new
            outputs[:, t, :] = h_new
        return outputs, caches

    def _forward(self, batch, train_mode: bool,
                 rng: np.random.Generator | None) -> tuple[np.ndarray, dict]:
        ids, lengths, pool = batch
        B, T = ids.shape
        valid = (np.arange(T)[None, :] < lengths[:, None]).astype(self.dtype)
        X = self.params["emb"][ids]
        cache: dict = {"ids": ids, "valid": valid, "pool": pool, "X": X}

        pooled_parts = []
        for d in self._dirs:
            outputs, dir_cache = self._run_direction(d, X, valid)
            cache[f"out_{d.name}"] = outputs
            cache[f"cache_{d.name}"] = dir_cache
            pooled_parts.append(outputs[np.arange(B), pool, :])
        pooled = np.concatenate(pooled_parts, axis=1)
        cache["pooled"] = pooled

        use_dropout = train_mode and self.dropout > 0.0
        if use_dropout and rng is None:
            raise DataError("train-mode forward needs an rng for dropout")
        h = pooled
        if use_dropout:
            m_in = dropout_mask(h.shape, self.dropout, rng, self.dtype)
            h = h * m_in
            cache["m_in"] = m_in
        z1 = h @ self.params["W_head1"] + self.params["b_head1"]
        a1 = relu(z1)
        cache.update(h_in=h, z1=z1)
        h2 = a1
        if use_dropout:
            m_out = dropout_mask(h2.shape, self.dropout, rng, self.dtype)
            h2 = h2 * m_out
            cache["m_out"] = m_out
        cache["a1"] = a1
        cache["h2"] = h2
        logits = h2 @ self.params["W_head2"] + self.params["b_head2"]
        log_probs = log_softmax(logits)
        cache["probs"] = np.exp(log_probs)
        return log_probs, cache

    def forward(self, batch, train_mode: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        log_probs, _ = self._forward(batch, train_mode, rng)
        return log_probs

    # -- backward ----------------------------------------------------------

    def _backward_direction(self, d: _Direction, cache: dict,
                            d_outputs: np.ndarray,
                            grads: dict[str, np.ndarray]) -> np.ndarray:
        """BPTT through one direction; returns dX [B, T, E]."""
        X = cache["X"]
        B, T, E = X.shape
        H = self.hidden
        Wx = self.params[f"Wx_{d.name}"]
        Wh = self.params[f"Wh_{d.name}"]
        dWx = np.zeros_like(Wx)
        dWh = np.zeros_like(Wh)
        dbias = np.zeros_like(self.params[f"bias_{d.name}"])
        dX = np.zeros_like(X)
        dh = np.zeros((B, H), dtype=X.dtype)
        dc = np.zeros((B, H), dtype=X.dtype)
        for step in reversed(cache[f"cache_{d.name}"]):
            t = step["t"]
            m = step["m"]
            dh = dh + d_outputs[:, t, :]
            i, f, g, o = step["i"], step["f"], step["g"], step["o"]
            tanh_c = step["tanh_c"]
            dh_raw = dh * m
            dc_raw = dh_raw * o * (1.0 - tanh_c ** 2) + dc * m
            do = dh_raw * tanh_c
            di = dc_raw * g
            df = dc_raw * step["c_prev"]
            dg = dc_raw * i
            dz = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g ** 2),
                do * o * (1.0 - o),
            ], axis=1)
            dWx += X[:, t, :].T @ dz
            dWh += step["h_prev"].T @ dz
            dbias += dz.sum(axis=0)
            dX[:, t, :] = dz @ Wx.T
            dh = dh * (1.0 - m) + dz @ Wh.T
            dc = dc * (1.0 - m) + dc_raw * f
        grads[f"Wx_{d.name}"] = dWx
        grads[f"Wh_{d.name}"] = dWh
        grads[f"bias_{d.name}"] = dbias
        return dX

    def loss_and_grads(self, batch, labels: np.ndarray,
                       train_mode: bool = False,
                       rng: np.random.Generator | None = None,
                       ) -> tuple[float, dict[str, np.ndarray]]:
        log_probs, cache = self._forward(batch, train_mode, rng)
        loss = nll_loss(log_probs, labels)
        B = log_probs.shape[0]
        H = self.hidden

        dlogits = cache["probs"].copy()
        dlogits[np.arange(B), labels] -= 1.0
        dlogits /= B

        grads: dict[str, np.ndarray] = {}
        grads["W_head2"] = cache["h2"].T @ dlogits
        grads["b_head2"] = dlogits.sum(axis=0)
        da1 = dlogits @ self.params["W_head2"].T
        if "m_out" in cache:
            da1 = da1 * cache["m_out"]
        dz1 = da1 * (cache["z1"] > 0)
        grads["W_head1"] = cache["h_in"].T @ dz1
        grads["b_head1"] = dz1.sum(axis=0)
        dpooled = dz1 @ self.params["W_head1"].T
        if "m_in" in cache:
            dpooled = dpooled * cache["m_in"]

        pool = cache["pool"]
        dX_total = np.zeros_like(cache["X"])
        for k, d in enumerate(self._dirs):
            d_outputs = np.zeros_like(cache[f"out_{d.name}"])
            d_outputs[np.arange(B), pool, :] = dpooled[:, k * H:(k + 1) * H]
            dX_total += self._backward_direction(d, cache, d_outputs, grads)

        demb = np.zeros_like(self.params["emb"])
        np.add.at(demb, cache["ids"].reshape(-1),
                  dX_total.reshape(-1, self.char_dim))
        grads["emb"] = demb
        return loss, grads
