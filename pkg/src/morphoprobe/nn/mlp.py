"""MLP probe with learned layer weighting.

In layered mode the input is [batch, n_layers, H]; the model reduces it to
[batch, H] with a softmax over trainable layer logits before the dense
stack. Flat mode takes [batch, D] directly (used for single-layer and
concatenated-layer probing, where no layer weighting applies).

Dropout sits between the input and the first hidden layer and between the
last hidden layer and the output, train mode only.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .functional import (dropout_mask, log_softmax, nll_loss, relu, softmax,
                         xavier_uniform)


class MLPProbe:
    VARIANTS = {
        "mlp50": {"hidden_sizes": (50,), "activation": "relu"},
        "mlp100": {"hidden_sizes": (100,), "activation": "relu"},
        "mlp50x2": {"hidden_sizes": (50, 50), "activation": "relu"},
        "linear_hidden": {"hidden_sizes": (50,), "activation": "identity"},
        "linear_flat": {"hidden_sizes": (), "activation": "identity"},
    }

    def __init__(self, input_dim: int, output_dim: int,
                 hidden_sizes: tuple[int, ...] = (50,),
                 activation: str = "relu", dropout: float = 0.2,
                 layered: bool = False, n_layers: int | None = None,
                 dtype=np.float32,
                 init_rng: np.random.Generator | None = None):
        if activation not in ("relu", "identity"):
            raise DataError(f"unknown activation {activation!r}")
        if layered and not n_layers:
            raise DataError("layered mode needs n_layers")
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.hidden_sizes = tuple(hidden_sizes)
        self.activation = activation
        self.dropout = dropout
        self.layered = layered
        self.n_layers = n_layers
        self.dtype = dtype
        rng = init_rng or np.random.default_rng(0)

        self.params: dict[str, np.ndarray] = {}
        if layered:
            self.params["layer_logits"] = np.zeros(n_layers, dtype=dtype)
        dims = [input_dim, *self.hidden_sizes, output_dim]
        for i in range(len(dims) - 1):
            self.params[f"W{i}"] = xavier_uniform(
                (dims[i], dims[i + 1]), rng, dtype)
            self.params[f"b{i}"] = np.zeros(dims[i + 1], dtype=dtype)
        self.n_dense = len(dims) - 1

    @classmethod
    def from_variant(cls, variant: str, input_dim: int, output_dim: int,
                     **kwargs) -> "MLPProbe":
        if variant not in cls.VARIANTS:
            raise DataError(f"unknown probe variant {variant!r}; "
                            f"known: {sorted(cls.VARIANTS)}")
        return cls(input_dim=input_dim, output_dim=output_dim,
                   **cls.VARIANTS[variant], **kwargs)

    def layer_weights(self) -> np.ndarray:
        if not self.layered:
            raise DataError("flat probe has no layer weights")
        return softmax(self.params["layer_logits"].astype(np.float64))

    # -- forward -----------------------------------------------------------

    def _forward(self, x: np.ndarray, train_mode: bool,
                 rng: np.random.Generator | None) -> tuple[np.ndarray, dict]:
        cache: dict = {"x": x, "train": train_mode}
        if self.layered:
            if x.ndim != 3 or x.shape[1:] != (self.n_layers, self.input_dim):
                raise DataError(
                    f"layered input must be [B, {self.n_layers}, "
                    f"{self.input_dim}], got {x.shape}")
            w = softmax(self.params["layer_logits"])
            mixed = np.einsum("l,blh->bh", w, x)
            cache["w"] = w
        else:
            if x.ndim != 2 or x.shape[1] != self.input_dim:
                raise DataError(
                    f"input must be [B, {self.input_dim}], got {x.shape}")
            mixed = x
        cache["mixed"] = mixed

        use_dropout = train_mode and self.dropout > 0.0
        if use_dropout and rng is None:
            raise DataError("train-mode forward needs an rng for dropout")

        h = mixed
        if use_dropout:
            m_in = dropout_mask(h.shape, self.dropout, rng, self.dtype)
            h = h * m_in
            cache["m_in"] = m_in
        cache["h0"] = h

        acts = []
        for i in range(self.n_dense - 1):
            z = h @ self.params[f"W{i}"] + self.params[f"b{i}"]
            a = relu(z) if self.activation == "relu" else z
            acts.append((h, z, a))
            h = a
        if self.n_dense > 1 and use_dropout:
            m_out = dropout_mask(h.shape, self.dropout, rng, self.dtype)
            h = h * m_out
            cache["m_out"] = m_out
        last = self.n_dense - 1
        logits = h @ self.params[f"W{last}"] + self.params[f"b{last}"]
        cache["acts"] = acts
        cache["h_last"] = h
        log_probs = log_softmax(logits)
        cache["probs"] = np.exp(log_probs)
        return log_probs, cache

    def forward(self, x: np.ndarray, train_mode: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        log_probs, _ = self._forward(x, train_mode, rng)
        return log_probs

    # -- loss + backward ---------------------------------------------------

    def loss_and_grads(self, x: np.ndarray, labels: np.ndarray,
                       train_mode: bool = False,
                       rng: np.random.Generator | None = None,
                       ) -> tuple[float, dict[str, np.ndarray]]:
        log_probs, cache = self._forward(x, train_mode, rng)
        loss = nll_loss(log_probs, labels)
        batch = x.shape[0]

        dlogits = cache["probs"].copy()
        dlogits[np.arange(batch), labels] -= 1.0
        dlogits /= batch

        grads: dict[str, np.ndarray] = {}
        last = self.n_dense - 1
        grads[f"W{last}"] = cache["h_last"].T @ dlogits
        grads[f"b{last}"] = dlogits.sum(axis=0)
        dh = dlogits @ self.params[f"W{last}"].T
        if "m_out" in cache:
            dh = dh * cache["m_out"]
        for i in range(self.n_dense - 2, -1, -1):
            h_in, z, _ = cache["acts"][i]
            dz = dh * (z > 0) if self.activation == "relu" else dh
            grads[f"W{i}"] = h_in.T @ dz
            grads[f"b{i}"] = dz.sum(axis=0)
            dh = dz @ self.params[f"W{i}"].T
        if "m_in" in cache:
            dh = dh * cache["m_in"]
        # dh is now the gradient w.r.t. the mixed input
        if self.layered:
            x_in, w = cache["x"], cache["w"]
            dcontrib = np.einsum("bh,blh->l", dh, x_in)
            dlogits_layer = w * (dcontrib - np.dot(w, dcontrib))
            grads["layer_logits"] = dlogits_layer.astype(self.dtype)
        return loss, grads
