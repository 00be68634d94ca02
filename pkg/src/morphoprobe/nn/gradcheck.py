"""Central finite-difference gradient checking.

Runs in whatever precision the model carries; build the model with
dtype=np.float64 for meaningful tolerances. Dropout is disabled (eval-mode
loss) so the loss is a deterministic function of the parameters.
"""

from __future__ import annotations

import numpy as np


def grad_check(model, batch, labels: np.ndarray, epsilon: float = 1e-5,
               max_coords_per_param: int = 12,
               rng: np.random.Generator | None = None) -> float:
    """Max relative error between analytic and numeric gradients.

    Relative error for one coordinate is |a - n| / max(|a|, |n|, 1e-4); the
    floor keeps near-zero gradients from amplifying finite-difference noise
    while still flagging any real sign or scale bug.
    """
    rng = rng or np.random.default_rng(0)
    _, analytic = model.loss_and_grads(batch, labels, train_mode=False)

    worst = 0.0
    for name in sorted(analytic):
        param = model.params[name]
        flat = param.reshape(-1)
        n_coords = min(max_coords_per_param, flat.size)
        coords = rng.choice(flat.size, size=n_coords, replace=False)
        for coord in coords:
            original = flat[coord]
            flat[coord] = original + epsilon
            loss_plus, _ = model.loss_and_grads(batch, labels,
                                                train_mode=False)
            flat[coord] = original - epsilon
            loss_minus, _ = model.loss_and_grads(batch, labels,
                                                 train_mode=False)
            flat[coord] = original
            numeric = (loss_plus - loss_minus) / (2.0 * epsilon)
            a = float(analytic[name].reshape(-1)[coord])
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-4)
            worst = max(worst, err)
    return worst
