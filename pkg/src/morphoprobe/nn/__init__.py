"""From-scratch differentiable building blocks.

numpy-only: forward passes cache their intermediates and each model
implements its own exact backward pass, verified against central finite
differences (gradcheck). Training uses Adam with bias correction and a
combined dev-loss/dev-accuracy early-stopping rule.
"""

from .functional import softmax, log_softmax, relu, xavier_uniform
from .mlp import MLPProbe
from .lstm import CharLSTM, CharVocab, encode_batch
from .adam import init_adam_state, adam_step
from .train import TrainConfig, TrainResult, fit, evaluate
from .gradcheck import grad_check
from .checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    "softmax", "log_softmax", "relu", "xavier_uniform",
    "MLPProbe", "CharLSTM", "CharVocab", "encode_batch",
    "init_adam_state", "adam_step",
    "TrainConfig", "TrainResult", "fit", "evaluate",
    "grad_check", "save_checkpoint", "load_checkpoint",
]
