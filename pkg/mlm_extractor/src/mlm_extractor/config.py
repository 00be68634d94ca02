from __future__ import annotations

from dataclasses import dataclass

from .errors import ExtractorError

MODES = ("pretrained", "random_layers", "fully_random")


@dataclass(frozen=True)
class ExtractorConfig:
    """What to run and under which identity.

    model_id is the identity stamped into archives and HTTP responses (it
    is what request hashes bind to); model_path is where the weights and
    tokenizer actually live and defaults to model_id. Masking policy is
    fixed: a masked word always becomes exactly one mask token.

    random_* modes reinitialize weights from reinit_seed, which is
    recorded in archive metadata so a control run can be reproduced.
    """
    model_id: str
    model_path: str = ""
    mode: str = "pretrained"
    reinit_seed: int = 0
    device: str = "cpu"
    batch_size: int = 16

    def __post_init__(self):
        if not self.model_id:
            raise ExtractorError("model_id must be nonempty")
        if self.mode not in MODES:
            raise ExtractorError(
                f"mode must be one of {MODES}, got {self.mode!r}")
        if self.batch_size < 1:
            raise ExtractorError("batch_size must be >= 1")
        if not self.model_path:
            object.__setattr__(self, "model_path", self.model_id)
