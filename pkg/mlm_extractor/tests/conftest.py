"""Shared fixtures: a tiny fully-offline BERT and the acceptance reporter.

The model is built locally (random weights, hand-written WordPiece vocab)
and saved to disk so the product code path — loading by path — is the one
under test. Nothing here touches the network.
"""

import contextlib
import string
from pathlib import Path

import pytest

from mlm_extractor.config import ExtractorConfig
from mlm_extractor.modeling import Extractor

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
WHOLE_WORDS = ["the", "cat", "dog", "bird", "sun", "moon", "run", "runs"]
PIECES = ["##s", "##ing", "##ed", "##er"]


def _vocab() -> list[str]:
    letters = list(string.ascii_lowercase)
    return (SPECIALS + letters + [f"##{c}" for c in letters]
            + WHOLE_WORDS + PIECES)


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory) -> Path:
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    directory = tmp_path_factory.mktemp("tinybert")
    vocab_file = directory / "vocab.txt"
    vocab_file.write_text("\n".join(_vocab()) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(str(vocab_file), do_lower_case=True)
    tokenizer.save_pretrained(directory)

    torch.manual_seed(1234)
    config = BertConfig(vocab_size=len(_vocab()), hidden_size=32,
                        num_hidden_layers=3, num_attention_heads=4,
                        intermediate_size=64, max_position_embeddings=128)
    BertModel(config).save_pretrained(directory)
    return directory


@pytest.fixture(scope="session")
def config(model_dir) -> ExtractorConfig:
    return ExtractorConfig(model_id="tiny", model_path=str(model_dir))


@pytest.fixture(scope="session")
def extractor(config) -> Extractor:
    return Extractor(config)


@pytest.fixture(scope="session")
def tokenizer(extractor):
    return extractor.tokenizer


# -- acceptance reporting ----------------------------------------------------

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@contextlib.contextmanager
def criterion(name: str):
    """Record PASS/FAIL for one shipping criterion; failures re-raise."""
    try:
        yield
    except BaseException as exc:
        detail = str(exc).strip().splitlines()
        _ACCEPTANCE.append((name, False, detail[0] if detail else ""))
        raise
    _ACCEPTANCE.append((name, True, ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        status = "PASS" if ok else "FAIL"
        suffix = f"  <- {detail}" if detail else ""
        terminalreporter.write_line(f"[ACCEPTANCE] {status} {name}{suffix}")
