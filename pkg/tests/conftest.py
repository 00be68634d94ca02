"""Shared fixtures and the acceptance-line reporter.

The BLAS thread pins must run before numpy is first imported anywhere in
the process: single-threaded reductions keep float sums order-stable, which
the golden-file comparison depends on.
"""

import os

for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

from contextlib import contextmanager
from pathlib import Path

import pytest

from morphoprobe.cli import _parse_treebank_dir
from morphoprobe.conllu import merge_treebanks

FIXTURES = Path(__file__).parent / "fixtures"

# (criterion name, passed, failure detail), in execution order.
_ACCEPTANCE: list[tuple[str, bool, str]] = []


@contextmanager
def criterion(name: str):
    """Record one acceptance criterion outcome for the terminal summary.

    Exceptions (assertion failures included) propagate so pytest still
    reports the owning test as failed; the summary line is the readable
    per-criterion verdict.
    """
    try:
        yield
    except BaseException as exc:
        detail = str(exc).strip().splitlines()
        _ACCEPTANCE.append((name, False, detail[0] if detail else
                            type(exc).__name__))
        raise
    else:
        _ACCEPTANCE.append((name, True, ""))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        line = f"[ACCEPTANCE] {'PASS' if ok else 'FAIL'} {name}"
        if not ok and detail:
            line += f"  <- {detail}"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def gen_corpus():
    """The bundled generated fixture corpus (fx, 600/150/150 sentences)."""
    return merge_treebanks([_parse_treebank_dir(FIXTURES / "gen", "fx")])


@pytest.fixture(scope="session")
def mini_corpus():
    return merge_treebanks([_parse_treebank_dir(FIXTURES / "mini", "fx")])
