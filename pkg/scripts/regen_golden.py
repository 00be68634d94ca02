#!/usr/bin/env python3
"""Regenerate the end-to-end golden outputs under tests/golden/.

Run from the repository root after any intentional change to the pipeline:

    python3 scripts/regen_golden.py

The goldens are byte-compared by the acceptance suite, so regenerate them
on the same BLAS/thread settings the tests pin (the script sets them here
before numpy loads).
"""

import os
import shutil
import sys
from pathlib import Path

for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ[var] = "1"

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from e2e_steps import run_pipeline  # noqa: E402


def main() -> None:
    golden = ROOT / "tests" / "golden"
    if golden.exists():
        shutil.rmtree(golden)
    run_pipeline(golden)
    # journals carry wall-clock timestamps and are excluded from comparison
    for journal in golden.rglob("journal.jsonl"):
        journal.unlink()
    # the run configs embed absolute paths and are not comparison inputs
    for name in ("config.json", "config_chlstm.json"):
        (golden / name).unlink(missing_ok=True)
    n = sum(1 for p in golden.rglob("*") if p.is_file())
    print(f"wrote {n} golden files under {golden}")


if __name__ == "__main__":
    main()
