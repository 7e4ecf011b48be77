#!/usr/bin/env python3
"""Run the Lipschitz truncation sweep and report the q statistics.

Writes qstats.csv and summary.csv to the output directory (default
out/truncation).
"""

import sys
from pathlib import Path

from striplab.cli import main

ROOT = Path(__file__).resolve().parent.parent


if __name__ == "__main__":
    args = sys.argv[1:]
    if "--config" not in args:
        args += ["--config", str(ROOT / "configs" / "truncation.cfg")]
    if "--out" not in args:
        args += ["--out", "out/truncation"]
    sys.exit(main(["truncate", *args]))
