#!/usr/bin/env python3
"""Run the energy-density hypothesis suite on the configured density.

Writes hypotheses.csv to the output directory (default out/energy) and
exits nonzero if any hypothesis fails.
"""

import sys
from pathlib import Path

from striplab.cli import main

ROOT = Path(__file__).resolve().parent.parent


if __name__ == "__main__":
    args = sys.argv[1:]
    if "--config" not in args:
        args += ["--config", str(ROOT / "configs" / "cantilever.cfg")]
    if "--out" not in args:
        args += ["--out", "out/energy"]
    sys.exit(main(["energy-check", *args]))
