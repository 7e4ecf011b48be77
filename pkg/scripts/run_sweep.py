#!/usr/bin/env python3
"""Run the thickness sweep on the reference cantilever config.

Writes convergence.csv, identities.csv, elastica.csv, and manifest.csv to
the output directory (default out/sweep).
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
        args += ["--out", "out/sweep"]
    sys.exit(main(["converge", *args]))
