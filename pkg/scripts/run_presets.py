#!/usr/bin/env python3
"""Run every shipped preset and every config under configs/ through the CLI."""
import sys
from pathlib import Path

from mqbqr.cli import main
from mqbqr.config import preset_names, preset_path

root = Path(__file__).resolve().parent.parent
targets = [str(preset_path(n)) for n in preset_names()] + sorted(map(str, (root / "configs").glob("*.json")))
codes = {}
for t in targets:
    print(f"== {Path(t).name}")
    codes[t] = main(["run", t])
print()
for t, c in codes.items():
    print(f"{c}  {Path(t).name}")
# a numerical failure (2) is the expected outcome for the literal-variant config
sys.exit(max((c for t, c in codes.items() if "literal" not in t), default=0))
