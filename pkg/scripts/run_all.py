#!/usr/bin/env python3
"""Run every example config in scripts/configs and collect the outputs.

Usage: python3 scripts/run_all.py [outdir]
"""

import sys
from pathlib import Path

from specproj.cli import main

CONFIG_DIR = Path(__file__).parent / "configs"


def run_all(out_root: Path) -> int:
    worst = 0
    for cfg in sorted(CONFIG_DIR.glob("*.cfg")):
        kind = cfg.stem
        out_dir = out_root / kind
        print(f"== {kind}: {cfg.name} -> {out_dir}")
        code = main([kind, "--config", str(cfg), "--out", str(out_dir)])
        if code != 0:
            print(f"   exited with status {code}", file=sys.stderr)
            worst = max(worst, code)
        else:
            for produced in sorted(out_dir.iterdir()):
                print(f"   wrote {produced.name}")
    return worst


if __name__ == "__main__":
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("runs")
    sys.exit(run_all(root))
