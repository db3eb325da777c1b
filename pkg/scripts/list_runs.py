#!/usr/bin/env python3
"""List recorded CLI runs with nice formatting.

Usage:
    uv run scripts/list_runs.py
"""

import os
import sys
from pathlib import Path

# Add parent directory to path so we can import from scripts package
sys.path.insert(0, str(Path(__file__).parent.parent))

from dotenv import load_dotenv

from scripts.versioning import OUT_DIR, read_manifest, runs_dir

# ANSI colors
CYAN = '\033[36m'
YELLOW = '\033[33m'
GREEN = '\033[32m'
RED = '\033[31m'
DIM = '\033[2m'
RESET = '\033[0m'

SUBCOMMAND_WIDTH = 12


def outcome_label(passed) -> str:
    if passed is None:
        return f"{DIM}-{RESET}"
    return f"{GREEN}pass{RESET}" if passed else f"{RED}fail{RESET}"


def main():
    load_dotenv()
    out_dir = Path(os.environ.get('WILLIAMSON_OUT_DIR', OUT_DIR))
    root = runs_dir(out_dir)
    runs = sorted(
        [p for p in root.iterdir() if p.is_dir() and p.name.isdigit()] if root.exists() else [],
        key=lambda p: int(p.name)
    )
    if not runs:
        print("No runs found.")
        return

    for run_path in runs:
        run = int(run_path.name)
        manifest = read_manifest(run, out_dir)
        if manifest is None:
            continue
        subcommand = (manifest.get('subcommand') or '').ljust(SUBCOMMAND_WIDTH)
        measure_hash = manifest.get('measure_hash') or '-----'
        outputs = len(manifest.get('outputs', []))
        print(f"{CYAN}{run:02d}{RESET}  {YELLOW}{subcommand}{RESET}  {measure_hash}  "
              f"{outputs:2d} {DIM}files{RESET}  {outcome_label(manifest.get('passed'))}")


if __name__ == '__main__':
    main()
