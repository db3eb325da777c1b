"""
Run folders for the williamson-copulas CLI.

Every invocation that writes artifacts gets a numbered folder under
out/runs/ with a manifest.yaml recording what was run, on which measure
and with which seed.
"""

import hashlib
import subprocess
import threading
from datetime import datetime, timezone
from pathlib import Path

import yaml

from scripts.measure_model import WilliamsonMeasure
from scripts.spec_io import canonical_json

# Module-level lock for thread-safe manifest updates
_manifest_lock = threading.Lock()

__all__ = [
    'OUT_DIR',
    'runs_dir',
    'get_latest_run',
    'get_run_path',
    'compute_measure_hash',
    'read_manifest',
    'write_manifest',
    'get_git_commit',
    'create_new_run',
    'update_manifest_output',
    'update_manifest_outcome',
]

OUT_DIR = Path('out')


def runs_dir(out_dir: Path = OUT_DIR) -> Path:
    return Path(out_dir) / 'runs'


def get_latest_run(out_dir: Path = OUT_DIR) -> int:
    """Highest two-digit run number under out/runs/, or 0 when there are none."""
    root = runs_dir(out_dir)
    if not root.exists():
        return 0
    latest = 0
    for path in root.iterdir():
        if path.is_dir() and path.name.isdigit() and len(path.name) == 2:
            latest = max(latest, int(path.name))
    return latest


def get_run_path(run: int, out_dir: Path = OUT_DIR) -> Path:
    return runs_dir(out_dir) / f'{run:02d}'


def compute_measure_hash(measure: WilliamsonMeasure, seed: int | None = None) -> str:
    """First 5 hex chars of SHA-256 over the canonical measure spec and the seed.

    Different seeds give different hashes, so two runs on the same measure
    only share a hash when their random draws coincide too.
    """
    content = canonical_json(measure)
    if seed is not None:
        content = f"{content}|seed={seed}"
    return hashlib.sha256(content.encode()).hexdigest()[:5]


def get_git_commit() -> str:
    """Current git commit hash (short form, 7 chars), or 'unknown' outside a checkout."""
    try:
        result = subprocess.run(
            ['git', 'rev-parse', '--short=7', 'HEAD'],
            capture_output=True,
            text=True,
            check=True
        )
        return result.stdout.strip()
    except (subprocess.CalledProcessError, FileNotFoundError):
        return 'unknown'


def read_manifest(run: int, out_dir: Path = OUT_DIR) -> dict | None:
    manifest_path = get_run_path(run, out_dir) / 'manifest.yaml'
    if not manifest_path.exists():
        return None
    with open(manifest_path) as f:
        return yaml.safe_load(f)


def write_manifest(run: int, data: dict, out_dir: Path = OUT_DIR) -> None:
    """Write or replace the manifest, creating the run folder if needed."""
    run_path = get_run_path(run, out_dir)
    run_path.mkdir(parents=True, exist_ok=True)
    with open(run_path / 'manifest.yaml', 'w') as f:
        yaml.dump(data, f, default_flow_style=False, sort_keys=False)


def create_new_run(subcommand: str, measure_hash: str | None, seed: int, n: int, grid: int,
                   out_dir: Path = OUT_DIR) -> int:
    """Allocate the next run folder and write its initial manifest."""
    with _manifest_lock:
        run = get_latest_run(out_dir) + 1
        manifest = {
            'run': run,
            'created': datetime.now(timezone.utc).isoformat(),
            'commit': get_git_commit(),
            'subcommand': subcommand,
            'measure_hash': measure_hash,
            'seed': seed,
            'n': n,
            'grid': grid,
            'outputs': [],
            'passed': None,
        }
        write_manifest(run, manifest, out_dir)
    return run


def _update(run: int, out_dir: Path, change) -> None:
    with _manifest_lock:
        manifest = read_manifest(run, out_dir)
        if manifest is None:
            raise ValueError(f"No manifest found for run {run}")
        change(manifest)
        write_manifest(run, manifest, out_dir)


def update_manifest_output(run: int, filename: str, out_dir: Path = OUT_DIR) -> None:
    """Record an artifact file if not already listed (thread-safe)."""
    def add(manifest: dict) -> None:
        if filename not in manifest['outputs']:
            manifest['outputs'].append(filename)
    _update(run, out_dir, add)


def update_manifest_outcome(run: int, passed: bool, out_dir: Path = OUT_DIR) -> None:
    def mark(manifest: dict) -> None:
        manifest['passed'] = passed
    _update(run, out_dir, mark)
